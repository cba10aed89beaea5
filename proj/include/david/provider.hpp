#pragma once
// Annotation providers: a deterministic rule-based oracle (default) and a
// remote chat-completion adapter, plus batch application over a document set
// with bounded concurrency.

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "david/document.hpp"

namespace david {

struct InquiryProposal {
  std::string key_text;
  std::string answer_text;
};

class AnnotationProvider {
 public:
  virtual ~AnnotationProvider() = default;
  virtual std::string name() const = 0;
  virtual bool supports_tags() const { return true; }
  virtual bool supports_inquiries() const { return true; }
  virtual int max_in_flight() const { return 1; }
  // one synthetic-space category id per token, in token order
  virtual std::vector<int> tag_tokens(const Document& doc, const LabelSpace& synthetic_space) = 0;
  virtual std::vector<InquiryProposal> propose_inquiries(const Document& doc, int max_pairs) = 0;
};

// Derives tags from entity categories plus character-class heuristics, and
// key/answer pairs from row layout. Bit-reproducible for fixed seed.
class RuleBasedProvider : public AnnotationProvider {
 public:
  explicit RuleBasedProvider(uint64_t seed = 0) : seed_(seed) {}
  std::string name() const override { return "rule"; }
  std::vector<int> tag_tokens(const Document& doc, const LabelSpace& synthetic_space) override;
  std::vector<InquiryProposal> propose_inquiries(const Document& doc, int max_pairs) override;

 private:
  uint64_t seed_;
};

struct RemoteProviderConfig {
  std::string endpoint_url;  // full completion endpoint, e.g. http://host:8080/v1/complete
  std::string api_key;
  std::string model = "annotator";
  int max_in_flight = 4;
  int max_retries = 3;
  int timeout_sec = 30;
  std::string audit_path;  // JSONL request/response log; empty disables
};

// reads DAVID_LLM_URL and DAVID_LLM_KEY
RemoteProviderConfig remote_config_from_env();

class RemoteProvider : public AnnotationProvider {
 public:
  explicit RemoteProvider(RemoteProviderConfig cfg);
  std::string name() const override { return "remote"; }
  int max_in_flight() const override { return cfg_.max_in_flight; }
  std::vector<int> tag_tokens(const Document& doc, const LabelSpace& synthetic_space) override;
  std::vector<InquiryProposal> propose_inquiries(const Document& doc, int max_pairs) override;

 private:
  std::string complete(const std::string& prompt);
  void audit(const std::string& line);

  RemoteProviderConfig cfg_;
  std::mutex audit_mu_;
};

// layout-derived key candidates shared by both providers
std::vector<InquiryProposal> derive_row_pairs(const Document& doc);

struct AnnotateOptions {
  int max_pairs = 8;
  bool want_tags = true;
  bool want_inquiries = true;
};

struct AnnotateFailure {
  std::string doc_id;
  std::string reason;
};

struct AnnotateReport {
  int n_annotated = 0;
  int n_pairs = 0;
  std::vector<AnnotateFailure> failures;  // failed docs are removed from the set
};

// Parallel map over documents bounded by provider.max_in_flight(). Documents
// whose annotation fails are dropped from `docs` and listed in the report.
AnnotateReport annotate_documents(std::vector<Document>& docs, AnnotationProvider& provider,
                                  const LabelSpace& synthetic_space, const AnnotateOptions& opts);

// kind: "rule" | "remote" (remote configured from environment)
std::unique_ptr<AnnotationProvider> make_provider(const std::string& kind, uint64_t seed);

}  // namespace david
