#include "david/provider.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>
#include <unordered_map>

#include <httplib.h>
#include <json.hpp>

#include "david/synthgen.hpp"
#include "david/text.hpp"

namespace david {

namespace {

std::string strip_colons(std::string s) {
  std::string out;
  for (char c : s)
    if (c != ':') out += c;
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

std::string trimmed(std::string s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  size_t b = s.find_last_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

}  // namespace

std::vector<InquiryProposal> derive_row_pairs(const Document& doc) {
  std::vector<InquiryProposal> out;
  for (const auto& e : doc.entities) {
    if (e.category == "header") {
      if (e.text.empty()) continue;
      out.push_back({"title", e.text});
      out.push_back({"store name", e.text});
      continue;
    }
    if (e.category == "summary") {
      std::string kw, amount;
      for (const auto& w : split_whitespace(e.text)) {
        if (looks_numeric(w))
          amount = w;  // last numeric word wins
        else {
          if (!kw.empty()) kw += ' ';
          kw += to_lower(w);
        }
      }
      if (!kw.empty() && !amount.empty()) out.push_back({kw, amount});
      continue;
    }
    if (e.category == "value") {
      if (e.text.empty()) continue;
      // nearest key-region entity to the left on the same text row
      const Entity* key = nullptr;
      for (const auto& c : doc.entities) {
        if (c.category != "key" || c.text.empty()) continue;
        if (std::fabs(c.bbox.cy() - e.bbox.cy()) > 24.0) continue;
        if (c.bbox.x0 >= e.bbox.x0) continue;
        if (!key || c.bbox.x1 > key->bbox.x1) key = &c;
      }
      if (!key) continue;
      std::string k = strip_colons(key->text);
      if (!k.empty()) out.push_back({k, e.text});
    }
  }
  return out;
}

std::vector<int> RuleBasedProvider::tag_tokens(const Document& doc,
                                               const LabelSpace& synthetic_space) {
  auto label_id = [&](const char* name) {
    int i = synthetic_space.index_of(name);
    return i >= 0 ? i : 0;
  };
  std::unordered_map<int, const std::string*> cat_by_entity;
  for (const auto& e : doc.entities) cat_by_entity[e.id] = &e.category;

  std::vector<int> out;
  out.reserve(doc.tokens.size());
  for (const auto& t : doc.tokens) {
    std::string cat;
    if (t.parent_entity) {
      auto it = cat_by_entity.find(*t.parent_entity);
      if (it != cat_by_entity.end()) cat = *it->second;
    }
    int lab;
    if (looks_date(t.text))
      lab = label_id("date");
    else if (looks_numeric(t.text))
      lab = label_id("amount");
    else if (cat == "header")
      lab = label_id("header_text");
    else if ((!t.text.empty() && t.text.back() == ':') || cat == "key" || cat == "summary")
      lab = label_id("key_text");
    else if (starts_upper(t.text))
      lab = label_id("name");
    else
      lab = label_id("other");
    out.push_back(lab);
  }
  return out;
}

std::vector<InquiryProposal> RuleBasedProvider::propose_inquiries(const Document& doc,
                                                                  int max_pairs) {
  auto pairs = derive_row_pairs(doc);
  if (static_cast<int>(pairs.size()) > max_pairs) {
    Rng rng(derive_seed(seed_, doc.id));
    rng.shuffle(pairs);
    pairs.resize(static_cast<size_t>(max_pairs));
  }
  return pairs;
}

RemoteProviderConfig remote_config_from_env() {
  RemoteProviderConfig c;
  const char* url = std::getenv("DAVID_LLM_URL");
  require(url != nullptr && *url != '\0', Errc::provider_failure,
          "DAVID_LLM_URL is not set; remote annotation needs an endpoint");
  c.endpoint_url = url;
  if (const char* key = std::getenv("DAVID_LLM_KEY")) c.api_key = key;
  return c;
}

RemoteProvider::RemoteProvider(RemoteProviderConfig cfg) : cfg_(std::move(cfg)) {
  require(cfg_.endpoint_url.rfind("http://", 0) == 0, Errc::provider_failure,
          "remote endpoint must be a plain http URL");
  require(cfg_.max_in_flight >= 1, Errc::invalid_argument, "max_in_flight must be at least 1");
  if (!cfg_.audit_path.empty()) {
    std::ofstream f(cfg_.audit_path, std::ios::app);
    require(f.good(), Errc::io_failure, "cannot open audit log " + cfg_.audit_path);
  }
}

void RemoteProvider::audit(const std::string& line) {
  if (cfg_.audit_path.empty()) return;
  std::lock_guard<std::mutex> lock(audit_mu_);
  std::ofstream f(cfg_.audit_path, std::ios::app);
  if (f.good()) f << line << '\n';
}

std::string RemoteProvider::complete(const std::string& prompt) {
  size_t slash = cfg_.endpoint_url.find('/', 7);
  std::string base =
      slash == std::string::npos ? cfg_.endpoint_url : cfg_.endpoint_url.substr(0, slash);
  std::string path = slash == std::string::npos ? "/" : cfg_.endpoint_url.substr(slash);

  nlohmann::json body = {
      {"model", cfg_.model}, {"prompt", prompt}, {"max_tokens", 512}, {"temperature", 0}};
  httplib::Headers headers;
  if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(100 * (1 << (attempt - 1))));
    httplib::Client cli(base);
    cli.set_connection_timeout(cfg_.timeout_sec, 0);
    cli.set_read_timeout(cfg_.timeout_sec, 0);
    cli.set_write_timeout(cfg_.timeout_sec, 0);
    auto res = cli.Post(path, headers, body.dump(), "application/json");
    nlohmann::json log = {
        {"time_ms", std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::system_clock::now().time_since_epoch())
                        .count()},
        {"url", cfg_.endpoint_url},
        {"attempt", attempt},
        {"request", body}};
    if (!res) {
      log["error"] = "connection failed";
      audit(log.dump());
      last_error = "connection failed";
      continue;
    }
    log["status"] = res->status;
    log["response"] = res->body;
    audit(log.dump());
    if (res->status == 200) {
      nlohmann::json j = nlohmann::json::parse(res->body, nullptr, false);
      require(!j.is_discarded(), Errc::provider_failure, "remote returned non-JSON body");
      if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
        const auto& c0 = j["choices"][0];
        if (c0.contains("text") && c0["text"].is_string()) return c0["text"].get<std::string>();
        if (c0.contains("message") && c0["message"].contains("content"))
          return c0["message"]["content"].get<std::string>();
      }
      if (j.contains("text") && j["text"].is_string()) return j["text"].get<std::string>();
      fail(Errc::provider_failure, "remote response has no completion text");
    }
    last_error = "status " + std::to_string(res->status);
    if (res->status != 429 && res->status < 500)
      fail(Errc::provider_failure, "remote rejected request: " + last_error);
  }
  fail(Errc::provider_failure,
       "remote failed after " + std::to_string(cfg_.max_retries + 1) + " attempts: " + last_error);
}

namespace {

// completion text -> content after the final "Value:" marker, one line
std::string value_after_marker(const std::string& text) {
  size_t p = text.rfind("Value:");
  require(p != std::string::npos, Errc::provider_failure, "remote response missing Value: marker");
  std::string rest = text.substr(p + 6);
  size_t nl = rest.find('\n');
  if (nl != std::string::npos) rest = rest.substr(0, nl);
  return trimmed(rest);
}

}  // namespace

std::vector<int> RemoteProvider::tag_tokens(const Document& doc,
                                            const LabelSpace& synthetic_space) {
  if (doc.tokens.empty()) return {};
  std::string ctx;
  for (const auto& t : doc.tokens) {
    if (!ctx.empty()) ctx += ' ';
    ctx += t.text;
  }
  std::string cats;
  for (const auto& c : synthetic_space.categories) {
    if (!cats.empty()) cats += ", ";
    cats += c;
  }
  std::string prompt = "Context: " + ctx +
                       "\nAbove is the context of the target form document, please extract the "
                       "category of each of the " +
                       std::to_string(doc.tokens.size()) + " tokens from [" + cats +
                       "], the output format strictly follow: Value: xxx";
  auto names = split_whitespace(value_after_marker(complete(prompt)));
  require(names.size() == doc.tokens.size(), Errc::provider_failure,
          "remote returned " + std::to_string(names.size()) + " tags for " +
              std::to_string(doc.tokens.size()) + " tokens");
  std::vector<int> out;
  out.reserve(names.size());
  for (const auto& n : names) {
    int id = synthetic_space.index_of(n);
    require(id >= 0, Errc::provider_failure, "remote used unknown category " + n);
    out.push_back(id);
  }
  return out;
}

std::vector<InquiryProposal> RemoteProvider::propose_inquiries(const Document& doc,
                                                               int max_pairs) {
  std::vector<std::string> keys;
  for (const auto& p : derive_row_pairs(doc)) {
    if (std::find(keys.begin(), keys.end(), p.key_text) == keys.end())
      keys.push_back(p.key_text);
    if (static_cast<int>(keys.size()) >= max_pairs) break;
  }
  std::string ctx;
  for (const auto& e : doc.entities) {
    if (e.text.empty()) continue;
    if (!ctx.empty()) ctx += " | ";
    ctx += e.text;
  }
  std::vector<InquiryProposal> out;
  for (const auto& k : keys) {
    std::string prompt = "Context: " + ctx +
                         "\nAbove is the context of the target form document, please extract the " +
                         k + ", the output format strictly follow: Value: xxx";
    std::string answer = value_after_marker(complete(prompt));
    if (!answer.empty()) out.push_back({k, answer});
  }
  return out;
}

AnnotateReport annotate_documents(std::vector<Document>& docs, AnnotationProvider& provider,
                                  const LabelSpace& synthetic_space,
                                  const AnnotateOptions& opts) {
  synthetic_space.validate();
  require(opts.max_pairs >= 1, Errc::invalid_argument, "max_pairs must be at least 1");
  std::vector<uint8_t> ok(docs.size(), 1);
  std::vector<std::string> reasons(docs.size());
  std::atomic<size_t> next{0};

  auto work = [&]() {
    for (size_t i; (i = next.fetch_add(1)) < docs.size();) {
      try {
        Document d = docs[i];
        if (opts.want_tags && provider.supports_tags())
          d = generate_synthetic_tags(d, provider, synthetic_space);
        if (opts.want_inquiries && provider.supports_inquiries() && !d.entities.empty())
          d = generate_synthetic_inquiries(d, provider, opts.max_pairs);
        docs[i] = std::move(d);
      } catch (const std::exception& e) {
        ok[i] = 0;
        reasons[i] = e.what();
      }
    }
  };

  int nthreads = std::max(1, std::min<int>(provider.max_in_flight(),
                                           static_cast<int>(docs.size())));
  if (nthreads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(nthreads));
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  AnnotateReport rep;
  std::vector<Document> kept;
  kept.reserve(docs.size());
  for (size_t i = 0; i < docs.size(); ++i) {
    if (ok[i]) {
      rep.n_annotated += 1;
      rep.n_pairs += static_cast<int>(docs[i].qa_pairs.size());
      kept.push_back(std::move(docs[i]));
    } else {
      rep.failures.push_back({docs[i].id, reasons[i]});
    }
  }
  docs = std::move(kept);
  return rep;
}

std::unique_ptr<AnnotationProvider> make_provider(const std::string& kind, uint64_t seed) {
  if (kind == "rule") return std::make_unique<RuleBasedProvider>(seed);
  if (kind == "remote") return std::make_unique<RemoteProvider>(remote_config_from_env());
  fail(Errc::invalid_argument, "unknown provider kind " + kind);
}

}  // namespace david
