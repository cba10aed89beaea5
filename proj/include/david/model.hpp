#pragma once
// The joint-grained document model: token/entity/query encoders, the joint
// encoder, adaptation heads and task heads, all built on the autodiff tape.

#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "david/document.hpp"
#include "david/l2v.hpp"
#include "david/tape.hpp"

namespace david {

struct EncoderConfig {
  int vocab_size = 2000;
  int hidden_dim = 128;
  int n_layers = 4;
  int n_heads = 4;
  int max_tokens = 256;
  int max_entities = 64;
  double dropout = 0.0;
  uint64_t seed = 0;

  int joint_layers() const { return std::max(1, n_layers / 2); }
  static constexpr int decoder_layers = 2;
  static constexpr int sketch_size = 96;  // page sketch resolution for the visual encoder
  void validate() const;
  nlohmann::json to_json() const;
  static EncoderConfig from_json(const nlohmann::json& j);
  bool operator==(const EncoderConfig&) const = default;
};

struct ModelOptions {
  bool mono_grained = false;                // bypass the joint encoder (token pathway only)
  std::string sit_memory = "query_tokens";  // "query_tokens" | "query_entities"
  nlohmann::json to_json() const;
  static ModelOptions from_json(const nlohmann::json& j);
  bool operator==(const ModelOptions&) const = default;
};

// Corpus-built word vocabulary; id 0 is the unknown word.
struct Vocab {
  std::vector<std::string> words;
  std::unordered_map<std::string, int> index;

  static Vocab build(const std::vector<Document>& docs, int cap);
  static Vocab from_words(std::vector<std::string> words);
  int id(const std::string& raw) const;
  int size() const { return static_cast<int>(words.size()); }
};

// Per-document parameter-free precomputation (rasters, pooled channels).
struct DocContext {
  std::vector<std::array<double, 3>> token_l2v;
  std::vector<std::array<double, 3>> entity_l2v;
  GrayRaster sketch;
  static DocContext build(const Document& doc);
};

// Freeze groups. The infuser freeze step covers E_t, E_e, L2V and E_jg.
namespace groups {
inline const char* token_encoder = "E_t";
inline const char* entity_encoder = "E_e";
inline const char* l2v = "L2V";
inline const char* joint_encoder = "E_jg";
inline const char* sds_head = "sds";
inline const char* sst_decoder = "D_T";
inline const char* sst_head = "sst_head";
inline const char* sit_decoder = "D_E";
inline const char* sit_head = "sit_head";
inline const char* tag_head = "A_t";
inline const char* er_head = "A_e";
std::set<std::string> infuser_freeze_set();
}  // namespace groups

class Model {
 public:
  EncoderConfig cfg;
  ModelOptions opt;
  Vocab vocab;
  LabelSpace gold_space;
  LabelSpace synthetic_space;
  ParamStore params;

  static Model build(const EncoderConfig& cfg, const ModelOptions& opt, Vocab vocab,
                     LabelSpace gold, LabelSpace synthetic);

  // --- base encoders ---
  // word + bbox + position embeddings -> transformer -> + projected L2V
  NodeId encode_tokens_gde(Tape& t, const Document& doc, const DocContext& ctx) const;
  // page-sketch conv features + pooled child tokens, fused, + projected L2V
  NodeId encode_entities(Tape& t, const Document& doc, const DocContext& ctx,
                         NodeId t_gde) const;
  // L2V pooling + shared projection for one box (exposed for tests/tools)
  NodeId pool_l2v(Tape& t, const RasterRGB& raster, const BBox& box) const;

  struct Query {
    NodeId seq = -1;
    NodeId pooled = -1;
  };
  Query encode_query(Tape& t, const std::string& key_text) const;

  // --- joint-grained infuser ---
  std::pair<NodeId, NodeId> joint_encode(Tape& t, NodeId tokens, NodeId entities) const;
  NodeId alignment_scores(Tape& t, NodeId t_joint, NodeId e_joint) const;  // n x m logits

  struct SstOut {
    NodeId states = -1;  // n x hidden
    NodeId logits = -1;  // n x |synthetic|
  };
  SstOut sst_decode(Tape& t, NodeId t_joint, NodeId e_joint) const;

  struct SitOut {
    NodeId states = -1;  // m x hidden
    NodeId scores = -1;  // 1 x m pointer logits
    NodeId dist = -1;    // 1 x m softmax
  };
  SitOut sit_decode(Tape& t, NodeId e_joint, NodeId t_joint, const Query& q) const;

  // --- task heads ---
  NodeId sequence_tag_head(Tape& t, NodeId t_gde, NodeId t_joint, NodeId t_dec) const;
  struct ErOut {
    NodeId scores = -1;
    NodeId dist = -1;
  };
  ErOut entity_retrieval_head(Tape& t, NodeId e_joint, NodeId e_dec, const Query& q) const;

  void set_dropout_rng(Rng* rng) { dropout_rng_ = rng; }

 private:
  void add_encoder_params(Rng& rng, const std::string& prefix, int layers,
                          const std::string& group);
  void add_decoder_params(Rng& rng, const std::string& prefix, const std::string& group);
  NodeId encoder_stack(Tape& t, const std::string& prefix, int layers, NodeId x) const;
  NodeId decoder_stack(Tape& t, const std::string& prefix, NodeId x,
                       std::optional<NodeId> memory) const;
  NodeId mha(Tape& t, const std::string& prefix, NodeId xq, NodeId xkv) const;
  NodeId ffn(Tape& t, const std::string& prefix, NodeId x) const;
  NodeId linear(Tape& t, const std::string& prefix, NodeId x) const;  // prefix.w / prefix.b
  NodeId pointer_scores(Tape& t, const std::string& prefix, NodeId states,
                        NodeId q_pooled) const;
  NodeId maybe_dropout(Tape& t, NodeId x) const;

  Rng* dropout_rng_ = nullptr;
};

// --- adaptation losses ---
NodeId sds_loss(Tape& t, NodeId align_scores, const RelationMatrix& rel);
NodeId sst_loss(Tape& t, NodeId logits, const std::vector<int>& synthetic_labels);
NodeId sit_loss(Tape& t, NodeId pointer_scores, int target_entity);

// argmax helpers; ties resolve to the lowest index
std::vector<int> argmax_rows(const Mat& m);
int argmax_row(const Mat& m, int row = 0);

// closed-form scalar parameter count for a given configuration
size_t expected_param_count(const EncoderConfig& cfg, int vocab_words, int gold_k,
                            int synthetic_k);

}  // namespace david
