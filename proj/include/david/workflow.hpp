#pragma once
// Staged training workflow: domain adaptation on D_n (alignment -> freeze ->
// tag/pointer distillation), fine-tuning on D_g, inference on D_i; owns the
// optimizer, freezing, and checkpoint serialization.

#include <string>
#include <vector>

#include <json.hpp>

#include "david/model.hpp"

namespace david {

struct AdaptationPlan {
  int sds_epochs = 1;
  int sst_epochs = 1;
  int sit_epochs = 1;
  bool freeze_after_sds = true;
  double learning_rate = 2e-4;
  int batch_size = 2;
  uint64_t seed = 0;
  std::string task_mode = "both";  // "fine" | "coarse" | "both"
  int finetune_epochs = 8;
  bool finetune_update_decoders = true;

  void validate() const;
  nlohmann::json to_json() const;
  static AdaptationPlan from_json(const nlohmann::json& j);
  std::string hash() const;  // hex of the canonical JSON form
  bool operator==(const AdaptationPlan&) const = default;
};

// F_0 untrained, F_t fine-tuned only, F_n adapted only, F_nt adapted then
// fine-tuned.
enum class Stage { f0, ft, fn, fnt };
std::string stage_name(Stage s);
Stage stage_from_name(const std::string& s);

struct Checkpoint {
  Model model;
  Stage stage = Stage::f0;
  std::string plan_hash;
  nlohmann::json metrics = nlohmann::json::object();
};

// binary layout: magic, u32 header length, JSON header, float32 LE payload
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Adam over the unfrozen parameter groups.
class Adam {
 public:
  Adam(ParamStore& params, double lr);
  void step();  // consumes current grads; caller zeroes them afterwards

 private:
  ParamStore& params_;
  double lr_;
  long long t_ = 0;
  std::vector<Mat> m_, v_;
};

struct LossRow {
  int step = 0;
  std::string stage;
  double loss = 0.0;
};

struct TrainLog {
  std::vector<LossRow> rows;
};

void write_loss_csv(const std::string& path, const TrainLog& log, bool append = false);

// Fresh model wrapped as an untrained checkpoint; vocabulary built from docs.
Checkpoint init_checkpoint(const EncoderConfig& cfg, const ModelOptions& opt,
                           const std::vector<Document>& vocab_docs, const LabelSpace& gold_space,
                           const LabelSpace& synthetic_space);

// Adaptation stages in order: alignment training, encoder freeze, then token
// tagging and/or entity pointing on the synthetic annotations.
Checkpoint run_adaptation(const std::vector<Document>& d_n, const Checkpoint& start,
                          const AdaptationPlan& plan, TrainLog* log = nullptr);

// Trains task heads (and optionally the decoders) on the first
// ceil(ratio * |d_g|) documents of a seeded shuffle. Encoders stay frozen so
// the adapted/unadapted comparison isolates what adaptation contributed.
Checkpoint run_finetune(const std::vector<Document>& d_g, const Checkpoint& start,
                        const AdaptationPlan& plan, double guidance_ratio,
                        TrainLog* log = nullptr);

struct TokenPrediction {
  std::string doc_id;
  int token_id = 0;
  int gold_label = 0;
  int pred_label = 0;
};

struct QueryPrediction {
  std::string doc_id;
  int query_index = 0;
  std::string key_text;
  int gold_entity = -1;
  int pred_entity = -1;
  std::string gold_text;
  std::string pred_text;
};

struct InferenceResult {
  std::vector<TokenPrediction> tokens;    // sequence labeling
  std::vector<QueryPrediction> queries;   // entity retrieval
};

// task_mode "fine" | "coarse" | "both". Retrieval on a checkpoint whose
// pointer head was never fine-tuned (F_0 / F_n) goes through the adaptation
// pointer pathway; fine-tuned checkpoints use the retrieval head.
InferenceResult run_inference(const std::vector<Document>& d_i, const Checkpoint& ckpt,
                              const std::string& task_mode);

void write_predictions_jsonl(const InferenceResult& res, const std::string& path);
InferenceResult read_predictions_jsonl(const std::string& path);

}  // namespace david
