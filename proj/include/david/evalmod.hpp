#pragma once
// Metrics (micro-F1, per-category accuracy, ANLS, retrieval accuracy) and the
// three experiment sweeps: guidance ratio, adaptation-set size, label noise.

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "david/document.hpp"
#include "david/workflow.hpp"

namespace david {

// micro-averaged F1 over non-outside positions of two aligned label sequences
double micro_f1(const std::vector<int>& pred, const std::vector<int>& gold, int outside_id = 0);

// 1 - normalized edit distance when similarity clears the threshold, else 0;
// comparison is case-folded
double anls_score(const std::string& pred, const std::string& gold, double threshold = 0.5);

double median(std::vector<double> values);

struct MetricsReport {
  double micro_f1 = 0.0;
  std::map<std::string, double> per_category;  // gold-category accuracy
  double retrieval_accuracy = 0.0;
  double anls = 0.0;
  int n_samples = 0;
  double wall_time_seconds = 0.0;
  std::string config_fingerprint;

  nlohmann::json to_json() const;
};

// Scores a prediction dump; token rows without a gold label are skipped.
MetricsReport evaluate_predictions(const InferenceResult& res, const LabelSpace& gold_space);

MetricsReport evaluate_checkpoint(const std::vector<Document>& d_i, const Checkpoint& ckpt,
                                  const std::string& task_mode);

// mean over documents of 1/#entities: the accuracy of uniform random pointing
double coarse_chance_level(const std::vector<Document>& d_i);

std::string corpus_fingerprint(const std::vector<Document>& docs);
std::string checkpoint_fingerprint(const Checkpoint& ckpt);

struct SweepCell {
  std::string config;  // row label (model arm)
  std::string sweep;
  std::string x;  // column label
  uint64_t seed = 0;
  std::string metric;
  double value = 0.0;
  std::string stage;
  std::string corpus_hash;
  std::string plan_hash;
  double corrupted_fraction = 0.0;
};

struct SweepTable {
  std::string name;
  std::vector<SweepCell> cells;
  std::vector<std::string> row_order;
  std::vector<std::string> col_order;

  // long format: one row per (config, x, seed)
  void write_cells_csv(const std::string& path) const;
  // wide format: rows = configs, cols = x labels, cell = median over seeds
  void write_median_csv(const std::string& path) const;
  double median_of(const std::string& config, const std::string& x) const;
};

struct SweepInputs {
  std::vector<Document> d_n;  // synthetic-annotation pool
  std::vector<Document> d_g;  // gold guidance pool
  std::vector<Document> d_i;  // held-out pool
  LabelSpace gold_space;
  LabelSpace synthetic_space;
  EncoderConfig cfg;
  ModelOptions opt;
  AdaptationPlan plan;
  std::vector<uint64_t> seeds = {1, 2, 3};

  void validate() const;
};

std::vector<double> default_ratio_grid();  // 0.1 .. 1.0 step 0.1

// rows adapted/baseline x cols 0%..100%; the 0% column is zero-shot inference
SweepTable ratio_sweep(const SweepInputs& in, const std::vector<double>& ratios);

// adaptation-set fractions (seeded prefix) plus a no-adaptation control row
SweepTable size_sweep(const SweepInputs& in, const std::vector<double>& fractions,
                      double finetune_ratio = 0.1);

// guidance-label corruption grid; rows = joint model vs token-only baseline
SweepTable robustness_sweep(const SweepInputs& in, const std::vector<double>& lambdas,
                            const std::vector<std::string>& modes);

void write_report_json(const std::string& path, const MetricsReport& report);

}  // namespace david
