#include "david/evalmod.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "david/corpus_io.hpp"
#include "david/synthgen.hpp"
#include "david/text.hpp"

namespace david {

double micro_f1(const std::vector<int>& pred, const std::vector<int>& gold, int outside_id) {
  require(pred.size() == gold.size(), Errc::invalid_argument,
          "prediction/gold length mismatch");
  long long tp = 0, fp = 0, fn = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    bool p_in = pred[i] != outside_id;
    bool g_in = gold[i] != outside_id;
    if (p_in && pred[i] == gold[i]) ++tp;
    else {
      if (p_in) ++fp;
      if (g_in) ++fn;
    }
  }
  if (tp == 0) return (fp == 0 && fn == 0) ? 1.0 : 0.0;
  double p = static_cast<double>(tp) / static_cast<double>(tp + fp);
  double r = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return 2.0 * p * r / (p + r);
}

double anls_score(const std::string& pred, const std::string& gold, double threshold) {
  std::string p = to_lower(pred), g = to_lower(gold);
  size_t denom = std::max(p.size(), g.size());
  if (denom == 0) return 1.0;
  double nls = 1.0 - static_cast<double>(levenshtein(p, g)) / static_cast<double>(denom);
  return nls >= threshold ? nls : 0.0;
}

double median(std::vector<double> values) {
  require(!values.empty(), Errc::invalid_argument, "median of an empty set");
  std::sort(values.begin(), values.end());
  size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

nlohmann::json MetricsReport::to_json() const {
  return {{"micro_f1", micro_f1},
          {"per_category", per_category},
          {"retrieval_accuracy", retrieval_accuracy},
          {"anls", anls},
          {"n_samples", n_samples},
          {"wall_time_seconds", wall_time_seconds},
          {"config_fingerprint", config_fingerprint}};
}

MetricsReport evaluate_predictions(const InferenceResult& res, const LabelSpace& gold_space) {
  MetricsReport rep;
  std::vector<int> pred, gold;
  std::map<std::string, std::pair<long long, long long>> cat;  // correct, total
  for (const auto& t : res.tokens) {
    if (t.gold_label < 0) continue;
    require(t.gold_label < static_cast<int>(gold_space.size()), Errc::index_out_of_range,
            "gold label outside the label space in " + t.doc_id);
    pred.push_back(t.pred_label);
    gold.push_back(t.gold_label);
    auto& c = cat[gold_space.at(t.gold_label)];
    if (t.pred_label == t.gold_label) ++c.first;
    ++c.second;
  }
  if (!gold.empty()) {
    rep.micro_f1 = david::micro_f1(pred, gold, 0);
    for (const auto& [name, counts] : cat)
      rep.per_category[name] =
          static_cast<double>(counts.first) / static_cast<double>(counts.second);
  }
  long long hits = 0, n_q = 0;
  double anls_sum = 0.0;
  for (const auto& q : res.queries) {
    if (q.gold_entity < 0) continue;
    ++n_q;
    if (q.pred_entity == q.gold_entity) ++hits;
    anls_sum += anls_score(q.pred_text, q.gold_text);
  }
  if (n_q > 0) {
    rep.retrieval_accuracy = static_cast<double>(hits) / static_cast<double>(n_q);
    rep.anls = anls_sum / static_cast<double>(n_q);
  }
  rep.n_samples = static_cast<int>(gold.size() + n_q);
  return rep;
}

std::string checkpoint_fingerprint(const Checkpoint& ckpt) {
  return hex64(fnv1a64(ckpt.model.cfg.to_json().dump() + ckpt.model.opt.to_json().dump() +
                       stage_name(ckpt.stage) + ckpt.plan_hash));
}

MetricsReport evaluate_checkpoint(const std::vector<Document>& d_i, const Checkpoint& ckpt,
                                  const std::string& task_mode) {
  auto t0 = std::chrono::steady_clock::now();
  InferenceResult res = run_inference(d_i, ckpt, task_mode);
  MetricsReport rep = evaluate_predictions(res, ckpt.model.gold_space);
  rep.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep.config_fingerprint = checkpoint_fingerprint(ckpt);
  return rep;
}

double coarse_chance_level(const std::vector<Document>& d_i) {
  double sum = 0.0;
  long long n = 0;
  for (const auto& d : d_i) {
    if (d.entities.empty()) continue;
    sum += 1.0 / static_cast<double>(d.entities.size());
    ++n;
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

std::string corpus_fingerprint(const std::vector<Document>& docs) {
  uint64_t h = 1469598103934665603ull;  // FNV offset basis
  for (const auto& d : docs) {
    std::string s = document_to_json(d).dump();
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
  }
  return hex64(h);
}

// ------------------------------------------------------------------ tables

namespace {

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

void SweepTable::write_cells_csv(const std::string& path) const {
  std::string out =
      "config,sweep,x,seed,metric,value,stage,corpus_hash,plan_hash,corrupted_fraction\n";
  for (const auto& c : cells) {
    out += csv_quote(c.config) + ',' + csv_quote(c.sweep) + ',' + csv_quote(c.x) + ',' +
           std::to_string(c.seed) + ',' + csv_quote(c.metric) + ',' + fmt_double(c.value) + ',' +
           c.stage + ',' + c.corpus_hash + ',' + c.plan_hash + ',' +
           fmt_double(c.corrupted_fraction) + '\n';
  }
  write_file(path, out);
}

double SweepTable::median_of(const std::string& config, const std::string& x) const {
  std::vector<double> vals;
  for (const auto& c : cells)
    if (c.config == config && c.x == x) vals.push_back(c.value);
  require(!vals.empty(), Errc::invalid_argument,
          "sweep has no cell (" + config + ", " + x + ")");
  return median(std::move(vals));
}

void SweepTable::write_median_csv(const std::string& path) const {
  std::string out = "config";
  for (const auto& x : col_order) out += ',' + csv_quote(x);
  out += '\n';
  for (const auto& cfg : row_order) {
    out += csv_quote(cfg);
    for (const auto& x : col_order) out += ',' + fmt_double(median_of(cfg, x));
    out += '\n';
  }
  write_file(path, out);
}

// ------------------------------------------------------------------ sweeps

void SweepInputs::validate() const {
  require(!d_n.empty(), Errc::insufficient_documents, "sweep needs an adaptation pool");
  require(!d_g.empty(), Errc::insufficient_documents, "sweep needs a guidance pool");
  require(!d_i.empty(), Errc::insufficient_documents, "sweep needs a held-out pool");
  require(!seeds.empty(), Errc::invalid_argument, "sweep needs at least one seed");
  gold_space.validate();
  synthetic_space.validate();
  cfg.validate();
  plan.validate();
}

std::vector<double> default_ratio_grid() {
  std::vector<double> r;
  for (int i = 1; i <= 10; ++i) r.push_back(static_cast<double>(i) / 10.0);
  return r;
}

namespace {

struct SweepBed {
  std::vector<Document> vocab_docs;
  std::string corpus_hash;
  std::string metric;
  std::string eval_mode;
};

SweepBed make_bed(const SweepInputs& in) {
  SweepBed bed;
  bed.vocab_docs = in.d_n;
  bed.vocab_docs.insert(bed.vocab_docs.end(), in.d_g.begin(), in.d_g.end());
  std::vector<Document> all = bed.vocab_docs;
  all.insert(all.end(), in.d_i.begin(), in.d_i.end());
  bed.corpus_hash = corpus_fingerprint(all);
  bool fine_only = in.plan.task_mode == "fine";
  bed.metric = fine_only ? "micro_f1" : "retrieval_accuracy";
  bed.eval_mode = fine_only ? "fine" : "coarse";
  return bed;
}

Checkpoint seeded_init(const SweepInputs& in, const SweepBed& bed, uint64_t seed,
                       const ModelOptions& opt) {
  EncoderConfig cfg = in.cfg;
  cfg.seed = derive_seed(in.cfg.seed, "init-" + std::to_string(seed));
  return init_checkpoint(cfg, opt, bed.vocab_docs, in.gold_space, in.synthetic_space);
}

double pick_metric(const MetricsReport& r, const std::string& metric) {
  if (metric == "micro_f1") return r.micro_f1;
  if (metric == "retrieval_accuracy") return r.retrieval_accuracy;
  if (metric == "anls") return r.anls;
  fail(Errc::invalid_argument, "unknown sweep metric " + metric);
}

SweepCell make_cell(const SweepTable& table, const SweepBed& bed, const std::string& config,
                    const std::string& x, uint64_t seed, const Checkpoint& ckpt,
                    const MetricsReport& rep, const std::string& plan_hash,
                    double corrupted_fraction) {
  return {config,
          table.name,
          x,
          seed,
          bed.metric,
          pick_metric(rep, bed.metric),
          stage_name(ckpt.stage),
          bed.corpus_hash,
          plan_hash,
          corrupted_fraction};
}

std::string percent_label(double ratio) {
  return std::to_string(static_cast<int>(std::lround(ratio * 100.0))) + "%";
}

}  // namespace

SweepTable ratio_sweep(const SweepInputs& in, const std::vector<double>& ratios) {
  in.validate();
  require(!ratios.empty(), Errc::invalid_argument, "ratio sweep needs ratios");
  for (double r : ratios)
    require(r > 0.0 && r <= 1.0, Errc::invalid_argument, "ratios must be in (0,1]");
  SweepBed bed = make_bed(in);
  SweepTable table;
  table.name = "ratio";
  table.row_order = {"adapted", "baseline"};
  table.col_order = {"0%"};
  for (double r : ratios) table.col_order.push_back(percent_label(r));

  for (uint64_t seed : in.seeds) {
    AdaptationPlan plan = in.plan;
    plan.seed = seed;
    std::string ph = plan.hash();
    Checkpoint ckpt0 = seeded_init(in, bed, seed, in.opt);
    Checkpoint adapted = run_adaptation(in.d_n, ckpt0, plan);

    MetricsReport zs_a = evaluate_checkpoint(in.d_i, adapted, bed.eval_mode);
    table.cells.push_back(make_cell(table, bed, "adapted", "0%", seed, adapted, zs_a, ph, 0.0));
    MetricsReport zs_b = evaluate_checkpoint(in.d_i, ckpt0, bed.eval_mode);
    table.cells.push_back(make_cell(table, bed, "baseline", "0%", seed, ckpt0, zs_b, ph, 0.0));

    for (double r : ratios) {
      std::string x = percent_label(r);
      Checkpoint fnt = run_finetune(in.d_g, adapted, plan, r);
      MetricsReport ra = evaluate_checkpoint(in.d_i, fnt, bed.eval_mode);
      table.cells.push_back(make_cell(table, bed, "adapted", x, seed, fnt, ra, ph, 0.0));
      Checkpoint ft = run_finetune(in.d_g, ckpt0, plan, r);
      MetricsReport rb = evaluate_checkpoint(in.d_i, ft, bed.eval_mode);
      table.cells.push_back(make_cell(table, bed, "baseline", x, seed, ft, rb, ph, 0.0));
    }
  }
  return table;
}

SweepTable size_sweep(const SweepInputs& in, const std::vector<double>& fractions,
                      double finetune_ratio) {
  in.validate();
  require(!fractions.empty(), Errc::invalid_argument, "size sweep needs fractions");
  for (double f : fractions)
    require(f > 0.0 && f <= 1.0, Errc::invalid_argument, "fractions must be in (0,1]");
  require(finetune_ratio > 0.0 && finetune_ratio <= 1.0, Errc::invalid_argument,
          "fine-tune ratio must be in (0,1]");
  SweepBed bed = make_bed(in);
  SweepTable table;
  table.name = "size";
  std::string x = "r=" + fmt_short(finetune_ratio);
  table.col_order = {x};
  for (double f : fractions) table.row_order.push_back("sds-" + fmt_short(f));
  table.row_order.push_back("no-dw");

  for (uint64_t seed : in.seeds) {
    AdaptationPlan plan = in.plan;
    plan.seed = seed;
    std::string ph = plan.hash();
    Checkpoint ckpt0 = seeded_init(in, bed, seed, in.opt);

    for (double f : fractions) {
      std::vector<size_t> order(in.d_n.size());
      std::iota(order.begin(), order.end(), size_t{0});
      Rng rng(derive_seed(plan.seed, "size-prefix"));
      rng.shuffle(order);
      size_t n_sub = std::min(
          in.d_n.size(),
          std::max<size_t>(1, static_cast<size_t>(
                                  std::ceil(f * static_cast<double>(in.d_n.size()) - 1e-9))));
      std::vector<Document> sub;
      sub.reserve(n_sub);
      for (size_t k = 0; k < n_sub; ++k) sub.push_back(in.d_n[order[k]]);
      Checkpoint adapted = run_adaptation(sub, ckpt0, plan);
      Checkpoint fnt = run_finetune(in.d_g, adapted, plan, finetune_ratio);
      MetricsReport rep = evaluate_checkpoint(in.d_i, fnt, bed.eval_mode);
      table.cells.push_back(
          make_cell(table, bed, "sds-" + fmt_short(f), x, seed, fnt, rep, ph, 0.0));
    }

    Checkpoint ft = run_finetune(in.d_g, ckpt0, plan, finetune_ratio);
    MetricsReport rep = evaluate_checkpoint(in.d_i, ft, bed.eval_mode);
    table.cells.push_back(make_cell(table, bed, "no-dw", x, seed, ft, rep, ph, 0.0));
  }
  return table;
}

SweepTable robustness_sweep(const SweepInputs& in, const std::vector<double>& lambdas,
                            const std::vector<std::string>& modes) {
  in.validate();
  require(!lambdas.empty(), Errc::invalid_argument, "robustness sweep needs thresholds");
  for (double l : lambdas)
    require(l > 0.0, Errc::invalid_argument, "thresholds must be positive");
  require(!modes.empty(), Errc::invalid_argument, "robustness sweep needs corruption modes");
  for (const auto& m : modes)
    require(m == "incorrect" || m == "incomplete", Errc::invalid_argument,
            "unknown corruption mode " + m);

  SweepInputs fine_in = in;
  fine_in.plan.task_mode = "fine";  // corruption targets token labels
  SweepBed bed = make_bed(fine_in);
  SweepTable table;
  table.name = "robustness";
  table.row_order = {"david", "mono"};
  table.col_order = {"clean"};
  struct Col {
    std::string label, mode;
    double lambda;
  };
  std::vector<Col> cols;
  for (const auto& m : modes)
    for (double l : lambdas) {
      cols.push_back({m + ":P_" + fmt_short(l), m, l});
      table.col_order.push_back(cols.back().label);
    }

  ModelOptions mono_opt = in.opt;
  mono_opt.mono_grained = true;

  for (uint64_t seed : fine_in.seeds) {
    AdaptationPlan plan = fine_in.plan;
    plan.seed = seed;
    std::string ph = plan.hash();
    Checkpoint david0 = seeded_init(fine_in, bed, seed, fine_in.opt);
    Checkpoint adapted = run_adaptation(fine_in.d_n, david0, plan);
    Checkpoint mono0 = seeded_init(fine_in, bed, seed, mono_opt);

    auto run_col = [&](const std::string& x, const std::vector<Document>& guidance,
                       double frac) {
      Checkpoint fnt = run_finetune(guidance, adapted, plan, 1.0);
      MetricsReport ra = evaluate_checkpoint(fine_in.d_i, fnt, bed.eval_mode);
      table.cells.push_back(make_cell(table, bed, "david", x, seed, fnt, ra, ph, frac));
      Checkpoint ft = run_finetune(guidance, mono0, plan, 1.0);
      MetricsReport rb = evaluate_checkpoint(fine_in.d_i, ft, bed.eval_mode);
      table.cells.push_back(make_cell(table, bed, "mono", x, seed, ft, rb, ph, frac));
    };

    run_col("clean", fine_in.d_g, 0.0);
    for (const auto& col : cols) {
      LabelNoiseConfig noise;
      noise.lambda = col.lambda;
      noise.mode = col.mode;
      noise.seed = derive_seed(seed, "corrupt-" + col.label);
      std::vector<Document> corrupted =
          corrupt_guidance_labels(fine_in.d_g, noise, fine_in.gold_space);
      long long eligible = 0, changed = 0;
      for (size_t di = 0; di < corrupted.size(); ++di)
        for (size_t ti = 0; ti < corrupted[di].tokens.size(); ++ti) {
          const auto& before = fine_in.d_g[di].tokens[ti].gold_label;
          const auto& after = corrupted[di].tokens[ti].gold_label;
          if (!before.has_value() || *before == 0) continue;
          ++eligible;
          if (after != before) ++changed;
        }
      double frac =
          eligible ? static_cast<double>(changed) / static_cast<double>(eligible) : 0.0;
      run_col(col.label, corrupted, frac);
    }
  }
  return table;
}

void write_report_json(const std::string& path, const MetricsReport& report) {
  write_file(path, report.to_json().dump(2) + "\n");
}

}  // namespace david
