// Command-line front end: corpus generation, annotation, adaptation,
// fine-tuning, inference, evaluation, sweeps and report emission.

#include <cstdio>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "david/corpus_io.hpp"
#include "david/evalmod.hpp"
#include "david/provider.hpp"
#include "david/synthgen.hpp"
#include "david/workflow.hpp"

namespace fs = std::filesystem;
using namespace david;

namespace {

nlohmann::json load_config(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  nlohmann::json j = nlohmann::json::parse(read_file(path), nullptr, false);
  require(!j.is_discarded() && j.is_object(), Errc::invalid_argument,
          "config file must hold a JSON object: " + path);
  return j;
}

template <class T>
void merge_opt(CLI::App* cmd, const nlohmann::json& cfg, const std::string& flag, T& value) {
  const CLI::Option* opt = cmd->get_option_no_throw(flag);
  if (opt != nullptr && opt->count() > 0) return;  // explicit flag beats the config file
  std::string key = flag.substr(2);
  if (cfg.contains(key)) value = cfg.at(key).get<T>();
}

void announce(const std::string& command, const nlohmann::json& options) {
  std::printf("%s options %s\n", command.c_str(), options.dump().c_str());
}

void write_manifest(const std::string& out_dir, const std::string& command,
                    const nlohmann::json& options, const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs,
                    const nlohmann::json& extra = nlohmann::json::object()) {
  nlohmann::json in = nlohmann::json::object();
  for (const auto& p : inputs) in[p] = content_hash(p);
  nlohmann::json m = {
      {"command", command}, {"options", options}, {"inputs", in}, {"outputs", outputs}};
  for (const auto& [k, v] : extra.items()) m[k] = v;
  write_file((fs::path(out_dir) / (command + ".manifest.json")).string(), m.dump(2) + "\n");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<double> parse_doubles(const std::string& s) {
  std::vector<double> out;
  for (const auto& f : split_list(s)) {
    try {
      out.push_back(std::stod(f));
    } catch (const std::exception&) {
      fail(Errc::invalid_argument, "bad number in list: " + f);
    }
  }
  return out;
}

std::vector<uint64_t> parse_u64s(const std::string& s) {
  std::vector<uint64_t> out;
  for (const auto& f : split_list(s)) {
    try {
      out.push_back(std::stoull(f));
    } catch (const std::exception&) {
      fail(Errc::invalid_argument, "bad seed in list: " + f);
    }
  }
  return out;
}

std::vector<std::string> csv_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

// ------------------------------------------------------------ shared flags

struct ModelFlags {
  int hidden = 128;
  int layers = 4;
  int heads = 4;
  int max_tokens = 256;
  int max_entities = 64;
  int vocab = 2000;
  bool mono = false;
  std::string sit_memory = "query_tokens";
};

void add_model_flags(CLI::App* c, ModelFlags& mf) {
  c->add_option("--hidden", mf.hidden, "encoder width");
  c->add_option("--layers", mf.layers, "token-encoder depth");
  c->add_option("--heads", mf.heads, "attention heads");
  c->add_option("--max-tokens", mf.max_tokens, "token capacity per document");
  c->add_option("--max-entities", mf.max_entities, "entity capacity per document");
  c->add_option("--vocab-size", mf.vocab, "word vocabulary cap");
  c->add_flag("--mono", mf.mono, "token-only baseline (skip the joint encoder)");
  c->add_option("--sit-memory", mf.sit_memory,
                "pointer-decoder memory: query_tokens | query_entities");
}

void merge_model_flags(CLI::App* c, const nlohmann::json& cfg, ModelFlags& mf) {
  merge_opt(c, cfg, "--hidden", mf.hidden);
  merge_opt(c, cfg, "--layers", mf.layers);
  merge_opt(c, cfg, "--heads", mf.heads);
  merge_opt(c, cfg, "--max-tokens", mf.max_tokens);
  merge_opt(c, cfg, "--max-entities", mf.max_entities);
  merge_opt(c, cfg, "--vocab-size", mf.vocab);
  merge_opt(c, cfg, "--mono", mf.mono);
  merge_opt(c, cfg, "--sit-memory", mf.sit_memory);
}

nlohmann::json model_flags_json(const ModelFlags& mf) {
  return {{"hidden", mf.hidden},     {"layers", mf.layers},
          {"heads", mf.heads},       {"max_tokens", mf.max_tokens},
          {"max_entities", mf.max_entities}, {"vocab_size", mf.vocab},
          {"mono", mf.mono},         {"sit_memory", mf.sit_memory}};
}

EncoderConfig to_encoder_config(const ModelFlags& mf, uint64_t init_seed) {
  EncoderConfig cfg;
  cfg.hidden_dim = mf.hidden;
  cfg.n_layers = mf.layers;
  cfg.n_heads = mf.heads;
  cfg.max_tokens = mf.max_tokens;
  cfg.max_entities = mf.max_entities;
  cfg.vocab_size = mf.vocab;
  cfg.seed = init_seed;
  return cfg;
}

ModelOptions to_model_options(const ModelFlags& mf) {
  ModelOptions opt;
  opt.mono_grained = mf.mono;
  opt.sit_memory = mf.sit_memory;
  return opt;
}

std::vector<Document> eval_pool(const Corpus& corpus) {
  CollectionSplit split = corpus.into_split();
  if (!split.d_i.empty()) return split.d_i;
  return corpus.docs;
}

std::vector<Document> vocab_pool(const CollectionSplit& split) {
  std::vector<Document> docs = split.d_n;
  docs.insert(docs.end(), split.d_g.begin(), split.d_g.end());
  return docs;
}

void print_table(const SweepTable& table) {
  std::printf("%-12s", "config");
  for (const auto& x : table.col_order) std::printf(" %12s", x.c_str());
  std::printf("\n");
  for (const auto& row : table.row_order) {
    std::printf("%-12s", row.c_str());
    for (const auto& x : table.col_order) std::printf(" %12.4f", table.median_of(row, x));
    std::printf("\n");
  }
}

// --------------------------------------------------------------- commands

struct GenArgs {
  int n = 500;
  std::string kind = "form";
  int fields_min = 4;
  int fields_max = 9;
  uint64_t seed = 0;
  std::string config;
  std::string out = "corpus.jsonl";
};

void run_gen_corpus(CLI::App* cmd, GenArgs& a) {
  nlohmann::json cfg = load_config(a.config);
  merge_opt(cmd, cfg, "--n", a.n);
  merge_opt(cmd, cfg, "--kind", a.kind);
  merge_opt(cmd, cfg, "--fields-min", a.fields_min);
  merge_opt(cmd, cfg, "--fields-max", a.fields_max);
  merge_opt(cmd, cfg, "--seed", a.seed);
  merge_opt(cmd, cfg, "--out", a.out);
  nlohmann::json options = {{"n", a.n},
                            {"kind", a.kind},
                            {"fields_min", a.fields_min},
                            {"fields_max", a.fields_max},
                            {"seed", a.seed},
                            {"out", a.out}};
  announce("gen-corpus", options);

  CorpusSpec spec;
  spec.n_documents = a.n;
  spec.document_kind = a.kind;
  spec.fields_min = a.fields_min;
  spec.fields_max = a.fields_max;
  spec.seed = a.seed;

  Corpus corpus;
  corpus.docs = generate_corpus(spec);
  corpus.gold_space = default_gold_space(a.kind);
  corpus.synthetic_space = default_synthetic_space();

  fs::path out_path(a.out);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  save_corpus(a.out, corpus);
  std::string dir = out_path.has_parent_path() ? out_path.parent_path().string() : ".";
  write_manifest(dir, "gen-corpus", options, {}, {a.out, spaces_sidecar_path(a.out)});
  std::printf("wrote %zu documents to %s\n", corpus.docs.size(), a.out.c_str());
}

struct AnnArgs {
  std::string corpus = "corpus.jsonl";
  double layout_noise = 0.3;
  double text_drop = 0.15;
  double merge_split = 0.06;
  std::string provider = "rule";
  int max_qa = 8;
  std::string splits;
  uint64_t seed = 0;
  std::string config;
  std::string out = "annotated";
};

void run_annotate(CLI::App* cmd, AnnArgs& a) {
  nlohmann::json cfg = load_config(a.config);
  merge_opt(cmd, cfg, "--corpus", a.corpus);
  merge_opt(cmd, cfg, "--layout-noise", a.layout_noise);
  merge_opt(cmd, cfg, "--text-drop", a.text_drop);
  merge_opt(cmd, cfg, "--merge-split", a.merge_split);
  merge_opt(cmd, cfg, "--provider", a.provider);
  merge_opt(cmd, cfg, "--max-qa", a.max_qa);
  merge_opt(cmd, cfg, "--splits", a.splits);
  merge_opt(cmd, cfg, "--seed", a.seed);
  merge_opt(cmd, cfg, "--out", a.out);
  nlohmann::json options = {{"corpus", a.corpus},   {"layout_noise", a.layout_noise},
                            {"text_drop", a.text_drop}, {"merge_split", a.merge_split},
                            {"provider", a.provider},   {"max_qa", a.max_qa},
                            {"splits", a.splits},       {"seed", a.seed},
                            {"out", a.out}};
  announce("annotate", options);

  Corpus corpus = load_corpus(a.corpus);
  size_t total = corpus.docs.size();
  size_t n_count, g_count, i_count;
  if (a.splits.empty()) {
    n_count = total * 6 / 10;
    g_count = total * 2 / 10;
    i_count = total - n_count - g_count;
  } else {
    std::vector<double> v = parse_doubles(a.splits);
    require(v.size() == 3, Errc::invalid_argument, "--splits wants three counts: n,g,i");
    n_count = static_cast<size_t>(v[0]);
    g_count = static_cast<size_t>(v[1]);
    i_count = static_cast<size_t>(v[2]);
  }
  CollectionSplit split = split_collection(corpus.docs, n_count, g_count, i_count, a.seed);

  std::unordered_map<std::string, const Document*> by_id;
  for (const auto& d : corpus.docs) by_id[d.id] = &d;

  LayoutNoiseConfig lcfg;
  lcfg.target_mean_iou = a.layout_noise;
  lcfg.text_drop_rate = a.text_drop;
  lcfg.merge_split_rate = a.merge_split;
  lcfg.seed = derive_seed(a.seed, "layout");

  std::vector<Document> noisy;
  noisy.reserve(split.d_n.size());
  for (const auto& d : split.d_n) {
    auto it = by_id.find(d.id);
    require(it != by_id.end(), Errc::id_mismatch, "split doc missing from corpus: " + d.id);
    Document p = perturb_layout_annotations(*it->second, lcfg);
    p.split = Split::n;
    noisy.push_back(std::move(p));
  }

  auto provider = make_provider(a.provider, derive_seed(a.seed, "provider"));
  AnnotateOptions opts;
  opts.max_pairs = a.max_qa;
  AnnotateReport report = annotate_documents(noisy, *provider, corpus.synthetic_space, opts);
  std::vector<Document> gold_twins;
  gold_twins.reserve(noisy.size());
  for (const auto& d : noisy) gold_twins.push_back(*by_id.at(d.id));
  AnnotationQualityStats quality = measure_annotation_quality(noisy, gold_twins);

  Corpus out;
  out.gold_space = corpus.gold_space;
  out.synthetic_space = corpus.synthetic_space;
  out.docs = noisy;
  out.docs.insert(out.docs.end(), split.d_g.begin(), split.d_g.end());
  out.docs.insert(out.docs.end(), split.d_i.begin(), split.d_i.end());

  fs::create_directories(a.out);
  std::string out_file = (fs::path(a.out) / "annotated.jsonl").string();
  save_corpus(out_file, out);

  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : report.failures) failures.push_back({{"doc", f.doc_id}, {"reason", f.reason}});
  nlohmann::json extra = {{"annotated", report.n_annotated},
                          {"inquiry_pairs", report.n_pairs},
                          {"failures", failures},
                          {"mean_iou", quality.mean_iou},
                          {"mean_jaccard", quality.mean_jaccard}};
  write_manifest(a.out, "annotate", options, {a.corpus},
                 {out_file, spaces_sidecar_path(out_file)}, extra);
  std::printf("annotated %d documents (%d pairs, %zu failed), mean IoU %.3f, wrote %s\n",
              report.n_annotated, report.n_pairs, report.failures.size(), quality.mean_iou,
              out_file.c_str());
}

struct AdaptArgs {
  std::string corpus = "annotated/annotated.jsonl";
  std::string tasks = "sds,sst,sit";
  int epochs = 1;
  double lr = 2e-4;
  int batch = 2;
  ModelFlags mf;
  uint64_t seed = 0;
  std::string config;
  std::string out = "run";
};

void run_adapt(CLI::App* cmd, AdaptArgs& a) {
  nlohmann::json cfg = load_config(a.config);
  merge_opt(cmd, cfg, "--corpus", a.corpus);
  merge_opt(cmd, cfg, "--tasks", a.tasks);
  merge_opt(cmd, cfg, "--epochs", a.epochs);
  merge_opt(cmd, cfg, "--lr", a.lr);
  merge_opt(cmd, cfg, "--batch", a.batch);
  merge_opt(cmd, cfg, "--seed", a.seed);
  merge_opt(cmd, cfg, "--out", a.out);
  merge_model_flags(cmd, cfg, a.mf);
  nlohmann::json options = {{"corpus", a.corpus}, {"tasks", a.tasks}, {"epochs", a.epochs},
                            {"lr", a.lr},         {"batch", a.batch}, {"seed", a.seed},
                            {"out", a.out},       {"model", model_flags_json(a.mf)}};
  announce("adapt", options);

  Corpus corpus = load_corpus(a.corpus);
  CollectionSplit split = corpus.into_split();
  require(!split.d_n.empty(), Errc::insufficient_documents,
          "corpus has no synthetic-annotation split; run annotate first");

  AdaptationPlan plan;
  plan.sds_epochs = plan.sst_epochs = plan.sit_epochs = 0;
  for (const auto& t : split_list(a.tasks)) {
    if (t == "sds") plan.sds_epochs = a.epochs;
    else if (t == "sst") plan.sst_epochs = a.epochs;
    else if (t == "sit") plan.sit_epochs = a.epochs;
    else fail(Errc::invalid_argument, "unknown task " + t + " (want sds, sst or sit)");
  }
  plan.learning_rate = a.lr;
  plan.batch_size = a.batch;
  plan.seed = a.seed;

  Checkpoint ckpt0 = init_checkpoint(to_encoder_config(a.mf, derive_seed(a.seed, "init")),
                                     to_model_options(a.mf), vocab_pool(split),
                                     corpus.gold_space, corpus.synthetic_space);
  fs::create_directories(a.out);
  std::string p0 = (fs::path(a.out) / "ckpt-F_0.bin").string();
  save_checkpoint(ckpt0, p0);

  TrainLog log;
  Checkpoint adapted = run_adaptation(split.d_n, ckpt0, plan, &log);
  std::string pn = (fs::path(a.out) / ("ckpt-" + stage_name(adapted.stage) + ".bin")).string();
  save_checkpoint(adapted, pn);
  std::string loss_path = (fs::path(a.out) / "loss.csv").string();
  write_loss_csv(loss_path, log);

  nlohmann::json extra = {{"plan", plan.to_json()},
                          {"plan_hash", plan.hash()},
                          {"metrics", adapted.metrics}};
  write_manifest(a.out, "adapt", options, {a.corpus}, {p0, pn, loss_path}, extra);
  std::printf("adaptation done: %s (losses %s)\n", pn.c_str(),
              adapted.metrics.value("final_loss", nlohmann::json::object()).dump().c_str());
}

struct FtArgs {
  std::string from;
  std::string corpus = "annotated/annotated.jsonl";
  double ratio = 1.0;
  int epochs = 8;
  double lr = 2e-4;
  int batch = 2;
  std::string task_mode = "both";
  bool freeze_decoders = false;
  uint64_t seed = 0;
  std::string config;
  std::string out = "run";
};

void run_ft(CLI::App* cmd, FtArgs& a) {
  nlohmann::json cfg = load_config(a.config);
  merge_opt(cmd, cfg, "--from", a.from);
  merge_opt(cmd, cfg, "--corpus", a.corpus);
  merge_opt(cmd, cfg, "--ratio", a.ratio);
  merge_opt(cmd, cfg, "--epochs", a.epochs);
  merge_opt(cmd, cfg, "--lr", a.lr);
  merge_opt(cmd, cfg, "--batch", a.batch);
  merge_opt(cmd, cfg, "--task-mode", a.task_mode);
  merge_opt(cmd, cfg, "--freeze-decoders", a.freeze_decoders);
  merge_opt(cmd, cfg, "--seed", a.seed);
  merge_opt(cmd, cfg, "--out", a.out);
  require(!a.from.empty(), Errc::invalid_argument, "finetune needs --from <checkpoint>");
  nlohmann::json options = {{"from", a.from},     {"corpus", a.corpus},
                            {"ratio", a.ratio},   {"epochs", a.epochs},
                            {"lr", a.lr},         {"batch", a.batch},
                            {"task_mode", a.task_mode}, {"freeze_decoders", a.freeze_decoders},
                            {"seed", a.seed},     {"out", a.out}};
  announce("finetune", options);

  Checkpoint start = load_checkpoint(a.from);
  Corpus corpus = load_corpus(a.corpus);
  CollectionSplit split = corpus.into_split();
  require(!split.d_g.empty(), Errc::insufficient_documents, "corpus has no guidance split");

  AdaptationPlan plan;
  plan.learning_rate = a.lr;
  plan.batch_size = a.batch;
  plan.seed = a.seed;
  plan.task_mode = a.task_mode;
  plan.finetune_epochs = a.epochs;
  plan.finetune_update_decoders = !a.freeze_decoders;

  TrainLog log;
  Checkpoint tuned = run_finetune(split.d_g, start, plan, a.ratio, &log);
  fs::create_directories(a.out);
  std::string pt = (fs::path(a.out) / ("ckpt-" + stage_name(tuned.stage) + ".bin")).string();
  save_checkpoint(tuned, pt);
  std::string loss_path = (fs::path(a.out) / "finetune-loss.csv").string();
  write_loss_csv(loss_path, log);

  nlohmann::json extra = {{"plan", plan.to_json()},
                          {"plan_hash", plan.hash()},
                          {"metrics", tuned.metrics}};
  write_manifest(a.out, "finetune", options, {a.from, a.corpus}, {pt, loss_path}, extra);
  std::printf("fine-tune done: %s\n", pt.c_str());
}

struct InferArgs {
  std::string from;
  std::string corpus = "annotated/annotated.jsonl";
  std::string task = "both";
  uint64_t seed = 0;
  std::string config;
  std::string out = "run";
};

void run_infer(CLI::App* cmd, InferArgs& a) {
  nlohmann::json cfg = load_config(a.config);
  merge_opt(cmd, cfg, "--from", a.from);
  merge_opt(cmd, cfg, "--corpus", a.corpus);
  merge_opt(cmd, cfg, "--task", a.task);
  merge_opt(cmd, cfg, "--seed", a.seed);
  merge_opt(cmd, cfg, "--out", a.out);
  require(!a.from.empty(), Errc::invalid_argument, "infer needs --from <checkpoint>");
  nlohmann::json options = {{"from", a.from},
                            {"corpus", a.corpus},
                            {"task", a.task},
                            {"seed", a.seed},
                            {"out", a.out}};
  announce("infer", options);

  Checkpoint ckpt = load_checkpoint(a.from);
  Corpus corpus = load_corpus(a.corpus);
  std::vector<Document> docs = eval_pool(corpus);
  require(!docs.empty(), Errc::insufficient_documents, "nothing to run inference on");

  InferenceResult res = run_inference(docs, ckpt, a.task);
  fs::create_directories(a.out);
  std::string pred_path = (fs::path(a.out) / "predictions.jsonl").string();
  write_predictions_jsonl(res, pred_path);
  write_manifest(a.out, "infer", options, {a.from, a.corpus}, {pred_path});
  std::printf("wrote %zu token and %zu query predictions to %s\n", res.tokens.size(),
              res.queries.size(), pred_path.c_str());
}

struct EvalArgs {
  std::string predictions;
  std::string from;
  std::string corpus = "annotated/annotated.jsonl";
  std::string task = "both";
  uint64_t seed = 0;
  std::string config;
  std::string out = "run";
};

void run_eval(CLI::App* cmd, EvalArgs& a) {
  nlohmann::json cfg = load_config(a.config);
  merge_opt(cmd, cfg, "--predictions", a.predictions);
  merge_opt(cmd, cfg, "--from", a.from);
  merge_opt(cmd, cfg, "--corpus", a.corpus);
  merge_opt(cmd, cfg, "--task", a.task);
  merge_opt(cmd, cfg, "--seed", a.seed);
  merge_opt(cmd, cfg, "--out", a.out);
  nlohmann::json options = {{"predictions", a.predictions}, {"from", a.from},
                            {"corpus", a.corpus},           {"task", a.task},
                            {"seed", a.seed},               {"out", a.out}};
  announce("eval", options);

  Corpus corpus = load_corpus(a.corpus);
  MetricsReport rep;
  std::vector<std::string> inputs = {a.corpus};
  if (!a.predictions.empty()) {
    InferenceResult res = read_predictions_jsonl(a.predictions);
    rep = evaluate_predictions(res, corpus.gold_space);
    rep.config_fingerprint = content_hash(a.predictions);
    inputs.push_back(a.predictions);
  } else {
    require(!a.from.empty(), Errc::invalid_argument, "eval needs --predictions or --from");
    Checkpoint ckpt = load_checkpoint(a.from);
    std::vector<Document> docs = eval_pool(corpus);
    require(!docs.empty(), Errc::insufficient_documents, "nothing to evaluate on");
    rep = evaluate_checkpoint(docs, ckpt, a.task);
    inputs.push_back(a.from);
  }
  fs::create_directories(a.out);
  std::string rep_path = (fs::path(a.out) / "report.json").string();
  write_report_json(rep_path, rep);
  write_manifest(a.out, "eval", options, inputs, {rep_path});
  std::printf("micro_f1 %.4f  retrieval %.4f  anls %.4f  (%d samples) -> %s\n", rep.micro_f1,
              rep.retrieval_accuracy, rep.anls, rep.n_samples, rep_path.c_str());
}

struct SweepArgs {
  std::string corpus = "annotated/annotated.jsonl";
  std::string seeds = "1,2,3";
  int sds = 1, sst = 1, sit = 1;
  int finetune_epochs = 4;
  double lr = 2e-4;
  int batch = 2;
  std::string task_mode = "both";
  ModelFlags mf;
  uint64_t seed = 0;
  std::string config;
  std::string out = "sweep";
  std::string ratios;
  std::string fractions = "0.5,1.0";
  double finetune_ratio = 0.1;
  std::string lambdas = "2,1.5,1";
  std::string modes = "incorrect,incomplete";
};

void add_sweep_flags(CLI::App* c, SweepArgs& a) {
  c->add_option("--corpus", a.corpus, "annotated corpus file");
  c->add_option("--seeds", a.seeds, "comma list of sweep seeds");
  c->add_option("--sds-epochs", a.sds, "alignment epochs");
  c->add_option("--sst-epochs", a.sst, "tag-distillation epochs");
  c->add_option("--sit-epochs", a.sit, "pointer-distillation epochs");
  c->add_option("--finetune-epochs", a.finetune_epochs, "guidance epochs");
  c->add_option("--lr", a.lr, "learning rate");
  c->add_option("--batch", a.batch, "batch size");
  c->add_option("--task-mode", a.task_mode, "fine | coarse | both");
  c->add_option("--seed", a.seed, "base seed");
  c->add_option("--config", a.config, "JSON config file");
  c->add_option("--out", a.out, "output directory");
  add_model_flags(c, a.mf);
}

SweepInputs sweep_inputs(CLI::App* cmd, SweepArgs& a, nlohmann::json& options) {
  nlohmann::json cfg = load_config(a.config);
  merge_opt(cmd, cfg, "--corpus", a.corpus);
  merge_opt(cmd, cfg, "--seeds", a.seeds);
  merge_opt(cmd, cfg, "--sds-epochs", a.sds);
  merge_opt(cmd, cfg, "--sst-epochs", a.sst);
  merge_opt(cmd, cfg, "--sit-epochs", a.sit);
  merge_opt(cmd, cfg, "--finetune-epochs", a.finetune_epochs);
  merge_opt(cmd, cfg, "--lr", a.lr);
  merge_opt(cmd, cfg, "--batch", a.batch);
  merge_opt(cmd, cfg, "--task-mode", a.task_mode);
  merge_opt(cmd, cfg, "--seed", a.seed);
  merge_opt(cmd, cfg, "--out", a.out);
  merge_opt(cmd, cfg, "--ratios", a.ratios);
  merge_opt(cmd, cfg, "--fractions", a.fractions);
  merge_opt(cmd, cfg, "--finetune-ratio", a.finetune_ratio);
  merge_opt(cmd, cfg, "--lambdas", a.lambdas);
  merge_opt(cmd, cfg, "--modes", a.modes);
  merge_model_flags(cmd, cfg, a.mf);
  options = {{"corpus", a.corpus},     {"seeds", a.seeds},
             {"sds_epochs", a.sds},    {"sst_epochs", a.sst},
             {"sit_epochs", a.sit},    {"finetune_epochs", a.finetune_epochs},
             {"lr", a.lr},             {"batch", a.batch},
             {"task_mode", a.task_mode}, {"seed", a.seed},
             {"out", a.out},           {"model", model_flags_json(a.mf)}};

  Corpus corpus = load_corpus(a.corpus);
  CollectionSplit split = corpus.into_split();
  SweepInputs in;
  in.d_n = std::move(split.d_n);
  in.d_g = std::move(split.d_g);
  in.d_i = std::move(split.d_i);
  in.gold_space = corpus.gold_space;
  in.synthetic_space = corpus.synthetic_space;
  in.cfg = to_encoder_config(a.mf, a.seed);
  in.opt = to_model_options(a.mf);
  in.plan.sds_epochs = a.sds;
  in.plan.sst_epochs = a.sst;
  in.plan.sit_epochs = a.sit;
  in.plan.finetune_epochs = a.finetune_epochs;
  in.plan.learning_rate = a.lr;
  in.plan.batch_size = a.batch;
  in.plan.task_mode = a.task_mode;
  in.plan.seed = a.seed;
  in.seeds = parse_u64s(a.seeds);
  return in;
}

void emit_sweep(const SweepTable& table, const SweepArgs& a, const nlohmann::json& options) {
  fs::create_directories(a.out);
  std::string cells = (fs::path(a.out) / (table.name + "-cells.csv")).string();
  std::string medians = (fs::path(a.out) / (table.name + "-median.csv")).string();
  table.write_cells_csv(cells);
  table.write_median_csv(medians);
  write_manifest(a.out, "sweep-" + table.name, options, {a.corpus}, {cells, medians});
  print_table(table);
  std::printf("sweep %s: %zu cells -> %s\n", table.name.c_str(), table.cells.size(),
              cells.c_str());
}

struct ReportArgs {
  std::string cells;
  uint64_t seed = 0;
  std::string config;
  std::string out = "report";
};

void run_report(CLI::App* cmd, ReportArgs& a) {
  nlohmann::json cfg = load_config(a.config);
  merge_opt(cmd, cfg, "--cells", a.cells);
  merge_opt(cmd, cfg, "--seed", a.seed);
  merge_opt(cmd, cfg, "--out", a.out);
  require(!a.cells.empty(), Errc::invalid_argument, "report needs --cells <csv>");
  nlohmann::json options = {{"cells", a.cells}, {"seed", a.seed}, {"out", a.out}};
  announce("report", options);

  std::string content = read_file(a.cells);
  SweepTable table;
  size_t pos = 0;
  bool first = true;
  while (pos < content.size()) {
    size_t nl = content.find('\n', pos);
    if (nl == std::string::npos) nl = content.size();
    std::string line = content.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    if (first) {
      first = false;
      continue;  // header
    }
    std::vector<std::string> f = csv_fields(line);
    require(f.size() == 10, Errc::io_failure, "bad sweep cell row in " + a.cells);
    SweepCell c;
    c.config = f[0];
    c.sweep = f[1];
    c.x = f[2];
    c.seed = std::stoull(f[3]);
    c.metric = f[4];
    c.value = std::stod(f[5]);
    c.stage = f[6];
    c.corpus_hash = f[7];
    c.plan_hash = f[8];
    c.corrupted_fraction = std::stod(f[9]);
    if (std::find(table.row_order.begin(), table.row_order.end(), c.config) ==
        table.row_order.end())
      table.row_order.push_back(c.config);
    if (std::find(table.col_order.begin(), table.col_order.end(), c.x) ==
        table.col_order.end())
      table.col_order.push_back(c.x);
    table.name = c.sweep;
    table.cells.push_back(std::move(c));
  }
  require(!table.cells.empty(), Errc::io_failure, "no sweep cells in " + a.cells);

  fs::create_directories(a.out);
  std::string medians = (fs::path(a.out) / (table.name + "-median.csv")).string();
  table.write_median_csv(medians);

  std::string md = "| config |";
  for (const auto& x : table.col_order) md += " " + x + " |";
  md += "\n|---|";
  for (size_t i = 0; i < table.col_order.size(); ++i) md += "---|";
  md += "\n";
  char buf[64];
  for (const auto& row : table.row_order) {
    md += "| " + row + " |";
    for (const auto& x : table.col_order) {
      std::snprintf(buf, sizeof buf, " %.4f |", table.median_of(row, x));
      md += buf;
    }
    md += "\n";
  }
  std::string md_path = (fs::path(a.out) / (table.name + "-report.md")).string();
  write_file(md_path, md);
  write_manifest(a.out, "report", options, {a.cells}, {medians, md_path});
  print_table(table);
}

int code_for(Errc c) {
  return (c == Errc::io_failure || c == Errc::provider_failure) ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"joint-grained document understanding workbench"};
  app.require_subcommand(1);

  GenArgs gen;
  CLI::App* c_gen = app.add_subcommand("gen-corpus", "generate a synthetic document corpus");
  c_gen->add_option("--n", gen.n, "number of documents");
  c_gen->add_option("--kind", gen.kind, "form | receipt");
  c_gen->add_option("--fields-min", gen.fields_min, "minimum fields per form");
  c_gen->add_option("--fields-max", gen.fields_max, "maximum fields per form");
  c_gen->add_option("--seed", gen.seed, "generation seed");
  c_gen->add_option("--config", gen.config, "JSON config file");
  c_gen->add_option("--out", gen.out, "output corpus file");
  c_gen->callback([&] { run_gen_corpus(c_gen, gen); });

  AnnArgs ann;
  CLI::App* c_ann =
      app.add_subcommand("annotate", "split the corpus and synthesize noisy annotations");
  c_ann->add_option("--corpus", ann.corpus, "gold corpus file");
  c_ann->add_option("--layout-noise", ann.layout_noise, "target layout overlap after noise");
  c_ann->add_option("--text-drop", ann.text_drop, "entity text degradation rate");
  c_ann->add_option("--merge-split", ann.merge_split, "entity merge/split rate");
  c_ann->add_option("--provider", ann.provider, "annotation provider: rule | remote");
  c_ann->add_option("--max-qa", ann.max_qa, "max inquiry pairs per document");
  c_ann->add_option("--splits", ann.splits, "doc counts n,g,i (default 60/20/20 percent)");
  c_ann->add_option("--seed", ann.seed, "split + noise seed");
  c_ann->add_option("--config", ann.config, "JSON config file");
  c_ann->add_option("--out", ann.out, "output directory");
  c_ann->callback([&] { run_annotate(c_ann, ann); });

  AdaptArgs ada;
  CLI::App* c_ada = app.add_subcommand("adapt", "run the adaptation stages on the noisy pool");
  c_ada->add_option("--corpus", ada.corpus, "annotated corpus file");
  c_ada->add_option("--tasks", ada.tasks, "comma list from sds,sst,sit");
  c_ada->add_option("--epochs", ada.epochs, "epochs per listed task");
  c_ada->add_option("--lr", ada.lr, "learning rate");
  c_ada->add_option("--batch", ada.batch, "batch size");
  c_ada->add_option("--seed", ada.seed, "training seed");
  c_ada->add_option("--config", ada.config, "JSON config file");
  c_ada->add_option("--out", ada.out, "output directory");
  add_model_flags(c_ada, ada.mf);
  c_ada->callback([&] { run_adapt(c_ada, ada); });

  FtArgs ft;
  CLI::App* c_ft = app.add_subcommand("finetune", "fine-tune task heads on the guidance pool");
  c_ft->add_option("--from", ft.from, "starting checkpoint");
  c_ft->add_option("--corpus", ft.corpus, "annotated corpus file");
  c_ft->add_option("--ratio", ft.ratio, "guidance fraction in (0,1]");
  c_ft->add_option("--epochs", ft.epochs, "fine-tune epochs");
  c_ft->add_option("--lr", ft.lr, "learning rate");
  c_ft->add_option("--batch", ft.batch, "batch size");
  c_ft->add_option("--task-mode", ft.task_mode, "fine | coarse | both");
  c_ft->add_flag("--freeze-decoders", ft.freeze_decoders, "tune heads only");
  c_ft->add_option("--seed", ft.seed, "training seed");
  c_ft->add_option("--config", ft.config, "JSON config file");
  c_ft->add_option("--out", ft.out, "output directory");
  c_ft->callback([&] { run_ft(c_ft, ft); });

  InferArgs inf;
  CLI::App* c_inf = app.add_subcommand("infer", "run inference on the held-out pool");
  c_inf->add_option("--from", inf.from, "checkpoint");
  c_inf->add_option("--corpus", inf.corpus, "annotated corpus file");
  c_inf->add_option("--task", inf.task, "fine | coarse | both");
  c_inf->add_option("--seed", inf.seed, "unused; accepted for uniformity");
  c_inf->add_option("--config", inf.config, "JSON config file");
  c_inf->add_option("--out", inf.out, "output directory");
  c_inf->callback([&] { run_infer(c_inf, inf); });

  EvalArgs ev;
  CLI::App* c_ev = app.add_subcommand("eval", "score predictions or a checkpoint");
  c_ev->add_option("--predictions", ev.predictions, "prediction dump to score");
  c_ev->add_option("--from", ev.from, "checkpoint to run and score");
  c_ev->add_option("--corpus", ev.corpus, "annotated corpus file");
  c_ev->add_option("--task", ev.task, "fine | coarse | both");
  c_ev->add_option("--seed", ev.seed, "unused; accepted for uniformity");
  c_ev->add_option("--config", ev.config, "JSON config file");
  c_ev->add_option("--out", ev.out, "output directory");
  c_ev->callback([&] { run_eval(c_ev, ev); });

  SweepArgs sw;
  CLI::App* c_sw = app.add_subcommand("sweep", "experiment grids");
  c_sw->require_subcommand(1);
  CLI::App* c_ratio = c_sw->add_subcommand("ratio", "guidance-ratio grid");
  add_sweep_flags(c_ratio, sw);
  c_ratio->add_option("--ratios", sw.ratios, "comma list of guidance ratios");
  c_ratio->callback([&] {
    nlohmann::json options;
    SweepInputs in = sweep_inputs(c_ratio, sw, options);
    std::vector<double> ratios =
        sw.ratios.empty() ? default_ratio_grid() : parse_doubles(sw.ratios);
    options["ratios"] = ratios;
    emit_sweep(ratio_sweep(in, ratios), sw, options);
  });
  CLI::App* c_size = c_sw->add_subcommand("size", "adaptation-set size grid");
  add_sweep_flags(c_size, sw);
  c_size->add_option("--fractions", sw.fractions, "comma list of pool fractions");
  c_size->add_option("--finetune-ratio", sw.finetune_ratio, "guidance ratio per cell");
  c_size->callback([&] {
    nlohmann::json options;
    SweepInputs in = sweep_inputs(c_size, sw, options);
    std::vector<double> fr = parse_doubles(sw.fractions);
    options["fractions"] = fr;
    options["finetune_ratio"] = sw.finetune_ratio;
    emit_sweep(size_sweep(in, fr, sw.finetune_ratio), sw, options);
  });
  CLI::App* c_rob = c_sw->add_subcommand("robustness", "guidance label-noise grid");
  add_sweep_flags(c_rob, sw);
  c_rob->add_option("--lambdas", sw.lambdas, "comma list of corruption thresholds");
  c_rob->add_option("--modes", sw.modes, "comma list from incorrect,incomplete");
  c_rob->callback([&] {
    nlohmann::json options;
    SweepInputs in = sweep_inputs(c_rob, sw, options);
    std::vector<double> ls = parse_doubles(sw.lambdas);
    std::vector<std::string> ms = split_list(sw.modes);
    options["lambdas"] = ls;
    options["modes"] = ms;
    emit_sweep(robustness_sweep(in, ls, ms), sw, options);
  });

  ReportArgs rep;
  CLI::App* c_rep = app.add_subcommand("report", "summarize a sweep cell dump");
  c_rep->add_option("--cells", rep.cells, "cells CSV from a sweep");
  c_rep->add_option("--seed", rep.seed, "unused; accepted for uniformity");
  c_rep->add_option("--config", rep.config, "JSON config file");
  c_rep->add_option("--out", rep.out, "output directory");
  c_rep->callback([&] { run_report(c_rep, rep); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    std::fprintf(stderr, "%s", app.help().c_str());
    return 1;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return code_for(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "fatal: %s\n", e.what());
    return 2;
  }
  return 0;
}
