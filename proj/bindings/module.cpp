// Python bindings: file-oriented wrappers over the main operations plus the
// pure metric/utility functions. Structured results come back as JSON text;
// the python package turns them into dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "david/corpus_io.hpp"
#include "david/evalmod.hpp"
#include "david/provider.hpp"
#include "david/synthgen.hpp"
#include "david/text.hpp"
#include "david/workflow.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace david;

namespace {

size_t py_gen_corpus(const std::string& out, int n, const std::string& kind, uint64_t seed,
                     int fields_min, int fields_max) {
  CorpusSpec spec;
  spec.n_documents = n;
  spec.document_kind = kind;
  spec.fields_min = fields_min;
  spec.fields_max = fields_max;
  spec.seed = seed;
  Corpus corpus;
  corpus.docs = generate_corpus(spec);
  corpus.gold_space = default_gold_space(kind);
  corpus.synthetic_space = default_synthetic_space();
  fs::path p(out);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  save_corpus(out, corpus);
  return corpus.docs.size();
}

std::string py_annotate(const std::string& corpus_in, const std::string& corpus_out,
                        double layout_noise, double text_drop, double merge_split,
                        const std::string& provider_kind, int max_qa, int n, int g, int i,
                        uint64_t seed) {
  Corpus corpus = load_corpus(corpus_in);
  size_t total = corpus.docs.size();
  size_t nc = n >= 0 ? static_cast<size_t>(n) : total * 6 / 10;
  size_t gc = g >= 0 ? static_cast<size_t>(g) : total * 2 / 10;
  size_t ic = i >= 0 ? static_cast<size_t>(i) : total - nc - gc;
  CollectionSplit split = split_collection(corpus.docs, nc, gc, ic, seed);

  std::unordered_map<std::string, const Document*> by_id;
  for (const auto& d : corpus.docs) by_id[d.id] = &d;
  LayoutNoiseConfig lcfg;
  lcfg.target_mean_iou = layout_noise;
  lcfg.text_drop_rate = text_drop;
  lcfg.merge_split_rate = merge_split;
  lcfg.seed = derive_seed(seed, "layout");
  std::vector<Document> noisy;
  noisy.reserve(split.d_n.size());
  for (const auto& d : split.d_n) {
    Document p = perturb_layout_annotations(*by_id.at(d.id), lcfg);
    p.split = Split::n;
    noisy.push_back(std::move(p));
  }
  auto provider = make_provider(provider_kind, derive_seed(seed, "provider"));
  AnnotateOptions opts;
  opts.max_pairs = max_qa;
  AnnotateReport report = annotate_documents(noisy, *provider, corpus.synthetic_space, opts);
  std::vector<Document> gold_twins;
  gold_twins.reserve(noisy.size());
  for (const auto& d : noisy) gold_twins.push_back(*by_id.at(d.id));
  AnnotationQualityStats quality = measure_annotation_quality(noisy, gold_twins);

  Corpus out;
  out.gold_space = corpus.gold_space;
  out.synthetic_space = corpus.synthetic_space;
  out.docs = std::move(noisy);
  out.docs.insert(out.docs.end(), split.d_g.begin(), split.d_g.end());
  out.docs.insert(out.docs.end(), split.d_i.begin(), split.d_i.end());
  fs::path p(corpus_out);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  save_corpus(corpus_out, out);

  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : report.failures)
    failures.push_back({{"doc", f.doc_id}, {"reason", f.reason}});
  nlohmann::json j = {{"annotated", report.n_annotated},
                      {"inquiry_pairs", report.n_pairs},
                      {"failures", failures},
                      {"mean_iou", quality.mean_iou},
                      {"mean_jaccard", quality.mean_jaccard},
                      {"corpus", corpus_out}};
  return j.dump();
}

std::string py_adapt(const std::string& corpus_path, const std::string& out_dir,
                     const std::string& tasks, int epochs, double lr, int batch, uint64_t seed,
                     int hidden, int layers, int heads, int vocab, bool mono,
                     const std::string& sit_memory) {
  Corpus corpus = load_corpus(corpus_path);
  CollectionSplit split = corpus.into_split();
  require(!split.d_n.empty(), Errc::insufficient_documents,
          "corpus has no synthetic-annotation split");

  AdaptationPlan plan;
  plan.sds_epochs = plan.sst_epochs = plan.sit_epochs = 0;
  std::string cur;
  auto apply = [&](const std::string& t) {
    if (t.empty()) return;
    if (t == "sds") plan.sds_epochs = epochs;
    else if (t == "sst") plan.sst_epochs = epochs;
    else if (t == "sit") plan.sit_epochs = epochs;
    else fail(Errc::invalid_argument, "unknown task " + t);
  };
  for (char c : tasks) {
    if (c == ',') {
      apply(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  apply(cur);
  plan.learning_rate = lr;
  plan.batch_size = batch;
  plan.seed = seed;

  EncoderConfig cfg;
  cfg.hidden_dim = hidden;
  cfg.n_layers = layers;
  cfg.n_heads = heads;
  cfg.vocab_size = vocab;
  cfg.seed = derive_seed(seed, "init");
  ModelOptions opt;
  opt.mono_grained = mono;
  opt.sit_memory = sit_memory;

  std::vector<Document> vocab_docs = split.d_n;
  vocab_docs.insert(vocab_docs.end(), split.d_g.begin(), split.d_g.end());
  Checkpoint ckpt0 =
      init_checkpoint(cfg, opt, vocab_docs, corpus.gold_space, corpus.synthetic_space);
  fs::create_directories(out_dir);
  std::string p0 = (fs::path(out_dir) / "ckpt-F_0.bin").string();
  save_checkpoint(ckpt0, p0);

  TrainLog log;
  Checkpoint adapted = run_adaptation(split.d_n, ckpt0, plan, &log);
  std::string pn = (fs::path(out_dir) / ("ckpt-" + stage_name(adapted.stage) + ".bin")).string();
  save_checkpoint(adapted, pn);
  write_loss_csv((fs::path(out_dir) / "loss.csv").string(), log);

  nlohmann::json j = {{"initial", p0},
                      {"adapted", pn},
                      {"stage", stage_name(adapted.stage)},
                      {"plan_hash", plan.hash()},
                      {"metrics", adapted.metrics}};
  return j.dump();
}

std::string py_finetune(const std::string& ckpt_path, const std::string& corpus_path,
                        const std::string& out_dir, double ratio, int epochs, double lr,
                        int batch, const std::string& task_mode, uint64_t seed) {
  Checkpoint start = load_checkpoint(ckpt_path);
  Corpus corpus = load_corpus(corpus_path);
  CollectionSplit split = corpus.into_split();
  require(!split.d_g.empty(), Errc::insufficient_documents, "corpus has no guidance split");
  AdaptationPlan plan;
  plan.learning_rate = lr;
  plan.batch_size = batch;
  plan.seed = seed;
  plan.task_mode = task_mode;
  plan.finetune_epochs = epochs;
  TrainLog log;
  Checkpoint tuned = run_finetune(split.d_g, start, plan, ratio, &log);
  fs::create_directories(out_dir);
  std::string pt = (fs::path(out_dir) / ("ckpt-" + stage_name(tuned.stage) + ".bin")).string();
  save_checkpoint(tuned, pt);
  nlohmann::json j = {{"checkpoint", pt},
                      {"stage", stage_name(tuned.stage)},
                      {"plan_hash", plan.hash()},
                      {"metrics", tuned.metrics}};
  return j.dump();
}

std::vector<Document> pick_eval_docs(const Corpus& corpus) {
  CollectionSplit split = corpus.into_split();
  if (!split.d_i.empty()) return split.d_i;
  return corpus.docs;
}

std::string py_infer(const std::string& ckpt_path, const std::string& corpus_path,
                     const std::string& out_file, const std::string& task) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  Corpus corpus = load_corpus(corpus_path);
  std::vector<Document> docs = pick_eval_docs(corpus);
  require(!docs.empty(), Errc::insufficient_documents, "nothing to run inference on");
  InferenceResult res = run_inference(docs, ckpt, task);
  fs::path p(out_file);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  write_predictions_jsonl(res, out_file);
  nlohmann::json j = {{"predictions", out_file},
                      {"tokens", res.tokens.size()},
                      {"queries", res.queries.size()}};
  return j.dump();
}

std::string py_evaluate(const std::string& corpus_path, const std::string& predictions,
                        const std::string& ckpt_path, const std::string& task) {
  Corpus corpus = load_corpus(corpus_path);
  MetricsReport rep;
  if (!predictions.empty()) {
    rep = evaluate_predictions(read_predictions_jsonl(predictions), corpus.gold_space);
    rep.config_fingerprint = content_hash(predictions);
  } else {
    require(!ckpt_path.empty(), Errc::invalid_argument,
            "evaluate needs predictions or a checkpoint");
    Checkpoint ckpt = load_checkpoint(ckpt_path);
    std::vector<Document> docs = pick_eval_docs(corpus);
    require(!docs.empty(), Errc::insufficient_documents, "nothing to evaluate on");
    rep = evaluate_checkpoint(docs, ckpt, task);
  }
  return rep.to_json().dump();
}

}  // namespace

PYBIND11_MODULE(_david, m) {
  m.doc() = "joint-grained document understanding workbench";

  m.def("gen_corpus", &py_gen_corpus, py::arg("out"), py::arg("n") = 500,
        py::arg("kind") = "form", py::arg("seed") = 0, py::arg("fields_min") = 4,
        py::arg("fields_max") = 9, "Generate a synthetic corpus; returns document count.");

  m.def("annotate_json", &py_annotate, py::arg("corpus_in"), py::arg("corpus_out"),
        py::arg("layout_noise") = 0.3, py::arg("text_drop") = 0.15,
        py::arg("merge_split") = 0.06, py::arg("provider") = "rule", py::arg("max_qa") = 8,
        py::arg("n") = -1, py::arg("g") = -1, py::arg("i") = -1, py::arg("seed") = 0,
        "Split the corpus and synthesize noisy annotations; returns a JSON report.");

  m.def("adapt_json", &py_adapt, py::arg("corpus"), py::arg("out_dir"),
        py::arg("tasks") = "sds,sst,sit", py::arg("epochs") = 1, py::arg("lr") = 2e-4,
        py::arg("batch") = 2, py::arg("seed") = 0, py::arg("hidden") = 64,
        py::arg("layers") = 2, py::arg("heads") = 2, py::arg("vocab") = 2000,
        py::arg("mono") = false, py::arg("sit_memory") = "query_tokens",
        "Run the adaptation stages; returns a JSON report.");

  m.def("finetune_json", &py_finetune, py::arg("ckpt"), py::arg("corpus"), py::arg("out_dir"),
        py::arg("ratio") = 1.0, py::arg("epochs") = 8, py::arg("lr") = 2e-4,
        py::arg("batch") = 2, py::arg("task_mode") = "both", py::arg("seed") = 0,
        "Fine-tune task heads on the guidance split; returns a JSON report.");

  m.def("infer_json", &py_infer, py::arg("ckpt"), py::arg("corpus"), py::arg("out"),
        py::arg("task") = "both", "Run inference; returns a JSON report.");

  m.def("evaluate_json", &py_evaluate, py::arg("corpus"), py::arg("predictions") = "",
        py::arg("ckpt") = "", py::arg("task") = "both",
        "Score a prediction dump or a checkpoint; returns JSON metrics.");

  m.def("micro_f1", &micro_f1, py::arg("pred"), py::arg("gold"), py::arg("outside_id") = 0);
  m.def("anls", &anls_score, py::arg("pred"), py::arg("gold"), py::arg("threshold") = 0.5);
  m.def("edit_distance", &levenshtein, py::arg("a"), py::arg("b"));
  m.def("jaccard", &jaccard_similarity, py::arg("a"), py::arg("b"));
  m.def("corruption_probability", &corruption_probability, py::arg("lam"));
  m.def("derive_seed", py::overload_cast<uint64_t, const std::string&>(&derive_seed),
        py::arg("base"), py::arg("stream"));
}
