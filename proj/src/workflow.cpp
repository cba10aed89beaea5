#include "david/workflow.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <unordered_map>

#include "david/corpus_io.hpp"

namespace david {

void AdaptationPlan::validate() const {
  require(sds_epochs >= 0 && sst_epochs >= 0 && sit_epochs >= 0, Errc::invalid_argument,
          "epoch counts must be non-negative");
  require(learning_rate > 0.0, Errc::invalid_argument, "learning rate must be positive");
  require(batch_size >= 1, Errc::invalid_argument, "batch size must be at least 1");
  require(task_mode == "fine" || task_mode == "coarse" || task_mode == "both",
          Errc::invalid_argument, "task_mode must be fine, coarse or both");
  require(finetune_epochs >= 1, Errc::invalid_argument, "finetune_epochs must be at least 1");
}

nlohmann::json AdaptationPlan::to_json() const {
  return {{"sds_epochs", sds_epochs},
          {"sst_epochs", sst_epochs},
          {"sit_epochs", sit_epochs},
          {"freeze_after_sds", freeze_after_sds},
          {"learning_rate", learning_rate},
          {"batch_size", batch_size},
          {"seed", seed},
          {"task_mode", task_mode},
          {"finetune_epochs", finetune_epochs},
          {"finetune_update_decoders", finetune_update_decoders}};
}

AdaptationPlan AdaptationPlan::from_json(const nlohmann::json& j) {
  AdaptationPlan p;
  p.sds_epochs = j.value("sds_epochs", p.sds_epochs);
  p.sst_epochs = j.value("sst_epochs", p.sst_epochs);
  p.sit_epochs = j.value("sit_epochs", p.sit_epochs);
  p.freeze_after_sds = j.value("freeze_after_sds", p.freeze_after_sds);
  p.learning_rate = j.value("learning_rate", p.learning_rate);
  p.batch_size = j.value("batch_size", p.batch_size);
  p.seed = j.value("seed", p.seed);
  p.task_mode = j.value("task_mode", p.task_mode);
  p.finetune_epochs = j.value("finetune_epochs", p.finetune_epochs);
  p.finetune_update_decoders = j.value("finetune_update_decoders", p.finetune_update_decoders);
  p.validate();
  return p;
}

std::string AdaptationPlan::hash() const { return hex64(fnv1a64(to_json().dump())); }

std::string stage_name(Stage s) {
  switch (s) {
    case Stage::f0: return "F_0";
    case Stage::ft: return "F_t";
    case Stage::fn: return "F_n";
    case Stage::fnt: return "F_nt";
  }
  fail(Errc::invalid_argument, "bad stage value");
}

Stage stage_from_name(const std::string& s) {
  if (s == "F_0") return Stage::f0;
  if (s == "F_t") return Stage::ft;
  if (s == "F_n") return Stage::fn;
  if (s == "F_nt") return Stage::fnt;
  fail(Errc::invalid_argument, "unknown stage tag " + s);
}

// ---------------------------------------------------------------- optimizer

Adam::Adam(ParamStore& params, double lr) : params_(params), lr_(lr) {
  require(lr >= 0.0, Errc::invalid_argument, "learning rate must be non-negative");
  m_.reserve(static_cast<size_t>(params.count()));
  v_.reserve(static_cast<size_t>(params.count()));
  for (int i = 0; i < params.count(); ++i) {
    const Mat& val = params.entry(i).value;
    m_.emplace_back(val.rows, val.cols);
    v_.emplace_back(val.rows, val.cols);
  }
}

void Adam::step() {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  ++t_;
  double bc1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (int i = 0; i < params_.count(); ++i) {
    if (params_.entry_frozen(i)) continue;
    ParamEntry& e = params_.entry(i);
    Mat& m = m_[static_cast<size_t>(i)];
    Mat& v = v_[static_cast<size_t>(i)];
    for (size_t k = 0; k < e.value.a.size(); ++k) {
      double g = e.grad.a[k];
      m.a[k] = b1 * m.a[k] + (1.0 - b1) * g;
      v.a[k] = b2 * v.a[k] + (1.0 - b2) * g * g;
      e.value.a[k] -= lr_ * (m.a[k] / bc1) / (std::sqrt(v.a[k] / bc2) + eps);
    }
  }
}

void write_loss_csv(const std::string& path, const TrainLog& log, bool append) {
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  require(out.good(), Errc::io_failure, "cannot write '" + path + "'");
  if (!append) out << "step,stage,loss\n";
  char buf[64];
  for (const auto& r : log.rows) {
    std::snprintf(buf, sizeof buf, "%.17g", r.loss);
    out << r.step << ',' << r.stage << ',' << buf << '\n';
  }
  require(out.good(), Errc::io_failure, "write failed for '" + path + "'");
}

// ------------------------------------------------------------- checkpoints

namespace {

constexpr const char* kMagic = "DAVCKPT1";

nlohmann::json space_to_json(const LabelSpace& s) {
  return {{"name", s.name}, {"categories", s.categories}};
}

LabelSpace space_from_json(const nlohmann::json& j) {
  LabelSpace s;
  s.name = j.at("name").get<std::string>();
  s.categories = j.at("categories").get<std::vector<std::string>>();
  s.validate();
  return s;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const ParamStore& ps = ckpt.model.params;
  nlohmann::json manifest = nlohmann::json::array();
  for (int i = 0; i < ps.count(); ++i) {
    const ParamEntry& e = ps.entry(i);
    manifest.push_back({{"name", e.name},
                        {"rows", e.value.rows},
                        {"cols", e.value.cols},
                        {"dtype", "f4"},
                        {"group", e.group},
                        {"frozen", ps.is_frozen(e.group)}});
  }
  nlohmann::json header = {
      {"stage", stage_name(ckpt.stage)},
      {"plan_hash", ckpt.plan_hash},
      {"metrics", ckpt.metrics},
      {"config", ckpt.model.cfg.to_json()},
      {"options", ckpt.model.opt.to_json()},
      {"vocab", ckpt.model.vocab.words},
      {"gold_space", space_to_json(ckpt.model.gold_space)},
      {"synthetic_space", space_to_json(ckpt.model.synthetic_space)},
      {"frozen", std::vector<std::string>(ps.frozen_groups().begin(), ps.frozen_groups().end())},
      {"manifest", manifest}};
  std::string hjson = header.dump();
  std::string blob = kMagic;
  uint32_t len = static_cast<uint32_t>(hjson.size());
  for (int b = 0; b < 4; ++b) blob.push_back(static_cast<char>((len >> (8 * b)) & 0xff));
  blob += hjson;
  blob += ps.payload_f32();
  write_file(path, blob);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::string blob = read_file(path);
  require(blob.size() >= 12 && blob.compare(0, 8, kMagic) == 0, Errc::io_failure,
          "'" + path + "' is not a checkpoint file");
  uint32_t len = 0;
  for (int b = 0; b < 4; ++b)
    len |= static_cast<uint32_t>(static_cast<unsigned char>(blob[8 + static_cast<size_t>(b)]))
           << (8 * b);
  require(blob.size() >= 12 + static_cast<size_t>(len), Errc::io_failure,
          "truncated checkpoint header in '" + path + "'");
  nlohmann::json header = nlohmann::json::parse(blob.substr(12, len), nullptr, false);
  require(!header.is_discarded(), Errc::io_failure, "corrupt checkpoint header in '" + path + "'");

  EncoderConfig cfg = EncoderConfig::from_json(header.at("config"));
  ModelOptions opt = ModelOptions::from_json(header.at("options"));
  Vocab vocab = Vocab::from_words(header.at("vocab").get<std::vector<std::string>>());
  LabelSpace gold = space_from_json(header.at("gold_space"));
  LabelSpace synthetic = space_from_json(header.at("synthetic_space"));

  Checkpoint out;
  out.model = Model::build(cfg, opt, std::move(vocab), gold, synthetic);
  out.stage = stage_from_name(header.at("stage").get<std::string>());
  out.plan_hash = header.value("plan_hash", std::string());
  out.metrics = header.value("metrics", nlohmann::json::object());

  const auto& manifest = header.at("manifest");
  require(static_cast<int>(manifest.size()) == out.model.params.count(), Errc::io_failure,
          "checkpoint manifest does not match this configuration");
  for (int i = 0; i < out.model.params.count(); ++i) {
    const ParamEntry& e = out.model.params.entry(i);
    const auto& m = manifest[static_cast<size_t>(i)];
    require(m.at("name") == e.name && m.at("rows") == e.value.rows && m.at("cols") == e.value.cols,
            Errc::io_failure, "checkpoint entry mismatch at " + e.name);
  }
  out.model.params.load_payload_f32(blob.substr(12 + static_cast<size_t>(len)));
  std::set<std::string> frozen;
  for (const auto& g : header.at("frozen")) frozen.insert(g.get<std::string>());
  out.model.params.set_frozen(frozen);
  return out;
}

// ----------------------------------------------------------------- helpers

namespace {

struct Encoded {
  Mat t_gde, e_fused, t_joint, e_joint;
};

Encoded encode_all(Model& model, const Document& doc, const DocContext& ctx) {
  Tape t(&model.params);
  NodeId tg = model.encode_tokens_gde(t, doc, ctx);
  NodeId ef = model.encode_entities(t, doc, ctx, tg);
  auto [tj, ej] = model.joint_encode(t, tg, ef);
  return {t.val(tg), t.val(ef), t.val(tj), t.val(ej)};
}

struct QueryVecs {
  Mat seq, pooled;
};

const QueryVecs* cached_query(Model& model,
                              std::unordered_map<std::string, QueryVecs>& cache,
                              const std::string& key_text) {
  auto it = cache.find(key_text);
  if (it == cache.end()) {
    Tape t(&model.params);
    Model::Query q = model.encode_query(t, key_text);
    it = cache.emplace(key_text, QueryVecs{t.val(q.seq), t.val(q.pooled)}).first;
  }
  return &it->second;
}

using SampleFn = std::function<NodeId(Tape&)>;

// epochs of shuffled accumulate-and-step batches; returns last-epoch mean loss
double run_epochs(Model& model, const std::vector<SampleFn>& samples, int epochs,
                  const AdaptationPlan& plan, const std::string& stage_label,
                  uint64_t shuffle_seed, TrainLog* log, int& step) {
  std::vector<size_t> order(samples.size());
  std::iota(order.begin(), order.end(), size_t{0});
  double epoch_sum = 0.0;
  size_t epoch_n = 0;
  for (int e = 0; e < epochs; ++e) {
    Rng rng(derive_seed(shuffle_seed, "epoch-" + std::to_string(e)));
    rng.shuffle(order);
    Adam opt(model.params, plan.learning_rate);
    epoch_sum = 0.0;
    epoch_n = 0;
    for (size_t b = 0; b < order.size(); b += static_cast<size_t>(plan.batch_size)) {
      size_t bend = std::min(order.size(), b + static_cast<size_t>(plan.batch_size));
      double inv = 1.0 / static_cast<double>(bend - b);
      model.params.zero_grad();
      double batch_loss = 0.0;
      for (size_t k = b; k < bend; ++k) {
        Tape t(&model.params);
        NodeId loss = samples[order[k]](t);
        batch_loss += t.val(loss)(0, 0);
        t.backward(t.scale(loss, inv));
      }
      opt.step();
      ++step;
      double mean_loss = batch_loss * inv;
      if (log) log->rows.push_back({step, stage_label, mean_loss});
      epoch_sum += mean_loss;
      ++epoch_n;
    }
  }
  return epoch_n ? epoch_sum / static_cast<double>(epoch_n) : 0.0;
}

std::unordered_map<int, int> entity_index_by_id(const Document& d) {
  std::unordered_map<int, int> m;
  for (size_t j = 0; j < d.entities.size(); ++j) m[d.entities[j].id] = static_cast<int>(j);
  return m;
}

}  // namespace

// ------------------------------------------------------------------ stages

Checkpoint init_checkpoint(const EncoderConfig& cfg, const ModelOptions& opt,
                           const std::vector<Document>& vocab_docs, const LabelSpace& gold_space,
                           const LabelSpace& synthetic_space) {
  Checkpoint c;
  c.model = Model::build(cfg, opt, Vocab::build(vocab_docs, cfg.vocab_size), gold_space,
                         synthetic_space);
  c.stage = Stage::f0;
  return c;
}

Checkpoint run_adaptation(const std::vector<Document>& d_n, const Checkpoint& start,
                          const AdaptationPlan& plan, TrainLog* log) {
  plan.validate();
  require(start.stage == Stage::f0, Errc::invalid_argument,
          "adaptation starts from an untrained checkpoint");
  require(!d_n.empty(), Errc::insufficient_documents, "adaptation needs documents");
  bool fine = plan.task_mode != "coarse";
  bool coarse = plan.task_mode != "fine";
  int planned =
      plan.sds_epochs + (fine ? plan.sst_epochs : 0) + (coarse ? plan.sit_epochs : 0);
  require(planned > 0, Errc::invalid_argument, "adaptation plan enables no training stages");
  for (const auto& d : d_n)
    require(d.annotation_provenance == Provenance::synthetic, Errc::invalid_argument,
            "adaptation pool must carry synthetic annotations: " + d.id);

  Checkpoint out = start;
  Model& model = out.model;
  std::vector<DocContext> ctxs;
  ctxs.reserve(d_n.size());
  for (const auto& d : d_n) ctxs.push_back(DocContext::build(d));

  int step = 0;
  nlohmann::json final_loss = nlohmann::json::object();

  if (plan.sds_epochs > 0) {
    std::vector<SampleFn> samples;
    for (size_t i = 0; i < d_n.size(); ++i) {
      const Document& d = d_n[i];
      const DocContext& cx = ctxs[i];
      if (d.tokens.empty() || d.entities.empty()) continue;
      samples.push_back([&model, &d, &cx](Tape& t) {
        NodeId tg = model.encode_tokens_gde(t, d, cx);
        NodeId ef = model.encode_entities(t, d, cx, tg);
        auto [tj, ej] = model.joint_encode(t, tg, ef);
        return sds_loss(t, model.alignment_scores(t, tj, ej), d.relation_matrix);
      });
    }
    require(!samples.empty(), Errc::missing_annotation,
            "alignment stage found no documents with tokens and entities");
    final_loss["sds"] = run_epochs(model, samples, plan.sds_epochs, plan, "sds",
                                   derive_seed(plan.seed, "sds"), log, step);
  }

  if (plan.freeze_after_sds)
    for (const auto& g : groups::infuser_freeze_set()) model.params.freeze_group(g);

  bool frozen_encoders = true;
  for (const auto& g : groups::infuser_freeze_set())
    frozen_encoders = frozen_encoders && model.params.is_frozen(g);

  std::vector<Encoded> enc;
  bool need_enc = (fine && plan.sst_epochs > 0) || (coarse && plan.sit_epochs > 0);
  if (frozen_encoders && need_enc) {
    enc.reserve(d_n.size());
    for (size_t i = 0; i < d_n.size(); ++i) enc.push_back(encode_all(model, d_n[i], ctxs[i]));
  }
  std::unordered_map<std::string, QueryVecs> qcache;

  if (fine && plan.sst_epochs > 0) {
    std::vector<SampleFn> samples;
    for (size_t i = 0; i < d_n.size(); ++i) {
      const Document& d = d_n[i];
      if (d.tokens.empty()) continue;
      std::vector<int> labels;
      labels.reserve(d.tokens.size());
      for (const auto& tok : d.tokens) {
        require(tok.synthetic_label.has_value(), Errc::missing_annotation,
                "tag distillation needs synthetic labels on every token of " + d.id);
        labels.push_back(*tok.synthetic_label);
      }
      if (frozen_encoders) {
        samples.push_back([&model, &enc, i, labels](Tape& t) {
          NodeId tj = t.constant(enc[i].t_joint);
          NodeId ej = t.constant(enc[i].e_joint);
          return sst_loss(t, model.sst_decode(t, tj, ej).logits, labels);
        });
      } else {
        const DocContext& cx = ctxs[i];
        samples.push_back([&model, &d, &cx, labels](Tape& t) {
          NodeId tg = model.encode_tokens_gde(t, d, cx);
          NodeId ef = model.encode_entities(t, d, cx, tg);
          auto [tj, ej] = model.joint_encode(t, tg, ef);
          return sst_loss(t, model.sst_decode(t, tj, ej).logits, labels);
        });
      }
    }
    require(!samples.empty(), Errc::missing_annotation,
            "tag distillation found no usable documents");
    final_loss["sst"] = run_epochs(model, samples, plan.sst_epochs, plan, "sst",
                                   derive_seed(plan.seed, "sst"), log, step);
  }

  if (coarse && plan.sit_epochs > 0) {
    std::vector<SampleFn> samples;
    for (size_t i = 0; i < d_n.size(); ++i) {
      const Document& d = d_n[i];
      if (d.entities.empty() || d.qa_pairs.empty()) continue;
      auto by_id = entity_index_by_id(d);
      for (const auto& pair : d.qa_pairs) {
        auto it = by_id.find(pair.target_entity);
        require(it != by_id.end(), Errc::missing_annotation,
                "pointer distillation target missing from " + d.id);
        int tgt = it->second;
        require(!pair.key_text.empty(), Errc::missing_annotation,
                "pointer distillation needs a key text in " + d.id);
        if (frozen_encoders) {
          const QueryVecs* qv = cached_query(model, qcache, pair.key_text);
          samples.push_back([&model, &enc, i, qv, tgt](Tape& t) {
            NodeId tj = t.constant(enc[i].t_joint);
            NodeId ej = t.constant(enc[i].e_joint);
            Model::Query q{t.constant(qv->seq), t.constant(qv->pooled)};
            return sit_loss(t, model.sit_decode(t, ej, tj, q).scores, tgt);
          });
        } else {
          const DocContext& cx = ctxs[i];
          std::string key = pair.key_text;
          samples.push_back([&model, &d, &cx, key, tgt](Tape& t) {
            NodeId tg = model.encode_tokens_gde(t, d, cx);
            NodeId ef = model.encode_entities(t, d, cx, tg);
            auto [tj, ej] = model.joint_encode(t, tg, ef);
            Model::Query q = model.encode_query(t, key);
            return sit_loss(t, model.sit_decode(t, ej, tj, q).scores, tgt);
          });
        }
      }
    }
    require(!samples.empty(), Errc::missing_annotation,
            "pointer distillation found no inquiry pairs");
    final_loss["sit"] = run_epochs(model, samples, plan.sit_epochs, plan, "sit",
                                   derive_seed(plan.seed, "sit"), log, step);
  }

  out.stage = Stage::fn;
  out.plan_hash = plan.hash();
  out.metrics["final_loss"] = final_loss;
  return out;
}

Checkpoint run_finetune(const std::vector<Document>& d_g, const Checkpoint& start,
                        const AdaptationPlan& plan, double guidance_ratio, TrainLog* log) {
  plan.validate();
  require(guidance_ratio > 0.0 && guidance_ratio <= 1.0, Errc::invalid_argument,
          "guidance ratio must be in (0,1]");
  require(!d_g.empty(), Errc::insufficient_documents, "fine-tuning needs guidance documents");
  double want = guidance_ratio * static_cast<double>(d_g.size());
  require(want >= 1.0 - 1e-9, Errc::empty_guidance,
          "guidance ratio selects no documents; use inference directly for zero-shot");
  for (const auto& d : d_g)
    require(d.annotation_provenance == Provenance::gold, Errc::invalid_argument,
            "guidance documents must carry gold annotations: " + d.id);

  size_t n_train = static_cast<size_t>(std::ceil(want - 1e-9));
  n_train = std::min(n_train, d_g.size());
  std::vector<size_t> order(d_g.size());
  std::iota(order.begin(), order.end(), size_t{0});
  Rng shuffle_rng(derive_seed(plan.seed, "guidance-shuffle"));
  shuffle_rng.shuffle(order);
  order.resize(n_train);

  bool fine = plan.task_mode != "coarse";
  bool coarse = plan.task_mode != "fine";

  Checkpoint out = start;
  Model& model = out.model;

  // the checkpoint keeps the adaptation freeze; training additionally pins
  // everything that is not part of the task pathway being tuned
  std::set<std::string> semantic = start.model.params.frozen_groups();
  for (const auto& g : groups::infuser_freeze_set()) semantic.insert(g);
  std::set<std::string> trainable;
  if (fine) {
    trainable.insert(groups::tag_head);
    if (plan.finetune_update_decoders) trainable.insert(groups::sst_decoder);
  }
  if (coarse) {
    trainable.insert(groups::er_head);
    if (plan.finetune_update_decoders) trainable.insert(groups::sit_decoder);
  }
  std::set<std::string> working;
  for (const auto& g : model.params.group_names())
    if (trainable.count(g) == 0) working.insert(g);
  model.params.set_frozen(working);

  std::vector<Encoded> enc(d_g.size());
  for (size_t i : order) enc[i] = encode_all(model, d_g[i], DocContext::build(d_g[i]));
  std::unordered_map<std::string, QueryVecs> qcache;

  std::vector<SampleFn> samples;
  for (size_t i : order) {
    const Document& d = d_g[i];
    if (fine && !d.tokens.empty()) {
      std::vector<int> labels;
      labels.reserve(d.tokens.size());
      for (const auto& tok : d.tokens) {
        require(tok.gold_label.has_value(), Errc::missing_label,
                "fine-tuning needs gold labels on every token of " + d.id);
        labels.push_back(*tok.gold_label);
      }
      samples.push_back([&model, &enc, i, labels](Tape& t) {
        NodeId tg = t.constant(enc[i].t_gde);
        NodeId tj = t.constant(enc[i].t_joint);
        NodeId ej = t.constant(enc[i].e_joint);
        NodeId tdec = model.sst_decode(t, tj, ej).states;
        return sst_loss(t, model.sequence_tag_head(t, tg, tj, tdec), labels);
      });
    }
    if (coarse && !d.entities.empty() && !d.qa_pairs.empty()) {
      auto by_id = entity_index_by_id(d);
      for (const auto& pair : d.qa_pairs) {
        auto it = by_id.find(pair.target_entity);
        require(it != by_id.end(), Errc::missing_annotation,
                "guidance inquiry target missing from " + d.id);
        require(!pair.key_text.empty(), Errc::missing_annotation,
                "guidance inquiry needs a key text in " + d.id);
        const QueryVecs* qv = cached_query(model, qcache, pair.key_text);
        int tgt = it->second;
        samples.push_back([&model, &enc, i, qv, tgt](Tape& t) {
          NodeId tj = t.constant(enc[i].t_joint);
          NodeId ej = t.constant(enc[i].e_joint);
          Model::Query q{t.constant(qv->seq), t.constant(qv->pooled)};
          NodeId edec = model.sit_decode(t, ej, tj, q).states;
          return sit_loss(t, model.entity_retrieval_head(t, ej, edec, q).scores, tgt);
        });
      }
    }
  }
  require(!samples.empty(), Errc::missing_annotation,
          "fine-tuning found no usable samples in the guidance set");

  int step = 0;
  TrainLog local;
  double last = run_epochs(model, samples, plan.finetune_epochs, plan, "finetune",
                           derive_seed(plan.seed, "finetune"), log ? log : &local, step);

  model.params.set_frozen(semantic);
  out.stage = (start.stage == Stage::fn || start.stage == Stage::fnt) ? Stage::fnt : Stage::ft;
  out.plan_hash = plan.hash();
  out.metrics["final_loss"]["finetune"] = last;
  out.metrics["guidance_docs"] = static_cast<int>(n_train);
  return out;
}

// --------------------------------------------------------------- inference

InferenceResult run_inference(const std::vector<Document>& d_i, const Checkpoint& ckpt,
                              const std::string& task_mode) {
  require(task_mode == "fine" || task_mode == "coarse" || task_mode == "both",
          Errc::invalid_argument, "task_mode must be fine, coarse or both");
  bool fine = task_mode != "coarse";
  bool coarse = task_mode != "fine";
  // the adaptation pointer is the only trained retrieval pathway before any
  // fine-tune touches the retrieval head
  bool pointer_path = ckpt.stage == Stage::f0 || ckpt.stage == Stage::fn;

  Model model = ckpt.model;
  InferenceResult res;
  for (const auto& d : d_i) {
    if (d.tokens.empty() && d.entities.empty()) continue;
    DocContext cx = DocContext::build(d);
    Tape t(&model.params);
    NodeId tg = model.encode_tokens_gde(t, d, cx);
    NodeId ef = model.encode_entities(t, d, cx, tg);
    auto [tj, ej] = model.joint_encode(t, tg, ef);
    if (fine && !d.tokens.empty()) {
      NodeId tdec = model.sst_decode(t, tj, ej).states;
      NodeId logits = model.sequence_tag_head(t, tg, tj, tdec);
      std::vector<int> preds = argmax_rows(t.val(logits));
      for (size_t i = 0; i < d.tokens.size(); ++i)
        res.tokens.push_back({d.id, d.tokens[i].id, d.tokens[i].gold_label.value_or(-1),
                              preds[i]});
    }
    if (coarse && !d.entities.empty()) {
      for (size_t qi = 0; qi < d.qa_pairs.size(); ++qi) {
        const QAPair& pair = d.qa_pairs[qi];
        if (pair.key_text.empty()) continue;
        Model::Query q = model.encode_query(t, pair.key_text);
        auto sit = model.sit_decode(t, ej, tj, q);
        int idx = pointer_path
                      ? argmax_row(t.val(sit.dist))
                      : argmax_row(t.val(model.entity_retrieval_head(t, ej, sit.states, q).dist));
        res.queries.push_back({d.id, static_cast<int>(qi), pair.key_text, pair.target_entity,
                               d.entities[static_cast<size_t>(idx)].id, pair.answer_text,
                               d.entities[static_cast<size_t>(idx)].text});
      }
    }
  }
  return res;
}

void write_predictions_jsonl(const InferenceResult& res, const std::string& path) {
  std::string out;
  for (const auto& p : res.tokens) {
    nlohmann::json j = {{"doc", p.doc_id},
                        {"kind", "token"},
                        {"index", p.token_id},
                        {"gold", p.gold_label},
                        {"pred", p.pred_label}};
    out += j.dump();
    out += '\n';
  }
  for (const auto& p : res.queries) {
    nlohmann::json j = {{"doc", p.doc_id},       {"kind", "query"},
                        {"index", p.query_index}, {"key", p.key_text},
                        {"gold", p.gold_entity},  {"pred", p.pred_entity},
                        {"gold_text", p.gold_text}, {"pred_text", p.pred_text}};
    out += j.dump();
    out += '\n';
  }
  write_file(path, out);
}

InferenceResult read_predictions_jsonl(const std::string& path) {
  std::string content = read_file(path);
  InferenceResult res;
  size_t pos = 0;
  int line_no = 0;
  while (pos < content.size()) {
    size_t nl = content.find('\n', pos);
    if (nl == std::string::npos) nl = content.size();
    std::string line = content.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    require(!j.is_discarded(), Errc::io_failure,
            "bad prediction line " + std::to_string(line_no) + " in '" + path + "'");
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "token") {
      res.tokens.push_back({j.at("doc").get<std::string>(), j.at("index").get<int>(),
                            j.at("gold").get<int>(), j.at("pred").get<int>()});
    } else if (kind == "query") {
      res.queries.push_back({j.at("doc").get<std::string>(), j.at("index").get<int>(),
                             j.value("key", std::string()), j.at("gold").get<int>(),
                             j.at("pred").get<int>(), j.value("gold_text", std::string()),
                             j.value("pred_text", std::string())});
    } else {
      fail(Errc::io_failure, "unknown prediction kind " + kind);
    }
  }
  return res;
}

}  // namespace david
