#include "david/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "david/text.hpp"

namespace david {

void EncoderConfig::validate() const {
  require(hidden_dim > 0 && n_layers > 0 && n_heads > 0, Errc::invalid_argument,
          "encoder dims must be positive");
  require(hidden_dim % n_heads == 0, Errc::invalid_argument,
          "hidden_dim must be divisible by n_heads");
  require(vocab_size >= 2, Errc::invalid_argument, "vocab_size must leave room for words");
  require(max_tokens > 0 && max_entities > 0, Errc::invalid_argument,
          "sequence caps must be positive");
  require(dropout >= 0.0 && dropout < 1.0, Errc::invalid_argument, "dropout out of range");
}

nlohmann::json EncoderConfig::to_json() const {
  return {{"vocab_size", vocab_size}, {"hidden_dim", hidden_dim}, {"n_layers", n_layers},
          {"n_heads", n_heads},       {"max_tokens", max_tokens}, {"max_entities", max_entities},
          {"dropout", dropout},       {"seed", seed}};
}

EncoderConfig EncoderConfig::from_json(const nlohmann::json& j) {
  EncoderConfig c;
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  c.n_layers = j.value("n_layers", c.n_layers);
  c.n_heads = j.value("n_heads", c.n_heads);
  c.max_tokens = j.value("max_tokens", c.max_tokens);
  c.max_entities = j.value("max_entities", c.max_entities);
  c.dropout = j.value("dropout", c.dropout);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

nlohmann::json ModelOptions::to_json() const {
  return {{"mono_grained", mono_grained}, {"sit_memory", sit_memory}};
}

ModelOptions ModelOptions::from_json(const nlohmann::json& j) {
  ModelOptions o;
  o.mono_grained = j.value("mono_grained", o.mono_grained);
  o.sit_memory = j.value("sit_memory", o.sit_memory);
  require(o.sit_memory == "query_tokens" || o.sit_memory == "query_entities",
          Errc::invalid_argument, "sit_memory must be query_tokens or query_entities");
  return o;
}

Vocab Vocab::build(const std::vector<Document>& docs, int cap) {
  require(cap >= 2, Errc::invalid_argument, "vocab cap too small");
  std::map<std::string, long long> counts;
  for (const auto& d : docs)
    for (const auto& t : d.tokens) ++counts[normalize_word(t.text)];
  std::vector<std::pair<std::string, long long>> items(counts.begin(), counts.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> words;
  words.push_back("<unk>");
  for (const auto& [w, c] : items) {
    if (static_cast<int>(words.size()) >= cap) break;
    if (w == "<unk>") continue;
    words.push_back(w);
  }
  return from_words(std::move(words));
}

Vocab Vocab::from_words(std::vector<std::string> words) {
  require(!words.empty() && words[0] == "<unk>", Errc::invalid_argument,
          "vocab must start with <unk>");
  Vocab v;
  v.words = std::move(words);
  for (size_t i = 0; i < v.words.size(); ++i) v.index[v.words[i]] = static_cast<int>(i);
  return v;
}

int Vocab::id(const std::string& raw) const {
  auto it = index.find(normalize_word(raw));
  return it == index.end() ? 0 : it->second;
}

DocContext DocContext::build(const Document& doc) {
  DocContext ctx;
  RasterRGB raster = render_l2v(doc.page_width, doc.page_height);
  ctx.token_l2v.reserve(doc.tokens.size());
  for (const auto& t : doc.tokens) ctx.token_l2v.push_back(l2v_mean_channels(raster, t.bbox));
  ctx.entity_l2v.reserve(doc.entities.size());
  for (const auto& e : doc.entities) ctx.entity_l2v.push_back(l2v_mean_channels(raster, e.bbox));
  ctx.sketch = render_page_sketch(doc, EncoderConfig::sketch_size);
  return ctx;
}

namespace groups {
std::set<std::string> infuser_freeze_set() {
  return {token_encoder, entity_encoder, l2v, joint_encoder};
}
}  // namespace groups

void Model::add_encoder_params(Rng& rng, const std::string& prefix, int layers,
                               const std::string& group) {
  int h = cfg.hidden_dim;
  for (int l = 0; l < layers; ++l) {
    std::string p = prefix + ".l" + std::to_string(l);
    params.add(p + ".ln1.g", 1, h, group, Init::ones, rng);
    params.add(p + ".ln1.b", 1, h, group, Init::zeros, rng);
    for (const char* w : {".attn.wq", ".attn.wk", ".attn.wv", ".attn.wo"})
      params.add(p + w, h, h, group, Init::gauss, rng);
    for (const char* b : {".attn.bq", ".attn.bk", ".attn.bv", ".attn.bo"})
      params.add(p + b, 1, h, group, Init::zeros, rng);
    params.add(p + ".ln2.g", 1, h, group, Init::ones, rng);
    params.add(p + ".ln2.b", 1, h, group, Init::zeros, rng);
    params.add(p + ".ffn.w1", h, 4 * h, group, Init::gauss, rng);
    params.add(p + ".ffn.b1", 1, 4 * h, group, Init::zeros, rng);
    params.add(p + ".ffn.w2", 4 * h, h, group, Init::gauss, rng);
    params.add(p + ".ffn.b2", 1, h, group, Init::zeros, rng);
  }
  params.add(prefix + ".lnf.g", 1, h, group, Init::ones, rng);
  params.add(prefix + ".lnf.b", 1, h, group, Init::zeros, rng);
}

void Model::add_decoder_params(Rng& rng, const std::string& prefix, const std::string& group) {
  int h = cfg.hidden_dim;
  for (int l = 0; l < EncoderConfig::decoder_layers; ++l) {
    std::string p = prefix + ".l" + std::to_string(l);
    params.add(p + ".ln1.g", 1, h, group, Init::ones, rng);
    params.add(p + ".ln1.b", 1, h, group, Init::zeros, rng);
    for (const char* w : {".self.wq", ".self.wk", ".self.wv", ".self.wo"})
      params.add(p + w, h, h, group, Init::gauss, rng);
    for (const char* b : {".self.bq", ".self.bk", ".self.bv", ".self.bo"})
      params.add(p + b, 1, h, group, Init::zeros, rng);
    params.add(p + ".lnx.g", 1, h, group, Init::ones, rng);
    params.add(p + ".lnx.b", 1, h, group, Init::zeros, rng);
    for (const char* w : {".cross.wq", ".cross.wk", ".cross.wv", ".cross.wo"})
      params.add(p + w, h, h, group, Init::gauss, rng);
    for (const char* b : {".cross.bq", ".cross.bk", ".cross.bv", ".cross.bo"})
      params.add(p + b, 1, h, group, Init::zeros, rng);
    params.add(p + ".ln2.g", 1, h, group, Init::ones, rng);
    params.add(p + ".ln2.b", 1, h, group, Init::zeros, rng);
    params.add(p + ".ffn.w1", h, 4 * h, group, Init::gauss, rng);
    params.add(p + ".ffn.b1", 1, 4 * h, group, Init::zeros, rng);
    params.add(p + ".ffn.w2", 4 * h, h, group, Init::gauss, rng);
    params.add(p + ".ffn.b2", 1, h, group, Init::zeros, rng);
  }
  params.add(prefix + ".lnf.g", 1, h, group, Init::ones, rng);
  params.add(prefix + ".lnf.b", 1, h, group, Init::zeros, rng);
}

Model Model::build(const EncoderConfig& cfg, const ModelOptions& opt, Vocab vocab,
                   LabelSpace gold, LabelSpace synthetic) {
  cfg.validate();
  gold.validate();
  synthetic.validate();
  require(vocab.size() >= 1 && vocab.size() <= cfg.vocab_size, Errc::invalid_argument,
          "vocab larger than configured cap");
  Model m;
  m.cfg = cfg;
  m.opt = opt;
  m.vocab = std::move(vocab);
  m.gold_space = std::move(gold);
  m.synthetic_space = std::move(synthetic);

  Rng rng(derive_seed(cfg.seed, "model-init"));
  int h = cfg.hidden_dim;
  auto& P = m.params;

  P.add("tok.word_emb", m.vocab.size(), h, groups::token_encoder, Init::gauss, rng);
  for (const char* n : {"tok.bbox_x0", "tok.bbox_y0", "tok.bbox_x1", "tok.bbox_y1"})
    P.add(n, kCoordMax + 1, h, groups::token_encoder, Init::gauss, rng);
  P.add("tok.pos_emb", cfg.max_tokens, h, groups::token_encoder, Init::gauss, rng);
  m.add_encoder_params(rng, "tok.enc", cfg.n_layers, groups::token_encoder);

  P.add("l2v.proj.w", 3, h, groups::l2v, Init::gauss, rng);
  P.add("l2v.proj.b", 1, h, groups::l2v, Init::zeros, rng);

  P.add("vis.conv1.k", 4, 9, groups::entity_encoder, Init::gauss, rng);
  P.add("vis.conv1.b", 1, 4, groups::entity_encoder, Init::zeros, rng);
  P.add("vis.conv2.k", 8, 36, groups::entity_encoder, Init::gauss, rng);
  P.add("vis.conv2.b", 1, 8, groups::entity_encoder, Init::zeros, rng);
  P.add("vis.proj.w", 8, h, groups::entity_encoder, Init::gauss, rng);
  P.add("vis.proj.b", 1, h, groups::entity_encoder, Init::zeros, rng);
  P.add("fuse.w", 2 * h, h, groups::entity_encoder, Init::gauss, rng);
  P.add("fuse.b", 1, h, groups::entity_encoder, Init::zeros, rng);

  P.add("joint.seg_emb", 2, h, groups::joint_encoder, Init::gauss, rng);
  m.add_encoder_params(rng, "joint.enc", cfg.joint_layers(), groups::joint_encoder);

  P.add("sds.a.w", h, h, groups::sds_head, Init::gauss, rng);
  P.add("sds.a.b", 1, h, groups::sds_head, Init::zeros, rng);
  P.add("sds.b.w", h, h, groups::sds_head, Init::gauss, rng);
  P.add("sds.b.b", 1, h, groups::sds_head, Init::zeros, rng);

  m.add_decoder_params(rng, "sst.dec", groups::sst_decoder);
  P.add("sst.head.w", h, static_cast<int>(m.synthetic_space.size()), groups::sst_head,
        Init::gauss, rng);
  P.add("sst.head.b", 1, static_cast<int>(m.synthetic_space.size()), groups::sst_head,
        Init::zeros, rng);

  m.add_decoder_params(rng, "sit.dec", groups::sit_decoder);
  P.add("sit.ptr.w", h, h, groups::sit_head, Init::gauss, rng);
  P.add("sit.ptr.b", 1, h, groups::sit_head, Init::zeros, rng);

  P.add("tag.head.w", h, static_cast<int>(m.gold_space.size()), groups::tag_head, Init::gauss,
        rng);
  P.add("tag.head.b", 1, static_cast<int>(m.gold_space.size()), groups::tag_head, Init::zeros,
        rng);

  m.add_decoder_params(rng, "er.dec", groups::er_head);
  P.add("er.ptr.w", h, h, groups::er_head, Init::gauss, rng);
  P.add("er.ptr.b", 1, h, groups::er_head, Init::zeros, rng);

  return m;
}

NodeId Model::linear(Tape& t, const std::string& prefix, NodeId x) const {
  return t.add_row_broadcast(t.matmul(x, t.param(prefix + ".w")), t.param(prefix + ".b"));
}

NodeId Model::maybe_dropout(Tape& t, NodeId x) const {
  if (dropout_rng_ == nullptr || cfg.dropout <= 0.0) return x;
  return t.dropout(x, cfg.dropout, *dropout_rng_);
}

NodeId Model::mha(Tape& t, const std::string& prefix, NodeId xq, NodeId xkv) const {
  int h = cfg.hidden_dim;
  int heads = cfg.n_heads;
  int dh = h / heads;
  NodeId q = t.add_row_broadcast(t.matmul(xq, t.param(prefix + ".wq")), t.param(prefix + ".bq"));
  NodeId k = t.add_row_broadcast(t.matmul(xkv, t.param(prefix + ".wk")), t.param(prefix + ".bk"));
  NodeId v = t.add_row_broadcast(t.matmul(xkv, t.param(prefix + ".wv")), t.param(prefix + ".bv"));
  double inv = 1.0 / std::sqrt(static_cast<double>(dh));
  NodeId ctx = -1;
  for (int hd = 0; hd < heads; ++hd) {
    NodeId qh = t.slice_cols(q, hd * dh, (hd + 1) * dh);
    NodeId kh = t.slice_cols(k, hd * dh, (hd + 1) * dh);
    NodeId vh = t.slice_cols(v, hd * dh, (hd + 1) * dh);
    NodeId att = t.softmax_rows(t.scale(t.matmul_nt(qh, kh), inv));
    NodeId ch = t.matmul(att, vh);
    ctx = hd == 0 ? ch : t.concat_cols(ctx, ch);
  }
  return t.add_row_broadcast(t.matmul(ctx, t.param(prefix + ".wo")), t.param(prefix + ".bo"));
}

NodeId Model::ffn(Tape& t, const std::string& prefix, NodeId x) const {
  NodeId a = t.gelu(t.add_row_broadcast(t.matmul(x, t.param(prefix + ".w1")),
                                        t.param(prefix + ".b1")));
  return t.add_row_broadcast(t.matmul(a, t.param(prefix + ".w2")), t.param(prefix + ".b2"));
}

NodeId Model::encoder_stack(Tape& t, const std::string& prefix, int layers, NodeId x) const {
  for (int l = 0; l < layers; ++l) {
    std::string p = prefix + ".l" + std::to_string(l);
    NodeId h1 = t.layernorm_rows(x, t.param(p + ".ln1.g"), t.param(p + ".ln1.b"));
    x = t.add(x, maybe_dropout(t, mha(t, p + ".attn", h1, h1)));
    NodeId h2 = t.layernorm_rows(x, t.param(p + ".ln2.g"), t.param(p + ".ln2.b"));
    x = t.add(x, maybe_dropout(t, ffn(t, p + ".ffn", h2)));
  }
  return t.layernorm_rows(x, t.param(prefix + ".lnf.g"), t.param(prefix + ".lnf.b"));
}

NodeId Model::decoder_stack(Tape& t, const std::string& prefix, NodeId x,
                            std::optional<NodeId> memory) const {
  for (int l = 0; l < EncoderConfig::decoder_layers; ++l) {
    std::string p = prefix + ".l" + std::to_string(l);
    NodeId h1 = t.layernorm_rows(x, t.param(p + ".ln1.g"), t.param(p + ".ln1.b"));
    x = t.add(x, maybe_dropout(t, mha(t, p + ".self", h1, h1)));
    if (memory && t.rows(*memory) > 0) {
      NodeId h2 = t.layernorm_rows(x, t.param(p + ".lnx.g"), t.param(p + ".lnx.b"));
      x = t.add(x, maybe_dropout(t, mha(t, p + ".cross", h2, *memory)));
    }
    NodeId h3 = t.layernorm_rows(x, t.param(p + ".ln2.g"), t.param(p + ".ln2.b"));
    x = t.add(x, maybe_dropout(t, ffn(t, p + ".ffn", h3)));
  }
  return t.layernorm_rows(x, t.param(prefix + ".lnf.g"), t.param(prefix + ".lnf.b"));
}

NodeId Model::pointer_scores(Tape& t, const std::string& prefix, NodeId states,
                             NodeId q_pooled) const {
  NodeId proj = linear(t, prefix, states);
  double inv = 1.0 / std::sqrt(static_cast<double>(cfg.hidden_dim));
  return t.scale(t.matmul_nt(q_pooled, proj), inv);
}

std::vector<int> argmax_rows(const Mat& m) {
  std::vector<int> out(static_cast<size_t>(m.rows));
  for (int i = 0; i < m.rows; ++i) {
    int best = 0;
    for (int j = 1; j < m.cols; ++j)
      if (m(i, j) > m(i, best)) best = j;
    out[static_cast<size_t>(i)] = best;
  }
  return out;
}

int argmax_row(const Mat& m, int row) {
  require(row >= 0 && row < m.rows && m.cols > 0, Errc::index_out_of_range, "argmax_row");
  int best = 0;
  for (int j = 1; j < m.cols; ++j)
    if (m(row, j) > m(row, best)) best = j;
  return best;
}

size_t expected_param_count(const EncoderConfig& cfg, int vocab_words, int gold_k,
                            int synthetic_k) {
  size_t h = static_cast<size_t>(cfg.hidden_dim);
  auto enc_layer = 12 * h * h + 13 * h;
  auto dec_layer = 16 * h * h + 19 * h;
  size_t tok = static_cast<size_t>(vocab_words) * h + 4 * (kCoordMax + 1) * h +
               static_cast<size_t>(cfg.max_tokens) * h +
               static_cast<size_t>(cfg.n_layers) * enc_layer + 2 * h;
  size_t l2v = 3 * h + h;
  size_t vis = (4 * 9 + 4) + (8 * 36 + 8) + (8 * h + h) + (2 * h * h + h);
  size_t joint = 2 * h + static_cast<size_t>(cfg.joint_layers()) * enc_layer + 2 * h;
  size_t sds = 2 * (h * h + h);
  size_t dec = static_cast<size_t>(EncoderConfig::decoder_layers) * dec_layer + 2 * h;
  size_t sst = dec + h * static_cast<size_t>(synthetic_k) + static_cast<size_t>(synthetic_k);
  size_t sit = dec + h * h + h;
  size_t tag = h * static_cast<size_t>(gold_k) + static_cast<size_t>(gold_k);
  size_t er = dec + h * h + h;
  return tok + l2v + vis + joint + sds + sst + sit + tag + er;
}

}  // namespace david
