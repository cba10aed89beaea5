#include <cmath>

#include "david/model.hpp"
#include "david/text.hpp"

namespace david {

namespace {

// raw channel means scaled to [0,1] per row, ready for the shared projection
Mat channels_to_mat(const std::vector<std::array<double, 3>>& ch) {
  Mat m(static_cast<int>(ch.size()), 3);
  for (size_t i = 0; i < ch.size(); ++i)
    for (int c = 0; c < 3; ++c) m(static_cast<int>(i), c) = ch[i][c] / 255.0;
  return m;
}

}  // namespace

NodeId Model::encode_tokens_gde(Tape& t, const Document& doc, const DocContext& ctx) const {
  int n = static_cast<int>(doc.tokens.size());
  require(n <= cfg.max_tokens, Errc::token_overflow,
          "doc '" + doc.id + "' has " + std::to_string(n) + " tokens, cap is " +
              std::to_string(cfg.max_tokens));
  require(static_cast<int>(ctx.token_l2v.size()) == n, Errc::dimension_mismatch,
          "doc context does not match document");

  std::vector<int> word_ids(static_cast<size_t>(n)), x0(static_cast<size_t>(n)),
      y0(static_cast<size_t>(n)), x1(static_cast<size_t>(n)), y1(static_cast<size_t>(n)),
      pos(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Token& tok = doc.tokens[static_cast<size_t>(i)];
    BBox b = tok.bbox.clamped();
    word_ids[static_cast<size_t>(i)] = vocab.id(tok.text);
    x0[static_cast<size_t>(i)] = b.x0;
    y0[static_cast<size_t>(i)] = b.y0;
    x1[static_cast<size_t>(i)] = b.x1;
    y1[static_cast<size_t>(i)] = b.y1;
    pos[static_cast<size_t>(i)] = i;
  }
  NodeId x = t.rows_gather(t.param("tok.word_emb"), word_ids);
  x = t.add(x, t.rows_gather(t.param("tok.bbox_x0"), x0));
  x = t.add(x, t.rows_gather(t.param("tok.bbox_y0"), y0));
  x = t.add(x, t.rows_gather(t.param("tok.bbox_x1"), x1));
  x = t.add(x, t.rows_gather(t.param("tok.bbox_y1"), y1));
  x = t.add(x, t.rows_gather(t.param("tok.pos_emb"), pos));
  x = encoder_stack(t, "tok.enc", cfg.n_layers, x);

  NodeId l2v = t.add_row_broadcast(
      t.matmul(t.constant(channels_to_mat(ctx.token_l2v)), t.param("l2v.proj.w")),
      t.param("l2v.proj.b"));
  return t.add(x, l2v);
}

NodeId Model::encode_entities(Tape& t, const Document& doc, const DocContext& ctx,
                              NodeId t_gde) const {
  int m = static_cast<int>(doc.entities.size());
  int n = static_cast<int>(doc.tokens.size());
  require(m <= cfg.max_entities, Errc::entity_overflow,
          "doc '" + doc.id + "' has " + std::to_string(m) + " entities, cap is " +
              std::to_string(cfg.max_entities));
  require(static_cast<int>(ctx.entity_l2v.size()) == m, Errc::dimension_mismatch,
          "doc context does not match document");
  require(t.rows(t_gde) == n, Errc::dimension_mismatch, "token states do not match document");
  int h = cfg.hidden_dim;
  if (m == 0) return t.constant(Mat(0, h));

  // visual path over the page sketch
  int s = EncoderConfig::sketch_size;
  Mat img(1, s * s);
  img.a = ctx.sketch.px;
  NodeId f = t.constant(std::move(img));
  f = t.relu(t.conv3x3s2(f, t.param("vis.conv1.k"), t.param("vis.conv1.b"), s, s));
  int s2 = (s + 1) / 2;
  f = t.relu(t.conv3x3s2(f, t.param("vis.conv2.k"), t.param("vis.conv2.b"), s2, s2));
  int s4 = (s2 + 1) / 2;
  NodeId vis = -1;
  for (int j = 0; j < m; ++j) {
    PixelRect r = bbox_to_pixels(doc.entities[static_cast<size_t>(j)].bbox, s4, s4);
    NodeId pooled = t.roi_mean(f, s4, s4, r.x0, r.x1, r.y0, r.y1);
    vis = j == 0 ? pooled : t.concat_rows(vis, pooled);
  }
  NodeId v = linear(t, "vis.proj", vis);  // m x h

  // mean of child-token representations, zero row when childless
  Mat sel(m, std::max(n, 1));
  if (n > 0) {
    std::vector<int> counts(static_cast<size_t>(m), 0);
    for (int i = 0; i < n; ++i)
      if (doc.tokens[static_cast<size_t>(i)].parent_entity) {
        int p = *doc.tokens[static_cast<size_t>(i)].parent_entity;
        require(p >= 0 && p < m, Errc::index_out_of_range, "token parent id");
        ++counts[static_cast<size_t>(p)];
      }
    for (int i = 0; i < n; ++i)
      if (doc.tokens[static_cast<size_t>(i)].parent_entity) {
        int p = *doc.tokens[static_cast<size_t>(i)].parent_entity;
        sel(p, i) = 1.0 / counts[static_cast<size_t>(p)];
      }
  }
  NodeId t_pool = n > 0 ? t.matmul(t.constant(std::move(sel)), t_gde)
                        : t.constant(Mat(m, h));

  NodeId fused = linear(t, "fuse", t.concat_cols(v, t_pool));
  NodeId l2v = t.add_row_broadcast(
      t.matmul(t.constant(channels_to_mat(ctx.entity_l2v)), t.param("l2v.proj.w")),
      t.param("l2v.proj.b"));
  return t.add(fused, l2v);
}

NodeId Model::pool_l2v(Tape& t, const RasterRGB& raster, const BBox& box) const {
  auto ch = l2v_mean_channels(raster, box);
  NodeId row = t.constant(Mat::row3(ch[0] / 255.0, ch[1] / 255.0, ch[2] / 255.0));
  return t.add_row_broadcast(t.matmul(row, t.param("l2v.proj.w")), t.param("l2v.proj.b"));
}

Model::Query Model::encode_query(Tape& t, const std::string& key_text) const {
  std::vector<std::string> words = split_whitespace(key_text);
  require(!words.empty(), Errc::empty_query, "query text has no words");
  int q = static_cast<int>(words.size());
  require(q <= cfg.max_tokens, Errc::token_overflow, "query longer than max_tokens");
  std::vector<int> ids(static_cast<size_t>(q)), pos(static_cast<size_t>(q));
  for (int i = 0; i < q; ++i) {
    ids[static_cast<size_t>(i)] = vocab.id(words[static_cast<size_t>(i)]);
    pos[static_cast<size_t>(i)] = i;
  }
  NodeId x = t.rows_gather(t.param("tok.word_emb"), ids);
  x = t.add(x, t.rows_gather(t.param("tok.pos_emb"), pos));
  x = encoder_stack(t, "tok.enc", cfg.n_layers, x);
  Query out;
  out.seq = x;
  out.pooled = t.mean_rows(x);
  return out;
}

}  // namespace david
