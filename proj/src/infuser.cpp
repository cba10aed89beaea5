#include "david/model.hpp"

namespace david {

std::pair<NodeId, NodeId> Model::joint_encode(Tape& t, NodeId tokens, NodeId entities) const {
  int n = t.rows(tokens), m = t.rows(entities);
  if (opt.mono_grained) return {tokens, entities};  // infuser bypassed
  std::vector<int> seg(static_cast<size_t>(n + m), 0);
  for (int j = 0; j < m; ++j) seg[static_cast<size_t>(n + j)] = 1;
  NodeId x = t.concat_rows(tokens, entities);
  x = t.add(x, t.rows_gather(t.param("joint.seg_emb"), seg));
  x = encoder_stack(t, "joint.enc", cfg.joint_layers(), x);
  return {t.slice_rows(x, 0, n), t.slice_rows(x, n, n + m)};
}

NodeId Model::alignment_scores(Tape& t, NodeId t_joint, NodeId e_joint) const {
  NodeId a = linear(t, "sds.a", t_joint);
  NodeId b = linear(t, "sds.b", e_joint);
  return t.matmul_nt(a, b);  // n x m
}

Model::SstOut Model::sst_decode(Tape& t, NodeId t_joint, NodeId e_joint) const {
  SstOut out;
  std::optional<NodeId> memory;
  if (t.rows(e_joint) > 0) memory = e_joint;
  out.states = decoder_stack(t, "sst.dec", t_joint, memory);
  out.logits = linear(t, "sst.head", out.states);
  return out;
}

Model::SitOut Model::sit_decode(Tape& t, NodeId e_joint, NodeId t_joint, const Query& q) const {
  require(t.rows(e_joint) > 0, Errc::no_entities, "pointer over zero entities");
  NodeId mem = opt.sit_memory == "query_entities" ? t.concat_rows(q.seq, e_joint)
                                                  : t.concat_rows(q.seq, t_joint);
  SitOut out;
  out.states = decoder_stack(t, "sit.dec", e_joint, mem);
  out.scores = pointer_scores(t, "sit.ptr", out.states, q.pooled);
  out.dist = t.softmax_rows(out.scores);
  return out;
}

NodeId sds_loss(Tape& t, NodeId align_scores, const RelationMatrix& rel) {
  require(t.rows(align_scores) == rel.rows() && t.cols(align_scores) == rel.cols(),
          Errc::dimension_mismatch, "alignment scores vs relation matrix");
  require(rel.rows() > 0 && rel.cols() > 0, Errc::dimension_mismatch,
          "sds loss needs a non-empty relation matrix");
  Mat truth(rel.rows(), rel.cols());
  for (int i = 0; i < rel.rows(); ++i)
    for (int j = 0; j < rel.cols(); ++j) truth(i, j) = rel.at(i, j) ? 1.0 : 0.0;
  return t.mse_against(t.sigmoid(align_scores), std::move(truth));
}

NodeId sst_loss(Tape& t, NodeId logits, const std::vector<int>& synthetic_labels) {
  return t.ce_rows(logits, synthetic_labels);
}

NodeId sit_loss(Tape& t, NodeId pointer_scores, int target_entity) {
  return t.ce_rows(pointer_scores, {target_entity});
}

}  // namespace david
