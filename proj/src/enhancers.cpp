#include "david/model.hpp"

namespace david {

NodeId Model::sequence_tag_head(Tape& t, NodeId t_gde, NodeId t_joint, NodeId t_dec) const {
  require(t.rows(t_gde) == t.rows(t_joint) && t.rows(t_joint) == t.rows(t_dec),
          Errc::dimension_mismatch, "tag head stage lengths differ");
  NodeId pooled = t.max_elem(t.max_elem(t_gde, t_joint), t_dec);
  return linear(t, "tag.head", pooled);
}

Model::ErOut Model::entity_retrieval_head(Tape& t, NodeId e_joint, NodeId e_dec,
                                          const Query& q) const {
  require(t.rows(e_joint) > 0, Errc::no_entities, "retrieval over zero entities");
  require(t.rows(e_joint) == t.rows(e_dec), Errc::dimension_mismatch,
          "retrieval head stage lengths differ");
  NodeId pooled = t.max_elem(e_joint, e_dec);
  NodeId states = decoder_stack(t, "er.dec", pooled, q.seq);
  ErOut out;
  out.scores = pointer_scores(t, "er.ptr", states, q.pooled);
  out.dist = t.softmax_rows(out.scores);
  return out;
}

}  // namespace david
