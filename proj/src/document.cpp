#include "david/document.hpp"

#include <algorithm>
#include <set>

#include "david/text.hpp"

namespace david {

std::string split_name(Split s) {
  switch (s) {
    case Split::n: return "n";
    case Split::g: return "g";
    case Split::i: return "i";
    default: return "none";
  }
}

Split split_from_name(const std::string& s) {
  if (s == "n") return Split::n;
  if (s == "g") return Split::g;
  if (s == "i") return Split::i;
  if (s == "none" || s.empty()) return Split::none;
  fail(Errc::invalid_argument, "unknown split name '" + s + "'");
}

std::string provenance_name(Provenance p) {
  return p == Provenance::gold ? "gold" : "synthetic";
}

Provenance provenance_from_name(const std::string& s) {
  if (s == "gold") return Provenance::gold;
  if (s == "synthetic") return Provenance::synthetic;
  fail(Errc::invalid_argument, "unknown provenance '" + s + "'");
}

int LabelSpace::index_of(const std::string& cat) const {
  for (size_t i = 0; i < categories.size(); ++i)
    if (categories[i] == cat) return static_cast<int>(i);
  return -1;
}

const std::string& LabelSpace::at(int idx) const {
  require(idx >= 0 && idx < static_cast<int>(categories.size()), Errc::index_out_of_range,
          "label index " + std::to_string(idx) + " in space '" + name + "'");
  return categories[static_cast<size_t>(idx)];
}

void LabelSpace::validate() const {
  require(!categories.empty(), Errc::invalid_argument, "label space '" + name + "' is empty");
  std::set<std::string> seen;
  for (const auto& c : categories) {
    require(!c.empty(), Errc::invalid_argument, "empty category name in '" + name + "'");
    require(seen.insert(c).second, Errc::invalid_argument,
            "duplicate category '" + c + "' in '" + name + "'");
  }
}

int RelationMatrix::row_sum(int i) const {
  require(i >= 0 && i < n_, Errc::index_out_of_range, "relation matrix row");
  int s = 0;
  for (int j = 0; j < m_; ++j) s += bits_[static_cast<size_t>(i) * m_ + j];
  return s;
}

void Document::set_relations_from_parents() {
  relation_matrix = RelationMatrix(static_cast<int>(tokens.size()),
                                   static_cast<int>(entities.size()));
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (!tokens[i].parent_entity) continue;
    int p = *tokens[i].parent_entity;
    require(p >= 0 && p < static_cast<int>(entities.size()), Errc::index_out_of_range,
            "token parent " + std::to_string(p) + " in doc '" + id + "'");
    relation_matrix.set(static_cast<int>(i), p, true);
  }
}

void Document::validate() const {
  require(!id.empty(), Errc::invalid_argument, "document without id");
  require(page_width > 0 && page_height > 0, Errc::invalid_argument,
          "non-positive page size in doc '" + id + "'");
  std::set<int> tids, eids;
  for (const auto& t : tokens) {
    require(tids.insert(t.id).second, Errc::id_mismatch,
            "duplicate token id in doc '" + id + "'");
    require(t.bbox.valid(), Errc::invalid_argument, "token bbox out of range in doc '" + id + "'");
  }
  for (const auto& e : entities) {
    require(eids.insert(e.id).second, Errc::id_mismatch,
            "duplicate entity id in doc '" + id + "'");
    require(e.bbox.valid(), Errc::invalid_argument,
            "entity bbox out of range in doc '" + id + "'");
  }
  require(relation_matrix.rows() == static_cast<int>(tokens.size()) &&
              relation_matrix.cols() == static_cast<int>(entities.size()),
          Errc::dimension_mismatch, "relation matrix dims in doc '" + id + "'");
  for (int i = 0; i < relation_matrix.rows(); ++i) {
    int s = relation_matrix.row_sum(i);
    require(s <= 1, Errc::invalid_argument, "relation row sum > 1 in doc '" + id + "'");
    if (annotation_provenance == Provenance::gold && !entities.empty())
      require(s == 1, Errc::missing_annotation,
              "gold doc '" + id + "' has an orphan token");
  }
  for (const auto& q : qa_pairs)
    require(q.target_entity >= 0 && q.target_entity < static_cast<int>(entities.size()),
            Errc::index_out_of_range, "qa target in doc '" + id + "'");
}

void CollectionSplit::validate() const {
  std::set<std::string> ids;
  auto check = [&](const std::vector<Document>& v, Split s) {
    for (const auto& d : v) {
      require(d.split == s, Errc::invalid_argument,
              "doc '" + d.id + "' carries wrong split tag");
      require(ids.insert(d.id).second, Errc::id_mismatch,
              "doc '" + d.id + "' appears in two splits");
      if (s == Split::n)
        require(d.annotation_provenance == Provenance::synthetic, Errc::invalid_argument,
                "D_n doc '" + d.id + "' not marked synthetic");
    }
  };
  check(d_n, Split::n);
  check(d_g, Split::g);
  check(d_i, Split::i);
}

RelationMatrix compute_relation_matrix(const std::vector<Token>& tokens,
                                       const std::vector<Entity>& entities) {
  {
    std::set<int> ids;
    for (const auto& e : entities)
      require(ids.insert(e.id).second, Errc::id_mismatch, "duplicate entity id");
  }
  RelationMatrix rel(static_cast<int>(tokens.size()), static_cast<int>(entities.size()));
  for (size_t i = 0; i < tokens.size(); ++i) {
    double cx = tokens[i].bbox.cx(), cy = tokens[i].bbox.cy();
    int best = -1;
    double best_iou = -1.0;
    int best_id = 0;
    for (size_t j = 0; j < entities.size(); ++j) {
      if (!entities[j].bbox.contains_point(cx, cy)) continue;
      double v = iou(tokens[i].bbox, entities[j].bbox);
      if (best < 0 || v > best_iou || (v == best_iou && entities[j].id < best_id)) {
        best = static_cast<int>(j);
        best_iou = v;
        best_id = entities[j].id;
      }
    }
    if (best >= 0) rel.set(static_cast<int>(i), best, true);
  }
  return rel;
}

double jaccard_similarity(const std::string& a, const std::string& b) {
  std::set<std::string> sa = word_set(a), sb = word_set(b);
  if (sa.empty() && sb.empty()) return 1.0;
  if (sa.empty() || sb.empty()) return 0.0;
  size_t inter = 0;
  for (const auto& w : sa) inter += sb.count(w);
  size_t uni = sa.size() + sb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

CollectionSplit split_collection(const std::vector<Document>& docs, size_t n_count,
                                 size_t g_count, size_t i_count, uint64_t seed) {
  require(n_count + g_count + i_count <= docs.size(), Errc::insufficient_documents,
          "need " + std::to_string(n_count + g_count + i_count) + " documents, have " +
              std::to_string(docs.size()));
  std::vector<size_t> order(docs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(seed, "collection-split"));
  rng.shuffle(order);

  CollectionSplit out;
  size_t pos = 0;
  for (size_t k = 0; k < n_count; ++k) {
    Document d = docs[order[pos++]];
    d.split = Split::n;
    d.annotation_provenance = Provenance::synthetic;
    for (auto& t : d.tokens) {
      t.gold_label.reset();
      t.synthetic_label.reset();
      t.parent_entity.reset();
    }
    d.entities.clear();
    d.qa_pairs.clear();
    d.set_relations_from_parents();
    out.d_n.push_back(std::move(d));
  }
  for (size_t k = 0; k < g_count; ++k) {
    Document d = docs[order[pos++]];
    d.split = Split::g;
    out.d_g.push_back(std::move(d));
  }
  for (size_t k = 0; k < i_count; ++k) {
    Document d = docs[order[pos++]];
    d.split = Split::i;
    out.d_i.push_back(std::move(d));
  }
  return out;
}

}  // namespace david
