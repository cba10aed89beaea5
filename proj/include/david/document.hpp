#pragma once
// Document model: tokens, entities, token->entity relations, QA pairs,
// label spaces and the n/g/i collection split.

#include <optional>
#include <string>
#include <vector>

#include "david/common.hpp"
#include "david/geometry.hpp"

namespace david {

enum class Split { none, n, g, i };
enum class Provenance { gold, synthetic };

std::string split_name(Split s);
Split split_from_name(const std::string& s);
std::string provenance_name(Provenance p);
Provenance provenance_from_name(const std::string& s);

// Category inventory. Index 0 is reserved for the outside/other category.
struct LabelSpace {
  std::string name;  // "gold" or "synthetic"
  std::vector<std::string> categories;

  size_t size() const { return categories.size(); }
  int index_of(const std::string& cat) const;
  const std::string& at(int idx) const;
  void validate() const;
  bool operator==(const LabelSpace&) const = default;
};

struct Token {
  int id = 0;
  std::string text;
  BBox bbox;
  std::optional<int> gold_label;       // index into the gold LabelSpace
  std::optional<int> synthetic_label;  // index into the synthetic LabelSpace
  std::optional<int> parent_entity;    // entity id, absent when outside every entity
};

struct Entity {
  int id = 0;
  std::string text;  // may be empty after degraded annotation
  BBox bbox;
  std::string category;
  Provenance provenance = Provenance::gold;
};

struct QAPair {
  std::string key_text;
  std::string answer_text;
  int target_entity = -1;
  double match_score = 1.0;  // answer/entity-text similarity at creation time
};

// Dense binary token-by-entity membership matrix. Rows follow token list
// order, columns follow entity list order.
class RelationMatrix {
 public:
  RelationMatrix() = default;
  RelationMatrix(int n_tokens, int n_entities)
      : n_(n_tokens), m_(n_entities), bits_(static_cast<size_t>(n_tokens) * n_entities, 0) {
    require(n_tokens >= 0 && n_entities >= 0, Errc::invalid_argument, "negative matrix dims");
  }

  int rows() const { return n_; }
  int cols() const { return m_; }
  bool at(int i, int j) const {
    check_index(i, j);
    return bits_[static_cast<size_t>(i) * m_ + j] != 0;
  }
  void set(int i, int j, bool v) {
    check_index(i, j);
    bits_[static_cast<size_t>(i) * m_ + j] = v ? 1 : 0;
  }
  int row_sum(int i) const;
  bool operator==(const RelationMatrix&) const = default;

 private:
  void check_index(int i, int j) const {
    require(i >= 0 && i < n_ && j >= 0 && j < m_, Errc::index_out_of_range,
            "relation matrix index");
  }
  int n_ = 0, m_ = 0;
  std::vector<uint8_t> bits_;
};

struct Document {
  std::string id;
  int page_width = 0;   // rendered raster width in pixels
  int page_height = 0;  // rendered raster height in pixels
  std::vector<Token> tokens;
  std::vector<Entity> entities;
  RelationMatrix relation_matrix;
  std::vector<QAPair> qa_pairs;
  Split split = Split::none;
  Provenance annotation_provenance = Provenance::gold;

  // keeps parent_entity fields and the matrix in sync (matrix is derived)
  void set_relations_from_parents();
  void validate() const;
};

struct CollectionSplit {
  std::vector<Document> d_n;  // noisy-annotation pool
  std::vector<Document> d_g;  // gold guidance pool
  std::vector<Document> d_i;  // inference/eval pool
  void validate() const;
};

// Assigns each token to the entity whose box contains the token center;
// ties broken by max IoU(token, entity), then by lowest entity id. Tokens
// contained by nothing get an all-zero row.
RelationMatrix compute_relation_matrix(const std::vector<Token>& tokens,
                                       const std::vector<Entity>& entities);

// Case-folded whitespace-token set overlap. Both empty -> 1, one empty -> 0.
double jaccard_similarity(const std::string& a, const std::string& b);

// Seeded shuffle, then the first n_count documents become D_n (stripped of
// gold annotations), the next g_count D_g, the next i_count D_i.
CollectionSplit split_collection(const std::vector<Document>& docs, size_t n_count,
                                 size_t g_count, size_t i_count, uint64_t seed);

}  // namespace david
