#include "david/corpus_io.hpp"

#include <fstream>
#include <sstream>

namespace david {

namespace {

json opt_int(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }

std::optional<int> int_or_null(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<int>();
}

json bbox_to_json(const BBox& b) { return json::array({b.x0, b.y0, b.x1, b.y1}); }

BBox bbox_from_json(const json& j) {
  require(j.is_array() && j.size() == 4, Errc::invalid_argument, "bbox must be [x0,y0,x1,y1]");
  BBox b{j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
  return b.clamped();
}

}  // namespace

json document_to_json(const Document& doc) {
  json jt = json::array();
  for (const auto& t : doc.tokens) {
    jt.push_back({{"id", t.id},
                  {"text", t.text},
                  {"bbox", bbox_to_json(t.bbox)},
                  {"gold_label", opt_int(t.gold_label)},
                  {"synthetic_label", opt_int(t.synthetic_label)},
                  {"parent", opt_int(t.parent_entity)}});
  }
  json je = json::array();
  for (const auto& e : doc.entities) {
    je.push_back({{"id", e.id},
                  {"text", e.text},
                  {"bbox", bbox_to_json(e.bbox)},
                  {"category", e.category},
                  {"provenance", provenance_name(e.provenance)}});
  }
  json jq = json::array();
  for (const auto& q : doc.qa_pairs) {
    jq.push_back({{"key", q.key_text},
                  {"answer", q.answer_text},
                  {"target", q.target_entity},
                  {"score", q.match_score}});
  }
  return json{{"id", doc.id},
              {"page_width", doc.page_width},
              {"page_height", doc.page_height},
              {"split", split_name(doc.split)},
              {"provenance", provenance_name(doc.annotation_provenance)},
              {"tokens", jt},
              {"entities", je},
              {"qa_pairs", jq}};
}

Document document_from_json(const json& j) {
  Document doc;
  doc.id = j.at("id").get<std::string>();
  doc.page_width = j.at("page_width").get<int>();
  doc.page_height = j.at("page_height").get<int>();
  doc.split = split_from_name(j.at("split").get<std::string>());
  doc.annotation_provenance = provenance_from_name(j.at("provenance").get<std::string>());
  for (const auto& jt : j.at("tokens")) {
    Token t;
    t.id = jt.at("id").get<int>();
    t.text = jt.at("text").get<std::string>();
    t.bbox = bbox_from_json(jt.at("bbox"));
    t.gold_label = int_or_null(jt, "gold_label");
    t.synthetic_label = int_or_null(jt, "synthetic_label");
    t.parent_entity = int_or_null(jt, "parent");
    doc.tokens.push_back(std::move(t));
  }
  for (const auto& je : j.at("entities")) {
    Entity e;
    e.id = je.at("id").get<int>();
    e.text = je.at("text").get<std::string>();
    e.bbox = bbox_from_json(je.at("bbox"));
    e.category = je.at("category").get<std::string>();
    e.provenance = provenance_from_name(je.at("provenance").get<std::string>());
    doc.entities.push_back(std::move(e));
  }
  for (const auto& jq : j.at("qa_pairs")) {
    QAPair q;
    q.key_text = jq.at("key").get<std::string>();
    q.answer_text = jq.at("answer").get<std::string>();
    q.target_entity = jq.at("target").get<int>();
    q.match_score = jq.at("score").get<double>();
    doc.qa_pairs.push_back(std::move(q));
  }
  doc.set_relations_from_parents();
  doc.validate();
  return doc;
}

CollectionSplit Corpus::into_split() const {
  CollectionSplit out;
  for (const auto& d : docs) {
    switch (d.split) {
      case Split::n: out.d_n.push_back(d); break;
      case Split::g: out.d_g.push_back(d); break;
      case Split::i: out.d_i.push_back(d); break;
      default:
        fail(Errc::invalid_argument, "doc '" + d.id + "' has no split tag");
    }
  }
  out.validate();
  return out;
}

std::string spaces_sidecar_path(const std::string& corpus_path) {
  auto dot = corpus_path.rfind('.');
  std::string stem = (dot == std::string::npos) ? corpus_path : corpus_path.substr(0, dot);
  return stem + ".spaces.json";
}

void save_corpus(const std::string& path, const Corpus& corpus) {
  std::ostringstream body;
  for (const auto& d : corpus.docs) body << document_to_json(d).dump() << "\n";
  write_file(path, body.str());
  json spaces{{"gold", corpus.gold_space.categories},
              {"synthetic", corpus.synthetic_space.categories}};
  write_file(spaces_sidecar_path(path), spaces.dump(2) + "\n");
}

Corpus load_corpus(const std::string& path) {
  Corpus out;
  std::ifstream in(path);
  require(in.good(), Errc::io_failure, "cannot open corpus '" + path + "'");
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(Errc::io_failure, "bad JSON on line " + std::to_string(lineno) + " of '" + path +
                                 "': " + e.what());
    }
    out.docs.push_back(document_from_json(j));
  }

  std::string sidecar = spaces_sidecar_path(path);
  std::ifstream sc(sidecar);
  bool any_labels = false;
  for (const auto& d : out.docs)
    for (const auto& t : d.tokens)
      if (t.gold_label || t.synthetic_label) any_labels = true;
  if (sc.good()) {
    json j = json::parse(std::string(std::istreambuf_iterator<char>(sc), {}));
    out.gold_space = LabelSpace{"gold", j.at("gold").get<std::vector<std::string>>()};
    out.synthetic_space =
        LabelSpace{"synthetic", j.at("synthetic").get<std::vector<std::string>>()};
    out.gold_space.validate();
    out.synthetic_space.validate();
  } else {
    require(!any_labels, Errc::io_failure,
            "corpus '" + path + "' has labels but no spaces sidecar '" + sidecar + "'");
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Errc::io_failure, "cannot open '" + path + "'");
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), Errc::io_failure, "cannot write '" + path + "'");
  out << content;
  require(out.good(), Errc::io_failure, "write failed for '" + path + "'");
}

std::string content_hash(const std::string& path) { return hex64(fnv1a64(read_file(path))); }

}  // namespace david
