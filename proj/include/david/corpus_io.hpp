#pragma once
// JSON Lines corpus serialization: one document object per line, label
// spaces in a small sidecar next to the corpus file.

#include <string>
#include <vector>

#include <json.hpp>

#include "david/document.hpp"

namespace david {

using json = nlohmann::json;

json document_to_json(const Document& doc);
Document document_from_json(const json& j);

struct Corpus {
  std::vector<Document> docs;
  LabelSpace gold_space;
  LabelSpace synthetic_space;

  CollectionSplit into_split() const;  // groups docs by their split tags
};

// path "x.jsonl" gets sidecar "x.spaces.json"
std::string spaces_sidecar_path(const std::string& corpus_path);

void save_corpus(const std::string& path, const Corpus& corpus);
Corpus load_corpus(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);
std::string content_hash(const std::string& path);  // hex of a 64-bit FNV over the bytes

}  // namespace david
