#pragma once
// Small text utilities shared by the document model, annotators and metrics.

#include <set>
#include <string>
#include <vector>

namespace david {

std::string to_lower(std::string s);
std::vector<std::string> split_whitespace(const std::string& s);
std::set<std::string> word_set(const std::string& s);  // case-folded

// canonical word form for the vocabulary: lowercased, digits collapsed to '9'
std::string normalize_word(const std::string& w);

size_t levenshtein(const std::string& a, const std::string& b);

bool looks_numeric(const std::string& w);  // digits with separators, optional currency mark
bool looks_date(const std::string& w);
bool starts_upper(const std::string& w);

}  // namespace david
