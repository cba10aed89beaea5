#include "david/text.hpp"

#include <algorithm>
#include <cctype>

namespace david {

std::string to_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string> split_whitespace(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
    } else {
      cur.push_back(static_cast<char>(c));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::set<std::string> word_set(const std::string& s) {
  std::set<std::string> out;
  for (auto& w : split_whitespace(to_lower(s))) out.insert(w);
  return out;
}

std::string normalize_word(const std::string& w) {
  std::string s = to_lower(w);
  for (char& c : s)
    if (std::isdigit(static_cast<unsigned char>(c))) c = '9';
  return s;
}

size_t levenshtein(const std::string& a, const std::string& b) {
  const size_t n = a.size(), m = b.size();
  if (n == 0) return m;
  if (m == 0) return n;
  std::vector<size_t> prev(m + 1), cur(m + 1);
  for (size_t j = 0; j <= m; ++j) prev[j] = j;
  for (size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (size_t j = 1; j <= m; ++j) {
      size_t cost = (a[i - 1] == b[j - 1]) ? 0 : 1;
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

bool looks_numeric(const std::string& w) {
  int digits = 0;
  for (size_t i = 0; i < w.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(w[i]);
    if (std::isdigit(c)) {
      ++digits;
    } else if (c == '.' || c == ',' || c == '$' || c == '%' || c == '-' || c == ':' || c == 'x' ||
               c == 'X') {
      // separators and count markers like "2x"
    } else {
      return false;
    }
  }
  return digits > 0;
}

bool looks_date(const std::string& w) {
  // 9999-99-99 or 99/99/9999 style
  int digits = 0, seps = 0;
  for (unsigned char c : w) {
    if (std::isdigit(c)) ++digits;
    else if (c == '-' || c == '/') ++seps;
    else return false;
  }
  return digits >= 6 && seps == 2;
}

bool starts_upper(const std::string& w) {
  return !w.empty() && std::isupper(static_cast<unsigned char>(w[0]));
}

}  // namespace david
