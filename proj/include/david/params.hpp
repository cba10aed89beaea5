#pragma once
// Named trainable arrays grouped into freezable components.

#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "david/tensor.hpp"

namespace david {

enum class Init { gauss, zeros, ones };

struct ParamEntry {
  std::string name;
  std::string group;
  Mat value;
  Mat grad;
};

class ParamStore {
 public:
  int add(const std::string& name, int rows, int cols, const std::string& group, Init init,
          Rng& rng, double init_std = 0.02);
  bool has(const std::string& name) const { return index_.count(name) > 0; }
  int idx(const std::string& name) const;
  ParamEntry& entry(int i) { return items_[static_cast<size_t>(i)]; }
  const ParamEntry& entry(int i) const { return items_[static_cast<size_t>(i)]; }
  const Mat& value(const std::string& name) const { return entry(idx(name)).value; }
  Mat& mutable_value(const std::string& name) { return entry(idx(name)).value; }
  int count() const { return static_cast<int>(items_.size()); }
  size_t scalar_count() const;
  size_t scalar_count(const std::string& group) const;
  std::vector<std::string> group_names() const;

  void zero_grad();
  void freeze_group(const std::string& group) { frozen_.insert(group); }
  void set_frozen(const std::set<std::string>& groups) { frozen_ = groups; }
  const std::set<std::string>& frozen_groups() const { return frozen_; }
  bool is_frozen(const std::string& group) const { return frozen_.count(group) > 0; }
  bool entry_frozen(int i) const { return is_frozen(entry(i).group); }

  // little-endian float32 image of the selected groups, manifest order
  std::string payload_f32(const std::set<std::string>& groups = {}) const;
  void load_payload_f32(const std::string& bytes);

 private:
  std::vector<ParamEntry> items_;
  std::unordered_map<std::string, int> index_;
  std::set<std::string> frozen_;
};

}  // namespace david
