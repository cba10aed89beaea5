#include "david/params.hpp"

#include <cstring>

namespace david {

int ParamStore::add(const std::string& name, int rows, int cols, const std::string& group,
                    Init init, Rng& rng, double init_std) {
  require(!has(name), Errc::invalid_argument, "duplicate parameter '" + name + "'");
  ParamEntry e;
  e.name = name;
  e.group = group;
  e.value = Mat(rows, cols);
  e.grad = Mat(rows, cols);
  switch (init) {
    case Init::gauss:
      for (double& v : e.value.a) v = rng.normal(0.0, init_std);
      break;
    case Init::zeros:
      break;
    case Init::ones:
      std::fill(e.value.a.begin(), e.value.a.end(), 1.0);
      break;
  }
  int id = static_cast<int>(items_.size());
  items_.push_back(std::move(e));
  index_[name] = id;
  return id;
}

int ParamStore::idx(const std::string& name) const {
  auto it = index_.find(name);
  require(it != index_.end(), Errc::invalid_argument, "unknown parameter '" + name + "'");
  return it->second;
}

size_t ParamStore::scalar_count() const {
  size_t n = 0;
  for (const auto& e : items_) n += e.value.size();
  return n;
}

size_t ParamStore::scalar_count(const std::string& group) const {
  size_t n = 0;
  for (const auto& e : items_)
    if (e.group == group) n += e.value.size();
  return n;
}

std::vector<std::string> ParamStore::group_names() const {
  std::vector<std::string> out;
  for (const auto& e : items_)
    if (std::find(out.begin(), out.end(), e.group) == out.end()) out.push_back(e.group);
  return out;
}

void ParamStore::zero_grad() {
  for (auto& e : items_) std::fill(e.grad.a.begin(), e.grad.a.end(), 0.0);
}

std::string ParamStore::payload_f32(const std::set<std::string>& groups) const {
  std::string out;
  for (const auto& e : items_) {
    if (!groups.empty() && groups.count(e.group) == 0) continue;
    for (double d : e.value.a) {
      float f = static_cast<float>(d);
      char buf[4];
      std::memcpy(buf, &f, 4);
      out.append(buf, 4);
    }
  }
  return out;
}

void ParamStore::load_payload_f32(const std::string& bytes) {
  require(bytes.size() == scalar_count() * 4, Errc::shape_mismatch,
          "parameter payload size mismatch");
  size_t off = 0;
  for (auto& e : items_) {
    for (double& d : e.value.a) {
      float f;
      std::memcpy(&f, bytes.data() + off, 4);
      d = static_cast<double>(f);
      off += 4;
    }
  }
}

}  // namespace david
