#pragma once
// Shared plumbing: typed errors, deterministic RNG, content hashing.

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace david {

enum class Errc {
  invalid_argument,
  dimension_mismatch,
  shape_mismatch,
  id_mismatch,
  index_out_of_range,
  insufficient_documents,
  token_overflow,
  entity_overflow,
  no_entities,
  empty_query,
  empty_guidance,
  missing_annotation,
  missing_label,
  provider_failure,
  io_failure,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

inline void require(bool cond, Errc code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

// Deterministic RNG. mt19937_64 is bit-stable across platforms; the
// distribution transforms are hand-rolled because the std ones are not.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // inclusive bounds, unbiased via 128-bit multiply-shift rejection
  int64_t uniform_int(int64_t lo, int64_t hi);

  // standard normal via Box-Muller, one spare cached
  double normal();
  double normal(double mu, double sd) { return mu + sd * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(0, static_cast<int64_t>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<size_t>(uniform_int(0, static_cast<int64_t>(v.size()) - 1))];
  }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

uint64_t fnv1a64(const void* data, size_t n);
uint64_t fnv1a64(const std::string& s);
// mixes a tag into a base seed to derive independent substreams
uint64_t derive_seed(uint64_t base, uint64_t stream);
uint64_t derive_seed(uint64_t base, const std::string& stream);
std::string hex64(uint64_t v);

}  // namespace david
