#include "david/common.hpp"

#include <cmath>
#include <cstdio>

namespace david {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::dimension_mismatch: return "dimension-mismatch";
    case Errc::shape_mismatch: return "shape-mismatch";
    case Errc::id_mismatch: return "id-mismatch";
    case Errc::index_out_of_range: return "index-out-of-range";
    case Errc::insufficient_documents: return "insufficient-documents";
    case Errc::token_overflow: return "token-overflow";
    case Errc::entity_overflow: return "entity-overflow";
    case Errc::no_entities: return "no-entities";
    case Errc::empty_query: return "empty-query";
    case Errc::empty_guidance: return "empty-guidance";
    case Errc::missing_annotation: return "missing-annotation";
    case Errc::missing_label: return "missing-label";
    case Errc::provider_failure: return "provider-failure";
    case Errc::io_failure: return "io-failure";
  }
  return "unknown-error";
}

int64_t Rng::uniform_int(int64_t lo, int64_t hi) {
  require(lo <= hi, Errc::invalid_argument, "uniform_int: lo > hi");
  uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<int64_t>(next_u64());  // full 64-bit range
  // Lemire's multiply-shift with rejection for exact uniformity.
  uint64_t x = next_u64();
  __uint128_t m = static_cast<__uint128_t>(x) * span;
  uint64_t l = static_cast<uint64_t>(m);
  if (l < span) {
    uint64_t t = (0 - span) % span;
    while (l < t) {
      x = next_u64();
      m = static_cast<__uint128_t>(x) * span;
      l = static_cast<uint64_t>(m);
    }
  }
  return lo + static_cast<int64_t>(m >> 64);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller; u1 in (0,1] so log stays finite.
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * M_PI * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

uint64_t fnv1a64(const void* data, size_t n) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  uint64_t h = 0xcbf29ce484222325ull;
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

uint64_t derive_seed(uint64_t base, uint64_t stream) {
  unsigned char buf[16];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(base >> (8 * i));
  for (int i = 0; i < 8; ++i) buf[8 + i] = static_cast<unsigned char>(stream >> (8 * i));
  return fnv1a64(buf, sizeof buf);
}

uint64_t derive_seed(uint64_t base, const std::string& stream) {
  return derive_seed(base, fnv1a64(stream));
}

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

}  // namespace david
