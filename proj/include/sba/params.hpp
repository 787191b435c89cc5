#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sba {

enum class HashMode : uint8_t { plain_hash, keyed_prf };

inline std::string_view to_string(HashMode m) {
  return m == HashMode::plain_hash ? "plain_hash" : "keyed_prf";
}

inline HashMode hash_mode_from_string(std::string_view s) {
  if (s == "plain_hash" || s == "plain") return HashMode::plain_hash;
  if (s == "keyed_prf" || s == "prf") return HashMode::keyed_prf;
  throw std::invalid_argument("unknown hash mode: " + std::string(s));
}

/// Global protocol parameters.
struct SystemParams {
  uint32_t n = 4096;   // bit-string length out of the LSH
  uint32_t k = 110;    // substring length
  uint32_t m = 1000;   // number of subsets
  uint32_t tau = 1;    // match threshold
  double zeta = 1.0;   // weighting exponent for subset sampling
  HashMode hash_mode = HashMode::plain_hash;
  bool domain_separation = true;

  /// Number of indices excluded from each subset.
  uint32_t t() const { return n - k; }

  void validate() const {
    if (k == 0 || k >= n) throw std::invalid_argument("require 0 < k < n");
    if (n > 65536) throw std::invalid_argument("n exceeds the u16 index format limit");
    if (m < 1) throw std::invalid_argument("require m >= 1");
    if (tau < 1 || tau > m) throw std::invalid_argument("require 1 <= tau <= m");
    if (!(zeta >= 0.0)) throw std::invalid_argument("require zeta >= 0");
  }
};

}  // namespace sba
