#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "sba/rng.hpp"

namespace sba {

/// Fixed-length bit vector, packed MSB-first: bit i lives in byte i/8 at
/// position 7-(i%8). Trailing bits of the last byte are always zero.
class BitString {
 public:
  BitString() = default;
  explicit BitString(uint32_t length) : length_(length), bytes_((length + 7) / 8, 0) {}

  /// Parses a string of '0'/'1' characters, bit 0 first.
  static BitString from_bits(std::string_view bits01);

  /// Wraps packed MSB-first bytes; byte count must equal ceil(length/8).
  static BitString from_bytes(std::span<const uint8_t> packed, uint32_t length);

  static BitString random(uint32_t length, Rng& rng);

  uint32_t length() const { return length_; }
  bool empty() const { return length_ == 0; }

  bool get(uint32_t i) const { return (bytes_[i >> 3] >> (7 - (i & 7))) & 1u; }

  void set(uint32_t i, bool value) {
    const uint8_t mask = static_cast<uint8_t>(1u << (7 - (i & 7)));
    if (value)
      bytes_[i >> 3] |= mask;
    else
      bytes_[i >> 3] &= static_cast<uint8_t>(~mask);
  }

  void flip(uint32_t i) { bytes_[i >> 3] ^= static_cast<uint8_t>(1u << (7 - (i & 7))); }

  /// Packed MSB-first representation, zero-padded in the last byte.
  const std::vector<uint8_t>& bytes() const { return bytes_; }

  /// Copy where each bit is flipped independently with probability p.
  BitString flipped_copy(double p, Rng& rng) const;

  BitString complement() const;

  /// Gathers the bits at the given positions, producing a string of
  /// length indices.size() in the order given.
  BitString subselect(std::span<const uint16_t> indices) const;

  std::string to_bit_string() const;

  friend bool operator==(const BitString&, const BitString&) = default;

 private:
  uint32_t length_ = 0;
  std::vector<uint8_t> bytes_;
};

/// Number of positions where a and b differ. Lengths must match.
uint32_t hamming(const BitString& a, const BitString& b);

/// hamming(a, b) / length, in [0, 1].
double fractional_hamming(const BitString& a, const BitString& b);

}  // namespace sba
