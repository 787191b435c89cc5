#include "sba/bitstring.hpp"

#include <bit>
#include <cstring>
#include <stdexcept>
#include <string>

namespace sba {

BitString BitString::from_bits(std::string_view bits01) {
  BitString out(static_cast<uint32_t>(bits01.size()));
  for (uint32_t i = 0; i < bits01.size(); ++i) {
    const char c = bits01[i];
    if (c != '0' && c != '1') throw std::invalid_argument("bit string must be 0/1");
    if (c == '1') out.set(i, true);
  }
  return out;
}

BitString BitString::from_bytes(std::span<const uint8_t> packed, uint32_t length) {
  if (packed.size() != (length + 7) / 8)
    throw std::invalid_argument("packed byte count does not match bit length");
  BitString out(length);
  std::copy(packed.begin(), packed.end(), out.bytes_.begin());
  // Clear any stray padding bits so equality and hamming stay well defined.
  if (length % 8 != 0 && !out.bytes_.empty())
    out.bytes_.back() &= static_cast<uint8_t>(0xff << (8 - length % 8));
  return out;
}

BitString BitString::random(uint32_t length, Rng& rng) {
  BitString out(length);
  size_t i = 0;
  while (i < out.bytes_.size()) {
    uint64_t word = rng.next_u64();
    for (int b = 0; b < 8 && i < out.bytes_.size(); ++b, ++i) {
      out.bytes_[i] = static_cast<uint8_t>(word >> (8 * b));
    }
  }
  if (length % 8 != 0 && !out.bytes_.empty())
    out.bytes_.back() &= static_cast<uint8_t>(0xff << (8 - length % 8));
  return out;
}

BitString BitString::flipped_copy(double p, Rng& rng) const {
  BitString out = *this;
  for (uint32_t i = 0; i < length_; ++i) {
    if (rng.next_bernoulli(p)) out.flip(i);
  }
  return out;
}

BitString BitString::complement() const {
  BitString out = *this;
  for (auto& b : out.bytes_) b = static_cast<uint8_t>(~b);
  if (length_ % 8 != 0 && !out.bytes_.empty())
    out.bytes_.back() &= static_cast<uint8_t>(0xff << (8 - length_ % 8));
  return out;
}

BitString BitString::subselect(std::span<const uint16_t> indices) const {
  BitString out(static_cast<uint32_t>(indices.size()));
  for (uint32_t j = 0; j < indices.size(); ++j) {
    if (indices[j] >= length_) throw std::out_of_range("subset index exceeds bit length");
    if (get(indices[j])) out.set(j, true);
  }
  return out;
}

std::string BitString::to_bit_string() const {
  std::string out(length_, '0');
  for (uint32_t i = 0; i < length_; ++i)
    if (get(i)) out[i] = '1';
  return out;
}

uint32_t hamming(const BitString& a, const BitString& b) {
  if (a.length() != b.length()) throw std::invalid_argument("hamming: length mismatch");
  const auto& x = a.bytes();
  const auto& y = b.bytes();
  uint32_t acc = 0;
  size_t i = 0;
  for (; i + 8 <= x.size(); i += 8) {
    uint64_t u, v;
    std::memcpy(&u, x.data() + i, 8);
    std::memcpy(&v, y.data() + i, 8);
    acc += static_cast<uint32_t>(std::popcount(u ^ v));
  }
  for (; i < x.size(); ++i)
    acc += static_cast<uint32_t>(std::popcount(static_cast<unsigned>(x[i] ^ y[i])));
  return acc;
}

double fractional_hamming(const BitString& a, const BitString& b) {
  if (a.length() == 0) throw std::invalid_argument("fractional_hamming: empty strings");
  return static_cast<double>(hamming(a, b)) / static_cast<double>(a.length());
}

}  // namespace sba
