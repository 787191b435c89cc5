#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sba/bitstring.hpp"

namespace sba {

/// 256-bit hash output, stored in full.
struct Digest {
  std::array<uint8_t, 32> bytes{};

  auto operator<=>(const Digest&) const = default;

  std::string hex() const;
  static Digest from_hex(std::string_view hex);
};

/// Hash for unordered containers. Digest bytes are already uniform, so the
/// leading 8 bytes are as good a hash as any.
struct DigestHasher {
  size_t operator()(const Digest& d) const noexcept {
    uint64_t v;
    std::memcpy(&v, d.bytes.data(), 8);
    return static_cast<size_t>(v);
  }
};

/// Incremental SHA3-256 (FIPS 202), rate 136 bytes.
class Sha3_256 {
 public:
  static constexpr size_t kRateBytes = 136;
  static constexpr size_t kDigestBytes = 32;

  void update(std::span<const uint8_t> data);
  Digest finalize();

 private:
  void absorb_block(const uint8_t* block);

  uint64_t state_[25] = {};
  uint8_t buffer_[kRateBytes] = {};
  size_t buffered_ = 0;
};

/// One-shot SHA3-256.
Digest sha3_256(std::span<const uint8_t> data);

/// HMAC instantiated with SHA3-256 (block size 136 bytes).
Digest hmac_sha3_256(std::span<const uint8_t> key, std::span<const uint8_t> message);

/// Canonical byte encoding of a substring before hashing:
/// [u32le subset index, when domain separation is on] || u32le bit length ||
/// packed MSB-first bits. Injective over (index, substring) for a fixed
/// configuration.
std::vector<uint8_t> encode_preimage(std::optional<uint32_t> subset_index,
                                     const BitString& w);

/// Evaluates a keyed deterministic function without exposing the key.
class KeyProvider {
 public:
  virtual ~KeyProvider() = default;
  virtual Digest evaluate(std::span<const uint8_t> preimage) const = 0;
};

/// In-memory key provider; the key is write-once at construction and has no
/// accessor. Evaluation is HMAC-SHA3-256 under the sealed key.
class SealedKeyProvider final : public KeyProvider {
 public:
  explicit SealedKeyProvider(const std::array<uint8_t, 32>& key) : key_(key) {}
  static SealedKeyProvider from_hex(std::string_view hex);

  Digest evaluate(std::span<const uint8_t> preimage) const override;

 private:
  std::array<uint8_t, 32> key_;
};

/// Keyed-PRF evaluation through a provider.
Digest prf_eval(const KeyProvider& key, std::span<const uint8_t> preimage);

}  // namespace sba
