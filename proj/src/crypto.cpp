#include "sba/crypto.hpp"

#include <bit>
#include <stdexcept>

#include "sba/io.hpp"

namespace sba {
namespace {

constexpr uint64_t kRoundConstants[24] = {
    0x0000000000000001ULL, 0x0000000000008082ULL, 0x800000000000808aULL,
    0x8000000080008000ULL, 0x000000000000808bULL, 0x0000000080000001ULL,
    0x8000000080008081ULL, 0x8000000000008009ULL, 0x000000000000008aULL,
    0x0000000000000088ULL, 0x0000000080008009ULL, 0x000000008000000aULL,
    0x000000008000808bULL, 0x800000000000008bULL, 0x8000000000008089ULL,
    0x8000000000008003ULL, 0x8000000000008002ULL, 0x8000000000000080ULL,
    0x000000000000800aULL, 0x800000008000000aULL, 0x8000000080008081ULL,
    0x8000000000008080ULL, 0x0000000080000001ULL, 0x8000000080008008ULL,
};

// Lane visit order and rotation amounts for the combined rho+pi step.
constexpr int kPiLane[24] = {10, 7,  11, 17, 18, 3, 5,  16, 8,  21, 24, 4,
                             15, 23, 19, 13, 12, 2, 20, 14, 22, 9,  6,  1};
constexpr int kRhoOffset[24] = {1,  3,  6,  10, 15, 21, 28, 36, 45, 55, 2,  14,
                                27, 41, 56, 8,  25, 43, 62, 18, 39, 61, 20, 44};

void keccak_f1600(uint64_t a[25]) {
  for (int round = 0; round < 24; ++round) {
    // theta
    uint64_t c[5];
    for (int x = 0; x < 5; ++x) c[x] = a[x] ^ a[x + 5] ^ a[x + 10] ^ a[x + 15] ^ a[x + 20];
    for (int x = 0; x < 5; ++x) {
      const uint64_t d = c[(x + 4) % 5] ^ std::rotl(c[(x + 1) % 5], 1);
      for (int y = 0; y < 25; y += 5) a[x + y] ^= d;
    }
    // rho + pi
    uint64_t current = a[1];
    for (int i = 0; i < 24; ++i) {
      const int lane = kPiLane[i];
      const uint64_t next = a[lane];
      a[lane] = std::rotl(current, kRhoOffset[i]);
      current = next;
    }
    // chi
    for (int y = 0; y < 25; y += 5) {
      uint64_t row[5];
      for (int x = 0; x < 5; ++x) row[x] = a[y + x];
      for (int x = 0; x < 5; ++x) a[y + x] = row[x] ^ (~row[(x + 1) % 5] & row[(x + 2) % 5]);
    }
    // iota
    a[0] ^= kRoundConstants[round];
  }
}

}  // namespace

std::string Digest::hex() const { return to_hex(bytes); }

Digest Digest::from_hex(std::string_view hex) {
  const auto raw = sba::from_hex(hex);
  if (raw.size() != 32) throw std::invalid_argument("digest hex must decode to 32 bytes");
  Digest d;
  std::copy(raw.begin(), raw.end(), d.bytes.begin());
  return d;
}

void Sha3_256::absorb_block(const uint8_t* block) {
  for (size_t i = 0; i < kRateBytes; ++i)
    state_[i / 8] ^= static_cast<uint64_t>(block[i]) << (8 * (i % 8));
  keccak_f1600(state_);
}

void Sha3_256::update(std::span<const uint8_t> data) {
  size_t offset = 0;
  if (buffered_ > 0) {
    const size_t take = std::min(kRateBytes - buffered_, data.size());
    std::memcpy(buffer_ + buffered_, data.data(), take);
    buffered_ += take;
    offset = take;
    if (buffered_ == kRateBytes) {
      absorb_block(buffer_);
      buffered_ = 0;
    }
  }
  while (data.size() - offset >= kRateBytes) {
    absorb_block(data.data() + offset);
    offset += kRateBytes;
  }
  if (offset < data.size()) {
    std::memcpy(buffer_ + buffered_, data.data() + offset, data.size() - offset);
    buffered_ += data.size() - offset;
  }
}

Digest Sha3_256::finalize() {
  // SHA-3 domain padding: 0x06 ... 0x80 within the rate block.
  std::memset(buffer_ + buffered_, 0, kRateBytes - buffered_);
  buffer_[buffered_] = 0x06;
  buffer_[kRateBytes - 1] |= 0x80;
  absorb_block(buffer_);

  Digest out;
  for (size_t i = 0; i < kDigestBytes; ++i)
    out.bytes[i] = static_cast<uint8_t>(state_[i / 8] >> (8 * (i % 8)));
  // Reset so a finalized hasher cannot silently continue absorbing.
  *this = Sha3_256{};
  return out;
}

Digest sha3_256(std::span<const uint8_t> data) {
  Sha3_256 h;
  h.update(data);
  return h.finalize();
}

Digest hmac_sha3_256(std::span<const uint8_t> key, std::span<const uint8_t> message) {
  constexpr size_t kBlock = Sha3_256::kRateBytes;
  std::array<uint8_t, kBlock> padded{};
  if (key.size() > kBlock) {
    const Digest kd = sha3_256(key);
    std::copy(kd.bytes.begin(), kd.bytes.end(), padded.begin());
  } else {
    std::copy(key.begin(), key.end(), padded.begin());
  }

  std::array<uint8_t, kBlock> ipad;
  std::array<uint8_t, kBlock> opad;
  for (size_t i = 0; i < kBlock; ++i) {
    ipad[i] = padded[i] ^ 0x36;
    opad[i] = padded[i] ^ 0x5c;
  }

  Sha3_256 inner;
  inner.update(ipad);
  inner.update(message);
  const Digest inner_digest = inner.finalize();

  Sha3_256 outer;
  outer.update(opad);
  outer.update(inner_digest.bytes);
  return outer.finalize();
}

std::vector<uint8_t> encode_preimage(std::optional<uint32_t> subset_index,
                                     const BitString& w) {
  std::vector<uint8_t> out;
  out.reserve((subset_index ? 8 : 4) + w.bytes().size());
  if (subset_index) put_u32le(out, *subset_index);
  put_u32le(out, w.length());
  put_bytes(out, w.bytes());
  return out;
}

SealedKeyProvider SealedKeyProvider::from_hex(std::string_view hex) {
  const auto raw = sba::from_hex(hex);
  if (raw.size() != 32) throw std::invalid_argument("PRF key must be 32 bytes of hex");
  std::array<uint8_t, 32> key;
  std::copy(raw.begin(), raw.end(), key.begin());
  return SealedKeyProvider(key);
}

Digest SealedKeyProvider::evaluate(std::span<const uint8_t> preimage) const {
  return hmac_sha3_256(key_, preimage);
}

Digest prf_eval(const KeyProvider& key, std::span<const uint8_t> preimage) {
  return key.evaluate(preimage);
}

}  // namespace sba
