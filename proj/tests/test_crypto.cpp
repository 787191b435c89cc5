#include "sba/crypto.hpp"

#include <set>
#include <stdexcept>

#include "doctest.h"
#include "sba/io.hpp"
#include "sba/rng.hpp"

using namespace sba;

namespace {

std::vector<uint8_t> ascii(std::string_view s) {
  return std::vector<uint8_t>(s.begin(), s.end());
}

}  // namespace

TEST_CASE("SHA3-256 known answers") {
  // FIPS 202 / NIST CAVP vectors.
  CHECK(sha3_256({}).hex() ==
        "a7ffc6f8bf1ed76651c14756a061d662f580ff4de43b49fa82d80a4b80f8434a");
  CHECK(sha3_256(ascii("abc")).hex() ==
        "3a985da74fe225b2045c172d6bd390bd855f086e3e9d525b46bfe24511431532");
  CHECK(sha3_256(std::vector<uint8_t>(200, 0xa3)).hex() ==
        "79f38adec5c20307a98ef76e8324afbfd46cfd81b22e3973c65fa1bd9de31787");
  // Rate-boundary lengths (rate is 136 bytes).
  CHECK(sha3_256(std::vector<uint8_t>(135, 'a')).hex() ==
        "8094bb53c44cfb1e67b7c30447f9a1c33696d2463ecc1d9c92538913392843c9");
  CHECK(sha3_256(std::vector<uint8_t>(136, 'a')).hex() ==
        "3fc5559f14db8e453a0a3091edbd2bc25e11528d81c66fa570a4efdcc2695ee1");
  CHECK(sha3_256(std::vector<uint8_t>(300, 'a')).hex() ==
        "8a5720b2ca0cae7b89ad399c5daab22c29f5c72bcf30ab81e807d9bda95b4580");
}

TEST_CASE("streaming equals one-shot hashing") {
  Rng rng(5);
  std::vector<uint8_t> data(1000);
  for (auto& b : data) b = static_cast<uint8_t>(rng.next_u64());

  for (size_t cut1 : {0ul, 1ul, 135ul, 136ul, 137ul, 999ul}) {
    Sha3_256 h;
    h.update(std::span(data).subspan(0, cut1));
    h.update(std::span(data).subspan(cut1));
    CHECK(h.finalize() == sha3_256(data));
  }
}

TEST_CASE("hashing is deterministic and bit-sensitive") {
  const auto msg = ascii("enrollment substring");
  CHECK(sha3_256(msg) == sha3_256(msg));
  auto tweaked = msg;
  tweaked[3] ^= 0x01;
  CHECK(sha3_256(msg) != sha3_256(tweaked));
}

TEST_CASE("HMAC-SHA3-256 known answers") {
  // NIST example values for keylen <, =, > block size (136 bytes).
  std::vector<uint8_t> key32(32), key136(136), key168(168);
  for (size_t i = 0; i < key32.size(); ++i) key32[i] = static_cast<uint8_t>(i);
  for (size_t i = 0; i < key136.size(); ++i) key136[i] = static_cast<uint8_t>(i);
  for (size_t i = 0; i < key168.size(); ++i) key168[i] = static_cast<uint8_t>(i);

  CHECK(hmac_sha3_256(key32, ascii("Sample message for keylen<blocklen")).hex() ==
        "4fe8e202c4f058e8dddc23d8c34e467343e23555e24fc2f025d598f558f67205");
  CHECK(hmac_sha3_256(key136, ascii("Sample message for keylen=blocklen")).hex() ==
        "68b94e2e538a9be4103bebb5aa016d47961d4d1aa906061313b557f8af2c3faa");
  CHECK(hmac_sha3_256(key168, ascii("Sample message for keylen>blocklen")).hex() ==
        "9bcf2c238e235c3ce88404e813bd2f3a97185ac6f238c63d6229a00b07974258");
}

TEST_CASE("preimage encoding") {
  SUBCASE("documented layout, no domain separation") {
    const auto bytes = encode_preimage(std::nullopt, BitString::from_bits("10000001"));
    CHECK(bytes == std::vector<uint8_t>{0x08, 0x00, 0x00, 0x00, 0x81});
  }
  SUBCASE("domain separation distinguishes subset indices") {
    const BitString w = BitString::from_bits("10000001");
    CHECK(encode_preimage(0, w) != encode_preimage(1, w));
  }
  SUBCASE("single-bit substring") {
    CHECK(encode_preimage(std::nullopt, BitString::from_bits("0")).size() == 5);
  }
}

TEST_CASE("preimage encoding is injective over (index, substring)") {
  // Exhaustive over k = 16 with two subset indices.
  std::set<std::vector<uint8_t>> seen;
  for (uint32_t index = 0; index < 2; ++index) {
    for (uint32_t value = 0; value < (1u << 16); ++value) {
      BitString w(16);
      for (uint32_t b = 0; b < 16; ++b) w.set(b, (value >> b) & 1);
      seen.insert(encode_preimage(index, w));
    }
  }
  CHECK(seen.size() == 2u << 16);
}

TEST_CASE("sealed key provider") {
  std::array<uint8_t, 32> key_a{};
  std::array<uint8_t, 32> key_b{};
  key_b[0] = 1;
  const SealedKeyProvider a(key_a);
  const SealedKeyProvider b(key_b);
  const auto msg = ascii("substring preimage");

  CHECK(prf_eval(a, msg) == prf_eval(a, msg));
  CHECK(prf_eval(a, msg) != prf_eval(b, msg));
  CHECK(prf_eval(a, msg) == hmac_sha3_256(key_a, msg));

  CHECK_THROWS_AS(SealedKeyProvider::from_hex("abcd"), std::invalid_argument);
  const auto from_hex = SealedKeyProvider::from_hex(to_hex(key_b));
  CHECK(prf_eval(from_hex, msg) == prf_eval(b, msg));
}

TEST_CASE("digest hex round trip") {
  const Digest d = sha3_256(ascii("x"));
  CHECK(Digest::from_hex(d.hex()) == d);
  CHECK_THROWS_AS(Digest::from_hex("00ff"), std::invalid_argument);
}
