#include "sba/service.hpp"

#include <stdexcept>

#include "doctest.h"
#include "sba/rng.hpp"
#include "test_util.hpp"

using namespace sba;

namespace {

struct ServiceFixture {
  SubsetPlan plan;
  ShardedStore store;
  DigestConfig crypto;
  std::unique_ptr<Service> service;

  explicit ServiceFixture(PayloadPolicy policy = PayloadPolicy::digests_only,
                          uint32_t tau = 1) {
    SystemParams params;
    params.n = 128;
    params.k = 32;
    params.m = 12;
    plan = uniform_plan(params, 9);
    ServiceConfig cfg;
    cfg.policy = policy;
    cfg.tau = tau;
    service = std::make_unique<Service>(store, plan, crypto, cfg);
    service->start();
  }

  WireClient client() const { return WireClient("127.0.0.1", service->port()); }
};

}  // namespace

TEST_CASE("wire enroll, auth, revoke, status round trip") {
  ServiceFixture fx;
  Rng rng(1);
  const BitString v = BitString::random(128, rng);
  const auto digests = derive_digests(v, fx.plan, fx.crypto);

  auto client = fx.client();

  SUBCASE("auth against an empty store returns null") {
    const auto r = parse_wire_response(client.request("auth - " + digests_payload(digests)));
    CHECK(r.ok);
    CHECK_FALSE(r.id.has_value());
    CHECK(r.count == 0);
  }

  SUBCASE("enroll then auth matches with the full count") {
    CHECK(parse_wire_response(client.request("enroll 41 " + digests_payload(digests))).ok);
    const auto r = parse_wire_response(client.request("auth - " + digests_payload(digests)));
    CHECK(r.ok);
    REQUIRE(r.id.has_value());
    CHECK(*r.id == 41);
    CHECK(r.count == 12);

    const auto status = parse_wire_response(client.request("status - -"));
    CHECK(status.ok);
    CHECK(status.detail == "enrolled=1 shards=1 m=12 k=32");

    CHECK(parse_wire_response(client.request("revoke 41 -")).ok);
    const auto after =
        parse_wire_response(client.request("auth - " + digests_payload(digests)));
    CHECK(after.ok);
    CHECK_FALSE(after.id.has_value());
  }

  SUBCASE("duplicate enrollment returns a protocol error") {
    CHECK(parse_wire_response(client.request("enroll 41 " + digests_payload(digests))).ok);
    const auto r =
        parse_wire_response(client.request("enroll 41 " + digests_payload(digests)));
    CHECK_FALSE(r.ok);
  }
}

TEST_CASE("protocol errors never kill the connection") {
  ServiceFixture fx;
  auto client = fx.client();

  CHECK_FALSE(parse_wire_response(client.request("bogus - -")).ok);
  CHECK_FALSE(parse_wire_response(client.request("enroll")).ok);
  CHECK_FALSE(parse_wire_response(client.request("enroll x digests:00")).ok);
  CHECK_FALSE(parse_wire_response(client.request("auth - digests:zz")).ok);
  CHECK_FALSE(parse_wire_response(client.request("auth - unknown:00")).ok);
  CHECK_FALSE(parse_wire_response(client.request("revoke 9 -")).ok);

  // The connection still serves valid requests afterwards.
  CHECK(parse_wire_response(client.request("status - -")).ok);
}

TEST_CASE("digest lists of the wrong length are rejected") {
  ServiceFixture fx;
  auto client = fx.client();
  Rng rng(2);
  const BitString v = BitString::random(128, rng);
  auto digests = derive_digests(v, fx.plan, fx.crypto);
  digests.pop_back();
  const auto r = parse_wire_response(client.request("auth - " + digests_payload(digests)));
  CHECK_FALSE(r.ok);
  CHECK(r.detail.find("12") != std::string::npos);
}

TEST_CASE("digest-only mode refuses raw bit strings") {
  ServiceFixture fx(PayloadPolicy::digests_only);
  auto client = fx.client();
  Rng rng(3);
  const BitString v = BitString::random(128, rng);
  const auto r = parse_wire_response(client.request("enroll 1 " + bits_payload(v)));
  CHECK_FALSE(r.ok);
  CHECK(r.detail.find("disabled") != std::string::npos);
}

TEST_CASE("server-side hashing matches local digest derivation") {
  ServiceFixture fx(PayloadPolicy::both);
  auto client = fx.client();
  Rng rng(4);
  const BitString v = BitString::random(128, rng);

  CHECK(parse_wire_response(client.request("enroll 7 " + bits_payload(v))).ok);
  const auto via_bits = parse_wire_response(client.request("auth - " + bits_payload(v)));
  const auto via_digests = parse_wire_response(
      client.request("auth - " + digests_payload(derive_digests(v, fx.plan, fx.crypto))));
  REQUIRE(via_bits.id.has_value());
  REQUIRE(via_digests.id.has_value());
  CHECK(*via_bits.id == 7);
  CHECK(*via_digests.id == 7);
  CHECK(via_bits.count == via_digests.count);
}

TEST_CASE("oversized frames are rejected") {
  SystemParams params;
  params.n = 128;
  params.k = 32;
  params.m = 12;
  const SubsetPlan plan = uniform_plan(params, 9);
  ShardedStore store;
  ServiceConfig cfg;
  cfg.max_frame_bytes = 64;
  Service service(store, plan, DigestConfig{}, cfg);
  service.start();

  WireClient client("127.0.0.1", service.port());
  const std::string big(1000, 'x');
  const auto response = parse_wire_response(client.request("auth - " + big));
  CHECK_FALSE(response.ok);
  CHECK(response.detail.find("large") != std::string::npos);
  service.stop();
}

TEST_CASE("wire sequences reproduce direct engine results") {
  ServiceFixture fx(PayloadPolicy::both, 2);
  auto client = fx.client();

  // Clone of the service store driven directly through the engine.
  ShardedStore direct;
  Rng rng(5);
  for (uint32_t id = 100; id < 110; ++id) {
    const BitString v = BitString::random(128, rng);
    const auto digests = derive_digests(v, fx.plan, fx.crypto);
    CHECK(parse_wire_response(client.request(
              "enroll " + std::to_string(id) + " " + digests_payload(digests))).ok);
    direct.enroll(id, digests);

    Rng probe_rng(id);
    const BitString probe = v.flipped_copy(0.1, probe_rng);
    const auto probe_digests = derive_digests(probe, fx.plan, fx.crypto);
    const auto wire =
        parse_wire_response(client.request("auth - " + digests_payload(probe_digests)));
    const auto local = direct.authenticate(probe_digests, 2);
    CHECK(wire.id == local.matched_id);
    CHECK(wire.count == local.match_count);
  }
}
