#include "sba/entropy.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "sba/rng.hpp"
#include "test_util.hpp"

using namespace sba;

namespace {

std::vector<BitString> random_strings(uint32_t count, uint32_t length, uint64_t seed) {
  Rng rng(seed);
  std::vector<BitString> out;
  out.reserve(count);
  for (uint32_t i = 0; i < count; ++i) out.push_back(BitString::random(length, rng));
  return out;
}

std::vector<LabeledSample> enroll_only(const std::vector<BitString>& strings) {
  std::vector<LabeledSample> samples;
  for (uint32_t id = 0; id < strings.size(); ++id)
    samples.push_back({id, Session::enroll, strings[id]});
  return samples;
}

/// Ground truth of n/2 bits, each written twice into adjacent positions.
std::vector<BitString> duplicated_bit_strings(uint32_t count, uint32_t n, uint64_t seed) {
  Rng rng(seed);
  std::vector<BitString> out;
  for (uint32_t c = 0; c < count; ++c) {
    const BitString half = BitString::random(n / 2, rng);
    BitString full(n);
    for (uint32_t i = 0; i < n / 2; ++i) {
      full.set(2 * i, half.get(i));
      full.set(2 * i + 1, half.get(i));
    }
    out.push_back(std::move(full));
  }
  return out;
}

}  // namespace

TEST_CASE("unlike statistics on degenerate inputs") {
  const BitString z = BitString::from_bits("0000");
  SUBCASE("identical substrings") {
    const std::vector<BitString> strings = {z, z, z};
    const auto stats = unlike_statistics(strings);
    CHECK(stats.mu == 0.0);
    CHECK(stats.sigma == 0.0);
    CHECK(stats.pairs == 3);
  }
  SUBCASE("complementary substrings") {
    const std::vector<BitString> strings = {z, z.complement()};
    const auto stats = unlike_statistics(strings);
    CHECK(stats.mu == 1.0);
    CHECK(stats.sigma == 0.0);
  }
  SUBCASE("fewer than two identities") {
    const std::vector<BitString> strings = {z};
    CHECK_THROWS_AS(unlike_statistics(strings), std::invalid_argument);
  }
}

TEST_CASE("unlike statistics of uniform substrings follow binomial moments") {
  const auto strings = random_strings(1000, 64, 41);
  const auto stats = unlike_statistics(strings);
  CHECK(stats.pairs == 1000ull * 999 / 2);
  CHECK(std::fabs(stats.mu - 0.5) < 0.01);
  const double variance = stats.sigma * stats.sigma;
  CHECK(std::fabs(variance - 0.25 / 64) < 0.1 * 0.25 / 64);
}

TEST_CASE("pair subsampling preserves the moments") {
  const auto strings = random_strings(400, 64, 43);
  const auto full = unlike_statistics(strings);
  const auto sampled = unlike_statistics(strings, 2000, 7);
  CHECK(sampled.pairs == 2000);
  CHECK(std::fabs(sampled.mu - full.mu) < 0.01);
  CHECK(std::fabs(sampled.sigma - full.sigma) < 0.2 * full.sigma);
}

TEST_CASE("min-entropy estimator evaluates the closed form") {
  // mu = 1/2 and sigma^2 = 1/(4k) simplify to exactly k bits.
  CHECK(estimate_min_entropy(0.5, std::sqrt(0.25 / 64)) ==
        doctest::Approx(64.0).epsilon(1e-12));
  CHECK(estimate_min_entropy(0.5, 0.05) == doctest::Approx(100.0).epsilon(1e-12));

  CHECK_THROWS_AS(estimate_min_entropy(0.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(estimate_min_entropy(1.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(estimate_min_entropy(0.5, 0.0), std::invalid_argument);
}

TEST_CASE("entropy report on iid-uniform strings returns about k bits") {
  SystemParams params;
  params.n = 256;
  params.k = 64;
  params.m = 20;
  const SubsetPlan plan = uniform_plan(params, 3);
  const auto samples = enroll_only(random_strings(1000, 256, 47));
  const auto report = entropy_report(plan, samples);

  REQUIRE(report.e_bits.size() == 20);
  CHECK(report.k == 64);
  for (double e : report.e_bits) {
    CHECK(e > 64.0 * 0.85);
    CHECK(e < 64.0 * 1.15);
  }
  CHECK(report.min_bits <= report.mean_bits);
  CHECK(report.mean_bits <= report.max_bits);
}

TEST_CASE("single-subset reports collapse to one value") {
  SystemParams params;
  params.n = 128;
  params.k = 32;
  params.m = 1;
  const SubsetPlan plan = uniform_plan(params, 5);
  const auto report = entropy_report(plan, enroll_only(random_strings(300, 128, 53)));
  CHECK(report.min_bits == report.max_bits);
  CHECK(report.min_bits == report.mean_bits);
  CHECK(report.min_bits == report.e_bits[0]);
}

TEST_CASE("bit duplication lowers the estimate well below k") {
  SystemParams params;
  params.n = 128;
  params.k = 96;
  params.m = 20;
  const SubsetPlan plan = uniform_plan(params, 7);

  const auto iid = entropy_report(plan, enroll_only(random_strings(1000, 128, 59)));
  const auto dup =
      entropy_report(plan, enroll_only(duplicated_bit_strings(1000, 128, 61)));

  CHECK(dup.mean_bits < iid.mean_bits);
  CHECK(dup.mean_bits <= 0.7 * 96.0);
}

TEST_CASE("more correlation never raises the estimate") {
  // Duplication factor 1 (iid), 2 and 4 over the same n.
  SystemParams params;
  params.n = 128;
  params.k = 64;
  params.m = 10;
  const SubsetPlan plan = uniform_plan(params, 11);

  Rng rng(67);
  auto build = [&](uint32_t factor) {
    std::vector<BitString> out;
    for (int c = 0; c < 600; ++c) {
      const BitString base = BitString::random(128 / factor, rng);
      BitString full(128);
      for (uint32_t i = 0; i < 128; ++i) full.set(i, base.get(i / factor));
      out.push_back(std::move(full));
    }
    return out;
  };
  const double e1 = entropy_report(plan, enroll_only(build(1))).mean_bits;
  const double e2 = entropy_report(plan, enroll_only(build(2))).mean_bits;
  const double e4 = entropy_report(plan, enroll_only(build(4))).mean_bits;
  CHECK(e1 > e2);
  CHECK(e2 > e4);
}

TEST_CASE("entropy report input validation") {
  SystemParams params;
  params.n = 64;
  params.k = 16;
  params.m = 4;
  const SubsetPlan plan = uniform_plan(params, 13);

  SUBCASE("needs two enrolled identities") {
    const auto samples = enroll_only(random_strings(1, 64, 1));
    CHECK_THROWS_AS(entropy_report(plan, samples), std::invalid_argument);
  }
  SUBCASE("auth-only samples do not count") {
    std::vector<LabeledSample> samples;
    Rng rng(2);
    for (uint32_t id = 0; id < 5; ++id)
      samples.push_back({id, Session::auth, BitString::random(64, rng)});
    CHECK_THROWS_AS(entropy_report(plan, samples), std::invalid_argument);
  }
  SUBCASE("length mismatch") {
    const auto samples = enroll_only(random_strings(10, 32, 3));
    CHECK_THROWS_AS(entropy_report(plan, samples), std::invalid_argument);
  }
}

TEST_CASE("entropy CSV layout") {
  SystemParams params;
  params.n = 64;
  params.k = 16;
  params.m = 3;
  const SubsetPlan plan = uniform_plan(params, 17);
  const auto report = entropy_report(plan, enroll_only(random_strings(100, 64, 71)));
  const std::string csv = entropy_csv(report);

  std::istringstream lines(csv);
  std::string line;
  std::vector<std::string> all;
  while (std::getline(lines, line)) all.push_back(line);
  REQUIRE(all.size() == 5);  // header + 3 subsets + summary
  CHECK(all[0] == "subset_index,mu_unlike,sigma_unlike,e_bits");
  CHECK(all[1].rfind("0,", 0) == 0);
  CHECK(all[4].rfind("summary,", 0) == 0);

  test::TempDir dir;
  write_entropy_csv(report, dir.file("report.csv"));
  CHECK(std::filesystem::file_size(dir.file("report.csv")) == csv.size());
}
