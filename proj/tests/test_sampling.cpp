#include "sba/sampling.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "doctest.h"
#include "sba/io.hpp"
#include "sba/rng.hpp"
#include "test_util.hpp"

using namespace sba;

namespace {

LabeledSample bits_sample(IdentityId id, Session session, std::string_view bits) {
  return LabeledSample{id, session, BitString::from_bits(bits)};
}

SystemParams params_nkm(uint32_t n, uint32_t k, uint32_t m) {
  SystemParams p;
  p.n = n;
  p.k = k;
  p.m = m;
  return p;
}

/// Joint-histogram mutual information I(bit; id) = H(bit) + H(id) - H(bit, id),
/// an algebraic route independent of the implementation's conditional form.
double joint_mi(const std::vector<LabeledSample>& samples, uint32_t bit) {
  std::map<IdentityId, double> id_counts;
  std::map<std::pair<IdentityId, bool>, double> joint_counts;
  double ones = 0;
  const double total = static_cast<double>(samples.size());
  for (const auto& s : samples) {
    const bool b = s.bits().get(bit);
    id_counts[s.id] += 1;
    joint_counts[{s.id, b}] += 1;
    ones += b;
  }
  auto entropy_term = [total](double count) {
    if (count == 0) return 0.0;
    const double p = count / total;
    return -p * std::log2(p);
  };
  double h_bit = entropy_term(ones) + entropy_term(total - ones);
  double h_id = 0, h_joint = 0;
  for (const auto& [id, c] : id_counts) h_id += entropy_term(c);
  for (const auto& [key, c] : joint_counts) h_joint += entropy_term(c);
  return h_bit + h_id - h_joint;
}

}  // namespace

TEST_CASE("mutual information on constructed datasets") {
  SUBCASE("constant bit carries no information") {
    const std::vector<LabeledSample> samples = {
        bits_sample(0, Session::enroll, "00"), bits_sample(0, Session::auth, "01"),
        bits_sample(1, Session::enroll, "00"), bits_sample(1, Session::auth, "01")};
    CHECK(estimate_mutual_information(samples)[0] == 0.0);
  }
  SUBCASE("identity parity bit is exactly one bit of information") {
    const std::vector<LabeledSample> samples = {
        bits_sample(0, Session::enroll, "0"), bits_sample(0, Session::auth, "0"),
        bits_sample(1, Session::enroll, "1"), bits_sample(1, Session::auth, "1")};
    CHECK(estimate_mutual_information(samples)[0] == 1.0);
  }
  SUBCASE("single identity is rejected") {
    const std::vector<LabeledSample> samples = {bits_sample(0, Session::enroll, "0"),
                                                bits_sample(0, Session::auth, "1")};
    CHECK_THROWS_AS(estimate_mutual_information(samples), std::invalid_argument);
  }
  SUBCASE("length mismatch is rejected") {
    const std::vector<LabeledSample> samples = {bits_sample(0, Session::enroll, "00"),
                                                bits_sample(1, Session::enroll, "0")};
    CHECK_THROWS_AS(estimate_mutual_information(samples), std::invalid_argument);
  }
}

TEST_CASE("plug-in estimate agrees with the joint-histogram route") {
  Rng rng(55);
  std::vector<LabeledSample> samples;
  for (IdentityId id = 0; id < 20; ++id)
    for (int s = 0; s < 3; ++s)
      samples.push_back({id, s == 0 ? Session::enroll : Session::auth,
                         BitString::random(8, rng)});
  const auto mi = estimate_mutual_information(samples);
  for (uint32_t bit = 0; bit < 8; ++bit)
    CHECK(mi[bit] == doctest::Approx(joint_mi(samples, bit)).epsilon(1e-12));
}

TEST_CASE("independent bits carry little information once ids have many samples") {
  Rng rng(77);
  std::vector<LabeledSample> samples;
  for (IdentityId id = 0; id < 50; ++id)
    for (int s = 0; s < 200; ++s)
      samples.push_back({id, s == 0 ? Session::enroll : Session::auth,
                         BitString::random(4, rng)});
  for (double v : estimate_mutual_information(samples)) CHECK(v < 0.02);
}

TEST_CASE("zeta weighting") {
  SUBCASE("equal information gives equal weights") {
    const std::vector<double> mi = {1, 1, 1, 1};
    for (double zeta : {0.0, 1.0, 7.3}) {
      for (double w : zeta_weights(mi, zeta)) CHECK(w == 0.25);
    }
  }
  SUBCASE("zeta zero ignores the measure entirely") {
    const std::vector<double> mi = {0.9, 0.0, 0.4};
    for (double w : zeta_weights(mi, 0.0)) CHECK(w == doctest::Approx(1.0 / 3));
  }
  SUBCASE("direct normalization at zeta one") {
    const auto w = zeta_weights(std::vector<double>{1, 3}, 1.0);
    CHECK(w[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(w[1] == doctest::Approx(0.75).epsilon(1e-12));
  }
  SUBCASE("all-zero information falls back to uniform") {
    const auto w = zeta_weights(std::vector<double>{0, 0, 0, 0}, 2.0);
    for (double v : w) CHECK(v == 0.25);
  }
  SUBCASE("huge zeta concentrates on the argmax without overflowing") {
    const auto w = zeta_weights(std::vector<double>{0.2, 0.9, 0.5}, 1000.0);
    CHECK(w[1] == doctest::Approx(1.0));
    CHECK(w[0] == doctest::Approx(0.0));
  }
  SUBCASE("weights sum to one and stay non-negative") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> mi(32);
      for (auto& v : mi) v = rng.next_double();
      for (double zeta : {0.0, 0.5, 1.0, 4.0}) {
        const auto w = zeta_weights(mi, zeta);
        double sum = 0;
        for (double v : w) {
          CHECK(v >= 0.0);
          sum += v;
        }
        CHECK(std::fabs(sum - 1.0) < 1e-9);
      }
    }
  }
}

TEST_CASE("subset plans have the documented shape") {
  const SubsetPlan plan = uniform_plan(params_nkm(9, 7, 3), 42);
  REQUIRE(plan.subset_count() == 3);
  for (uint32_t i = 0; i < 3; ++i) {
    const auto subset = plan.subset(i);
    REQUIRE(subset.size() == 7);
    for (size_t j = 0; j < subset.size(); ++j) {
      CHECK(subset[j] < 9);
      if (j > 0) CHECK(subset[j] > subset[j - 1]);
    }
  }
}

TEST_CASE("k = n-1 subsets omit exactly one index") {
  const SubsetPlan plan = uniform_plan(params_nkm(16, 15, 20), 8);
  for (uint32_t i = 0; i < plan.subset_count(); ++i) {
    const auto subset = plan.subset(i);
    uint32_t sum = 0;
    for (uint16_t idx : subset) sum += idx;
    const uint32_t omitted = (16 * 15) / 2 - sum;
    CHECK(omitted < 16);
  }
}

TEST_CASE("uniform sampling hits all C(4,2) subsets evenly") {
  const SubsetPlan plan = uniform_plan(params_nkm(4, 2, 100000), 77);
  std::map<std::pair<uint16_t, uint16_t>, uint32_t> counts;
  for (uint32_t i = 0; i < plan.subset_count(); ++i) {
    const auto s = plan.subset(i);
    ++counts[{s[0], s[1]}];
  }
  CHECK(counts.size() == 6);
  for (const auto& [subset, count] : counts)
    CHECK(std::fabs(count / 100000.0 - 1.0 / 6) < 0.01);
}

TEST_CASE("sequential renormalization matches the exact enumeration") {
  // n=3, weights {0.5, 0.3, 0.2}, k=2. Summing draw orders:
  //   P({0,1}) = 0.5*(0.3/0.5) + 0.3*(0.5/0.7) = 0.514285...
  //   P({0,2}) = 0.5*(0.2/0.5) + 0.2*(0.5/0.8) = 0.325
  //   P({1,2}) = 0.3*(0.2/0.7) + 0.2*(0.3/0.8) = 0.160714...
  SystemParams p = params_nkm(3, 2, 200000);
  const std::vector<double> weights = {0.5, 0.3, 0.2};
  const SubsetPlan plan = sample_subsets(p, weights, 123);
  std::map<std::pair<uint16_t, uint16_t>, double> freq;
  for (uint32_t i = 0; i < plan.subset_count(); ++i) {
    const auto s = plan.subset(i);
    freq[{s[0], s[1]}] += 1.0 / plan.subset_count();
  }
  CHECK(freq[{0, 1}] == doctest::Approx(0.5142857).epsilon(0.02));
  CHECK(freq[{0, 2}] == doctest::Approx(0.325).epsilon(0.02));
  CHECK(freq[{1, 2}] == doctest::Approx(0.1607143).epsilon(0.03));
}

TEST_CASE("inclusion frequency is monotone in weight") {
  const uint32_t n = 32;
  std::vector<double> mi(n);
  for (uint32_t i = 0; i < n; ++i) mi[i] = static_cast<double>(i + 1);
  const auto weights = zeta_weights(mi, 1.0);

  const SubsetPlan plan = sample_subsets(params_nkm(n, 8, 100000), weights, 5);
  std::vector<double> inclusion(n, 0.0);
  for (uint32_t i = 0; i < plan.subset_count(); ++i)
    for (uint16_t idx : plan.subset(i)) inclusion[idx] += 1.0;
  CHECK(test::spearman(inclusion, weights) > 0.99);
}

TEST_CASE("extreme zeta with k = 1 always picks the argmax") {
  std::vector<double> mi = {0.1, 0.2, 0.95, 0.3};
  const auto weights = zeta_weights(mi, 1000.0);
  const SubsetPlan plan = sample_subsets(params_nkm(4, 1, 500), weights, 9);
  for (uint32_t i = 0; i < plan.subset_count(); ++i) CHECK(plan.subset(i)[0] == 2);
}

TEST_CASE("fewer positive weights than k falls back to uniform over the rest") {
  const std::vector<double> weights = {1.0, 0.0, 0.0};
  const SubsetPlan plan = sample_subsets(params_nkm(3, 2, 20000), weights, 31);
  uint32_t with_one = 0, with_two = 0;
  for (uint32_t i = 0; i < plan.subset_count(); ++i) {
    const auto s = plan.subset(i);
    CHECK(s[0] == 0);  // the only positive-weight index is always drawn first
    if (s[1] == 1) ++with_one;
    if (s[1] == 2) ++with_two;
  }
  CHECK(with_one + with_two == plan.subset_count());
  CHECK(std::fabs(double(with_one) / plan.subset_count() - 0.5) < 0.02);
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(uniform_plan(params_nkm(8, 8, 1), 0), std::invalid_argument);
  CHECK_THROWS_AS(uniform_plan(params_nkm(8, 0, 1), 0), std::invalid_argument);
  CHECK_THROWS_AS(uniform_plan(params_nkm(8, 9, 1), 0), std::invalid_argument);
  CHECK_THROWS_AS(sample_subsets(params_nkm(8, 2, 1), std::vector<double>(7, 0.125), 0),
                  std::invalid_argument);
  const std::vector<double> negative = {-1.0, 2.0};
  CHECK_THROWS_AS(sample_subsets(params_nkm(2, 1, 1), negative, 0),
                  std::invalid_argument);
}

TEST_CASE("plan persistence round-trips bit-exactly") {
  test::TempDir dir;
  const SubsetPlan plan = uniform_plan(params_nkm(300, 64, 50), 2024);
  save_plan(plan, dir.file("plan.bin"));
  const SubsetPlan loaded = load_plan(dir.file("plan.bin"));
  CHECK(loaded == plan);

  save_plan(loaded, dir.file("plan2.bin"));
  CHECK(read_file(dir.file("plan.bin")) == read_file(dir.file("plan2.bin")));

  SUBCASE("same seed reproduces the same file") {
    save_plan(uniform_plan(params_nkm(300, 64, 50), 2024), dir.file("again.bin"));
    CHECK(read_file(dir.file("plan.bin")) == read_file(dir.file("again.bin")));
  }
  SUBCASE("corruption is detected") {
    auto bytes = read_file(dir.file("plan.bin"));
    bytes.resize(bytes.size() - 1);
    write_file(dir.file("bad.bin"), bytes);
    CHECK_THROWS_AS(load_plan(dir.file("bad.bin")), std::runtime_error);

    auto wrong_magic = read_file(dir.file("plan.bin"));
    wrong_magic[0] ^= 1;
    write_file(dir.file("bad2.bin"), wrong_magic);
    CHECK_THROWS_AS(load_plan(dir.file("bad2.bin")), std::runtime_error);
  }
}
