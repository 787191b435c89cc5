#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sba/bitstring.hpp"
#include "sba/population.hpp"
#include "sba/sampling.hpp"

namespace sba {

/// Mean and standard deviation of fractional Hamming distance over
/// cross-identity substring pairs.
struct UnlikeStats {
  double mu = 0.0;
  double sigma = 0.0;
  uint64_t pairs = 0;
};

/// Computes unlike statistics over all cross-identity pairs, or over a
/// seeded random sample of pairs when the full count exceeds pair_budget.
/// Takes exactly one substring per identity.
UnlikeStats unlike_statistics(std::span<const BitString> per_identity,
                              uint64_t pair_budget = 1'000'000, uint64_t seed = 0);

/// Degrees-of-freedom style min-entropy estimate in bits:
///   e = -mu(1-mu) log2(max(mu, 1-mu)) / sigma^2.
/// Requires 0 < mu < 1 and sigma > 0.
double estimate_min_entropy(double mu_unlike, double sigma_unlike);

struct EntropyReport {
  uint32_t k = 0;
  std::vector<double> e_bits;       // per subset
  std::vector<double> mu_unlike;    // per subset
  std::vector<double> sigma_unlike; // per subset
  double min_bits = 0.0;
  double max_bits = 0.0;
  double mean_bits = 0.0;
};

/// Per-subset min-entropy estimates over the enrollment substrings of the
/// sample set, aggregated as min/max/mean. One substring per identity (its
/// first enroll-session sample) enters the statistics.
EntropyReport entropy_report(const SubsetPlan& plan,
                             const std::vector<LabeledSample>& samples,
                             uint64_t pair_budget = 1'000'000, uint64_t seed = 0);

/// CSV with columns subset_index,mu_unlike,sigma_unlike,e_bits followed by a
/// summary row carrying min/max/mean of e_bits in the three numeric columns.
std::string entropy_csv(const EntropyReport& report);
void write_entropy_csv(const EntropyReport& report, const std::filesystem::path& path);

}  // namespace sba
