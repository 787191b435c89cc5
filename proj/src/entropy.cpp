#include "sba/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "sba/io.hpp"
#include "sba/rng.hpp"

namespace sba {

UnlikeStats unlike_statistics(std::span<const BitString> per_identity,
                              uint64_t pair_budget, uint64_t seed) {
  const size_t count = per_identity.size();
  if (count < 2) throw std::invalid_argument("unlike statistics require >= 2 identities");
  if (pair_budget < 1) throw std::invalid_argument("pair budget must be >= 1");

  double sum = 0.0;
  double sum_sq = 0.0;
  uint64_t pairs = 0;
  const uint64_t all_pairs = static_cast<uint64_t>(count) * (count - 1) / 2;
  if (all_pairs <= pair_budget) {
    for (size_t i = 0; i + 1 < count; ++i) {
      for (size_t j = i + 1; j < count; ++j) {
        const double d = fractional_hamming(per_identity[i], per_identity[j]);
        sum += d;
        sum_sq += d * d;
        ++pairs;
      }
    }
  } else {
    Rng rng(seed);
    const auto n32 = static_cast<uint32_t>(count);
    for (uint64_t s = 0; s < pair_budget; ++s) {
      const uint32_t i = rng.next_below(n32);
      uint32_t j = rng.next_below(n32 - 1);
      if (j >= i) ++j;
      const double d = fractional_hamming(per_identity[i], per_identity[j]);
      sum += d;
      sum_sq += d * d;
      ++pairs;
    }
  }

  UnlikeStats stats;
  stats.pairs = pairs;
  stats.mu = sum / static_cast<double>(pairs);
  const double variance = std::max(0.0, sum_sq / static_cast<double>(pairs) - stats.mu * stats.mu);
  stats.sigma = std::sqrt(variance);
  return stats;
}

double estimate_min_entropy(double mu_unlike, double sigma_unlike) {
  if (!(mu_unlike > 0.0 && mu_unlike < 1.0))
    throw std::invalid_argument("min-entropy estimate requires 0 < mu < 1");
  if (!(sigma_unlike > 0.0))
    throw std::invalid_argument("min-entropy estimate requires sigma > 0");
  const double dominant = std::max(mu_unlike, 1.0 - mu_unlike);
  return -mu_unlike * (1.0 - mu_unlike) * std::log2(dominant) /
         (sigma_unlike * sigma_unlike);
}

EntropyReport entropy_report(const SubsetPlan& plan,
                             const std::vector<LabeledSample>& samples,
                             uint64_t pair_budget, uint64_t seed) {
  // One enrollment string per identity, first occurrence wins.
  std::map<IdentityId, const BitString*> enrollment;
  for (const auto& s : samples) {
    if (s.session != Session::enroll) continue;
    if (!s.is_bits()) throw std::invalid_argument("entropy report requires bit strings");
    enrollment.emplace(s.id, &s.bits());
  }
  if (enrollment.size() < 2)
    throw std::invalid_argument("entropy report requires >= 2 enrolled identities");
  for (const auto& [id, bits] : enrollment)
    if (bits->length() != plan.params.n)
      throw std::invalid_argument("sample length does not match plan");

  EntropyReport report;
  report.k = plan.params.k;
  report.e_bits.reserve(plan.subset_count());

  std::vector<BitString> substrings;
  substrings.reserve(enrollment.size());
  for (uint32_t i = 0; i < plan.subset_count(); ++i) {
    substrings.clear();
    for (const auto& [id, bits] : enrollment)
      substrings.push_back(bits->subselect(plan.subset(i)));
    const UnlikeStats stats =
        unlike_statistics(substrings, pair_budget, mix64(seed + i));
    report.mu_unlike.push_back(stats.mu);
    report.sigma_unlike.push_back(stats.sigma);
    report.e_bits.push_back(estimate_min_entropy(stats.mu, stats.sigma));
  }

  report.min_bits = *std::min_element(report.e_bits.begin(), report.e_bits.end());
  report.max_bits = *std::max_element(report.e_bits.begin(), report.e_bits.end());
  double total = 0.0;
  for (double e : report.e_bits) total += e;
  report.mean_bits = total / static_cast<double>(report.e_bits.size());
  return report;
}

std::string entropy_csv(const EntropyReport& report) {
  std::ostringstream out;
  out.precision(10);
  out << "subset_index,mu_unlike,sigma_unlike,e_bits\n";
  for (size_t i = 0; i < report.e_bits.size(); ++i) {
    out << i << ',' << report.mu_unlike[i] << ',' << report.sigma_unlike[i] << ','
        << report.e_bits[i] << '\n';
  }
  out << "summary," << report.min_bits << ',' << report.max_bits << ','
      << report.mean_bits << '\n';
  return out.str();
}

void write_entropy_csv(const EntropyReport& report, const std::filesystem::path& path) {
  write_text_file(path, entropy_csv(report));
}

}  // namespace sba
