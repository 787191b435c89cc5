#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sba/params.hpp"
#include "sba/population.hpp"

namespace sba {

/// Per-bit mutual information and the sampling weights derived from it.
struct BitWeights {
  std::vector<double> mi;       // I(bit_i; ID) in bits, >= 0
  std::vector<double> weights;  // normalized, sum to 1
};

/// The public parameters: m index subsets of size k, each stored sorted
/// ascending (the canonical order used when concatenating substring bits).
struct SubsetPlan {
  SystemParams params;
  uint64_t seed = 0;
  std::vector<uint16_t> indices;  // flat m*k

  std::span<const uint16_t> subset(uint32_t i) const {
    return std::span<const uint16_t>(indices).subspan(size_t(i) * params.k, params.k);
  }
  uint32_t subset_count() const { return params.m; }

  friend bool operator==(const SubsetPlan& a, const SubsetPlan& b) {
    return a.params.n == b.params.n && a.params.k == b.params.k &&
           a.params.m == b.params.m && a.seed == b.seed && a.indices == b.indices;
  }
};

/// Plug-in estimate of I(bit_i; ID) in bits for every position, computed as
/// H(bit_i) - sum_id p(id) H(bit_i | id) and clamped to >= 0. Requires at
/// least two identities; all samples must be bit strings of equal length.
std::vector<double> estimate_mutual_information(const std::vector<LabeledSample>& samples);

/// wt_i = mi_i^zeta / sum_j mi_j^zeta, computed in log space. zeta = 0 or an
/// all-zero mi vector falls back to uniform weights.
std::vector<double> zeta_weights(std::span<const double> mi, double zeta);

/// Draws m subsets of k distinct indices by weighted sampling without
/// replacement (sequential draws, remaining mass renormalized). Subsets are
/// sorted ascending; duplicates across subsets are allowed. Deterministic
/// per seed.
SubsetPlan sample_subsets(const SystemParams& params, std::span<const double> weights,
                          uint64_t seed);

/// sample_subsets with uniform weights.
SubsetPlan uniform_plan(const SystemParams& params, uint64_t seed);

void save_plan(const SubsetPlan& plan, const std::filesystem::path& path);
SubsetPlan load_plan(const std::filesystem::path& path);

}  // namespace sba
