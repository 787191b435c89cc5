#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sba/engine.hpp"
#include "sba/params.hpp"
#include "sba/population.hpp"
#include "sba/sampling.hpp"

namespace sba {

/// Evaluation harness configuration. Grids multiply: every combination of
/// k, tau, zeta and p_same runs at every population size, averaged over
/// trials with distinct seeds. Probe counts clamp to the enrolled size.
struct ExperimentConfig {
  std::vector<uint32_t> sizes = {1000};
  uint32_t fn_probe_count = 1000;
  uint32_t fp_probe_count = 1000;
  uint32_t trials = 5;

  std::vector<uint32_t> k_grid = {64};
  std::vector<uint32_t> tau_grid = {1};
  std::vector<double> zeta_grid = {1.0};
  std::vector<double> p_same_grid = {0.05};

  uint32_t n = 1024;
  uint32_t m = 1000;
  uint32_t shard_capacity = ShardedStore::kDefaultShardCapacity;
  HashMode hash_mode = HashMode::plain_hash;
  bool domain_separation = true;
  std::string prf_key_hex;  // keyed_prf mode; derived from seed when empty

  // Template-level knobs for the insecure baseline.
  uint32_t template_dim = 1024;
  double sigma_t = 0.02;
  double baseline_threshold = 1.1;

  uint64_t seed = 1;

  void validate() const;
};

/// One row of the results CSV.
struct BenchRow {
  std::string experiment;
  uint32_t N = 0;
  uint32_t k = 0;
  uint32_t m = 0;
  uint32_t tau = 0;
  double zeta = 0.0;
  double p_same = 0.0;
  std::string trial;  // "0".., or "mean"
  double fnr = 0.0;
  double fpr = 0.0;
  double error_rate = 0.0;  // always (fnr + fpr) / 2
  double enroll_ms = 0.0;   // mean per user
  double auth_ms = 0.0;     // mean per query
  uint64_t bytes_per_id = 0;

  // Instrumentation; not serialized to CSV.
  uint64_t lookups_per_auth = 0;
  uint64_t pop_seed = 0;
  uint64_t plan_seed = 0;
};

/// m * (256 + 32) / 8: a 256-bit digest plus a 32-bit identity per record.
constexpr uint64_t storage_bytes_per_identity(uint64_t m) { return m * (256 + 32) / 8; }

/// FNR/FPR sweep per the configured grids.
std::vector<BenchRow> run_error_experiment(const ExperimentConfig& cfg);

/// Probability that a uniformly random k-subset of [n] avoids all t_prime
/// marked positions: C(n - t_prime, k) / C(n, k).
double subset_survival_probability(uint32_t n, uint32_t k, uint32_t t_prime);

/// Monte-Carlo false-negative oracle: resimulates the enroll/auth bit-flip
/// process directly against the plan's subsets, never touching the hash or
/// store layers. Works for weighted (non-uniform) plans as well.
double simulate_fnr_oracle(const SubsetPlan& plan, double p_same, uint32_t tau,
                           uint32_t samples, uint64_t seed);

/// Wall-clock per-user enrollment and authentication timings per size.
std::vector<BenchRow> run_timing_experiment(const ExperimentConfig& cfg);

/// Linear-scan index over raw templates: the O(N) contrast system.
class BaselineIndex {
 public:
  explicit BaselineIndex(uint32_t dim, uint32_t expected_rows = 0);

  void add(IdentityId id, const Template& t);

  struct QueryResult {
    std::optional<IdentityId> matched;
    double distance = 0.0;  // to the nearest stored template
  };

  /// Scans every stored template; matches the nearest one iff its Euclidean
  /// distance is at most threshold.
  QueryResult query(const Template& t, double threshold) const;

  uint32_t size() const { return count_; }
  uint32_t dim() const { return static_cast<uint32_t>(rows_.cols()); }

 private:
  Eigen::MatrixXd rows_;
  std::vector<IdentityId> ids_;
  uint32_t count_ = 0;
};

/// FNR/FPR and per-query timing of the insecure template-scan baseline.
std::vector<BenchRow> run_insecure_baseline(const ExperimentConfig& cfg);

std::string results_csv(std::span<const BenchRow> rows);
void emit_results(std::span<const BenchRow> rows, const std::filesystem::path& path);

}  // namespace sba
