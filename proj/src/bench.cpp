#include "sba/bench.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "sba/io.hpp"
#include "sba/rng.hpp"

namespace sba {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::optional<SealedKeyProvider> make_key(const ExperimentConfig& cfg) {
  if (cfg.hash_mode != HashMode::keyed_prf) return std::nullopt;
  if (!cfg.prf_key_hex.empty()) return SealedKeyProvider::from_hex(cfg.prf_key_hex);
  std::vector<uint8_t> seed_bytes;
  put_u64le(seed_bytes, cfg.seed);
  return SealedKeyProvider(sha3_256(seed_bytes).bytes);
}

struct EnrolledSystem {
  SubsetPlan plan;
  ShardedStore store;
  std::vector<LabeledSample> samples;  // 2 per identity, enroll then auth
  double enroll_ms_per_user = 0.0;
};

/// Generates a bit-level population of (N + extra) identities, builds the
/// plan (zeta-weighted when zeta > 0), and enrolls the first N.
EnrolledSystem build_system(const ExperimentConfig& cfg, uint32_t N, uint32_t extra,
                            uint32_t k, double zeta, double p_same,
                            const DigestConfig& digest_cfg, uint64_t pop_seed,
                            uint64_t plan_seed) {
  PopulationConfig pop_cfg;
  pop_cfg.count = N + extra;
  pop_cfg.mode = PopulationMode::bit_level;
  pop_cfg.noise = p_same;
  pop_cfg.dimension_or_length = cfg.n;
  pop_cfg.seed = pop_seed;

  EnrolledSystem sys{.plan = {}, .store = ShardedStore(cfg.shard_capacity),
                     .samples = generate_population(pop_cfg)};

  SystemParams params;
  params.n = cfg.n;
  params.k = k;
  params.m = cfg.m;
  params.zeta = zeta;
  params.hash_mode = cfg.hash_mode;
  params.domain_separation = cfg.domain_separation;

  if (zeta > 0.0) {
    std::vector<LabeledSample> enrolled_samples(sys.samples.begin(),
                                                sys.samples.begin() + 2 * N);
    const auto mi = estimate_mutual_information(enrolled_samples);
    sys.plan = sample_subsets(params, zeta_weights(mi, zeta), plan_seed);
  } else {
    sys.plan = uniform_plan(params, plan_seed);
  }

  const auto start = Clock::now();
  for (uint32_t id = 0; id < N; ++id)
    enroll(sys.store, id, sys.samples[2 * id].bits(), sys.plan, digest_cfg);
  sys.enroll_ms_per_user = ms_since(start) / N;
  return sys;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (sizes.empty()) throw std::invalid_argument("at least one population size required");
  for (uint32_t s : sizes)
    if (s < 1) throw std::invalid_argument("population sizes must be >= 1");
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (fn_probe_count < 1 || fp_probe_count < 1)
    throw std::invalid_argument("probe counts must be >= 1");
  if (k_grid.empty() || tau_grid.empty() || zeta_grid.empty() || p_same_grid.empty())
    throw std::invalid_argument("parameter grids must be non-empty");
  SystemParams probe;
  probe.n = n;
  probe.m = m;
  for (uint32_t k : k_grid) {
    probe.k = k;
    for (uint32_t tau : tau_grid) {
      probe.tau = tau;
      for (double zeta : zeta_grid) {
        probe.zeta = zeta;
        probe.validate();
      }
    }
  }
  for (double p : p_same_grid)
    if (!(p >= 0.0 && p < 0.5)) throw std::invalid_argument("p_same must be in [0, 0.5)");
  if (template_dim < 1) throw std::invalid_argument("template dimension must be >= 1");
  if (!(sigma_t >= 0.0)) throw std::invalid_argument("sigma_t must be >= 0");
}

std::vector<BenchRow> run_error_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto key = make_key(cfg);
  DigestConfig digest_cfg{cfg.hash_mode, cfg.domain_separation,
                          key ? &*key : nullptr};

  std::vector<BenchRow> rows;
  uint64_t combo = 0;
  for (uint32_t k : cfg.k_grid) {
    for (uint32_t tau : cfg.tau_grid) {
      for (double zeta : cfg.zeta_grid) {
        for (double p_same : cfg.p_same_grid) {
          for (uint32_t N : cfg.sizes) {
            double fnr_total = 0.0;
            double fpr_total = 0.0;
            for (uint32_t trial = 0; trial < cfg.trials; ++trial) {
              const uint64_t base = mix64(cfg.seed ^ mix64(combo * 1000003 + trial));
              auto sys = build_system(cfg, N, cfg.fp_probe_count, k, zeta, p_same,
                                      digest_cfg, base, mix64(base + 1));

              const uint32_t fn_probes = std::min(cfg.fn_probe_count, N);
              uint32_t false_negatives = 0;
              const auto auth_start = Clock::now();
              for (uint32_t id = 0; id < fn_probes; ++id) {
                const auto r = authenticate(sys.store, sys.samples[2 * id + 1].bits(),
                                            sys.plan, digest_cfg, tau);
                if (!(r.matched() && *r.matched_id == id)) ++false_negatives;
              }
              uint32_t false_positives = 0;
              for (uint32_t p = 0; p < cfg.fp_probe_count; ++p) {
                const auto& probe = sys.samples[2 * (N + p) + 1].bits();
                if (authenticate(sys.store, probe, sys.plan, digest_cfg, tau).matched())
                  ++false_positives;
              }
              const double auth_ms =
                  ms_since(auth_start) / (fn_probes + cfg.fp_probe_count);

              BenchRow row;
              row.experiment = "error";
              row.N = N;
              row.k = k;
              row.m = cfg.m;
              row.tau = tau;
              row.zeta = zeta;
              row.p_same = p_same;
              row.trial = std::to_string(trial);
              row.fnr = static_cast<double>(false_negatives) / fn_probes;
              row.fpr = static_cast<double>(false_positives) / cfg.fp_probe_count;
              row.error_rate = (row.fnr + row.fpr) / 2.0;
              row.enroll_ms = sys.enroll_ms_per_user;
              row.auth_ms = auth_ms;
              row.bytes_per_id = storage_bytes_per_identity(cfg.m);
              row.lookups_per_auth =
                  static_cast<uint64_t>(cfg.m) * sys.store.shard_count();
              row.pop_seed = base;
              row.plan_seed = mix64(base + 1);
              fnr_total += row.fnr;
              fpr_total += row.fpr;
              rows.push_back(std::move(row));
            }
            BenchRow mean = rows.back();
            mean.trial = "mean";
            mean.fnr = fnr_total / cfg.trials;
            mean.fpr = fpr_total / cfg.trials;
            mean.error_rate = (mean.fnr + mean.fpr) / 2.0;
            rows.push_back(std::move(mean));
            ++combo;
          }
        }
      }
    }
  }
  return rows;
}

double subset_survival_probability(uint32_t n, uint32_t k, uint32_t t_prime) {
  if (k > n) throw std::invalid_argument("k must be <= n");
  if (t_prime > n) throw std::invalid_argument("t_prime must be <= n");
  if (t_prime == 0) return 1.0;
  if (k > n - t_prime) return 0.0;
  double p = 1.0;
  for (uint32_t j = 0; j < k; ++j)
    p *= static_cast<double>(n - t_prime - j) / static_cast<double>(n - j);
  return p;
}

double simulate_fnr_oracle(const SubsetPlan& plan, double p_same, uint32_t tau,
                           uint32_t samples, uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("oracle sample count must be >= 1");
  const uint32_t n = plan.params.n;
  const uint32_t m = plan.params.m;
  if (tau < 1 || tau > m) throw std::invalid_argument("require 1 <= tau <= m");

  // Two independently flipped copies of a ground truth disagree at each
  // position independently with probability q.
  const double q = 2.0 * p_same * (1.0 - p_same);
  if (q <= 0.0) return tau <= m ? 0.0 : 1.0;

  const size_t words = (n + 63) / 64;
  std::vector<uint64_t> masks(size_t(m) * words, 0);
  for (uint32_t i = 0; i < m; ++i)
    for (uint16_t idx : plan.subset(i))
      masks[size_t(i) * words + idx / 64] |= uint64_t(1) << (idx % 64);

  const double log_keep = std::log1p(-q);
  Rng rng(seed);
  std::vector<uint64_t> disagreement(words);
  uint32_t false_negatives = 0;
  for (uint32_t s = 0; s < samples; ++s) {
    std::fill(disagreement.begin(), disagreement.end(), 0);
    // Geometric skipping visits exactly the disagreeing positions.
    double u = rng.next_double();
    while (u <= 0.0) u = rng.next_double();
    uint64_t pos = static_cast<uint64_t>(std::log(u) / log_keep);
    while (pos < n) {
      disagreement[pos / 64] |= uint64_t(1) << (pos % 64);
      u = rng.next_double();
      while (u <= 0.0) u = rng.next_double();
      pos += 1 + static_cast<uint64_t>(std::log(u) / log_keep);
    }

    uint32_t survivors = 0;
    for (uint32_t i = 0; i < m && survivors < tau; ++i) {
      const uint64_t* mask = &masks[size_t(i) * words];
      bool clean = true;
      for (size_t w = 0; w < words; ++w) {
        if (mask[w] & disagreement[w]) {
          clean = false;
          break;
        }
      }
      if (clean) ++survivors;
    }
    if (survivors < tau) ++false_negatives;
  }
  return static_cast<double>(false_negatives) / samples;
}

std::vector<BenchRow> run_timing_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto key = make_key(cfg);
  DigestConfig digest_cfg{cfg.hash_mode, cfg.domain_separation,
                          key ? &*key : nullptr};
  const uint32_t k = cfg.k_grid.front();
  const uint32_t tau = cfg.tau_grid.front();
  const double p_same = cfg.p_same_grid.front();

  std::vector<BenchRow> rows;
  for (uint32_t N : cfg.sizes) {
    const uint64_t base = mix64(cfg.seed ^ mix64(0x7131u + N));
    auto sys = build_system(cfg, N, 0, k, 0.0, p_same, digest_cfg, base,
                            mix64(base + 1));

    const uint32_t probes = std::min(cfg.fn_probe_count, N);
    // Warm the caches before measuring.
    for (uint32_t id = 0; id < std::min<uint32_t>(32, probes); ++id)
      authenticate(sys.store, sys.samples[2 * id + 1].bits(), sys.plan, digest_cfg, tau);

    uint64_t lookups = 0;
    const auto start = Clock::now();
    for (uint32_t id = 0; id < probes; ++id) {
      const auto r = authenticate(sys.store, sys.samples[2 * id + 1].bits(), sys.plan,
                                  digest_cfg, tau);
      lookups = r.lookups;
    }
    const double auth_ms = ms_since(start) / probes;

    BenchRow row;
    row.experiment = "timing";
    row.N = N;
    row.k = k;
    row.m = cfg.m;
    row.tau = tau;
    row.zeta = 0.0;
    row.p_same = p_same;
    row.trial = "0";
    row.enroll_ms = sys.enroll_ms_per_user;
    row.auth_ms = auth_ms;
    row.bytes_per_id = storage_bytes_per_identity(cfg.m);
    row.lookups_per_auth = lookups;
    rows.push_back(std::move(row));
  }
  return rows;
}

BaselineIndex::BaselineIndex(uint32_t dim, uint32_t expected_rows) {
  if (dim < 1) throw std::invalid_argument("baseline dimension must be >= 1");
  rows_.resize(std::max<uint32_t>(expected_rows, 16), dim);
}

void BaselineIndex::add(IdentityId id, const Template& t) {
  if (static_cast<uint32_t>(t.coords.size()) != dim())
    throw std::invalid_argument("template dimension does not match index");
  if (count_ == static_cast<uint32_t>(rows_.rows()))
    rows_.conservativeResize(rows_.rows() * 2, Eigen::NoChange);
  rows_.row(count_) = t.coords.transpose();
  ids_.push_back(id);
  ++count_;
}

BaselineIndex::QueryResult BaselineIndex::query(const Template& t,
                                                double threshold) const {
  if (static_cast<uint32_t>(t.coords.size()) != dim())
    throw std::invalid_argument("template dimension does not match index");
  QueryResult result;
  if (count_ == 0) return result;

  // O(N) scan over every enrolled template.
  double best = std::numeric_limits<double>::infinity();
  uint32_t best_row = 0;
  for (uint32_t i = 0; i < count_; ++i) {
    const double d2 = (rows_.row(i).transpose() - t.coords).squaredNorm();
    if (d2 < best) {
      best = d2;
      best_row = i;
    }
  }
  result.distance = std::sqrt(best);
  if (result.distance <= threshold) result.matched = ids_[best_row];
  return result;
}

std::vector<BenchRow> run_insecure_baseline(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<BenchRow> rows;
  for (uint32_t N : cfg.sizes) {
    PopulationConfig pop_cfg;
    pop_cfg.count = N + cfg.fp_probe_count;
    pop_cfg.mode = PopulationMode::template_level;
    pop_cfg.noise = cfg.sigma_t;
    pop_cfg.dimension_or_length = cfg.template_dim;
    pop_cfg.seed = mix64(cfg.seed ^ mix64(0xBA5E11 + N));
    const auto samples = generate_population(pop_cfg);

    BaselineIndex index(cfg.template_dim, N);
    const auto enroll_start = Clock::now();
    for (uint32_t id = 0; id < N; ++id) index.add(id, samples[2 * id].tmpl());
    const double enroll_ms = ms_since(enroll_start) / N;

    const uint32_t fn_probes = std::min(cfg.fn_probe_count, N);
    uint32_t false_negatives = 0;
    const auto auth_start = Clock::now();
    for (uint32_t id = 0; id < fn_probes; ++id) {
      const auto r = index.query(samples[2 * id + 1].tmpl(), cfg.baseline_threshold);
      if (!(r.matched && *r.matched == id)) ++false_negatives;
    }
    uint32_t false_positives = 0;
    for (uint32_t p = 0; p < cfg.fp_probe_count; ++p) {
      const auto r =
          index.query(samples[2 * (N + p) + 1].tmpl(), cfg.baseline_threshold);
      if (r.matched) ++false_positives;
    }
    const double auth_ms = ms_since(auth_start) / (fn_probes + cfg.fp_probe_count);

    BenchRow row;
    row.experiment = "baseline";
    row.N = N;
    row.k = 0;
    row.m = 0;
    row.tau = 0;
    row.zeta = 0.0;
    row.p_same = cfg.sigma_t;
    row.trial = "0";
    row.fnr = static_cast<double>(false_negatives) / fn_probes;
    row.fpr = static_cast<double>(false_positives) / cfg.fp_probe_count;
    row.error_rate = (row.fnr + row.fpr) / 2.0;
    row.enroll_ms = enroll_ms;
    row.auth_ms = auth_ms;
    row.bytes_per_id = uint64_t(cfg.template_dim) * sizeof(double);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string results_csv(std::span<const BenchRow> rows) {
  std::ostringstream out;
  out.precision(10);
  out << "experiment,N,k,m,tau,zeta,p_same,trial,fnr,fpr,error_rate,enroll_ms,"
         "auth_ms,bytes_per_id\n";
  for (const auto& r : rows) {
    out << r.experiment << ',' << r.N << ',' << r.k << ',' << r.m << ',' << r.tau << ','
        << r.zeta << ',' << r.p_same << ',' << r.trial << ',' << r.fnr << ',' << r.fpr
        << ',' << r.error_rate << ',' << r.enroll_ms << ',' << r.auth_ms << ','
        << r.bytes_per_id << '\n';
  }
  return out.str();
}

void emit_results(std::span<const BenchRow> rows, const std::filesystem::path& path) {
  write_text_file(path, results_csv(rows));
}

}  // namespace sba
