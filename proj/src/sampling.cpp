#include "sba/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "sba/io.hpp"
#include "sba/rng.hpp"

namespace sba {
namespace {

constexpr std::string_view kPlanMagic = "SBAPLAN1";

double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

/// Fenwick tree over non-negative weights supporting prefix-sum search.
class PrefixSumTree {
 public:
  explicit PrefixSumTree(std::span<const double> weights)
      : size_(weights.size()), tree_(weights.size() + 1, 0.0) {
    for (size_t i = 0; i < size_; ++i) tree_[i + 1] = weights[i];
    for (size_t i = 1; i <= size_; ++i) {
      const size_t parent = i + (i & (~i + 1));
      if (parent <= size_) tree_[parent] += tree_[i];
    }
    top_bit_ = 1;
    while ((top_bit_ << 1) <= size_) top_bit_ <<= 1;
  }

  void add(size_t i, double delta) {
    for (size_t j = i + 1; j <= size_; j += j & (~j + 1)) tree_[j] += delta;
  }

  double total() const {
    double s = 0.0;
    for (size_t j = size_; j > 0; j -= j & (~j + 1)) s += tree_[j];
    return s;
  }

  /// Index whose cumulative-weight interval contains u, for u in [0, total).
  size_t find(double u) const {
    size_t pos = 0;
    for (size_t step = top_bit_; step > 0; step >>= 1) {
      const size_t next = pos + step;
      if (next <= size_ && tree_[next] <= u) {
        pos = next;
        u -= tree_[next];
      }
    }
    return pos;
  }

 private:
  size_t size_;
  std::vector<double> tree_;
  size_t top_bit_ = 1;
};

/// Sequential weighted draws without replacement: each draw removes the
/// chosen index's mass, renormalizing the remainder. Once no positive-weight
/// index remains, further draws are uniform over the unchosen indices.
class SubsetSampler {
 public:
  explicit SubsetSampler(std::span<const double> weights)
      : weights_(weights.begin(), weights.end()),
        live_(weights.begin(), weights.end()),
        chosen_(weights.size(), 0),
        tree_(weights) {
    for (double w : weights_) {
      if (!(w >= 0.0) || !std::isfinite(w))
        throw std::invalid_argument("sampling weights must be finite and >= 0");
      if (w > 0.0) ++positive_;
    }
  }

  void draw(uint32_t k, Rng& rng, std::vector<uint16_t>& out) {
    const size_t n = weights_.size();
    out.clear();
    size_t positive_left = positive_;
    for (uint32_t j = 0; j < k; ++j) {
      size_t idx;
      if (positive_left == 0) {
        idx = nth_unchosen(rng.next_below(static_cast<uint32_t>(n - j)));
      } else {
        const double remaining = tree_.total();
        if (remaining > 0.0) {
          const double u = rng.next_double() * remaining;
          idx = tree_.find(u);
          if (idx >= n || chosen_[idx] || live_[idx] <= 0.0) idx = next_positive(idx);
        } else {
          // Rounding left no measurable mass; fall back deterministically.
          idx = next_positive(0);
        }
      }
      chosen_[idx] = 1;
      out.push_back(static_cast<uint16_t>(idx));
      if (live_[idx] > 0.0) {
        tree_.add(idx, -live_[idx]);
        live_[idx] = 0.0;
        --positive_left;
      }
    }
    // Restore the full distribution for the next subset.
    for (uint16_t idx : out) {
      chosen_[idx] = 0;
      if (weights_[idx] > 0.0) {
        tree_.add(idx, weights_[idx]);
        live_[idx] = weights_[idx];
      }
    }
  }

 private:
  size_t next_positive(size_t start) const {
    const size_t n = weights_.size();
    for (size_t step = 0; step < n; ++step) {
      const size_t idx = (start + step) % n;
      if (!chosen_[idx] && live_[idx] > 0.0) return idx;
    }
    throw std::logic_error("no positive-weight index available");
  }

  size_t nth_unchosen(uint32_t rank) const {
    for (size_t idx = 0; idx < chosen_.size(); ++idx) {
      if (!chosen_[idx]) {
        if (rank == 0) return idx;
        --rank;
      }
    }
    throw std::logic_error("fewer unchosen indices than requested");
  }

  std::vector<double> weights_;
  std::vector<double> live_;
  std::vector<uint8_t> chosen_;
  PrefixSumTree tree_;
  size_t positive_ = 0;
};

}  // namespace

std::vector<double> estimate_mutual_information(const std::vector<LabeledSample>& samples) {
  if (samples.empty()) throw std::invalid_argument("mutual information requires samples");
  for (const auto& s : samples)
    if (!s.is_bits()) throw std::invalid_argument("mutual information requires bit strings");
  const uint32_t n = samples.front().bits().length();
  for (const auto& s : samples)
    if (s.bits().length() != n)
      throw std::invalid_argument("mutual information requires equal-length strings");

  std::unordered_map<IdentityId, std::vector<const BitString*>> by_id;
  for (const auto& s : samples) by_id[s.id].push_back(&s.bits());
  if (by_id.size() < 2)
    throw std::invalid_argument("mutual information requires at least two identities");

  const double total = static_cast<double>(samples.size());
  std::vector<double> conditional(n, 0.0);
  std::vector<uint64_t> marginal_ones(n, 0);
  std::vector<uint32_t> ones(n);
  for (const auto& [id, group] : by_id) {
    std::fill(ones.begin(), ones.end(), 0u);
    for (const BitString* s : group)
      for (uint32_t i = 0; i < n; ++i) ones[i] += s->get(i);
    const double group_size = static_cast<double>(group.size());
    const double p_id = group_size / total;
    for (uint32_t i = 0; i < n; ++i) {
      conditional[i] += p_id * binary_entropy(ones[i] / group_size);
      marginal_ones[i] += ones[i];
    }
  }

  std::vector<double> mi(n);
  for (uint32_t i = 0; i < n; ++i) {
    const double h = binary_entropy(static_cast<double>(marginal_ones[i]) / total);
    mi[i] = std::max(0.0, h - conditional[i]);
  }
  return mi;
}

std::vector<double> zeta_weights(std::span<const double> mi, double zeta) {
  if (mi.empty()) throw std::invalid_argument("weights require at least one entry");
  if (!(zeta >= 0.0)) throw std::invalid_argument("zeta must be >= 0");
  for (double v : mi)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::invalid_argument("mi entries must be finite and >= 0");

  const size_t n = mi.size();
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  if (zeta == 0.0) return w;  // mi^0 = 1 for every bit

  const double max_mi = *std::max_element(mi.begin(), mi.end());
  if (max_mi <= 0.0) return w;  // degenerate input: uniform fallback

  // Log-space evaluation keeps large zeta from overflowing.
  const double log_max = std::log(max_mi);
  double sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    w[i] = mi[i] > 0.0 ? std::exp(zeta * (std::log(mi[i]) - log_max)) : 0.0;
    sum += w[i];
  }
  for (auto& v : w) v /= sum;
  return w;
}

SubsetPlan sample_subsets(const SystemParams& params, std::span<const double> weights,
                          uint64_t seed) {
  params.validate();
  if (weights.size() != params.n)
    throw std::invalid_argument("weight vector length must equal n");

  SubsetPlan plan;
  plan.params = params;
  plan.seed = seed;
  plan.indices.reserve(size_t(params.m) * params.k);

  SubsetSampler sampler(weights);
  Rng rng(seed);
  std::vector<uint16_t> subset;
  subset.reserve(params.k);
  for (uint32_t i = 0; i < params.m; ++i) {
    sampler.draw(params.k, rng, subset);
    std::sort(subset.begin(), subset.end());
    plan.indices.insert(plan.indices.end(), subset.begin(), subset.end());
  }
  return plan;
}

SubsetPlan uniform_plan(const SystemParams& params, uint64_t seed) {
  params.validate();
  const std::vector<double> weights(params.n, 1.0 / params.n);
  return sample_subsets(params, weights, seed);
}

void save_plan(const SubsetPlan& plan, const std::filesystem::path& path) {
  std::vector<uint8_t> out;
  out.insert(out.end(), kPlanMagic.begin(), kPlanMagic.end());
  put_u32le(out, plan.params.n);
  put_u32le(out, plan.params.k);
  put_u32le(out, plan.params.m);
  put_u64le(out, plan.seed);
  if (plan.indices.size() != size_t(plan.params.m) * plan.params.k)
    throw std::invalid_argument("plan index count does not match m*k");
  for (uint16_t idx : plan.indices) put_u16le(out, idx);
  write_file(path, out);
}

SubsetPlan load_plan(const std::filesystem::path& path) {
  const auto data = read_file(path);
  ByteReader in(data);
  in.expect_magic(kPlanMagic);

  SubsetPlan plan;
  plan.params.n = in.u32le();
  plan.params.k = in.u32le();
  plan.params.m = in.u32le();
  plan.seed = in.u64le();
  plan.params.validate();

  const size_t count = size_t(plan.params.m) * plan.params.k;
  plan.indices.reserve(count);
  for (size_t i = 0; i < count; ++i) plan.indices.push_back(in.u16le());
  if (!in.done()) throw std::runtime_error("trailing bytes in plan file");

  for (uint32_t s = 0; s < plan.params.m; ++s) {
    const auto subset = plan.subset(s);
    for (size_t j = 0; j < subset.size(); ++j) {
      if (subset[j] >= plan.params.n) throw std::runtime_error("plan index out of range");
      if (j > 0 && subset[j] <= subset[j - 1])
        throw std::runtime_error("plan subset not strictly ascending");
    }
  }
  return plan;
}

}  // namespace sba
