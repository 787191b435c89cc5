#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <variant>
#include <vector>

#include "sba/bitstring.hpp"
#include "sba/types.hpp"

namespace sba {

/// Real-valued biometric embedding, unit Euclidean norm.
struct Template {
  Eigen::VectorXd coords;

  friend bool operator==(const Template& a, const Template& b) {
    return a.coords.size() == b.coords.size() && a.coords == b.coords;
  }
};

enum class Session : uint8_t { enroll = 0, auth = 1 };

struct LabeledSample {
  IdentityId id = 0;
  Session session = Session::enroll;
  std::variant<BitString, Template> payload;

  bool is_bits() const { return std::holds_alternative<BitString>(payload); }
  const BitString& bits() const;
  const Template& tmpl() const;

  friend bool operator==(const LabeledSample&, const LabeledSample&) = default;
};

enum class PopulationMode : uint8_t { bit_level, template_level };

/// Synthetic population model. Each identity has a hidden ground truth
/// (uniform bit string or uniform unit vector); enroll and auth samples are
/// independent noisy views of it. noise is the per-bit flip probability in
/// bit_level mode and the additive Gaussian scale in template_level mode.
struct PopulationConfig {
  uint32_t count = 0;
  PopulationMode mode = PopulationMode::bit_level;
  double noise = 0.05;
  uint32_t dimension_or_length = 4096;
  uint64_t seed = 0;

  void validate() const;
};

/// Deterministic for a fixed config. Produces one enroll and one auth sample
/// per identity, ids 0..count-1, ordered by identity.
std::vector<LabeledSample> generate_population(const PopulationConfig& cfg);

void save_dataset(const std::vector<LabeledSample>& samples,
                  const std::filesystem::path& path);

/// Loads a dataset file. A zero-byte file is an empty dataset. When
/// expectations are given, the file header must match them.
std::vector<LabeledSample> load_dataset(
    const std::filesystem::path& path,
    std::optional<PopulationMode> expect_mode = std::nullopt,
    std::optional<uint32_t> expect_len = std::nullopt);

}  // namespace sba
