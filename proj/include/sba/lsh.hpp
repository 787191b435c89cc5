#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "sba/bitstring.hpp"
#include "sba/population.hpp"

namespace sba {

/// Bank of random hyperplanes for sign-projection hashing. Immutable after
/// construction; safe for unlimited concurrent readers.
struct HyperplaneBank {
  Eigen::MatrixXd normals;  // bits x dim, unit-norm rows
  uint64_t seed = 0;

  uint32_t dim() const { return static_cast<uint32_t>(normals.cols()); }
  uint32_t bits() const { return static_cast<uint32_t>(normals.rows()); }
};

/// Samples n isotropic unit normals of dimension d. Deterministic per seed.
HyperplaneBank build_bank(uint32_t d, uint32_t n, uint64_t seed);

/// bit_i = 1 iff dot(t, normal_i) >= 0. Templates close in angle map to bit
/// strings close in Hamming distance.
BitString lsh_project(const Template& t, const HyperplaneBank& bank);

}  // namespace sba
