#include "sba/lsh.hpp"

#include <stdexcept>

#include "sba/rng.hpp"

namespace sba {

HyperplaneBank build_bank(uint32_t d, uint32_t n, uint64_t seed) {
  if (d < 1) throw std::invalid_argument("hyperplane dimension must be >= 1");
  if (n < 1) throw std::invalid_argument("hyperplane count must be >= 1");
  HyperplaneBank bank;
  bank.seed = seed;
  bank.normals.resize(n, d);
  Rng rng(seed);
  for (uint32_t row = 0; row < n; ++row) {
    for (uint32_t col = 0; col < d; ++col) bank.normals(row, col) = rng.next_normal();
    const double norm = bank.normals.row(row).norm();
    if (norm > 0.0) bank.normals.row(row) /= norm;
  }
  return bank;
}

BitString lsh_project(const Template& t, const HyperplaneBank& bank) {
  if (static_cast<uint32_t>(t.coords.size()) != bank.dim())
    throw std::invalid_argument("template dimension does not match bank");
  const Eigen::VectorXd projection = bank.normals * t.coords;
  BitString out(bank.bits());
  for (uint32_t i = 0; i < bank.bits(); ++i)
    if (projection[i] >= 0.0) out.set(i, true);
  return out;
}

}  // namespace sba
