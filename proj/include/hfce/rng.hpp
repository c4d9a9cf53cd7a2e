#pragma once

#include <cstdint>
#include <random>

#include "hfce/types.hpp"

namespace hfce {

/// Mixes a master seed with stream coordinates (splitmix64 finalizer chain).
/// Used to give every (point, trial) its own independent stream.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

/// Explicit random stream. Never shared between threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi);
  double normal();
  /// Circular complex Gaussian with total variance `var` (var/2 per real/imag part).
  cplx complex_normal(double var);
  std::size_t index(std::size_t n);
  bool coin();

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace hfce
