#pragma once

#include <vector>

#include "hfce/channel.hpp"
#include "hfce/config.hpp"
#include "hfce/types.hpp"

namespace hfce {

/// Per-atom labels over {0, A, P} plus the ordered support (selection order).
struct SparsityPattern {
  std::vector<Domain> labels;
  std::vector<int> support;

  static SparsityPattern from_support(const std::vector<int>& support, int num_atoms, int num_angular);
  int size() const { return static_cast<int>(support.size()); }
};

/// Bernoulli-Gaussian prior of the sparse coefficients. Variances already
/// include the path-loss reference, so atom n has variance var / r_n^2.
struct BmpPriors {
  double var_far = 1.0;
  double var_near = 1.0;
  double prob_active = 0.01;
  double noise_var = 0.1;

  double prob_zero() const { return 1.0 - prob_active; }
  static BmpPriors from_config(const SystemConfig& cfg);
};

/// Representative distance of every atom: the LoS estimate for angular atoms,
/// the ring distance for polar atoms.
RVec atom_distances(const Dictionary& dict, double r_hat);

/// Prior variance c_n = sigma_{s_n}^2 / r_n^2 of every atom.
RVec atom_variances(const BmpPriors& priors, const RVec& r_grid, int num_angular);

struct ScatterEstimate {
  SparsityPattern pattern;
  CVec sparse;                 // estimate of h^{A,P}, zero off the support
  double metric = 0.0;         // final sparsity decision metric
  bool stopped_early = false;
};

/// Per-iteration snapshots for auditing the recursions.
struct BmpTrace {
  std::vector<int> selected;
  std::vector<double> metric;
  std::vector<CMat> q;         // with prior: q-vectors after the update
  std::vector<RVec> beta;      // with prior: beta_n before the selection
  std::vector<CVec> coeffs;    // without prior: LS coefficients on the support
};

struct GreedyOptions {
  int iterations = 6;
  bool residual_stop = false;
  double residual_stop_ratio = 1e-3;

  static GreedyOptions from_config(const SystemConfig& cfg);
};

/// Bayesian matching pursuit with prior knowledge (recursive metric and q-updates).
/// Throws NumericalError when some beta_n is not positive.
ScatterEstimate bmp_with_prior(const CVec& ybar, const CMat& psi, const BmpPriors& priors, const RVec& r_grid,
                               int num_angular, const GreedyOptions& opts, BmpTrace* trace = nullptr);

/// Greedy projection-energy pursuit with block-inversion LS updates.
/// `noise_var` only scales the reported metric.
ScatterEstimate bmp_without_prior(const CVec& ybar, const CMat& psi, double noise_var, int num_angular,
                                  const GreedyOptions& opts, BmpTrace* trace = nullptr);

/// Direct conditional mean K Psi^H Gamma^{-1} ybar on a fixed support.
CVec mmse_given_pattern(const std::vector<int>& support, const CVec& ybar, const CMat& psi, const BmpPriors& priors,
                        const RVec& r_grid, int num_angular);

/// Direct log-metric of a support: -1/2 y^H Gamma^{-1} y - 1/2 ln det Gamma - M/2 ln 2pi + sum ln p(s_n).
double bmp_log_metric(const std::vector<int>& support, const CVec& ybar, const CMat& psi, const BmpPriors& priors,
                      const RVec& r_grid, int num_angular);

/// Maximizer of bmp_log_metric over all supports of size <= max_size.
/// Throws std::invalid_argument beyond 10^6 candidate supports.
SparsityPattern exhaustive_map_pattern(const CVec& ybar, const CMat& psi, const BmpPriors& priors,
                                       const RVec& r_grid, int num_angular, int max_size);

/// Far-then-near OMP: `far_iters` iterations over angular columns, then
/// `near_iters` over polar columns, then a joint LS refit on the union.
ScatterEstimate hf_omp_baseline(const CVec& y, const CMat& psi, int num_angular, int far_iters, int near_iters);

/// Oracle LS over the true LoS template and the true support. Returns dense h.
CVec genie_ls(const CVec& y, const CMat& pilot, const Dictionary& dict, const HybridChannel& truth,
              const SystemConfig& cfg);

}  // namespace hfce
