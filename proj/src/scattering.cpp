#include "hfce/scattering.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace hfce {

SparsityPattern SparsityPattern::from_support(const std::vector<int>& support, int num_atoms, int num_angular) {
  SparsityPattern p;
  p.labels.assign(num_atoms, Domain::kNone);
  p.support = support;
  for (int n : support) {
    if (n < 0 || n >= num_atoms) throw std::out_of_range("SparsityPattern: index out of range");
    if (p.labels[n] != Domain::kNone) throw std::invalid_argument("SparsityPattern: repeated index");
    p.labels[n] = n < num_angular ? Domain::kAngular : Domain::kPolar;
  }
  return p;
}

BmpPriors BmpPriors::from_config(const SystemConfig& cfg) {
  BmpPriors p;
  const double ref2 = cfg.ref_distance * cfg.ref_distance;
  p.var_far = cfg.gain_var_far * ref2;
  p.var_near = cfg.gain_var_near * ref2;
  p.prob_active = cfg.active_probability();
  // A noiseless config still needs an invertible covariance.
  p.noise_var = std::max(cfg.noise_var, 1e-12);
  return p;
}

GreedyOptions GreedyOptions::from_config(const SystemConfig& cfg) {
  return {cfg.estimator.iterations, cfg.estimator.residual_stop, cfg.estimator.residual_stop_ratio};
}

RVec atom_distances(const Dictionary& dict, double r_hat) {
  RVec r(dict.size());
  for (int n = 0; n < dict.size(); ++n) r[n] = n < dict.num_angular ? r_hat : dict.distance[n];
  return r;
}

RVec atom_variances(const BmpPriors& priors, const RVec& r_grid, int num_angular) {
  RVec c(r_grid.size());
  for (Eigen::Index n = 0; n < r_grid.size(); ++n) {
    if (!(r_grid[n] > 0.0)) throw std::invalid_argument("atom_variances: distances must be positive");
    c[n] = (n < num_angular ? priors.var_far : priors.var_near) / (r_grid[n] * r_grid[n]);
  }
  return c;
}

namespace {

void check_priors(const BmpPriors& p) {
  if (!(p.noise_var > 0.0)) throw std::invalid_argument("BMP: noise variance must be positive");
  if (!(p.prob_active > 0.0 && p.prob_active < 1.0)) throw std::invalid_argument("BMP: prob_active must be in (0,1)");
  if (p.var_far < 0.0 || p.var_near < 0.0) throw std::invalid_argument("BMP: negative prior variance");
}

void check_iterations(int iterations, const CMat& psi) {
  if (iterations < 0 || iterations > std::min(psi.rows(), psi.cols()))
    throw std::invalid_argument("greedy pursuit: require 0 <= L <= min(M, N')");
}

CVec gather_sparse(const std::vector<int>& support, const CVec& coeffs, Eigen::Index atoms) {
  CVec h = CVec::Zero(atoms);
  for (std::size_t k = 0; k < support.size(); ++k) h[support[k]] = coeffs[k];
  return h;
}

CMat columns(const CMat& psi, const std::vector<int>& idx) {
  CMat out(psi.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out.col(k) = psi.col(idx[k]);
  return out;
}

bool residual_small(const CVec& ybar, const CMat& psi, const std::vector<int>& support, const CVec& coeffs,
                    double ratio) {
  const double ny = ybar.norm();
  if (ny == 0.0) return true;
  return (ybar - columns(psi, support) * coeffs).norm() < ratio * ny;
}

}  // namespace

ScatterEstimate bmp_with_prior(const CVec& ybar, const CMat& psi, const BmpPriors& priors, const RVec& r_grid,
                               int num_angular, const GreedyOptions& opts, BmpTrace* trace) {
  check_priors(priors);
  check_iterations(opts.iterations, psi);
  const Eigen::Index m = psi.rows();
  const Eigen::Index atoms = psi.cols();
  if (ybar.size() != m || r_grid.size() != atoms) throw std::invalid_argument("bmp_with_prior: shape mismatch");

  const RVec c = atom_variances(priors, r_grid, num_angular);
  const double s2 = priors.noise_var;
  const double log_ratio = std::log(priors.prob_active / priors.prob_zero());

  CMat q = psi / s2;  // Gamma^{-1} Psi for the empty pattern
  std::vector<bool> chosen(atoms, false);
  std::vector<int> support;
  double alpha = -ybar.squaredNorm() / (2.0 * s2) - 0.5 * static_cast<double>(m) * std::log(2.0 * kPi * s2) +
                 static_cast<double>(atoms) * std::log(priors.prob_zero());

  ScatterEstimate est;
  RVec beta(atoms);
  for (int l = 0; l < opts.iterations; ++l) {
    const CVec proj = q.adjoint() * ybar;  // q_n^H ybar
    int best = -1;
    double best_alpha = 0.0;
    for (Eigen::Index n = 0; n < atoms; ++n) {
      const double quad = std::real(psi.col(n).dot(q.col(n)));
      beta[n] = 1.0 / (1.0 + c[n] * quad);
      if (chosen[n]) continue;
      if (!(beta[n] > 0.0) || !std::isfinite(beta[n]))
        throw NumericalError("bmp_with_prior: beta_" + std::to_string(n) + " not positive at iteration " +
                             std::to_string(l + 1));
      const double a = alpha + 0.5 * c[n] * beta[n] * std::norm(proj[n]) + 0.5 * std::log(beta[n]) + log_ratio;
      if (best < 0 || a > best_alpha) {
        best = static_cast<int>(n);
        best_alpha = a;
      }
    }
    if (best < 0) {
      est.stopped_early = true;
      break;
    }
    if (trace) trace->beta.push_back(beta);

    // Sherman-Morrison: q_n <- q_n - c* beta* q* (q*^H psi_n).
    const CVec qs = q.col(best);
    const cplx scale = c[best] * beta[best];
    const Eigen::RowVectorXcd w = qs.adjoint() * psi;
    q.noalias() -= scale * qs * w;

    chosen[best] = true;
    support.push_back(best);
    alpha = best_alpha;
    if (trace) {
      trace->selected.push_back(best);
      trace->metric.push_back(alpha);
      trace->q.push_back(q);
    }
    if (opts.residual_stop) {
      CVec coeffs(support.size());
      for (std::size_t k = 0; k < support.size(); ++k) coeffs[k] = c[support[k]] * q.col(support[k]).dot(ybar);
      if (residual_small(ybar, psi, support, coeffs, opts.residual_stop_ratio)) break;
    }
  }

  CVec coeffs(support.size());
  for (std::size_t k = 0; k < support.size(); ++k) coeffs[k] = c[support[k]] * q.col(support[k]).dot(ybar);
  est.pattern = SparsityPattern::from_support(support, static_cast<int>(atoms), num_angular);
  est.sparse = gather_sparse(support, coeffs, atoms);
  est.metric = alpha;
  return est;
}

namespace {

enum class Rule { kProjection, kCorrelation };

// Greedy least squares restricted to candidates in [lo, hi). Keeps Pi_perp psi_n
// for all candidates by Gram-Schmidt and the LS coefficients by block inversion.
struct GreedyLs {
  const CMat& psi;
  const CVec& ybar;
  CMat perp;                  // Pi_perp psi_n
  RVec col_energy;            // ||psi_n||^2
  std::vector<bool> chosen;
  std::vector<int> support;
  CMat gram_inv;              // (Psi_S^H Psi_S)^{-1}
  CVec coeffs;
  CVec residual;              // Pi_perp ybar
  double captured = 0.0;      // ||P_S ybar||^2

  GreedyLs(const CMat& p, const CVec& y)
      : psi(p), ybar(y), perp(p), col_energy(p.colwise().squaredNorm().transpose()), chosen(p.cols(), false),
        residual(y) {}

  // Returns false when no admissible candidate remains.
  bool step(int lo, int hi, Rule rule) {
    constexpr double kDegenerate = 1e-10;
    int best = -1;
    double best_score = -1.0;
    for (int n = lo; n < hi; ++n) {
      if (chosen[n]) continue;
      const double pe = perp.col(n).squaredNorm();
      if (!(pe > kDegenerate * col_energy[n])) continue;
      double score;
      if (rule == Rule::kProjection) {
        score = std::norm(perp.col(n).dot(ybar)) / pe;
      } else {
        score = std::norm(psi.col(n).dot(residual)) / col_energy[n];
      }
      if (score > best_score) {
        best_score = score;
        best = n;
      }
    }
    if (best < 0) return false;
    add(best);
    return true;
  }

  void add(int i) {
    const CVec p = perp.col(i);
    const double delta = p.squaredNorm();
    const cplx kappa = p.dot(ybar) / delta;  // psi_i^H Pi_perp ybar / psi_i^H Pi_perp psi_i
    const Eigen::Index k = static_cast<Eigen::Index>(support.size());

    // w = Psi_S^dagger psi_i
    CVec w(k);
    if (k > 0) w = gram_inv * (columns(psi, support).adjoint() * psi.col(i));
    CMat next(k + 1, k + 1);
    if (k > 0) {
      next.topLeftCorner(k, k) = gram_inv + w * w.adjoint() / delta;
      next.topRightCorner(k, 1) = -w / delta;
      next.bottomLeftCorner(1, k) = -w.adjoint() / delta;
    }
    next(k, k) = 1.0 / delta;
    gram_inv = std::move(next);

    CVec c(k + 1);
    if (k > 0) c.head(k) = coeffs - w * kappa;
    c[k] = kappa;
    coeffs = std::move(c);

    captured += std::norm(kappa) * delta;
    const CVec e = p / std::sqrt(delta);
    residual -= e * e.dot(residual);
    const Eigen::RowVectorXcd proj = e.adjoint() * perp;
    perp.noalias() -= e * proj;
    chosen[i] = true;
    support.push_back(i);
  }
};

}  // namespace

ScatterEstimate bmp_without_prior(const CVec& ybar, const CMat& psi, double noise_var, int num_angular,
                                  const GreedyOptions& opts, BmpTrace* trace) {
  check_iterations(opts.iterations, psi);
  if (ybar.size() != psi.rows()) throw std::invalid_argument("bmp_without_prior: shape mismatch");
  GreedyLs g(psi, ybar);
  const double y2 = ybar.squaredNorm();
  auto metric = [&] { return noise_var > 0.0 ? (g.captured - y2) / (2.0 * noise_var) : g.captured - y2; };

  ScatterEstimate est;
  for (int l = 0; l < opts.iterations; ++l) {
    if (!g.step(0, static_cast<int>(psi.cols()), Rule::kProjection)) {
      est.stopped_early = true;
      break;
    }
    if (trace) {
      trace->selected.push_back(g.support.back());
      trace->metric.push_back(metric());
      trace->coeffs.push_back(g.coeffs);
    }
    if (opts.residual_stop && g.residual.norm() < opts.residual_stop_ratio * std::sqrt(y2)) break;
  }
  est.pattern = SparsityPattern::from_support(g.support, static_cast<int>(psi.cols()), num_angular);
  est.sparse = gather_sparse(g.support, g.coeffs, psi.cols());
  est.metric = metric();
  return est;
}

ScatterEstimate hf_omp_baseline(const CVec& y, const CMat& psi, int num_angular, int far_iters, int near_iters) {
  const int atoms = static_cast<int>(psi.cols());
  if (num_angular < 0 || num_angular > atoms) throw std::invalid_argument("hf_omp_baseline: bad angular count");
  if (far_iters < 0 || near_iters < 0 || far_iters + near_iters > psi.rows())
    throw std::invalid_argument("hf_omp_baseline: iteration counts must fit in M");
  GreedyLs g(psi, y);
  ScatterEstimate est;
  for (int l = 0; l < far_iters; ++l)
    if (!g.step(0, num_angular, Rule::kCorrelation)) {
      est.stopped_early = true;
      break;
    }
  for (int l = 0; l < near_iters; ++l)
    if (!g.step(num_angular, atoms, Rule::kCorrelation)) {
      est.stopped_early = true;
      break;
    }
  // The recursive coefficients already equal the joint LS fit on the union
  // support; refit directly anyway to shed accumulated rounding.
  CVec coeffs = g.coeffs;
  if (!g.support.empty()) coeffs = columns(psi, g.support).colPivHouseholderQr().solve(y);
  est.pattern = SparsityPattern::from_support(g.support, atoms, num_angular);
  est.sparse = gather_sparse(g.support, coeffs, atoms);
  est.metric = g.captured;
  return est;
}

namespace {

struct Posterior {
  Eigen::LLT<CMat> llt;
  CMat psi_s;
  RVec c_s;
};

Posterior factor(const std::vector<int>& support, const CMat& psi, const BmpPriors& priors, const RVec& r_grid,
                 int num_angular) {
  const RVec c = atom_variances(priors, r_grid, num_angular);
  Posterior p;
  p.psi_s = columns(psi, support);
  p.c_s.resize(static_cast<Eigen::Index>(support.size()));
  for (std::size_t k = 0; k < support.size(); ++k) p.c_s[k] = c[support[k]];
  CMat gamma = p.psi_s * p.c_s.asDiagonal() * p.psi_s.adjoint();
  gamma.diagonal().array() += priors.noise_var;
  p.llt.compute(gamma);
  if (p.llt.info() != Eigen::Success) throw NumericalError("covariance is not positive definite");
  return p;
}

}  // namespace

CVec mmse_given_pattern(const std::vector<int>& support, const CVec& ybar, const CMat& psi, const BmpPriors& priors,
                        const RVec& r_grid, int num_angular) {
  check_priors(priors);
  if (support.empty()) return CVec::Zero(psi.cols());
  const Posterior p = factor(support, psi, priors, r_grid, num_angular);
  const CVec coeffs = p.c_s.asDiagonal() * (p.psi_s.adjoint() * p.llt.solve(ybar));
  return gather_sparse(support, coeffs, psi.cols());
}

double bmp_log_metric(const std::vector<int>& support, const CVec& ybar, const CMat& psi, const BmpPriors& priors,
                      const RVec& r_grid, int num_angular) {
  check_priors(priors);
  const Posterior p = factor(support, psi, priors, r_grid, num_angular);
  const double quad = std::real(ybar.dot(p.llt.solve(ybar)));
  const double logdet = 2.0 * p.llt.matrixL().toDenseMatrix().diagonal().real().array().log().sum();
  const auto m = static_cast<double>(psi.rows());
  const auto k = static_cast<double>(support.size());
  return -0.5 * quad - 0.5 * logdet - 0.5 * m * std::log(2.0 * kPi) + k * std::log(priors.prob_active) +
         (static_cast<double>(psi.cols()) - k) * std::log(priors.prob_zero());
}

SparsityPattern exhaustive_map_pattern(const CVec& ybar, const CMat& psi, const BmpPriors& priors,
                                       const RVec& r_grid, int num_angular, int max_size) {
  const int atoms = static_cast<int>(psi.cols());
  if (max_size < 0) throw std::invalid_argument("exhaustive_map_pattern: negative size");
  double total = 0.0;
  double binom = 1.0;
  for (int k = 0; k <= std::min(max_size, atoms); ++k) {
    total += binom;
    binom = binom * (atoms - k) / (k + 1);
  }
  if (total > 1e6) throw std::invalid_argument("exhaustive_map_pattern: more than 10^6 candidate supports");

  std::vector<int> best;
  double best_metric = bmp_log_metric(best, ybar, psi, priors, r_grid, num_angular);
  for (int k = 1; k <= std::min(max_size, atoms); ++k) {
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    while (true) {
      const double a = bmp_log_metric(idx, ybar, psi, priors, r_grid, num_angular);
      if (a > best_metric) {
        best_metric = a;
        best = idx;
      }
      int i = k - 1;
      while (i >= 0 && idx[i] == atoms - k + i) --i;
      if (i < 0) break;
      ++idx[i];
      for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  return SparsityPattern::from_support(best, atoms, num_angular);
}

}  // namespace hfce
