#include <cmath>
#include <limits>
#include <stdexcept>

#include "hfce/pilot_design.hpp"

namespace hfce {

namespace {

CMat unimodular_rows(int rows, int cols, double row_power, Rng& rng) {
  CMat x(rows, cols);
  const double amp = std::sqrt(row_power / cols);
  for (int m = 0; m < rows; ++m)
    for (int n = 0; n < cols; ++n) x(m, n) = std::polar(amp, rng.uniform(0.0, 2.0 * kPi));
  return x;
}

double max_row_power_error(const CMat& x, double row_power) {
  double err = 0.0;
  for (Eigen::Index m = 0; m < x.rows(); ++m) err = std::max(err, std::abs(x.row(m).squaredNorm() - row_power));
  return err;
}

void require_finite(double value, const char* what, int iteration) {
  if (!std::isfinite(value))
    throw NumericalError(std::string("admm: non-finite ") + what + " at iteration " + std::to_string(iteration));
}

}  // namespace

AdmmResult admm_pilot_design(const CMat& transform, int pilot_len, double row_power, const AdmmConfig& admm,
                             Rng& rng, AdmmObserver* observer) {
  const int n = static_cast<int>(transform.rows());
  const int atoms = static_cast<int>(transform.cols());
  if (pilot_len < 1 || pilot_len > n) throw std::invalid_argument("admm_pilot_design: require 1 <= M <= N");
  if (atoms < 2) throw std::invalid_argument("admm_pilot_design: transform needs at least two columns");
  if (!(row_power > 0.0)) throw std::invalid_argument("admm_pilot_design: row power must be positive");

  const std::vector<double> rho_schedule = penalty_schedule(admm.rho_start, admm.rho_end, admm.outer_iterations);
  const std::int64_t total_pairs = pair_count(atoms);
  std::vector<ColumnPair> all_pairs;
  all_pairs.reserve(total_pairs);
  for (int u = 0; u < atoms; ++u)
    for (int v = u + 1; v < atoms; ++v) all_pairs.push_back({u, v});
  const int batch = static_cast<int>(std::min<std::int64_t>(admm.batch_pairs, total_pairs));

  CMat x = unimodular_rows(pilot_len, n, row_power, rng);
  CVec psi = coherence_vector(x * transform).values;
  CVec dual = CVec::Zero(total_pairs);
  CVec xi = CVec::Zero(total_pairs);

  AdmmResult result;
  result.pilot = x;
  result.best_coherence = psi.cwiseAbs().maxCoeff();
  result.best_iteration = 0;
  double step = admm.initial_step;

  std::vector<ColumnPair> pairs(batch);
  CVec target(batch);
  for (int l = 0; l < admm.outer_iterations; ++l) {
    const double rho = rho_schedule[l];
    xi = prox_inf_norm(psi - dual / rho, 1.0 / rho);
    const CVec full_target = xi + dual / rho;

    for (int k = 0; k < admm.inner_steps; ++k) {
      for (int b = 0; b < batch; ++b) {
        const std::int64_t idx = batch == total_pairs ? b : static_cast<std::int64_t>(rng.index(total_pairs));
        pairs[b] = all_pairs[idx];
        target[b] = full_target[idx];
      }
      const double f0 = coherence_objective(x, transform, pairs, target);
      require_finite(f0, "objective", l + 1);
      const CMat grad = coherence_objective_grad(x, transform, pairs, target);
      // Try a slightly longer step than last time, then halve until no increase.
      double trial = std::min(2.0 * step, admm.initial_step * 1e3);
      bool accepted = false;
      for (int h = 0; h < 40; ++h, trial *= 0.5) {
        CMat candidate = riemannian_step(x, grad, trial, row_power);
        const double f1 = coherence_objective(candidate, transform, pairs, target);
        if (std::isfinite(f1) && f1 <= f0) {
          x = std::move(candidate);
          step = trial;
          accepted = true;
          break;
        }
      }
      if (!accepted) step = std::max(step * 0.5, 1e-12);
    }

    psi = coherence_vector(x * transform).values;
    const CVec dual_prev = dual;
    dual += rho * (xi - psi);

    AdmmIterate it;
    it.iteration = l + 1;
    it.rho = rho;
    it.xi_max = xi.size() ? xi.cwiseAbs().maxCoeff() : 0.0;
    it.residual = (xi - psi).norm();
    it.coherence = psi.cwiseAbs().maxCoeff();
    it.max_row_power_error = max_row_power_error(x, row_power);
    require_finite(it.coherence, "coherence", it.iteration);
    require_finite(it.residual, "residual", it.iteration);
    if (it.coherence < result.best_coherence) {
      result.best_coherence = it.coherence;
      result.best_iteration = it.iteration;
      result.pilot = x;
    }
    it.best_coherence = result.best_coherence;
    result.history.push_back(it);
    if (observer) observer->on_iteration(it, dual_prev, dual, xi, psi, rho);
  }

  result.final_pilot = x;
  result.xi = std::move(xi);
  result.dual = std::move(dual);
  return result;
}

}  // namespace hfce
