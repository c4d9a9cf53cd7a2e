#include "hfce/los_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hfce/channel.hpp"

namespace hfce {

LosFit los_objective(double r, double phi, const CVec& y, const CMat& pilot, const SystemConfig& cfg) {
  const CVec a = pilot * los_template(r, phi, cfg);
  const double energy = a.squaredNorm();
  if (!(energy > 0.0)) throw NumericalError("los_objective: X u vanishes at r=" + std::to_string(r));
  LosFit fit;
  fit.gain = a.dot(y) / energy;
  fit.value = (y - fit.gain * a).norm();
  return fit;
}

namespace {

std::vector<double> arange(double lo, double hi, double step) {
  std::vector<double> v;
  const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  for (long i = 0; i <= count; ++i) v.push_back(lo + step * static_cast<double>(i));
  return v;
}

}  // namespace

LosGrid make_los_grid(const SystemConfig& cfg) {
  return {arange(cfg.r_min, cfg.r_max, cfg.los.grid_dr), arange(cfg.phi_min, cfg.phi_max, cfg.los.grid_dphi)};
}

LosGridBank::LosGridBank(const CMat& pilot, const LosGrid& grid, const SystemConfig& cfg) : grid_(grid) {
  if (grid.r.empty() || grid.phi.empty()) throw std::invalid_argument("LosGridBank: empty grid");
  const Eigen::Index cells = static_cast<Eigen::Index>(grid.r.size() * grid.phi.size());
  CMat templates(pilot.cols(), cells);
  Eigen::Index c = 0;
  for (double r : grid.r)
    for (double phi : grid.phi) templates.col(c++) = los_template(r, phi, cfg);
  projected_ = pilot * templates;
  inv_energy_ = projected_.colwise().squaredNorm().transpose();
  for (Eigen::Index i = 0; i < cells; ++i) {
    if (!(inv_energy_[i] > 0.0)) throw NumericalError("LosGridBank: X u vanishes on a grid cell");
    inv_energy_[i] = 1.0 / inv_energy_[i];
  }
}

std::pair<double, double> LosGridBank::search(const CVec& y) const {
  // Minimizing J is maximizing the captured energy |a^H y|^2 / ||a||^2.
  const CVec corr = projected_.adjoint() * y;
  Eigen::Index best = 0;
  double best_score = -1.0;
  for (Eigen::Index i = 0; i < corr.size(); ++i) {
    const double score = std::norm(corr[i]) * inv_energy_[i];
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  const auto nphi = static_cast<Eigen::Index>(grid_.phi.size());
  return {grid_.r[best / nphi], grid_.phi[best % nphi]};
}

std::pair<double, double> coarse_grid_search(const CVec& y, const CMat& pilot, const LosGrid& grid,
                                             const SystemConfig& cfg) {
  return LosGridBank(pilot, grid, cfg).search(y);
}

LosEstimate gradient_descent_los(const CVec& y, const CMat& pilot, double r0, double phi0, const SystemConfig& cfg) {
  const LosConfig& lc = cfg.los;
  LosEstimate est;
  double r = r0;
  double phi = phi0;
  auto clamp_r = [&](double v) {
    const double c = std::clamp(v, cfg.r_min, cfg.r_max);
    if (c != v) ++est.clamps;
    return c;
  };
  auto clamp_phi = [&](double v) {
    const double c = std::clamp(v, cfg.phi_min, cfg.phi_max);
    if (c != v) ++est.clamps;
    return c;
  };
  r = clamp_r(r);
  phi = clamp_phi(phi);
  auto J = [&](double rr, double pp) { return los_objective(rr, pp, y, pilot, cfg).value; };

  double j = J(r, phi);
  est.trace.push_back(j);
  const double tol = lc.eps_rel * y.norm();

  for (int t = 0; t < lc.max_iters; ++t) {
    const double j_prev = j;
    ++est.iterations;

    const double g_r = (J(r + lc.fd_step_r, phi) - J(r - lc.fd_step_r, phi)) / (2.0 * lc.fd_step_r);
    if (g_r != 0.0 && std::isfinite(g_r)) {
      for (double eta = lc.eta_r; eta > 1e-9; eta *= 0.5) {
        const double rc = std::clamp(r - eta * (g_r > 0 ? 1.0 : -1.0), cfg.r_min, cfg.r_max);
        const double jc = J(rc, phi);
        if (jc < j) {
          r = clamp_r(r - eta * (g_r > 0 ? 1.0 : -1.0));
          j = jc;
          break;
        }
      }
    }

    const double g_phi = (J(r, phi + lc.fd_step_phi) - J(r, phi - lc.fd_step_phi)) / (2.0 * lc.fd_step_phi);
    if (g_phi != 0.0 && std::isfinite(g_phi)) {
      for (double eta = lc.eta_phi; eta > 1e-12; eta *= 0.5) {
        const double pc = std::clamp(phi - eta * (g_phi > 0 ? 1.0 : -1.0), cfg.phi_min, cfg.phi_max);
        const double jc = J(r, pc);
        if (jc < j) {
          phi = clamp_phi(phi - eta * (g_phi > 0 ? 1.0 : -1.0));
          j = jc;
          break;
        }
      }
    }

    est.trace.push_back(j);
    if (std::abs(j_prev - j) <= tol) break;
  }

  const LosFit fit = los_objective(r, phi, y, pilot, cfg);
  est.r_hat = r;
  est.phi_hat = phi;
  est.gain_hat = fit.gain;
  est.h_los_hat = fit.gain * los_template(r, phi, cfg);
  est.residual = y - pilot * est.h_los_hat;
  return est;
}

LosEstimate estimate_los(const CVec& y, const CMat& pilot, const SystemConfig& cfg) {
  return estimate_los(y, pilot, LosGridBank(pilot, make_los_grid(cfg), cfg), cfg);
}

LosEstimate estimate_los(const CVec& y, const CMat& pilot, const LosGridBank& bank, const SystemConfig& cfg) {
  const auto [r0, phi0] = bank.search(y);
  return gradient_descent_los(y, pilot, r0, phi0, cfg);
}

}  // namespace hfce
