#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "hfce/pilot_design.hpp"

namespace hfce {

std::int64_t pair_count(int n) { return static_cast<std::int64_t>(n) * (n - 1) / 2; }

std::int64_t pair_index(int u, int v, int n) {
  if (!(0 <= u && u < v && v < n)) throw std::out_of_range("pair_index: require 0 <= u < v < n");
  const std::int64_t uu = u;
  return uu * (2 * static_cast<std::int64_t>(n) - uu - 1) / 2 + (v - u - 1);
}

ColumnPair pair_at(std::int64_t index, int n) {
  if (index < 0 || index >= pair_count(n)) throw std::out_of_range("pair_at: index out of range");
  int u = 0;
  std::int64_t row = n - 1;
  while (index >= row) {
    index -= row;
    ++u;
    --row;
  }
  return {u, static_cast<int>(u + 1 + index)};
}

cplx CoherenceVector::at(int u, int v) const {
  if (u == v) throw std::invalid_argument("CoherenceVector::at: u == v");
  if (u < v) return values[pair_index(u, v, columns)];
  return std::conj(values[pair_index(v, u, columns)]);
}

namespace {

RVec checked_norms(const CMat& m, const char* who) {
  RVec norms = m.colwise().norm().transpose();
  for (Eigen::Index c = 0; c < norms.size(); ++c)
    if (!(norms[c] > 0.0))
      throw std::invalid_argument(std::string(who) + ": zero column " + std::to_string(c));
  return norms;
}

CMat normalized_gram(const CMat& sensing, const char* who) {
  if (sensing.cols() < 2) throw std::invalid_argument(std::string(who) + ": need at least two columns");
  const RVec norms = checked_norms(sensing, who);
  const CMat unit = sensing * norms.cwiseInverse().asDiagonal();
  return unit.adjoint() * unit;
}

}  // namespace

CoherenceVector coherence_vector(const CMat& sensing) {
  const CMat gram = normalized_gram(sensing, "coherence_vector");
  const int n = static_cast<int>(sensing.cols());
  CoherenceVector cv;
  cv.columns = n;
  cv.values.resize(pair_count(n));
  std::int64_t k = 0;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v) cv.values[k++] = gram(u, v);
  return cv;
}

double mutual_coherence(const CMat& sensing) {
  const CMat gram = normalized_gram(sensing, "mutual_coherence");
  double best = 0.0;
  const Eigen::Index n = gram.cols();
  for (Eigen::Index v = 1; v < n; ++v)
    for (Eigen::Index u = 0; u < v; ++u) best = std::max(best, std::abs(gram(u, v)));
  return best;
}

RVec project_simplex_ball(const RVec& magnitudes, double radius) {
  if (magnitudes.sum() <= radius) return magnitudes;
  std::vector<double> sorted(magnitudes.data(), magnitudes.data() + magnitudes.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double tau = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumulative += sorted[k];
    const double candidate = (cumulative - radius) / static_cast<double>(k + 1);
    if (k + 1 == sorted.size() || sorted[k + 1] <= candidate) {
      tau = candidate;
      break;
    }
  }
  return (magnitudes.array() - tau).max(0.0).matrix();
}

CVec prox_inf_norm(const CVec& v, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("prox_inf_norm: t must be positive");
  const RVec mags = v.cwiseAbs();
  if (mags.sum() <= t) return CVec::Zero(v.size());
  const RVec p = project_simplex_ball(mags / t, 1.0);
  CVec xi(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double m = mags[i] - t * p[i];
    xi[i] = mags[i] > 0.0 ? v[i] * (m / mags[i]) : cplx{};
  }
  return xi;
}

namespace {

struct SensingView {
  CMat psi;
  RVec norms;
};

SensingView sensing_view(const CMat& pilot, const CMat& transform) {
  SensingView s{pilot * transform, {}};
  s.norms = s.psi.colwise().norm().transpose();
  for (Eigen::Index c = 0; c < s.norms.size(); ++c)
    if (!(s.norms[c] > 0.0))
      throw NumericalError("coherence objective: zero sensing column " + std::to_string(c));
  return s;
}

cplx pair_psi(const SensingView& s, const ColumnPair& p) {
  return s.psi.col(p.u).dot(s.psi.col(p.v)) / (s.norms[p.u] * s.norms[p.v]);
}

}  // namespace

double coherence_objective(const CMat& pilot, const CMat& transform, std::span<const ColumnPair> pairs,
                           const CVec& target) {
  if (static_cast<Eigen::Index>(pairs.size()) != target.size())
    throw std::invalid_argument("coherence_objective: pairs/target size mismatch");
  const SensingView s = sensing_view(pilot, transform);
  double f = 0.0;
  for (std::size_t k = 0; k < pairs.size(); ++k) f += 0.5 * std::norm(pair_psi(s, pairs[k]) - target[k]);
  return f;
}

CMat coherence_objective_grad(const CMat& pilot, const CMat& transform, std::span<const ColumnPair> pairs,
                              const CVec& target) {
  if (static_cast<Eigen::Index>(pairs.size()) != target.size())
    throw std::invalid_argument("coherence_objective_grad: pairs/target size mismatch");
  const SensingView s = sensing_view(pilot, transform);
  CMat g_psi = CMat::Zero(s.psi.rows(), s.psi.cols());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [u, v] = pairs[k];
    const double nu = s.norms[u];
    const double nv = s.norms[v];
    const cplx psi = pair_psi(s, pairs[k]);
    const cplx e = psi - target[k];
    const double radial = std::real(std::conj(e) * psi);
    g_psi.col(u) += std::conj(e) / (nu * nv) * s.psi.col(v) - radial / (nu * nu) * s.psi.col(u);
    g_psi.col(v) += e / (nu * nv) * s.psi.col(u) - radial / (nv * nv) * s.psi.col(v);
  }
  return g_psi * transform.adjoint();
}

double coherence_objective(const CMat& pilot, const CMat& transform, const CVec& target) {
  const CoherenceVector cv = coherence_vector(pilot * transform);
  if (cv.values.size() != target.size()) throw std::invalid_argument("coherence_objective: target size mismatch");
  return 0.5 * (cv.values - target).squaredNorm();
}

CMat coherence_objective_grad(const CMat& pilot, const CMat& transform, const CVec& target) {
  const SensingView s = sensing_view(pilot, transform);
  const int n = static_cast<int>(s.psi.cols());
  if (target.size() != pair_count(n)) throw std::invalid_argument("coherence_objective_grad: target size mismatch");
  const CMat unit = s.psi * s.norms.cwiseInverse().asDiagonal();
  const CMat gram = unit.adjoint() * unit;

  // coeff(w, u): weight of Psi_w in the gradient column u.
  CMat coeff = CMat::Zero(n, n);
  RVec radial = RVec::Zero(n);
  std::int64_t k = 0;
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v, ++k) {
      const cplx psi = gram(u, v);
      const cplx e = psi - target[k];
      const double scale = 1.0 / (s.norms[u] * s.norms[v]);
      coeff(v, u) = std::conj(e) * scale;
      coeff(u, v) = e * scale;
      const double r = std::real(std::conj(e) * psi);
      radial[u] += r;
      radial[v] += r;
    }
  }
  CMat g_psi = s.psi * coeff;
  for (int u = 0; u < n; ++u) g_psi.col(u) -= radial[u] / (s.norms[u] * s.norms[u]) * s.psi.col(u);
  return g_psi * transform.adjoint();
}

CMat tangent_project(const CMat& pilot, const CMat& grad) {
  if (pilot.rows() != grad.rows() || pilot.cols() != grad.cols())
    throw std::invalid_argument("tangent_project: shape mismatch");
  CMat out = grad;
  for (Eigen::Index m = 0; m < pilot.rows(); ++m) {
    const double p2 = pilot.row(m).squaredNorm();
    if (!(p2 > 0.0)) throw NumericalError("tangent_project: zero pilot row " + std::to_string(m));
    const double radial = std::real(pilot.row(m).dot(grad.row(m)));
    out.row(m) -= (radial / p2) * pilot.row(m);
  }
  return out;
}

CMat retract_rows(const CMat& pilot, double row_power) {
  CMat out = pilot;
  const double target = std::sqrt(row_power);
  for (Eigen::Index m = 0; m < out.rows(); ++m) {
    const double norm = out.row(m).norm();
    if (!(norm > 0.0) || !std::isfinite(norm))
      throw NumericalError("retract_rows: row " + std::to_string(m) + " has no direction");
    out.row(m) *= target / norm;
  }
  return out;
}

CMat riemannian_step(const CMat& pilot, const CMat& grad, double step, double row_power) {
  return retract_rows(pilot - step * tangent_project(pilot, grad), row_power);
}

std::vector<double> penalty_schedule(double rho_start, double rho_end, int iterations) {
  if (iterations < 1) throw std::invalid_argument("penalty_schedule: iterations must be positive");
  if (!(rho_start > 0.0 && rho_end >= rho_start))
    throw std::invalid_argument("penalty_schedule: require 0 < rho_start <= rho_end");
  std::vector<double> rho(iterations);
  const double ratio = rho_end / rho_start;
  for (int l = 0; l < iterations; ++l) {
    const double frac = iterations == 1 ? 1.0 : static_cast<double>(l) / (iterations - 1);
    rho[l] = rho_start * std::pow(ratio, frac);
  }
  rho.back() = rho_end;
  return rho;
}

}  // namespace hfce
