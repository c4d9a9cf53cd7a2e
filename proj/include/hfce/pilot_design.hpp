#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hfce/config.hpp"
#include "hfce/rng.hpp"
#include "hfce/types.hpp"

namespace hfce {

/// Unordered column pair u < v.
struct ColumnPair {
  int u = 0;
  int v = 0;
};

/// Number of pairs among n columns, n (n - 1) / 2.
std::int64_t pair_count(int n);
/// Lexicographic position of (u, v), u < v, among the pairs of n columns.
std::int64_t pair_index(int u, int v, int n);
ColumnPair pair_at(std::int64_t index, int n);

/// Normalized correlations psi_{u,v} = Psi_u^H Psi_v / (|Psi_u| |Psi_v|) for all
/// u < v, in lexicographic order.
struct CoherenceVector {
  int columns = 0;
  CVec values;

  cplx at(int u, int v) const;
  double max_abs() const { return values.size() ? values.cwiseAbs().maxCoeff() : 0.0; }
};

/// Throws std::invalid_argument naming the first zero column.
CoherenceVector coherence_vector(const CMat& sensing);
double mutual_coherence(const CMat& sensing);

/// Euclidean projection of a nonnegative vector onto {x >= 0, sum x <= radius}.
RVec project_simplex_ball(const RVec& magnitudes, double radius);

/// argmin_xi ||xi||_inf + 1/(2t) ||xi - v||^2 for complex v, with ||.||_inf the
/// max modulus. Computed as v - t * P(v / t), P the l1-ball projection acting on
/// moduli with phases kept.
CVec prox_inf_norm(const CVec& v, double t);

/// 1/2 sum_k |psi_k(X F) - target_k|^2 over the listed pairs.
double coherence_objective(const CMat& pilot, const CMat& transform,
                           std::span<const ColumnPair> pairs, const CVec& target);

/// Euclidean gradient of coherence_objective w.r.t. X in the convention
/// df = Re tr(G^H dX); the descent direction is -G.
CMat coherence_objective_grad(const CMat& pilot, const CMat& transform,
                              std::span<const ColumnPair> pairs, const CVec& target);

/// All-pairs forms; `target` has pair_count(N') entries in lexicographic order.
double coherence_objective(const CMat& pilot, const CMat& transform, const CVec& target);
CMat coherence_objective_grad(const CMat& pilot, const CMat& transform, const CVec& target);

/// Removes from each row of `grad` its radial component along the matching row of `pilot`.
CMat tangent_project(const CMat& pilot, const CMat& grad);

/// Rescales every row to norm sqrt(row_power). Throws NumericalError on a zero row.
CMat retract_rows(const CMat& pilot, double row_power);

/// One manifold step: X - step * tangent(grad), retracted to rows of power row_power.
CMat riemannian_step(const CMat& pilot, const CMat& grad, double step, double row_power);

/// Geometric penalty ramp from rho_start to rho_end over `iterations` steps.
std::vector<double> penalty_schedule(double rho_start, double rho_end, int iterations);

struct AdmmIterate {
  int iteration = 0;
  double rho = 0.0;
  double xi_max = 0.0;        // max |xi|
  double residual = 0.0;      // ||xi - psi||_2 after the X-update
  double coherence = 0.0;     // C(X F) after the X-update
  double best_coherence = 0.0;
  double max_row_power_error = 0.0;
};

struct AdmmResult {
  CMat pilot;                 // best iterate (smallest coherence, earliest on ties)
  double best_coherence = 0.0;
  int best_iteration = 0;
  CMat final_pilot;
  CVec xi;
  CVec dual;
  std::vector<AdmmIterate> history;
};

/// Observer invoked after every outer iteration with (iterate, dual before, dual after,
/// xi, psi). Used by tests to audit the dual update.
struct AdmmObserver {
  virtual ~AdmmObserver() = default;
  virtual void on_iteration(const AdmmIterate& it, const CVec& dual_prev, const CVec& dual,
                            const CVec& xi, const CVec& psi, double rho) = 0;
};

/// Mutual-coherence minimization over constant-row-power pilots.
/// Per outer iteration: xi-update (prox), X-update (mini-batched Riemannian
/// descent on ||psi - xi - dual/rho||^2), dual ascent dual += rho (xi - psi).
AdmmResult admm_pilot_design(const CMat& transform, int pilot_len, double row_power,
                             const AdmmConfig& admm, Rng& rng, AdmmObserver* observer = nullptr);

enum class PilotKind { kRandomBinary, kUnimodular, kZadoffChu, kGaussian };

PilotKind parse_pilot_kind(const std::string& name);
std::string pilot_kind_name(PilotKind kind);

/// Zadoff-Chu root sequence of length n (unit modulus). Requires gcd(root, n) = 1.
CVec zadoff_chu_sequence(int root, int n);

/// Baseline pilot X (M x N, rows of power P_x). kGaussian instead returns an
/// M x N' circular Gaussian matrix standing in for Psi itself.
CMat baseline_pilot(PilotKind kind, const SystemConfig& cfg, Rng& rng, int zc_root = 25);

}  // namespace hfce
