#pragma once

#include <vector>

#include "hfce/config.hpp"
#include "hfce/types.hpp"

namespace hfce {

struct LosFit {
  double value = 0.0;  // J = ||y - g X u||
  cplx gain{};         // profile least-squares gain g = (X u)^H y / ||X u||^2
};

/// Objective of the LoS stage at (r, phi) with the complex gain profiled out.
/// Throws NumericalError when X u vanishes.
LosFit los_objective(double r, double phi, const CVec& y, const CMat& pilot, const SystemConfig& cfg);

struct LosGrid {
  std::vector<double> r;
  std::vector<double> phi;
};

/// {r_min : dr : r_max} x {phi_min : dphi : phi_max} from the `los` config section.
LosGrid make_los_grid(const SystemConfig& cfg);

/// Grid templates X u(r, phi) for one pilot, reusable across received vectors.
class LosGridBank {
 public:
  LosGridBank(const CMat& pilot, const LosGrid& grid, const SystemConfig& cfg);

  /// Grid cell minimizing J; ties go to the smallest r, then the smallest phi.
  std::pair<double, double> search(const CVec& y) const;
  const LosGrid& grid() const { return grid_; }

 private:
  LosGrid grid_;
  CMat projected_;     // column (i * |phi| + j) = X u(r_i, phi_j)
  RVec inv_energy_;    // 1 / ||X u||^2
};

std::pair<double, double> coarse_grid_search(const CVec& y, const CMat& pilot, const LosGrid& grid,
                                             const SystemConfig& cfg);

struct LosEstimate {
  double r_hat = 0.0;
  double phi_hat = 0.0;
  cplx gain_hat{};
  CVec h_los_hat;
  CVec residual;               // y - X h_los_hat
  std::vector<double> trace;   // J before the first and after every iteration
  int iterations = 0;
  int clamps = 0;              // times an iterate was pulled back into coverage
};

/// Sign-normalized coordinate descent on J from (r0, phi0) using central finite
/// differences; each coordinate step is halved until J decreases.
LosEstimate gradient_descent_los(const CVec& y, const CMat& pilot, double r0, double phi0, const SystemConfig& cfg);

/// Coarse search followed by refinement.
LosEstimate estimate_los(const CVec& y, const CMat& pilot, const SystemConfig& cfg);
LosEstimate estimate_los(const CVec& y, const CMat& pilot, const LosGridBank& bank, const SystemConfig& cfg);

}  // namespace hfce
