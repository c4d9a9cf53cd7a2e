#include <stdexcept>

#include "hfce/scattering.hpp"

namespace hfce {

CVec genie_ls(const CVec& y, const CMat& pilot, const Dictionary& dict, const HybridChannel& truth,
              const SystemConfig& cfg) {
  const CVec u = los_template(truth.los_distance, truth.los_angle, cfg);
  const CMat transform = dict.transform();
  const auto k = static_cast<Eigen::Index>(truth.support.size());
  if (k + 1 > pilot.rows()) throw std::invalid_argument("genie_ls: more unknowns than pilot symbols");

  CMat basis(pilot.cols(), k + 1);  // channel-domain columns
  basis.col(0) = u;
  for (Eigen::Index i = 0; i < k; ++i) basis.col(i + 1) = transform.col(truth.support[i]);
  const CMat a = pilot * basis;
  const CVec coeffs = a.colPivHouseholderQr().solve(y);
  return basis * coeffs;
}

}  // namespace hfce
