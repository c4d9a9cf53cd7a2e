#include <cmath>
#include <numeric>
#include <stdexcept>

#include "hfce/pilot_design.hpp"

namespace hfce {

PilotKind parse_pilot_kind(const std::string& name) {
  if (name == "random_binary") return PilotKind::kRandomBinary;
  if (name == "unimodular_random_phase" || name == "unimodular") return PilotKind::kUnimodular;
  if (name == "zadoff_chu") return PilotKind::kZadoffChu;
  if (name == "gaussian") return PilotKind::kGaussian;
  throw std::invalid_argument("unknown pilot kind '" + name + "'");
}

std::string pilot_kind_name(PilotKind kind) {
  switch (kind) {
    case PilotKind::kRandomBinary: return "random_binary";
    case PilotKind::kUnimodular: return "unimodular_random_phase";
    case PilotKind::kZadoffChu: return "zadoff_chu";
    case PilotKind::kGaussian: return "gaussian";
  }
  return "unknown";
}

CVec zadoff_chu_sequence(int root, int n) {
  if (n < 1) throw std::invalid_argument("zadoff_chu_sequence: length must be positive");
  if (std::gcd(root, n) != 1) throw std::invalid_argument("zadoff_chu_sequence: gcd(root, length) must be 1");
  CVec z(n);
  for (int k = 0; k < n; ++k) {
    // k^2 (even n) or k (k + 1) (odd n), reduced mod 2n to keep the phase argument small.
    const long long kk = n % 2 == 0 ? 1LL * k * k : 1LL * k * (k + 1);
    const long long r = (static_cast<long long>(root) * kk) % (2LL * n);
    z[k] = std::polar(1.0, -kPi * static_cast<double>(r) / n);
  }
  return z;
}

CMat baseline_pilot(PilotKind kind, const SystemConfig& cfg, Rng& rng, int zc_root) {
  const int m = cfg.pilot_len;
  const int n = cfg.num_antennas;
  const double amp = std::sqrt(cfg.pilot_power / n);
  CMat x(m, n);
  switch (kind) {
    case PilotKind::kRandomBinary:
      for (int i = 0; i < m; ++i)
        for (int k = 0; k < n; ++k) x(i, k) = rng.coin() ? amp : -amp;
      return x;
    case PilotKind::kUnimodular:
      for (int i = 0; i < m; ++i)
        for (int k = 0; k < n; ++k) x(i, k) = std::polar(amp, rng.uniform(0.0, 2.0 * kPi));
      return x;
    case PilotKind::kZadoffChu: {
      const CVec z = zadoff_chu_sequence(zc_root, n);
      const int shift = n / m;
      for (int i = 0; i < m; ++i)
        for (int k = 0; k < n; ++k) x(i, k) = amp * z[(k + static_cast<long long>(i) * shift) % n];
      return x;
    }
    case PilotKind::kGaussian: {
      CMat psi(m, cfg.num_atoms());
      for (Eigen::Index j = 0; j < psi.cols(); ++j)
        for (int i = 0; i < m; ++i) psi(i, j) = rng.complex_normal(1.0);
      return psi;
    }
  }
  throw std::invalid_argument("baseline_pilot: unknown kind");
}

}  // namespace hfce
