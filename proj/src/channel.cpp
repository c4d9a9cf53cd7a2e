#include "hfce/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hfce {

double rayleigh_distance(double aperture, double wavelength) {
  if (!(aperture > 0.0) || !(wavelength > 0.0))
    throw std::invalid_argument("rayleigh_distance: aperture and wavelength must be positive");
  return 2.0 * aperture * aperture / wavelength;
}

double element_distance(double r, double theta, int n, double spacing) {
  const double nd = spacing * n;
  const double radicand = r * r + nd * nd - 2.0 * nd * r * theta;
  if (radicand < 0.0) throw std::domain_error("element_distance: negative radicand");
  return std::sqrt(radicand);
}

CVec far_steering(double theta, int num_antennas) {
  if (std::abs(theta) > 1.0 + 1e-12) throw std::invalid_argument("far_steering: |theta| > 1");
  const double norm = 1.0 / std::sqrt(static_cast<double>(num_antennas));
  CVec a(num_antennas);
  for (int n = 0; n < num_antennas; ++n) a[n] = std::polar(norm, -kPi * n * theta);
  return a;
}

CVec near_steering(double theta, double r, const SystemConfig& cfg) {
  if (!(r > 0.0)) throw std::invalid_argument("near_steering: r must be positive");
  const int N = cfg.num_antennas;
  const double d = cfg.element_spacing();
  // theta = 2 d / lambda * sin(phi); the geometry needs sin(phi) itself.
  const double sin_phi = theta * cfg.wavelength / (2.0 * d);
  if (std::abs(sin_phi) > 1.0 + 1e-12) throw std::invalid_argument("near_steering: angle out of range");
  const double k = 2.0 * kPi / cfg.wavelength;
  const double norm = 1.0 / std::sqrt(static_cast<double>(N));
  CVec a(N);
  for (int n = 0; n < N; ++n) a[n] = std::polar(norm, k * (element_distance(r, sin_phi, n, d) - r));
  return a;
}

double angular_grid_angle(int n, int num_antennas) {
  return (2.0 * (n + 1) - num_antennas - 1) / num_antennas;
}

CMat angular_dictionary(int num_antennas) {
  if (num_antennas < 1) throw std::invalid_argument("angular_dictionary: N must be positive");
  CMat fa(num_antennas, num_antennas);
  for (int n = 0; n < num_antennas; ++n)
    fa.col(n) = far_steering(angular_grid_angle(n, num_antennas), num_antennas);
  return fa;
}

PolarGrid polar_grid(const SystemConfig& cfg) {
  const int N = cfg.num_antennas;
  const int Q = cfg.distance_rings;
  if (Q < 1) throw std::invalid_argument("polar_grid: no distance rings");
  const double d = cfg.element_spacing();
  const double lo = cfg.polar.clamp_min > 0.0 ? cfg.polar.clamp_min : cfg.r_min;
  const double hi = cfg.polar.clamp_max > 0.0 ? cfg.polar.clamp_max : cfg.r_max;
  const double ring_scale =
      static_cast<double>(N) * N * d * d / (2.0 * cfg.polar.beta * cfg.polar.beta * cfg.wavelength);

  PolarGrid grid;
  grid.theta.reserve(N * Q);
  grid.distance.reserve(N * Q);
  for (int n = 0; n < N; ++n) {
    const double theta = angular_grid_angle(n, N);
    for (int q = 1; q <= Q; ++q) {
      const double r = ring_scale * (1.0 - theta * theta) / q;
      grid.theta.push_back(theta);
      grid.distance.push_back(std::clamp(r, lo, hi));
      grid.angle_index.push_back(n);
      grid.ring.push_back(q);
    }
  }
  return grid;
}

CMat polar_dictionary(const SystemConfig& cfg, const PolarGrid& grid) {
  const auto cols = static_cast<Eigen::Index>(grid.theta.size());
  if (cols == 0) throw std::invalid_argument("polar_dictionary: empty distance ring set");
  CMat fp(cfg.num_antennas, cols);
  for (Eigen::Index c = 0; c < cols; ++c) fp.col(c) = near_steering(grid.theta[c], grid.distance[c], cfg);
  return fp;
}

CMat polar_dictionary(const SystemConfig& cfg) { return polar_dictionary(cfg, polar_grid(cfg)); }

Dictionary build_dictionary(const SystemConfig& cfg) {
  const int N = cfg.num_antennas;
  const PolarGrid grid = polar_grid(cfg);
  Dictionary dict;
  dict.num_angular = N;
  dict.atoms.resize(N, N + static_cast<Eigen::Index>(grid.theta.size()));
  dict.atoms.leftCols(N) = angular_dictionary(N);
  dict.atoms.rightCols(grid.theta.size()) = polar_dictionary(cfg, grid);
  dict.scale = std::sqrt(static_cast<double>(N) / (cfg.num_paths() + 1));
  dict.theta.reserve(dict.atoms.cols());
  dict.distance.reserve(dict.atoms.cols());
  for (int n = 0; n < N; ++n) {
    dict.theta.push_back(angular_grid_angle(n, N));
    dict.distance.push_back(std::numeric_limits<double>::infinity());
  }
  dict.theta.insert(dict.theta.end(), grid.theta.begin(), grid.theta.end());
  dict.distance.insert(dict.distance.end(), grid.distance.begin(), grid.distance.end());
  return dict;
}

CVec los_template(double r, double phi, const SystemConfig& cfg) {
  const int N = cfg.num_antennas;
  const double d = cfg.element_spacing();
  const double s = std::sin(phi);
  const double k = 2.0 * kPi / cfg.wavelength;
  CVec u(N);
  for (int n = 0; n < N; ++n) {
    const double rn = element_distance(r, s, n, d);
    u[n] = std::polar(1.0 / rn, -k * rn);
  }
  return u;
}

CVec los_channel(double r, double phi, const SystemConfig& cfg) {
  if (r < cfg.r_min || r > cfg.r_max) throw std::invalid_argument("los_channel: distance outside coverage");
  return cfg.los_gain * los_template(r, phi, cfg);
}

ChannelGeometry draw_geometry(const SystemConfig& cfg, Rng& rng) {
  const double z = cfg.rayleigh();
  ChannelGeometry g;
  g.user_r = rng.uniform(cfg.r_min, cfg.r_max);
  g.user_phi = rng.uniform(cfg.phi_min, cfg.phi_max);
  const double far_lo = std::max(z, cfg.r_min);
  const double far_hi = std::max(cfg.r_max, 2.0 * far_lo);
  for (int l = 0; l < cfg.num_far; ++l) {
    ScatterDraw s;
    s.phi = rng.uniform(cfg.phi_min, cfg.phi_max);
    s.r = rng.uniform(far_lo, far_hi);
    s.gain = rng.complex_normal(cfg.gain_var_far);
    g.far.push_back(s);
  }
  const double near_hi = std::clamp(z, cfg.r_min, cfg.r_max);
  for (int l = 0; l < cfg.num_near; ++l) {
    ScatterDraw s;
    s.phi = rng.uniform(cfg.phi_min, cfg.phi_max);
    s.r = rng.uniform(cfg.r_min, near_hi);
    s.gain = rng.complex_normal(cfg.gain_var_near);
    g.near.push_back(s);
  }
  return g;
}

namespace {

// Nearest unoccupied angular atom to theta.
int snap_angular(const Dictionary& dict, double theta, const std::vector<bool>& taken) {
  int best = -1;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int n = 0; n < dict.num_angular; ++n) {
    if (taken[n]) continue;
    const double dist = std::abs(dict.theta[n] - theta);
    if (dist < best_dist) {
      best_dist = dist;
      best = n;
    }
  }
  return best;
}

// Nearest unoccupied polar atom, measured in angle bins and ring units (1/r scaled).
int snap_polar(const SystemConfig& cfg, const Dictionary& dict, double theta, double r,
               const std::vector<bool>& taken) {
  const int N = cfg.num_antennas;
  const double d = cfg.element_spacing();
  const double ring_scale =
      static_cast<double>(N) * N * d * d / (2.0 * cfg.polar.beta * cfg.polar.beta * cfg.wavelength);
  int best = -1;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int i = dict.num_angular; i < dict.size(); ++i) {
    if (taken[i]) continue;
    const double w = ring_scale * (1.0 - dict.theta[i] * dict.theta[i]);
    const double da = (dict.theta[i] - theta) * N / 2.0;
    const double dr = w * (1.0 / dict.distance[i] - 1.0 / r);
    const double dist = da * da + dr * dr;
    if (dist < best_dist) {
      best_dist = dist;
      best = i;
    }
  }
  return best;
}

}  // namespace

HybridChannel realize_channel(const SystemConfig& cfg, const Dictionary& dict,
                              const ChannelGeometry& geometry) {
  const int total = static_cast<int>(geometry.far.size() + geometry.near.size());
  if (total > dict.size()) throw std::invalid_argument("realize_channel: more paths than atoms");
  const double z = cfg.rayleigh();
  const double theta_scale = 2.0 * cfg.element_spacing() / cfg.wavelength;

  HybridChannel ch;
  ch.sparse = CVec::Zero(dict.size());
  std::vector<bool> taken(dict.size(), false);
  std::vector<ScatterDraw> all(geometry.far);
  all.insert(all.end(), geometry.near.begin(), geometry.near.end());

  for (const auto& s : all) {
    Scatterer sc;
    sc.phi = s.phi;
    sc.gain = s.gain;
    const double theta = theta_scale * std::sin(s.phi);
    if (s.r > z) {
      sc.domain = Domain::kAngular;
      sc.atom = snap_angular(dict, theta, taken);
      sc.distance = s.r;
    } else {
      sc.domain = Domain::kPolar;
      sc.atom = snap_polar(cfg, dict, theta, s.r, taken);
      sc.distance = dict.distance[sc.atom];
    }
    taken[sc.atom] = true;
    ch.sparse[sc.atom] = s.gain * cfg.ref_distance / sc.distance;
    ch.support.push_back(sc.atom);
    ch.scatterers.push_back(sc);
  }
  std::sort(ch.support.begin(), ch.support.end());

  CVec scattered = CVec::Zero(cfg.num_antennas);
  double scattered_energy = 0.0;
  for (int idx : ch.support) {
    scattered += dict.scale * dict.atoms.col(idx) * ch.sparse[idx];
    scattered_energy += std::norm(dict.scale * ch.sparse[idx]);
  }

  ch.los_distance = geometry.user_r;
  ch.los_angle = geometry.user_phi;
  const CVec u = los_template(geometry.user_r, geometry.user_phi, cfg);
  cplx gain = std::sqrt(1.0 / (total + 1)) * cfg.los_gain * cfg.ref_distance;
  if (total > 0 && scattered_energy > 0.0) {
    // LoS energy equals the summed energy of the scattered paths.
    const double los_energy = std::norm(gain) * u.squaredNorm();
    if (los_energy > 0.0) gain *= std::sqrt(scattered_energy / los_energy);
  }
  ch.los_gain = gain;
  ch.h_los = gain * u;
  ch.dense = ch.h_los + scattered;
  return ch;
}

HybridChannel synth_hybrid_channel(const SystemConfig& cfg, const Dictionary& dict, Rng& rng) {
  if (cfg.num_paths() > dict.size()) throw std::invalid_argument("synth_hybrid_channel: L > N'");
  return realize_channel(cfg, dict, draw_geometry(cfg, rng));
}

CVec receive_pilots(const CVec& h, const CMat& pilot, double noise_var, Rng& rng) {
  if (pilot.cols() != h.size()) throw std::invalid_argument("receive_pilots: shape mismatch");
  CVec y = pilot * h;
  if (noise_var > 0.0)
    for (Eigen::Index m = 0; m < y.size(); ++m) y[m] += rng.complex_normal(noise_var);
  return y;
}

SensingEnsemble make_sensing(const CMat& pilot, const CMat& transform) {
  if (pilot.cols() != transform.rows()) throw std::invalid_argument("make_sensing: shape mismatch");
  SensingEnsemble s;
  s.pilot = pilot;
  s.transform = transform;
  s.sensing = pilot * transform;
  s.column_norms = s.sensing.colwise().norm().transpose();
  return s;
}

}  // namespace hfce
