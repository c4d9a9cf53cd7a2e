#pragma once

#include <vector>

#include "hfce/config.hpp"
#include "hfce/rng.hpp"
#include "hfce/types.hpp"

namespace hfce {

/// Boundary between radiating near field and far field, 2 D^2 / lambda.
double rayleigh_distance(double aperture, double wavelength);

/// Distance from element n (0-based) to a point at range r along direction
/// parameter theta (sin of the angle for half-wavelength arrays).
/// Throws std::domain_error on a negative radicand.
double element_distance(double r, double theta, int n, double spacing);

/// Far-field response, entry n = exp(-j pi n theta) / sqrt(N).
CVec far_steering(double theta, int num_antennas);

/// Near-field response, entry n = exp(+j 2pi/lambda (r^(n) - r)) / sqrt(N).
/// Tends to far_steering(theta) as r grows.
CVec near_steering(double theta, double r, const SystemConfig& cfg);

/// Sampled angle of DFT column n (0-based): (2(n+1) - N - 1) / N.
double angular_grid_angle(int n, int num_antennas);

/// Spatial DFT matrix whose columns are far_steering at the sampled angles.
CMat angular_dictionary(int num_antennas);

/// Angle/distance of every polar column, angle-major (all rings of angle 0 first).
struct PolarGrid {
  std::vector<double> theta;
  std::vector<double> distance;
  std::vector<int> angle_index;
  std::vector<int> ring;
};

/// Ring q of angle theta sits at N^2 d^2 (1 - theta^2) / (2 beta^2 lambda q),
/// clamped to the polar clamp interval (coverage bounds by default).
PolarGrid polar_grid(const SystemConfig& cfg);
CMat polar_dictionary(const SystemConfig& cfg);
CMat polar_dictionary(const SystemConfig& cfg, const PolarGrid& grid);

/// Concatenated angular/polar dictionary with per-atom geometry.
/// `atoms` holds unit-norm columns; the transform used in the signal model is
/// scale * atoms with scale = sqrt(N / (L + 1)).
struct Dictionary {
  CMat atoms;
  double scale = 1.0;
  int num_angular = 0;
  std::vector<double> theta;
  std::vector<double> distance;  // ring distance for polar atoms, +inf for angular atoms

  int size() const { return static_cast<int>(atoms.cols()); }
  Domain domain(int index) const { return index < num_angular ? Domain::kAngular : Domain::kPolar; }
  CMat transform() const { return scale * atoms; }
};

Dictionary build_dictionary(const SystemConfig& cfg);

/// Unit-gain LoS template: entry n = exp(-j 2pi r^(n) / lambda) / r^(n), r^(n) from sin(phi).
CVec los_template(double r, double phi, const SystemConfig& cfg);

/// LoS component g_LoS * los_template. Rejects r outside [r_min, r_max].
CVec los_channel(double r, double phi, const SystemConfig& cfg);

struct Scatterer {
  Domain domain = Domain::kNone;
  double phi = 0.0;       // physical angle as drawn
  double distance = 0.0;  // after snapping (ring distance for polar atoms)
  cplx gain{};            // small-scale gain g_l
  int atom = -1;          // dictionary index of the snapped atom
};

/// Ground-truth hybrid channel: dense = h_los + transform * sparse.
struct HybridChannel {
  double los_distance = 0.0;
  double los_angle = 0.0;
  cplx los_gain{};        // effective gain multiplying los_template
  CVec h_los;
  CVec sparse;            // h^{A,P}, length N'
  std::vector<int> support;
  CVec dense;
  std::vector<Scatterer> scatterers;
};

/// Unsnapped scattering geometry, reusable across array sizes.
struct ScatterDraw {
  double phi = 0.0;
  double r = 0.0;
  cplx gain{};
};

struct ChannelGeometry {
  double user_r = 0.0;
  double user_phi = 0.0;
  std::vector<ScatterDraw> far;
  std::vector<ScatterDraw> near;
};

/// Draws user and scatterer positions. Far scatterers lie beyond the Rayleigh
/// distance, near scatterers between r_min and it.
ChannelGeometry draw_geometry(const SystemConfig& cfg, Rng& rng);

/// Snaps scatterers to distinct dictionary atoms and assembles the channel.
/// Scatterers are classified by the Rayleigh distance of `cfg`, so one geometry
/// can be realized for several array sizes.
HybridChannel realize_channel(const SystemConfig& cfg, const Dictionary& dict,
                              const ChannelGeometry& geometry);

HybridChannel synth_hybrid_channel(const SystemConfig& cfg, const Dictionary& dict, Rng& rng);

/// y = X h + w with w ~ CN(0, noise_var I).
CVec receive_pilots(const CVec& h, const CMat& pilot, double noise_var, Rng& rng);

/// Pilot X, transform F, sensing matrix Psi = X F and its column norms.
struct SensingEnsemble {
  CMat pilot;
  CMat transform;
  CMat sensing;
  RVec column_norms;
};

SensingEnsemble make_sensing(const CMat& pilot, const CMat& transform);

}  // namespace hfce
