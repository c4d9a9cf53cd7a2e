#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "hfce/types.hpp"

namespace hfce {

/// Distance-ring sampling of the polar dictionary.
struct PolarGridConfig {
  double beta = 1.2;
  // Clamp interval for ring distances; nonpositive values mean "use the coverage bound".
  double clamp_min = 0.0;
  double clamp_max = 0.0;
};

/// Stage-one (LoS) search and refinement settings.
struct LosConfig {
  double grid_dr = 2.0;                      // m
  double grid_dphi = kPi / 180.0;            // rad
  double fd_step_r = 1e-3;                   // m
  double fd_step_phi = 1e-5;                 // rad
  double eta_r = 1.0;                        // m
  double eta_phi = 0.01;                     // rad
  double eps_rel = 1e-6;                     // stop when |dJ| < eps_rel * ||y||
  int max_iters = 200;
};

struct EstimatorConfig {
  int iterations = 6;                        // greedy iterations L
  bool residual_stop = false;
  double residual_stop_ratio = 1e-3;         // stop when ||residual||/||y|| drops below
  std::vector<std::string> estimators{"genie_ls", "bmp_csi", "bmp_nocsi", "hf_omp"};
};

struct AdmmConfig {
  int outer_iterations = 150;
  int inner_steps = 20;                      // K_X
  int batch_pairs = 4096;
  double rho_start = 0.05;
  double rho_end = 2.0;
  double initial_step = 1.0;
};

/// Pilot-overhead frame used by the spectral-efficiency metric.
struct FrameConfig {
  double coherence_time = 0.5e-3;            // s
  double symbol_time = 4.17e-6;              // s
};

/// All physical and simulation constants. Units are SI, angles in radians.
struct SystemConfig {
  int num_antennas = 128;                    // N
  int pilot_len = 40;                        // M
  int distance_rings = 4;                    // Q
  double wavelength = 0.006;                 // lambda
  double spacing = 0.0;                      // d; nonpositive means lambda/2
  double pilot_power = 1.0;                  // P_x
  double noise_var = 0.1;                    // sigma_w^2
  double gain_var_far = 1.0;                 // sigma_A^2
  double gain_var_near = 1.0;                // sigma_P^2
  double prob_active = 0.0;                  // p_{A,P}; nonpositive means L / N'
  int num_far = 2;                           // L_f
  int num_near = 2;                          // L_n
  double r_min = 4.0;
  double r_max = 60.0;
  double phi_min = -kPi / 3.0;
  double phi_max = kPi / 3.0;
  cplx los_gain{1.0, 0.0};
  double ref_distance = 6.0;                 // path amplitude is ref_distance / r

  PolarGridConfig polar;
  LosConfig los;
  EstimatorConfig estimator;
  AdmmConfig admm;
  FrameConfig frame;

  double element_spacing() const { return spacing > 0.0 ? spacing : wavelength / 2.0; }
  int num_paths() const { return num_far + num_near; }
  int num_atoms() const { return num_antennas * (1 + distance_rings); }
  double aperture() const { return (num_antennas - 1) * element_spacing(); }
  double rayleigh() const;
  double active_probability() const;
  double zero_probability() const { return 1.0 - active_probability(); }
  double snr_db() const;
  /// Sets noise_var so that pilot_power / noise_var equals the given SNR.
  void set_snr_db(double snr);

  /// Throws ConfigError on violated invariants.
  void validate() const;
};

SystemConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const SystemConfig& cfg);
SystemConfig load_config(const std::string& path);

}  // namespace hfce
