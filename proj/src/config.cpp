#include "hfce/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "hfce/channel.hpp"

namespace hfce {

using nlohmann::json;

double SystemConfig::rayleigh() const { return rayleigh_distance(aperture(), wavelength); }

double SystemConfig::active_probability() const {
  if (prob_active > 0.0) return prob_active;
  const int paths = std::max(num_paths(), 1);
  return static_cast<double>(paths) / num_atoms();
}

double SystemConfig::snr_db() const { return 10.0 * std::log10(pilot_power / noise_var); }

void SystemConfig::set_snr_db(double snr) { noise_var = pilot_power / std::pow(10.0, snr / 10.0); }

void SystemConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("invalid config: " + what); };
  if (num_antennas < 1) fail("num_antennas must be positive");
  if (pilot_len < 1) fail("pilot_len must be positive");
  if (pilot_len > num_antennas) fail("pilot_len must not exceed num_antennas");
  if (distance_rings < 1) fail("distance_rings must be positive");
  if (!(wavelength > 0.0)) fail("wavelength must be positive");
  if (element_spacing() > wavelength / 2.0 + 1e-15) fail("spacing must not exceed wavelength/2");
  if (!(pilot_power > 0.0)) fail("pilot_power must be positive");
  if (!(noise_var >= 0.0)) fail("noise_var must be nonnegative");
  if (gain_var_far < 0.0 || gain_var_near < 0.0) fail("gain variances must be nonnegative");
  if (prob_active >= 1.0) fail("prob_active must be below 1");
  if (num_far < 0 || num_near < 0) fail("path counts must be nonnegative");
  if (num_paths() > num_atoms()) fail("more paths than dictionary atoms");
  if (!(r_min > 0.0 && r_min < r_max)) fail("require 0 < r_min < r_max");
  if (!(phi_min < phi_max) || phi_min < -kPi / 2 || phi_max > kPi / 2)
    fail("require -pi/2 <= phi_min < phi_max <= pi/2");
  if (!(ref_distance > 0.0)) fail("ref_distance must be positive");
  if (!(polar.beta > 0.0)) fail("polar.beta must be positive");
  if (!(los.grid_dr > 0.0 && los.grid_dphi > 0.0)) fail("los grid steps must be positive");
  if (los.max_iters < 0) fail("los.max_iters must be nonnegative");
  if (estimator.iterations < 0) fail("estimator.iterations must be nonnegative");
  if (admm.outer_iterations < 1 || admm.inner_steps < 0 || admm.batch_pairs < 1)
    fail("admm iteration counts must be positive");
  if (!(admm.rho_start > 0.0 && admm.rho_end >= admm.rho_start))
    fail("admm rho schedule must be positive and nondecreasing");
  if (!(frame.coherence_time > 0.0 && frame.symbol_time > 0.0)) fail("frame times must be positive");
}

namespace {

// Reads `key` into `out` if present, rejecting keys the section does not know.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError("section '" + name_ + "' must be an object");
  }

  template <typename T>
  Section& get(const char* key, T& out) {
    seen_.insert(key);
    if (auto it = j_.find(key); it != j_.end()) {
      try {
        out = it->template get<T>();
      } catch (const json::exception& e) {
        throw ConfigError(name_ + "." + key + ": " + e.what());
      }
    }
    return *this;
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& at(const char* key) const { return j_.at(key); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("unknown key '" + name_ + "." + it.key() + "'");
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

const json& section_or_empty(const json& root, const char* name) {
  static const json empty = json::object();
  auto it = root.find(name);
  return it == root.end() ? empty : *it;
}

}  // namespace

SystemConfig config_from_json(const json& root) {
  if (!root.is_object()) throw ConfigError("config root must be an object");
  SystemConfig cfg;
  {
    Section s(section_or_empty(root, "system"), "system");
    s.get("num_antennas", cfg.num_antennas)
        .get("pilot_len", cfg.pilot_len)
        .get("distance_rings", cfg.distance_rings)
        .get("wavelength", cfg.wavelength)
        .get("spacing", cfg.spacing)
        .get("pilot_power", cfg.pilot_power)
        .get("noise_var", cfg.noise_var);
    if (s.has("carrier_hz")) {
      const double f = s.at("carrier_hz").get<double>();
      if (!(f > 0.0)) throw ConfigError("system.carrier_hz must be positive");
      cfg.wavelength = 299792458.0 / f;
    }
    if (s.has("snr_db")) cfg.set_snr_db(s.at("snr_db").get<double>());
    s.finish();
  }
  {
    Section s(section_or_empty(root, "channel"), "channel");
    s.get("gain_var_far", cfg.gain_var_far)
        .get("gain_var_near", cfg.gain_var_near)
        .get("prob_active", cfg.prob_active)
        .get("num_far", cfg.num_far)
        .get("num_near", cfg.num_near)
        .get("r_min", cfg.r_min)
        .get("r_max", cfg.r_max)
        .get("phi_min", cfg.phi_min)
        .get("phi_max", cfg.phi_max)
        .get("ref_distance", cfg.ref_distance);
    if (s.has("prob_zero")) cfg.prob_active = 1.0 - s.at("prob_zero").get<double>();
    if (s.has("los_gain")) {
      const auto& g = s.at("los_gain");
      if (g.is_number()) {
        cfg.los_gain = {g.get<double>(), 0.0};
      } else if (g.is_array() && g.size() == 2) {
        cfg.los_gain = {g[0].get<double>(), g[1].get<double>()};
      } else {
        throw ConfigError("channel.los_gain must be a number or [re, im]");
      }
    }
    s.finish();
  }
  {
    Section s(section_or_empty(root, "polar"), "polar");
    s.get("beta", cfg.polar.beta).get("clamp_min", cfg.polar.clamp_min).get("clamp_max", cfg.polar.clamp_max);
    s.finish();
  }
  {
    Section s(section_or_empty(root, "los"), "los");
    s.get("grid_dr", cfg.los.grid_dr)
        .get("grid_dphi", cfg.los.grid_dphi)
        .get("fd_step_r", cfg.los.fd_step_r)
        .get("fd_step_phi", cfg.los.fd_step_phi)
        .get("eta_r", cfg.los.eta_r)
        .get("eta_phi", cfg.los.eta_phi)
        .get("eps_rel", cfg.los.eps_rel)
        .get("max_iters", cfg.los.max_iters);
    s.finish();
  }
  {
    Section s(section_or_empty(root, "estimator"), "estimator");
    s.get("iterations", cfg.estimator.iterations)
        .get("residual_stop", cfg.estimator.residual_stop)
        .get("residual_stop_ratio", cfg.estimator.residual_stop_ratio)
        .get("estimators", cfg.estimator.estimators);
    s.finish();
  }
  {
    Section s(section_or_empty(root, "admm"), "admm");
    s.get("outer_iterations", cfg.admm.outer_iterations)
        .get("inner_steps", cfg.admm.inner_steps)
        .get("batch_pairs", cfg.admm.batch_pairs)
        .get("rho_start", cfg.admm.rho_start)
        .get("rho_end", cfg.admm.rho_end)
        .get("initial_step", cfg.admm.initial_step);
    s.finish();
  }
  {
    Section s(section_or_empty(root, "frame"), "frame");
    s.get("coherence_time", cfg.frame.coherence_time).get("symbol_time", cfg.frame.symbol_time);
    s.finish();
  }
  for (auto it = root.begin(); it != root.end(); ++it) {
    static const std::set<std::string> known{"system", "channel", "polar", "los", "estimator",
                                             "admm", "frame", "sweep"};
    if (!known.count(it.key())) throw ConfigError("unknown section '" + it.key() + "'");
  }
  cfg.validate();
  return cfg;
}

json config_to_json(const SystemConfig& c) {
  json j;
  j["system"] = {{"num_antennas", c.num_antennas}, {"pilot_len", c.pilot_len},
                 {"distance_rings", c.distance_rings}, {"wavelength", c.wavelength},
                 {"spacing", c.element_spacing()}, {"pilot_power", c.pilot_power},
                 {"noise_var", c.noise_var}};
  j["channel"] = {{"gain_var_far", c.gain_var_far}, {"gain_var_near", c.gain_var_near},
                  {"prob_active", c.active_probability()}, {"num_far", c.num_far},
                  {"num_near", c.num_near}, {"r_min", c.r_min}, {"r_max", c.r_max},
                  {"phi_min", c.phi_min}, {"phi_max", c.phi_max},
                  {"los_gain", {c.los_gain.real(), c.los_gain.imag()}},
                  {"ref_distance", c.ref_distance}};
  j["polar"] = {{"beta", c.polar.beta}, {"clamp_min", c.polar.clamp_min}, {"clamp_max", c.polar.clamp_max}};
  j["los"] = {{"grid_dr", c.los.grid_dr}, {"grid_dphi", c.los.grid_dphi},
              {"fd_step_r", c.los.fd_step_r}, {"fd_step_phi", c.los.fd_step_phi},
              {"eta_r", c.los.eta_r}, {"eta_phi", c.los.eta_phi},
              {"eps_rel", c.los.eps_rel}, {"max_iters", c.los.max_iters}};
  j["estimator"] = {{"iterations", c.estimator.iterations},
                    {"residual_stop", c.estimator.residual_stop},
                    {"residual_stop_ratio", c.estimator.residual_stop_ratio},
                    {"estimators", c.estimator.estimators}};
  j["admm"] = {{"outer_iterations", c.admm.outer_iterations}, {"inner_steps", c.admm.inner_steps},
               {"batch_pairs", c.admm.batch_pairs}, {"rho_start", c.admm.rho_start},
               {"rho_end", c.admm.rho_end}, {"initial_step", c.admm.initial_step}};
  j["frame"] = {{"coherence_time", c.frame.coherence_time}, {"symbol_time", c.frame.symbol_time}};
  return j;
}

SystemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

}  // namespace hfce
