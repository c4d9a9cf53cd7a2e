#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "hfce/channel.hpp"
#include "hfce/config.hpp"
#include "hfce/los_estimator.hpp"
#include "hfce/pilot_design.hpp"
#include "hfce/scattering.hpp"

namespace hfce {

inline constexpr const char* kVersion = "hfce 0.1.0";

/// ||est - truth||^2 / ||truth||^2. Throws std::invalid_argument on a zero truth.
double nmse(const CVec& est, const CVec& truth);

/// Fraction of the coherence interval left for data, clipped at 0.
double pilot_overhead_factor(const SystemConfig& cfg);

/// Overhead-scaled rate with matched-filter beamforming on the estimate:
/// (1 - M T_sym / T_coh) log2(1 + gamma P_x |est^H h|^2 / (||est||^2 sigma_w^2)).
double spectral_efficiency(const CVec& est, const CVec& truth, double gamma, const SystemConfig& cfg);

enum class EstimatorKind { kGenieLs, kBmpCsi, kBmpNoCsi, kHfOmp };

EstimatorKind parse_estimator(const std::string& name);
std::string estimator_name(EstimatorKind kind);
std::vector<EstimatorKind> parse_estimators(const std::vector<std::string>& names);
/// Comma-separated list, e.g. "genie_ls,bmp_csi".
std::vector<EstimatorKind> parse_estimator_list(const std::string& csv);

/// Which pilot the estimators share: "admm", a baseline kind name, or "file:PATH".
struct PilotSource {
  std::string kind = "admm";
  std::uint64_t seed = 1;
};

/// Designed/baseline pilots keyed by (source, M, N, Q, seed). Thread-safe.
class PilotCache {
 public:
  /// With a nonempty directory, designed pilots are also persisted there.
  explicit PilotCache(std::string directory = {}) : directory_(std::move(directory)) {}

  CMat get(const SystemConfig& cfg, const PilotSource& source);

 private:
  std::string directory_;
  std::mutex mutex_;
  std::map<std::tuple<std::string, int, int, int, std::uint64_t>, CMat> cache_;
};

CMat make_pilot(const SystemConfig& cfg, const PilotSource& source);

struct EstimatorStats {
  EstimatorKind kind = EstimatorKind::kGenieLs;
  double nmse_mean = 0.0;
  double nmse_stderr = 0.0;
  double se_mean = 0.0;
  int trials = 0;
  int failures = 0;
};

struct PointOptions {
  std::vector<EstimatorKind> estimators{EstimatorKind::kGenieLs, EstimatorKind::kBmpCsi, EstimatorKind::kBmpNoCsi,
                                        EstimatorKind::kHfOmp};
  int trials = 200;
  std::uint64_t seed = 1;
  std::uint64_t point_index = 0;
  int threads = 1;
  double data_power_ratio = 1.0;
  // Draw scatterer geometry with this antenna count (0: the config's own) from a
  // point-independent stream, so geometry is shared across points.
  int geometry_antennas = 0;
};

/// Per-trial outcome of every estimator (NaN marks a failed estimator).
struct TrialOutcome {
  std::vector<double> nmse;
  std::vector<double> se;
};

/// One Monte Carlo trial: synthesize, receive, estimate.
TrialOutcome run_trial(const SystemConfig& cfg, const Dictionary& dict, const CMat& pilot,
                       const LosGridBank& bank, const PointOptions& opts, int trial);

std::vector<EstimatorStats> run_point(const SystemConfig& cfg, const CMat& pilot, const PointOptions& opts);

struct SweepSpec {
  std::string param = "snr_db";   // snr_db | pilot_len | num_antennas | near_ratio | data_power_ratio
  std::vector<double> values{10.0};
  int trials = 200;
  std::vector<EstimatorKind> estimators{EstimatorKind::kGenieLs, EstimatorKind::kBmpCsi, EstimatorKind::kBmpNoCsi,
                                        EstimatorKind::kHfOmp};
  std::uint64_t seed = 1;
  double data_power_ratio = 1.0;
  PilotSource pilot;
  std::string pilot_cache_dir;
  SystemConfig base;

  void validate() const;
};

/// Reads the optional "sweep" section of a config document.
SweepSpec sweep_from_json(const nlohmann::json& root, const SystemConfig& base);

/// Config of one sweep point.
SystemConfig apply_sweep_value(const SystemConfig& base, const std::string& param, double value);

struct SweepRow {
  std::string sweep_param;
  double value = 0.0;
  std::string estimator;
  double nmse_mean = 0.0;
  double nmse_db = 0.0;
  double nmse_stderr = 0.0;
  double se_mean = 0.0;
  int trials = 0;
  int failures = 0;
  std::uint64_t seed = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<double> wall_seconds;  // per point
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version = kVersion;
};

SweepResult run_sweep(const SweepSpec& spec, int threads, PilotCache* cache = nullptr);

/// FNV-1a of the canonical config JSON, as 16 hex digits.
std::string config_hash(const SystemConfig& cfg);

void write_results(const SweepResult& result, const std::string& path, const std::string& format);
std::string results_csv(const SweepResult& result);
nlohmann::json results_json(const SweepResult& result);
std::vector<SweepRow> read_results_csv(const std::string& path);

struct CoherenceRow {
  std::string pilot;
  double mean = 0.0;
  double stderr_ = 0.0;
  double min = 0.0;
  double max = 0.0;
  int trials = 0;
};

/// Mean mutual coherence of baseline pilots composed with the dictionary (the
/// Gaussian kind is measured as Psi directly), plus one ADMM design when `admm` is set.
std::vector<CoherenceRow> coherence_report(const SystemConfig& cfg, int trials, std::uint64_t seed, bool admm);
std::string coherence_csv(const std::vector<CoherenceRow>& rows);

}  // namespace hfce
