#include "hfce/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "hfce/matrix_io.hpp"

namespace hfce {

double nmse(const CVec& est, const CVec& truth) {
  const double t2 = truth.squaredNorm();
  if (!(t2 > 0.0)) throw std::invalid_argument("nmse: true channel is zero");
  if (est.size() != truth.size()) throw std::invalid_argument("nmse: size mismatch");
  return (est - truth).squaredNorm() / t2;
}

double pilot_overhead_factor(const SystemConfig& cfg) {
  return std::max(0.0, 1.0 - cfg.pilot_len * cfg.frame.symbol_time / cfg.frame.coherence_time);
}

double spectral_efficiency(const CVec& est, const CVec& truth, double gamma, const SystemConfig& cfg) {
  if (!(cfg.noise_var > 0.0)) throw std::invalid_argument("spectral_efficiency: noise variance must be positive");
  const double overhead = pilot_overhead_factor(cfg);
  const double e2 = est.squaredNorm();
  if (overhead == 0.0 || e2 == 0.0) return 0.0;
  const double gain = std::norm(est.dot(truth)) / e2;
  return overhead * std::log2(1.0 + gamma * cfg.pilot_power * gain / cfg.noise_var);
}

EstimatorKind parse_estimator(const std::string& name) {
  if (name == "genie_ls") return EstimatorKind::kGenieLs;
  if (name == "bmp_csi") return EstimatorKind::kBmpCsi;
  if (name == "bmp_nocsi") return EstimatorKind::kBmpNoCsi;
  if (name == "hf_omp") return EstimatorKind::kHfOmp;
  throw ConfigError("unknown estimator '" + name + "'");
}

std::string estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kGenieLs: return "genie_ls";
    case EstimatorKind::kBmpCsi: return "bmp_csi";
    case EstimatorKind::kBmpNoCsi: return "bmp_nocsi";
    case EstimatorKind::kHfOmp: return "hf_omp";
  }
  return "unknown";
}

std::vector<EstimatorKind> parse_estimators(const std::vector<std::string>& names) {
  std::vector<EstimatorKind> out;
  for (const auto& n : names) out.push_back(parse_estimator(n));
  if (out.empty()) throw ConfigError("estimator list is empty");
  return out;
}

std::vector<EstimatorKind> parse_estimator_list(const std::string& csv) {
  std::vector<std::string> names;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) names.push_back(item);
  return parse_estimators(names);
}

CMat make_pilot(const SystemConfig& cfg, const PilotSource& source) {
  if (source.kind.rfind("file:", 0) == 0) {
    CMat x = read_matrix(source.kind.substr(5));
    if (x.rows() != cfg.pilot_len || x.cols() != cfg.num_antennas)
      throw ConfigError("pilot file shape " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                        " does not match M x N");
    return x;
  }
  Rng rng(derive_seed(source.seed, static_cast<std::uint64_t>(cfg.pilot_len),
                      static_cast<std::uint64_t>(cfg.num_antennas) * 64 + cfg.distance_rings));
  if (source.kind == "admm") {
    const Dictionary dict = build_dictionary(cfg);
    return admm_pilot_design(dict.transform(), cfg.pilot_len, cfg.pilot_power, cfg.admm, rng).pilot;
  }
  PilotKind kind;
  try {
    kind = parse_pilot_kind(source.kind);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (kind == PilotKind::kGaussian) throw ConfigError("gaussian is not a pilot matrix");
  return baseline_pilot(kind, cfg, rng);
}

CMat PilotCache::get(const SystemConfig& cfg, const PilotSource& source) {
  const auto key = std::make_tuple(source.kind, cfg.pilot_len, cfg.num_antennas, cfg.distance_rings, source.seed);
  std::lock_guard<std::mutex> lock(mutex_);
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  std::string file;
  if (!directory_.empty() && source.kind.rfind("file:", 0) != 0) {
    std::ostringstream name;
    name << source.kind << "_M" << cfg.pilot_len << "_N" << cfg.num_antennas << "_Q" << cfg.distance_rings << "_s"
         << source.seed << ".bin";
    file = (std::filesystem::path(directory_) / name.str()).string();
    if (std::filesystem::exists(file)) {
      CMat x = read_matrix(file);
      cache_.emplace(key, x);
      return x;
    }
  }
  CMat x = make_pilot(cfg, source);
  if (!file.empty()) {
    std::filesystem::create_directories(directory_);
    write_matrix(file, x);
  }
  cache_.emplace(key, x);
  return x;
}

namespace {

constexpr std::uint64_t kSharedGeometry = 0xfeedfacecafebeefULL;

}  // namespace

TrialOutcome run_trial(const SystemConfig& cfg, const Dictionary& dict, const CMat& pilot,
                       const LosGridBank& bank, const PointOptions& opts, int trial) {
  const std::size_t k = opts.estimators.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  TrialOutcome out{std::vector<double>(k, nan), std::vector<double>(k, nan)};

  Rng rng(derive_seed(opts.seed, opts.point_index, static_cast<std::uint64_t>(trial)));
  ChannelGeometry geometry;
  if (opts.geometry_antennas > 0) {
    SystemConfig gcfg = cfg;
    gcfg.num_antennas = opts.geometry_antennas;
    Rng grng(derive_seed(opts.seed, kSharedGeometry, static_cast<std::uint64_t>(trial)));
    geometry = draw_geometry(gcfg, grng);
  } else {
    geometry = draw_geometry(cfg, rng);
  }
  const HybridChannel truth = realize_channel(cfg, dict, geometry);
  const CVec y = receive_pilots(truth.dense, pilot, cfg.noise_var, rng);
  const CMat transform = dict.transform();
  const CMat psi = pilot * transform;

  bool los_done = false;
  LosEstimate los;
  auto stage_one = [&]() -> const LosEstimate& {
    if (!los_done) {
      los = estimate_los(y, pilot, bank, cfg);
      los_done = true;
    }
    return los;
  };
  const GreedyOptions greedy = GreedyOptions::from_config(cfg);

  for (std::size_t e = 0; e < k; ++e) {
    try {
      CVec est;
      switch (opts.estimators[e]) {
        case EstimatorKind::kGenieLs:
          est = genie_ls(y, pilot, dict, truth, cfg);
          break;
        case EstimatorKind::kBmpCsi: {
          const LosEstimate& s1 = stage_one();
          const BmpPriors priors = BmpPriors::from_config(cfg);
          const ScatterEstimate s2 =
              bmp_with_prior(s1.residual, psi, priors, atom_distances(dict, s1.r_hat), dict.num_angular, greedy);
          est = s1.h_los_hat + transform * s2.sparse;
          break;
        }
        case EstimatorKind::kBmpNoCsi: {
          const LosEstimate& s1 = stage_one();
          const ScatterEstimate s2 = bmp_without_prior(s1.residual, psi, cfg.noise_var, dict.num_angular, greedy);
          est = s1.h_los_hat + transform * s2.sparse;
          break;
        }
        case EstimatorKind::kHfOmp: {
          const int far = std::min<int>(cfg.num_far + 1, static_cast<int>(pilot.rows()));
          const int near = std::min<int>(cfg.num_near, static_cast<int>(pilot.rows()) - far);
          const ScatterEstimate s = hf_omp_baseline(y, psi, dict.num_angular, far, near);
          est = transform * s.sparse;
          break;
        }
      }
      const double v = nmse(est, truth.dense);
      if (!std::isfinite(v)) continue;
      out.nmse[e] = v;
      out.se[e] = spectral_efficiency(est, truth.dense, opts.data_power_ratio, cfg);
    } catch (const std::exception&) {
      // counted as a failure of this estimator
    }
  }
  return out;
}

std::vector<EstimatorStats> run_point(const SystemConfig& cfg, const CMat& pilot, const PointOptions& opts) {
  if (opts.trials < 1) throw ConfigError("trials must be at least 1");
  if (pilot.rows() != cfg.pilot_len || pilot.cols() != cfg.num_antennas)
    throw std::invalid_argument("run_point: pilot shape does not match config");
  const Dictionary dict = build_dictionary(cfg);
  const LosGridBank bank(pilot, make_los_grid(cfg), cfg);

  std::vector<TrialOutcome> outcomes(opts.trials);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int t = next++; t < opts.trials; t = next++) {
      try {
        outcomes[t] = run_trial(cfg, dict, pilot, bank, opts, t);
      } catch (const std::exception&) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        outcomes[t] = {std::vector<double>(opts.estimators.size(), nan),
                       std::vector<double>(opts.estimators.size(), nan)};
      }
    }
  };
  const int threads = std::clamp(opts.threads, 1, opts.trials);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::vector<EstimatorStats> stats;
  for (std::size_t e = 0; e < opts.estimators.size(); ++e) {
    EstimatorStats s;
    s.kind = opts.estimators[e];
    s.trials = opts.trials;
    double sum = 0.0;
    double se_sum = 0.0;
    int ok = 0;
    for (const auto& o : outcomes) {
      if (std::isnan(o.nmse[e])) {
        ++s.failures;
        continue;
      }
      sum += o.nmse[e];
      se_sum += o.se[e];
      ++ok;
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    s.nmse_mean = ok ? sum / ok : nan;
    s.se_mean = ok ? se_sum / ok : nan;
    double ss = 0.0;
    for (const auto& o : outcomes)
      if (!std::isnan(o.nmse[e])) ss += (o.nmse[e] - s.nmse_mean) * (o.nmse[e] - s.nmse_mean);
    s.nmse_stderr = ok > 1 ? std::sqrt(ss / (ok - 1) / ok) : 0.0;
    stats.push_back(s);
  }
  return stats;
}

void SweepSpec::validate() const {
  static const std::vector<std::string> params{"snr_db", "pilot_len", "num_antennas", "near_ratio",
                                               "data_power_ratio"};
  if (std::find(params.begin(), params.end(), param) == params.end())
    throw ConfigError("unknown sweep parameter '" + param + "'");
  if (values.empty()) throw ConfigError("sweep values are empty");
  if (!std::is_sorted(values.begin(), values.end())) throw ConfigError("sweep values must be sorted");
  if (trials < 1) throw ConfigError("sweep trials must be at least 1");
  if (estimators.empty()) throw ConfigError("sweep estimator list is empty");
  auto ratio_ok = [](double g) { return g > 0.0 && g <= 1.0; };
  if (!ratio_ok(data_power_ratio)) throw ConfigError("data_power_ratio must be in (0, 1]");
  if (param == "data_power_ratio")
    for (double v : values)
      if (!ratio_ok(v)) throw ConfigError("data_power_ratio values must be in (0, 1]");
  if (param == "near_ratio")
    for (double v : values)
      if (v < 0.0 || v > 1.0) throw ConfigError("near_ratio values must be in [0, 1]");
  for (double v : values) apply_sweep_value(base, param, v);
}

SweepSpec sweep_from_json(const nlohmann::json& root, const SystemConfig& base) {
  SweepSpec spec;
  spec.base = base;
  spec.estimators = parse_estimators(base.estimator.estimators);
  auto it = root.find("sweep");
  if (it == root.end()) return spec;
  const auto& s = *it;
  if (!s.is_object()) throw ConfigError("section 'sweep' must be an object");
  static const std::vector<std::string> known{"param",  "values", "trials",    "estimators",
                                              "seed",   "data_power_ratio", "pilot", "pilot_seed",
                                              "pilot_cache_dir"};
  for (auto k = s.begin(); k != s.end(); ++k)
    if (std::find(known.begin(), known.end(), k.key()) == known.end())
      throw ConfigError("unknown key 'sweep." + k.key() + "'");
  try {
    if (s.contains("param")) spec.param = s["param"].get<std::string>();
    if (s.contains("values")) spec.values = s["values"].get<std::vector<double>>();
    if (s.contains("trials")) spec.trials = s["trials"].get<int>();
    if (s.contains("estimators")) spec.estimators = parse_estimators(s["estimators"].get<std::vector<std::string>>());
    if (s.contains("seed")) spec.seed = s["seed"].get<std::uint64_t>();
    if (s.contains("data_power_ratio")) spec.data_power_ratio = s["data_power_ratio"].get<double>();
    if (s.contains("pilot")) spec.pilot.kind = s["pilot"].get<std::string>();
    if (s.contains("pilot_seed")) spec.pilot.seed = s["pilot_seed"].get<std::uint64_t>();
    if (s.contains("pilot_cache_dir")) spec.pilot_cache_dir = s["pilot_cache_dir"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("sweep: ") + e.what());
  }
  return spec;
}

SystemConfig apply_sweep_value(const SystemConfig& base, const std::string& param, double value) {
  SystemConfig cfg = base;
  if (param == "snr_db") {
    cfg.set_snr_db(value);
  } else if (param == "pilot_len") {
    cfg.pilot_len = static_cast<int>(std::lround(value));
  } else if (param == "num_antennas") {
    cfg.num_antennas = static_cast<int>(std::lround(value));
  } else if (param == "near_ratio") {
    const int total = base.num_paths();
    cfg.num_near = static_cast<int>(std::lround(value * total));
    cfg.num_far = total - cfg.num_near;
  } else if (param != "data_power_ratio") {
    throw ConfigError("unknown sweep parameter '" + param + "'");
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(param + "=" + std::to_string(value) + ": " + e.what());
  }
  return cfg;
}

std::string config_hash(const SystemConfig& cfg) {
  const std::string text = config_to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

SweepResult run_sweep(const SweepSpec& spec, int threads, PilotCache* cache) {
  spec.validate();
  PilotCache local(spec.pilot_cache_dir);
  PilotCache& pilots = cache ? *cache : local;
  SweepResult result;
  result.seed = spec.seed;
  result.config_hash = config_hash(spec.base);

  int geometry_antennas = 0;
  if (spec.param == "num_antennas") geometry_antennas = static_cast<int>(std::lround(spec.values.back()));

  for (std::size_t i = 0; i < spec.values.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const double v = spec.values[i];
    const SystemConfig cfg = apply_sweep_value(spec.base, spec.param, v);
    const CMat pilot = pilots.get(cfg, spec.pilot);
    PointOptions opts;
    opts.estimators = spec.estimators;
    opts.trials = spec.trials;
    opts.seed = spec.seed;
    opts.point_index = i;
    opts.threads = threads;
    opts.data_power_ratio = spec.param == "data_power_ratio" ? v : spec.data_power_ratio;
    opts.geometry_antennas = geometry_antennas;
    for (const auto& s : run_point(cfg, pilot, opts)) {
      SweepRow row;
      row.sweep_param = spec.param;
      row.value = v;
      row.estimator = estimator_name(s.kind);
      row.nmse_mean = s.nmse_mean;
      row.nmse_db = 10.0 * std::log10(s.nmse_mean);
      row.nmse_stderr = s.nmse_stderr;
      row.se_mean = s.se_mean;
      row.trials = s.trials;
      row.failures = s.failures;
      row.seed = spec.seed;
      result.rows.push_back(row);
    }
    result.wall_seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return result;
}

std::vector<CoherenceRow> coherence_report(const SystemConfig& cfg, int trials, std::uint64_t seed, bool admm) {
  if (trials < 1) throw ConfigError("trials must be at least 1");
  const Dictionary dict = build_dictionary(cfg);
  const CMat transform = dict.transform();
  std::vector<CoherenceRow> rows;
  const PilotKind kinds[] = {PilotKind::kRandomBinary, PilotKind::kUnimodular, PilotKind::kZadoffChu,
                             PilotKind::kGaussian};
  for (PilotKind kind : kinds) {
    const int n = kind == PilotKind::kZadoffChu ? 1 : trials;
    std::vector<double> values;
    for (int t = 0; t < n; ++t) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(kind) + 1, static_cast<std::uint64_t>(t)));
      const CMat x = baseline_pilot(kind, cfg, rng);
      values.push_back(mutual_coherence(kind == PilotKind::kGaussian ? x : CMat(x * transform)));
    }
    CoherenceRow row;
    row.pilot = pilot_kind_name(kind);
    row.trials = n;
    double sum = 0.0;
    for (double v : values) sum += v;
    row.mean = sum / n;
    double ss = 0.0;
    for (double v : values) ss += (v - row.mean) * (v - row.mean);
    row.stderr_ = n > 1 ? std::sqrt(ss / (n - 1) / n) : 0.0;
    row.min = *std::min_element(values.begin(), values.end());
    row.max = *std::max_element(values.begin(), values.end());
    rows.push_back(row);
  }
  if (admm) {
    Rng rng(derive_seed(seed, 0, 0));
    const AdmmResult r = admm_pilot_design(transform, cfg.pilot_len, cfg.pilot_power, cfg.admm, rng);
    rows.push_back({"admm", r.best_coherence, 0.0, r.best_coherence, r.best_coherence, 1});
  }
  return rows;
}

}  // namespace hfce
