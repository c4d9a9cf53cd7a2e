#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "hfce/harness.hpp"

namespace hfce {

namespace {

constexpr const char* kHeader = "sweep_param,value,estimator,nmse_mean,nmse_db,nmse_stderr,se_mean,trials,failures,seed";

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json num_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

std::string results_csv(const SweepResult& result) {
  std::ostringstream out;
  out << kHeader << '\n';
  for (const auto& r : result.rows)
    out << r.sweep_param << ',' << fmt(r.value) << ',' << r.estimator << ',' << fmt(r.nmse_mean) << ','
        << fmt(r.nmse_db) << ',' << fmt(r.nmse_stderr) << ',' << fmt(r.se_mean) << ',' << r.trials << ','
        << r.failures << ',' << r.seed << '\n';
  return out.str();
}

nlohmann::json results_json(const SweepResult& result) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : result.rows)
    rows.push_back({{"sweep_param", r.sweep_param},
                    {"value", r.value},
                    {"estimator", r.estimator},
                    {"nmse_mean", num_or_null(r.nmse_mean)},
                    {"nmse_db", num_or_null(r.nmse_db)},
                    {"nmse_stderr", num_or_null(r.nmse_stderr)},
                    {"se_mean", num_or_null(r.se_mean)},
                    {"trials", r.trials},
                    {"failures", r.failures},
                    {"seed", r.seed}});
  return {{"provenance",
           {{"config_hash", result.config_hash},
            {"seed", result.seed},
            {"version", result.version},
            {"wall_seconds", result.wall_seconds}}},
          {"rows", rows}};
}

void write_results(const SweepResult& result, const std::string& path, const std::string& format) {
  std::string text;
  if (format == "csv") {
    text = results_csv(result);
  } else if (format == "json") {
    text = results_json(result).dump(2) + "\n";
  } else {
    throw ConfigError("unknown output format '" + format + "'");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write results to '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

std::vector<SweepRow> read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open results file '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != kHeader) throw std::runtime_error("bad results header in '" + path + "'");
  std::vector<SweepRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split(line);
    if (c.size() != 10) throw std::runtime_error("malformed results row in '" + path + "'");
    SweepRow r;
    r.sweep_param = c[0];
    r.value = std::stod(c[1]);
    r.estimator = c[2];
    r.nmse_mean = std::stod(c[3]);
    r.nmse_db = std::stod(c[4]);
    r.nmse_stderr = std::stod(c[5]);
    r.se_mean = std::stod(c[6]);
    r.trials = std::stoi(c[7]);
    r.failures = std::stoi(c[8]);
    r.seed = std::stoull(c[9]);
    rows.push_back(r);
  }
  return rows;
}

std::string coherence_csv(const std::vector<CoherenceRow>& rows) {
  std::ostringstream out;
  out << "pilot,coherence_mean,coherence_stderr,coherence_min,coherence_max,trials\n";
  for (const auto& r : rows)
    out << r.pilot << ',' << fmt(r.mean) << ',' << fmt(r.stderr_) << ',' << fmt(r.min) << ',' << fmt(r.max) << ','
        << r.trials << '\n';
  return out.str();
}

}  // namespace hfce
