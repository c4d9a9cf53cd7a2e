#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>

#include "hfce/harness.hpp"
#include "hfce/matrix_io.hpp"

using namespace hfce;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::string out;
  std::string format = "csv";
  std::string estimators;
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
};

nlohmann::json read_json(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

void check_format(const std::string& f) {
  if (f != "csv" && f != "json") throw ConfigError("--format must be csv or json");
}

void print_table(const std::vector<SweepRow>& rows) {
  std::printf("%-10s %12s %10s %12s %10s %8s %8s\n", "estimator", "nmse", "nmse_db", "stderr", "se", "trials",
              "failed");
  for (const auto& r : rows)
    std::printf("%-10s %12.5g %10.3f %12.3g %10.4f %8d %8d\n", r.estimator.c_str(), r.nmse_mean, r.nmse_db,
                r.nmse_stderr, r.se_mean, r.trials, r.failures);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid-field channel estimation and pilot design toolkit"};
  app.require_subcommand(1);
  Common c;

  auto add_common = [&c](CLI::App* sub) {
    sub->add_option("--config", c.config, "JSON config file");
    sub->add_option("--seed", c.seed, "Master seed");
    sub->add_option("--out", c.out, "Output path");
    sub->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
  };

  auto* design = app.add_subcommand("design-pilot", "Design a low-coherence pilot with ADMM");
  add_common(design);
  std::optional<int> opt_m, opt_n, opt_q, opt_iters;
  std::optional<double> opt_rho0, opt_rho1;
  design->add_option("-M,--pilot-len", opt_m, "Pilot length");
  design->add_option("-N,--antennas", opt_n, "Number of antennas");
  design->add_option("-Q,--rings", opt_q, "Distance rings");
  design->add_option("--iterations", opt_iters, "Outer ADMM iterations");
  design->add_option("--rho-start", opt_rho0, "First penalty value");
  design->add_option("--rho-end", opt_rho1, "Last penalty value");

  auto* simulate = app.add_subcommand("simulate", "Run one Monte Carlo point and print a table");
  add_common(simulate);
  simulate->add_option("--trials", c.trials, "Trials");
  simulate->add_option("--estimators", c.estimators, "Comma-separated estimators");
  simulate->add_option("--format", c.format, "csv or json (with --out)");
  std::optional<double> opt_snr;
  std::string pilot_kind = "admm";
  simulate->add_option("--snr-db", opt_snr, "Pilot SNR in dB");
  simulate->add_option("--pilot", pilot_kind, "admm, random_binary, unimodular_random_phase, zadoff_chu or file:PATH");

  auto* sweep = app.add_subcommand("sweep", "Run the sweep described by the config file");
  add_common(sweep);
  sweep->add_option("--trials", c.trials, "Trials per point");
  sweep->add_option("--estimators", c.estimators, "Comma-separated estimators");
  sweep->add_option("--format", c.format, "csv or json");

  auto* report = app.add_subcommand("coherence-report", "Mutual coherence of baseline and designed pilots");
  add_common(report);
  report->add_option("--trials", c.trials, "Random pilots per kind");
  report->add_option("--format", c.format, "csv or json");
  bool no_admm = false;
  report->add_flag("--no-admm", no_admm, "Skip the ADMM design");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const nlohmann::json root = read_json(c.config);
    SystemConfig cfg = config_from_json(root);
    check_format(c.format);

    if (*design) {
      if (opt_m) cfg.pilot_len = *opt_m;
      if (opt_n) cfg.num_antennas = *opt_n;
      if (opt_q) cfg.distance_rings = *opt_q;
      if (opt_iters) cfg.admm.outer_iterations = *opt_iters;
      if (opt_rho0) cfg.admm.rho_start = *opt_rho0;
      if (opt_rho1) cfg.admm.rho_end = *opt_rho1;
      cfg.validate();
      if (c.out.empty()) throw ConfigError("design-pilot requires --out");
      const std::uint64_t seed = c.seed.value_or(1);
      const Dictionary dict = build_dictionary(cfg);
      Rng rng(seed);
      const AdmmResult r = admm_pilot_design(dict.transform(), cfg.pilot_len, cfg.pilot_power, cfg.admm, rng);
      save_pilot(c.out, r, {{"seed", seed}, {"config", config_to_json(cfg)}, {"version", kVersion}});
      std::printf("mutual coherence %.4f (iteration %d of %d), final residual %.4g\n", r.best_coherence,
                  r.best_iteration, cfg.admm.outer_iterations,
                  r.history.empty() ? 0.0 : r.history.back().residual);
      std::printf("wrote %s and %s\n", c.out.c_str(), sidecar_path(c.out).c_str());
      return 0;
    }

    if (*simulate) {
      if (opt_snr) cfg.set_snr_db(*opt_snr);
      SweepSpec spec;
      spec.base = cfg;
      spec.param = "snr_db";
      spec.values = {cfg.snr_db()};
      spec.trials = c.trials.value_or(200);
      spec.seed = c.seed.value_or(1);
      spec.estimators = c.estimators.empty() ? parse_estimators(cfg.estimator.estimators)
                                             : parse_estimator_list(c.estimators);
      spec.pilot.kind = pilot_kind;
      spec.pilot.seed = spec.seed;
      const SweepResult res = run_sweep(spec, c.threads);
      print_table(res.rows);
      if (!c.out.empty()) write_results(res, c.out, c.format);
      return 0;
    }

    if (*sweep) {
      SweepSpec spec = sweep_from_json(root, cfg);
      if (c.trials) spec.trials = *c.trials;
      if (c.seed) spec.seed = *c.seed;
      if (!c.estimators.empty()) spec.estimators = parse_estimator_list(c.estimators);
      if (c.out.empty()) throw ConfigError("sweep requires --out");
      const SweepResult res = run_sweep(spec, c.threads);
      write_results(res, c.out, c.format);
      std::printf("wrote %zu rows to %s\n", res.rows.size(), c.out.c_str());
      return 0;
    }

    if (*report) {
      const auto rows = coherence_report(cfg, c.trials.value_or(100), c.seed.value_or(1), !no_admm);
      if (c.format == "csv") {
        emit(coherence_csv(rows), c.out);
      } else {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& r : rows)
          j.push_back({{"pilot", r.pilot}, {"coherence_mean", r.mean}, {"coherence_stderr", r.stderr_},
                       {"coherence_min", r.min}, {"coherence_max", r.max}, {"trials", r.trials}});
        emit(j.dump(2) + "\n", c.out);
      }
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
