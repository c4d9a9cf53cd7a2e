#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hfce/harness.hpp"
#include "hfce/matrix_io.hpp"

using namespace hfce;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "hfce_test_harness";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

CMat unimodular(const SystemConfig& cfg, std::uint64_t seed = 7) {
  return make_pilot(cfg, PilotSource{"unimodular", seed});
}

SweepSpec small_sweep() {
  SweepSpec spec;
  spec.param = "snr_db";
  spec.values = {0.0, 10.0};
  spec.trials = 8;
  spec.pilot.kind = "unimodular";
  return spec;
}

}  // namespace

TEST_CASE("nmse") {
  CVec t(2);
  t << cplx(1, 0), cplx(0, 1);
  CHECK(nmse(t, t) == 0.0);
  CHECK(nmse(CVec::Zero(2), t) == doctest::Approx(1.0));
  CHECK(nmse(CVec(2.0 * t), t) == doctest::Approx(1.0));
  CHECK_THROWS(nmse(t, CVec::Zero(2)));
}

TEST_CASE("spectral efficiency") {
  SystemConfig cfg;
  CHECK(pilot_overhead_factor(cfg) == doctest::Approx(1.0 - 40 * 4.17e-6 / 0.5e-3));
  CHECK(pilot_overhead_factor(cfg) == doctest::Approx(0.6664));

  Rng rng(1);
  CVec h(cfg.num_antennas);
  for (Eigen::Index i = 0; i < h.size(); ++i) h[i] = rng.complex_normal(1.0);
  const double perfect = spectral_efficiency(h, h, 1.0, cfg);
  CHECK(perfect == doctest::Approx(0.6664 * std::log2(1.0 + h.squaredNorm() / cfg.noise_var)).epsilon(1e-4));

  CVec orth = CVec::Zero(cfg.num_antennas);
  orth[0] = -std::conj(h[1]);
  orth[1] = std::conj(h[0]);
  CHECK(spectral_efficiency(orth, h, 1.0, cfg) == doctest::Approx(0.0).epsilon(1e-12));

  for (int k = 0; k < 20; ++k) {
    CVec est = h;
    for (Eigen::Index i = 0; i < est.size(); ++i) est[i] += rng.complex_normal(0.5);
    CHECK(spectral_efficiency(est, h, 1.0, cfg) <= perfect + 1e-12);
  }
  CHECK(spectral_efficiency(CVec(cplx(0, 3) * h), h, 1.0, cfg) == doctest::Approx(perfect));

  SystemConfig long_pilot = cfg;
  long_pilot.frame.coherence_time = 40 * 4.17e-6;
  CHECK(spectral_efficiency(h, h, 1.0, long_pilot) == 0.0);
  SystemConfig silent = cfg;
  silent.noise_var = 0.0;
  CHECK_THROWS(spectral_efficiency(h, h, 1.0, silent));
}

TEST_CASE("estimator names") {
  for (auto k : {EstimatorKind::kGenieLs, EstimatorKind::kBmpCsi, EstimatorKind::kBmpNoCsi, EstimatorKind::kHfOmp})
    CHECK(parse_estimator(estimator_name(k)) == k);
  CHECK(parse_estimator_list("bmp_csi,hf_omp").size() == 2);
  CHECK_THROWS_AS(parse_estimator("lasso"), ConfigError);
  CHECK_THROWS_AS(parse_estimator_list(""), ConfigError);
}

TEST_CASE("run_point is deterministic across thread counts") {
  SystemConfig cfg;
  const CMat x = unimodular(cfg);
  PointOptions opts;
  opts.trials = 12;
  opts.seed = 42;
  opts.threads = 1;
  const auto a = run_point(cfg, x, opts);
  opts.threads = 4;
  const auto b = run_point(cfg, x, opts);
  REQUIRE(a.size() == 4);
  for (std::size_t e = 0; e < a.size(); ++e) {
    CHECK(a[e].nmse_mean == b[e].nmse_mean);
    CHECK(a[e].nmse_stderr == b[e].nmse_stderr);
    CHECK(a[e].se_mean == b[e].se_mean);
    CHECK(a[e].trials == 12);
    CHECK(a[e].failures == 0);
  }
  opts.seed = 43;
  const auto c = run_point(cfg, x, opts);
  CHECK(c[1].nmse_mean != a[1].nmse_mean);
}

TEST_CASE("genie LS bounds the practical estimators") {
  SystemConfig cfg;
  cfg.set_snr_db(10.0);
  const CMat x = unimodular(cfg);
  PointOptions opts;
  opts.trials = 200;
  opts.threads = 4;
  const auto s = run_point(cfg, x, opts);
  for (std::size_t e = 1; e < s.size(); ++e) CHECK(s[0].nmse_mean <= s[e].nmse_mean);
}

TEST_CASE("BMP with CSI is near exact on a noise-free LoS-only channel") {
  SystemConfig cfg;
  cfg.num_far = cfg.num_near = 0;
  cfg.estimator.iterations = 0;
  cfg.los.eps_rel = 1e-12;
  cfg.set_snr_db(200.0);
  const CMat x = unimodular(cfg);
  PointOptions opts;
  opts.estimators = {EstimatorKind::kBmpCsi, EstimatorKind::kGenieLs};
  opts.trials = 20;
  const auto s = run_point(cfg, x, opts);
  CHECK(s[0].failures == 0);
  CHECK(s[0].nmse_mean < 1e-6);
  CHECK(s[1].nmse_mean < 1e-12);
}

TEST_CASE("sweep points reproduce run_point") {
  SweepSpec spec = small_sweep();
  const SweepResult r = run_sweep(spec, 2);
  REQUIRE(r.rows.size() == 2 * 4);
  const SystemConfig cfg = apply_sweep_value(spec.base, "snr_db", 10.0);
  PointOptions opts;
  opts.trials = spec.trials;
  opts.seed = spec.seed;
  opts.point_index = 1;
  const auto s = run_point(cfg, make_pilot(cfg, spec.pilot), opts);
  for (std::size_t e = 0; e < 4; ++e) {
    const SweepRow& row = r.rows[4 + e];
    CHECK(row.value == 10.0);
    CHECK(row.estimator == estimator_name(s[e].kind));
    CHECK(row.nmse_mean == s[e].nmse_mean);
    CHECK(row.nmse_db == doctest::Approx(10.0 * std::log10(row.nmse_mean)));
    CHECK(row.trials == spec.trials);
    CHECK(row.failures == 0);
  }
}

TEST_CASE("near-ratio sweep endpoints") {
  SystemConfig base;
  base.num_far = 3;
  base.num_near = 1;
  const SystemConfig all_far = apply_sweep_value(base, "near_ratio", 0.0);
  CHECK(all_far.num_far == 4);
  CHECK(all_far.num_near == 0);
  const SystemConfig all_near = apply_sweep_value(base, "near_ratio", 1.0);
  CHECK(all_near.num_far == 0);
  CHECK(all_near.num_near == 4);
  CHECK(apply_sweep_value(base, "near_ratio", 0.5).num_near == 2);
  CHECK_THROWS_AS(apply_sweep_value(base, "bandwidth", 1.0), ConfigError);
  CHECK_THROWS_AS(apply_sweep_value(base, "pilot_len", 0.0), ConfigError);
}

TEST_CASE("results files") {
  SweepSpec spec = small_sweep();
  spec.estimators = {EstimatorKind::kGenieLs, EstimatorKind::kBmpNoCsi};
  const SweepResult r = run_sweep(spec, 1);
  const fs::path csv = scratch("r.csv");
  write_results(r, csv.string(), "csv");

  const std::string text = slurp(csv);
  CHECK(text.rfind("sweep_param,value,estimator,nmse_mean,nmse_db,nmse_stderr,se_mean,trials,failures,seed\n", 0) ==
        0);
  CHECK(text.find("sweep_param", 1) == std::string::npos);

  const auto back = read_results_csv(csv.string());
  REQUIRE(back.size() == r.rows.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].sweep_param == r.rows[i].sweep_param);
    CHECK(back[i].value == r.rows[i].value);
    CHECK(back[i].estimator == r.rows[i].estimator);
    CHECK(back[i].nmse_mean == r.rows[i].nmse_mean);
    CHECK(back[i].nmse_db == r.rows[i].nmse_db);
    CHECK(back[i].nmse_stderr == r.rows[i].nmse_stderr);
    CHECK(back[i].se_mean == r.rows[i].se_mean);
    CHECK(back[i].trials == r.rows[i].trials);
    CHECK(back[i].seed == r.rows[i].seed);
  }

  SUBCASE("rerun is byte identical") {
    const fs::path again = scratch("r2.csv");
    write_results(run_sweep(spec, 3), again.string(), "csv");
    CHECK(slurp(again) == text);
  }
  SUBCASE("json carries provenance") {
    const fs::path js = scratch("r.json");
    write_results(r, js.string(), "json");
    std::ifstream in(js);
    const auto j = nlohmann::json::parse(in);
    CHECK(j["provenance"]["config_hash"] == config_hash(spec.base));
    CHECK(j["provenance"]["version"] == kVersion);
    CHECK(j["rows"].size() == r.rows.size());
  }
  CHECK_THROWS_AS(write_results(r, csv.string(), "xml"), ConfigError);
}

TEST_CASE("failed estimators are counted, not averaged") {
  SystemConfig cfg;
  cfg.pilot_len = 4;  // too few symbols for genie LS with four paths
  cfg.estimator.iterations = 4;
  const CMat x = unimodular(cfg);
  PointOptions opts;
  opts.estimators = {EstimatorKind::kGenieLs, EstimatorKind::kBmpNoCsi};
  opts.trials = 5;
  const auto s = run_point(cfg, x, opts);
  CHECK(s[0].failures == 5);
  CHECK(std::isnan(s[0].nmse_mean));
  CHECK(s[1].trials == 5);
  CHECK(s[1].failures == 0);
}

TEST_CASE("config and sweep errors") {
  CHECK_THROWS_AS(config_from_json({{"system", {{"num_antennas", -3}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"system", {{"no_such_key", 1}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"telemetry", nlohmann::json::object()}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"system", {{"pilot_len", "forty"}}}}), ConfigError);
  CHECK(config_from_json(config_to_json(SystemConfig{})).pilot_len == 40);
  CHECK_THROWS_AS(load_config(scratch("missing.json").string()), ConfigError);

  const SystemConfig base;
  CHECK_THROWS_AS(sweep_from_json({{"sweep", {{"bogus", 1}}}}, base), ConfigError);
  CHECK_THROWS_AS(sweep_from_json({{"sweep", {{"trials", "many"}}}}, base), ConfigError);
  CHECK_THROWS_AS(sweep_from_json({{"sweep", {{"estimators", {"lasso"}}}}}, base), ConfigError);

  const SweepSpec ok = sweep_from_json({{"sweep", {{"param", "pilot_len"}, {"values", {20, 40}}, {"trials", 3}}}}, base);
  CHECK(ok.param == "pilot_len");
  CHECK(ok.values.size() == 2);
  CHECK_NOTHROW(ok.validate());

  SweepSpec bad = ok;
  bad.values = {40, 20};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = ok;
  bad.param = "temperature";
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = ok;
  bad.param = "data_power_ratio";
  bad.values = {0.5, 1.5};
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  CHECK(config_hash(base) == config_hash(SystemConfig{}));
  SystemConfig other;
  other.pilot_len = 41;
  CHECK(config_hash(base) != config_hash(other));
  CHECK(config_hash(base).size() == 16);
}

TEST_CASE("pilot sources") {
  SystemConfig cfg;
  cfg.pilot_len = 8;
  const CMat a = make_pilot(cfg, {"random_binary", 3});
  CHECK(a == make_pilot(cfg, {"random_binary", 3}));
  CHECK(a.rows() == 8);
  CHECK_THROWS_AS(make_pilot(cfg, {"gaussian", 1}), ConfigError);
  CHECK_THROWS_AS(make_pilot(cfg, {"chirp", 1}), ConfigError);

  const fs::path dir = scratch("cache");
  fs::remove_all(dir);
  PilotCache cache(dir.string());
  const CMat b = cache.get(cfg, {"unimodular", 5});
  CHECK(std::distance(fs::directory_iterator(dir), fs::directory_iterator{}) == 1);
  PilotCache reload(dir.string());
  CHECK(reload.get(cfg, {"unimodular", 5}) == b);

  const fs::path file = scratch("pilot.bin");
  write_matrix(file.string(), b);
  CHECK(make_pilot(cfg, {"file:" + file.string(), 0}) == b);
  SystemConfig wrong = cfg;
  wrong.pilot_len = 9;
  CHECK_THROWS_AS(make_pilot(wrong, {"file:" + file.string(), 0}), ConfigError);
}
