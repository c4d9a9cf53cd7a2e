#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hfce/channel.hpp"
#include "hfce/pilot_design.hpp"

using namespace hfce;

namespace {

CMat random_cmat(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  CMat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.complex_normal(1.0);
  return m;
}

CVec random_cvec(Eigen::Index n, Rng& rng, double var = 1.0) {
  CVec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.complex_normal(var);
  return v;
}

double prox_objective(const CVec& xi, const CVec& v, double t) {
  return (xi.size() ? xi.cwiseAbs().maxCoeff() : 0.0) + (xi - v).squaredNorm() / (2.0 * t);
}

}  // namespace

TEST_CASE("pair indexing") {
  const int n = 7;
  CHECK(pair_count(n) == 21);
  std::int64_t k = 0;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v, ++k) {
      CHECK(pair_index(u, v, n) == k);
      const ColumnPair p = pair_at(k, n);
      CHECK(p.u == u);
      CHECK(p.v == v);
    }
  CHECK_THROWS(pair_index(3, 3, n));
  CHECK_THROWS(pair_at(21, n));
}

TEST_CASE("mutual coherence") {
  CHECK(mutual_coherence(CMat::Identity(5, 5)) == 0.0);

  Rng rng(3);
  CMat m = random_cmat(4, 6, rng);
  m.col(4) = cplx(0.3, -2.0) * m.col(1);
  CHECK(mutual_coherence(m) == doctest::Approx(1.0));

  CMat z = random_cmat(3, 4, rng);
  z.col(2).setZero();
  try {
    mutual_coherence(z);
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("column 2") != std::string::npos);
  }
  CHECK_THROWS(mutual_coherence(CMat::Identity(3, 1)));
}

TEST_CASE("coherence vector") {
  const CoherenceVector two = coherence_vector(CMat::Identity(2, 2));
  CHECK(two.values.size() == 1);
  CHECK(std::abs(two.values[0]) == 0.0);

  Rng rng(8);
  const CMat m = random_cmat(3, 4, rng);
  const CoherenceVector cv = coherence_vector(m);
  REQUIRE(cv.values.size() == 6);
  std::int64_t k = 0;
  for (int u = 0; u < 4; ++u)
    for (int v = u + 1; v < 4; ++v, ++k) {
      cplx direct{};
      for (int i = 0; i < 3; ++i) direct += std::conj(m(i, u)) * m(i, v);
      direct /= m.col(u).norm() * m.col(v).norm();
      CHECK(std::abs(cv.values[k] - direct) < 1e-12);
      CHECK(std::abs(cv.at(v, u) - std::conj(direct)) < 1e-12);
      CHECK(std::abs(cv.values[k]) <= 1.0 + 1e-15);
    }
  CHECK(cv.max_abs() == doctest::Approx(mutual_coherence(m)));
}

TEST_CASE("simplex-ball projection") {
  RVec inside(3);
  inside << 0.2, 0.1, 0.3;
  CHECK(project_simplex_ball(inside, 1.0) == inside);
  RVec v(3);
  v << 3.0, 1.0, 0.5;
  const RVec p = project_simplex_ball(v, 1.0);
  CHECK(p.sum() == doctest::Approx(1.0));
  CHECK(p[0] == doctest::Approx(1.0));
  CHECK(p[1] == 0.0);
}

TEST_CASE("prox of the infinity norm") {
  Rng rng(21);
  SUBCASE("small input maps to zero") {
    CVec v(3);
    v << cplx(0.1, 0.2), cplx(-0.3, 0.0), cplx(0.0, 0.1);
    CHECK(prox_inf_norm(v, 1.0).norm() == 0.0);
  }
  SUBCASE("scalar example") {
    CVec v(2);
    v << 3.0, 0.0;
    const CVec xi = prox_inf_norm(v, 1.0);
    CHECK(std::abs(xi[0] - cplx(2.0, 0.0)) < 1e-14);
    CHECK(std::abs(xi[1]) < 1e-14);
    // grid-search oracle over a >= 0: a + (3 - a)^2 / 2
    double best_a = 0.0, best = 1e300;
    for (int i = 0; i <= 30000; ++i) {
      const double a = 3.0 * i / 30000.0;
      const double f = a + 0.5 * (3.0 - a) * (3.0 - a);
      if (f < best) best = f, best_a = a;
    }
    CHECK(best_a == doctest::Approx(2.0).epsilon(1e-3));
  }
  SUBCASE("phases preserved, moduli clipped") {
    const CVec v = random_cvec(15, rng, 4.0);
    const CVec xi = prox_inf_norm(v, 0.7);
    const double level = xi.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      CHECK(std::abs(xi[i]) == doctest::Approx(std::min(std::abs(v[i]), level)));
      if (std::abs(xi[i]) > 0) CHECK(std::abs(std::arg(xi[i]) - std::arg(v[i])) < 1e-12);
    }
  }
  SUBCASE("stochastic optimality") {
    for (int inst = 0; inst < 5; ++inst) {
      const CVec v = random_cvec(20, rng, 2.0);
      const double t = rng.uniform(0.1, 3.0);
      const CVec xi = prox_inf_norm(v, t);
      const double f0 = prox_objective(xi, v, t);
      for (int k = 0; k < 20000; ++k) {
        const double scale = std::pow(10.0, rng.uniform(-6.0, 0.0));
        const CVec cand = xi + random_cvec(20, rng, scale * scale);
        CHECK_MESSAGE(prox_objective(cand, v, t) >= f0 - 1e-9, "instance " << inst);
        if (prox_objective(cand, v, t) < f0 - 1e-9) break;
      }
    }
  }
  CHECK_THROWS(prox_inf_norm(CVec::Ones(3), 0.0));
}

TEST_CASE("coherence objective gradient matches finite differences") {
  Rng rng(77);
  for (int inst = 0; inst < 20; ++inst) {
    const int m = 2 + static_cast<int>(rng.index(5));        // 2..6
    const int n = 3 + static_cast<int>(rng.index(6));        // 3..8
    const int atoms = n + static_cast<int>(rng.index(11 - n));  // n..10
    const CMat f = random_cmat(n, atoms, rng);
    const CMat x = random_cmat(m, n, rng);
    const CVec c = random_cvec(pair_count(atoms), rng, 0.2);
    const CMat g = coherence_objective_grad(x, f, c);
    CMat fd(m, n);
    const double h = 1e-6;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        CMat xp = x, xm = x;
        xp(i, j) += h;
        xm(i, j) -= h;
        const double dre = (coherence_objective(xp, f, c) - coherence_objective(xm, f, c)) / (2 * h);
        xp = x;
        xm = x;
        xp(i, j) += cplx(0, h);
        xm(i, j) -= cplx(0, h);
        const double dim = (coherence_objective(xp, f, c) - coherence_objective(xm, f, c)) / (2 * h);
        // df = Re tr(G^H dX): d/dRe = Re G, d/dIm = Im G.
        fd(i, j) = {dre, dim};
      }
    CHECK_MESSAGE((g - fd).norm() / fd.norm() < 1e-5, "instance " << inst);

    // Batched form over all pairs agrees with the dense form.
    std::vector<ColumnPair> pairs;
    for (int u = 0; u < atoms; ++u)
      for (int v = u + 1; v < atoms; ++v) pairs.push_back({u, v});
    CHECK((coherence_objective_grad(x, f, pairs, c) - g).norm() < 1e-10 * (1 + g.norm()));
    CHECK(coherence_objective(x, f, pairs, c) == doctest::Approx(coherence_objective(x, f, c)));
  }
}

TEST_CASE("gradient vanishes at zero residual and descends otherwise") {
  Rng rng(5);
  const CMat f = CMat::Identity(6, 6);
  const CMat x = CMat::Identity(6, 6);
  const CVec c = coherence_vector(x * f).values;
  CHECK(coherence_objective_grad(x, f, c).norm() == 0.0);

  for (int inst = 0; inst < 20; ++inst) {
    const CMat ff = random_cmat(5, 8, rng);
    const CMat xx = random_cmat(3, 5, rng);
    const CVec cc = random_cvec(pair_count(8), rng, 0.1);
    const CMat g = coherence_objective_grad(xx, ff, cc);
    const double f0 = coherence_objective(xx, ff, cc);
    CHECK(coherence_objective(CMat(xx - 1e-5 * g), ff, cc) < f0);
  }
}

TEST_CASE("riemannian step") {
  Rng rng(9);
  CMat x = retract_rows(random_cmat(4, 7, rng), 2.0);
  CHECK((riemannian_step(x, CMat::Zero(4, 7), 0.5, 2.0) - x).norm() < 1e-14);

  const CMat g = random_cmat(4, 7, rng);
  const CMat x2 = riemannian_step(x, g, 0.3, 2.0);
  for (Eigen::Index m = 0; m < x2.rows(); ++m) CHECK(std::abs(x2.row(m).squaredNorm() - 2.0) < 1e-12);

  const CMat t1 = tangent_project(x, g);
  const CMat t2 = tangent_project(x, t1);
  CHECK((t1 - t2).norm() < 1e-12);
  for (Eigen::Index m = 0; m < x.rows(); ++m) CHECK(std::abs(std::real(x.row(m).dot(t1.row(m)))) < 1e-12);

  CMat zero_row = x;
  zero_row.row(2).setZero();
  CHECK_THROWS_AS(retract_rows(zero_row, 1.0), NumericalError);
  // A step that cancels a row exactly leaves nothing to retract.
  CMat cancel = CMat::Zero(4, 7);
  cancel.row(1) = x.row(1);
  CHECK_THROWS_AS(retract_rows(CMat(x - cancel), 2.0), NumericalError);
}

TEST_CASE("penalty schedule") {
  const auto rho = penalty_schedule(0.05, 2.0, 150);
  REQUIRE(rho.size() == 150);
  CHECK(rho.front() == doctest::Approx(0.05));
  CHECK(rho.back() == 2.0);
  for (std::size_t i = 1; i < rho.size(); ++i) CHECK(rho[i] >= rho[i - 1]);
  CHECK(rho[75] / rho[74] == doctest::Approx(rho[1] / rho[0]));
  CHECK_THROWS(penalty_schedule(2.0, 1.0, 10));
  CHECK_THROWS(penalty_schedule(0.1, 1.0, 0));
}

TEST_CASE("baseline pilots") {
  SystemConfig cfg;
  cfg.pilot_len = 32;
  cfg.pilot_power = 2.0;
  Rng rng(4);
  for (PilotKind kind : {PilotKind::kRandomBinary, PilotKind::kUnimodular, PilotKind::kZadoffChu}) {
    const CMat x = baseline_pilot(kind, cfg, rng);
    CHECK(x.rows() == 32);
    CHECK(x.cols() == 128);
    for (Eigen::Index m = 0; m < x.rows(); ++m) CHECK(x.row(m).squaredNorm() == doctest::Approx(2.0));
    CHECK(parse_pilot_kind(pilot_kind_name(kind)) == kind);
  }
  const CMat b = baseline_pilot(PilotKind::kRandomBinary, cfg, rng);
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    CHECK(b.data()[i].imag() == 0.0);
    CHECK(std::abs(b.data()[i].real()) == doctest::Approx(std::sqrt(2.0 / 128)));
  }
  const CMat g = baseline_pilot(PilotKind::kGaussian, cfg, rng);
  CHECK(g.rows() == 32);
  CHECK(g.cols() == cfg.num_atoms());

  SUBCASE("Zadoff-Chu rows are cyclic shifts") {
    const CMat z = baseline_pilot(PilotKind::kZadoffChu, cfg, rng);
    const CVec root = zadoff_chu_sequence(25, 128);
    const int shift = 128 / 32;
    for (int m = 0; m < 32; ++m)
      for (int k = 0; k < 128; ++k)
        CHECK(std::abs(z(m, k) - std::sqrt(2.0 / 128) * root[(k + m * shift) % 128]) < 1e-14);
    for (Eigen::Index k = 0; k < root.size(); ++k) CHECK(std::abs(root[k]) == doctest::Approx(1.0));
  }
  CHECK_THROWS(zadoff_chu_sequence(4, 128));
  CHECK_THROWS(parse_pilot_kind("chirp"));
}
