#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "qndsim/constants.hpp"
#include "qndsim/errors.hpp"
#include "qndsim/linear_model.hpp"

using namespace qnd;

namespace {

Setup heat_oracle_setup(double g1_hz) {
  double ws = kTwoPi * 5e9, gt = kTwoPi * 1e6;
  auto c = circuit_from_rates(Topology::kSingleArm, ws, gt, gt, 0, 0, 50);
  c.n_bar_e = 0.0;
  MembraneSpec m;
  m.omega_m = kTwoPi * 100e6;
  m.gamma_b = kTwoPi * 100;
  m.n_bar_m = 0.0;
  Couplings g;
  g.g1 = kTwoPi * g1_hz;
  return make_setup(c, g, m);
}

DriveSpec heat_oracle_drive() {
  DriveSpec d;
  d.alpha_sq = 1e12;
  d.T = 1e-4;
  return d;
}

LinearModel random_model(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  int modes = 1 + static_cast<int>(3 * u(rng));
  std::vector<std::string> labels;
  for (int i = 0; i < modes; ++i) labels.push_back("m" + std::to_string(i));
  LinearModel m(labels);
  for (int i = 0; i < modes; ++i) {
    m.add_channel(i, 0.1 + 2 * u(rng), 3 * u(rng));
    m.add_rotation(i, 10 * (u(rng) - 0.5));
  }
  for (int i = 0; i < modes; ++i) {
    for (int j = i + 1; j < modes; ++j) {
      double k = 0.05 * (u(rng) - 0.5);
      m.drift(2 * i + 1, 2 * j) -= k;
      m.drift(2 * j + 1, 2 * i) -= k;
    }
  }
  return m;
}

double max_rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("free decay of the observed mode") {
  LinearModel m({"b"});
  double gb = 3.0;
  m.add_channel(0, gb, 0);
  m.add_rotation(0, 50);
  auto t = linspace(0, 2, 41);
  auto sol = covariance_evolve(m, t, thermal_covariance({1.0}));
  for (size_t i = 0; i < t.size(); ++i) {
    CHECK(std::abs(sol.solution.n_b[i] - std::exp(-gb * t[i])) < 1e-9);
  }
  CHECK(sol.solution.n_b_steady == doctest::Approx(0).scale(1));
}

TEST_CASE("RLC oracle follows the approximate closed form") {
  auto d = heat_oracle_drive();
  for (double g1 : {1.0, 10.0}) {
    auto s = heat_oracle_setup(g1);
    auto model = rlc_oracle_model(d, s);
    auto t = linspace(0, 5 / s.gamma_b(), 101);
    auto sol = covariance_evolve(model, t, thermal_covariance({0.0, 0.0}));
    auto an = phonon_trajectory_analytic(t, Scenario::kRlcApprox, d, s);
    for (size_t i = 1; i < t.size(); ++i) {
      CHECK(std::abs(sol.solution.n_b[i] / an[i] - 1) < 0.05);
    }
    CHECK(sol.commutator_drift < 1e-9);
  }
}

TEST_CASE("commutator is preserved") {
  std::mt19937_64 rng(17);
  for (int k = 0; k < 20; ++k) {
    auto m = random_model(rng);
    std::vector<double> occ(m.modes.size(), 0.5);
    auto sol = covariance_evolve(m, linspace(0, 5, 51), thermal_covariance(occ));
    CHECK(sol.commutator_drift < 1e-9);
  }
}

TEST_CASE("lyapunov solve agrees with step-map doubling") {
  std::mt19937_64 rng(23);
  for (int k = 0; k < 100; ++k) {
    auto m = random_model(rng);
    check_stability(m.drift);
    auto direct = lyapunov_solve(m.drift, m.diffusion);
    auto doubled = steady_covariance_doubling(m);
    CHECK(max_rel_diff(doubled, direct) < 1e-9);
    Eigen::MatrixXd res = m.drift * direct + direct * m.drift.transpose() +
                          m.diffusion;
    CHECK(res.cwiseAbs().maxCoeff() < 1e-10 * m.diffusion.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("stationary excess is linear in the noise power") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(0, 1);
  for (int k = 0; k < 20; ++k) {
    double r0 = 0.5 + u(rng), r1 = 0.5 + u(rng), n0 = u(rng), n1 = 2 * u(rng);
    LinearModel a({"a", "b"}), b({"a", "b"});
    a.add_channel(0, r0, n0);
    a.add_channel(1, r1, n1);
    b.add_channel(0, r0, 2 * n0 + 0.5);
    b.add_channel(1, r1, 2 * n1 + 0.5);
    for (auto* m : {&a, &b}) {
      m->add_rotation(0, 4);
      m->add_rotation(1, 3);
      m->drift(1, 2) -= 0.3;
      m->drift(3, 0) -= 0.3;
    }
    auto sa = lyapunov_solve(a.drift, a.diffusion);
    auto sb = lyapunov_solve(b.drift, b.diffusion);
    CHECK(max_rel_diff(sb, 2 * sa) < 1e-12);
    for (int i = 0; i < 2; ++i) {
      CHECK(std::abs(mode_occupation(sb, i) + 0.5 -
                     2 * (mode_occupation(sa, i) + 0.5)) < 1e-12);
    }
  }
}

TEST_CASE("unstable drift is rejected") {
  Eigen::MatrixXd A(2, 2);
  A << 0.1, 1, -1, 0.1;
  try {
    check_stability(A);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kNumeric);
  }
  A << 0, 1, -1, 0;
  CHECK(check_stability(A));
}

TEST_CASE("step maps compose") {
  std::mt19937_64 rng(31);
  auto m = random_model(rng);
  auto one = step_map(m.drift, m.diffusion, 0.3);
  auto two = step_map(m.drift, m.diffusion, 0.6);
  auto c = compose(one, one);
  CHECK(max_rel_diff(c.F, two.F) < 1e-12);
  CHECK(max_rel_diff(c.Q, two.Q) < 1e-12);
}

TEST_CASE("large steps stay accurate") {
  LinearModel m({"a"});
  m.add_channel(0, 1e3, 0.2);
  auto big = step_map(m.drift, m.diffusion, 5.0);
  CHECK(big.F.cwiseAbs().maxCoeff() < 1e-100);
  CHECK(big.Q(0, 0) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("crossing time and slope") {
  auto t = linspace(0, 1, 11);
  std::vector<double> n;
  for (double x : t) n.push_back(1 - std::exp(-3 * x));
  double th = crossing_time(t, n, 0.5);
  CHECK(th == doctest::Approx(std::log(2) / 3).epsilon(1e-2));
  CHECK(std::isnan(crossing_time(t, n, 2.0)));
  std::vector<double> line;
  for (double x : t) line.push_back(2 + 5 * x);
  CHECK(fitted_slope(t, line, 0.2, 0.8) == doctest::Approx(5));
}
