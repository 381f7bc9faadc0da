#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "qndsim/config.hpp"
#include "qndsim/constants.hpp"
#include "qndsim/errors.hpp"
#include "qndsim/plan.hpp"

using namespace qnd;

namespace {

RunConfig reference() {
  return load_config_file(QNDSIM_SOURCE_DIR "/configs/reference.json");
}

double rel(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

DriveSpec drive_of(const ExperimentPlan& p) {
  DriveSpec d;
  d.alpha_sq = p.alpha_sq_total;
  d.T = p.T;
  return d;
}

}  // namespace

TEST_CASE("analytic optimum decreases with lambda prime") {
  double prev_dn = kInf, prev_xi = 0;
  for (double lp : {32.0, 100.0, 300.0, 1e3, 1e4, 1e6}) {
    auto r = optimize_delta_nb(lp, 1, OptimizationMethod::kAnalyticPdf);
    CHECK(r.delta_nb_opt > 0);
    CHECK(r.delta_nb_opt < prev_dn);
    CHECK(r.xi_max > prev_xi);
    CHECK(r.xi_max <= 1);
    CHECK(!r.fit);
    prev_dn = r.delta_nb_opt;
    prev_xi = r.xi_max;
  }
  CHECK(prev_xi > 0.99);
  auto a = optimize_delta_nb(100, 1, OptimizationMethod::kAnalyticPdf);
  auto b = optimize_delta_nb(100, 1, OptimizationMethod::kAnalyticPdf);
  CHECK(a.delta_nb_opt == b.delta_nb_opt);
  CHECK_THROWS_AS(optimize_delta_nb(1, 1, OptimizationMethod::kAnalyticPdf),
                  Error);
}

TEST_CASE("optimum sits on the visibility maximum") {
  auto r = optimize_delta_nb(100, 1, OptimizationMethod::kAnalyticPdf);
  double x = r.delta_nb_opt;
  CHECK(analytic_visibility(100, 1, x) == doctest::Approx(r.xi_max));
  CHECK(analytic_visibility(100, 1, 1.02 * x) <= r.xi_max);
  CHECK(analytic_visibility(100, 1, 0.98 * x) <= r.xi_max);
}

TEST_CASE("Monte-Carlo polynomial fit") {
  McFitOptions mc;
  mc.n_windows = 30000;
  mc.seed = 4;
  auto r =
      optimize_delta_nb(100, 1, OptimizationMethod::kMonteCarloPolyFit, mc);
  REQUIRE(r.fit);
  const auto& f = *r.fit;
  CHECK(f.delta_nb.size() == 13);
  CHECK(f.xi.size() == 13);
  CHECK(f.coefficients.size() == 5);
  CHECK(f.delta_nb_sigma > 0);
  CHECK(r.delta_nb_opt > f.delta_nb.front());
  CHECK(r.delta_nb_opt < f.delta_nb.back());
  mc.threads = 2;
  auto again =
      optimize_delta_nb(100, 1, OptimizationMethod::kMonteCarloPolyFit, mc);
  CHECK(again.delta_nb_opt == r.delta_nb_opt);
}

TEST_CASE("planning with heating and N_e fixed") {
  auto cfg = reference();
  auto s = cfg.setup();
  PlanTargets t;
  t.delta_nb = 0.21;
  t.N_e = 1.0;
  auto p = plan_experiment(s, t);
  REQUIRE(p.feasible);
  CHECK(p.alpha_sq_total == doctest::Approx(4.5e11).epsilon(0.15));
  CHECK(p.P_in == doctest::Approx(5.3e-9).epsilon(0.05));
  CHECK(p.intracavity_photons == doctest::Approx(1.2e9).epsilon(0.05));
  CHECK(p.N_e == doctest::Approx(1).epsilon(1e-9));
  CHECK(p.T == doctest::Approx(4e-4).epsilon(0.1));
}

TEST_CASE("balanced split at fixed power") {
  auto cfg = load_config_file(QNDSIM_SOURCE_DIR "/configs/plan_power.json");
  auto p = plan_experiment(cfg.setup(), *cfg.plan);
  REQUIRE(p.feasible);
  CHECK(p.P_in == doctest::Approx(16e-9).epsilon(0.1));
  CHECK(p.T == doctest::Approx(1e-4).epsilon(0.1));
  CHECK(p.delta_nb_electrical == doctest::Approx(p.delta_nb_mechanical));
  CHECK(p.delta_nb_total == doctest::Approx(0.3));
  CHECK(p.lambda_prime == doctest::Approx(p.lambda / 2));
}

TEST_CASE("zero drive is flagged") {
  auto s = reference().setup();
  PlanTargets t;
  t.delta_nb = 0.0;
  t.T = 1e-4;
  auto p = plan_experiment(s, t);
  CHECK(p.no_qnd);
  CHECK(p.alpha_sq_total == 0);
  CHECK(p.delta_nb_total == doctest::Approx(s.gamma_b() * s.n_m() * 1e-4));
}

TEST_CASE("plan self-consistency") {
  auto s = reference().setup();
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 100; ++i) {
    double dn = 0.01 + 0.5 * u(rng);
    double T = 1e-5 * std::pow(100, u(rng));
    double Ne = 0.2 + 2 * u(rng);
    for (int mode = 0; mode < 3; ++mode) {
      PlanTargets t;
      if (mode != 2) t.delta_nb = dn;
      if (mode != 0) t.N_e = Ne;
      if (mode != 1) t.T = T;
      auto p = plan_experiment(s, t);
      if (!p.feasible) continue;
      auto d = drive_of(p);
      auto check = delta_nb(d, s);
      CHECK(rel(check.electrical, p.delta_nb_electrical) < 1e-9);
      if (t.delta_nb) CHECK(rel(check.electrical, dn) < 1e-9);
      double Gb = induced_heating_double_limit(d, s).Gamma_b;
      double Ne_back = check.electrical / (p.T * (s.gamma_b() + Gb));
      if (t.N_e) CHECK(rel(Ne_back, Ne) < 1e-9);
      CHECK(p.P_in / p.flux == doctest::Approx(kHbar * s.rates.omega_s));
      CHECK(rel(p.intracavity_photons * p.gamma_t, p.flux) < 1e-15);
      CHECK(rel(p.flux * p.T, p.alpha_sq_total) < 1e-12);
    }
  }
}

TEST_CASE("target validation") {
  PlanTargets t;
  t.delta_nb = 0.2;
  CHECK_THROWS_AS(validate(t), Error);
  t.T = -1;
  t.N_e = 1;
  CHECK_THROWS_AS(validate(t), Error);
}

TEST_CASE("strong-coupling boundary") {
  auto cfg = reference();
  double g1 = cfg.device.bare.g1, gt = cfg.setup().rates.gamma_t;
  CHECK(strong_coupling_boundary(g1, gt) ==
        doctest::Approx(3.8).epsilon(0.02));
}

TEST_CASE("stray capacitance and quality sweep") {
  auto cfg = load_config_file(QNDSIM_SOURCE_DIR "/configs/stray_sweep.json");
  REQUIRE(cfg.sweep);
  SweepSpec spec;
  spec.device = cfg.device;
  spec.targets = *cfg.plan;
  spec.axes = cfg.sweep->axes;
  auto rows = sweep(spec, 2);
  size_t expect = 1;
  for (const auto& a : spec.axes) expect *= a.values.size();
  CHECK(rows.size() == expect);
  auto names = sweep_columns(spec.axes);
  double g1_bare = cfg.device.bare.g1;
  double bound =
      strong_coupling_boundary(g1_bare, spec.device.build().rates.gamma_t);
  for (const auto& r : rows) {
    CHECK(r.columns.size() + spec.axes.size() + 1 == names.size());
    double cs = r.inputs[0];
    for (const auto& [name, value] : r.columns) {
      if (name == "g1") CHECK(rel(value, g1_bare / (1 + cs)) < 1e-12);
      if (name == "strong_coupling") CHECK((value == 1.0) == (cs < bound));
    }
  }
  auto same = sweep(spec, 1);
  REQUIRE(same.size() == rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(same[i].inputs == rows[i].inputs);
  }
}

TEST_CASE("sweep grids are validated and failures stay in their row") {
  auto cfg = reference();
  SweepSpec spec;
  spec.device = cfg.device;
  spec.targets = *cfg.plan;
  spec.axes = {{SweepAxis::kQ, {1e6, 1e5, 1e7}}};
  CHECK_THROWS_AS(sweep(spec), Error);
  spec.axes = {{SweepAxis::kQ, {}}};
  CHECK_THROWS_AS(sweep(spec), Error);
  spec.axes = {{SweepAxis::kLambdaPrime, {0.5, 100}}};
  auto rows = sweep(spec);
  REQUIRE(rows.size() == 2);
  CHECK(!rows[0].error.empty());
  CHECK(rows[1].error.empty());
  CHECK(parse_sweep_axis(to_string(SweepAxis::kNBarM)) == SweepAxis::kNBarM);
  CHECK_THROWS_AS(parse_sweep_axis("bogus"), Error);
}
