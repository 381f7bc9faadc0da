// One PASS/FAIL line per acceptance criterion. Exit status 1 if any fail.
#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qndsim/config.hpp"
#include "qndsim/constants.hpp"
#include "qndsim/fourier.hpp"
#include "qndsim/linear_model.hpp"
#include "qndsim/measure.hpp"
#include "qndsim/metrics.hpp"
#include "qndsim/plan.hpp"
#include "qndsim/unbalanced.hpp"

using namespace qnd;

namespace {

RunConfig config(const std::string& name) {
  return load_config_file(std::string(QNDSIM_SOURCE_DIR) + "/configs/" + name +
                          ".json");
}

double rel(double value, double ref) {
  return std::abs(value - ref) / std::abs(ref);
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

// Collects the sub-checks of one criterion; the line is printed at the end.
class Criterion {
 public:
  Criterion(std::string name, double budget_s)
      : name_(std::move(name)),
        budget_s_(budget_s),
        start_(std::chrono::steady_clock::now()) {}

  void check(bool ok, const std::string& what) {
    if (!ok) {
      ok_ = false;
      failed_.push_back(what);
    }
    notes_.push_back(what);
  }
  void note(const std::string& what) { notes_.push_back(what); }

  bool finish() {
    double secs = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - start_)
                      .count();
    check(secs < budget_s_, "runtime " + num(secs) + " s < " +
                                num(budget_s_) + " s");
    std::cout << (ok_ ? "PASS" : "FAIL") << "  " << name_ << '\n';
    for (const auto& n : notes_) std::cout << "      " << n << '\n';
    if (!ok_) {
      std::cout << "      failed:";
      for (const auto& f : failed_) std::cout << " [" << f << "]";
      std::cout << '\n';
    }
    std::cout.flush();
    return ok_;
  }

 private:
  std::string name_;
  double budget_s_;
  std::chrono::steady_clock::time_point start_;
  bool ok_ = true;
  std::vector<std::string> notes_, failed_;
};

// Wraps a criterion body so that an exception fails it instead of aborting.
bool run(const std::string& name, double budget_s,
         const std::function<void(Criterion&)>& body) {
  Criterion c(name, budget_s);
  try {
    body(c);
  } catch (const std::exception& e) {
    c.check(false, std::string("threw: ") + e.what());
  }
  return c.finish();
}

Setup lambda_setup(double R_over_Z) {
  double ws = kTwoPi * 7e9, gt = kTwoPi * 150e3;
  auto c = circuit_from_rates(Topology::kDoubleArm, ws, gt, gt, 1e-2, R_over_Z,
                              50);
  c.n_bar_e = 0.0;
  MembraneSpec m;
  m.x0_override = 1.26e-12;
  m.d0 = 1e-8;
  m.omega_m = kTwoPi * 80e6;
  m.quality_Q = 1e6;
  m.n_bar_m = 3.0;
  auto g = apply_stray_capacitance(couplings_from_geometry(m, ws), 1, 100);
  g.g_r = 0.01 * g.g1;
  return make_setup(c, g, m);
}

void lambda_reproduction(Criterion& c) {
  for (double r : {1.0, 0.1}) {
    auto s = lambda_setup(r);
    auto lf = lambda_family(s);
    double gg = s.couplings.g1 / s.couplings.g_r;
    std::string at = " at R/Z_out=" + num(r);
    c.check(rel(lf.lambda_b, 105 / r) <= 0.05,
            "lambda_b=" + num(lf.lambda_b) + " vs " + num(105 / r) + at);
    c.check(rel(lf.lambda_p, 0.014 * gg * gg) <= 0.05,
            "lambda_p=" + num(lf.lambda_p) + " vs " + num(0.014 * gg * gg) + at);
    c.check(lf.lambda >= 60 * 0.95 && lf.lambda <= 123.5 * 1.05,
            "lambda=" + num(lf.lambda) + " in [57, 129.7]" + at);
  }
}

void coupling_chain(Criterion& c) {
  MembraneSpec m;
  m.x0_override = 1.26e-12;
  m.d0 = 1e-8;
  m.omega_m = kTwoPi * 80e6;
  auto bare = couplings_from_geometry(m, kTwoPi * 7e9);
  auto stray = apply_stray_capacitance(bare, 1, 100);
  auto hz = [](double w) { return w / kTwoPi; };
  c.check(rel(hz(bare.g1), 715e3) <= 0.02, "g1=" + num(hz(bare.g1)) + " Hz");
  c.check(rel(hz(bare.g2), 111) <= 0.02, "g2=" + num(hz(bare.g2)) + " Hz");
  c.check(rel(hz(stray.g1), 7e3) <= 0.02,
          "g1(C_s=100 C0)=" + num(hz(stray.g1)) + " Hz");
  c.check(rel(hz(stray.g2), 1.1) <= 0.02,
          "g2(C_s=100 C0)=" + num(hz(stray.g2)) + " Hz");
}

void oracle_heating(Criterion& c) {
  auto cfg = config("heat_oracle");
  Setup base = cfg.setup();
  for (double g1_hz : {1.0, 10.0, 100.0}) {
    Setup s = base;
    s.couplings.g1 = kTwoPi * g1_hz;
    auto t = linspace(0, 5 / s.gamma_b(), 201);
    auto model = rlc_oracle_model(cfg.drive, s);
    auto sol =
        covariance_evolve(model, t, thermal_covariance({s.n_e(), 0.0}));
    auto an = phonon_trajectory_analytic(t, Scenario::kRlcApprox, cfg.drive, s);
    double worst = 0;
    for (size_t i = 1; i < t.size(); ++i) {
      worst = std::max(worst, rel(sol.solution.n_b[i], an[i]));
    }
    std::string line = "g1=" + num(g1_hz) + " Hz max rel err " + num(worst);
    if (g1_hz < 50) {
      c.check(worst < 0.05, line + " < 0.05");
    } else {
      c.note(line + " (recorded)");
    }
  }
}

void fourier_solver(Criterion& c) {
  auto cfg = config("fourier_grid");
  auto& f = *cfg.fourier;
  Setup base = cfg.setup();
  FourierTruncation tr = f.truncation;
  tr.tau = *f.tau_over_gamma_b / base.gamma_b();
  FourierOptions opts = f.options;
  opts.check_refinement = false;
  for (double g1 : f.g1) {
    Setup s = base;
    s.couplings.g1 = g1;
    auto r = fourier_heating_solve(s, cfg.drive, tr, opts);
    double rate =
        s.gamma_b() + induced_heating_double_limit(cfg.drive, s).Gamma_b;
    double th = std::log(2.0) / rate;
    double nss = phonon_trajectory_analytic({50 / rate}, Scenario::kDoubleArm,
                                            cfg.drive, s)[0];
    std::string at = " at g1=" + num(g1 / kTwoPi) + " Hz";
    c.check(rel(r.solution.T_half, th) < 0.10,
            "T_half rel err " + num(rel(r.solution.T_half, th)) + at);
    c.check(rel(r.solution.n_b_steady, nss) < 0.10,
            "n_b(inf) rel err " + num(rel(r.solution.n_b_steady, nss)) + at);
    c.check(r.diagnostics.residual < 1e-10,
            "residual " + num(r.diagnostics.residual) + at);
    FourierTruncation t4 = tr;
    t4.N_j = 4;
    auto r4 = fourier_heating_solve(s, cfg.drive, t4, opts);
    double d = rel(r4.solution.n_b_steady, r.solution.n_b_steady);
    c.check(d < 0.01, "N_j 4 vs 2 rel diff " + num(d) + at);
  }
}

Setup asym_setup(const Setup& base, double gr, double dL, double dR,
                 double dC) {
  double g1 = base.couplings.g1;
  CircuitSpec circ = base.circuit;
  circ.delta_L = dL * circ.parasitic_L;
  circ.delta_R = dR * circ.parasitic_R;
  circ.delta_C = dC * circ.C0;
  Couplings cp = base.couplings;
  cp.g_r = gr * g1;
  cp.delta_g1 = (gr * g1 - 2 * g1 * dC) / (1 + dC * dC);
  return make_setup(circ, cp, base.membrane);
}

void asymmetric_heating(Criterion& c) {
  auto cfg = config("asym");
  const auto& a = *cfg.asym;
  Setup base = cfg.setup();
  auto h_of = [&](const Setup& s) {
    UnbalancedOptions o = a.options;
    o.times = linspace(0, *o.slope_t1, a.time_points);
    return unbalanced_simulate(s, cfg.drive, o).solution.h;
  };
  for (const auto& tr : a.triples) {
    double worst = 0;
    for (double gr : a.gr_over_g1) {
      Setup s = asym_setup(base, gr, tr.dL, tr.dR, tr.dC);
      worst = std::max(worst, rel(h_of(s), analytic_heating_rate(s, cfg.drive)));
    }
    c.check(worst <= 0.15, "(dL,dR,dC)=(" + num(tr.dL) + "," + num(tr.dR) +
                               "," + num(tr.dC) + ") max rel err " +
                               num(worst));
  }
  double gr = 0.01;
  double h0 = h_of(asym_setup(base, gr, 0, 0, 0));
  double shift_C = std::abs(h_of(asym_setup(base, gr, 0, 0, 0.005)) - h0) / h0;
  double shift_L = std::abs(h_of(asym_setup(base, gr, 0.25, 0, 0)) - h0) / h0;
  double shift_R = std::abs(h_of(asym_setup(base, gr, 0, 0.25, 0)) - h0) / h0;
  c.check(shift_L < shift_C && shift_R < shift_C,
          "shifts at g_r/g1=0.01: dL=0.25 " + num(shift_L) + ", dR=0.25 " +
              num(shift_R) + ", dC=0.005 " + num(shift_C));
}

void visibility_optimization(Criterion& c) {
  const double lp[] = {32, 100, 300, 1000};
  const double expect[] = {0.43, 0.27, 0.12, 0.05};
  for (int i = 0; i < 4; ++i) {
    auto r = optimize_delta_nb(lp[i], 1, OptimizationMethod::kAnalyticPdf);
    c.check(rel(r.delta_nb_opt, expect[i]) <= 0.20,
            "lambda'=" + num(lp[i]) + " dn_opt=" + num(r.delta_nb_opt) +
                " vs " + num(expect[i]));
  }
  double worst_xi = kInf;
  for (double l = 40; l <= 1e6; l *= 1.5) {
    worst_xi = std::min(
        worst_xi,
        optimize_delta_nb(l, 1, OptimizationMethod::kAnalyticPdf).xi_max);
  }
  c.check(worst_xi > 0.20,
          "min xi over lambda' in [40, 1e6] = " + num(worst_xi));
  double worst = 0;
  for (double l : {1e3, 3e3, 1e4, 1e5, 1e6}) {
    auto r = optimize_delta_nb(l, 1, OptimizationMethod::kAnalyticPdf);
    worst = std::max(worst, rel(asymptotic_visibility(l, 1), r.xi_max));
  }
  c.check(worst < 0.05,
          "asymptotic vs full optimum, lambda' >= 1e3: " + num(worst));
}

void mc_statistics(Criterion& c) {
  auto hcfg = config("histogram");
  const auto& m = *hcfg.measure;
  double dn = optimize_delta_nb(m.lambda_prime, m.n_bar,
                                OptimizationMethod::kAnalyticPdf)
                  .delta_nb_opt;
  auto mcfg = MeasurementConfig::from_lambda(m.lambda_prime, m.n_bar, dn);
  mcfg.n_windows = m.windows;
  mcfg.segments_per_window = m.segments;
  mcfg.seed = hcfg.seed;
  auto out = mc_sample_outcomes(mcfg, 1, true);
  auto comps = pdf_components(mcfg.n_bar, mcfg.delta_nb, mcfg.cutoff);
  double ks = ks_distance(out.samples, [&](double v) {
    return cdf_value(v, comps, mcfg.D);
  });
  c.check(ks < 0.02, "KS distance " + num(ks) + " (" +
                         std::to_string(mcfg.n_windows) + " windows)");
  auto again = mc_sample_outcomes(mcfg, 2, false);
  c.check(again.histogram.counts == out.histogram.counts,
          "histogram identical at 1 and 2 threads");

  auto fcfg = config("mc_fit");
  const auto& o = *fcfg.optimize;
  McFitOptions mc = o.mc;
  mc.seed = fcfg.seed;
  for (double lp : o.lambda_prime) {
    auto an = optimize_delta_nb(lp, o.N_eff, OptimizationMethod::kAnalyticPdf);
    auto fit =
        optimize_delta_nb(lp, o.N_eff, OptimizationMethod::kMonteCarloPolyFit,
                          mc);
    double sig = fit.fit->delta_nb_sigma;
    double gap = std::abs(fit.delta_nb_opt - an.delta_nb_opt);
    c.check(gap <= sig, "lambda'=" + num(lp) + " fit " +
                            num(fit.delta_nb_opt) + " +- " + num(sig) +
                            " vs analytic " + num(an.delta_nb_opt));
  }
}

void planner(Criterion& c) {
  auto heat = config("plan_heating");
  auto p = plan_experiment(heat.setup(), *heat.plan);
  c.check(p.feasible, "heating-fixed plan feasible");
  c.check(rel(p.lambda, 122) <= 0.05, "lambda=" + num(p.lambda));
  c.check(rel(p.alpha_sq_total, 4.5e11) <= 0.15,
          "|alpha|^2=" + num(p.alpha_sq_total) + " vs 4.5e11");
  c.check(rel(p.P_in, 5.3e-9) <= 0.15, "P_in=" + num(p.P_in) + " W vs 5.3e-9");
  c.check(rel(p.intracavity_photons, 1.2e9) <= 0.10,
          "intracavity=" + num(p.intracavity_photons) + " vs 1.2e9");
  c.check(rel(p.N_e, 1) < 1e-12, "N_e=" + num(p.N_e));
  c.note("T=" + num(p.T) + " s");

  auto power = config("plan_power");
  auto q = plan_experiment(power.setup(), *power.plan);
  c.check(q.feasible, "balanced plan feasible");
  c.check(rel(q.P_in, 16e-9) <= 0.15, "P_in=" + num(q.P_in) + " W vs 1.6e-8");
  c.check(rel(q.T, 1e-4) <= 0.15, "T=" + num(q.T) + " s vs 1e-4");

  auto ref = config("reference");
  double bound = strong_coupling_boundary(ref.device.bare.g1,
                                          ref.setup().rates.gamma_t);
  c.check(rel(bound, 3.8) <= 0.05, "strong coupling at C_s/C0 < " + num(bound));
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

double pdf_mass(double n_bar, double dn, double D) {
  auto comps = pdf_components(n_bar, dn);
  int top = 0;
  for (const auto& k : comps) top = std::max(top, k.level + 1);
  auto f = [&](double v) { return pdf_value(v, comps, D); };
  double sum = 0, a = -12;
  for (int k = 0; k <= top + 1; ++k) {
    double b = k <= top ? k * D : top * D + 12;
    if (b <= a) continue;
    sum += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        f, a, b, 15, 1e-12);
    a = b;
  }
  return sum;
}

void properties(Criterion& c) {
  double norm = 0;
  for (double n_bar : {0.0, 0.3, 1.0, 3.0, 10.0}) {
    for (double dn : {0.0, 0.01, 0.1, 0.3, 1.0}) {
      for (double D : {1.0, 3.0, 10.0, 30.0}) {
        norm = std::max(norm, std::abs(pdf_mass(n_bar, dn, D) - 1));
      }
    }
  }
  c.check(norm < 1e-6, "pdf normalisation error " + num(norm));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  double harmonic = 0, scaling = 0, invariance = 0;
  for (int i = 0; i < 200; ++i) {
    auto s = lambda_setup(0.02 + 0.9 * u(rng));
    s.couplings.g_r = (1e-3 + 0.05 * u(rng)) * s.couplings.g1;
    s.circuit.n_bar_e = 2 * u(rng);
    auto lf = lambda_family(s);
    harmonic = std::max(
        harmonic, rel(1 / lf.lambda, 1 / lf.lambda_b + 1 / lf.lambda_p));
    double k = std::pow(10, -3 + 6 * u(rng));
    DriveSpec d1, d2;
    d1.alpha_sq = 1e11;
    d2.alpha_sq = k * 1e11;
    d1.T = d2.T = 4e-4;
    scaling = std::max({scaling,
                        rel(snr_squared(d2, s), k * snr_squared(d1, s)),
                        rel(delta_nb(d2, s).electrical,
                            k * delta_nb(d1, s).electrical)});
    invariance = std::max(
        invariance, rel(snr_squared(d2, s) / delta_nb(d2, s).electrical,
                        snr_squared(d1, s) / delta_nb(d1, s).electrical));
  }
  c.check(harmonic < 1e-12, "harmonic combination " + num(harmonic));
  c.check(scaling < 1e-12, "linear scaling of D^2 and dn_b " + num(scaling));
  c.check(invariance < 1e-12, "drive invariance of D^2/dn_b " + num(invariance));

  std::mt19937_64 mrng(17);
  double comm = 0;
  for (int k = 0; k < 20; ++k) {
    auto m = random_model(mrng);
    std::vector<double> occ(m.modes.size(), 0.5);
    comm = std::max(comm, covariance_evolve(m, linspace(0, 5, 51),
                                            thermal_covariance(occ))
                              .commutator_drift);
  }
  c.check(comm < 1e-9, "commutator drift " + num(comm));

  std::mt19937_64 lrng(23);
  double lyap = 0;
  for (int k = 0; k < 100; ++k) {
    auto m = random_model(lrng);
    check_stability(m.drift);
    auto direct = lyapunov_solve(m.drift, m.diffusion);
    auto doubled = steady_covariance_doubling(m);
    lyap = std::max(lyap, (doubled - direct).cwiseAbs().maxCoeff() /
                              direct.cwiseAbs().maxCoeff());
  }
  c.check(lyap < 1e-9, "Lyapunov vs doubling over 100 models " + num(lyap));

  auto mcfg = MeasurementConfig::from_lambda(100, 1, 0.25);
  mcfg.n_windows = 20000;
  mcfg.seed = 99;
  auto a = mc_sample_outcomes(mcfg, 1, true);
  auto b = mc_sample_outcomes(mcfg, 3, true);
  c.check(a.samples == b.samples && a.histogram.counts == b.histogram.counts,
          "MC samples identical at 1 and 3 threads");
}

}  // namespace

int main() {
  int failed = 0;
  auto tally = [&](bool ok) { failed += ok ? 0 : 1; };
  tally(run("lambda reproduction", 1, lambda_reproduction));
  tally(run("coupling chain", 1, coupling_chain));
  tally(run("covariance oracle vs analytic heating", 10, oracle_heating));
  tally(run("Fourier sideband solver", 120, fourier_solver));
  tally(run("asymmetric heating", 300, asymmetric_heating));
  tally(run("visibility optimisation", 60, visibility_optimization));
  tally(run("Monte-Carlo statistics", 120, mc_statistics));
  tally(run("planner", 1, planner));
  tally(run("property suites", 120, properties));
  std::cout << failed << " criteria failed\n";
  return failed ? 1 : 0;
}
