#include "qndsim/plan.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <sstream>

#include "qndsim/errors.hpp"
#include "qndsim/measure.hpp"
#include "qndsim/parallel.hpp"

namespace qnd {
namespace {

constexpr double kDnMin = 1e-5;
constexpr double kDnMax = 3.0;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t k) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (k + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

OptimizationResult optimize_analytic(double lp, double N) {
  auto f = [&](double log_dn) {
    return analytic_visibility(lp, N, std::exp(log_dn));
  };
  const int n = 160;
  double a = std::log(kDnMin), b = std::log(kDnMax);
  std::vector<double> xs(n), ys(n);
  int best = 0;
  for (int i = 0; i < n; ++i) {
    xs[i] = a + (b - a) * i / (n - 1);
    ys[i] = f(xs[i]);
    if (ys[i] > ys[best]) best = i;
  }
  OptimizationResult r;
  r.method = OptimizationMethod::kAnalyticPdf;
  double lo = xs[std::max(best - 1, 0)], hi = xs[std::min(best + 1, n - 1)];
  auto m = boost::math::tools::brent_find_minima(
      [&](double x) { return -f(x); }, lo, hi, 40);
  if (-m.second >= ys[best]) {
    r.delta_nb_opt = std::exp(m.first);
    r.xi_max = -m.second;
  } else {
    r.delta_nb_opt = std::exp(xs[best]);
    r.xi_max = ys[best];
  }
  if (r.xi_max < 0) {
    throw Error(ErrorKind::kConvergence,
                "optimize: no two-peak structure anywhere in [1e-5, 3]");
  }
  return r;
}

double poly(const std::vector<double>& c, double t) {
  double v = 0;
  for (size_t k = c.size(); k-- > 0;) v = v * t + c[k];
  return v;
}

double poly_d1(const std::vector<double>& c, double t) {
  double v = 0;
  for (size_t k = c.size(); k-- > 1;) v = v * t + k * c[k];
  return v;
}

double poly_d2(const std::vector<double>& c, double t) {
  double v = 0;
  for (size_t k = c.size(); k-- > 2;) v = v * t + k * (k - 1) * c[k];
  return v;
}

OptimizationResult optimize_mc(double lp, double N, const McFitOptions& o) {
  if (o.grid_points < 6) {
    throw Error(ErrorKind::kConfig, "optimize: MC fit needs >= 6 grid points");
  }
  if (!(o.span_lo > 0 && o.span_hi > o.span_lo)) {
    throw Error(ErrorKind::kConfig, "optimize: need 0 < span_lo < span_hi");
  }
  double centre = optimize_analytic(lp, N).delta_nb_opt;
  PolyFitDiagnostics d;
  double t_lo = std::log(o.span_lo), t_hi = std::log(o.span_hi);
  std::vector<double> ts;
  for (int i = 0; i < o.grid_points; ++i) {
    double dn = centre * std::exp(t_lo + (t_hi - t_lo) * i / (o.grid_points - 1));
    MeasurementConfig cfg = MeasurementConfig::from_lambda(lp, N, dn);
    cfg.n_windows = o.n_windows;
    cfg.segments_per_window = o.segments_per_window;
    cfg.cutoff = o.cutoff;
    cfg.seed = mix_seed(o.seed, i);
    auto mc = mc_sample_outcomes(cfg, o.threads);
    auto v = visibility(mc.histogram, cfg.D);
    if (v.degenerate || !(v.xi_uncertainty > 0)) continue;
    d.delta_nb.push_back(dn);
    d.xi.push_back(v.xi);
    d.xi_err.push_back(v.xi_uncertainty);
    ts.push_back(std::log(dn));
  }
  const int deg = 4;
  int m = static_cast<int>(ts.size());
  if (m < deg + 2) {
    throw Error(ErrorKind::kConvergence,
                "optimize: too few usable MC grid points for a quartic fit");
  }
  d.t_centre = std::log(centre);
  Eigen::MatrixXd X(m, deg + 1);
  Eigen::VectorXd y(m), w(m);
  for (int i = 0; i < m; ++i) {
    double t = ts[i] - d.t_centre;
    for (int k = 0; k <= deg; ++k) X(i, k) = std::pow(t, k);
    y(i) = d.xi[i];
    w(i) = 1 / d.xi_err[i];
  }
  Eigen::MatrixXd Xw = w.asDiagonal() * X;
  Eigen::VectorXd yw = w.asDiagonal() * y;
  Eigen::VectorXd c = Xw.colPivHouseholderQr().solve(yw);
  Eigen::MatrixXd cov = (Xw.transpose() * Xw).inverse();
  d.coefficients.assign(c.data(), c.data() + c.size());
  for (int i = 0; i < m; ++i) {
    double r = (y(i) - poly(d.coefficients, ts[i] - d.t_centre)) * w(i);
    d.residuals.push_back(r);
    d.chi2 += r * r;
  }

  // Vertex on a fine grid, then Newton on the derivative.
  double a = ts.front() - d.t_centre, b = ts.back() - d.t_centre;
  const int fine = 4001;
  int best = 0;
  double best_v = -kInf;
  for (int i = 0; i < fine; ++i) {
    double t = a + (b - a) * i / (fine - 1);
    double v = poly(d.coefficients, t);
    if (v > best_v) {
      best_v = v;
      best = i;
    }
  }
  double t = a + (b - a) * best / (fine - 1);
  auto fail = [&](const std::string& why) {
    std::ostringstream os;
    os << "optimize: MC quartic fit failed (" << why << "); coefficients";
    for (double x : d.coefficients) os << ' ' << x;
    os << "; chi2 " << d.chi2;
    throw Error(ErrorKind::kConvergence, os.str());
  };
  if (best == 0 || best == fine - 1) fail("maximum at the grid edge");
  for (int it = 0; it < 20; ++it) {
    double p2 = poly_d2(d.coefficients, t);
    if (!(p2 < 0)) break;
    double step = poly_d1(d.coefficients, t) / p2;
    t -= step;
    if (std::abs(step) < 1e-14) break;
  }
  double p2 = poly_d2(d.coefficients, t);
  if (!(p2 < 0)) fail("no negative curvature at the vertex");
  Eigen::VectorXd g(deg + 1);
  g(0) = 0;
  for (int k = 1; k <= deg; ++k) g(k) = -k * std::pow(t, k - 1) / p2;
  double sigma_t = std::sqrt(std::max(0.0, g.dot(cov * g)));

  OptimizationResult r;
  r.method = OptimizationMethod::kMonteCarloPolyFit;
  r.delta_nb_opt = std::exp(t + d.t_centre);
  r.xi_max = poly(d.coefficients, t);
  d.delta_nb_sigma = r.delta_nb_opt * sigma_t;
  r.fit = std::move(d);
  return r;
}

}  // namespace

double analytic_visibility(double lambda_prime, double N_eff, double dn) {
  auto comps = pdf_components(N_eff, dn);
  double D = std::sqrt(lambda_prime * dn);
  auto v = visibility([&](double x) { return pdf_value(x, comps, D); }, D);
  return v.degenerate ? -1.0 : v.xi;
}

OptimizationResult optimize_delta_nb(double lambda_prime, double N_eff,
                                     OptimizationMethod method,
                                     const McFitOptions& mc) {
  if (!(lambda_prime > 1)) {
    throw Error(ErrorKind::kDomain, "optimize: needs lambda' > 1");
  }
  if (!(N_eff >= 0) || !std::isfinite(N_eff)) {
    throw Error(ErrorKind::kDomain, "optimize: N_eff must be finite and >= 0");
  }
  if (method == OptimizationMethod::kAnalyticPdf) {
    return optimize_analytic(lambda_prime, N_eff);
  }
  return optimize_mc(lambda_prime, N_eff, mc);
}

Setup DeviceTemplate::build() const {
  Couplings c = apply_stray_capacitance(bare, circuit.C0,
                                        Cs_over_C0 * circuit.C0);
  if (gr_over_g1) c.g_r = *gr_over_g1 * c.g1;
  return make_setup(circuit, c, membrane);
}

void validate(const PlanTargets& t) {
  auto bad = [](const std::optional<double>& x) { return x && !(*x >= 0); };
  if (bad(t.delta_nb) || bad(t.N_e) || (t.T && !(*t.T > 0))) {
    throw Error(ErrorKind::kConfig,
                "plan: delta_nb and N_e must be >= 0, T must be > 0");
  }
  if (t.balance) {
    if (!t.delta_nb || t.N_e || t.T) {
      throw Error(ErrorKind::kConfig,
                  "plan: balance takes delta_nb only (N_e and T are derived)");
    }
    return;
  }
  int given = (t.delta_nb ? 1 : 0) + (t.N_e ? 1 : 0) + (t.T ? 1 : 0);
  if (given != 2) {
    throw Error(ErrorKind::kConfig,
                "plan: exactly two of delta_nb, N_e, T must be given");
  }
}

double heating_per_photon(const Setup& s) {
  DriveSpec unit;
  unit.alpha_sq = 1.0;
  unit.T = 1.0;
  return delta_nb(unit, s).electrical;
}

double damping_per_flux(const Setup& s) {
  DriveSpec unit;
  unit.alpha_sq = 1.0;
  unit.T = 1.0;
  if (s.double_arm()) return induced_heating_double_limit(unit, s).Gamma_b;
  return induced_heating_rlc(unit, s);
}

double strong_coupling_boundary(double g1_bare, double gamma_t) {
  if (!(gamma_t > 0)) {
    throw Error(ErrorKind::kDomain, "strong_coupling_boundary: gamma_t <= 0");
  }
  return g1_bare / gamma_t - 1;
}

ExperimentPlan plan_experiment(const Setup& s, const PlanTargets& tg) {
  validate(tg);
  ExperimentPlan p;
  p.g1 = s.couplings.g1;
  p.g2 = s.couplings.g2;
  p.gamma_t = s.rates.gamma_t;
  p.gamma_b = s.gamma_b();
  p.n_m = s.n_m();
  p.strong_coupling = p.g1 >= p.gamma_t;
  p.lambda = lambda_family(s).lambda;
  double k = heating_per_photon(s);
  double c = damping_per_flux(s);
  double gb = p.gamma_b;
  auto infeasible = [&](const std::string& why) {
    p.feasible = false;
    p.infeasibility = why;
    return p;
  };

  double el = 0, T = 0;
  if (tg.balance) {
    if (!(gb * p.n_m > 0)) {
      return infeasible("balance needs gamma_b > 0 and n_m > 0");
    }
    el = *tg.delta_nb / 2;
    T = el / (gb * p.n_m);
  } else if (tg.delta_nb && tg.T) {
    el = *tg.delta_nb;
    T = *tg.T;
  } else if (tg.delta_nb && tg.N_e) {
    el = *tg.delta_nb;
    if (el == 0) return infeasible("N_e is undetermined without drive");
    if (!(k > 0)) return infeasible("no electrical heating channel");
    if (!(*tg.N_e > 0)) return infeasible("N_e = 0 needs infinite T");
    if (!(gb > 0)) return infeasible("gamma_b = 0: N_e does not fix T");
    double rest = el / *tg.N_e - c * el / k;
    if (!(rest > 0)) {
      return infeasible("N_e unreachable: drive damping alone exceeds it");
    }
    T = rest / gb;
  } else {
    double Ne = *tg.N_e;
    T = *tg.T;
    if (Ne > 0 && !(k > 0)) return infeasible("no electrical heating channel");
    double denom = Ne > 0 ? 1 - Ne * c / k : 1;
    if (!(denom > 0)) {
      return infeasible("N_e unreachable: drive damping caps it below target");
    }
    el = Ne * gb * T / denom;
  }
  if (el > 0 && !(k > 0)) return infeasible("no electrical heating channel");

  p.T = T;
  p.alpha_sq_total = el > 0 ? el / k : 0;
  p.no_qnd = p.alpha_sq_total == 0;
  p.flux = p.alpha_sq_total / T;
  p.P_in = kHbar * s.rates.omega_s * p.flux;
  p.intracavity_photons = p.flux / p.gamma_t;
  p.delta_nb_electrical = el;
  p.delta_nb_mechanical = gb * p.n_m * T;
  p.delta_nb_total = el + p.delta_nb_mechanical;
  double rate = gb + c * p.flux;
  p.N_e = rate > 0 ? el / (rate * T) : 0;
  if (p.no_qnd) {
    p.lambda_prime = 0;
    p.N_eff = p.n_m;
    return p;
  }
  DeltaNb dn;
  dn.electrical = el;
  dn.mechanical = p.delta_nb_mechanical;
  dn.total = p.delta_nb_total;
  auto lp = lambda_prime_and_occupation(p.lambda, dn, T, gb, c * p.flux, p.n_m);
  p.lambda_prime = lp.lambda_prime;
  p.N_eff = lp.N_eff;
  return p;
}

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "Cs_over_C0") return SweepAxis::kCsOverC0;
  if (name == "Q") return SweepAxis::kQ;
  if (name == "gr_over_g1") return SweepAxis::kGrOverG1;
  if (name == "lambda_prime") return SweepAxis::kLambdaPrime;
  if (name == "n_bar_m") return SweepAxis::kNBarM;
  throw Error(ErrorKind::kConfig, "sweep: unknown axis '" + name + "'");
}

std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::kCsOverC0: return "Cs_over_C0";
    case SweepAxis::kQ: return "Q";
    case SweepAxis::kGrOverG1: return "gr_over_g1";
    case SweepAxis::kLambdaPrime: return "lambda_prime";
    case SweepAxis::kNBarM: return "n_bar_m";
  }
  return "?";
}

namespace {

bool visibility_sweep(const std::vector<SweepGrid>& axes) {
  for (const auto& g : axes) {
    if (g.axis == SweepAxis::kLambdaPrime) return true;
  }
  return false;
}

const std::vector<std::string> kVisibilityColumns = {
    "N_eff", "delta_nb_opt", "xi_max", "xi_asymptotic", "delta_nb_sigma"};

const std::vector<std::string> kPlanColumns = {
    "g1", "g2", "g_r", "lambda", "lambda_b", "lambda_p", "alpha_sq", "flux",
    "T", "P_in", "intracavity_photons", "N_e", "delta_nb_electrical",
    "delta_nb_mechanical", "delta_nb_total", "lambda_prime", "N_eff",
    "strong_coupling", "feasible"};

SweepRow run_point(const SweepSpec& spec, const std::vector<double>& in) {
  SweepRow row;
  row.inputs = in;
  bool vis = visibility_sweep(spec.axes);
  const auto& names = vis ? kVisibilityColumns : kPlanColumns;
  try {
    if (vis) {
      double lp = 0, N = spec.N_eff;
      for (size_t i = 0; i < in.size(); ++i) {
        if (spec.axes[i].axis == SweepAxis::kLambdaPrime) lp = in[i];
        else if (spec.axes[i].axis == SweepAxis::kNBarM) N = in[i];
        else throw Error(ErrorKind::kConfig,
                         "sweep: lambda_prime combines with n_bar_m only");
      }
      auto r = optimize_delta_nb(lp, N, spec.method, spec.mc);
      double asym = lp > 1 ? asymptotic_visibility(lp, N) : kNaN;
      double sig = r.fit ? r.fit->delta_nb_sigma : kNaN;
      row.columns = {{"N_eff", N}, {"delta_nb_opt", r.delta_nb_opt},
                     {"xi_max", r.xi_max}, {"xi_asymptotic", asym},
                     {"delta_nb_sigma", sig}};
      return row;
    }
    DeviceTemplate dev = spec.device;
    for (size_t i = 0; i < in.size(); ++i) {
      switch (spec.axes[i].axis) {
        case SweepAxis::kCsOverC0: dev.Cs_over_C0 = in[i]; break;
        case SweepAxis::kQ:
          dev.membrane.quality_Q = in[i];
          dev.membrane.gamma_b.reset();
          break;
        case SweepAxis::kGrOverG1: dev.gr_over_g1 = in[i]; break;
        case SweepAxis::kNBarM:
          dev.membrane.n_bar_m = in[i];
          break;
        case SweepAxis::kLambdaPrime: break;
      }
    }
    Setup s = dev.build();
    auto lf = lambda_family(s);
    auto p = plan_experiment(s, spec.targets);
    row.columns = {{"g1", s.couplings.g1},
                   {"g2", s.couplings.g2},
                   {"g_r", s.couplings.g_r},
                   {"lambda", lf.lambda},
                   {"lambda_b", lf.lambda_b},
                   {"lambda_p", lf.lambda_p},
                   {"alpha_sq", p.alpha_sq_total},
                   {"flux", p.flux},
                   {"T", p.T},
                   {"P_in", p.P_in},
                   {"intracavity_photons", p.intracavity_photons},
                   {"N_e", p.N_e},
                   {"delta_nb_electrical", p.delta_nb_electrical},
                   {"delta_nb_mechanical", p.delta_nb_mechanical},
                   {"delta_nb_total", p.delta_nb_total},
                   {"lambda_prime", p.lambda_prime},
                   {"N_eff", p.N_eff},
                   {"strong_coupling", p.strong_coupling ? 1.0 : 0.0},
                   {"feasible", p.feasible ? 1.0 : 0.0}};
    if (!p.feasible) row.error = p.infeasibility;
  } catch (const std::exception& e) {
    row.columns.clear();
    for (const auto& n : names) row.columns.emplace_back(n, kNaN);
    row.error = e.what();
  }
  return row;
}

}  // namespace

std::vector<std::string> sweep_columns(const std::vector<SweepGrid>& axes) {
  std::vector<std::string> out;
  for (const auto& g : axes) out.push_back(to_string(g.axis));
  const auto& rest = visibility_sweep(axes) ? kVisibilityColumns : kPlanColumns;
  out.insert(out.end(), rest.begin(), rest.end());
  out.push_back("error");
  return out;
}

std::vector<SweepRow> sweep(const SweepSpec& spec, int threads) {
  if (spec.axes.empty() || spec.axes.size() > 2) {
    throw Error(ErrorKind::kConfig, "sweep: one or two axes");
  }
  size_t total = 1;
  for (const auto& g : spec.axes) {
    if (g.values.empty()) {
      throw Error(ErrorKind::kConfig, "sweep: empty grid for " + to_string(g.axis));
    }
    bool up = true, down = true;
    for (size_t i = 1; i < g.values.size(); ++i) {
      up = up && g.values[i] > g.values[i - 1];
      down = down && g.values[i] < g.values[i - 1];
    }
    if (!up && !down) {
      throw Error(ErrorKind::kConfig,
                  "sweep: grid for " + to_string(g.axis) + " is not monotone");
    }
    total *= g.values.size();
  }
  if (!visibility_sweep(spec.axes)) validate(spec.targets);
  std::vector<SweepRow> rows(total);
  parallel_for(total, resolve_threads(threads),
               [&](size_t b, size_t e, int) {
                 for (size_t i = b; i < e; ++i) {
                   std::vector<double> in;
                   size_t rem = i;
                   std::vector<size_t> idx(spec.axes.size());
                   for (size_t a = spec.axes.size(); a-- > 0;) {
                     idx[a] = rem % spec.axes[a].values.size();
                     rem /= spec.axes[a].values.size();
                   }
                   for (size_t a = 0; a < idx.size(); ++a) {
                     in.push_back(spec.axes[a].values[idx[a]]);
                   }
                   rows[i] = run_point(spec, in);
                 }
               });
  return rows;
}

}  // namespace qnd
