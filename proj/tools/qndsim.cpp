#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qndsim/config.hpp"
#include "qndsim/errors.hpp"
#include "qndsim/fourier.hpp"
#include "qndsim/io.hpp"
#include "qndsim/linear_model.hpp"
#include "qndsim/measure.hpp"
#include "qndsim/metrics.hpp"
#include "qndsim/parallel.hpp"
#include "qndsim/plan.hpp"
#include "qndsim/unbalanced.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qnd;

namespace {

using Rows = std::vector<std::vector<CsvCell>>;

double hz(double omega) { return omega / kTwoPi; }

double rel_err(double sim, double ref) {
  return ref != 0 ? std::abs(sim - ref) / std::abs(ref) : std::abs(sim);
}

// Everything computed first, then written, so a failing run leaves no files.
struct Artifacts {
  std::vector<std::pair<std::string, std::pair<std::vector<std::string>, Rows>>>
      csv;
  std::vector<std::pair<std::string, json>> js;

  void add_csv(std::string name, std::vector<std::string> header, Rows rows) {
    csv.push_back({std::move(name), {std::move(header), std::move(rows)}});
  }
  void add_json(std::string name, json j) {
    js.push_back({std::move(name), std::move(j)});
  }
};

struct Context {
  RunConfig cfg;
  int threads = 1;
  std::uint64_t seed = 1;
  Artifacts out;
};

template <typename T>
const T& need(const std::optional<T>& x, const char* section) {
  if (!x) {
    throw Error(ErrorKind::kConfig,
                std::string("config: section '") + section + "' is required");
  }
  return *x;
}

void run_metrics(Context& c) {
  Setup s = c.cfg.setup();
  auto m = merit_report(c.cfg.drive, s);
  json j;
  std::vector<std::pair<std::string, std::optional<double>>> fields = {
      {"lambda", m.lambda},
      {"lambda_b", m.lambda_b},
      {"lambda_p", m.lambda_p},
      {"lambda_hybridized", m.lambda_hybridized},
      {"lambda_prime", m.lambda_prime},
      {"N_eff", m.N_eff},
      {"N_e_effective", m.N_e_effective},
      {"d", m.d},
      {"sigma", m.sigma},
      {"D_sq", m.D_sq},
      {"Gamma_b", m.Gamma_b},
      {"Gamma_b_tilde", m.Gamma_b_tilde},
      {"omega_b_shift", m.omega_b_shift},
      {"delta_nb_electrical", m.delta_nb_electrical},
      {"delta_nb_mechanical", m.delta_nb_mechanical},
      {"two_phonon_rate", m.two_phonon_rate},
      {"g1", s.couplings.g1},
      {"g2", s.couplings.g2},
      {"g_r", s.couplings.g_r},
      {"omega_s", s.rates.omega_s},
      {"gamma_t", s.rates.gamma_t},
      {"gamma_r", s.rates.gamma_r},
      {"gamma_b", s.gamma_b()},
      {"n_e", s.n_e()},
      {"n_m", s.n_m()}};
  Rows rows;
  for (const auto& [k, v] : fields) {
    if (!v) continue;  // absent, not zero
    j[k] = json_number(*v);
    rows.push_back({k, *v});
  }
  j["warnings"] = warnings(s.membrane);
  c.out.add_json("merit_report.json", j);
  c.out.add_csv("metrics.csv", {"quantity", "value"}, std::move(rows));
  std::cout << "lambda = " << format_double(m.lambda) << '\n'
            << "lambda_b = " << format_double(m.lambda_b) << '\n'
            << "lambda_p = " << format_double(m.lambda_p) << '\n'
            << "lambda_prime = "
            << (m.lambda_prime ? format_double(*m.lambda_prime) : "absent")
            << '\n';
}

void run_heat(Context& c) {
  const auto& h = need(c.cfg.heat, "heat");
  Setup base = c.cfg.setup();
  std::vector<double> g1s = h.g1;
  if (g1s.empty()) g1s.push_back(base.couplings.g1);
  auto t = linspace(0, h.t_end, h.points);
  bool oracle = h.oracle && !base.double_arm();
  Rows rows, summary;
  for (double g1 : g1s) {
    Setup s = base;
    s.couplings.g1 = g1;
    auto an = phonon_trajectory_analytic(t, h.scenario, c.cfg.drive, s, h.n_b0);
    std::vector<double> sim(t.size(), kNaN);
    double commutator = kNaN;
    if (oracle) {
      auto model = rlc_oracle_model(c.cfg.drive, s);
      auto init = thermal_covariance({s.n_e(), h.n_b0});
      auto sol = covariance_evolve(model, t, init);
      sim = sol.solution.n_b;
      commutator = sol.commutator_drift;
    }
    double worst = 0;
    for (size_t i = 0; i < t.size(); ++i) {
      double e = oracle && t[i] > 0 ? rel_err(sim[i], an[i]) : kNaN;
      if (oracle && t[i] > 0) worst = std::max(worst, e);
      rows.push_back({hz(g1), t[i], sim[i], an[i], e});
    }
    summary.push_back({hz(g1), oracle ? worst : kNaN, commutator});
    std::cout << "heat g1/2pi=" << format_double(hz(g1))
              << " max_rel_err=" << format_double(oracle ? worst : kNaN)
              << '\n';
  }
  c.out.add_csv("heat.csv", {"g1_hz", "t", "n_b_oracle", "n_b_analytic", "rel_err"},
                std::move(rows));
  c.out.add_csv("heat_summary.csv", {"g1_hz", "max_rel_err", "commutator_drift"},
                std::move(summary));
}

void run_fourier(Context& c) {
  const auto& f = need(c.cfg.fourier, "fourier");
  Setup base = c.cfg.setup();
  std::vector<double> g1s = f.g1;
  if (g1s.empty()) g1s.push_back(base.couplings.g1);
  FourierTruncation tr = f.truncation;
  if (f.tau_over_gamma_b) tr.tau = *f.tau_over_gamma_b / base.gamma_b();
  Rows traj, rows;
  for (double g1 : g1s) {
    Setup s = base;
    s.couplings.g1 = g1;
    auto r = fourier_heating_solve(s, c.cfg.drive, tr, f.options);
    const auto& sol = r.solution;
    double Gb = induced_heating_double_limit(c.cfg.drive, s).Gamma_b;
    double rate = s.gamma_b() + Gb;
    double th_an = std::log(2.0) / rate;
    double nss_an = phonon_trajectory_analytic({50 / rate}, Scenario::kDoubleArm,
                                               c.cfg.drive, s, f.options.n_b0)[0];
    double nj_diff = kNaN;
    if (f.compare_N_j) {
      FourierTruncation t2 = tr;
      t2.N_j = *f.compare_N_j;
      FourierOptions o2 = f.options;
      o2.check_refinement = false;
      auto r2 = fourier_heating_solve(s, c.cfg.drive, t2, o2);
      nj_diff = rel_err(r2.solution.n_b_steady, sol.n_b_steady);
    }
    for (size_t i = 0; i < sol.t.size(); ++i) {
      traj.push_back({hz(g1), sol.t[i], sol.n_b[i]});
    }
    rows.push_back({hz(g1), sol.T_half, th_an, rel_err(sol.T_half, th_an),
                    sol.n_b_steady, nss_an, rel_err(sol.n_b_steady, nss_an),
                    r.diagnostics.residual, nj_diff,
                    static_cast<double>(r.diagnostics.unknowns)});
    for (const auto& w : sol.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "fourier g1/2pi=" << format_double(hz(g1))
              << " T_half rel_err=" << format_double(rel_err(sol.T_half, th_an))
              << " n_ss rel_err="
              << format_double(rel_err(sol.n_b_steady, nss_an)) << '\n';
  }
  c.out.add_csv("fourier.csv", {"g1_hz", "t", "n_b"}, std::move(traj));
  c.out.add_csv("T_half.csv",
                {"g1", "T_half_sim", "T_half_analytic", "rel_err", "n_ss_sim",
                 "n_ss_analytic", "n_ss_rel_err", "residual", "N_j_rel_diff",
                 "unknowns"},
                std::move(rows));
}

void run_asym(Context& c) {
  const auto& a = need(c.cfg.asym, "asym");
  Setup base = c.cfg.setup();
  double g1 = base.couplings.g1;
  Rows rows, traj;
  for (const auto& tr : a.triples) {
    for (double gr : a.gr_over_g1) {
      CircuitSpec circ = base.circuit;
      circ.delta_L = tr.dL * circ.parasitic_L;
      circ.delta_R = tr.dR * circ.parasitic_R;
      circ.delta_C = tr.dC * circ.C0;
      Couplings cp = base.couplings;
      cp.g_r = gr * g1;
      cp.delta_g1 = (gr * g1 - 2 * g1 * tr.dC) / (1 + tr.dC * tr.dC);
      Setup s = make_setup(circ, cp, base.membrane);
      UnbalancedOptions o = a.options;
      if (o.slope_t1 && a.time_points >= 2) {
        o.times = linspace(0, *o.slope_t1, a.time_points);
      }
      auto r = unbalanced_simulate(s, c.cfg.drive, o);
      double h_an = analytic_heating_rate(s, c.cfg.drive);
      const auto& sol = r.solution;
      rows.push_back({gr, tr.dL, tr.dR, tr.dC, cp.delta_g1 / g1, sol.h, h_an,
                      rel_err(sol.h, h_an), hz(r.drive_frequency)});
      for (size_t i = 0; i < sol.t.size(); ++i) {
        traj.push_back({gr, tr.dL, tr.dR, tr.dC, sol.t[i], sol.n_b[i]});
      }
      for (const auto& w : sol.warnings) std::cerr << "warning: " << w << '\n';
      std::cout << "asym gr/g1=" << format_double(gr) << " (" << tr.dL << ","
                << tr.dR << "," << tr.dC << ") h=" << format_double(sol.h)
                << " analytic=" << format_double(h_an) << '\n';
    }
  }
  c.out.add_csv("asym.csv",
                {"gr_over_g1", "dL_rel", "dR_rel", "dC_rel", "dg1_over_g1",
                 "h_sim", "h_analytic", "rel_err", "drive_hz"},
                std::move(rows));
  c.out.add_csv("asym_traj.csv",
                {"gr_over_g1", "dL_rel", "dR_rel", "dC_rel", "t", "n_b"},
                std::move(traj));
}

void run_measure(Context& c) {
  const auto& m = need(c.cfg.measure, "measure");
  double dn = m.delta_nb ? *m.delta_nb
                         : optimize_delta_nb(m.lambda_prime, m.n_bar,
                                             OptimizationMethod::kAnalyticPdf)
                               .delta_nb_opt;
  auto cfg = MeasurementConfig::from_lambda(m.lambda_prime, m.n_bar, dn);
  cfg.n_windows = m.windows;
  cfg.segments_per_window = m.segments;
  cfg.cutoff = m.cutoff;
  cfg.seed = c.seed;
  auto mc = mc_sample_outcomes(cfg, c.threads, true);
  auto comps = pdf_components(cfg.n_bar, cfg.delta_nb, cfg.cutoff);
  double ks = ks_distance(mc.samples, [&](double v) {
    return cdf_value(v, comps, cfg.D);
  });
  const auto& h = mc.histogram;
  auto vh = visibility(h, cfg.D);
  auto va = visibility([&](double v) { return pdf_value(v, comps, cfg.D); },
                       cfg.D);
  Rows rows;
  for (size_t i = 0; i < h.counts.size(); ++i) {
    rows.push_back({h.left(i), h.right(i), static_cast<double>(h.counts[i]),
                    h.density(i), h.poisson_err(i),
                    pdf_value(h.centre(i), comps, cfg.D)});
  }
  c.out.add_csv("histogram.csv",
                {"left", "right", "count", "density", "density_err",
                 "pdf_analytic"},
                std::move(rows));
  json j = {{"lambda_prime", cfg.lambda_prime},
            {"n_bar", cfg.n_bar},
            {"delta_nb", cfg.delta_nb},
            {"D", cfg.D},
            {"windows", cfg.n_windows},
            {"segments_per_window", cfg.segments_per_window},
            {"ks_distance", ks},
            {"xi_histogram", json_number(vh.xi)},
            {"xi_histogram_err", json_number(vh.xi_uncertainty)},
            {"xi_analytic", json_number(va.xi)},
            {"degenerate", vh.degenerate},
            {"interior_valley", vh.interior_valley},
            {"outside", h.outside},
            {"cutoff_hits", h.cutoff_hits}};
  c.out.add_json("measure.json", j);
  std::cout << "measure D=" << format_double(cfg.D)
            << " ks=" << format_double(ks) << " xi=" << format_double(vh.xi)
            << '\n';
}

void run_optimize(Context& c) {
  const auto& o = need(c.cfg.optimize, "optimize");
  McFitOptions mc = o.mc;
  mc.seed = c.seed;
  mc.threads = c.threads;
  Rows rows, pts;
  for (double lp : o.lambda_prime) {
    auto r = optimize_delta_nb(lp, o.N_eff, o.method, mc);
    double sig = r.fit ? r.fit->delta_nb_sigma : kNaN;
    double chi2 = r.fit ? r.fit->chi2 : kNaN;
    rows.push_back({lp, o.N_eff,
                    std::string(r.method == OptimizationMethod::kAnalyticPdf
                                    ? "analytic"
                                    : "mc"),
                    r.delta_nb_opt, r.xi_max, sig,
                    asymptotic_visibility(lp, o.N_eff), chi2});
    if (r.fit) {
      for (size_t i = 0; i < r.fit->delta_nb.size(); ++i) {
        pts.push_back({lp, r.fit->delta_nb[i], r.fit->xi[i], r.fit->xi_err[i],
                       r.fit->residuals[i]});
      }
    }
    std::cout << "optimize lambda'=" << format_double(lp)
              << " dn_opt=" << format_double(r.delta_nb_opt)
              << " xi=" << format_double(r.xi_max) << '\n';
  }
  c.out.add_csv("optimum.csv",
                {"lambda_prime", "N_eff", "method", "delta_nb_opt", "xi_max",
                 "delta_nb_sigma", "xi_asymptotic", "chi2"},
                std::move(rows));
  if (o.method == OptimizationMethod::kMonteCarloPolyFit) {
    c.out.add_csv("fit_points.csv",
                  {"lambda_prime", "delta_nb", "xi", "xi_err", "residual"},
                  std::move(pts));
  }
}

void run_plan(Context& c) {
  const auto& t = need(c.cfg.plan, "plan");
  Setup s = c.cfg.setup();
  auto p = plan_experiment(s, t);
  std::vector<std::pair<std::string, double>> f = {
      {"alpha_sq_total", p.alpha_sq_total},
      {"flux", p.flux},
      {"T", p.T},
      {"P_in", p.P_in},
      {"intracavity_photons", p.intracavity_photons},
      {"N_e", p.N_e},
      {"delta_nb_electrical", p.delta_nb_electrical},
      {"delta_nb_mechanical", p.delta_nb_mechanical},
      {"delta_nb_total", p.delta_nb_total},
      {"lambda", p.lambda},
      {"lambda_prime", p.lambda_prime},
      {"N_eff", p.N_eff},
      {"g1", p.g1},
      {"g2", p.g2},
      {"gamma_t", p.gamma_t},
      {"gamma_b", p.gamma_b},
      {"n_m", p.n_m},
      {"Cs_over_C0_strong_coupling",
       strong_coupling_boundary(c.cfg.device.bare.g1, p.gamma_t)}};
  json j;
  std::vector<std::string> header;
  std::vector<CsvCell> row;
  for (const auto& [k, v] : f) {
    j[k] = json_number(v);
    header.push_back(k);
    row.push_back(v);
  }
  j["feasible"] = p.feasible;
  j["infeasibility"] = p.infeasibility;
  j["no_qnd"] = p.no_qnd;
  j["strong_coupling"] = p.strong_coupling;
  header.push_back("feasible");
  row.push_back(p.feasible ? 1.0 : 0.0);
  header.push_back("infeasibility");
  row.push_back(p.infeasibility);
  c.out.add_json("plan.json", j);
  c.out.add_csv("plan.csv", header, {row});
  if (!p.feasible) std::cout << "plan infeasible: " << p.infeasibility << '\n';
  std::cout << "plan T=" << format_double(p.T)
            << " alpha_sq=" << format_double(p.alpha_sq_total)
            << " P_in=" << format_double(p.P_in) << '\n';
}

void run_sweep(Context& c) {
  const auto& sw = need(c.cfg.sweep, "sweep");
  SweepSpec spec;
  spec.device = c.cfg.device;
  spec.axes = sw.axes;
  spec.N_eff = sw.N_eff;
  spec.method = sw.method;
  spec.mc = sw.mc;
  spec.mc.seed = c.seed;
  bool vis = false;
  for (const auto& g : sw.axes) vis = vis || g.axis == SweepAxis::kLambdaPrime;
  if (!vis) spec.targets = need(c.cfg.plan, "plan");
  // Points run concurrently; each MC point stays single threaded.
  spec.mc.threads = 1;
  auto rows = sweep(spec, c.threads);
  Rows out;
  size_t failed = 0;
  for (const auto& r : rows) {
    std::vector<CsvCell> row;
    for (double x : r.inputs) row.push_back(x);
    for (const auto& [k, v] : r.columns) row.push_back(v);
    row.push_back(r.error);
    if (!r.error.empty()) ++failed;
    out.push_back(std::move(row));
  }
  c.out.add_csv(vis ? "visibility.csv" : "sweep.csv", sweep_columns(sw.axes),
                std::move(out));
  std::cout << "sweep rows=" << rows.size() << " failed=" << failed << '\n';
}

int execute(const std::string& sub, const std::string& config_path,
            const std::string& out_flag, std::optional<std::uint64_t> seed,
            int threads_flag) {
  auto start = std::chrono::steady_clock::now();
  Context c;
  c.cfg = load_config_file(config_path);
  c.seed = seed.value_or(c.cfg.seed);
  c.threads = resolve_threads(threads_flag > 0 ? threads_flag : c.cfg.threads);
  std::string out = out_flag.empty() ? c.cfg.out_dir : out_flag;

  if (sub == "metrics") run_metrics(c);
  else if (sub == "heat") run_heat(c);
  else if (sub == "fourier") run_fourier(c);
  else if (sub == "asym") run_asym(c);
  else if (sub == "measure") run_measure(c);
  else if (sub == "optimize") run_optimize(c);
  else if (sub == "plan") run_plan(c);
  else if (sub == "sweep") run_sweep(c);

  Manifest man;
  man.subcommand = sub;
  man.config = c.cfg.raw;
  man.config.erase("threads");
  man.config.erase("out");
  man.seed = c.seed;
  man.threads = c.threads;
  std::string hash = man.hash();

  fs::create_directories(out);
  for (const auto& [name, t] : c.out.csv) {
    write_csv((fs::path(out) / name).string(), hash, t.first, t.second);
    man.artifacts.push_back(name);
  }
  for (const auto& [name, j] : c.out.js) {
    json jj = j;
    jj["manifest_hash"] = hash;
    write_json((fs::path(out) / name).string(), jj);
    man.artifacts.push_back(name);
  }
  man.wall_time_s = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - start)
                        .count();
  write_json((fs::path(out) / "manifest.json").string(), man.to_json());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phonon-number readout simulation and planning"};
  app.require_subcommand(1);
  std::string config, out;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  const std::vector<std::pair<std::string, std::string>> subs = {
      {"metrics", "closed-form figures of merit"},
      {"heat", "covariance oracle vs analytic heating"},
      {"fourier", "sideband Fourier solver for the balanced circuit"},
      {"asym", "time-domain heating of the asymmetric circuit"},
      {"measure", "Monte-Carlo outcome histogram"},
      {"optimize", "visibility-optimal heating per window"},
      {"plan", "photon budget, power and window length"},
      {"sweep", "parameter sweeps over plans or visibility"}};
  for (const auto& [name, help] : subs) {
    auto* s = app.add_subcommand(name, help);
    s->add_option("--config", config, "JSON run configuration")->required();
    s->add_option("--out", out, "output directory");
    s->add_option("--seed", seed, "RNG seed (overrides the config)");
    s->add_option("--threads", threads, "worker threads");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  std::string sub = app.get_subcommands().front()->get_name();
  try {
    return execute(sub, config, out, seed, threads);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
