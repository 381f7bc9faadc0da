#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qndsim/metrics.hpp"

namespace qnd {

enum class OptimizationMethod { kAnalyticPdf, kMonteCarloPolyFit };

struct McFitOptions {
  int grid_points = 13;
  double span_lo = 0.4;  // grid from span_lo to span_hi times the analytic optimum
  double span_hi = 2.5;
  long long n_windows = 100000;
  int segments_per_window = 64;
  int cutoff = 0;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct PolyFitDiagnostics {
  std::vector<double> delta_nb;   // grid
  std::vector<double> xi;         // histogram visibility per grid point
  std::vector<double> xi_err;
  double t_centre = 0;            // fit variable is ln(dn) - t_centre
  std::vector<double> coefficients;  // constant term first
  std::vector<double> residuals;     // (xi - fit) / xi_err
  double chi2 = 0;
  double delta_nb_sigma = 0;         // 1 sigma of the vertex, in dn
};

struct OptimizationResult {
  double delta_nb_opt = 0;
  double xi_max = 0;
  OptimizationMethod method = OptimizationMethod::kAnalyticPdf;
  std::optional<PolyFitDiagnostics> fit;
};

// Visibility of the analytic outcome density; -1 when there is no second
// peak to the right of the first.
double analytic_visibility(double lambda_prime, double N_eff, double delta_nb);

// Maximises the visibility over dn in [1e-5, 3]. The Monte-Carlo path seeds
// its grid from the analytic optimum. Throws kDomain for lambda' <= 1 and
// kConvergence when the quartic has no interior maximum.
OptimizationResult optimize_delta_nb(double lambda_prime, double N_eff,
                                     OptimizationMethod method,
                                     const McFitOptions& mc = {});

// A device before stray capacitance, so sweeps can vary C_s and g_r.
struct DeviceTemplate {
  CircuitSpec circuit;
  Couplings bare;           // couplings at C_s = 0
  double Cs_over_C0 = 0;
  std::optional<double> gr_over_g1;  // overrides the residual coupling
  MembraneSpec membrane;

  Setup build() const;
};

// Two of delta_nb (electrical), N_e and T fixed, the third solved for.
// `balance` instead takes delta_nb as the total and splits it equally
// between electrical and mechanical heating, which fixes T.
struct PlanTargets {
  std::optional<double> delta_nb;
  std::optional<double> N_e;
  std::optional<double> T;
  bool balance = false;
};

void validate(const PlanTargets& targets);

struct ExperimentPlan {
  bool feasible = true;
  std::string infeasibility;
  bool no_qnd = false;  // no drive, bath heating only
  double alpha_sq_total = 0;
  double flux = 0;
  double T = 0;
  double P_in = 0;
  double intracavity_photons = 0;
  double N_e = 0;
  double delta_nb_electrical = 0;
  double delta_nb_mechanical = 0;
  double delta_nb_total = 0;
  double lambda = 0;
  double lambda_prime = 0;
  double N_eff = 0;
  double g1 = 0;
  double g2 = 0;
  double gamma_t = 0;
  double gamma_b = 0;
  double n_m = 0;
  bool strong_coupling = false;  // g1 >= gamma_t
};

ExperimentPlan plan_experiment(const Setup& s, const PlanTargets& targets);

// Electrical heating per photon and Gamma_b per photon flux; both are
// independent of the window length.
double heating_per_photon(const Setup& s);
double damping_per_flux(const Setup& s);

// C_s/C0 below which g1 exceeds gamma_t.
double strong_coupling_boundary(double g1_bare, double gamma_t);

enum class SweepAxis { kCsOverC0, kQ, kGrOverG1, kLambdaPrime, kNBarM };

SweepAxis parse_sweep_axis(const std::string& name);
std::string to_string(SweepAxis axis);

struct SweepGrid {
  SweepAxis axis;
  std::vector<double> values;
};

struct SweepRow {
  std::vector<double> inputs;  // one per axis
  std::vector<std::pair<std::string, double>> columns;
  std::string error;  // empty on success
};

struct SweepSpec {
  DeviceTemplate device;
  PlanTargets targets;
  std::vector<SweepGrid> axes;  // one or two, cartesian, last axis fastest
  double N_eff = 1;             // for the lambda' axis
  OptimizationMethod method = OptimizationMethod::kAnalyticPdf;
  McFitOptions mc;
};

// Grids must be nonempty and strictly monotone (kConfig otherwise). Rows
// come back in grid order; per-point failures land in SweepRow::error.
std::vector<SweepRow> sweep(const SweepSpec& spec, int threads = 1);

// Column names a sweep over these axes produces.
std::vector<std::string> sweep_columns(const std::vector<SweepGrid>& axes);

}  // namespace qnd
