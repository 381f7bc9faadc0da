#pragma once

#include <optional>
#include <vector>

#include "qndsim/metrics.hpp"
#include "qndsim/trajectory.hpp"

namespace qnd {

struct UnbalancedOptions {
  std::vector<double> times;  // output times; a default grid when empty
  int steps_per_period = 2000;
  double average_periods = 10;  // mechanical periods averaged per sample
  std::optional<double> slope_t0;
  std::optional<double> slope_t1;
  bool track_resonance = true;  // drive at the shifted electrical resonance
  double n_b0 = 0;
};

struct UnbalancedResult {
  DynamicsSolution solution;
  double drive_frequency = 0;
  double slope_t0 = 0;
  double slope_t1 = 0;
};

// Time-domain linearised circuit with all arm asymmetries. The classical
// electrical means oscillate at the drive; fluctuations are propagated
// exactly over one drive period (4th order Magnus, Van Loan exponential) and
// the period map is raised to the needed powers.
UnbalancedResult unbalanced_simulate(const Setup& s, const DriveSpec& drive,
                                     const UnbalancedOptions& opts = {});

// Closed-form heating rate for the same setup: the initial slope of the
// combined trajectory, Gamma_b omega_s/(2 omega_m) + Gamma_tilde_b, times
// (1 + 2 n_e), plus gamma_b n_m.
double analytic_heating_rate(const Setup& s, const DriveSpec& drive);

}  // namespace qnd
