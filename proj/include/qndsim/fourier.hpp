#pragma once

#include <optional>
#include <vector>

#include "qndsim/metrics.hpp"
#include "qndsim/trajectory.hpp"

namespace qnd {

struct FourierTruncation {
  int N_j = 2;    // sideband order, even
  int N_f = 800;  // comb half-width per sideband
  std::optional<double> tau;  // default 10 * max(1/gamma_b, T)
};

struct FourierOptions {
  double n_b0 = 0;
  int samples = 80;             // reconstruction points in (0, tau/2]
  bool check_refinement = true; // re-solve at 2 N_f and compare
};

struct FourierDiagnostics {
  int unknowns = 0;
  double residual = 0;       // max normwise backward error over the solves
  double tau = 0;
  double centre = 0;         // comb centre (dressed, snapped), rad/s
  double dressed_shift = 0;  // centre - omega_m before snapping
  double dressed_damping = 0;
  std::optional<double> refined_steady;  // steady state at 2 N_f
};

struct FourierResult {
  DynamicsSolution solution;
  FourierDiagnostics diagnostics;
};

// Balanced double arm driven at omega_s with constant flux. Throws kConfig on
// asymmetric circuits or odd N_j, kNumeric if the sparse factorisation fails.
FourierResult fourier_heating_solve(const Setup& s, const DriveSpec& drive,
                                    const FourierTruncation& trunc,
                                    const FourierOptions& opts = {});

}  // namespace qnd
