#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "qndsim/metrics.hpp"
#include "qndsim/trajectory.hpp"

namespace qnd {

// Linear quantum Langevin model in quadrature form. Mode i owns the
// quadratures x_i = (c + c^dag)/sqrt2 and p_i = (c - c^dag)/(i sqrt2) at
// indices 2i and 2i+1. Second moments M = S + iK evolve as
//   dS/dt = A S + S A^T + D,   dK/dt = A K + K A^T + D_K.
struct LinearModel {
  std::vector<std::string> modes;
  Eigen::MatrixXd drift;
  Eigen::MatrixXd diffusion;
  Eigen::MatrixXd commutator_injection;
  int observed = 0;  // mode reported as n_b

  explicit LinearModel(std::vector<std::string> labels);

  int dim() const { return static_cast<int>(drift.rows()); }
  // Damped Markovian bath on one mode: drift -rate/2, noise rate (n + 1/2),
  // and the matching commutator injection.
  void add_channel(int mode, double rate, double occupation);
  // Free rotation at omega (x' = omega p, p' = -omega x).
  void add_rotation(int mode, double omega);
};

// Canonical commutator block matrix (K of any physical state).
Eigen::MatrixXd canonical_commutator(int modes);

// Vacuum-plus-thermal covariance with the given occupations per mode.
Eigen::MatrixXd thermal_covariance(const std::vector<double>& occupations);

// Throws kNumeric naming the eigenvalue if the drift has Re(lambda) > 0.
// Returns true if some eigenvalue sits on the imaginary axis.
bool check_stability(const Eigen::MatrixXd& drift);

// Solves A S + S A^T + D = 0 by a Kronecker-product LU.
Eigen::MatrixXd lyapunov_solve(const Eigen::MatrixXd& A,
                               const Eigen::MatrixXd& D);

// Exact one-step propagator: S(t+h) = F S F^T + Q.
struct StepMap {
  Eigen::MatrixXd F;
  Eigen::MatrixXd Q;
};
StepMap step_map(const Eigen::MatrixXd& A, const Eigen::MatrixXd& D, double h);
StepMap compose(const StepMap& first, const StepMap& second);

struct CovarianceSolution {
  DynamicsSolution solution;
  double commutator_drift = 0;  // max |K(t) - K(0)| over the grid
  Eigen::MatrixXd final_covariance;
  Eigen::MatrixXd steady_covariance;  // empty when unbounded
};

// Propagates the initial covariance over an increasing time grid starting at
// t_grid[0]. The steady state comes from repeated squaring of the step map.
CovarianceSolution covariance_evolve(const LinearModel& model,
                                     const std::vector<double>& t_grid,
                                     const Eigen::MatrixXd& initial);

// Steady covariance by step-map doubling (independent of lyapunov_solve).
Eigen::MatrixXd steady_covariance_doubling(const LinearModel& model);

// Single-arm circuit linearised about the drive: electrical fluctuation in
// the frame rotating at omega_s, membrane in the lab frame.
LinearModel rlc_oracle_model(const DriveSpec& drive, const Setup& s);

double mode_occupation(const Eigen::MatrixXd& S, int mode);

}  // namespace qnd
