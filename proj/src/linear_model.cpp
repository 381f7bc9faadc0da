#include "qndsim/linear_model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>
#include <unsupported/Eigen/MatrixFunctions>

#include "qndsim/errors.hpp"

namespace qnd {

LinearModel::LinearModel(std::vector<std::string> labels)
    : modes(std::move(labels)) {
  int n = 2 * static_cast<int>(modes.size());
  drift = Eigen::MatrixXd::Zero(n, n);
  diffusion = Eigen::MatrixXd::Zero(n, n);
  commutator_injection = Eigen::MatrixXd::Zero(n, n);
}

void LinearModel::add_channel(int mode, double rate, double occupation) {
  if (rate < 0 || occupation < 0) {
    throw Error(ErrorKind::kConfig, "noise channel: rate and n must be >= 0");
  }
  int i = 2 * mode;
  drift(i, i) -= rate / 2;
  drift(i + 1, i + 1) -= rate / 2;
  diffusion(i, i) += rate * (occupation + 0.5);
  diffusion(i + 1, i + 1) += rate * (occupation + 0.5);
  commutator_injection(i, i + 1) += rate / 2;
  commutator_injection(i + 1, i) -= rate / 2;
}

void LinearModel::add_rotation(int mode, double omega) {
  int i = 2 * mode;
  drift(i, i + 1) += omega;
  drift(i + 1, i) -= omega;
}

Eigen::MatrixXd canonical_commutator(int modes) {
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(2 * modes, 2 * modes);
  for (int m = 0; m < modes; ++m) {
    K(2 * m, 2 * m + 1) = 0.5;
    K(2 * m + 1, 2 * m) = -0.5;
  }
  return K;
}

Eigen::MatrixXd thermal_covariance(const std::vector<double>& occupations) {
  int n = static_cast<int>(occupations.size());
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (int m = 0; m < n; ++m) {
    S(2 * m, 2 * m) = S(2 * m + 1, 2 * m + 1) = occupations[m] + 0.5;
  }
  return S;
}

double mode_occupation(const Eigen::MatrixXd& S, int mode) {
  int i = 2 * mode;
  return 0.5 * (S(i, i) + S(i + 1, i + 1)) - 0.5;
}

bool check_stability(const Eigen::MatrixXd& A) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  double scale = A.cwiseAbs().maxCoeff();
  double tol = 1e-13 * std::max(scale, 1.0);
  bool marginal = false;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    auto ev = es.eigenvalues()(i);
    if (ev.real() > tol) {
      std::ostringstream msg;
      msg << "unstable drift: eigenvalue " << ev.real() << " + "
          << ev.imag() << "i";
      throw Error(ErrorKind::kNumeric, msg.str());
    }
    if (ev.real() > -tol) marginal = true;
  }
  return marginal;
}

Eigen::MatrixXd lyapunov_solve(const Eigen::MatrixXd& A,
                               const Eigen::MatrixXd& D) {
  int n = static_cast<int>(A.rows());
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd K(n * n, n * n);
  // vec(A S + S A^T) = (I kron A + A kron I) vec(S), column-major vec.
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      K.block(i * n, j * n, n, n) = I(i, j) * A + A(i, j) * I;
    }
  }
  Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(D.data(), n * n);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
  if (!lu.isInvertible()) {
    throw Error(ErrorKind::kNumeric, "lyapunov_solve: singular operator");
  }
  Eigen::VectorXd x = lu.solve(rhs);
  Eigen::MatrixXd S = Eigen::Map<Eigen::MatrixXd>(x.data(), n, n);
  return 0.5 * (S + S.transpose());
}

StepMap step_map(const Eigen::MatrixXd& A, const Eigen::MatrixXd& D,
                 double h) {
  // The block exponential cancels e^{+Ah} against e^{-Ah}; keep the
  // substep short and double up to h.
  double scale = A.cwiseAbs().colwise().sum().maxCoeff() * h;
  if (scale > 1) {
    int k = static_cast<int>(std::ceil(std::log2(scale)));
    StepMap m = step_map(A, D, std::ldexp(h, -k));
    for (int i = 0; i < k; ++i) m = compose(m, m);
    return m;
  }
  int n = static_cast<int>(A.rows());
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  B.topLeftCorner(n, n) = -A * h;
  B.topRightCorner(n, n) = D * h;
  B.bottomRightCorner(n, n) = A.transpose() * h;
  Eigen::MatrixXd E = B.exp();
  StepMap m;
  m.F = E.bottomRightCorner(n, n).transpose();
  m.Q = m.F * E.topRightCorner(n, n);
  return m;
}

StepMap compose(const StepMap& first, const StepMap& second) {
  StepMap m;
  m.F = second.F * first.F;
  m.Q = second.F * first.Q * second.F.transpose() + second.Q;
  return m;
}

namespace {

// Largest decay time scale of the drift (inf for marginal modes).
double slowest_rate(const Eigen::MatrixXd& A) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  double slow = kInf;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    slow = std::min(slow, -es.eigenvalues()(i).real());
  }
  return slow;
}

}  // namespace

Eigen::MatrixXd steady_covariance_doubling(const LinearModel& model) {
  if (check_stability(model.drift)) {
    throw Error(ErrorKind::kNumeric, "no steady state: marginal drift");
  }
  double fast = model.drift.cwiseAbs().rowwise().sum().maxCoeff();
  double slow = slowest_rate(model.drift);
  StepMap m = step_map(model.drift, model.diffusion, 0.5 / fast);
  double reached = 0.5 / fast;
  for (int k = 0; k < 200; ++k) {
    m = compose(m, m);
    reached *= 2;
    if (reached * slow > 80 && m.F.norm() < 1e-30) break;
  }
  return m.Q;
}

CovarianceSolution covariance_evolve(const LinearModel& model,
                                     const std::vector<double>& t_grid,
                                     const Eigen::MatrixXd& initial) {
  int n = model.dim();
  if (initial.rows() != n || initial.cols() != n) {
    throw Error(ErrorKind::kConfig, "covariance_evolve: bad initial size");
  }
  bool marginal = check_stability(model.drift);
  CovarianceSolution out;
  auto& sol = out.solution;
  sol.t = t_grid;
  sol.n_b.resize(t_grid.size());

  Eigen::MatrixXd S = initial;
  Eigen::MatrixXd K = canonical_commutator(n / 2);
  const Eigen::MatrixXd K0 = K;
  StepMap sm, km;
  double cached = -1;
  for (size_t i = 0; i < t_grid.size(); ++i) {
    if (i > 0) {
      double h = t_grid[i] - t_grid[i - 1];
      if (h < 0) {
        throw Error(ErrorKind::kDomain, "covariance_evolve: grid decreasing");
      }
      if (std::abs(h - cached) > 1e-12 * h) {
        sm = step_map(model.drift, model.diffusion, h);
        km = step_map(model.drift, model.commutator_injection, h);
        cached = h;
      }
      S = sm.F * S * sm.F.transpose() + sm.Q;
      S = 0.5 * (S + S.transpose()).eval();
      K = km.F * K * km.F.transpose() + km.Q;
      out.commutator_drift =
          std::max(out.commutator_drift, (K - K0).cwiseAbs().maxCoeff());
    }
    sol.n_b[i] = mode_occupation(S, model.observed);
  }
  out.final_covariance = S;
  if (marginal) {
    sol.n_b_steady = kInf;
    sol.T_half = std::numeric_limits<double>::quiet_NaN();
  } else {
    out.steady_covariance = steady_covariance_doubling(model);
    sol.n_b_steady = mode_occupation(out.steady_covariance, model.observed);
    sol.T_half = crossing_time(sol.t, sol.n_b, sol.n_b_steady / 2);
  }
  if (sol.t.size() >= 2) {
    size_t k = std::min<size_t>(sol.t.size() - 1, 5);
    sol.h = fitted_slope(sol.t, sol.n_b, sol.t[0], sol.t[k]);
  }
  return out;
}

LinearModel rlc_oracle_model(const DriveSpec& drive, const Setup& s) {
  LinearModel m({"electrical", "mechanical"});
  m.observed = 1;
  double kappa = s.gamma();
  m.add_channel(0, kappa, s.n_e());
  m.add_rotation(1, s.omega_m());
  m.add_channel(1, s.gamma_b(), s.n_m());
  double G = 0;
  if (drive.has_photons()) {
    G = s.couplings.g1 * std::sqrt(drive.photons()) / kappa *
        std::sqrt(s.rates.gamma_t / drive.time());
  }
  // H = -2 hbar G p_a x_b
  m.drift(0, 2) += -2 * G;
  m.drift(3, 1) += 2 * G;
  return m;
}

}  // namespace qnd
