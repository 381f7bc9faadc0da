#include "qndsim/fourier.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>
#include <complex>
#include <sstream>

#include "qndsim/errors.hpp"

namespace qnd {
namespace {

using cd = std::complex<double>;
using SpMat = Eigen::SparseMatrix<cd>;
const cd kI(0, 1);

struct Physics {
  double ws = 0;  // snapped
  double wm = 0;  // bare
  double wa = 0;
  double gl = 0;
  double gb = 0;
  double G = 0;
  int K = 1;  // N_j / 2
};

// Equations of one positive-frequency comb column (fixed l) at centre Om.
Eigen::MatrixXcd sideband_block(const Physics& p, double Om) {
  int nk = 2 * p.K + 1;
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(4 * nk, 4 * nk);
  for (int i = 0; i < nk; ++i) {
    double O = Om + (i - p.K) * p.ws;
    M(4 * i, 4 * i) = -kI * O + kI * p.wa + p.gl / 2;
    M(4 * i, 4 * i + 1) = -p.gl / 2;
    M(4 * i + 1, 4 * i + 1) = -kI * O - kI * p.wa + p.gl / 2;
    M(4 * i + 1, 4 * i) = -p.gl / 2;
    M(4 * i + 2, 4 * i + 2) = -kI * O + kI * p.wm + p.gb / 2;
    M(4 * i + 3, 4 * i + 3) = -kI * O - kI * p.wm + p.gb / 2;
    for (auto [j, sg] : {std::pair{i - 1, 1.0}, std::pair{i + 1, -1.0}}) {
      if (j < 0 || j >= nk) continue;
      for (int q : {2, 3}) {
        M(4 * i, 4 * j + q) += -p.G * sg;
        M(4 * i + 1, 4 * j + q) += p.G * sg;
      }
      for (int q : {0, 1}) {
        M(4 * i + 2, 4 * j + q) += -p.G * sg;
        M(4 * i + 3, 4 * j + q) += p.G * sg;
      }
    }
  }
  return M;
}

// Fixed point Om = omega_m + Im Sigma(Om), Sigma the self-energy of b(k=0).
double dressed_frequency(const Physics& p, double* damping) {
  double Om = p.wm;
  int piv = 4 * p.K + 2;
  cd sigma = 0;
  for (int it = 0; it < 100; ++it) {
    Eigen::MatrixXcd M = sideband_block(p, Om);
    int n = static_cast<int>(M.rows());
    std::vector<int> rest;
    for (int q = 0; q < n; ++q) {
      if (q != piv) rest.push_back(q);
    }
    Eigen::MatrixXcd Mrr(n - 1, n - 1);
    Eigen::VectorXcd col(n - 1), row(n - 1);
    for (int a = 0; a < n - 1; ++a) {
      col(a) = M(rest[a], piv);
      row(a) = M(piv, rest[a]);
      for (int b = 0; b < n - 1; ++b) Mrr(a, b) = M(rest[a], rest[b]);
    }
    cd schur = M(piv, piv) -
               (row.transpose() * Mrr.partialPivLu().solve(col))(0, 0);
    sigma = schur - (-kI * Om + kI * p.wm);
    double next = p.wm + sigma.imag();
    bool done = std::abs(next - Om) < 1e-12 * p.wm;
    Om = next;
    if (done) break;
  }
  *damping = 2 * sigma.real() - p.gb;
  return Om;
}

struct Grid {
  int K = 1, Nf = 1, nk = 3, nl = 3;
  int index(int s, int k, int l) const {
    return ((s * nk) + (k + K)) * nl + (l + Nf);
  }
  int size() const { return 2 * nk * nl; }
};

struct Solved {
  std::vector<double> t;
  std::vector<double> n;
  double residual = 0;
  int unknowns = 0;
};

Solved solve_once(const Physics& p, double centre, double tau, int Nf,
                  double ne, double nm, double nb0,
                  const std::vector<double>& times) {
  Grid gr;
  gr.K = p.K;
  gr.Nf = Nf;
  gr.nk = 2 * p.K + 1;
  gr.nl = 2 * Nf + 1;
  const int ng = gr.size();
  const int n = 4 * ng;
  const double delta = kTwoPi / tau;

  std::vector<double> freq(ng);
  for (int s = 0; s < 2; ++s) {
    double sign = s == 0 ? 1.0 : -1.0;
    for (int k = -gr.K; k <= gr.K; ++k) {
      for (int l = -Nf; l <= Nf; ++l) {
        freq[gr.index(s, k, l)] = sign * (centre + k * p.ws + l * delta);
      }
    }
  }

  // Assemble the transpose directly: only adjoint solves are needed.
  std::vector<Eigen::Triplet<cd>> trip;
  trip.reserve(static_cast<size_t>(n) * 6);
  auto add = [&](int r, int c, cd v) { trip.emplace_back(c, r, v); };
  for (int s = 0; s < 2; ++s) {
    int dir = s == 0 ? 1 : -1;
    for (int k = -gr.K; k <= gr.K; ++k) {
      for (int l = -Nf; l <= Nf; ++l) {
        int g = gr.index(s, k, l);
        double W = freq[g];
        int gm = -1, gp = -1;  // Omega - omega_s, Omega + omega_s
        if (std::abs(k - dir) <= gr.K) gm = gr.index(s, k - dir, l);
        if (std::abs(k + dir) <= gr.K) gp = gr.index(s, k + dir, l);
        add(4 * g, 4 * g, -kI * W + kI * p.wa + p.gl / 2);
        add(4 * g, 4 * g + 1, -p.gl / 2);
        add(4 * g + 1, 4 * g + 1, -kI * W - kI * p.wa + p.gl / 2);
        add(4 * g + 1, 4 * g, -p.gl / 2);
        add(4 * g + 2, 4 * g + 2, -kI * W + kI * p.wm + p.gb / 2);
        add(4 * g + 3, 4 * g + 3, -kI * W - kI * p.wm + p.gb / 2);
        for (auto [gg, sg] : {std::pair{gm, 1.0}, std::pair{gp, -1.0}}) {
          if (gg < 0) continue;
          for (int q : {2, 3}) {
            add(4 * g, 4 * gg + q, -p.G * sg);
            add(4 * g + 1, 4 * gg + q, p.G * sg);
          }
          for (int q : {0, 1}) {
            add(4 * g + 2, 4 * gg + q, -p.G * sg);
            add(4 * g + 3, 4 * gg + q, p.G * sg);
          }
        }
      }
    }
  }
  SpMat MT(n, n);
  MT.setFromTriplets(trip.begin(), trip.end());
  MT.makeCompressed();
  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(MT);
  if (lu.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "fourier: singular system (" << n << " unknowns, N_f=" << Nf
        << ", tau=" << tau << ")";
    throw Error(ErrorKind::kNumeric, msg.str());
  }

  Solved out;
  out.unknowns = n;
  double norm_inf = 0;
  {
    Eigen::VectorXd rows = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < MT.outerSize(); ++k) {
      for (SpMat::InnerIterator it(MT, k); it; ++it) rows(it.row()) += std::abs(it.value());
    }
    norm_inf = rows.maxCoeff();
  }
  auto adjoint = [&](const Eigen::VectorXcd& e) {
    Eigen::VectorXcd r = lu.solve(e);
    // Normwise backward error of the solve.
    double res = (MT * r - e).cwiseAbs().maxCoeff() /
                 (norm_inf * r.cwiseAbs().maxCoeff() + e.cwiseAbs().maxCoeff());
    out.residual = std::max(out.residual, res);
    return r;
  };

  // Inputs: u_g, f_g, f_g^dag(-Omega) per grid point, then a0, a0^dag, b0,
  // b0^dag.
  const int m = 3 * ng + 4;
  Eigen::VectorXd Kd(m);
  for (int g = 0; g < ng; ++g) {
    double W = freq[g];
    Kd(3 * g) = p.gl / p.wa * std::abs(W) * (ne + (W < 0 ? 1.0 : 0.0));
    Kd(3 * g + 1) = p.gb * nm;
    Kd(3 * g + 2) = p.gb * (nm + 1);
  }
  Kd(3 * ng) = ne;
  Kd(3 * ng + 1) = ne + 1;
  Kd(3 * ng + 2) = nb0;
  Kd(3 * ng + 3) = nb0 + 1;

  auto coeffs = [&](const Eigen::VectorXcd& r) {
    Eigen::VectorXcd beta = Eigen::VectorXcd::Zero(m);
    for (int g = 0; g < ng; ++g) {
      beta(3 * g) = kI * r(4 * g) - kI * r(4 * g + 1);
      beta(3 * g + 1) = r(4 * g + 2);
      beta(3 * g + 2) = r(4 * g + 3);
    }
    return beta;
  };
  const double st = 1 / std::sqrt(tau);
  // r U for the boundary columns is the per-variable sum times st.
  auto boundary = [&](const Eigen::VectorXcd& r) {
    Eigen::Vector4cd v = Eigen::Vector4cd::Zero();
    for (int g = 0; g < ng; ++g) {
      for (int q = 0; q < 4; ++q) v(q) += r(4 * g + q);
    }
    return Eigen::Vector4cd(v * st);
  };

  // Endpoint closure from the series value at t = 0.
  Eigen::Matrix4cd ZU;
  Eigen::MatrixXcd ZN(4, m);
  for (int q = 0; q < 4; ++q) {
    Eigen::VectorXcd w = Eigen::VectorXcd::Zero(n);
    for (int g = 0; g < ng; ++g) w(4 * g + q) = st;
    Eigen::VectorXcd z = adjoint(w);
    ZN.row(q) = coeffs(z).transpose();
    ZU.row(q) = boundary(z).transpose();
  }
  Eigen::MatrixXcd E = Eigen::MatrixXcd::Zero(4, m);
  for (int q = 0; q < 4; ++q) E(q, 3 * ng + q) = 1;
  Eigen::Matrix4cd half = 0.5 * Eigen::Matrix4cd::Identity();
  Eigen::MatrixXcd C =
      (ZU + half).partialPivLu().solve(ZN + (ZU - half) * E);
  Eigen::MatrixXcd EC = E - C;

  out.t = times;
  out.n.resize(times.size());
  for (size_t i = 0; i < times.size(); ++i) {
    double t = times[i];
    if (t == 0) {
      out.n[i] = nb0;
      continue;
    }
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(n);
    for (int g = 0; g < ng; ++g) {
      e(4 * g + 2) = std::exp(-kI * freq[g] * t) * st;
    }
    Eigen::VectorXcd r = adjoint(e);
    Eigen::VectorXcd beta = coeffs(r);
    beta += (boundary(r).transpose() * EC).transpose();
    out.n[i] = (beta.cwiseAbs2().array() * Kd.array()).sum();
  }
  return out;
}

}  // namespace

FourierResult fourier_heating_solve(const Setup& s, const DriveSpec& drive,
                                    const FourierTruncation& trunc,
                                    const FourierOptions& opts) {
  if (!s.double_arm() || !s.circuit.balanced() ||
      s.couplings.delta_g1 != 0) {
    throw Error(ErrorKind::kConfig,
                "fourier: needs a balanced double arm circuit");
  }
  if (trunc.N_j < 0 || trunc.N_j % 2 != 0 || trunc.N_f < 1) {
    throw Error(ErrorKind::kConfig, "fourier: N_j even >= 0, N_f >= 1");
  }
  double gb = s.gamma_b();
  if (!(gb > 0)) throw Error(ErrorKind::kConfig, "fourier: gamma_b must be > 0");
  double flux = drive.photon_flux();
  double tau = trunc.tau.value_or(
      10 * std::max(1 / gb, drive.T ? *drive.T : 0.0));
  if (!(tau > 0)) throw Error(ErrorKind::kConfig, "fourier: tau must be > 0");

  const auto& r = s.rates;
  Physics p;
  double delta = kTwoPi / tau;
  p.ws = std::round(r.omega_s / delta) * delta;
  p.wm = s.omega_m();
  p.wa = r.omega_a;
  p.gl = r.gamma_l;
  p.gb = gb;
  p.K = std::max(trunc.N_j / 2, 0);
  p.G = s.couplings.g1 * std::sqrt(flux) / s.gamma() *
        std::sqrt(r.gamma_t * r.omega_a / p.ws);
  if (p.K == 0) p.G = 0;  // no sideband, no coupling

  FourierResult res;
  auto& diag = res.diagnostics;
  double damping = 0;
  double dressed = dressed_frequency(p, &damping);
  diag.dressed_shift = dressed - p.wm;
  diag.dressed_damping = damping;
  double centre = std::round(dressed / delta) * delta;
  diag.centre = centre;
  diag.tau = tau;

  double rate = gb + std::max(damping, 0.0);
  double t_end = tau / 2;
  double t_dense = std::min(t_end, 6 / rate);
  std::vector<double> times = linspace(0, t_dense, opts.samples);
  if (t_dense < t_end) times.push_back(t_end);

  double ne = s.n_e(), nm = s.n_m();
  Solved sol = solve_once(p, centre, tau, trunc.N_f, ne, nm, opts.n_b0, times);
  diag.unknowns = sol.unknowns;
  diag.residual = sol.residual;

  auto& out = res.solution;
  out.t = sol.t;
  out.n_b = sol.n;
  out.n_b_steady = sol.n.back();
  out.T_half = crossing_time(out.t, out.n_b, out.n_b_steady / 2);
  out.h = fitted_slope(out.t, out.n_b, 0, out.t[std::min<size_t>(3, out.t.size() - 1)]);
  for (double v : out.n_b) {
    if (v < 0) {
      out.warnings.push_back("negative n_b in reconstruction");
      break;
    }
  }
  if (diag.residual > 1e-10) {
    out.warnings.push_back("linear solve residual above 1e-10");
  }
  if (opts.check_refinement) {
    Solved fine = solve_once(p, centre, tau, 2 * trunc.N_f, ne, nm, opts.n_b0,
                             {t_end});
    diag.refined_steady = fine.n.back();
    double change = std::abs(fine.n.back() - out.n_b_steady) /
                    std::max(std::abs(out.n_b_steady), 1e-300);
    if (change > 0.01) {
      out.warnings.push_back("N_f not converged: steady state moves by more "
                             "than 1% under N_f -> 2 N_f");
    }
  }
  return res;
}

}  // namespace qnd
