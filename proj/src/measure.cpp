#include "qndsim/measure.hpp"

#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <limits>

#include "qndsim/constants.hpp"
#include "qndsim/errors.hpp"
#include "qndsim/parallel.hpp"

namespace qnd {
namespace {

double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(kTwoPi); }
double Phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
// Antiderivative of Phi.
double Iphi(double x) { return x * Phi(x) + phi(x); }

std::uint64_t splitmix(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct Stream {
  std::uint64_t state;
  Stream(std::uint64_t seed, std::uint64_t window) {
    std::uint64_t s = seed;
    state = splitmix(s) ^ (window * 0xD1B54A32D192ED03ULL);
    splitmix(state);
  }
  double uniform() {  // [0, 1)
    return static_cast<double>(splitmix(state) >> 11) * 0x1.0p-53;
  }
  double normal() {
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    return std::sqrt(-2 * std::log(u1)) * std::cos(kTwoPi * u2);
  }
};

// Jump weights of state n within one segment of length 1/M.
struct SegmentWeights {
  double up, down, total;
};

SegmentWeights segment_weights(int n, double n_bar, double dn, int M,
                               bool up_allowed) {
  double up = up_allowed ? (n + 1) * dn / M : 0.0;
  double dw = 0;
  if (n > 0) dw = n_bar > 0 ? n * dn * (1 + 1 / n_bar) / M : kInf;
  double pu = -std::expm1(-up);
  double pd = std::isinf(dw) ? 1.0 : -std::expm1(-dw);
  double ps = std::exp(-(up + dw));
  return {pu, pd, pu + pd + ps};
}

int initial_level(Stream& rng, double n_bar) {
  if (n_bar <= 0) return 0;
  double q = n_bar / (1 + n_bar);
  double u = 1.0 - rng.uniform();
  double n = std::floor(std::log(u) / std::log(q));
  return n > 1e6 ? 1000000 : static_cast<int>(n);
}

// Step the chain once; returns the new level.
int jump(Stream& rng, int n, double n_bar, double dn, int M, int cutoff) {
  SegmentWeights w = segment_weights(n, n_bar, dn, M, n < cutoff);
  double r = rng.uniform() * w.total;
  if (r < w.up) return n + 1;
  if (r < w.up + w.down) return n - 1;
  return n;
}

}  // namespace

MeasurementConfig MeasurementConfig::from_lambda(double lambda_prime,
                                                 double n_bar,
                                                 double delta_nb) {
  MeasurementConfig c;
  c.lambda_prime = lambda_prime;
  c.n_bar = n_bar;
  c.delta_nb = delta_nb;
  c.D = std::sqrt(lambda_prime * delta_nb);
  return c;
}

void validate(const MeasurementConfig& cfg) {
  if (!(cfg.n_bar >= 0) || !std::isfinite(cfg.n_bar)) {
    throw Error(ErrorKind::kConfig, "measure: n_bar must be finite and >= 0");
  }
  if (!(cfg.delta_nb >= 0) || !(cfg.lambda_prime >= 0) || !(cfg.D >= 0)) {
    throw Error(ErrorKind::kConfig,
                "measure: lambda', delta_nb and D must be >= 0");
  }
  double d2 = cfg.lambda_prime * cfg.delta_nb;
  if (std::abs(cfg.D * cfg.D - d2) > 1e-9 * std::max(d2, 1e-300) &&
      !(d2 == 0 && cfg.D == 0)) {
    throw Error(ErrorKind::kConfig, "measure: D^2 must equal lambda' * delta_nb");
  }
  if (cfg.segments_per_window < 1) {
    throw Error(ErrorKind::kConfig, "measure: segments_per_window must be >= 1");
  }
  if (cfg.n_windows < 1) {
    throw Error(ErrorKind::kConfig, "measure: n_windows must be >= 1");
  }
  if (cfg.cutoff != 0 && cfg.cutoff < 2) {
    throw Error(ErrorKind::kConfig, "measure: cutoff must be 0 or >= 2");
  }
}

int thermal_cutoff(double n_bar, double tol) {
  if (n_bar <= 0) return 1;
  // P(n > N) = q^(N+1)
  double q = n_bar / (1 + n_bar);
  double N = std::ceil(std::log(tol) / std::log(q)) - 1;
  return std::max(1, static_cast<int>(N));
}

std::vector<PdfComponent> pdf_components(double n_bar, double delta_nb,
                                         int cutoff) {
  int Np = cutoff > 0 ? cutoff : thermal_cutoff(n_bar);
  std::vector<PdfComponent> out;
  double q = n_bar / (1 + n_bar);
  for (int i = 0; i <= Np; ++i) {
    double p = std::pow(q, i) / (1 + n_bar);
    if (p == 0) break;
    SegmentWeights w = segment_weights(i, n_bar, delta_nb, 1, true);
    double stay = w.total - w.up - w.down;
    out.push_back({PdfComponent::kPeak, i, p * stay / w.total});
    out.push_back({PdfComponent::kBridge, i, p * w.up / w.total});
    if (i > 0) out.push_back({PdfComponent::kBridge, i - 1, p * w.down / w.total});
  }
  return out;
}

double pdf_value(double v, const std::vector<PdfComponent>& comps, double D) {
  double t = 0;
  for (const auto& c : comps) {
    double x = v - c.level * D;
    if (c.kind == PdfComponent::kPeak || D == 0) {
      t += c.weight * phi(x);
    } else {
      t += c.weight * (Phi(x) - Phi(x - D)) / D;
    }
  }
  return t;
}

double cdf_value(double v, const std::vector<PdfComponent>& comps, double D) {
  double t = 0;
  for (const auto& c : comps) {
    double x = v - c.level * D;
    if (c.kind == PdfComponent::kPeak || D == 0) {
      t += c.weight * Phi(x);
    } else {
      t += c.weight * (Iphi(x) - Iphi(x - D)) / D;
    }
  }
  return t;
}

double single_jump_pdf(double v, const MeasurementConfig& cfg) {
  return pdf_value(v, pdf_components(cfg.n_bar, cfg.delta_nb, cfg.cutoff),
                  cfg.D);
}

double single_jump_cdf(double v, const MeasurementConfig& cfg) {
  return cdf_value(v, pdf_components(cfg.n_bar, cfg.delta_nb, cfg.cutoff),
                  cfg.D);
}

double two_level_pdf(double v, double nb, double dn, double D) {
  if (!(nb > 0) || !(D > 0)) {
    throw Error(ErrorKind::kDomain, "two_level_pdf: needs n_bar > 0 and D > 0");
  }
  const double r2 = std::sqrt(2.0);
  double g0 = std::exp(-v * v / 2 - dn) / (1 + nb);
  double g1 = std::exp(-(v - D) * (v - D) / 2 - dn * (3 + 1 / nb)) * nb /
              ((1 + nb) * (1 + nb));
  double amp = (1 + nb) * (-std::expm1(-dn)) +
               nb * (-std::expm1(-dn * (3 + 1 / nb))) /
                   (1 + std::exp(-dn * (1 - 1 / nb)));
  double br = amp * (std::erf(v / r2) - std::erf((v - D) / r2)) /
              (2 * D * (1 + nb) * (1 + nb));
  return (g0 + g1) / std::sqrt(kTwoPi) + br;
}

double OutcomeHistogram::density(size_t i) const {
  return counts[i] / (static_cast<double>(windows) * bin_width);
}

double OutcomeHistogram::poisson_err(size_t i) const {
  return std::sqrt(static_cast<double>(counts[i])) /
         (static_cast<double>(windows) * bin_width);
}

McOutput mc_sample_outcomes(const MeasurementConfig& cfg, int threads,
                            bool keep_samples) {
  validate(cfg);
  const int M = cfg.segments_per_window;
  const int Np = cfg.cutoff > 0 ? cfg.cutoff
                                : std::max(12, thermal_cutoff(cfg.n_bar));
  McOutput out;
  auto& h = out.histogram;
  h.bin_width = 0.125;
  h.lo = -3;
  double hi = cfg.D * Np + 3;
  size_t nbins = static_cast<size_t>(std::ceil((hi - h.lo) / h.bin_width));
  h.counts.assign(nbins, 0);
  h.windows = cfg.n_windows;
  if (keep_samples) out.samples.resize(cfg.n_windows);

  int workers = resolve_threads(threads);
  size_t nw = static_cast<size_t>(cfg.n_windows);
  workers = static_cast<int>(std::min<size_t>(workers, nw));
  std::vector<std::vector<long long>> counts(workers,
                                             std::vector<long long>(nbins, 0));
  std::vector<long long> outside(workers, 0), hits(workers, 0);

  parallel_for(nw, workers, [&](size_t b, size_t e, int k) {
    auto& c = counts[k];
    for (size_t w = b; w < e; ++w) {
      Stream rng(cfg.seed, w);
      int n = initial_level(rng, cfg.n_bar);
      bool hit = false;
      if (n >= Np) {
        n = Np;
        hit = true;
      }
      double acc = 0;
      for (int j = 0; j < M; ++j) {
        int next = jump(rng, n, cfg.n_bar, cfg.delta_nb, M, Np);
        double tj = rng.uniform();
        acc += tj * n + (1 - tj) * next;
        n = next;
        if (n >= Np) hit = true;
      }
      double v = acc / M * cfg.D + rng.normal();
      if (keep_samples) out.samples[w] = v;
      if (hit) ++hits[k];
      double pos = (v - h.lo) / h.bin_width;
      if (pos >= 0 && pos < static_cast<double>(nbins)) {
        ++c[static_cast<size_t>(pos)];
      } else {
        ++outside[k];
      }
    }
  });
  for (int k = 0; k < workers; ++k) {
    for (size_t i = 0; i < nbins; ++i) h.counts[i] += counts[k][i];
    h.outside += outside[k];
    h.cutoff_hits += hits[k];
  }
  for (auto c : h.counts) h.total += c;
  return out;
}

double ks_distance(std::vector<double> x,
                   const std::function<double(double)>& cdf) {
  if (x.empty()) throw Error(ErrorKind::kDomain, "ks_distance: no samples");
  std::sort(x.begin(), x.end());
  double N = static_cast<double>(x.size());
  double d = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    double F = cdf(x[i]);
    d = std::max({d, (i + 1) / N - F, F - i / N});
  }
  return d;
}

namespace {

// Grid search on [a, b] followed by Brent refinement between the grid
// neighbours of the best point. sign = +1 maximises, -1 minimises.
std::pair<double, double> extremum(const std::function<double(double)>& f,
                                   double a, double b, int points, int sign) {
  std::vector<double> xs(points), ys(points);
  int best = 0;
  for (int i = 0; i < points; ++i) {
    xs[i] = a + (b - a) * i / (points - 1);
    ys[i] = f(xs[i]);
    if (sign * ys[i] > sign * ys[best]) best = i;
  }
  double lo = xs[std::max(best - 1, 0)];
  double hi = xs[std::min(best + 1, points - 1)];
  auto r = boost::math::tools::brent_find_minima(
      [&](double x) { return -sign * f(x); }, lo, hi, 40);
  double fr = -sign * r.second;
  if (sign * fr > sign * ys[best]) return {r.first, fr};
  return {xs[best], ys[best]};
}

}  // namespace

VisibilityResult visibility(const std::function<double(double)>& density,
                            double D) {
  VisibilityResult r;
  auto p0 = extremum(density, -0.5, 0.5, 101, +1);
  auto p1 = extremum(density, D - 0.5, D + 0.5, 101, +1);
  r.v0 = p0.first;
  r.I0 = p0.second;
  r.v1 = p1.first;
  r.I1 = p1.second;
  if (!(r.v1 > r.v0)) {
    r.degenerate = true;
    r.xi = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  auto v = extremum(density, r.v0, r.v1, 801, -1);
  r.v_R = v.first;
  r.I_R = v.second;
  double span = r.v1 - r.v0;
  r.interior_valley =
      r.v_R > r.v0 + 1e-6 * span && r.v_R < r.v1 - 1e-6 * span;
  double m = 0.5 * (r.I0 + r.I1);
  r.xi = (m - r.I_R) / (m + r.I_R);
  return r;
}

VisibilityResult visibility(const OutcomeHistogram& h, double D) {
  size_t n = h.counts.size();
  VisibilityResult r;
  if (n < 3 || h.windows == 0) {
    throw Error(ErrorKind::kDomain, "visibility: empty histogram");
  }
  std::vector<double> dens(n), var(n), sm(n), se(n);
  for (size_t i = 0; i < n; ++i) {
    dens[i] = h.density(i);
    double e = h.poisson_err(i);
    var[i] = e * e;
  }
  // Three-bin moving average, zero padded at the ends.
  for (size_t i = 0; i < n; ++i) {
    double s = 0, v = 0;
    for (size_t j = (i == 0 ? 0 : i - 1); j <= std::min(i + 1, n - 1); ++j) {
      s += dens[j];
      v += var[j];
    }
    sm[i] = s / 3;
    se[i] = std::sqrt(v / 9);
  }
  auto argmax_near = [&](double c) {
    long best = -1;
    for (size_t i = 0; i < n; ++i) {
      if (std::abs(h.centre(i) - c) <= 0.5 && (best < 0 || sm[i] > sm[best])) {
        best = static_cast<long>(i);
      }
    }
    return best;
  };
  long i0 = argmax_near(0), i1 = argmax_near(D);
  if (i0 < 0 || i1 < 0 || i1 <= i0) {
    r.degenerate = true;
    r.xi = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  long ir = i0;
  for (long i = i0; i <= i1; ++i) {
    if (sm[i] < sm[ir]) ir = i;
  }
  r.I0 = sm[i0];
  r.I1 = sm[i1];
  r.I_R = sm[ir];
  r.v0 = h.centre(i0);
  r.v1 = h.centre(i1);
  r.v_R = h.centre(ir);
  r.interior_valley = ir > i0 && ir < i1;
  double m = 0.5 * (r.I0 + r.I1);
  r.xi = (m - r.I_R) / (m + r.I_R);
  double dm = 2 * r.I_R / ((m + r.I_R) * (m + r.I_R));
  double dr = -2 * m / ((m + r.I_R) * (m + r.I_R));
  r.xi_uncertainty = std::sqrt(std::pow(dm * se[i0] / 2, 2) +
                               std::pow(dm * se[i1] / 2, 2) +
                               std::pow(dr * se[ir], 2));
  return r;
}

double asymptotic_visibility(double lambda_prime, double N) {
  if (!(lambda_prime > 1)) {
    throw Error(ErrorKind::kDomain, "asymptotic_visibility: needs lambda' > 1");
  }
  if (!(N >= 0)) {
    throw Error(ErrorKind::kDomain, "asymptotic_visibility: needs N >= 0");
  }
  return 1 - 8 * (3 + 5 * N) / (1 + 2 * N) *
                 std::sqrt(kPi * std::log(lambda_prime)) / lambda_prime;
}

std::vector<long long> jump_chain_occupations(double n_bar, double delta_nb,
                                              int segments, long long steps,
                                              std::uint64_t seed, int cutoff) {
  if (segments < 1 || steps < 1 || cutoff < 1) {
    throw Error(ErrorKind::kConfig,
                "jump_chain_occupations: segments, steps, cutoff must be >= 1");
  }
  std::vector<long long> hist(cutoff + 1, 0);
  Stream rng(seed, 0);
  int n = std::min(initial_level(rng, n_bar), cutoff);
  for (long long k = 0; k < steps; ++k) {
    n = jump(rng, n, n_bar, delta_nb, segments, cutoff);
    ++hist[n];
  }
  return hist;
}

}  // namespace qnd
