#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace qnd {

// Outcomes are in units of sigma throughout, so the n_b = 1 peak sits at D.
struct MeasurementConfig {
  double lambda_prime = 0;
  double n_bar = 0;     // occupation of the probed equilibrium (N_eff)
  double delta_nb = 0;  // per-window heating from the ground state
  double D = 0;         // sqrt(lambda_prime * delta_nb)
  int segments_per_window = 64;
  long long n_windows = 100000;
  int cutoff = 0;       // Hilbert cutoff N_p; 0 picks one from the tail
  std::uint64_t seed = 1;

  static MeasurementConfig from_lambda(double lambda_prime, double n_bar,
                                       double delta_nb);
};

// Throws kConfig unless D^2 = lambda' dn (1e-9 relative), n_bar >= 0,
// dn >= 0, cutoff is 0 or >= 2.
void validate(const MeasurementConfig& cfg);

// Smallest N with thermal weight beyond N below tol (at least 1).
int thermal_cutoff(double n_bar, double tol = 1e-12);

struct PdfComponent {
  enum Kind { kPeak, kBridge } kind;
  int level;  // peak at level*D, bridge from level*D to (level+1)*D
  double weight;
};

// Peaks and single-jump bridges of the outcome density. Weights sum to 1.
std::vector<PdfComponent> pdf_components(double n_bar, double delta_nb,
                                         int cutoff = 0);

// Density and CDF of a precomputed component list.
double pdf_value(double v, const std::vector<PdfComponent>& comps, double D);
double cdf_value(double v, const std::vector<PdfComponent>& comps, double D);

double single_jump_pdf(double v, const MeasurementConfig& cfg);
double single_jump_cdf(double v, const MeasurementConfig& cfg);

// The two-peak closed form with ground and first excited state only, as
// printed; not normalised for n_bar > 0.
double two_level_pdf(double v, double n_bar, double delta_nb, double D);

struct OutcomeHistogram {
  double bin_width = 0.125;
  double lo = 0;
  std::vector<long long> counts;
  long long total = 0;       // sum of counts
  long long outside = 0;     // samples beyond the binned range
  long long cutoff_hits = 0; // windows that touched the Hilbert cutoff
  long long windows = 0;

  double left(size_t i) const { return lo + bin_width * i; }
  double right(size_t i) const { return lo + bin_width * (i + 1); }
  double centre(size_t i) const { return lo + bin_width * (i + 0.5); }
  double density(size_t i) const;
  double poisson_err(size_t i) const;
};

struct McOutput {
  OutcomeHistogram histogram;
  std::vector<double> samples;  // per window, in window order, if kept
};

// Quantum-jump sampling of windowed outcomes. Windows are independent
// streams keyed by (seed, window index), so the result does not depend on
// the number of threads.
McOutput mc_sample_outcomes(const MeasurementConfig& cfg, int threads = 1,
                            bool keep_samples = false);

// Kolmogorov-Smirnov distance between samples and a CDF.
double ks_distance(std::vector<double> samples,
                   const std::function<double(double)>& cdf);

struct VisibilityResult {
  double I0 = 0, I1 = 0, I_R = 0;
  double v0 = 0, v1 = 0, v_R = 0;  // where they were found
  double xi = 0;
  double xi_uncertainty = 0;
  bool degenerate = false;      // no n_b = 1 peak right of the n_b = 0 peak
  bool interior_valley = false; // minimum strictly between the peaks
};

// Peaks: largest density within +-1/2 of 0 and of D. Valley: smallest
// density between the two peak positions.
VisibilityResult visibility(const std::function<double(double)>& density,
                            double D);
VisibilityResult visibility(const OutcomeHistogram& h, double D);

double asymptotic_visibility(double lambda_prime, double N_eff);

// Occupation histogram of the segmented jump chain after `steps` segments
// from the thermal state, for detailed-balance checks.
std::vector<long long> jump_chain_occupations(double n_bar, double delta_nb,
                                              int segments, long long steps,
                                              std::uint64_t seed, int cutoff);

}  // namespace qnd
