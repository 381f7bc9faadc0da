#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qndsim/fourier.hpp"
#include "qndsim/measure.hpp"
#include "qndsim/metrics.hpp"
#include "qndsim/plan.hpp"
#include "qndsim/unbalanced.hpp"

namespace qnd {

// Frequencies in the JSON are plain Hz (keys ending in _hz); they are
// converted to rad/s here. Unknown keys anywhere are kConfig errors naming
// the full key path.

struct HeatSection {
  std::vector<double> g1;  // rad/s; empty keeps the device g1
  Scenario scenario = Scenario::kRlcExact;
  double t_end = 0;
  int points = 200;
  double n_b0 = 0;
  bool oracle = true;  // single arm only
};

struct FourierSection {
  std::vector<double> g1;  // rad/s
  FourierTruncation truncation;
  std::optional<double> tau_over_gamma_b;
  FourierOptions options;
  std::optional<int> compare_N_j;  // second solve for the sideband check
};

struct AsymTriple {
  double dL = 0, dR = 0, dC = 0;  // relative to L, R, C0
};

struct AsymSection {
  std::vector<double> gr_over_g1;
  std::vector<AsymTriple> triples;
  std::map<std::string, std::vector<double>> dC_sets;
  std::optional<std::string> dC_set;  // adds (0, 0, dC) for each value
  UnbalancedOptions options;
  int time_points = 13;
};

struct MeasureSection {
  double lambda_prime = 0;
  double n_bar = 0;
  std::optional<double> delta_nb;  // the analytic optimum when absent
  long long windows = 100000;
  int segments = 64;
  int cutoff = 0;
};

struct OptimizeSection {
  std::vector<double> lambda_prime;
  double N_eff = 1;
  OptimizationMethod method = OptimizationMethod::kAnalyticPdf;
  McFitOptions mc;
};

struct SweepSection {
  std::vector<SweepGrid> axes;
  double N_eff = 1;
  OptimizationMethod method = OptimizationMethod::kAnalyticPdf;
  McFitOptions mc;
};

struct RunConfig {
  nlohmann::json raw;
  DeviceTemplate device;
  DriveSpec drive;
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out_dir = "out";
  std::optional<HeatSection> heat;
  std::optional<FourierSection> fourier;
  std::optional<AsymSection> asym;
  std::optional<MeasureSection> measure;
  std::optional<OptimizeSection> optimize;
  std::optional<PlanTargets> plan;
  std::optional<SweepSection> sweep;

  Setup setup() const { return device.build(); }
};

RunConfig load_config(const nlohmann::json& j);
RunConfig load_config_file(const std::string& path);

}  // namespace qnd
