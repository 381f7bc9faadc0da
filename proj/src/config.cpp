#include "qndsim/config.hpp"

#include <fstream>
#include <set>

#include "qndsim/errors.hpp"

namespace qnd {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& why) {
  throw Error(ErrorKind::kConfig, "config: " + path + ": " + why);
}

// Reads keys from one JSON object and rejects the ones nobody asked for.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) fail(path_, "expected an object");
  }

  bool has(const std::string& k) {
    used_.insert(k);
    return j_.contains(k) && !j_.at(k).is_null();
  }
  std::string at(const std::string& k) const {
    return path_.empty() ? k : path_ + "." + k;
  }

  std::optional<double> num(const std::string& k) {
    if (!has(k)) return std::nullopt;
    return number(j_.at(k), at(k));
  }
  double num(const std::string& k, double def) { return num(k).value_or(def); }
  std::optional<double> hz(const std::string& k) {
    auto v = num(k);
    if (v) *v *= kTwoPi;
    return v;
  }
  double req(const std::string& k) {
    auto v = num(k);
    if (!v) fail(at(k), "required");
    return *v;
  }
  long long integer(const std::string& k, long long def) {
    if (!has(k)) return def;
    const json& v = j_.at(k);
    if (v.is_number_integer()) return v.get<long long>();
    if (v.is_number_float()) {
      double d = v.get<double>();
      if (d == std::floor(d) && std::abs(d) < 9e18) return static_cast<long long>(d);
    }
    fail(at(k), "expected an integer");
  }
  bool boolean(const std::string& k, bool def) {
    if (!has(k)) return def;
    if (!j_.at(k).is_boolean()) fail(at(k), "expected true or false");
    return j_.at(k).get<bool>();
  }
  std::optional<std::string> str(const std::string& k) {
    if (!has(k)) return std::nullopt;
    if (!j_.at(k).is_string()) fail(at(k), "expected a string");
    return j_.at(k).get<std::string>();
  }
  std::vector<double> nums(const std::string& k, double scale = 1) {
    std::vector<double> out;
    if (!has(k)) return out;
    const json& v = j_.at(k);
    if (v.is_number()) return {number(v, at(k)) * scale};
    if (!v.is_array()) fail(at(k), "expected a number or an array of numbers");
    for (size_t i = 0; i < v.size(); ++i) {
      out.push_back(number(v[i], at(k) + "[" + std::to_string(i) + "]") * scale);
    }
    return out;
  }
  std::optional<Obj> obj(const std::string& k) {
    if (!has(k)) return std::nullopt;
    return Obj(j_.at(k), at(k));
  }
  const json& raw(const std::string& k) {
    used_.insert(k);
    return j_.at(k);
  }

  void done() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) fail(at(it.key()), "unknown key");
    }
  }

  static double number(const json& v, const std::string& path) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      std::string s = v.get<std::string>();
      if (s == "inf") return kInf;
    }
    fail(path, "expected a number");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void positive(double x, const std::string& path) {
  if (!(x > 0)) fail(path, "must be > 0");
}

Topology parse_topology(const std::string& s, const std::string& path) {
  if (s == "double_arm") return Topology::kDoubleArm;
  if (s == "single_arm" || s == "rlc") return Topology::kSingleArm;
  fail(path, "expected double_arm or single_arm");
}

OptimizationMethod parse_method(const std::string& s, const std::string& path) {
  if (s == "analytic") return OptimizationMethod::kAnalyticPdf;
  if (s == "mc" || s == "monte_carlo") return OptimizationMethod::kMonteCarloPolyFit;
  fail(path, "expected analytic or mc");
}

Scenario parse_scenario(const std::string& s, const std::string& path) {
  if (s == "rlc_exact") return Scenario::kRlcExact;
  if (s == "rlc_approx") return Scenario::kRlcApprox;
  if (s == "double_arm") return Scenario::kDoubleArm;
  if (s == "combined") return Scenario::kCombined;
  fail(path, "expected rlc_exact, rlc_approx, double_arm or combined");
}

CircuitSpec read_circuit(Obj o) {
  Topology topo = parse_topology(o.str("topology").value_or("double_arm"),
                                 o.at("topology"));
  CircuitSpec c;
  auto rates = o.obj("rates");
  auto elements = o.obj("elements");
  if (rates.has_value() == elements.has_value()) {
    fail(o.at("rates"), "give exactly one of circuit.rates or circuit.elements");
  }
  if (rates) {
    double ws = rates->hz("omega_s_hz").value_or(0);
    double gt = rates->hz("gamma_t_hz").value_or(0);
    double gr = rates->hz("gamma_r_hz").value_or(gt);
    double LL0 = rates->num("L_over_L0", 0);
    double RZ = rates->num("R_over_Zout", 0);
    double Z = rates->num("Z_out", 50);
    positive(ws, rates->at("omega_s_hz"));
    positive(gt, rates->at("gamma_t_hz"));
    positive(Z, rates->at("Z_out"));
    rates->done();
    c = circuit_from_rates(topo, ws, gt, gr, LL0, RZ, Z);
  } else {
    c.topology = topo;
    c.L0 = elements->req("L0");
    c.R0 = elements->req("R0");
    c.Z_out = elements->req("Z_out");
    c.C0 = elements->req("C0");
    c.parasitic_L = elements->num("L", 0);
    c.parasitic_R = elements->num("R", 0);
    elements->done();
  }
  c.delta_L = o.num("delta_L_rel", 0) * c.parasitic_L;
  c.delta_R = o.num("delta_R_rel", 0) * c.parasitic_R;
  c.delta_C = o.num("delta_C_rel", 0) * c.C0;
  c.n_bar_e = o.num("n_bar_e");
  c.reservoir_temperature = o.num("temperature");
  o.done();
  validate(c);
  return c;
}

MembraneSpec read_membrane(Obj o) {
  MembraneSpec m;
  m.length = o.num("length", m.length);
  m.width = o.num("width", m.width);
  m.d0 = o.num("d0", m.d0);
  m.areal_density = o.num("areal_density", m.areal_density);
  m.x0_override = o.num("x0");
  m.omega_m = o.hz("omega_m_hz").value_or(0);
  m.quality_Q = o.num("Q", m.quality_Q);
  m.gamma_b = o.hz("gamma_b_hz");
  m.n_bar_m = o.num("n_bar_m");
  m.bath_temperature = o.num("temperature");
  o.done();
  positive(m.omega_m, o.at("omega_m_hz"));
  validate(m);
  return m;
}

DeviceTemplate read_device(Obj& root) {
  DeviceTemplate d;
  auto circ = root.obj("circuit");
  if (!circ) fail("circuit", "required");
  double cs = circ->num("stray_Cs_over_C0", 0);
  if (cs < 0) fail(circ->at("stray_Cs_over_C0"), "must be >= 0");
  d.circuit = read_circuit(*circ);
  d.Cs_over_C0 = cs;
  auto mem = root.obj("membrane");
  if (!mem) fail("membrane", "required");
  d.membrane = read_membrane(*mem);

  double ws = derive_rates(d.circuit).omega_s;
  Couplings geo{};
  bool need_geo = true;
  std::optional<double> g1, g2, gr_ratio, dg_ratio;
  if (auto c = root.obj("couplings")) {
    g1 = c->hz("g1_hz");
    g2 = c->hz("g2_hz");
    gr_ratio = c->num("g_r_over_g1");
    dg_ratio = c->num("delta_g1_over_g1");
    c->done();
    need_geo = !(g1 && g2);
  }
  if (need_geo) geo = couplings_from_geometry(d.membrane, ws);
  d.bare.g1 = g1.value_or(geo.g1);
  d.bare.g2 = g2.value_or(geo.g2);
  d.bare.delta_g1 = dg_ratio.value_or(0) * d.bare.g1;
  d.gr_over_g1 = gr_ratio;
  return d;
}

DriveSpec read_drive(std::optional<Obj> o) {
  DriveSpec d;
  if (!o) return d;
  d.alpha_sq = o->num("alpha_sq");
  d.flux = o->num("flux");
  d.T = o->num("T");
  d.theta = o->num("theta", kPi);
  d.probe_frequency = o->hz("probe_frequency_hz");
  o->done();
  validate(d);
  return d;
}

McFitOptions read_mc(std::optional<Obj> o, std::uint64_t seed) {
  McFitOptions m;
  m.seed = seed;
  if (!o) return m;
  m.grid_points = static_cast<int>(o->integer("grid_points", m.grid_points));
  m.span_lo = o->num("span_lo", m.span_lo);
  m.span_hi = o->num("span_hi", m.span_hi);
  m.n_windows = o->integer("windows", m.n_windows);
  m.segments_per_window =
      static_cast<int>(o->integer("segments", m.segments_per_window));
  m.cutoff = static_cast<int>(o->integer("cutoff", m.cutoff));
  o->done();
  return m;
}

PlanTargets read_targets(Obj o) {
  PlanTargets t;
  t.delta_nb = o.num("delta_nb");
  t.N_e = o.num("N_e");
  t.T = o.num("T");
  t.balance = o.boolean("balance", false);
  o.done();
  validate(t);
  return t;
}

}  // namespace

RunConfig load_config(const json& j) {
  Obj root(j, "");
  RunConfig rc;
  rc.raw = j;
  rc.seed = static_cast<std::uint64_t>(root.integer("seed", 1));
  rc.threads = static_cast<int>(root.integer("threads", 0));
  rc.out_dir = root.str("out").value_or("out");
  root.str("description");
  rc.device = read_device(root);
  rc.drive = read_drive(root.obj("drive"));

  if (auto o = root.obj("heat")) {
    HeatSection h;
    h.g1 = o->nums("g1_hz", kTwoPi);
    h.scenario = parse_scenario(o->str("scenario").value_or("rlc_exact"),
                                o->at("scenario"));
    double gb = rc.device.membrane.damping();
    if (auto te = o->num("t_end")) {
      h.t_end = *te;
    } else {
      h.t_end = o->num("t_end_over_gamma_b", 5) / gb;
    }
    h.points = static_cast<int>(o->integer("points", h.points));
    h.n_b0 = o->num("n_b0", 0);
    h.oracle = o->boolean("oracle", true);
    o->done();
    positive(h.t_end, o->at("t_end"));
    if (h.points < 2) fail(o->at("points"), "must be >= 2");
    rc.heat = h;
  }
  if (auto o = root.obj("fourier")) {
    FourierSection f;
    f.g1 = o->nums("g1_hz", kTwoPi);
    f.truncation.N_j = static_cast<int>(o->integer("N_j", 2));
    f.truncation.N_f = static_cast<int>(o->integer("N_f", 800));
    f.truncation.tau = o->num("tau");
    f.tau_over_gamma_b = o->num("tau_over_gamma_b");
    f.options.n_b0 = o->num("n_b0", 0);
    f.options.samples = static_cast<int>(o->integer("samples", 80));
    f.options.check_refinement = o->boolean("check_refinement", true);
    if (o->has("compare_N_j")) {
      f.compare_N_j = static_cast<int>(o->integer("compare_N_j", 4));
    }
    o->done();
    if (f.truncation.N_j < 0 || f.truncation.N_j % 2) {
      fail(o->at("N_j"), "must be even and >= 0");
    }
    if (f.truncation.N_f < 1) fail(o->at("N_f"), "must be >= 1");
    rc.fourier = f;
  }
  if (auto o = root.obj("asym")) {
    AsymSection a;
    a.gr_over_g1 = o->nums("gr_over_g1");
    if (o->has("triples")) {
      const json& t = o->raw("triples");
      if (!t.is_array()) fail(o->at("triples"), "expected an array");
      for (size_t i = 0; i < t.size(); ++i) {
        std::string p = o->at("triples") + "[" + std::to_string(i) + "]";
        if (!t[i].is_array() || t[i].size() != 3) fail(p, "expected [dL, dR, dC]");
        a.triples.push_back({Obj::number(t[i][0], p), Obj::number(t[i][1], p),
                             Obj::number(t[i][2], p)});
      }
    }
    if (auto sets = o->obj("dC_sets")) {
      for (auto it = o->raw("dC_sets").begin(); it != o->raw("dC_sets").end();
           ++it) {
        a.dC_sets[it.key()] = sets->nums(it.key());
      }
      sets->done();
    }
    a.dC_set = o->str("dC_set");
    if (a.dC_set) {
      auto it = a.dC_sets.find(*a.dC_set);
      if (it == a.dC_sets.end()) fail(o->at("dC_set"), "no such entry in dC_sets");
      for (double dc : it->second) a.triples.push_back({0, 0, dc});
    }
    a.options.steps_per_period =
        static_cast<int>(o->integer("steps_per_period", 2000));
    a.options.average_periods = o->num("average_periods", 10);
    a.options.slope_t0 = o->num("slope_t0");
    a.options.slope_t1 = o->num("slope_t1");
    a.options.track_resonance = o->boolean("track_resonance", true);
    a.options.n_b0 = o->num("n_b0", 0);
    a.time_points = static_cast<int>(o->integer("time_points", 13));
    o->done();
    if (a.gr_over_g1.empty()) fail(o->at("gr_over_g1"), "required");
    if (a.triples.empty()) a.triples.push_back({});
    rc.asym = a;
  }
  if (auto o = root.obj("measure")) {
    MeasureSection m;
    m.lambda_prime = o->req("lambda_prime");
    m.n_bar = o->req("n_bar");
    m.delta_nb = o->num("delta_nb");
    m.windows = o->integer("windows", m.windows);
    m.segments = static_cast<int>(o->integer("segments", m.segments));
    m.cutoff = static_cast<int>(o->integer("cutoff", 0));
    o->done();
    rc.measure = m;
  }
  if (auto o = root.obj("optimize")) {
    OptimizeSection s;
    s.lambda_prime = o->nums("lambda_prime");
    if (s.lambda_prime.empty()) fail(o->at("lambda_prime"), "required");
    s.N_eff = o->num("N_eff", 1);
    s.method = parse_method(o->str("method").value_or("analytic"),
                            o->at("method"));
    s.mc = read_mc(o->obj("mc"), rc.seed);
    o->done();
    rc.optimize = s;
  }
  if (auto o = root.obj("plan")) rc.plan = read_targets(*o);
  if (auto o = root.obj("sweep")) {
    SweepSection s;
    if (!o->has("axes")) fail(o->at("axes"), "required");
    const json& axes = o->raw("axes");
    if (!axes.is_array()) fail(o->at("axes"), "expected an array");
    for (size_t i = 0; i < axes.size(); ++i) {
      Obj a(axes[i], o->at("axes") + "[" + std::to_string(i) + "]");
      auto name = a.str("axis");
      if (!name) fail(a.at("axis"), "required");
      SweepGrid g{parse_sweep_axis(*name), a.nums("values")};
      a.done();
      s.axes.push_back(std::move(g));
    }
    s.N_eff = o->num("N_eff", 1);
    s.method = parse_method(o->str("method").value_or("analytic"),
                            o->at("method"));
    s.mc = read_mc(o->obj("mc"), rc.seed);
    o->done();
    rc.sweep = s;
  }
  root.done();
  return rc;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::kConfig, "config: cannot open " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kConfig, std::string("config: ") + e.what());
  }
  return load_config(j);
}

}  // namespace qnd
