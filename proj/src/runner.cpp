#include "dsk/runner.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dsk/scattering.hpp"
#include "dsk/spectral.hpp"

namespace dsk {

namespace {

namespace fs = std::filesystem;

[[noreturn]] void invalid(const std::string& msg) { throw ValidationError("ConfigInvalid", msg); }

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

// Copies doc onto base, refusing keys the defaults do not know.
void overlay(Json& base, const Json& doc, const std::string& path) {
  if (!doc.is_object()) invalid(path.empty() ? "config must be a JSON object" : path + " must be an object");
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) invalid("unknown key " + key);
    Json& slot = base[it.key()];
    if (slot.is_object())
      overlay(slot, it.value(), key);
    else
      slot = it.value();
  }
}

double fetch_number(const Json& j, const char* key, const std::string& section) {
  const Json& v = j.at(key);
  if (!v.is_number()) invalid(section + "." + key + " must be a number");
  return v.get<double>();
}

int fetch_int(const Json& j, const char* key, const std::string& section) {
  const Json& v = j.at(key);
  if (!v.is_number_integer()) invalid(section + "." + key + " must be an integer");
  return v.get<int>();
}

std::string fetch_string(const Json& j, const char* key, const std::string& section) {
  const Json& v = j.at(key);
  if (!v.is_string()) invalid(section + "." + key + " must be a string");
  return v.get<std::string>();
}

bool fetch_bool(const Json& j, const char* key, const std::string& section) {
  const Json& v = j.at(key);
  if (!v.is_boolean()) invalid(section + "." + key + " must be true or false");
  return v.get<bool>();
}

std::vector<double> fetch_numbers(const Json& j, const char* key, const std::string& section) {
  const Json& v = j.at(key);
  if (!v.is_array()) invalid(section + "." + key + " must be an array");
  std::vector<double> out;
  for (const Json& e : v) {
    if (!e.is_number()) invalid(section + "." + key + " must hold numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::optional<double> fetch_optional(const Json& j, const char* key, const std::string& section) {
  if (j.at(key).is_null()) return std::nullopt;
  return fetch_number(j, key, section);
}

struct Workspace {
  RunConfig cfg;
  HorizonData hz;
  ModeGrid grid;
  std::optional<RWMap> rw;
  OperatorBundle bundle;
};

Workspace build(const RunConfig& cfg) {
  Workspace w{cfg, find_horizons(cfg.params), ModeGrid::make(cfg.n, cfg.Nx, cfg.X, cfg.Ntheta), {}, {}};
  w.rw.emplace(cfg.params, w.hz, cfg.rwNodes, cfg.X + 1.0);
  BundleOptions bo;
  bo.Q = cfg.Q;
  bo.epsilon = cfg.cutoffEpsilon;
  bo.Rscale = cfg.cutoffRscale;
  w.bundle = assemble_bundle(cfg.params, w.hz, *w.rw, w.grid, bo);
  return w;
}

Vec weight_multiplier(const RunConfig& cfg, const OperatorBundle& b) {
  if (cfg.weight == "cosh") return cosh_weight(b.grid, cfg.weightEpsilon, true);
  return b.full->wInv().array().pow(cfg.weightEpsilon).matrix();
}

Json horizons_json(const HorizonData& hz) {
  Json j;
  j["rMinus"] = hz.rMinus;
  j["rPlus"] = hz.rPlus;
  j["rMax"] = hz.rMax;
  j["OmegaMinus"] = hz.OmegaMinus;
  j["OmegaPlus"] = hz.OmegaPlus;
  j["kappaMinus"] = hz.kappaMinus;
  j["kappaPlus"] = hz.kappaPlus;
  j["P2coeffs"] = Json::array({hz.P2coeffs[0], hz.P2coeffs[1], hz.P2coeffs[2]});
  j["divisionRemainder"] = hz.divisionRemainder;
  return j;
}

Json checks_json(const HypothesisChecks& c) {
  Json j;
  j["h0Positive"] = c.h0Positive;
  j["h0MinEig"] = c.h0MinEig;
  j["cutoffPartition"] = c.cutoffPartition;
  j["cutoffSupports"] = c.cutoffSupports;
  j["asymptoticPlusPositive"] = c.asymptoticPlusPositive;
  j["asymptoticMinusPositive"] = c.asymptoticMinusPositive;
  j["cPlus"] = c.cPlus;
  j["cMinus"] = c.cMinus;
  j["all"] = c.all();
  return j;
}

Json run_geometry(const RunConfig& cfg) {
  const HorizonData hz = find_horizons(cfg.params);
  const RWMap rw(cfg.params, hz, cfg.rwNodes, cfg.X + 1.0);
  CsvTable t({"r", "x", "delta_r", "omega_equator", "q"});
  const auto& pts = rw.points();
  const auto& xs = rw.xNodes();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const RadialPoint& p = pts[i];
    t.add_row({p.r, xs[i], delta_r_factored(hz, p.r, p.dMinus, p.dPlus),
               omega_coordinate(cfg.params, p.r, std::numbers::pi / 2), std::sqrt(p.dMinus * p.dPlus)});
  }
  t.write(cfg.outDir / "geometry.csv");
  Json j = horizons_json(hz);
  const ErgoBounds eb = ergo_bounds(cfg.params, hz, std::numbers::pi / 2);
  j["ergoregionEquator"] = {{"present", eb.present}, {"r1", eb.r1}, {"r2", eb.r2}};
  return j;
}

Json run_assemble(const RunConfig& cfg) {
  const Workspace w = build(cfg);
  const OperatorBundle& b = w.bundle;
  Json j;
  j["dimension"] = b.full->dim();
  j["ell"] = b.ell;
  j["kNorm"] = b.full->kNorm();
  j["h0Nonzeros"] = b.full->h0().nonZeros();
  j["h0SymmetryDefect"] = symmetry_defect(b.full->h0());
  j["cutoffEpsilon"] = b.cutoffs.epsilon;
  j["cutoffRscale"] = b.cutoffs.Rscale;
  j["sphereEigenvalues"] = vector_json(std::vector<double>(b.sphere.lambdas.data(), b.sphere.lambdas.data() + b.sphere.lambdas.size()));
  j["hypothesisChecks"] = checks_json(b.checks);
  return j;
}

Json run_spectrum(const RunConfig& cfg) {
  const Workspace w = build(cfg);
  EigenOptions eo;
  eo.budget = cfg.budget;
  const SpectrumReport r = eig_hamiltonian(*w.bundle.full, eo);
  CsvTable t({"re", "im", "residual"});
  for (std::size_t i = 0; i < r.eigenvalues.size(); ++i)
    t.add_row({r.eigenvalues[i].real(), r.eigenvalues[i].imag(), r.residuals.empty() ? NAN : r.residuals[i]});
  t.write(cfg.outDir / "spectrum.csv");
  Json j;
  j["count"] = r.eigenvalues.size();
  j["maxResidual"] = r.maxResidual;
  j["conjugationPairingError"] = r.conjugationPairingError;
  j["complexCount"] = r.complexCount;
  j["imagThreshold"] = r.imagThreshold;
  j["maxAbsImag"] = r.maxAbsImag;
  j["pencilCrossCheck"] = r.pencilCrossCheck;
  return j;
}

Json run_scan(const RunConfig& cfg) {
  const Workspace w = build(cfg);
  ScanOptions so;
  for (int i = 0; i < cfg.scan.lambdaCount; ++i)
    so.lambdaGrid.push_back(cfg.scan.lambdaCount == 1
                                ? cfg.scan.lambdaMin
                                : cfg.scan.lambdaMin + (cfg.scan.lambdaMax - cfg.scan.lambdaMin) * i /
                                                           (cfg.scan.lambdaCount - 1));
  so.deltaList = cfg.scan.deltas;
  so.powerIterations = cfg.scan.powerIterations;
  so.restarts = cfg.scan.restarts;
  so.seed = cfg.seed;
  so.threads = cfg.threads;
  // scans always use the 1/cosh weight
  const ResonanceScan r = weighted_resolvent_scan(*w.bundle.full, cosh_weight(w.grid, cfg.weightEpsilon, true), so);
  CsvTable t({"lambda", "delta", "norm"});
  for (const ScanSample& s : r.table) t.add_row({s.lambda, s.delta, s.norm});
  t.write(cfg.outDir / "resonance_scan.csv");
  Json j;
  j["lambdaGrid"] = vector_json(r.lambdaGrid);
  j["deltaList"] = vector_json(r.deltaList);
  j["growth"] = vector_json(r.growth);
  j["maxGrowth"] = r.growth.empty() ? 0.0 : *std::max_element(r.growth.begin(), r.growth.end());
  j["peakCandidates"] = vector_json(r.peakCandidates);
  return j;
}

void write_series(const EvolutionRun& run, const fs::path& path) {
  CsvTable t({"t", "charge_re", "charge_im", "ellform", "homE", "inhomE", "weightedE", "ratio"});
  for (std::size_t s = 0; s < run.t.size(); ++s)
    t.add_row({run.t[s], run.charge[s].real(), run.charge[s].imag(),
               run.ellForms.empty() ? NAN : run.ellForms[0][s].real(), run.homEnergy[s], run.inhomEnergy[s],
               run.weightedEnergy.empty() ? NAN : run.weightedEnergy[s], run.ratio[s]});
  t.write(path);
}

Json run_summary(const EvolutionRun& run) {
  Json j;
  j["dt"] = run.dt;
  j["T"] = run.T;
  j["steps"] = run.steps;
  j["chargeDrift"] = run.charge_drift();
  j["ells"] = vector_json(run.ells);
  Json d = Json::array();
  for (std::size_t i = 0; i < run.ells.size(); ++i) d.push_back(run.ell_drift(i));
  j["ellDrift"] = d;
  j["energyDrift"] = run.energy_drift();
  j["growth"] = run.growth();
  return j;
}

Json run_evolve(const RunConfig& cfg) {
  const Workspace w = build(cfg);
  const State psi = make_datum(w.grid, w.bundle.sphere, cfg.datum, true);
  MonitorConfig mon;
  mon.ells = {w.bundle.ell};
  mon.multiplier = weight_multiplier(cfg, w.bundle);
  mon.stride = cfg.stride;
  const EvolutionRun run = evolve(*w.bundle.full, psi, cfg.T, cfg.dt, mon);
  write_series(run, cfg.outDir / "evolution.csv");
  Json j = run_summary(run);
  j["supportRadius"] = support_radius(w.grid, psi);
  return j;
}

Json run_superradiance(const RunConfig& cfg) {
  const SuperradianceFixture f = superradiance_fixture();
  const SpacetimeParams p(f.Lambda, f.M, f.a);
  const HorizonData hz = find_horizons(p);
  const RWMap rw(p, hz, 801, f.X + 1.0);
  const ModeGrid g = ModeGrid::make(f.n, f.Nx, f.X, f.Ntheta);
  const KGSystem full = assemble_full_mode(p, hz, rw, g);
  const State psi = make_datum(g, sphere_basis(g, p), f.datum, true);
  check_causal_window(g, support_radius(g, psi), f.T, 2.0);
  MonitorConfig mon;
  mon.stride = cfg.stride;
  const EvolutionRun run = evolve(full, psi, f.T, f.dt, mon);
  write_series(run, cfg.outDir / "superradiance.csv");
  const EnergyDerivativeCheck fine = energy_derivative_check(full, psi, f.T, f.dt);
  const EnergyDerivativeCheck coarse = energy_derivative_check(full, psi, f.T, 2 * f.dt);
  CsvTable t({"t", "energy_rate_measured", "energy_rate_predicted"});
  for (std::size_t i = 0; i < fine.t.size(); ++i) t.add_row({fine.t[i], fine.lhs[i], fine.rhs[i]});
  t.write(cfg.outDir / "energy_rate.csv");

  const double tol = 1e-9;
  Json j;
  j["fixture"] = {{"Lambda", f.Lambda}, {"M", f.M},   {"a", f.a},   {"n", f.n},      {"Nx", f.Nx},
                  {"Ntheta", f.Ntheta}, {"X", f.X},   {"T", f.T},   {"dt", f.dt},    {"kind", f.datum.kind},
                  {"center", f.datum.center}, {"width", f.datum.width}, {"waveNumber", f.datum.waveNumber},
                  {"frequency", f.datum.frequency}};
  j["evolution"] = run_summary(run);
  j["growthThreshold"] = 1.0 + 10.0 * tol;
  j["witness"] = run.growth() > 1.0 + 10.0 * tol && run.charge_drift() <= tol;
  j["energyDerivative"] = {{"maxRelativeDefect", fine.maxRelativeDefect},
                           {"coarseDefect", coarse.maxRelativeDefect},
                           {"halvingRatio", coarse.maxRelativeDefect / fine.maxRelativeDefect},
                           {"oppositeSignDefect", fine.oppositeSignDefect},
                           {"maxRate", fine.maxRate}};
  return j;
}

Json report_json(const WaveOpReport& r) {
  Json j;
  j["side"] = side_name(r.side);
  j["Tschedule"] = vector_json(r.Tschedule);
  j["norms"] = vector_json(r.norms);
  j["cauchyGaps"] = vector_json(r.cauchyGaps);
  j["gapRatios"] = vector_json(r.gapRatios);
  j["inputNorm"] = r.inputNorm;
  j["normConstant"] = r.normConstant;
  j["kappa"] = r.kappa;
  j["kappaFit"] = r.kappaFit;
  j["extrapolatedError"] = r.extrapolatedError;
  j["gapsNonincreasing"] = r.gapsNonincreasing;
  return j;
}

void write_report_csv(const WaveOpReport& r, const fs::path& path) {
  CsvTable t({"T", "norm", "gap", "gap_ratio"});
  for (std::size_t i = 0; i < r.Tschedule.size(); ++i)
    t.add_row({r.Tschedule[i], r.norms[i], i >= 1 ? r.cauchyGaps[i - 1] : NAN, i >= 2 ? r.gapRatios[i - 2] : NAN});
  t.write(path);
}

Json run_scatter(const RunConfig& cfg) {
  const Workspace w = build(cfg);
  const OperatorBundle& b = w.bundle;
  const ScatterConfig& sc = cfg.scatter;
  const Side side = parse_side(sc.side);
  const double center = side == Side::Left ? -sc.distance : sc.distance;
  WaveOpOptions opt;
  opt.Tschedule = sc.schedule;
  opt.dt = cfg.dt;
  opt.margin = sc.margin;
  opt.threads = cfg.threads;
  opt.squaredCutoff = sc.squaredCutoff;
  opt.profile = sc.propagation == "formula" ? ProfilePropagation::Formula : ProfilePropagation::Discrete;
  WaveOpOptions last = opt;
  last.Tschedule = {sc.schedule.back()};

  const bool separable = sc.comparison == "separable";
  WaveOpReport r;
  double composition = NAN;
  if (separable) {
    const State datum = separable_wave_packet(b, side, center, sc.width, sc.waveNumber, sc.filterTime);
    if (sc.op == "wave") {
      r = separable_wave_operator(b, side, datum, opt);
    } else {
      const State image = separable_wave_operator(b, side, datum, last).approximants[0];
      r = separable_inverse_wave_operator(b, side, image, opt);
      composition = std::sqrt(energy_norms(comparison_system(b, side), r.approximants.back() - datum).hom) /
                    std::sqrt(energy_norms(comparison_system(b, side), datum).hom);
    }
  } else {
    const ProfileDatum datum = wave_packet(b, side, center, sc.width, sc.waveNumber, sc.filterTime);
    if (sc.op == "wave") {
      r = wave_operator(b, side, {datum}, opt);
    } else {
      const WaveOpReport image = wave_operator(b, side, {datum}, last);
      r = inverse_wave_operator(b, side, image.approximants[0], opt);
      const State reference = fin_assemble(b, {datum});
      composition = profile_state_norm(b, side, r.approximants.back() - reference) /
                    profile_state_norm(b, side, reference);
    }
  }
  write_report_csv(r, cfg.outDir / "scatter.csv");
  Json j = report_json(r);
  j["comparison"] = sc.comparison;
  j["operator"] = sc.op;
  if (!std::isnan(composition)) j["compositionError"] = composition;
  return j;
}

Json run_selftest_command(const RunConfig& cfg, bool& allPass) {
  const std::vector<SelfCheck> checks = run_selftest(cfg.seed, cfg.threads);
  CsvTable t({"index", "value", "tolerance", "pass"});
  Json list = Json::array();
  allPass = true;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const SelfCheck& c = checks[i];
    allPass = allPass && c.pass;
    list.push_back({{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"pass", c.pass}});
    t.add_row({double(i), c.value, c.tolerance, c.pass ? 1.0 : 0.0});
  }
  t.write(cfg.outDir / "selftest.csv");
  Json j;
  j["checks"] = list;
  j["allPass"] = allPass;
  return j;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"geometry", "assemble",      "spectrum", "resonance-scan",
                                              "evolve",   "superradiance", "scatter",  "selftest"};
  return names;
}

RunConfig default_config(const std::string& command) {
  RunConfig c;
  c.command = command;
  if (command == "scatter") {
    c.Nx = 999;
    c.X = 100;
    c.Ntheta = 4;
    c.Q = 4;
    c.rwNodes = 2001;
  }
  if (command == "spectrum" || command == "resonance-scan") {
    c.Nx = 95;
    c.Ntheta = 4;
    c.Q = 4;
    c.rwNodes = 401;
  }
  return c;
}

Json config_json(const RunConfig& c) {
  Json j;
  j["command"] = c.command;
  j["spacetime"] = {{"Lambda", c.params.Lambda}, {"M", c.params.M}, {"a", c.params.a}, {"mass", c.params.massField}};
  j["grid"] = {{"n", c.n}, {"Nx", c.Nx}, {"Ntheta", c.Ntheta}, {"X", c.X}, {"Q", c.Q}, {"rwNodes", c.rwNodes}};
  j["time"] = {{"dt", c.dt}, {"T", c.T}, {"stride", c.stride}};
  j["weight"] = {{"kind", c.weight}, {"epsilon", c.weightEpsilon}};
  j["cutoffs"] = {{"epsilon", c.cutoffEpsilon.value_or(c.X / 8.0)}, {"Rscale", c.cutoffRscale.value_or(c.X / 4.0)}};
  const DatumSpec& d = c.datum;
  j["datum"] = {{"kind", d.kind},         {"center", d.center},       {"width", d.width},
                {"waveNumber", d.waveNumber}, {"frequency", d.frequency}, {"ell", d.ell},
                {"angularIndex", d.angularIndex}, {"amplitude", d.amplitude}, {"phase", d.phase}};
  j["spectrum"] = {{"budget", c.budget}};
  j["scan"] = {{"lambdaMin", c.scan.lambdaMin},
               {"lambdaMax", c.scan.lambdaMax},
               {"lambdaCount", c.scan.lambdaCount},
               {"deltas", vector_json(c.scan.deltas)},
               {"powerIterations", c.scan.powerIterations},
               {"restarts", c.scan.restarts}};
  const ScatterConfig& s = c.scatter;
  j["scatter"] = {{"side", s.side},
                  {"comparison", s.comparison},
                  {"operator", s.op},
                  {"propagation", s.propagation},
                  {"schedule", vector_json(s.schedule)},
                  {"distance", s.distance},
                  {"width", s.width},
                  {"waveNumber", s.waveNumber},
                  {"filterTime", s.filterTime},
                  {"squaredCutoff", s.squaredCutoff},
                  {"margin", s.margin}};
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  return j;
}

RunConfig parse_config(const std::string& command, const Json& doc) {
  RunConfig c = default_config(command);
  Json merged = config_json(c);
  // unset cutoff scales stay tied to X
  merged["cutoffs"]["epsilon"] = nullptr;
  merged["cutoffs"]["Rscale"] = nullptr;
  if (!doc.is_null()) {
    if (doc.is_object() && doc.contains("command") && doc["command"] != command && !command.empty())
      invalid("config command '" + doc["command"].dump() + "' does not match '" + command + "'");
    overlay(merged, doc, "");
  }
  const Json& st = merged["spacetime"];
  c.params = SpacetimeParams(fetch_number(st, "Lambda", "spacetime"), fetch_number(st, "M", "spacetime"),
                             fetch_number(st, "a", "spacetime"), fetch_number(st, "mass", "spacetime"));
  const Json& gr = merged["grid"];
  c.n = fetch_int(gr, "n", "grid");
  c.Nx = fetch_int(gr, "Nx", "grid");
  c.Ntheta = fetch_int(gr, "Ntheta", "grid");
  c.X = fetch_number(gr, "X", "grid");
  c.Q = fetch_int(gr, "Q", "grid");
  c.rwNodes = fetch_int(gr, "rwNodes", "grid");
  const Json& tm = merged["time"];
  c.dt = fetch_number(tm, "dt", "time");
  c.T = fetch_number(tm, "T", "time");
  c.stride = fetch_int(tm, "stride", "time");
  c.weight = fetch_string(merged["weight"], "kind", "weight");
  c.weightEpsilon = fetch_number(merged["weight"], "epsilon", "weight");
  c.cutoffEpsilon = fetch_optional(merged["cutoffs"], "epsilon", "cutoffs");
  c.cutoffRscale = fetch_optional(merged["cutoffs"], "Rscale", "cutoffs");
  const Json& dj = merged["datum"];
  c.datum.kind = fetch_string(dj, "kind", "datum");
  c.datum.center = fetch_number(dj, "center", "datum");
  c.datum.width = fetch_number(dj, "width", "datum");
  c.datum.waveNumber = fetch_number(dj, "waveNumber", "datum");
  c.datum.frequency = fetch_number(dj, "frequency", "datum");
  c.datum.ell = fetch_number(dj, "ell", "datum");
  c.datum.angularIndex = fetch_int(dj, "angularIndex", "datum");
  c.datum.amplitude = fetch_number(dj, "amplitude", "datum");
  c.datum.phase = fetch_number(dj, "phase", "datum");
  c.budget = fetch_int(merged["spectrum"], "budget", "spectrum");
  const Json& sj = merged["scan"];
  c.scan.lambdaMin = fetch_number(sj, "lambdaMin", "scan");
  c.scan.lambdaMax = fetch_number(sj, "lambdaMax", "scan");
  c.scan.lambdaCount = fetch_int(sj, "lambdaCount", "scan");
  c.scan.deltas = fetch_numbers(sj, "deltas", "scan");
  c.scan.powerIterations = fetch_int(sj, "powerIterations", "scan");
  c.scan.restarts = fetch_int(sj, "restarts", "scan");
  const Json& sc = merged["scatter"];
  c.scatter.side = fetch_string(sc, "side", "scatter");
  c.scatter.comparison = fetch_string(sc, "comparison", "scatter");
  c.scatter.op = fetch_string(sc, "operator", "scatter");
  c.scatter.propagation = fetch_string(sc, "propagation", "scatter");
  c.scatter.schedule = fetch_numbers(sc, "schedule", "scatter");
  c.scatter.distance = fetch_number(sc, "distance", "scatter");
  c.scatter.width = fetch_number(sc, "width", "scatter");
  c.scatter.waveNumber = fetch_number(sc, "waveNumber", "scatter");
  c.scatter.filterTime = fetch_number(sc, "filterTime", "scatter");
  c.scatter.squaredCutoff = fetch_bool(sc, "squaredCutoff", "scatter");
  c.scatter.margin = fetch_number(sc, "margin", "scatter");
  const int seed = fetch_int(merged, "seed", "config");
  if (seed < 0) invalid("seed must be non-negative");
  c.seed = unsigned(seed);
  c.threads = fetch_int(merged, "threads", "config");
  return c;
}

void validate_config(const RunConfig& c) {
  const auto& names = command_names();
  if (std::find(names.begin(), names.end(), c.command) == names.end()) invalid("unknown command '" + c.command + "'");
  c.params.validate();
  if (c.Nx < 5) invalid("grid.Nx must be at least 5");
  if (c.Ntheta < 1) invalid("grid.Ntheta must be positive");
  if (c.Q < 1 || c.Q > c.Ntheta) invalid("grid.Q must lie in [1, Ntheta]");
  if (!(c.X > 0)) invalid("grid.X must be positive");
  if (c.rwNodes < 3) invalid("grid.rwNodes must be at least 3");
  if (!(c.dt > 0) || !(c.T > 0)) invalid("time.dt and time.T must be positive");
  if (c.stride < 1) invalid("time.stride must be positive");
  if (c.weight != "q" && c.weight != "cosh") invalid("weight.kind must be q or cosh");
  if (!(c.weightEpsilon > 0)) invalid("weight.epsilon must be positive");
  if (c.cutoffEpsilon && !(*c.cutoffEpsilon > 0)) invalid("cutoffs.epsilon must be positive");
  if (c.cutoffRscale && !(*c.cutoffRscale > 0)) invalid("cutoffs.Rscale must be positive");
  const std::string& k = c.datum.kind;
  if (k != "gaussian" && k != "in-going" && k != "ergo-bump") invalid("datum.kind must be gaussian, in-going or ergo-bump");
  if (!(c.datum.width > 0)) invalid("datum.width must be positive");
  if (c.datum.angularIndex < 0 || c.datum.angularIndex >= c.Ntheta) invalid("datum.angularIndex out of range");
  if (c.budget < 2) invalid("spectrum.budget must be at least 2");
  if (c.scan.lambdaCount < 1 || c.scan.lambdaMax < c.scan.lambdaMin) invalid("scan lambda range is empty");
  if (c.scan.deltas.empty()) invalid("scan.deltas must not be empty");
  for (double d : c.scan.deltas)
    if (!(d > 0)) invalid("scan.deltas must be positive");
  if (c.scan.powerIterations < 1 || c.scan.restarts < 1) invalid("scan iteration counts must be positive");
  const ScatterConfig& s = c.scatter;
  if (s.side != "left" && s.side != "right") invalid("scatter.side must be left or right");
  if (s.comparison != "profile" && s.comparison != "separable") invalid("scatter.comparison must be profile or separable");
  if (s.op != "wave" && s.op != "inverse") invalid("scatter.operator must be wave or inverse");
  if (s.propagation != "discrete" && s.propagation != "formula") invalid("scatter.propagation must be discrete or formula");
  if (s.schedule.empty()) invalid("scatter.schedule must not be empty");
  for (std::size_t i = 0; i < s.schedule.size(); ++i)
    if (!(s.schedule[i] > 0) || (i > 0 && !(s.schedule[i] > s.schedule[i - 1])))
      invalid("scatter.schedule must be positive and strictly increasing");
  if (!(s.width > 0) || !(s.filterTime > 0) || !(s.margin >= 0)) invalid("scatter width, filterTime and margin out of range");
  if (c.threads < 1) invalid("threads must be positive");
}

RunOutcome run(const RunConfig& cfg) {
  RunOutcome out;
  Json report;
  report["command"] = cfg.command;
  bool selftestPass = true;
  try {
    validate_config(cfg);
    std::error_code ec;
    fs::create_directories(cfg.outDir, ec);
    if (ec) throw ValidationError("OutputError", "cannot create " + cfg.outDir.string());
    write_json(cfg.outDir / "config.json", config_json(cfg));
    Json result;
    const std::string& c = cfg.command;
    if (c == "geometry") result = run_geometry(cfg);
    else if (c == "assemble") result = run_assemble(cfg);
    else if (c == "spectrum") result = run_spectrum(cfg);
    else if (c == "resonance-scan") result = run_scan(cfg);
    else if (c == "evolve") result = run_evolve(cfg);
    else if (c == "superradiance") result = run_superradiance(cfg);
    else if (c == "scatter") result = run_scatter(cfg);
    else result = run_selftest_command(cfg, selftestPass);
    report["status"] = selftestPass ? "ok" : "failed";
    report["result"] = result;
    if (!selftestPass) {
      out.exitCode = 3;
      out.errorName = "SelftestFailed";
      out.message = "one or more property checks failed";
      report["error"] = out.errorName;
    }
  } catch (const Error& e) {
    out.exitCode = e.is_validation() ? 2 : 3;
    out.errorName = e.name();
    out.message = e.what();
  } catch (const std::exception& e) {
    out.exitCode = 3;
    out.errorName = "InternalError";
    out.message = e.what();
  }
  if (out.exitCode != 0 && !report.contains("status")) {
    report["status"] = "error";
    report["error"] = out.errorName;
    report["message"] = out.message;
  }
  report["config"] = config_json(cfg);
  std::error_code ec;
  fs::create_directories(cfg.outDir, ec);
  if (!ec) {
    try {
      write_json(cfg.outDir / (cfg.command.empty() ? std::string("run.json") : cfg.command + ".json"), report);
    } catch (const Error&) {
      // the exit code already tells the story
    }
  }
  return out;
}

}  // namespace dsk
