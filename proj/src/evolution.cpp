#include "dsk/evolution.hpp"

#include <algorithm>
#include <cmath>

#include "dsk/parallel.hpp"

namespace dsk {

CayleyStepper::CayleyStepper(const KGSystem& sys, double dt) : sys_(&sys), dt_(dt) {
  if (!(dt > 0)) throw ValidationError("ConfigInvalid", "dt must be positive");
  H_ = hamiltonian_matrix(sys);
  const Eigen::Index n2 = H_.rows();
  CSpMat I(n2, n2);
  I.setIdentity();
  const cplx a(0.0, 0.5 * dt);
  const CSpMat aH = a * H_.cast<cplx>();
  const CSpMat fwd = I - aH, bwd = I + aH;
  luForward_.compute(fwd);
  luBackward_.compute(bwd);
  if (luForward_.info() != Eigen::Success || luBackward_.info() != Eigen::Success)
    throw NumericalError("SolverFailure", "Cayley factorization failed");
}

State CayleyStepper::forward(const State& psi) const {
  require_dims(psi.dim(), sys_->dim(), "CayleyStepper");
  const CVec v = psi.stacked();
  const CVec rhs = v + cplx(0.0, 0.5 * dt_) * (H_ * v);
  return State::unstack(luForward_.solve(rhs));
}

State CayleyStepper::backward(const State& psi) const {
  require_dims(psi.dim(), sys_->dim(), "CayleyStepper");
  const CVec v = psi.stacked();
  const CVec rhs = v - cplx(0.0, 0.5 * dt_) * (H_ * v);
  return State::unstack(luBackward_.solve(rhs));
}

State step(const KGSystem& sys, const State& psi, double dt) { return CayleyStepper(sys, dt).forward(psi); }

int step_count(double T, double dt) {
  if (!(T >= 0) || !(dt > 0)) throw ValidationError("ConfigInvalid", "need T >= 0 and dt > 0");
  const double r = T / dt;
  const long n = std::lround(r);
  if (std::abs(r - double(n)) > 1e-8 * std::max(1.0, r))
    throw ValidationError("ConfigInvalid", "T must be an integer multiple of dt");
  return int(n);
}

namespace {

double scale_of(const EvolutionRun& run) { return std::max(run.inhomEnergy.front(), 1e-300); }

}  // namespace

double EvolutionRun::charge_drift() const {
  double d = 0;
  for (const cplx q : charge) d = std::max(d, std::abs(q - charge.front()));
  return d / scale_of(*this);
}

double EvolutionRun::charge_drift_relative() const {
  double d = 0;
  for (const cplx q : charge) d = std::max(d, std::abs(q - charge.front()));
  return d / std::max(std::abs(charge.front()), 1e-300);
}

double EvolutionRun::ell_drift(std::size_t i) const {
  double d = 0;
  for (const cplx q : ellForms.at(i)) d = std::max(d, std::abs(q - ellForms[i].front()));
  return d / scale_of(*this);
}

double EvolutionRun::energy_drift() const {
  double d = 0;
  for (const double e : homEnergy) d = std::max(d, std::abs(e / homEnergy.front() - 1.0));
  return d;
}

EvolutionRun evolve(const KGSystem& sys, const State& psi0, double T, double dt, const MonitorConfig& mon) {
  const int n = std::max(1, int(std::ceil(T / dt - 1e-9)));
  const CayleyStepper st(sys, T > 0 ? T / n : dt);
  return evolve(st, psi0, T > 0 ? st.dt() * n : 0.0, mon);
}

EvolutionRun evolve(const CayleyStepper& stepper, const State& psi0, double T, const MonitorConfig& mon) {
  const KGSystem& sys = stepper.system();
  require_dims(psi0.dim(), sys.dim(), "evolve");
  if (mon.stride < 1) throw ValidationError("ConfigInvalid", "stride must be >= 1");
  if (mon.multiplier) require_dims(mon.multiplier->size(), sys.dim(), "evolve multiplier");
  EvolutionRun run;
  run.dt = stepper.dt();
  run.steps = step_count(T, stepper.dt());
  run.T = run.steps * run.dt;
  run.ells = mon.ells;
  run.ellForms.resize(mon.ells.size());

  double e0 = 0;
  auto record = [&](int s, const State& psi) {
    run.t.push_back(s * run.dt);
    run.charge.push_back(charge(sys, psi, psi));
    for (std::size_t i = 0; i < mon.ells.size(); ++i) run.ellForms[i].push_back(ell_form(sys, mon.ells[i], psi, psi));
    const EnergyNorms e = energy_norms(sys, psi);
    if (s == 0) e0 = e.hom;
    run.homEnergy.push_back(e.hom);
    run.inhomEnergy.push_back(e.inhom);
    run.ratio.push_back(e0 > 0 ? std::sqrt(e.hom / e0) : 0.0);
    if (mon.multiplier) {
      const CVec m = mon.multiplier->cast<cplx>();
      run.weightedEnergy.push_back(energy_norms(sys, {psi.u0.cwiseProduct(m), psi.u1.cwiseProduct(m)}).hom);
    }
    if (mon.storeStates) run.states.push_back(psi);
  };

  State psi = psi0;
  record(0, psi);
  for (int s = 1; s <= run.steps; ++s) {
    psi = stepper.forward(psi);
    if (s % mon.stride == 0 || s == run.steps) record(s, psi);
  }
  run.final = std::move(psi);
  return run;
}

State propagate(const CayleyStepper& stepper, const State& psi0, double T) {
  const int n = step_count(std::abs(T), stepper.dt());
  State psi = psi0;
  for (int s = 0; s < n; ++s) psi = T >= 0 ? stepper.forward(psi) : stepper.backward(psi);
  return psi;
}

double energy_rate(const KGSystem& sys, const State& psi) {
  const CVec& u = psi.u0;
  const CVec c = sys.apply_h(sys.apply_k(u)) - sys.apply_k(sys.apply_h(u));
  return (cplx(0, 1) * c).dot(u).real();
}

EnergyDerivativeCheck energy_derivative_check(const KGSystem& sys, const State& psi0, double T, double dt) {
  const int n = step_count(T, dt);
  if (n < 2) throw ValidationError("ConfigInvalid", "need at least two steps");
  const CayleyStepper st(sys, dt);
  std::vector<State> traj{psi0};
  traj.reserve(n + 1);
  for (int s = 0; s < n; ++s) traj.push_back(st.forward(traj.back()));
  std::vector<double> E(n + 1);
  for (int s = 0; s <= n; ++s) E[s] = energy_norms(sys, traj[s]).hom;
  EnergyDerivativeCheck out;
  double worst = 0, worstOpp = 0;
  for (int s = 1; s < n; ++s) {
    const double lhs = (E[s + 1] - E[s - 1]) / (2 * dt);
    const double rhs = energy_rate(sys, traj[s]);
    out.t.push_back(s * dt);
    out.lhs.push_back(lhs);
    out.rhs.push_back(rhs);
    out.maxRate = std::max(out.maxRate, std::abs(rhs));
    worst = std::max(worst, std::abs(lhs - rhs));
    worstOpp = std::max(worstOpp, std::abs(lhs + rhs));
  }
  const double scale = std::max(out.maxRate, 1e-300);
  out.maxRelativeDefect = worst / scale;
  out.oppositeSignDefect = worstOpp / scale;
  return out;
}

BoundednessReport boundedness_probe(const KGSystem& sys, const std::vector<State>& data, double T, double dt,
                                    int threads, int stride) {
  if (data.empty()) throw ValidationError("ConfigInvalid", "empty ensemble");
  const CayleyStepper st(sys, dt);
  MonitorConfig mon;
  mon.stride = stride;
  std::vector<EvolutionRun> runs(data.size());
  parallel_for(data.size(), threads, [&](std::size_t i) { runs[i] = evolve(st, data[i], T, mon); });
  BoundednessReport rep;
  rep.t = runs.front().t;
  rep.supRatio.assign(rep.t.size(), 0.0);
  for (const auto& r : runs)
    for (std::size_t s = 0; s < rep.t.size(); ++s) rep.supRatio[s] = std::max(rep.supRatio[s], r.ratio[s]);
  double run = 0;
  for (const double v : rep.supRatio) rep.runningSup.push_back(run = std::max(run, v));
  rep.sup = run;
  // slope over the last quarter
  const double t0 = 0.75 * rep.t.back();
  double st_ = 0, sy = 0, stt = 0, sty = 0, cnt = 0;
  for (std::size_t s = 0; s < rep.t.size(); ++s)
    if (rep.t[s] >= t0) {
      st_ += rep.t[s];
      sy += rep.runningSup[s];
      stt += rep.t[s] * rep.t[s];
      sty += rep.t[s] * rep.runningSup[s];
      cnt += 1;
    }
  const double den = cnt * stt - st_ * st_;
  rep.lastQuartileSlope = den > 0 ? (cnt * sty - st_ * sy) / den : 0.0;
  return rep;
}

DecayReport decay_probe(const KGSystem& sys, const State& psi0, const Vec& multiplier, double T, double dt) {
  MonitorConfig mon;
  mon.multiplier = multiplier;
  const EvolutionRun run = evolve(sys, psi0, T, dt, mon);
  DecayReport rep;
  rep.t = run.t;
  rep.weighted = run.weightedEnergy;
  const double mx = *std::max_element(rep.weighted.begin(), rep.weighted.end());
  rep.decayFactor = mx > 0 ? rep.weighted.back() / mx : 0.0;
  for (std::size_t s = 1; s < rep.t.size(); ++s)
    rep.integrated += 0.5 * (rep.weighted[s] + rep.weighted[s - 1]) * (rep.t[s] - rep.t[s - 1]);
  rep.integratedRatio = rep.integrated / std::max(run.homEnergy.front(), 1e-300);
  return rep;
}

State make_datum(const ModeGrid& grid, const SphereBasis& sphere, const DatumSpec& spec, bool twoD) {
  if (!(spec.width > 0)) throw ValidationError("ConfigInvalid", "datum width must be positive");
  const int Nt = twoD ? grid.Ntheta : 1;
  if (twoD && (spec.angularIndex < 0 || spec.angularIndex >= sphere.Z.cols()))
    throw ValidationError("ConfigInvalid", "angular index out of range");
  const bool ingoing = spec.kind == "in-going";
  if (!ingoing && spec.kind != "gaussian" && spec.kind != "ergo-bump")
    throw ValidationError("ConfigInvalid", "unknown datum kind '" + spec.kind + "'");
  const Eigen::Index N = Eigen::Index(grid.Nx) * Nt;
  State psi = State::zero(N);
  const cplx amp = std::polar(spec.amplitude, spec.phase);
  for (int j = 0; j < grid.Nx; ++j) {
    const double y = grid.x[j] - spec.center;
    const cplx f = amp * std::exp(-y * y / (2 * spec.width * spec.width)) * std::polar(1.0, spec.waveNumber * grid.x[j]);
    const cplx df = f * cplx(-y / (spec.width * spec.width), spec.waveNumber);
    // in-going Cauchy data u_t = u' + i l u, stored as -i u_t
    const cplx g = ingoing ? cplx(0, -1) * (df + cplx(0, spec.ell) * f) : spec.frequency * f;
    for (int i = 0; i < Nt; ++i) {
      const double ang = twoD ? sphere.Z(i, spec.angularIndex) : 1.0;
      psi.u0[Eigen::Index(j) * Nt + i] = f * ang;
      psi.u1[Eigen::Index(j) * Nt + i] = g * ang;
    }
  }
  return psi;
}

double support_radius(const ModeGrid& grid, const State& psi, double tol) {
  const Eigen::Index Nt = psi.dim() / grid.Nx;
  require_dims(Nt * grid.Nx, psi.dim(), "support_radius");
  double peak = 0;
  for (Eigen::Index r = 0; r < psi.dim(); ++r) peak = std::max({peak, std::abs(psi.u0[r]), std::abs(psi.u1[r])});
  double rad = 0;
  for (Eigen::Index r = 0; r < psi.dim(); ++r)
    if (std::max(std::abs(psi.u0[r]), std::abs(psi.u1[r])) > tol * peak)
      rad = std::max(rad, std::abs(grid.x[std::size_t(r / Nt)]));
  return rad;
}

void check_causal_window(const ModeGrid& grid, double supportRadius, double T, double margin) {
  if (supportRadius + T + margin > grid.X)
    throw ValidationError("CausalWindowExceeded", "support " + std::to_string(supportRadius) + " + T " +
                                                     std::to_string(T) + " + margin exceeds X = " +
                                                     std::to_string(grid.X));
}

SuperradianceFixture superradiance_fixture() {
  SuperradianceFixture f;
  f.datum.kind = "ergo-bump";
  f.datum.center = -8.0;
  f.datum.width = 2.0;
  f.datum.waveNumber = 0.5;
  f.datum.frequency = 0.3;
  f.T = 10.0;
  f.dt = 0.0125;
  f.Nx = 199;
  f.Ntheta = 6;
  f.X = 40.0;
  return f;
}

}  // namespace dsk
