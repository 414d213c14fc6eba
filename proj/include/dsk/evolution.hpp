#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dsk/kg_algebra.hpp"
#include "dsk/mode_operators.hpp"

namespace dsk {

// Implicit midpoint for Psi' = i H Psi: (1 - i dt/2 H) Psi+ = (1 + i dt/2 H) Psi.
// Both Cayley factors are factorized once.
class CayleyStepper {
 public:
  CayleyStepper(const KGSystem& sys, double dt);
  State forward(const State& psi) const;
  State backward(const State& psi) const;  // exact inverse of forward
  double dt() const { return dt_; }
  const KGSystem& system() const { return *sys_; }

 private:
  const KGSystem* sys_;
  double dt_;
  SpMat H_;
  Eigen::SparseLU<CSpMat, Eigen::COLAMDOrdering<int>> luForward_, luBackward_;
};

State step(const KGSystem& sys, const State& psi, double dt);

struct MonitorConfig {
  std::vector<double> ells;        // l-forms to track
  std::optional<Vec> multiplier;   // weighted local energy ||m Psi||^2 in the energy norm
  bool storeStates = false;
  int stride = 1;                  // record every stride steps (the last step is always recorded)
};

struct EvolutionRun {
  double dt = 0, T = 0;
  int steps = 0;
  std::vector<double> t;
  std::vector<cplx> charge;
  std::vector<std::vector<cplx>> ellForms;  // [ell index][sample]
  std::vector<double> ells;
  std::vector<double> homEnergy, inhomEnergy, weightedEnergy, ratio;
  std::vector<State> states;
  State final;

  // max_t |q(t) - q(0)| / scale with scale = inhomEnergy(0)
  double charge_drift() const;
  double ell_drift(std::size_t i) const;
  // relative to |q(0)| itself
  double charge_drift_relative() const;
  double energy_drift() const;  // max |E(t)/E(0) - 1|
  double growth() const { return homEnergy.back() / homEnergy.front(); }
};

EvolutionRun evolve(const KGSystem& sys, const State& psi0, double T, double dt, const MonitorConfig& mon = {});
EvolutionRun evolve(const CayleyStepper& stepper, const State& psi0, double T, const MonitorConfig& mon = {});
// Steps forward (T > 0) or backward (T < 0) without monitors.
State propagate(const CayleyStepper& stepper, const State& psi0, double T);
int step_count(double T, double dt);

// (i [h, k] u0 | u0): the rate of change of the homogeneous energy.
double energy_rate(const KGSystem& sys, const State& psi);

struct EnergyDerivativeCheck {
  std::vector<double> t, lhs, rhs;  // centred difference of the energy, predicted rate
  double maxRelativeDefect = 0;     // max |lhs - rhs| / max |rhs|
  double maxRate = 0;
  double oppositeSignDefect = 0;    // same comparison against -rhs
};
EnergyDerivativeCheck energy_derivative_check(const KGSystem& sys, const State& psi0, double T, double dt);

struct BoundednessReport {
  std::vector<double> t, supRatio, runningSup;
  double sup = 0;
  double lastQuartileSlope = 0;  // least-squares slope of runningSup over the last quarter of [0, T]
};
BoundednessReport boundedness_probe(const KGSystem& sys, const std::vector<State>& data, double T, double dt,
                                    int threads = 1, int stride = 1);

struct DecayReport {
  std::vector<double> t, weighted;
  double decayFactor = 0;     // weighted(T) / max weighted
  double integrated = 0;      // int_0^T weighted dt
  double integratedRatio = 0; // integrated / energy(0)
};
DecayReport decay_probe(const KGSystem& sys, const State& psi0, const Vec& multiplier, double T, double dt);

// Initial data on a mode grid. Components follow grid.index(j, i); a 1D grid uses components = 1.
struct DatumSpec {
  std::string kind = "gaussian";  // gaussian | in-going | ergo-bump
  double center = 0, width = 2;
  double waveNumber = 0;  // spatial oscillation e^{i xi x}
  double frequency = 0;   // u1 = frequency * u0 for gaussian data
  double ell = 0;         // in-going: du/dt = u' + i ell u, a translation toward -infinity
  int angularIndex = 0;   // sphere eigenvector used for the angular profile
  double amplitude = 1;
  double phase = 0;
};
State make_datum(const ModeGrid& grid, const SphereBasis& sphere, const DatumSpec& spec, bool twoD);

// The largest |x| where the datum is above tol times its peak.
double support_radius(const ModeGrid& grid, const State& psi, double tol = 1e-12);
// Throws CausalWindowExceeded unless supportRadius + T + margin <= X.
void check_causal_window(const ModeGrid& grid, double supportRadius, double T, double margin);

// Ergoregion datum for the superradiance experiment; parameters are fixed.
struct SuperradianceFixture {
  DatumSpec datum;
  double T = 0, dt = 0;
  double Lambda = 0.03, M = 1.0, a = 0.2;
  int n = 1, Nx = 0, Ntheta = 0;
  double X = 0;
};
SuperradianceFixture superradiance_fixture();

}  // namespace dsk
