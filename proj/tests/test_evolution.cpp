#include <doctest.h>

#include <cmath>
#include <random>

#include "dsk/evolution.hpp"
#include "oracles.hpp"

using namespace dsk;

namespace {

KGSystem random_system(int n, std::mt19937_64& rng, double kScale = 1.0) {
  const Mat h0 = oracle::random_spd(n, rng);
  const Mat k = oracle::random_sym(n, rng, kScale);
  return KGSystem(h0.sparseView(), k.sparseView());
}

State random_state(int n, std::mt19937_64& rng) {
  return {oracle::random_cvec(n, rng), oracle::random_cvec(n, rng)};
}

double state_dist(const State& a, const State& b) {
  return std::sqrt((a.u0 - b.u0).squaredNorm() + (a.u1 - b.u1).squaredNorm());
}

double state_norm(const State& a) { return std::sqrt(a.u0.squaredNorm() + a.u1.squaredNorm()); }

struct SmallKerr {
  SpacetimeParams p;
  HorizonData hz;
  RWMap rw;
  ModeGrid g;
  OperatorBundle b;
  explicit SmallKerr(double a)
      : p(0.03, 1.0, a),
        hz(find_horizons(p)),
        rw(p, hz, 401, 41.0),
        g(ModeGrid::make(1, 79, 40.0, 3)),
        b(assemble_bundle(p, hz, rw, g)) {}
};

}  // namespace

TEST_CASE("zero Hamiltonian steps are the identity") {
  // with h = k = 0, H maps (u, 0) to zero
  const int n = 5;
  const KGSystem sys(SpMat(n, n), SpMat(n, n));
  std::mt19937_64 rng(1);
  const State psi{oracle::random_cvec(n, rng), CVec::Zero(n)};
  CHECK(state_dist(step(sys, psi, 0.3), psi) == 0.0);
  CHECK(state_dist(apply_hamiltonian(sys, psi), State::zero(n)) == 0.0);
}

TEST_CASE("scalar oscillator: one step has an O(dt^3) phase error") {
  const double w = 1.7;
  SpMat h0(1, 1);
  h0.insert(0, 0) = w * w;
  const KGSystem sys(h0, SpMat(1, 1));
  // eigenvector of H for eigenvalue w: (1, w)
  const State psi{CVec::Constant(1, 1.0), CVec::Constant(1, w)};
  auto err = [&](double dt) { return std::abs(step(sys, psi, dt).u0[0] - std::polar(1.0, w * dt)); };
  const double e1 = err(0.1), e2 = err(0.05);
  CHECK(e1 < 1e-3);
  CHECK(e1 / e2 == doctest::Approx(8.0).epsilon(0.05));
  // the step is exactly the Cayley transform of i w dt
  const cplx cay = (1.0 + cplx(0, 0.05 * w)) / (1.0 - cplx(0, 0.05 * w));
  CHECK(std::abs(step(sys, psi, 0.1).u0[0] - cay) < 1e-15);
}

TEST_CASE("charge and l-forms are conserved by a random step") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const KGSystem sys = random_system(20, rng, 2.0);
    const State psi = random_state(20, rng);
    const State next = step(sys, psi, 0.37);
    const double scale = energy_norms(sys, psi).inhom;
    CHECK(std::abs(charge(sys, next, next) - charge(sys, psi, psi)) <= 1e-12 * scale);
    for (const double ell : {-0.8, 0.3, 1.5})
      CHECK(std::abs(ell_form(sys, ell, next, next) - ell_form(sys, ell, psi, psi)) <= 1e-12 * scale);
  }
}

TEST_CASE("stepping back inverts stepping forward") {
  std::mt19937_64 rng(4);
  const KGSystem sys = random_system(30, rng);
  const State psi = random_state(30, rng);
  const CayleyStepper st(sys, 0.05);
  const State there = propagate(st, psi, 5.0);
  const State back = propagate(st, there, -5.0);
  CHECK(state_dist(back, psi) <= 1e-8 * state_norm(psi));
}

TEST_CASE("evolve records consistent series") {
  std::mt19937_64 rng(5);
  const KGSystem sys = random_system(8, rng);
  const State psi = random_state(8, rng);
  MonitorConfig mon;
  mon.ells = {0.5};
  mon.multiplier = Vec::Ones(8);
  mon.stride = 3;
  mon.storeStates = true;
  const EvolutionRun run = evolve(sys, psi, 1.0, 0.1, mon);
  CHECK(run.steps == 10);
  CHECK(run.t.size() == 5);  // 0, 3, 6, 9, 10
  CHECK(run.t.back() == doctest::Approx(1.0));
  CHECK(run.charge.size() == run.t.size());
  CHECK(run.ellForms.at(0).size() == run.t.size());
  CHECK(run.weightedEnergy.size() == run.t.size());
  CHECK(run.states.size() == run.t.size());
  CHECK(run.ratio.front() == 1.0);
  // unit multiplier reproduces the homogeneous energy
  for (std::size_t s = 0; s < run.t.size(); ++s)
    CHECK(run.weightedEnergy[s] == doctest::Approx(run.homEnergy[s]).epsilon(1e-12));
  CHECK(run.charge_drift() <= 1e-12);
  CHECK(state_dist(run.final, run.states.back()) == 0.0);
}

TEST_CASE("time step validation") {
  std::mt19937_64 rng(6);
  const KGSystem sys = random_system(4, rng);
  CHECK_THROWS_AS(CayleyStepper(sys, 0.0), ValidationError);
  CHECK_THROWS_AS(step_count(1.0, 0.3), ValidationError);
  CHECK(step_count(1.2, 0.3) == 4);
  const CayleyStepper st(sys, 0.1);
  CHECK_THROWS_AS(evolve(st, State::zero(3), 1.0), ValidationError);
  // the convenience overload rounds dt down to divide T
  const EvolutionRun run = evolve(sys, random_state(4, rng), 1.0, 0.3);
  CHECK(run.steps == 4);
  CHECK(run.dt == doctest::Approx(0.25));
}

TEST_CASE("selfadjoint evolution conserves the homogeneous energy") {
  const SpacetimeParams p(0.03, 1.0, 0.0);
  const HorizonData hz = find_horizons(p);
  const RWMap rw(p, hz, 401, 41.0);
  const ModeGrid g = ModeGrid::make(1, 199, 40.0, 4);
  const std::vector<KGSystem> sep = assemble_separable(p, hz, rw, g, 2);
  DatumSpec d;
  d.waveNumber = 0.7;
  d.frequency = 0.2;
  const State psi = make_datum(g, SphereBasis{}, d, false);
  const EvolutionRun run = evolve(sep[0], psi, 20.0, 0.4 * g.dx);
  CHECK(run.growth() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(run.energy_drift() <= 1e-9);
}

TEST_CASE("rotating background: charge and l-forms conserved while the energy moves") {
  const SmallKerr kerr(0.1);
  const KGSystem& full = *kerr.b.full;
  DatumSpec d;
  d.kind = "ergo-bump";
  d.center = -6.0;
  d.width = 2.0;
  d.waveNumber = 0.5;
  d.frequency = 0.3;
  const State psi = make_datum(kerr.g, kerr.b.sphere, d, true);
  MonitorConfig mon;
  mon.ells = {kerr.b.ell, 0.0};
  const EvolutionRun run = evolve(full, psi, 10.0, 0.05, mon);
  CHECK(run.charge_drift() <= 1e-9);
  CHECK(run.ell_drift(0) <= 1e-9);
  CHECK(run.ell_drift(1) <= 1e-9);
  CHECK(run.energy_drift() > 1e-4);

  const KGSystem& minus = *kerr.b.asymptoticMinus;
  mon.ells = {kerr.b.ell};
  const EvolutionRun rm = evolve(minus, psi, 10.0, 0.05, mon);
  CHECK(rm.ell_drift(0) <= 1e-9);
  CHECK(rm.charge_drift() <= 1e-9);
}

TEST_CASE("gauge covariance holds to second order in dt") {
  std::mt19937_64 rng(8);
  const KGSystem sys = random_system(12, rng);
  const double ell = 0.6, T = 2.0;
  const KGSystem gauged = gauge_transform(sys, ell);
  const State psi = random_state(12, rng);
  auto defect = [&](double dt) {
    const State lhs = phi_map(ell, evolve(gauged, phi_map(-ell, psi), T, dt).final);
    const State rhs = std::polar(1.0, -ell * T) * evolve(sys, psi, T, dt).final;
    return state_dist(lhs, rhs) / state_norm(psi);
  };
  const double d1 = defect(0.02), d2 = defect(0.01);
  CHECK(d1 < 1e-2);
  CHECK(d1 / d2 == doctest::Approx(4.0).epsilon(0.1));
  // the opposite phase is far off
  const State wrong = std::polar(1.0, ell * T) * evolve(sys, psi, T, 0.01).final;
  const State lhs = phi_map(ell, evolve(gauged, phi_map(-ell, psi), T, 0.01).final);
  CHECK(state_dist(lhs, wrong) / state_norm(psi) > 0.1);
}

TEST_CASE("energy derivative identity") {
  SUBCASE("scalar k commutes with h") {
    std::mt19937_64 rng(9);
    const Mat h0 = oracle::random_spd(10, rng);
    const SpMat k = 0.7 * identity(10);
    const KGSystem sys(h0.sparseView(), k);
    const State psi = random_state(10, rng);
    CHECK(energy_rate(sys, psi) == doctest::Approx(0.0).scale(1.0));
    const EnergyDerivativeCheck c = energy_derivative_check(sys, psi, 1.0, 0.05);
    for (std::size_t i = 0; i < c.t.size(); ++i) {
      CHECK(std::abs(c.rhs[i]) <= 1e-12);
      CHECK(std::abs(c.lhs[i]) <= 1e-10);
    }
  }
  SUBCASE("rate oracle: -2 Im (u | h0 k u)") {
    std::mt19937_64 rng(10);
    const KGSystem sys = random_system(9, rng);
    const State psi = random_state(9, rng);
    const Mat h0 = Mat(sys.h0()), k = Mat(sys.k());
    const cplx ip = psi.u0.dot(h0.cast<cplx>() * (k.cast<cplx>() * psi.u0));
    CHECK(energy_rate(sys, psi) == doctest::Approx(-2.0 * ip.imag()).epsilon(1e-12));
  }
  SUBCASE("rotating background, second order") {
    const SmallKerr kerr(0.1);
    DatumSpec d;
    d.center = -6.0;
    d.waveNumber = 0.5;
    d.frequency = 0.3;
    const State psi = make_datum(kerr.g, kerr.b.sphere, d, true);
    const EnergyDerivativeCheck c1 = energy_derivative_check(*kerr.b.full, psi, 5.0, 0.025);
    const EnergyDerivativeCheck c2 = energy_derivative_check(*kerr.b.full, psi, 5.0, 0.0125);
    CHECK(c1.maxRate > 1e-6);
    CHECK(c2.maxRelativeDefect <= 1e-4);
    CHECK(c1.maxRelativeDefect / c2.maxRelativeDefect == doctest::Approx(4.0).epsilon(0.1));
    CHECK(c2.oppositeSignDefect > 1.0);
  }
}

TEST_CASE("boundedness probe") {
  SUBCASE("selfadjoint system: the sup is one") {
    const SmallKerr kerr(0.0);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-5.0, 5.0);
    std::vector<State> data;
    for (int i = 0; i < 10; ++i) {
      DatumSpec d;
      d.center = U(rng);
      d.waveNumber = U(rng) / 5.0;
      d.frequency = U(rng) / 5.0;
      d.angularIndex = i % 3;
      data.push_back(make_datum(kerr.g, kerr.b.sphere, d, true));
    }
    const BoundednessReport r = boundedness_probe(*kerr.b.full, data, 10.0, 0.1);
    CHECK(r.sup == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(std::abs(r.lastQuartileSlope) <= 1e-8);
    const BoundednessReport r2 = boundedness_probe(*kerr.b.full, data, 10.0, 0.1, 3);
    CHECK(r2.supRatio == r.supRatio);
  }
  SUBCASE("profile system with an in-going datum") {
    const SmallKerr kerr(0.1);
    DatumSpec d;
    d.kind = "in-going";
    d.ell = kerr.b.ell;
    d.center = 5.0;
    d.width = 1.5;
    const State psi = make_datum(kerr.g, kerr.b.sphere, d, false);
    const BoundednessReport r = boundedness_probe(*kerr.b.profileRight, {psi}, 10.0, 0.1);
    CHECK(r.sup == doctest::Approx(1.0).epsilon(1e-8));
  }
  SUBCASE("running sup is monotone") {
    const SmallKerr kerr(0.1);
    DatumSpec d;
    d.kind = "ergo-bump";
    d.center = -4.0;
    d.waveNumber = 0.5;
    const BoundednessReport r =
        boundedness_probe(*kerr.b.full, {make_datum(kerr.g, kerr.b.sphere, d, true)}, 10.0, 0.1, 1, 4);
    for (std::size_t s = 1; s < r.runningSup.size(); ++s) CHECK(r.runningSup[s] >= r.runningSup[s - 1]);
    CHECK(r.sup >= 1.0);
  }
  CHECK_THROWS_AS(boundedness_probe(KGSystem(SpMat(1, 1), SpMat(1, 1)), {}, 1.0, 0.1), ValidationError);
}

TEST_CASE("decay probe") {
  SUBCASE("free profile wave leaves a decaying weight") {
    const SpacetimeParams p(0.03, 1.0, 0.1);
    const ModeGrid g = ModeGrid::make(1, 399, 40.0, 1);
    const ProfilePair prof = assemble_profiles(p, find_horizons(p), g);
    DatumSpec d;
    d.kind = "in-going";
    d.width = 2.0;
    const State psi = make_datum(g, SphereBasis{}, d, false);
    const DecayReport r = decay_probe(prof.right, psi, cosh_weight(g, 1.0, false), 30.0, 0.05);
    CHECK(r.decayFactor <= 1e-6);
    CHECK(r.integrated > 0.0);
  }
  SUBCASE("non-rotating separable mode") {
    const SpacetimeParams p(0.03, 1.0, 0.0);
    const HorizonData hz = find_horizons(p);
    const double X = 170.0;
    const RWMap rw(p, hz, 1601, X + 1.0);
    std::vector<double> ratios;
    for (const int Nx : {425, 851}) {
      const ModeGrid g = ModeGrid::make(1, Nx, X, 4);
      const std::vector<KGSystem> sep = assemble_separable(p, hz, rw, g, 1);
      DatumSpec d;
      d.width = 1.5;
      const State psi = make_datum(g, SphereBasis{}, d, false);
      check_causal_window(g, support_radius(g, psi), 150.0, 5.0);
      const DecayReport r = decay_probe(sep[0], psi, cosh_weight(g, 1.0, false), 150.0, 0.4 * g.dx);
      CHECK(r.decayFactor <= 0.1);
      ratios.push_back(r.integratedRatio);
    }
    CHECK(ratios[1] == doctest::Approx(ratios[0]).epsilon(0.25));
  }
}

TEST_CASE("initial data") {
  const SmallKerr kerr(0.1);
  DatumSpec d;
  d.center = 2.0;
  d.width = 1.0;
  d.frequency = 0.5;
  d.angularIndex = 1;
  const State psi = make_datum(kerr.g, kerr.b.sphere, d, true);
  CHECK(psi.dim() == kerr.g.dim2d());
  CHECK((psi.u1 - 0.5 * psi.u0).norm() <= 1e-15);
  // angular profile is the chosen sphere eigenvector
  int j = 0;
  while (kerr.g.x[j] < 2.0 - 1e-9) ++j;
  REQUIRE(kerr.g.x[j] == doctest::Approx(2.0).epsilon(1e-12));
  for (int i = 0; i < kerr.g.Ntheta; ++i)
    CHECK(std::abs(psi.u0[kerr.g.index(j, i)] - kerr.b.sphere.Z(i, 1)) <= 1e-14);

  d.kind = "in-going";
  d.ell = 0.3;
  const State in = make_datum(kerr.g, kerr.b.sphere, d, false);
  for (int jj = 30; jj < 60; ++jj) {
    const double y = kerr.g.x[jj] - 2.0;
    const double f = std::exp(-y * y / 2.0);
    CHECK(std::abs(in.u1[jj] - cplx(0.3 * f, y * f)) <= 1e-14);  // -i (u' + i l u)
  }

  d.kind = "bogus";
  CHECK_THROWS_AS(make_datum(kerr.g, kerr.b.sphere, d, false), ValidationError);
  d.kind = "gaussian";
  d.width = 0.0;
  CHECK_THROWS_AS(make_datum(kerr.g, kerr.b.sphere, d, false), ValidationError);
  d.width = 1.0;
  d.angularIndex = 3;
  CHECK_THROWS_AS(make_datum(kerr.g, kerr.b.sphere, d, true), ValidationError);
}

TEST_CASE("causal window") {
  const ModeGrid g = ModeGrid::make(0, 81, 20.0, 1);
  DatumSpec d;
  d.width = 1.0;
  const State psi = make_datum(g, SphereBasis{}, d, false);
  const double rad = support_radius(g, psi);
  CHECK(rad == doctest::Approx(7.5).epsilon(0.05));  // exp(-x^2/2) = 1e-12 at |x| ~ 7.43
  CHECK_NOTHROW(check_causal_window(g, rad, 10.0, 2.0));
  try {
    check_causal_window(g, rad, 12.0, 2.0);
    FAIL("expected CausalWindowExceeded");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.name()) == "CausalWindowExceeded");
  }
}

TEST_CASE("superradiance fixture") {
  const SuperradianceFixture f = superradiance_fixture();
  const SpacetimeParams p(f.Lambda, f.M, f.a);
  const HorizonData hz = find_horizons(p);
  const RWMap rw(p, hz, 801, f.X + 1.0);
  const ModeGrid g = ModeGrid::make(f.n, f.Nx, f.X, f.Ntheta);
  const KGSystem full = assemble_full_mode(p, hz, rw, g);
  const State psi = make_datum(g, sphere_basis(g, p), f.datum, true);
  check_causal_window(g, support_radius(g, psi), f.T, 2.0);
  const EvolutionRun run = evolve(full, psi, f.T, f.dt);
  const double tol = 1e-9;
  CHECK(run.charge_drift() <= tol);
  CHECK(run.growth() > 1.0 + 10.0 * tol);
  MESSAGE("superradiant growth gamma = " << run.growth() - 1.0);
}
