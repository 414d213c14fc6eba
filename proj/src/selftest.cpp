#include <cmath>
#include <random>

#include "dsk/runner.hpp"
#include "dsk/scattering.hpp"
#include "dsk/spectral.hpp"

namespace dsk {

namespace {

class Suite {
 public:
  void add(std::string name, double value, double tolerance) {
    const bool pass = std::isfinite(value) && value <= tolerance;
    checks_.push_back({std::move(name), value, tolerance, pass});
  }
  std::vector<SelfCheck> take() { return std::move(checks_); }

 private:
  std::vector<SelfCheck> checks_;
};

KGSystem random_system(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Mat A(n, n), B(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = nd(rng), B(i, j) = nd(rng);
  const Mat h0 = A.transpose() * A / n + 0.5 * Mat::Identity(n, n);
  const Mat k = 0.25 * (B + B.transpose()) / std::sqrt(double(n));
  return KGSystem(h0.sparseView(), k.sparseView());
}

CVec random_cvec(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  CVec v(n);
  for (auto& e : v) e = {nd(rng), nd(rng)};
  return v;
}

double rel(const Mat& diff, const Mat& ref) { return diff.norm() / std::max(ref.norm(), 1e-300); }

void algebra_checks(Suite& s, std::mt19937_64& rng) {
  const int n = 12;
  const KGSystem sys = random_system(n, rng);
  const Mat I = Mat::Identity(2 * n, 2 * n);
  const Mat phiK = Mat(phi_matrix(sys.k())), phiMinusK = Mat(phi_matrix(SpMat(-sys.k())));
  s.add("phi_inverse", rel(phiK * phiMinusK - I, I), 1e-12);

  const HamiltonianFactors f = hamiltonian_factors(sys);
  const Mat H = Mat(hamiltonian_matrix(sys));
  s.add("hamiltonian_factorization", rel(Mat(f.phiK) * Mat(f.kHat) * Mat(f.phiMinusK) - H, H), 1e-12);

  double resolvent = 0;
  for (cplx z : {cplx(0.3, 0.7), cplx(-1.1, 0.4), cplx(0.0, 2.0)}) {
    const Resolvent R(sys, z);
    const State x{random_cvec(n, rng), random_cvec(n, rng)};
    const State y = R.apply(x);
    const State back = apply_hamiltonian(sys, y) - z * y;
    resolvent = std::max(resolvent, (back - x).stacked().norm() / x.stacked().norm());
  }
  s.add("resolvent_identity", resolvent, 1e-10);

  const double ell = 0.7;
  const Mat Hg = Mat(hamiltonian_matrix(gauge_transform(sys, ell)));
  const Mat phiL = Mat(phi_matrix(ell, n)), phiML = Mat(phi_matrix(-ell, n));
  s.add("gauge_shift", rel(phiML * H * phiL - ell * I - Hg, H), 1e-12);
}

void spectral_checks(Suite& s, std::mt19937_64& rng) {
  double residual = 0, pairing = 0, crossCheck = 0, rootGap = 0;
  for (int trial = 0; trial < 4; ++trial) {
    const KGSystem sys = random_system(8, rng);
    const SpectrumReport r = eig_hamiltonian(sys);
    residual = std::max(residual, r.maxResidual);
    pairing = std::max(pairing, r.conjugationPairingError);
    crossCheck = std::max(crossCheck, r.pencilCrossCheck);
    std::vector<cplx> roots = pencil_roots(sys, {});
    double worst = 0;
    for (cplx z : r.eigenvalues) {
      double best = INFINITY;
      for (cplx w : roots) best = std::min(best, std::abs(w - z));
      worst = std::max(worst, best);
    }
    rootGap = std::max(rootGap, worst / (1 + std::abs(r.eigenvalues.back())));
  }
  s.add("eigen_residual", residual, 1e-10);
  s.add("conjugation_pairing", pairing, 1e-8);
  s.add("pencil_cross_check", crossCheck, 1e-8);
  s.add("pencil_roots_match", rootGap, 1e-8);

  const KGSystem sys = random_system(6, rng);
  const SpectrumReport r = eig_hamiltonian(sys);
  const RieszResult all = riesz_projector(sys, 0.0, 2.0 * (1 + std::abs(r.eigenvalues.back())), 256);
  s.add("riesz_idempotency", all.idempotencyDefect, 1e-7);
  s.add("riesz_full_trace", std::abs(all.trace - 12.0), 1e-7);
}

struct SmallBench {
  SpacetimeParams p{0.03, 1.0, 0.05, 0.0};
  HorizonData hz;
  ModeGrid grid;
  OperatorBundle b;
};

SmallBench small_bench(int n) {
  SmallBench sb;
  sb.hz = find_horizons(sb.p);
  sb.grid = ModeGrid::make(n, 79, 20, 4);
  const RWMap rw(sb.p, sb.hz, 401, 21);
  BundleOptions bo;
  bo.Q = 4;
  sb.b = assemble_bundle(sb.p, sb.hz, rw, sb.grid, bo);
  return sb;
}

void geometry_checks(Suite& s) {
  const SpacetimeParams p(0.03, 1.0, 0.05);
  const HorizonData hz = find_horizons(p);
  const double scale = std::abs(delta_r(p, 0.5 * (hz.rMinus + hz.rPlus)));
  s.add("horizon_roots", std::max(std::abs(delta_r(p, hz.rMinus)), std::abs(delta_r(p, hz.rPlus))) / scale, 1e-10);
  const RWMap rw(p, hz, 401, 30);
  double roundtrip = 0;
  for (double x = -25; x <= 25; x += 2.5) roundtrip = std::max(roundtrip, std::abs(rw.x_of_point(rw.r_of_x(x)) - x));
  s.add("tortoise_roundtrip", roundtrip, 1e-9);
  s.add("surface_gravities_positive", -std::min(hz.kappaMinus, hz.kappaPlus), 0.0);
}

void bundle_checks(Suite& s, const SmallBench& sb) {
  s.add("h0_symmetry", symmetry_defect(sb.b.full->h0()), 1e-13);
  s.add("hypotheses_hold", sb.b.checks.all() ? 0.0 : 1.0, 0.0);
  const Vec& lam = sb.b.sphere.lambdas;
  const Mat ZtZ = sb.b.sphere.Z.transpose() * sb.b.sphere.Z;
  s.add("sphere_orthonormal", rel(ZtZ - Mat::Identity(lam.size(), lam.size()), ZtZ), 1e-12);
}

void evolution_checks(Suite& s, const SmallBench& sb, std::mt19937_64& rng) {
  const KGSystem& sys = *sb.b.full;
  DatumSpec spec;
  spec.center = -2;
  spec.width = 1.5;
  spec.waveNumber = 0.5;
  const State psi = make_datum(sb.grid, sb.b.sphere, spec, true);
  MonitorConfig mon;
  mon.ells = {sb.b.ell};
  const EvolutionRun run = evolve(sys, psi, 10, 0.05, mon);
  s.add("charge_drift", run.charge_drift(), 1e-9);
  s.add("ell_form_drift", run.ell_drift(0), 1e-9);

  const CayleyStepper stepper(sys, 0.05);
  const State x{random_cvec(sys.dim(), rng), random_cvec(sys.dim(), rng)};
  const State back = stepper.backward(stepper.forward(x));
  s.add("cayley_reversible", (back - x).stacked().norm() / x.stacked().norm(), 1e-12);

  const EnergyDerivativeCheck fine = energy_derivative_check(sys, psi, 2, 0.025);
  s.add("energy_derivative", fine.maxRelativeDefect, 1e-3);
}

void scattering_checks(Suite& s, const SmallBench& sb) {
  const ModeGrid g1 = ModeGrid::make(0, 399, sb.grid.X, 1);
  CVec u(g1.Nx);
  for (int j = 0; j < g1.Nx; ++j) {
    const double y = (g1.x[j] + 3) / 1.5;
    u[j] = std::exp(-0.5 * y * y) * std::polar(1.0, 0.8 * g1.x[j]);
  }
  const CVec du = profile_derivative(g1, u);
  const CVec back = cumulative_trapezoid(g1, du);
  s.add("trapezoid_roundtrip", (back - (u - CVec::Constant(u.size(), u[0]))).norm() / u.norm(), 1e-10);

  ProfileDatum d;
  d.u0 = u;
  d.u1 = CVec::Zero(g1.Nx);
  d.ell = 0.3;
  d = subtract_mean(g1, d, -3, 1.5);
  const InOutSplit split = inout_split(g1, d);
  s.add("inout_reconstruction", split.reconstructionError, 1e-12);

  const ProfileDatum a = profile_evolve(g1, profile_evolve(g1, d, 1.5), 2.0);
  const ProfileDatum c = profile_evolve(g1, d, 3.5);
  s.add("profile_group_law", (a.u0 - c.u0).norm() / c.u0.norm(), 1e-10);
}

void glued_checks(Suite& s, const SmallBench& sb) {
  const GluedParts parts = glued_parts(sb.b);
  double residual = 0, factor = 0;
  for (cplx z : {cplx(0, 2), cplx(1, 2)}) {
    const GluedCheck g = glued_resolvent_check(parts, z);
    residual = std::max(residual, g.residual);
    factor = std::max(factor, g.factorInverseDefect);
  }
  s.add("glued_resolvent", residual, 1e-8);
  s.add("triangular_factor_inverse", factor, 1e-10);
}

// Left wave operator on a long line with an in-going packet.
void wave_operator_checks(Suite& s) {
  const SpacetimeParams p(0.03, 1.0, 0.05);
  const HorizonData hz = find_horizons(p);
  const ModeGrid grid = ModeGrid::make(1, 999, 100, 4);
  const RWMap rw(p, hz, 2001, 101);
  BundleOptions bo;
  bo.Q = 4;
  const OperatorBundle b = assemble_bundle(p, hz, rw, grid, bo);
  const ProfileDatum datum = wave_packet(b, Side::Left, -25, 2.5, 2.0);
  WaveOpOptions opt;
  opt.Tschedule = {5, 10, 20, 40};
  const WaveOpReport r = wave_operator(b, Side::Left, {datum}, opt);
  double worst = 0;
  for (double q : r.gapRatios) worst = std::max(worst, q);
  s.add("wave_operator_gap_ratio", worst, 0.5);
  s.add("wave_operator_gaps_monotone", r.gapsNonincreasing ? 0.0 : 1.0, 0.0);
}

void scan_checks(Suite& s, const SmallBench& sb, unsigned seed, int threads) {
  ScanOptions so;
  so.lambdaGrid = {-1.0, -0.5, 0.5, 1.0};
  so.deltaList = {0.8, 0.4};
  so.powerIterations = 8;
  so.restarts = 2;
  so.seed = seed;
  so.threads = threads;
  const ResonanceScan r = weighted_resolvent_scan(*sb.b.full, cosh_weight(sb.grid, 1.0, true), so);
  double maxGrowth = 0;
  for (double gr : r.growth) maxGrowth = std::max(maxGrowth, gr);
  s.add("scan_growth_below_threshold", maxGrowth, so.growthThreshold);
}

}  // namespace

std::vector<SelfCheck> run_selftest(unsigned seed, int threads) {
  Suite s;
  std::mt19937_64 rng(seed);
  algebra_checks(s, rng);
  spectral_checks(s, rng);
  geometry_checks(s);
  const SmallBench sb = small_bench(1);
  bundle_checks(s, sb);
  evolution_checks(s, sb, rng);
  scattering_checks(s, sb);
  glued_checks(s, sb);
  scan_checks(s, sb, seed, threads);
  wave_operator_checks(s);
  return s.take();
}

}  // namespace dsk
