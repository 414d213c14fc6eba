#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dsk/spectral.hpp"
#include "oracles.hpp"

using namespace dsk;

namespace {

KGSystem diag_system(std::vector<double> h0, double c = 0.0) {
  const Vec d = Eigen::Map<Vec>(h0.data(), Eigen::Index(h0.size()));
  return KGSystem(diag_matrix(d), SpMat(c * identity(d.size())));
}

KGSystem random_system(int n, std::mt19937_64& rng, double kscale = 1.0) {
  const Mat h0 = oracle::random_spd(n, rng);
  const Mat k = oracle::random_sym(n, rng, kscale);
  return KGSystem(h0.sparseView(), k.sparseView());
}

std::vector<cplx> as_vector(std::initializer_list<cplx> l) { return l; }

}  // namespace

TEST_CASE("eigenvalues of small explicit systems") {
  const SpectrumReport r = eig_hamiltonian(diag_system({1.0, 4.0}));
  CHECK(oracle::multiset_distance(r.eigenvalues, as_vector({-2.0, -1.0, 1.0, 2.0})) <= 1e-14);
  CHECK(r.maxResidual <= 1e-14);
  CHECK(r.complexCount == 0);

  // k = c, h0 = omega^2: roots of omega^2 - (c - z)^2
  const double c = 0.3;
  const SpectrumReport s = eig_hamiltonian(diag_system({0.25, 2.25}, c));
  CHECK(oracle::multiset_distance(s.eigenvalues, as_vector({c - 1.5, c - 0.5, c + 0.5, c + 1.5})) <= 1e-13);
  CHECK(s.pencilCrossCheck <= 1e-13);

  CHECK_THROWS_AS(eig_hamiltonian(diag_system({1.0, 2.0}), EigenOptions{3}), ValidationError);
}

TEST_CASE("random systems: conjugation pairing and pencil cross-check") {
  std::mt19937_64 rng(21);
  int sawComplex = 0;
  for (int t = 0; t < 20; ++t) {
    const KGSystem s = random_system(6, rng, 2.0);
    const SpectrumReport r = eig_hamiltonian(s);
    CHECK(r.eigenvalues.size() == 12);
    CHECK(r.conjugationPairingError <= 1e-9);
    CHECK(r.maxResidual <= 1e-8);
    CHECK(r.pencilCrossCheck <= 1e-8);
    sawComplex += r.complexCount > 0;
    // independent quadratic-root oracle via the linearization in Eigen's complex solver
    const CMat H = Mat(hamiltonian_matrix(s)).cast<cplx>();
    Eigen::ComplexEigenSolver<CMat> ces(H, false);
    std::vector<cplx> ref(ces.eigenvalues().data(), ces.eigenvalues().data() + 12);
    CHECK(oracle::multiset_distance(r.eigenvalues, ref) <= 1e-8);
    const std::vector<cplx> roots = pencil_roots(s, {});
    CHECK(oracle::multiset_distance(r.eigenvalues, roots) <= 1e-8);
  }
  CHECK(sawComplex > 0);  // the ensemble exercises complex pairs

  // scalar: roots of h0 - (k - z)^2 by the quadratic formula
  const KGSystem one(Mat::Constant(1, 1, 2.0).sparseView(), Mat::Constant(1, 1, 1.7).sparseView());
  const auto [z1, z2] = oracle::quadratic_roots(-1.0, 2 * 1.7, 2.0 - 1.7 * 1.7);
  CHECK(oracle::multiset_distance(eig_hamiltonian(one).eigenvalues, {z1, z2}) <= 1e-13);
}

TEST_CASE("pencil roots") {
  std::mt19937_64 rng(22);
  const KGSystem s = random_system(4, rng);
  const SpectrumReport r = eig_hamiltonian(s);
  const SearchRegion box{-1.0, 1.5, -2.0, 2.0};
  std::vector<cplx> inside;
  for (const cplx z : r.eigenvalues)
    if (box.contains(z)) inside.push_back(z);
  CHECK(oracle::multiset_distance(pencil_roots(s, box), inside) <= 1e-8);

  const KGSystem even(oracle::random_spd(5, rng).sparseView(), SpMat(5, 5));
  const std::vector<cplx> roots = pencil_roots(even, {});
  std::vector<cplx> neg;
  for (const cplx z : roots) neg.push_back(-z);
  CHECK(oracle::multiset_distance(roots, neg) <= 1e-10);

  // profile system on the left: l +- xi with xi the discrete Dirichlet frequencies
  const ModeGrid g = ModeGrid::make(1, 30, 10.0, 2);
  const SpacetimeParams p(0.03, 1.0, 0.1);
  const HorizonData hz = find_horizons(p);
  const ProfilePair pr = assemble_profiles(p, hz, g);
  const double ell = ell_for_mode(p, hz, 1);
  std::vector<cplx> expect;
  for (int j = 1; j <= g.Nx; ++j) {
    const double xi = std::sqrt(2 - 2 * std::cos(j * std::numbers::pi / (g.Nx + 1))) / g.dx;
    expect.push_back(ell + xi);
    expect.push_back(ell - xi);
  }
  CHECK(oracle::multiset_distance(pencil_roots(pr.left, {}), expect) <= 1e-10);
  CHECK(oracle::multiset_distance(eig_hamiltonian(pr.left).eigenvalues, expect) <= 1e-10);
}

TEST_CASE("shift-invert eigenvalues near a target") {
  std::mt19937_64 rng(23);
  const KGSystem s = random_system(40, rng, 0.5);
  const SpectrumReport all = eig_hamiltonian(s);
  const cplx target(0.4, 0.05);
  const SpectrumReport near = eig_near(s, target, 4);
  REQUIRE(near.eigenvalues.size() == 4);
  std::vector<cplx> sorted = all.eigenvalues;
  std::sort(sorted.begin(), sorted.end(), [&](cplx a, cplx b) { return std::abs(a - target) < std::abs(b - target); });
  sorted.resize(4);
  CHECK(oracle::multiset_distance(near.eigenvalues, sorted) <= 1e-8);
  CHECK(near.maxResidual <= 1e-8);
}

TEST_CASE("a = 0 full operator has a real spectrum") {
  const SpacetimeParams p(0.03, 1.0, 0.0);
  const HorizonData hz = find_horizons(p);
  const RWMap rw(p, hz, 401, 21.0);
  const ModeGrid g = ModeGrid::make(1, 40, 20.0, 4);
  const KGSystem full = assemble_full_mode(p, hz, rw, g);
  const SpectrumReport r = eig_hamiltonian(full);
  CHECK(r.maxAbsImag <= 1e-9);
  CHECK(r.maxResidual <= 1e-8);
  CHECK(r.pencilCrossCheck <= 1e-8);
}

TEST_CASE("weighted resolvent scan") {
  const ModeGrid g = ModeGrid::make(1, 120, 30.0, 2);
  const SpacetimeParams p(0.03, 1.0, 0.1);
  const HorizonData hz = find_horizons(p);
  const ProfilePair pr = assemble_profiles(p, hz, g);
  const Vec w = cosh_weight(g, 0.1, false);
  ScanOptions opt;
  for (double l = -3.0; l <= 3.0 + 1e-12; l += 0.5) opt.lambdaGrid.push_back(l);
  const ResonanceScan sc = weighted_resolvent_scan(pr.right, w, opt);
  CHECK(sc.table.size() == opt.lambdaGrid.size() * 3);
  CHECK(sc.peakCandidates.empty());
  for (const auto& row : sc.table) {
    CHECK(std::isfinite(row.norm));
    CHECK(row.norm > 0);
  }
  // norms grow (weakly) as delta decreases, up to estimator noise
  for (std::size_t l = 0; l < sc.lambdaGrid.size(); ++l)
    for (std::size_t d = 1; d < 3; ++d) CHECK(sc.table[l * 3 + d].norm >= 0.95 * sc.table[l * 3 + d - 1].norm);

  // re-estimation with a different seed agrees to about two digits
  const double n1 = weighted_resolvent_norm(pr.right, w, {1.0, 0.4}, 20, 3, 5);
  const double n2 = weighted_resolvent_norm(pr.right, w, {1.0, 0.4}, 20, 3, 99);
  CHECK(n1 == doctest::Approx(n2).epsilon(0.02));
  // power estimate against the dense largest singular value
  const CMat R = resolvent_matrix(pr.right, {1.0, 0.4});
  Vec ww(2 * g.Nx);
  ww << w, w;
  const CMat A = ww.asDiagonal() * R * ww.asDiagonal();
  Eigen::JacobiSVD<CMat> svd(A);
  CHECK(n1 == doctest::Approx(svd.singularValues()[0]).epsilon(0.02));

  // threads do not change results
  ScanOptions o2 = opt;
  o2.threads = 3;
  const ResonanceScan sc2 = weighted_resolvent_scan(pr.right, w, o2);
  for (std::size_t i = 0; i < sc.table.size(); ++i) CHECK(sc.table[i].norm == sc2.table[i].norm);

  ScanOptions bad = opt;
  bad.deltaList = {0.5, 0.0};
  CHECK_THROWS_AS(weighted_resolvent_scan(pr.right, w, bad), ValidationError);
}

TEST_CASE("scan of a massive n = 0 separable system away from zero") {
  const SpacetimeParams p(0.03, 1.0, 0.0, 0.5);
  const HorizonData hz = find_horizons(p);
  const RWMap rw(p, hz, 401, 41.0);
  const ModeGrid g = ModeGrid::make(0, 160, 40.0, 4);
  const std::vector<KGSystem> sep = assemble_separable(p, hz, rw, g, 1);
  ScanOptions opt;
  for (double l = -3.0; l <= 3.0 + 1e-12; l += 0.25)
    if (std::abs(l) > 0.2) opt.lambdaGrid.push_back(l);
  const ResonanceScan sc = weighted_resolvent_scan(sep[0], cosh_weight(g, 0.1, false), opt);
  CHECK(sc.peakCandidates.empty());
}

TEST_CASE("resolvent bounds") {
  // scalar diagonal oracle: ||p^{-1}(z)|| = max 1/|w^2 - z^2|
  const KGSystem s = diag_system({1.0, 4.0, 9.0});
  const std::vector<cplx> zs = resolvent_fan(0.0, 20);
  CHECK(zs.size() == 20);
  const auto b = resolvent_bounds(s, zs);
  for (std::size_t i = 0; i < zs.size(); ++i) {
    const cplx z = zs[i];
    double ref = 0, refE = 0;
    for (double w2 : {1.0, 4.0, 9.0}) {
      ref = std::max(ref, 1.0 / std::abs(w2 - z * z));
      refE = std::max(refE, std::sqrt(w2) / std::abs(w2 - z * z));
    }
    CHECK(b[i].pencilInverseNorm == doctest::Approx(ref).epsilon(1e-6));
    CHECK(b[i].energyNorm == doctest::Approx(refE).epsilon(1e-6));
    CHECK(b[i].scaledPencil == doctest::Approx(ref * std::abs(z) * std::abs(z.imag())).epsilon(1e-6));
    CHECK(std::abs(z) >= 0.55 - 1e-12);
  }
  for (const cplx z : resolvent_fan(2.0, 50)) CHECK(std::abs(z) >= 2.2 - 1e-12);
}

TEST_CASE("glued resolvent") {
  std::mt19937_64 rng(24);
  {
    // trivial gluing: i_+ = 1, i_- = 0
    const KGSystem s = random_system(8, rng, 0.5);
    GluedParts gp{&s, &s, &s, Vec::Ones(8), Vec::Zero(8), Vec::Zero(8), Vec::Zero(8)};
    const GluedCheck c = glued_resolvent_check(gp, {0.0, 2.0});
    CHECK(c.residual <= 1e-12);
    CHECK(c.identityDefect <= 1e-12);
  }
  const SpacetimeParams p(0.03, 1.0, 0.05);
  const HorizonData hz = find_horizons(p);
  const RWMap rw(p, hz, 401, 41.0);
  const ModeGrid g = ModeGrid::make(1, 79, 40.0, 3);
  const OperatorBundle b = assemble_bundle(p, hz, rw, g);
  const GluedParts gp = glued_parts(b);
  for (const cplx z : {cplx(0, 2), cplx(1, 2)}) {
    const GluedCheck c = glued_resolvent_check(gp, z);
    CHECK(c.residual <= 1e-8);
    CHECK(c.identityDefect <= 1e-10);
    CHECK(c.commutatorDefect == 0.0);
    CHECK(c.factorInverseDefect <= 1e-10);
    CHECK(c.factorProductDefect <= 1e-10);
    CHECK(c.rcond > 1e-6);
  }
}

TEST_CASE("Riesz projectors") {
  const KGSystem s = diag_system({1.0, 4.0});
  const RieszResult none = riesz_projector(s, {0.0, 0.0}, 0.5, 256);
  CHECK(none.enclosed == 0);
  CHECK(none.norm <= 1e-8);
  const RieszResult all = riesz_projector(s, {0.0, 0.0}, 3.0, 256);
  CHECK(all.enclosed == 4);
  CHECK(spectral_norm(all.E - CMat::Identity(4, 4)) <= 1e-7);

  // eigenvalue 2: right vector (e2, 2 e2), left vector (2 e2, e2)
  const RieszResult one = riesz_projector(s, {2.0, 0.0}, 0.5, 256);
  CVec v(4), w(4);
  v << 0, 1, 0, 2;
  w << 0, 2, 0, 1;
  const CMat ref = v * w.adjoint() / w.dot(v);
  CHECK(spectral_norm(one.E - ref) <= 1e-10);
  CHECK(one.idempotencyDefect <= 1e-7);
  CHECK(one.trace == doctest::Approx(1.0).epsilon(1e-10));
  CHECK_THROWS_AS(riesz_projector(s, {2.0, 0.0}, 1.0, 64), NumericalError);

  // random non-normal instance: rank equals the enclosed count
  std::mt19937_64 rng(25);
  const KGSystem r = random_system(5, rng, 1.5);
  const SpectrumReport sp = eig_hamiltonian(r);
  const cplx c = sp.eigenvalues[sp.eigenvalues.size() / 2];
  double gap = INFINITY;
  for (const cplx z : sp.eigenvalues)
    if (z != c) gap = std::min(gap, std::abs(z - c));
  const RieszResult e = riesz_projector(r, c, 0.5 * gap, 256);
  CHECK(e.enclosed >= 1);
  CHECK(e.trace == doctest::Approx(e.enclosed).epsilon(1e-8));
  CHECK(e.idempotencyDefect <= 1e-7);
}

TEST_CASE("smooth functional calculus") {
  std::mt19937_64 rng(26);
  const KGSystem s = random_system(5, rng, 0.4);
  const CMat I = CMat::Identity(10, 10);
  const CalculusResult one = smooth_calculus(s, [](cplx) { return cplx(1); });
  CHECK(spectral_norm(one.F - I) <= 1e-8);
  CHECK_FALSE(one.contourFallback);
  const CalculusResult zero = smooth_calculus(s, [](cplx) { return cplx(0); });
  CHECK(spectral_norm(zero.F) == 0.0);

  // morphism on a pair of smooth bumps
  auto f = [](cplx z) { return cplx(std::exp(-z.real() * z.real())); };
  auto gfun = [](cplx z) { return cplx(1.0 / (1.0 + z.real() * z.real())); };
  const CMat F = smooth_calculus(s, f).F, G = smooth_calculus(s, gfun).F;
  const CMat FG = smooth_calculus(s, [&](cplx z) { return f(z) * gfun(z); }).F;
  CHECK(spectral_norm(FG - F * G) <= 1e-6 * spectral_norm(FG));

  // a window around one eigenvalue reproduces its Riesz projector
  const SpectrumReport sp = eig_hamiltonian(s);
  cplx c = 0;
  double gap = 0;
  for (const cplx z : sp.eigenvalues) {
    if (std::abs(z.imag()) > 1e-12) continue;
    double gz = INFINITY;
    for (const cplx w : sp.eigenvalues)
      if (w != z) gz = std::min(gz, std::abs(w.real() - z.real()));
    if (gz > gap) gap = gz, c = z;
  }
  REQUIRE(gap > 1e-2);
  auto win = [&](cplx z) { return cplx(std::abs(z.real() - c.real()) < 0.5 * gap ? 1.0 : 0.0); };
  const CMat W = smooth_calculus(s, win).F;
  const RieszResult e = riesz_projector(s, c, 0.5 * gap, 256);
  CHECK(e.enclosed == 1);
  CHECK(spectral_norm(W - e.E) <= 1e-6 * std::max(1.0, e.norm));
  const auto sf = sampled_function({-1.0, 0.0, 1.0}, {0.0, 1.0, 0.0});
  CHECK(sf(cplx(0.5, 3.0)) == cplx(0.5));
  CHECK(sf(cplx(2.0, 0.0)) == cplx(0.0));
}
