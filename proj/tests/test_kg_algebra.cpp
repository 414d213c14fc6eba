#include <doctest.h>

#include <random>

#include "dsk/kg_algebra.hpp"
#include "oracles.hpp"

using namespace dsk;

namespace {

KGSystem random_system(int n, std::mt19937_64& rng, double kscale = 1.0) {
  const Mat h0 = oracle::random_spd(n, rng);
  const Mat k = oracle::random_sym(n, rng, kscale);
  return KGSystem(h0.sparseView(), k.sparseView());
}

State random_state(int n, std::mt19937_64& rng) {
  return {oracle::random_cvec(n, rng), oracle::random_cvec(n, rng)};
}

double rel(const CMat& a, const CMat& b) { return (a - b).norm() / std::max(1e-300, b.norm()); }

}  // namespace

TEST_CASE("system invariants") {
  std::mt19937_64 rng(1);
  const KGSystem s = random_system(6, rng);
  CHECK(symmetry_defect(s.h0()) <= 1e-12);
  CHECK(SpMat(s.h() + s.k() * s.k() - s.h0()).norm() <= 1e-14 * s.h0().norm());
  Mat notSym = Mat::Identity(3, 3);
  notSym(0, 1) = 1.0;
  CHECK_THROWS_AS(KGSystem(notSym.sparseView(), Mat::Zero(3, 3).sparseView()), ValidationError);
  CHECK_THROWS_AS(KGSystem((-Mat::Identity(3, 3)).sparseView(), Mat::Zero(3, 3).sparseView()), NumericalError);
  CHECK_THROWS_AS(KGSystem(Mat::Identity(3, 3).sparseView(), Mat::Zero(2, 2).sparseView()), ValidationError);
}

TEST_CASE("pencil_apply") {
  std::mt19937_64 rng(2);
  const KGSystem s = random_system(4, rng);
  const CVec u = oracle::random_cvec(4, rng);
  CHECK((pencil_apply(s, 0.0, u) - s.h() * u).norm() <= 1e-14 * u.norm() * s.h().norm());

  const KGSystem k0(Mat(Mat::Identity(4, 4) * 2.0).sparseView(), SpMat(4, 4));
  CHECK((pencil_apply(k0, 1.5, u) - (2.0 - 2.25) * u).norm() <= 1e-14);

  const cplx z(1, 1);
  const CMat h0 = Mat(s.h0()).cast<cplx>(), k = Mat(s.k()).cast<cplx>();
  const CMat kz = k - z * CMat::Identity(4, 4);
  const CMat ref = h0 - kz * kz;
  CHECK((pencil_apply(s, z, u) - ref * u).norm() <= 1e-13 * (ref * u).norm());
  CHECK(rel(CMat(pencil_matrix(s, z)), ref) <= 1e-13);
  const CMat pz = CMat(pencil_matrix(s, z)), pzb = CMat(pencil_matrix(s, std::conj(z)));
  CHECK((pz.adjoint() - pzb).norm() <= 1e-12 * pz.norm());
  CHECK_THROWS_AS(pencil_apply(s, z, CVec::Zero(3)), ValidationError);
}

TEST_CASE("hamiltonian matrix and its factorized form") {
  std::mt19937_64 rng(3);
  const KGSystem k0(Mat(Vec(Eigen::Vector3d(1, 2, 3)).asDiagonal()).sparseView(), SpMat(3, 3));
  const Mat H0 = Mat(hamiltonian_matrix(k0));
  Mat ref = Mat::Zero(6, 6);
  ref.topRightCorner(3, 3) = Mat::Identity(3, 3);
  ref.bottomLeftCorner(3, 3) = Mat(k0.h());
  CHECK((H0 - ref).norm() == 0.0);

  const KGSystem s = random_system(3, rng);
  const Mat h = Mat(s.h()), k = Mat(s.k()), h0 = Mat(s.h0());
  Mat phiK = Mat::Identity(6, 6), phiMK = Mat::Identity(6, 6), Khat(6, 6);
  phiK.bottomLeftCorner(3, 3) = k;
  phiMK.bottomLeftCorner(3, 3) = -k;
  Khat << k, Mat::Identity(3, 3), h0, k;
  const Mat H = Mat(hamiltonian_matrix(s));
  CHECK((phiK * Khat * phiMK - H).norm() <= 1e-12 * H.norm());
  const HamiltonianFactors f = hamiltonian_factors(s);
  CHECK((Mat(f.phiK) * Mat(f.kHat) * Mat(f.phiMinusK) - H).norm() <= 1e-12 * H.norm());

  // eigenvector candidate (u, z u) for a root of the pencil
  Eigen::ComplexEigenSolver<CMat> es(H.cast<cplx>());
  const cplx z = es.eigenvalues()[0];
  const CVec u = es.eigenvectors().col(0).head(3);
  const State cand(u, z * u);
  const State Hc = apply_hamiltonian(s, cand);
  CHECK((Hc.stacked() - z * cand.stacked()).norm() <= 1e-10 * cand.stacked().norm());
}

TEST_CASE("phi map") {
  std::mt19937_64 rng(4);
  const State psi = random_state(5, rng);
  const State id = phi_map(0.0, psi);
  CHECK((id.stacked() - psi.stacked()).norm() == 0.0);
  const KGSystem s = random_system(5, rng);
  const State pk = phi_map(s.k(), psi);
  CHECK((pk.u1 - (Mat(s.k()) * psi.u0 + psi.u1)).norm() <= 1e-14 * psi.u1.norm());
  const State back = phi_map(-0.7, phi_map(0.7, psi));
  CHECK((back.stacked() - psi.stacked()).norm() <= 1e-14 * psi.stacked().norm());
  const State comp = phi_map(0.3, phi_map(0.4, psi));
  CHECK((comp.stacked() - phi_map(0.7, psi).stacked()).norm() <= 1e-14 * psi.stacked().norm());
  const State kk = phi_map(SpMat(-s.k()), phi_map(s.k(), psi));
  CHECK((kk.stacked() - psi.stacked()).norm() <= 1e-14 * psi.stacked().norm());
}

TEST_CASE("charge") {
  const KGSystem s(Mat(Mat::Identity(3, 3)).sparseView(), SpMat(3, 3));
  CVec e1 = CVec::Zero(3);
  e1[0] = 1;
  CHECK(std::abs(charge(s, {e1, CVec::Zero(3)}, {e1, CVec::Zero(3)})) == 0.0);
  CHECK(charge(s, {e1, e1}, {e1, e1}) == cplx(2, 0));

  std::mt19937_64 rng(5);
  const KGSystem r = random_system(5, rng);
  const State u = random_state(5, rng), v = random_state(5, rng);
  CHECK(std::abs(charge(r, u, v) - std::conj(charge(r, v, u))) <= 1e-13 * std::abs(charge(r, u, v)));
  CHECK(std::abs(charge(r, u, u).imag()) <= 1e-13 * u.stacked().squaredNorm());
  // antilinear in the first slot
  const cplx c(0.3, -1.1);
  CHECK(std::abs(charge(r, c * u, v) - std::conj(c) * charge(r, u, v)) <= 1e-12 * std::abs(charge(r, u, v)));
  // definition written out with dense algebra
  const Mat k = Mat(r.k());
  const cplx ref = u.u0.dot(v.u1 - k * v.u0) + (u.u1 - k * u.u0).dot(v.u0);
  CHECK(std::abs(charge(r, u, v) - ref) <= 1e-13 * std::abs(ref));
  CHECK(std::abs(charge_plain(u, v) - (u.u0.dot(v.u1) + u.u1.dot(v.u0))) <= 1e-14 * std::abs(charge_plain(u, v)));
}

TEST_CASE("energy norms") {
  std::mt19937_64 rng(6);
  const KGSystem s = random_system(6, rng);
  const CVec u1 = oracle::random_cvec(6, rng);
  const EnergyNorms e1 = energy_norms(s, {CVec::Zero(6), u1});
  CHECK(e1.hom == doctest::Approx(u1.squaredNorm()).epsilon(1e-14));
  CHECK(e1.inhom == doctest::Approx(u1.squaredNorm()).epsilon(1e-14));

  const CVec u0 = oracle::random_cvec(6, rng);
  const Mat h0 = Mat(s.h0());
  const EnergyNorms e2 = energy_norms(s, {u0, Mat(s.k()) * u0});
  CHECK(e2.hom == doctest::Approx(u0.dot(h0 * u0).real()).epsilon(1e-12));

  // product norm of Phi(-k) u using a Cholesky half of h0
  const State u = random_state(6, rng);
  const State t = phi_map(SpMat(-s.k()), u);
  const Mat L = h0.llt().matrixL();
  const double prod = (L.transpose() * t.u0).squaredNorm() + t.u1.squaredNorm();
  const EnergyNorms e3 = energy_norms(s, u);
  CHECK(e3.hom == doctest::Approx(prod).epsilon(1e-12));
  CHECK(e3.inhom - e3.hom == doctest::Approx(u.u0.squaredNorm()).epsilon(1e-12));
  CHECK(e3.hom >= 0);
}

TEST_CASE("ell forms") {
  std::mt19937_64 rng(7);
  const KGSystem s = random_system(5, rng);
  const CVec u0 = oracle::random_cvec(5, rng);
  CHECK(std::abs(ell_form(s, 0.0, {u0, CVec::Zero(5)}, {u0, CVec::Zero(5)}) - u0.dot(Mat(s.h()) * u0)) <=
        1e-12 * u0.squaredNorm() * s.h().norm());

  const State u = random_state(5, rng), v = random_state(5, rng);
  const double ell = 0.37;
  const Mat h0 = Mat(s.h0()), k = Mat(s.k());
  const Mat L = h0.llt().matrixL();
  const Mat kl = k - ell * Mat::Identity(5, 5);
  const double polar = (u.u1 - ell * u.u0).squaredNorm() + (L.transpose() * u.u0).squaredNorm() -
                       (kl * u.u0).squaredNorm();
  CHECK(ell_form(s, ell, u, u).real() == doctest::Approx(polar).epsilon(1e-12));
  CHECK(std::abs(ell_form(s, ell, u, v) - std::conj(ell_form(s, ell, v, u))) <= 1e-12 * std::abs(ell_form(s, ell, u, v)));
  const cplx lhs = ell_form(s, ell, u, v);
  const cplx expand = (u.u1).dot(v.u1) - ell * (u.u0.dot(v.u1) + u.u1.dot(v.u0)) + ell * ell * u.u0.dot(v.u0) +
                      u.u0.dot(Mat(s.h()) * v.u0) + ell * u.u0.dot(2.0 * k * v.u0) - ell * ell * u.u0.dot(v.u0);
  CHECK(std::abs(lhs - expand) <= 1e-12 * std::abs(expand));
}

TEST_CASE("gauge transform") {
  std::mt19937_64 rng(8);
  const KGSystem s = random_system(4, rng);
  const KGSystem same = gauge_transform(s, 0.0);
  CHECK(SpMat(same.k() - s.k()).norm() == 0.0);
  CHECK(SpMat(same.h() - s.h()).norm() <= 1e-15 * s.h().norm());
  const KGSystem there = gauge_transform(gauge_transform(s, 0.7), -0.7);
  CHECK(SpMat(there.k() - s.k()).norm() <= 1e-13 * s.k().norm());
  CHECK(SpMat(there.h() - s.h()).norm() <= 1e-13 * s.h().norm());

  const double ell = 0.7;
  const KGSystem g = gauge_transform(s, ell);
  Mat phiL = Mat::Identity(8, 8), phiML = Mat::Identity(8, 8);
  phiL.bottomLeftCorner(4, 4) = ell * Mat::Identity(4, 4);
  phiML.bottomLeftCorner(4, 4) = -ell * Mat::Identity(4, 4);
  const Mat H = Mat(hamiltonian_matrix(s)), Hg = Mat(hamiltonian_matrix(g));
  // conjugation by Phi(-l) ... Phi(l) shifts the generator by l
  CHECK((phiML * H * phiL - ell * Mat::Identity(8, 8) - Hg).norm() <= 1e-12 * H.norm());
  // h' = p(l) as a matrix
  const Mat k = Mat(s.k()), h = Mat(s.h());
  CHECK((Mat(g.h()) - (h + ell * (2 * k - ell * Mat::Identity(4, 4)))).norm() <= 1e-12 * h.norm());
  CHECK(SpMat(g.h0() - s.h0()).norm() == 0.0);
}

TEST_CASE("resolvent") {
  // 1x1: h = 1, k = 0, z = i -> R = 1/2 [[i, 1], [1, i]]
  const KGSystem one(Mat(Mat::Identity(1, 1)).sparseView(), SpMat(1, 1));
  const CMat R1 = resolvent_matrix(one, cplx(0, 1));
  CMat ref(2, 2);
  ref << cplx(0, 0.5), 0.5, 0.5, cplx(0, 0.5);
  CHECK((R1 - ref).norm() <= 1e-15);

  std::mt19937_64 rng(9);
  const KGSystem s = random_system(5, rng);
  const cplx z(2.0, 0.5);
  const CMat H = Mat(hamiltonian_matrix(s)).cast<cplx>();
  const CMat R = resolvent_matrix(s, z);
  const CMat I = CMat::Identity(10, 10);
  CHECK(((H - z * I) * R - I).norm() <= 1e-10);
  CHECK((R * (H - z * I) - I).norm() <= 1e-10);

  // adjoint application agrees with the dense adjoint
  const Resolvent Rz(s, z);
  const State y = random_state(5, rng);
  CHECK((Rz.apply_adjoint(y).stacked() - R.adjoint() * y.stacked()).norm() <= 1e-11 * y.stacked().norm() * R.norm());

  // K-form resolvent inverts Khat and is conjugate to R through Phi(k)
  const CMat k = Mat(s.k()).cast<cplx>(), h0 = Mat(s.h0()).cast<cplx>();
  CMat Khat(10, 10), phiK = CMat::Identity(10, 10), phiMK = CMat::Identity(10, 10);
  Khat << k, CMat::Identity(5, 5), h0, k;
  phiK.bottomLeftCorner(5, 5) = k;
  phiMK.bottomLeftCorner(5, 5) = -k;
  const CMat RK = resolvent_k_form_matrix(s, z);
  CHECK(((Khat - z * I) * RK - I).norm() <= 1e-10);
  CHECK((phiK * RK * phiMK - R).norm() <= 1e-10 * R.norm());

  CHECK_THROWS_AS(resolvent_commuting_matrix(s, z), ValidationError);
  const KGSystem c(Mat(Vec(Eigen::Vector3d(1, 2, 3)).asDiagonal()).sparseView(),
                   Mat(Vec(Eigen::Vector3d(0.1, -0.2, 0.3)).asDiagonal()).sparseView());
  const CMat Rc = resolvent_commuting_matrix(c, z);
  CHECK((Rc - resolvent_matrix(c, z)).norm() <= 1e-12 * Rc.norm());
}

TEST_CASE("resolvent exists far from the real axis and flags spectrum") {
  std::mt19937_64 rng(10);
  const KGSystem s = random_system(6, rng, 0.5);
  // |Im z| > |Re z| + c0 region
  for (double re : {-3.0, 0.0, 2.0})
    for (double sgn : {-1.0, 1.0}) CHECK_NOTHROW(Resolvent(s, cplx(re, sgn * (std::abs(re) + 2.0 + s.kNorm()))));
  // exactly on an eigenvalue
  const KGSystem d(Mat(Vec(Eigen::Vector2d(1, 4)).asDiagonal()).sparseView(), SpMat(2, 2));
  CHECK_THROWS_AS(Resolvent(d, cplx(2.0, 0.0)), NumericalError);
}

TEST_CASE("state conversions") {
  std::mt19937_64 rng(11);
  const CVec u = oracle::random_cvec(4, rng), ut = oracle::random_cvec(4, rng);
  const State s = State::from_cauchy(u, ut);
  CHECK((s.u1 - cplx(0, -1) * ut).norm() == 0.0);
  const auto [a, b] = s.to_cauchy();
  CHECK((a - u).norm() == 0.0);
  CHECK((b - ut).norm() <= 1e-15 * ut.norm());
}
