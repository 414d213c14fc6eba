#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <utility>

#include "dsk/common.hpp"

namespace dsk {

// A Klein-Gordon triple (h0, k) with h = h0 - k^2, all real symmetric.
// The working basis is orthonormal: inner products are plain Euclidean.
class KGSystem {
 public:
  KGSystem(SpMat h0, SpMat k, Vec wInv = Vec());

  Eigen::Index dim() const { return h0_.rows(); }
  const SpMat& h0() const { return h0_; }
  const SpMat& k() const { return k_; }
  const SpMat& h() const { return h_; }
  const Vec& wInv() const { return wInv_; }
  double kNorm() const { return kNorm_; }
  bool k_is_diagonal() const { return kDiagonal_; }
  const Vec& k_diag() const { return kDiag_; }

  CVec apply_h0(const CVec& u) const { return h0_ * u; }
  CVec apply_h(const CVec& u) const { return h_ * u; }
  CVec apply_k(const CVec& u) const;

 private:
  SpMat h0_, k_, h_;
  Vec wInv_, kDiag_;
  bool kDiagonal_ = false;
  double kNorm_ = 0;
};

double symmetry_defect(const SpMat& A);  // ||A - A^T||_F / ||A||_F
double norm_inf(const SpMat& A);

SpMat identity(Eigen::Index n);
SpMat diag_matrix(const Vec& d);

// First-order state Psi = (u, -i du/dt).
struct State {
  CVec u0, u1;

  State() = default;
  State(CVec a, CVec b) : u0(std::move(a)), u1(std::move(b)) {}
  static State zero(Eigen::Index n) { return {CVec::Zero(n), CVec::Zero(n)}; }
  static State from_cauchy(const CVec& u, const CVec& ut);
  // (u, du/dt)
  std::pair<CVec, CVec> to_cauchy() const;

  Eigen::Index dim() const { return u0.size(); }
  CVec stacked() const;
  static State unstack(const CVec& v);

  State& operator+=(const State& o);
  State& operator-=(const State& o);
  State& operator*=(cplx s);
};
State operator+(State a, const State& b);
State operator-(State a, const State& b);
State operator*(cplx s, State a);

CVec pencil_apply(const KGSystem& sys, cplx z, const CVec& u);
CSpMat pencil_matrix(const KGSystem& sys, cplx z);

// [[0, 1], [h, 2k]]
SpMat hamiltonian_matrix(const KGSystem& sys);
// Phi(k), Khat = [[k, 1], [h0, k]], Phi(-k); their product is the Hamiltonian.
struct HamiltonianFactors {
  SpMat phiK, kHat, phiMinusK;
};
HamiltonianFactors hamiltonian_factors(const KGSystem& sys);
State apply_hamiltonian(const KGSystem& sys, const State& psi);

// Phi(l) = [[1, 0], [l, 1]]
State phi_map(double ell, const State& psi);
State phi_map(const SpMat& k, const State& psi);
SpMat phi_matrix(const SpMat& k);
SpMat phi_matrix(double ell, Eigen::Index n);

cplx charge(const KGSystem& sys, const State& u, const State& v);
cplx charge_plain(const State& u, const State& v);

struct EnergyNorms {
  double hom = 0, inhom = 0;
};
EnergyNorms energy_norms(const KGSystem& sys, const State& u);

cplx ell_form(const KGSystem& sys, double ell, const State& u, const State& v);

// k' = k - l, h' = p(l), h0 unchanged.
KGSystem gauge_transform(const KGSystem& sys, double ell);

// Sparse LU of p(z) with a reciprocal condition estimate.
class PencilFactorization {
 public:
  PencilFactorization(const KGSystem& sys, cplx z);
  CVec solve(const CVec& rhs) const;
  CVec solve_adjoint(const CVec& rhs) const;
  double rcond() const { return rcond_; }
  cplx z() const { return z_; }

 private:
  cplx z_;
  Eigen::SparseLU<CSpMat, Eigen::COLAMDOrdering<int>> lu_;
  double rcond_ = 0;
};

// p(z) = h + z(2k - z) with a small factorization cache. The cache is
// internally synchronized so one pencil may be shared across threads.
class QuadraticPencil {
 public:
  explicit QuadraticPencil(const KGSystem& sys, std::size_t cacheSize = 8)
      : sys_(&sys), cacheSize_(cacheSize) {}
  CVec apply(cplx z, const CVec& u) const { return pencil_apply(*sys_, z, u); }
  std::shared_ptr<const PencilFactorization> factor(cplx z) const;
  CVec solve(cplx z, const CVec& rhs) const { return factor(z)->solve(rhs); }
  const KGSystem& system() const { return *sys_; }

 private:
  const KGSystem* sys_;
  std::size_t cacheSize_;
  mutable std::mutex mu_;
  mutable std::map<std::pair<double, double>, std::shared_ptr<const PencilFactorization>> cache_;
};

// R(z) = (H - z)^{-1} = p(z)^{-1} [[z - 2k, 1], [h, z]]
class Resolvent {
 public:
  Resolvent(const KGSystem& sys, cplx z);
  State apply(const State& x) const;
  State apply_adjoint(const State& x) const;
  double rcond() const { return fac_.rcond(); }
  cplx z() const { return z_; }

 private:
  const KGSystem* sys_;
  cplx z_;
  PencilFactorization fac_;
};

CMat resolvent_matrix(const KGSystem& sys, cplx z);
// Resolvent of Khat = [[k, 1], [h0, k]].
CMat resolvent_k_form_matrix(const KGSystem& sys, cplx z);
// Right-multiplied form valid when [h, k] = 0.
CMat resolvent_commuting_matrix(const KGSystem& sys, cplx z);

}  // namespace dsk
