#include "dsk/kg_algebra.hpp"

#include <cmath>

namespace dsk {

namespace {

bool is_diagonal(const SpMat& A) {
  for (int c = 0; c < A.outerSize(); ++c)
    for (SpMat::InnerIterator it(A, c); it; ++it)
      if (it.row() != it.col() && it.value() != 0.0) return false;
  return true;
}

double symmetric_norm_estimate(const SpMat& A) {
  if (A.rows() == 0) return 0.0;
  if (A.rows() <= 600) {
    Eigen::SelfAdjointEigenSolver<Mat> es(Mat(A), Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  Vec v = Vec::Ones(A.rows()) + 0.1 * Vec::LinSpaced(A.rows(), 0.0, 1.0);
  v.normalize();
  double est = 0;
  for (int it = 0; it < 300; ++it) {
    Vec w = A * v;
    const double nw = w.norm();
    if (nw == 0) return 0.0;
    if (std::abs(nw - est) <= 1e-12 * nw) {
      est = nw;
      break;
    }
    est = nw;
    v = w / nw;
  }
  return est;
}

CSpMat to_complex(const SpMat& A) { return A.cast<cplx>(); }

}  // namespace

double norm_inf(const SpMat& A) {
  Vec rows = Vec::Zero(A.rows());
  for (int c = 0; c < A.outerSize(); ++c)
    for (SpMat::InnerIterator it(A, c); it; ++it) rows[it.row()] += std::abs(it.value());
  return rows.size() ? rows.maxCoeff() : 0.0;
}

double symmetry_defect(const SpMat& A) {
  const double n = A.norm();
  if (n == 0) return 0.0;
  SpMat At = A.transpose();
  return SpMat(A - At).norm() / n;
}

SpMat identity(Eigen::Index n) {
  SpMat I(n, n);
  I.setIdentity();
  return I;
}

SpMat diag_matrix(const Vec& d) {
  SpMat D(d.size(), d.size());
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(d.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) t.emplace_back(i, i, d[i]);
  D.setFromTriplets(t.begin(), t.end());
  return D;
}

KGSystem::KGSystem(SpMat h0, SpMat k, Vec wInv)
    : h0_(std::move(h0)), k_(std::move(k)), wInv_(std::move(wInv)) {
  require_dims(h0_.rows(), h0_.cols(), "KGSystem h0");
  require_dims(k_.rows(), k_.cols(), "KGSystem k");
  require_dims(h0_.rows(), k_.rows(), "KGSystem h0/k");
  if (wInv_.size() == 0) wInv_ = Vec::Ones(h0_.rows());
  require_dims(wInv_.size(), h0_.rows(), "KGSystem weight");
  h0_.makeCompressed();
  k_.makeCompressed();
  if (symmetry_defect(h0_) > 1e-12) throw ValidationError("NotSymmetric", "h0 is not symmetric");
  if (symmetry_defect(k_) > 1e-12) throw ValidationError("NotSymmetric", "k is not symmetric");

  kDiagonal_ = is_diagonal(k_);
  if (kDiagonal_) {
    kDiag_ = k_.diagonal();
    kNorm_ = kDiag_.size() ? kDiag_.cwiseAbs().maxCoeff() : 0.0;
    h_ = h0_ - SpMat(diag_matrix(kDiag_.cwiseProduct(kDiag_)));
  } else {
    kNorm_ = symmetric_norm_estimate(k_);
    h_ = h0_ - SpMat(k_ * k_);
  }
  h_.makeCompressed();

  // h0 >= -tol ||h0||: an LDL^T of the shifted matrix must have positive pivots.
  const double scale = std::max(norm_inf(h0_), 1e-300);
  SpMat shifted = h0_ + 1e-10 * scale * identity(dim());
  Eigen::SimplicialLDLT<SpMat> ldlt(shifted);
  if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0).any())
    throw NumericalError("HypothesisViolation", "h0 is not positive semidefinite");
}

CVec KGSystem::apply_k(const CVec& u) const {
  if (kDiagonal_) return kDiag_.cast<cplx>().cwiseProduct(u);
  return k_ * u;
}

State State::from_cauchy(const CVec& u, const CVec& ut) { return {u, cplx(0, -1) * ut}; }

std::pair<CVec, CVec> State::to_cauchy() const { return {u0, cplx(0, 1) * u1}; }

CVec State::stacked() const {
  CVec v(2 * dim());
  v << u0, u1;
  return v;
}

State State::unstack(const CVec& v) {
  const Eigen::Index n = v.size() / 2;
  return {v.head(n), v.tail(n)};
}

State& State::operator+=(const State& o) {
  u0 += o.u0;
  u1 += o.u1;
  return *this;
}
State& State::operator-=(const State& o) {
  u0 -= o.u0;
  u1 -= o.u1;
  return *this;
}
State& State::operator*=(cplx s) {
  u0 *= s;
  u1 *= s;
  return *this;
}
State operator+(State a, const State& b) { return a += b; }
State operator-(State a, const State& b) { return a -= b; }
State operator*(cplx s, State a) { return a *= s; }

CVec pencil_apply(const KGSystem& sys, cplx z, const CVec& u) {
  require_dims(u.size(), sys.dim(), "pencil_apply");
  return sys.apply_h(u) + z * (2.0 * sys.apply_k(u) - z * u);
}

CSpMat pencil_matrix(const KGSystem& sys, cplx z) {
  CSpMat P = to_complex(sys.h()) + (2.0 * z) * to_complex(sys.k());
  P -= (z * z) * to_complex(identity(sys.dim()));
  P.makeCompressed();
  return P;
}

namespace {

SpMat blocks(const SpMat& A, const SpMat& B, const SpMat& C, const SpMat& D) {
  const Eigen::Index n = A.rows();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(A.nonZeros() + B.nonZeros() + C.nonZeros() + D.nonZeros());
  auto put = [&](const SpMat& M, Eigen::Index r0, Eigen::Index c0) {
    for (int c = 0; c < M.outerSize(); ++c)
      for (SpMat::InnerIterator it(M, c); it; ++it) t.emplace_back(it.row() + r0, it.col() + c0, it.value());
  };
  put(A, 0, 0);
  put(B, 0, n);
  put(C, n, 0);
  put(D, n, n);
  SpMat out(2 * n, 2 * n);
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

}  // namespace

SpMat hamiltonian_matrix(const KGSystem& sys) {
  const Eigen::Index n = sys.dim();
  SpMat Z(n, n);
  return blocks(Z, identity(n), sys.h(), 2.0 * sys.k());
}

HamiltonianFactors hamiltonian_factors(const KGSystem& sys) {
  return {phi_matrix(sys.k()), blocks(sys.k(), identity(sys.dim()), sys.h0(), sys.k()),
          phi_matrix(SpMat(-sys.k()))};
}

State apply_hamiltonian(const KGSystem& sys, const State& psi) {
  require_dims(psi.dim(), sys.dim(), "apply_hamiltonian");
  return {psi.u1, sys.apply_h(psi.u0) + 2.0 * sys.apply_k(psi.u1)};
}

State phi_map(double ell, const State& psi) { return {psi.u0, ell * psi.u0 + psi.u1}; }

State phi_map(const SpMat& k, const State& psi) {
  require_dims(psi.dim(), k.rows(), "phi_map");
  return {psi.u0, k * psi.u0 + psi.u1};
}

SpMat phi_matrix(const SpMat& k) {
  const Eigen::Index n = k.rows();
  SpMat Z(n, n);
  return blocks(identity(n), Z, k, identity(n));
}

SpMat phi_matrix(double ell, Eigen::Index n) { return phi_matrix(SpMat(ell * identity(n))); }

cplx charge(const KGSystem& sys, const State& u, const State& v) {
  require_dims(u.dim(), sys.dim(), "charge");
  require_dims(v.dim(), sys.dim(), "charge");
  return u.u0.dot(v.u1 - sys.apply_k(v.u0)) + (u.u1 - sys.apply_k(u.u0)).dot(v.u0);
}

cplx charge_plain(const State& u, const State& v) {
  require_dims(u.dim(), v.dim(), "charge_plain");
  return u.u0.dot(v.u1) + u.u1.dot(v.u0);
}

EnergyNorms energy_norms(const KGSystem& sys, const State& u) {
  require_dims(u.dim(), sys.dim(), "energy_norms");
  const CVec w = u.u1 - sys.apply_k(u.u0);
  EnergyNorms e;
  e.hom = w.squaredNorm() + u.u0.dot(sys.apply_h0(u.u0)).real();
  e.inhom = e.hom + u.u0.squaredNorm();
  return e;
}

cplx ell_form(const KGSystem& sys, double ell, const State& u, const State& v) {
  require_dims(u.dim(), sys.dim(), "ell_form");
  require_dims(v.dim(), sys.dim(), "ell_form");
  return (u.u1 - ell * u.u0).dot(v.u1 - ell * v.u0) + u.u0.dot(pencil_apply(sys, ell, v.u0));
}

KGSystem gauge_transform(const KGSystem& sys, double ell) {
  return KGSystem(sys.h0(), SpMat(sys.k() - ell * identity(sys.dim())), sys.wInv());
}

PencilFactorization::PencilFactorization(const KGSystem& sys, cplx z) : z_(z) {
  const CSpMat P = pencil_matrix(sys, z);
  lu_.analyzePattern(P);
  lu_.factorize(P);
  if (lu_.info() != Eigen::Success)
    throw NumericalError("PencilSingular", "p(z) factorization failed at z=" + std::to_string(z.real()) +
                                               "+" + std::to_string(z.imag()) + "i");
  // Hager-Higham estimate of ||p(z)^{-1}||_1
  const Eigen::Index n = P.rows();
  double norm1 = 0;
  for (int c = 0; c < P.outerSize(); ++c) {
    double s = 0;
    for (CSpMat::InnerIterator it(P, c); it; ++it) s += std::abs(it.value());
    norm1 = std::max(norm1, s);
  }
  CVec x = CVec::Constant(n, cplx(1.0 / n, 0));
  double est = 0;
  for (int it = 0; it < 5; ++it) {
    const CVec y = lu_.solve(x);
    est = y.cwiseAbs().sum();
    CVec xi(n);
    for (Eigen::Index i = 0; i < n; ++i) xi[i] = std::abs(y[i]) > 0 ? y[i] / std::abs(y[i]) : cplx(1, 0);
    const CVec zz = lu_.adjoint().solve(xi);
    Eigen::Index j;
    const double zmax = zz.cwiseAbs().maxCoeff(&j);
    if (zmax <= zz.dot(x).real()) break;
    x.setZero();
    x[j] = 1.0;
  }
  rcond_ = (norm1 > 0 && est > 0) ? 1.0 / (norm1 * est) : 0.0;
  if (!std::isfinite(rcond_) || rcond_ < 1e-13)
    throw NumericalError("PencilSingular", "p(z) numerically singular (rcond " + std::to_string(rcond_) + ")");
}

CVec PencilFactorization::solve(const CVec& rhs) const { return lu_.solve(rhs); }

CVec PencilFactorization::solve_adjoint(const CVec& rhs) const {
  auto& lu = const_cast<Eigen::SparseLU<CSpMat, Eigen::COLAMDOrdering<int>>&>(lu_);
  return lu.adjoint().solve(rhs);
}

std::shared_ptr<const PencilFactorization> QuadraticPencil::factor(cplx z) const {
  const auto key = std::make_pair(z.real(), z.imag());
  {
    std::lock_guard lock(mu_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  auto f = std::make_shared<const PencilFactorization>(*sys_, z);
  std::lock_guard lock(mu_);
  if (cache_.size() >= cacheSize_) cache_.erase(cache_.begin());
  cache_.emplace(key, f);
  return f;
}

Resolvent::Resolvent(const KGSystem& sys, cplx z) : sys_(&sys), z_(z), fac_(sys, z) {}

State Resolvent::apply(const State& x) const {
  require_dims(x.dim(), sys_->dim(), "resolvent");
  const CVec top = z_ * x.u0 - 2.0 * sys_->apply_k(x.u0) + x.u1;
  const CVec bottom = sys_->apply_h(x.u0) + z_ * x.u1;
  return {fac_.solve(top), fac_.solve(bottom)};
}

State Resolvent::apply_adjoint(const State& y) const {
  // R^* = M^* diag(p^{-*}, p^{-*}) with M = [[z - 2k, 1], [h, z]]
  require_dims(y.dim(), sys_->dim(), "resolvent adjoint");
  const CVec a = fac_.solve_adjoint(y.u0);
  const CVec b = fac_.solve_adjoint(y.u1);
  const cplx zc = std::conj(z_);
  return {zc * a - 2.0 * sys_->apply_k(a) + sys_->apply_h(b), a + zc * b};
}

namespace {

CMat apply_columns(const Resolvent& R, Eigen::Index n) {
  CMat out(2 * n, 2 * n);
  for (Eigen::Index j = 0; j < 2 * n; ++j) {
    CVec e = CVec::Zero(2 * n);
    e[j] = 1.0;
    out.col(j) = R.apply(State::unstack(e)).stacked();
  }
  return out;
}

}  // namespace

CMat resolvent_matrix(const KGSystem& sys, cplx z) {
  Resolvent R(sys, z);
  return apply_columns(R, sys.dim());
}

CMat resolvent_k_form_matrix(const KGSystem& sys, cplx z) {
  // [[-p^{-1}(k-z), p^{-1}], [1 + (k-z)p^{-1}(k-z), -(k-z)p^{-1}]], p = h0 - (k-z)^2
  const Eigen::Index n = sys.dim();
  const CMat kz = CMat(sys.k().cast<cplx>()) - z * CMat::Identity(n, n);
  const CMat p = CMat(sys.h0().cast<cplx>()) - kz * kz;
  Eigen::PartialPivLU<CMat> lu(p);
  const CMat pinv = lu.inverse();
  CMat out(2 * n, 2 * n);
  out.topLeftCorner(n, n) = -pinv * kz;
  out.topRightCorner(n, n) = pinv;
  out.bottomLeftCorner(n, n) = CMat::Identity(n, n) + kz * pinv * kz;
  out.bottomRightCorner(n, n) = -kz * pinv;
  return out;
}

CMat resolvent_commuting_matrix(const KGSystem& sys, cplx z) {
  const Eigen::Index n = sys.dim();
  const Mat h = Mat(sys.h()), k = Mat(sys.k());
  const double comm = (h * k - k * h).norm();
  if (comm > 1e-12 * std::max(1.0, h.norm() * k.norm()))
    throw ValidationError("NotCommuting", "the right-multiplied resolvent needs [h, k] = 0");
  const CMat pinv = CMat(pencil_matrix(sys, z)).partialPivLu().inverse();
  const CMat kc = k.cast<cplx>();
  CMat out(2 * n, 2 * n);
  out.topLeftCorner(n, n) = (z * CMat::Identity(n, n) - 2.0 * kc) * pinv;
  out.topRightCorner(n, n) = pinv;
  out.bottomLeftCorner(n, n) = h.cast<cplx>() * pinv;
  out.bottomRightCorner(n, n) = z * pinv;
  return out;
}

}  // namespace dsk
