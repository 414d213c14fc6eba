#include "dsk/mode_operators.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace dsk {

using Trip = Eigen::Triplet<double>;

void gauss_legendre(int n, Vec& nodes, Vec& weights) {
  // Golub-Welsch
  Mat J = Mat::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double b = i / std::sqrt(4.0 * i * i - 1.0);
    J(i, i - 1) = J(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(J);
  nodes = es.eigenvalues();
  weights = 2.0 * es.eigenvectors().row(0).transpose().array().square();
  // polish nodes with Newton on P_n, then recompute weights from P_n'
  auto legendre = [n](double x, double& dp) {
    double p0 = 1, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    return p1;
  };
  for (int i = 0; i < n; ++i) {
    double x = nodes[i], dp = 0;
    for (int it = 0; it < 3; ++it) x -= legendre(x, dp) / dp;
    legendre(x, dp);
    nodes[i] = x;
    weights[i] = 2.0 / ((1 - x * x) * dp * dp);
  }
}

void gauss_gegenbauer(int n, double nu, Vec& nodes, Vec& weights) {
  if (nu == 0.0) {
    gauss_legendre(n, nodes, weights);
    return;
  }
  Mat J = Mat::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = std::sqrt(k * (k + 2.0 * nu) / ((2.0 * k + 2.0 * nu + 1.0) * (2.0 * k + 2.0 * nu - 1.0)));
    J(k, k - 1) = J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(J);
  nodes = es.eigenvalues();
  const double mass = std::sqrt(std::numbers::pi) * std::exp(std::lgamma(nu + 1.0) - std::lgamma(nu + 1.5));
  weights = mass * es.eigenvectors().row(0).transpose().array().square();
}

double pole_exponent(const SpacetimeParams& p, int n) {
  const double lam = p.lambda_factor();
  return std::abs(n) * lam / std::sqrt(1.0 + p.Lambda * p.a * p.a / 3.0);
}

ModeGrid ModeGrid::make(int n, int Nx, double X, int Ntheta, std::optional<double> poleExponent) {
  if (Nx < 4) throw ValidationError("ConfigInvalid", "Nx must be >= 4");
  if (Ntheta < 1) throw ValidationError("ConfigInvalid", "Ntheta must be >= 1");
  if (!(X > 0)) throw ValidationError("ConfigInvalid", "X must be positive");
  const double nu = poleExponent.value_or(std::abs(n));
  if (!(nu >= 0)) throw ValidationError("ConfigInvalid", "pole exponent must be nonnegative");
  ModeGrid g;
  g.n = n;
  g.Nx = Nx;
  g.X = X;
  g.dx = 2.0 * X / (Nx + 1);
  g.x.resize(Nx);
  for (int j = 0; j < Nx; ++j) g.x[j] = -X + (j + 1) * g.dx;
  g.Ntheta = Ntheta;
  g.poleExponent = nu;
  Vec wj;
  gauss_gegenbauer(Ntheta, nu, g.mu, wj);
  g.muWeights.resize(Ntheta);
  for (int i = 0; i < Ntheta; ++i) g.muWeights[i] = wj[i] / std::pow(1.0 - g.mu[i] * g.mu[i], nu);
  g.theta = g.mu.array().acos();
  return g;
}

namespace {

Mat lagrange_derivative(const Vec& mu) {
  const int n = int(mu.size());
  Vec b = Vec::Ones(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (j != i) b[i] /= (mu[i] - mu[j]);
  Mat D = Mat::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i)
      if (i != k) D(k, i) = (b[i] / b[k]) / (mu[k] - mu[i]);
    D(k, k) = -D.row(k).sum();
  }
  return D;
}

struct Coeffs {
  double ra, dr, dth, sig2, rho2, lam;
};

Coeffs coeffs_at(const SpacetimeParams& p, const HorizonData& hz, const RadialPoint& pt, double mu) {
  Coeffs c;
  const double a2 = p.a * p.a;
  c.ra = pt.r * pt.r + a2;
  c.dr = delta_r_factored(hz, pt.r, pt.dMinus, pt.dPlus);
  c.dth = 1.0 + p.Lambda * a2 * mu * mu / 3.0;
  c.sig2 = c.ra * c.ra * c.dth - a2 * c.dr * (1.0 - mu * mu);
  c.rho2 = pt.r * pt.r + a2 * mu * mu;
  c.lam = p.lambda_factor();
  return c;
}

// -F d_x A d_x F per angular node, F on nodes, A on half nodes.
void add_radial(std::vector<Trip>& t, const ModeGrid& g, int i, const std::vector<double>& F,
                const std::vector<double>& A) {
  const double s = 1.0 / (g.dx * g.dx);
  for (int j = 0; j < g.Nx; ++j) {
    const auto row = g.index(j, i);
    t.emplace_back(row, row, F[j] * F[j] * (A[j] + A[j + 1]) * s);
    if (j + 1 < g.Nx) {
      const double off = -F[j] * A[j + 1] * F[j + 1] * s;
      t.emplace_back(row, g.index(j + 1, i), off);
      t.emplace_back(g.index(j + 1, i), row, off);
    }
  }
}

double smooth_step(double tau) {
  // 0 for tau <= 0, 1 for tau >= 1
  auto psi = [](double t) { return t > 0 ? std::exp(-1.0 / t) : 0.0; };
  const double a = psi(tau), b = psi(1.0 - tau);
  return a / (a + b);
}

}  // namespace

Mat sphere_operator(const ModeGrid& grid, const SpacetimeParams& p) {
  // u = sin(theta)^nu v with v a polynomial on the nodes; after integrating the
  // cross term by parts the form is
  //   int (1-mu^2)^nu [(1-mu^2) Dth v'^2 + (nu (Dth + mu Dth') + (lam^2 n^2 - nu^2 mu^2 Dth)/(1-mu^2)) v^2]
  const int N = grid.Ntheta;
  const Vec& mu = grid.mu;
  const double nu = grid.poleExponent;
  const double lam = p.lambda_factor();
  const double c = p.Lambda * p.a * p.a / 3.0;
  const double n2 = double(grid.n) * grid.n;
  const Mat D = lagrange_derivative(mu);
  Vec wj(N), stiff(N), pot(N);
  for (int k = 0; k < N; ++k) {
    const double s2 = 1.0 - mu[k] * mu[k];
    wj[k] = grid.muWeights[k] * std::pow(s2, nu);
    const double dth = 1.0 + c * mu[k] * mu[k];
    stiff[k] = wj[k] * s2 * dth;
    pot[k] = wj[k] * (nu * (dth + 2.0 * c * mu[k] * mu[k]) + (lam * lam * n2 - nu * nu * mu[k] * mu[k] * dth) / s2);
  }
  Mat A = D.transpose() * stiff.asDiagonal() * D;
  A.diagonal() += pot;
  const Vec isw = wj.cwiseSqrt().cwiseInverse();
  Mat P = isw.asDiagonal() * A * isw.asDiagonal();
  return 0.5 * (P + P.transpose());
}

SphereBasis sphere_basis(const ModeGrid& grid, const SpacetimeParams& p) {
  SphereBasis sb;
  sb.P = sphere_operator(grid, p);
  Eigen::SelfAdjointEigenSolver<Mat> es(sb.P);
  sb.lambdas = es.eigenvalues();
  sb.Z = es.eigenvectors();
  return sb;
}

RadialSamples sample_radial(const RWMap& rw, const ModeGrid& grid) {
  if (grid.X > rw.xSpan() + 1e-12)
    throw ValidationError("AssemblyDomainError", "grid extends beyond the Regge-Wheeler table");
  RadialSamples s;
  s.nodes.reserve(grid.Nx);
  s.halves.reserve(grid.Nx + 1);
  for (double x : grid.x) s.nodes.push_back(rw.r_of_x(x));
  for (int j = 0; j <= grid.Nx; ++j) s.halves.push_back(rw.r_of_x(grid.half_node(j)));
  return s;
}

KGSystem assemble_full_mode(const SpacetimeParams& p, const HorizonData& hz, const RWMap& rw,
                            const ModeGrid& grid) {
  const RadialSamples rs = sample_radial(rw, grid);
  const int Nx = grid.Nx, Nt = grid.Ntheta;
  const double n = grid.n, m = p.massField, a = p.a;
  const Mat P = sphere_operator(grid, p);
  const Eigen::Index N = grid.dim2d();

  std::vector<Trip> t;
  t.reserve(std::size_t(N) * (3 + Nt));
  Vec kdiag(N), gfac(N), wInv(N);
  std::vector<double> A(Nx + 1);
  for (int j = 0; j <= Nx; ++j) A[j] = rs.halves[j].r * rs.halves[j].r + a * a;
  const double kPlus = a / (hz.rPlus * hz.rPlus + a * a);

  for (int i = 0; i < Nt; ++i) {
    const double mu = grid.mu[i];
    const double sin2 = 1.0 - mu * mu;
    std::vector<double> F(Nx);
    for (int j = 0; j < Nx; ++j) {
      const Coeffs c = coeffs_at(p, hz, rs.nodes[j], mu);
      const double sig = std::sqrt(c.sig2);
      F[j] = std::sqrt(c.ra * c.dth) / sig;
      const auto row = grid.index(j, i);
      gfac[row] = std::sqrt(c.dr * c.dth) / (c.lam * sig);
      const double pot = n * n * (c.rho2 * c.rho2 - c.sig2) * c.dr * c.dth / (c.sig2 * c.sig2 * sin2) +
                         m * m * c.rho2 * c.dr * c.dth / (c.lam * c.lam * c.sig2);
      t.emplace_back(row, row, pot);
      kdiag[row] = n * (kPlus + a * (c.dr - c.ra * c.dth) / c.sig2);
      wInv[row] = std::sqrt(rs.nodes[j].dMinus * rs.nodes[j].dPlus);
    }
    add_radial(t, grid, i, F, A);
  }
  // g P g
  for (int j = 0; j < Nx; ++j)
    for (int i = 0; i < Nt; ++i)
      for (int l = 0; l < Nt; ++l) {
        const auto r = grid.index(j, i), c = grid.index(j, l);
        const double v = gfac[r] * P(i, l) * gfac[c];
        if (v != 0.0) t.emplace_back(r, c, v);
      }
  SpMat h0(N, N);
  h0.setFromTriplets(t.begin(), t.end());
  SpMat h0t = h0.transpose();
  h0 = 0.5 * (h0 + h0t);
  return KGSystem(std::move(h0), diag_matrix(kdiag), std::move(wInv));
}

namespace {

struct SeparableParts {
  SpMat radial;   // Nx x Nx
  Vec angular;    // coefficient of P (or lambda_q)
  Vec mass;
  Vec kdiag;
  Vec wInv;
};

SeparableParts separable_parts(const SpacetimeParams& p, const HorizonData& hz, const RWMap& rw,
                               const ModeGrid& grid) {
  const RadialSamples rs = sample_radial(rw, grid);
  const int Nx = grid.Nx;
  const double a = p.a, lam = p.lambda_factor(), m = p.massField;
  std::vector<double> A(Nx + 1), F(Nx);
  for (int j = 0; j <= Nx; ++j) A[j] = rs.halves[j].r * rs.halves[j].r + a * a;
  SeparableParts out;
  out.angular.resize(Nx);
  out.mass.resize(Nx);
  out.kdiag.resize(Nx);
  out.wInv.resize(Nx);
  const double kPlus = a / (hz.rPlus * hz.rPlus + a * a);
  for (int j = 0; j < Nx; ++j) {
    const auto& pt = rs.nodes[j];
    const double ra = pt.r * pt.r + a * a;
    const double dr = delta_r_factored(hz, pt.r, pt.dMinus, pt.dPlus);
    F[j] = 1.0 / std::sqrt(ra);
    out.angular[j] = dr / (lam * lam * ra * ra);
    out.mass[j] = dr * m * m / (lam * lam * ra);
    out.kdiag[j] = grid.n * (kPlus - a / ra);
    out.wInv[j] = std::sqrt(pt.dMinus * pt.dPlus);
  }
  ModeGrid g1 = grid;
  g1.Ntheta = 1;
  std::vector<Trip> t;
  add_radial(t, g1, 0, F, A);
  out.radial.resize(Nx, Nx);
  out.radial.setFromTriplets(t.begin(), t.end());
  return out;
}

}  // namespace

std::vector<KGSystem> assemble_separable(const SpacetimeParams& p, const HorizonData& hz,
                                         const RWMap& rw, const ModeGrid& grid, int Q) {
  if (Q < 1 || Q > grid.Ntheta) throw ValidationError("ConfigInvalid", "Q must lie in [1, Ntheta]");
  const SeparableParts sp = separable_parts(p, hz, rw, grid);
  const SphereBasis sb = sphere_basis(grid, p);
  std::vector<KGSystem> out;
  out.reserve(Q);
  for (int q = 0; q < Q; ++q) {
    SpMat h0 = sp.radial + diag_matrix(sb.lambdas[q] * sp.angular + sp.mass);
    out.emplace_back(std::move(h0), diag_matrix(sp.kdiag), sp.wInv);
  }
  return out;
}

SpMat kron_angular(const SpMat& A, int Ntheta) {
  std::vector<Trip> t;
  t.reserve(A.nonZeros() * Ntheta);
  for (int c = 0; c < A.outerSize(); ++c)
    for (SpMat::InnerIterator it(A, c); it; ++it)
      for (int i = 0; i < Ntheta; ++i)
        t.emplace_back(it.row() * Ntheta + i, it.col() * Ntheta + i, it.value());
  SpMat out(A.rows() * Ntheta, A.cols() * Ntheta);
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

KGSystem kron_angular(const KGSystem& sys, int Ntheta) {
  return KGSystem(kron_angular(sys.h0(), Ntheta), kron_angular(sys.k(), Ntheta),
                  expand_angular(sys.wInv(), Ntheta));
}

Vec expand_angular(const Vec& xv, int Ntheta) {
  Vec out(xv.size() * Ntheta);
  for (Eigen::Index j = 0; j < xv.size(); ++j) out.segment(j * Ntheta, Ntheta).setConstant(xv[j]);
  return out;
}

KGSystem assemble_separable_2d(const SpacetimeParams& p, const HorizonData& hz, const RWMap& rw,
                               const ModeGrid& grid, const SphereBasis& sb, int side) {
  const SeparableParts sp = separable_parts(p, hz, rw, grid);
  const int Nt = grid.Ntheta;
  SpMat h0 = kron_angular(SpMat(sp.radial + diag_matrix(sp.mass)), Nt);
  std::vector<Trip> t;
  for (int j = 0; j < grid.Nx; ++j)
    for (int i = 0; i < Nt; ++i)
      for (int l = 0; l < Nt; ++l) {
        const double v = sp.angular[j] * sb.P(i, l);
        if (v != 0.0) t.emplace_back(grid.index(j, i), grid.index(j, l), v);
      }
  SpMat ang(grid.dim2d(), grid.dim2d());
  ang.setFromTriplets(t.begin(), t.end());
  h0 += ang;
  SpMat h0t = h0.transpose();
  h0 = 0.5 * (h0 + h0t);
  const double ell = side < 0 ? ell_for_mode(p, hz, grid.n) : 0.0;
  return KGSystem(std::move(h0), SpMat(ell * identity(grid.dim2d())), expand_angular(sp.wInv, Nt));
}

double chi_minus(double y) {
  const double a = smooth_step((1.0 - y) / 2.0), b = smooth_step((1.0 + y) / 2.0);
  return a / std::sqrt(a * a + b * b);
}

double chi_plus(double y) {
  const double a = smooth_step((1.0 - y) / 2.0), b = smooth_step((1.0 + y) / 2.0);
  return b / std::sqrt(a * a + b * b);
}

Cutoffs build_cutoffs(const ModeGrid& grid, double epsilon, double Rscale) {
  if (!(epsilon > 0) || !(Rscale > 0)) throw ValidationError("ConfigInvalid", "cutoff scales must be positive");
  if (4.0 * epsilon >= grid.X)
    throw ValidationError("SupportOverflow", "cutoff supports (4 epsilon) do not fit in the grid span");
  if (epsilon <= 2.0 * grid.dx)
    throw ValidationError("SupportOverflow", "cutoff scale must exceed the stencil width");
  Cutoffs c;
  c.epsilon = epsilon;
  c.Rscale = Rscale;
  const int Nx = grid.Nx;
  c.iMinus.resize(Nx);
  c.iPlus.resize(Nx);
  c.jMinus.resize(Nx);
  c.jPlus.resize(Nx);
  c.iTildeMinus.resize(Nx);
  c.iTildePlus.resize(Nx);
  for (int j = 0; j < Nx; ++j) {
    const double y = grid.x[j] / epsilon;
    c.iMinus[j] = chi_minus(y);
    c.iPlus[j] = chi_plus(y);
    c.jMinus[j] = chi_minus(y + 3.0);
    c.jPlus[j] = chi_plus(y - 3.0);
    c.iTildeMinus[j] = chi_minus(grid.x[j] / Rscale);
    c.iTildePlus[j] = chi_plus(grid.x[j] / Rscale);
  }
  return c;
}

SpMat laplacian_1d(const ModeGrid& grid) {
  const int Nx = grid.Nx;
  const double s = 1.0 / (grid.dx * grid.dx);
  std::vector<Trip> t;
  for (int j = 0; j < Nx; ++j) {
    t.emplace_back(j, j, 2.0 * s);
    if (j + 1 < Nx) {
      t.emplace_back(j, j + 1, -s);
      t.emplace_back(j + 1, j, -s);
    }
  }
  SpMat L(Nx, Nx);
  L.setFromTriplets(t.begin(), t.end());
  return L;
}

double ell_for_mode(const SpacetimeParams& p, const HorizonData& hz, int n) {
  const double a2 = p.a * p.a;
  return (p.a / (hz.rPlus * hz.rPlus + a2) - p.a / (hz.rMinus * hz.rMinus + a2)) * n;
}

ProfilePair assemble_profiles(const SpacetimeParams& p, const HorizonData& hz, const ModeGrid& grid) {
  const double ell = ell_for_mode(p, hz, grid.n);
  const SpMat L = laplacian_1d(grid);
  const Vec w = Vec::Ones(grid.Nx);
  return {KGSystem(L, SpMat(grid.Nx, grid.Nx), w), KGSystem(L, SpMat(ell * identity(grid.Nx)), w)};
}

double smallest_eigenvalue(const SpMat& A) {
  const Eigen::Index n = A.rows();
  if (n <= 400) {
    Eigen::SelfAdjointEigenSolver<Mat> es(Mat(A), Eigen::EigenvaluesOnly);
    return es.eigenvalues()[0];
  }
  // Inertia bisection, then inverse iteration just below the bracket.
  auto count_below = [&](double t) {
    Eigen::SimplicialLDLT<SpMat> ldlt(SpMat(A - t * identity(n)));
    return (ldlt.vectorD().array() < 0).count();
  };
  const double nrm = norm_inf(A);
  double lo = -nrm - 1e-300, hi = nrm + 1e-300;
  for (int it = 0; it < 60 && hi - lo > 1e-7 * nrm; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (count_below(mid) >= 1)
      hi = mid;
    else
      lo = mid;
  }
  const double shift = lo - 1e-9 * nrm;
  Eigen::SimplicialLDLT<SpMat> ldlt(SpMat(A - shift * identity(n)));
  Vec v = Vec::Ones(n).normalized();
  double rq = lo;
  for (int it = 0; it < 30; ++it) {
    v = ldlt.solve(v);
    v.normalize();
    const double r = v.dot(A * v);
    if (std::abs(r - rq) <= 1e-14 * nrm) {
      rq = r;
      break;
    }
    rq = r;
  }
  return rq;
}

AsymptoticSystems assemble_asymptotics(const KGSystem& full, const Cutoffs& cut, int Ntheta,
                                       double ell, bool strict, unsigned seed) {
  if (!full.k_is_diagonal()) throw ValidationError("ConfigInvalid", "asymptotic splitting expects a multiplication k");
  const Vec jm = expand_angular(cut.jMinus, Ntheta), jp = expand_angular(cut.jPlus, Ntheta);
  require_dims(jm.size(), full.dim(), "assemble_asymptotics");
  const Vec kp = full.k_diag() - ell * jm.cwiseProduct(jm);
  const Vec km = full.k_diag() + ell * jp.cwiseProduct(jp);
  KGSystem plus(full.h0(), diag_matrix(kp), full.wInv());
  KGSystem minus(full.h0(), diag_matrix(km), full.wInv());
  KGSystem minusG = gauge_transform(minus, ell);
  AsymptoticSystems out{std::move(plus), std::move(minus), std::move(minusG)};

  const double scale = std::max(norm_inf(full.h0()), 1e-300);
  auto positive = [&](const SpMat& h) { return smallest_eigenvalue(h) >= -1e-10 * scale; };
  out.plusPositive = positive(out.plus.h());
  out.minusPositive = positive(out.minusGauged.h());

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  auto ratio = [&](const KGSystem& s) {
    double best = std::numeric_limits<double>::infinity();
    for (int t = 0; t < 100; ++t) {
      Vec v(s.dim());
      for (auto& e : v) e = nd(rng);
      const Vec kv = s.k_diag().cwiseProduct(v);
      const double den = kv.squaredNorm();
      if (den <= 0) continue;
      best = std::min(best, v.dot(s.h() * v) / den);
    }
    return best;
  };
  out.cPlus = ratio(out.plus);
  out.cMinus = ratio(out.minusGauged);
  if (strict && !out.plusPositive)
    throw NumericalError("PositivityViolation", "h_+ has a negative eigenvalue");
  if (strict && !out.minusPositive)
    throw NumericalError("PositivityViolation", "h~_- has a negative eigenvalue");
  return out;
}

Vec cosh_weight(const ModeGrid& grid, double epsilon, bool twoD) {
  Vec w(grid.Nx);
  for (int j = 0; j < grid.Nx; ++j) w[j] = 1.0 / std::cosh(epsilon * grid.x[j]);
  return twoD ? expand_angular(w, grid.Ntheta) : w;
}

OperatorBundle assemble_bundle(const SpacetimeParams& p, const HorizonData& hz, const RWMap& rw,
                               const ModeGrid& grid, const BundleOptions& opt) {
  OperatorBundle b;
  b.params = p;
  b.horizons = hz;
  b.grid = grid;
  b.sphere = sphere_basis(grid, p);
  b.ell = ell_for_mode(p, hz, grid.n);
  b.full.emplace(assemble_full_mode(p, hz, rw, grid));
  if (opt.separable) b.separablePerQ = assemble_separable(p, hz, rw, grid, std::min(opt.Q, grid.Ntheta));
  b.comparisonPlus.emplace(assemble_separable_2d(p, hz, rw, grid, b.sphere, +1));
  b.comparisonMinus.emplace(assemble_separable_2d(p, hz, rw, grid, b.sphere, -1));
  ProfilePair prof = assemble_profiles(p, hz, grid);
  b.profileRight.emplace(std::move(prof.right));
  b.profileLeft.emplace(std::move(prof.left));
  b.cutoffs = build_cutoffs(grid, opt.epsilon.value_or(grid.X / 8.0), opt.Rscale.value_or(grid.X / 4.0));

  const Cutoffs& c = b.cutoffs;
  const Vec part = c.iMinus.array().square() + c.iPlus.array().square();
  b.checks.cutoffPartition = (part.array() - 1.0).abs().maxCoeff() <= 1e-14;
  b.checks.cutoffSupports =
      (c.jMinus.cwiseProduct(c.iMinus) - c.jMinus).cwiseAbs().maxCoeff() <= 1e-14 &&
      (c.jPlus.cwiseProduct(c.iPlus) - c.jPlus).cwiseAbs().maxCoeff() <= 1e-14 &&
      c.iPlus.cwiseProduct(c.jMinus).cwiseAbs().maxCoeff() == 0.0 &&
      c.iMinus.cwiseProduct(c.jPlus).cwiseAbs().maxCoeff() == 0.0;
  b.checks.h0MinEig = smallest_eigenvalue(b.full->h0());
  b.checks.h0Positive = b.checks.h0MinEig >= -1e-10 * norm_inf(b.full->h0());

  AsymptoticSystems as = assemble_asymptotics(*b.full, c, grid.Ntheta, b.ell, false);
  b.checks.asymptoticPlusPositive = as.plusPositive;
  b.checks.asymptoticMinusPositive = as.minusPositive;
  b.checks.cPlus = as.cPlus;
  b.checks.cMinus = as.cMinus;
  b.asymptoticPlus.emplace(std::move(as.plus));
  b.asymptoticMinusRaw.emplace(std::move(as.minus));
  b.asymptoticMinus.emplace(std::move(as.minusGauged));
  return b;
}

}  // namespace dsk
