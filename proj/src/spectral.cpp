#include "dsk/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include <lapacke.h>

#include "dsk/parallel.hpp"

namespace dsk {

namespace {

double norm_one(const SpMat& A) {
  double best = 0;
  for (int c = 0; c < A.outerSize(); ++c) {
    double s = 0;
    for (SpMat::InnerIterator it(A, c); it; ++it) s += std::abs(it.value());
    best = std::max(best, s);
  }
  return best;
}

bool by_re_im(cplx a, cplx b) { return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag(); }

CVec random_unit(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  CVec v(n);
  for (auto& e : v) e = {nd(rng), nd(rng)};
  return v.normalized();
}

// Residuals, pairing, and pencil cross-check for a set of eigenpairs.
void finish_report(const KGSystem& sys, SpectrumReport& rep) {
  rep.complexCount = 0;
  rep.maxAbsImag = 0;
  for (const cplx z : rep.eigenvalues) {
    rep.maxAbsImag = std::max(rep.maxAbsImag, std::abs(z.imag()));
    if (std::abs(z.imag()) > rep.imagThreshold) ++rep.complexCount;
  }
  double pairing = 0;
  for (const cplx z : rep.eigenvalues) {
    double best = INFINITY;
    for (const cplx w : rep.eigenvalues) best = std::min(best, std::abs(z - std::conj(w)));
    pairing = std::max(pairing, best);
  }
  rep.conjugationPairingError = rep.eigenvalues.empty() ? 0.0 : pairing;

  rep.residuals.clear();
  rep.maxResidual = 0;
  rep.pencilCrossCheck = 0;
  if (rep.vectors.cols() == 0) return;
  const SpMat H = hamiltonian_matrix(sys);
  const double hn = norm_one(H);
  const Eigen::Index n = sys.dim();
  for (std::size_t j = 0; j < rep.eigenvalues.size(); ++j) {
    const cplx z = rep.eigenvalues[j];
    const CVec v = rep.vectors.col(Eigen::Index(j));
    const double res = (H * v - z * v).norm() / ((hn + std::abs(z)) * v.norm());
    rep.residuals.push_back(res);
    rep.maxResidual = std::max(rep.maxResidual, res);
    const CVec v0 = v.head(n);
    rep.pencilCrossCheck = std::max(rep.pencilCrossCheck, pencil_apply(sys, z, v0).norm() / v0.norm());
  }
}

}  // namespace

SpectrumReport eig_hamiltonian(const KGSystem& sys, const EigenOptions& opt) {
  const Eigen::Index n2 = 2 * sys.dim();
  if (n2 > opt.budget)
    throw ValidationError("BudgetExceeded", "2N = " + std::to_string(n2) + " exceeds the dense budget " +
                                                std::to_string(opt.budget));
  Mat H = Mat(hamiltonian_matrix(sys));
  Vec wr(n2), wi(n2);
  Mat vr(opt.vectors ? n2 : 1, opt.vectors ? n2 : 1);
  double dummy = 0;
  const lapack_int info =
      LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', opt.vectors ? 'V' : 'N', lapack_int(n2), H.data(), lapack_int(n2),
                    wr.data(), wi.data(), &dummy, 1, vr.data(), lapack_int(vr.rows()));
  if (info != 0) throw NumericalError("SolverFailure", "dgeev returned " + std::to_string(info));

  std::vector<cplx> vals(n2);
  for (Eigen::Index j = 0; j < n2; ++j) vals[j] = {wr[j], wi[j]};
  CMat vecs;
  if (opt.vectors) {
    vecs.resize(n2, n2);
    for (Eigen::Index j = 0; j < n2; ++j) {
      if (wi[j] == 0.0) {
        vecs.col(j) = vr.col(j).cast<cplx>();
      } else if (wi[j] > 0.0 && j + 1 < n2) {
        const CVec v = vr.col(j).cast<cplx>() + cplx(0, 1) * vr.col(j + 1).cast<cplx>();
        vecs.col(j) = v;
        vecs.col(j + 1) = v.conjugate();
        ++j;
      }
    }
  }
  std::vector<Eigen::Index> order(n2);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return by_re_im(vals[a], vals[b]); });

  SpectrumReport rep;
  rep.imagThreshold = opt.imagThreshold;
  rep.eigenvalues.reserve(n2);
  if (opt.vectors) rep.vectors.resize(n2, n2);
  for (Eigen::Index j = 0; j < n2; ++j) {
    rep.eigenvalues.push_back(vals[order[j]]);
    if (opt.vectors) rep.vectors.col(j) = vecs.col(order[j]);
  }
  finish_report(sys, rep);
  return rep;
}

SpectrumReport eig_near(const KGSystem& sys, cplx target, int count, int krylovDim, unsigned seed) {
  const Eigen::Index n2 = 2 * sys.dim();
  if (count < 1) throw ValidationError("ConfigInvalid", "count must be positive");
  const Eigen::Index m = std::min<Eigen::Index>(n2, krylovDim > 0 ? krylovDim : std::max(3 * count, 30));
  const Resolvent R(sys, target);
  std::mt19937_64 rng(seed);
  CMat V = CMat::Zero(n2, m + 1);
  CMat Hm = CMat::Zero(m + 1, m);
  V.col(0) = random_unit(n2, rng);
  Eigen::Index steps = m;
  for (Eigen::Index j = 0; j < m; ++j) {
    CVec w = R.apply(State::unstack(V.col(j))).stacked();
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index i = 0; i <= j; ++i) {
        const cplx h = V.col(i).dot(w);
        Hm(i, j) += h;
        w -= h * V.col(i);
      }
    const double beta = w.norm();
    Hm(j + 1, j) = beta;
    if (beta <= 1e-14 * std::abs(Hm(j, j))) {
      steps = j + 1;
      break;
    }
    V.col(j + 1) = w / beta;
  }
  const CMat Hs = Hm.topLeftCorner(steps, steps);
  Eigen::ComplexEigenSolver<CMat> es(Hs);
  std::vector<Eigen::Index> idx(steps);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](auto a, auto b) { return std::abs(es.eigenvalues()[a]) > std::abs(es.eigenvalues()[b]); });
  const Eigen::Index keep = std::min<Eigen::Index>(count, steps);
  std::vector<std::pair<cplx, CVec>> pairs;
  for (Eigen::Index t = 0; t < keep; ++t) {
    const cplx theta = es.eigenvalues()[idx[t]];
    const CVec v = V.leftCols(steps) * es.eigenvectors().col(idx[t]);
    pairs.emplace_back(target + 1.0 / theta, v.normalized());
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return by_re_im(a.first, b.first); });
  SpectrumReport rep;
  rep.imagThreshold = 1e-6;
  rep.vectors.resize(n2, Eigen::Index(pairs.size()));
  for (std::size_t j = 0; j < pairs.size(); ++j) {
    rep.eigenvalues.push_back(pairs[j].first);
    rep.vectors.col(Eigen::Index(j)) = pairs[j].second;
  }
  finish_report(sys, rep);
  return rep;
}

std::vector<cplx> pencil_roots(const KGSystem& sys, const SearchRegion& region, Eigen::Index budget) {
  const Eigen::Index n = sys.dim();
  if (2 * n > budget) throw ValidationError("BudgetExceeded", "companion matrix exceeds the dense budget");
  Mat C = Mat::Zero(2 * n, 2 * n);
  C.topLeftCorner(n, n) = 2.0 * Mat(sys.k());
  C.topRightCorner(n, n) = Mat::Identity(n, n);
  C.bottomLeftCorner(n, n) = Mat(sys.h());
  Eigen::EigenSolver<Mat> es(C, false);
  if (es.info() != Eigen::Success) throw NumericalError("SolverFailure", "companion eigensolver did not converge");
  std::vector<cplx> out;
  for (Eigen::Index j = 0; j < 2 * n; ++j)
    if (region.contains(es.eigenvalues()[j])) out.push_back(es.eigenvalues()[j]);
  std::sort(out.begin(), out.end(), by_re_im);
  return out;
}

double weighted_resolvent_norm(const KGSystem& sys, const Vec& multiplier, cplx z, int iterations,
                               int restarts, unsigned seed) {
  require_dims(multiplier.size(), sys.dim(), "weighted_resolvent_norm");
  const Resolvent R(sys, z);
  const Eigen::Index n = sys.dim();
  auto weigh = [&](State s) {
    s.u0 = s.u0.cwiseProduct(multiplier.cast<cplx>());
    s.u1 = s.u1.cwiseProduct(multiplier.cast<cplx>());
    return s;
  };
  std::mt19937_64 rng(seed);
  double best = 0;
  for (int r = 0; r < restarts; ++r) {
    CVec x = random_unit(2 * n, rng);
    double est = 0;
    for (int it = 0; it < iterations; ++it) {
      const State ax = weigh(R.apply(weigh(State::unstack(x))));
      est = ax.stacked().norm();
      if (est == 0) break;
      CVec y = weigh(R.apply_adjoint(weigh(ax))).stacked();
      const double ny = y.norm();
      if (ny == 0) break;
      x = y / ny;
    }
    best = std::max(best, est);
  }
  return best;
}

ResonanceScan weighted_resolvent_scan(const KGSystem& sys, const Vec& multiplier, const ScanOptions& opt) {
  if (opt.lambdaGrid.empty() || opt.deltaList.empty())
    throw ValidationError("ConfigInvalid", "scan needs a lambda grid and a delta list");
  for (double d : opt.deltaList)
    if (!(d > 0)) throw ValidationError("ConfigInvalid", "scan offsets must be positive");
  ResonanceScan scan;
  scan.lambdaGrid = opt.lambdaGrid;
  std::sort(scan.lambdaGrid.begin(), scan.lambdaGrid.end());
  scan.deltaList = opt.deltaList;
  std::sort(scan.deltaList.begin(), scan.deltaList.end(), std::greater<>());
  const std::size_t nl = scan.lambdaGrid.size(), nd = scan.deltaList.size();
  scan.table.resize(nl * nd);
  parallel_for(nl * nd, opt.threads, [&](std::size_t s) {
    const double lam = scan.lambdaGrid[s / nd], del = scan.deltaList[s % nd];
    const double nrm = weighted_resolvent_norm(sys, multiplier, {lam, del}, opt.powerIterations, opt.restarts,
                                               opt.seed + unsigned(s));
    scan.table[s] = {lam, del, nrm};
  });
  for (std::size_t l = 0; l < nl; ++l) {
    const double g = scan.table[l * nd + nd - 1].norm / scan.table[l * nd].norm;
    scan.growth.push_back(g);
    if (g >= opt.growthThreshold) scan.peakCandidates.push_back(scan.lambdaGrid[l]);
  }
  return scan;
}

std::vector<cplx> resolvent_fan(double kNorm, int count, double factor, double floor, double growth) {
  const int angles = 10;
  const int radii = std::max(1, count / angles);
  const double r0 = factor * std::max(kNorm, floor);
  std::vector<cplx> zs;
  for (int r = 0; r < radii; ++r)
    for (int a = 0; a < angles; ++a) {
      const double th = std::numbers::pi * (a + 0.5) / (angles / 2);
      zs.push_back(std::polar(r0 * std::pow(growth, r), th));
    }
  return zs;
}

std::vector<ResolventBounds> resolvent_bounds(const KGSystem& sys, const std::vector<cplx>& zs, int iterations,
                                              unsigned seed) {
  std::vector<ResolventBounds> out;
  const Eigen::Index n = sys.dim();
  std::mt19937_64 rng(seed);
  for (const cplx z : zs) {
    const PencilFactorization pf(sys, z);
    ResolventBounds b;
    b.z = z;
    CVec x = random_unit(n, rng);
    for (int it = 0; it < iterations; ++it) {
      const CVec y = pf.solve(x);
      b.pencilInverseNorm = y.norm();
      x = pf.solve_adjoint(y).normalized();
    }
    x = random_unit(n, rng);
    for (int it = 0; it < iterations; ++it) {
      const CVec y = pf.solve(x);
      const CVec hy = sys.apply_h0(y);
      b.energyNorm = std::sqrt(std::max(0.0, y.dot(hy).real()));
      x = pf.solve_adjoint(hy).normalized();
    }
    b.scaledPencil = b.pencilInverseNorm * std::abs(z) * std::abs(z.imag());
    b.scaledEnergy = b.energyNorm * std::abs(z.imag());
    out.push_back(b);
  }
  return out;
}

double spectral_norm(const CMat& A) {
  if (A.size() == 0) return 0.0;
  CVec x(A.cols());
  for (Eigen::Index j = 0; j < x.size(); ++j) x[j] = cplx(1.0 + 0.37 * std::sin(1.3 * j), 0.21 * std::cos(0.7 * j));
  x.normalize();
  double est = 0;
  for (int it = 0; it < 200; ++it) {
    const CVec y = A * x;
    const double ny = y.norm();
    if (ny == 0) return est;
    const CVec w = A.adjoint() * y;
    const double prev = est;
    est = ny;
    x = w.normalized();
    if (it > 5 && std::abs(est - prev) <= 1e-10 * est) break;
  }
  return est;
}

GluedParts glued_parts(const OperatorBundle& b) {
  GluedParts g;
  g.full = &*b.full;
  g.plus = &*b.asymptoticPlus;
  g.minus = &*b.asymptoticMinusRaw;
  const int Nt = int(b.full->dim() / b.grid.Nx);
  g.iPlus = expand_angular(b.cutoffs.iPlus, Nt);
  g.iMinus = expand_angular(b.cutoffs.iMinus, Nt);
  g.jPlus = expand_angular(b.cutoffs.jPlus, Nt);
  g.jMinus = expand_angular(b.cutoffs.jMinus, Nt);
  return g;
}

GluedCheck glued_resolvent_check(const GluedParts& parts, cplx z) {
  if (!parts.full || !parts.plus || !parts.minus) throw ValidationError("ConfigInvalid", "glued check needs three systems");
  const Eigen::Index n = parts.full->dim();
  for (const Vec* v : {&parts.iPlus, &parts.iMinus, &parts.jPlus, &parts.jMinus})
    require_dims(v->size(), n, "glued_resolvent_check");
  require_dims(parts.plus->dim(), n, "glued_resolvent_check");
  require_dims(parts.minus->dim(), n, "glued_resolvent_check");
  const Eigen::Index n2 = 2 * n;
  auto doubled = [&](const Vec& v) {
    Vec d(n2);
    d << v, v;
    return d;
  };
  const Vec Ip = doubled(parts.iPlus), Im = doubled(parts.iMinus), Jp = doubled(parts.jPlus),
            Jm = doubled(parts.jMinus);
  const Mat H = Mat(hamiltonian_matrix(*parts.full));
  const CMat R = resolvent_matrix(*parts.full, z);
  const CMat Rp = resolvent_matrix(*parts.plus, z);
  const CMat Rm = resolvent_matrix(*parts.minus, z);
  const CMat I = CMat::Identity(n2, n2);

  GluedCheck out;
  auto commutator = [&](const Vec& c) {
    Mat C = H * c.asDiagonal() - c.asDiagonal() * H;
    Mat outside = C;
    outside.bottomLeftCorner(n, n).setZero();
    out.commutatorDefect = std::max(out.commutatorDefect, outside.cwiseAbs().maxCoeff());
    return C;
  };
  const Mat Cp = commutator(Ip), Cm = commutator(Im);
  const CMat Q = Im.asDiagonal() * Rm * Im.asDiagonal() + Ip.asDiagonal() * Rp * Ip.asDiagonal();
  const CMat Kp = Cp * Rp * Ip.asDiagonal();
  const CMat Km = Cm * Rm * Im.asDiagonal();
  const CMat K1 = I + Kp + Km;
  const double k1n = spectral_norm(K1);
  out.identityDefect = spectral_norm((H.cast<cplx>() - z * I) * Q - K1) / k1n;

  Eigen::PartialPivLU<CMat> lu(K1);
  out.rcond = lu.rcond();
  if (!(out.rcond > 1e-12)) throw NumericalError("IllConditioned", "1 + K(z) is numerically singular");
  const CMat glued = Q * lu.inverse();
  out.residual = spectral_norm(R - glued) / spectral_norm(R);

  const CMat Kj = Km * Jm.asDiagonal() + Kp * Jp.asDiagonal();
  out.factorInverseDefect = spectral_norm((I + Kj) * (I - Kj) - I);
  const Vec oneMinusJm = Vec::Ones(n2) - Jm, oneMinusJp = Vec::Ones(n2) - Jp;
  const CMat A = (I - Kj) * (Km * oneMinusJm.asDiagonal() + Kp * oneMinusJp.asDiagonal());
  out.factorProductDefect = spectral_norm((I + Kj) * (I + A) - K1) / k1n;
  return out;
}

RieszResult riesz_projector(const KGSystem& sys, cplx center, double radius, int quadPoints) {
  if (!(radius > 0) || quadPoints < 8) throw ValidationError("ConfigInvalid", "contour needs radius > 0 and >= 8 points");
  EigenOptions eo;
  eo.vectors = false;
  const SpectrumReport sp = eig_hamiltonian(sys, eo);
  RieszResult res;
  for (const cplx z : sp.eigenvalues) {
    const double d = std::abs(z - center);
    if (std::abs(d - radius) < radius / 10)
      throw NumericalError("SpectrumOnContour", "an eigenvalue lies within radius/10 of the contour");
    if (d < radius) ++res.enclosed;
  }
  const Eigen::Index n2 = 2 * sys.dim();
  res.E = CMat::Zero(n2, n2);
  for (int k = 0; k < quadPoints; ++k) {
    const cplx e = std::polar(1.0, 2.0 * std::numbers::pi * k / quadPoints);
    res.E -= (radius / quadPoints) * e * resolvent_matrix(sys, center + radius * e);
  }
  res.trace = res.E.trace().real();
  res.norm = spectral_norm(res.E);
  res.idempotencyDefect = spectral_norm(res.E * res.E - res.E);
  return res;
}

CalculusResult smooth_calculus(const KGSystem& sys, const std::function<cplx(cplx)>& f) {
  const SpectrumReport sp = eig_hamiltonian(sys);
  const Eigen::Index n2 = 2 * sys.dim();
  const double hn = norm_one(hamiltonian_matrix(sys));
  const double linkRadius = 1e-6 * std::max(hn, 1.0);
  // single-linkage clustering through a union-find over close pairs
  std::vector<std::size_t> parent(sp.eigenvalues.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> root = [&](std::size_t i) {
    return parent[i] == i ? i : parent[i] = root(parent[i]);
  };
  for (std::size_t i = 0; i < parent.size(); ++i)
    for (std::size_t j = i + 1; j < parent.size(); ++j)
      if (std::abs(sp.eigenvalues[i] - sp.eigenvalues[j]) <= linkRadius) parent[root(j)] = root(i);
  std::vector<std::vector<std::size_t>> clusters;
  std::vector<long> slot(parent.size(), -1);
  for (std::size_t i = 0; i < parent.size(); ++i) {
    const std::size_t r = root(i);
    if (slot[r] < 0) {
      slot[r] = long(clusters.size());
      clusters.emplace_back();
    }
    clusters[slot[r]].push_back(i);
  }

  CalculusResult out;
  out.clusters = int(clusters.size());
  Eigen::JacobiSVD<CMat> svd(sp.vectors);
  const Vec sv = svd.singularValues();
  out.eigenvectorCondition = sv[sv.size() - 1] > 0 ? sv[0] / sv[sv.size() - 1] : INFINITY;
  out.F = CMat::Zero(n2, n2);

  if (out.eigenvectorCondition <= 1e8) {
    const CMat Vinv = sp.vectors.partialPivLu().inverse();
    for (const auto& c : clusters) {
      cplx mean = 0;
      for (auto i : c) mean += sp.eigenvalues[i];
      mean /= double(c.size());
      const cplx fv = f(mean);
      if (fv == cplx(0)) continue;
      for (auto i : c) out.F += fv * sp.vectors.col(Eigen::Index(i)) * Vinv.row(Eigen::Index(i));
    }
    return out;
  }

  out.contourFallback = true;
  const int M = 128;
  for (std::size_t ci = 0; ci < clusters.size(); ++ci) {
    cplx mean = 0;
    for (auto i : clusters[ci]) mean += sp.eigenvalues[i];
    mean /= double(clusters[ci].size());
    double spread = 0, gap = INFINITY;
    for (auto i : clusters[ci]) spread = std::max(spread, std::abs(sp.eigenvalues[i] - mean));
    for (std::size_t cj = 0; cj < clusters.size(); ++cj)
      if (cj != ci)
        for (auto i : clusters[cj]) gap = std::min(gap, std::abs(sp.eigenvalues[i] - mean));
    const double radius = std::isfinite(gap) ? 0.5 * (spread + gap) : spread + 1.0;
    for (int k = 0; k < M; ++k) {
      const cplx e = std::polar(1.0, 2.0 * std::numbers::pi * k / M);
      const cplx zk = mean + radius * e;
      out.F -= (radius / M) * e * f(zk) * resolvent_matrix(sys, zk);
    }
  }
  return out;
}

std::function<cplx(cplx)> sampled_function(std::vector<double> xs, std::vector<double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw ValidationError("ConfigInvalid", "need matching samples");
  if (!std::is_sorted(xs.begin(), xs.end())) throw ValidationError("ConfigInvalid", "samples must be sorted");
  return [xs = std::move(xs), ys = std::move(ys)](cplx z) -> cplx {
    const double x = z.real();
    if (x < xs.front() || x > xs.back()) return 0.0;
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t j = std::min<std::size_t>(std::size_t(it - xs.begin()), xs.size() - 1);
    const double t = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
    return (1 - t) * ys[j - 1] + t * ys[j];
  };
}

}  // namespace dsk
