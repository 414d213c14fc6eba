#include "dsk/geometry.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

namespace dsk {

namespace {

struct Poly4 {
  // d[0] + d[1] r + ... + d[4] r^4
  std::array<double, 5> d;
  double operator()(double r) const {
    return d[0] + r * (d[1] + r * (d[2] + r * (d[3] + r * d[4])));
  }
  double deriv(double r) const {
    return d[1] + r * (2 * d[2] + r * (3 * d[3] + r * 4 * d[4]));
  }
};

Poly4 delta_r_poly(const SpacetimeParams& p) {
  const double a2 = p.a * p.a;
  return Poly4{{a2, -2.0 * p.M, 1.0 - p.Lambda * a2 / 3.0, 0.0, -p.Lambda / 3.0}};
}

double toms748_root(auto&& f, double lo, double hi) {
  std::uintmax_t iters = 200;
  auto tol = [](double a, double b) { return std::abs(b - a) <= 4e-16 * std::max(1.0, std::abs(a)); };
  auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, tol, iters);
  return 0.5 * (a + b);
}

}  // namespace

SpacetimeParams::SpacetimeParams(double Lambda_, double M_, double a_, double m_)
    : Lambda(Lambda_), M(M_), a(a_), massField(m_) {}

void SpacetimeParams::validate() const {
  if (!(Lambda > 0) || !std::isfinite(Lambda))
    throw ValidationError("ConfigInvalid", "Lambda must be > 0");
  if (!(M > 0) || !std::isfinite(M)) throw ValidationError("ConfigInvalid", "M must be > 0");
  if (!std::isfinite(a)) throw ValidationError("ConfigInvalid", "a must be finite");
  if (!(massField >= 0) || !std::isfinite(massField))
    throw ValidationError("ConfigInvalid", "field mass must be >= 0");
}

double delta_r(const SpacetimeParams& p, double r) {
  return (1.0 - p.Lambda * r * r / 3.0) * (r * r + p.a * p.a) - 2.0 * p.M * r;
}

double delta_r_prime(const SpacetimeParams& p, double r) { return delta_r_poly(p).deriv(r); }

double delta_theta(const SpacetimeParams& p, double theta) {
  const double c = std::cos(theta);
  return 1.0 + p.Lambda * p.a * p.a * c * c / 3.0;
}

double sigma2(const SpacetimeParams& p, double r, double theta) {
  const double ra = r * r + p.a * p.a;
  const double s = std::sin(theta);
  return ra * ra * delta_theta(p, theta) - p.a * p.a * delta_r(p, r) * s * s;
}

double rho2(const SpacetimeParams& p, double r, double theta) {
  const double c = std::cos(theta);
  return r * r + p.a * p.a * c * c;
}

HorizonData find_horizons(const SpacetimeParams& p) {
  p.validate();
  const Poly4 poly = delta_r_poly(p);

  Eigen::Matrix4d companion = Eigen::Matrix4d::Zero();
  for (int i = 0; i < 4; ++i) companion(0, i) = -poly.d[3 - i] / poly.d[4];
  for (int i = 1; i < 4; ++i) companion(i, i - 1) = 1.0;
  const Eigen::Vector4cd roots = companion.eigenvalues();

  const double scale = std::max({1.0, std::abs(p.a), p.M});
  std::vector<double> real;
  for (const auto& z : roots) {
    if (std::abs(z.imag()) > 1e-7 * std::max(1.0, std::abs(z))) continue;
    double r = z.real();
    for (int it = 0; it < 50; ++it) {
      const double d = poly.deriv(r);
      if (d == 0.0) break;
      const double step = poly(r) / d;
      r -= step;
      if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(r))) break;
    }
    if (r > 0) real.push_back(r);
  }
  std::sort(real.begin(), real.end());

  HorizonData hz;
  bool found = false;
  for (std::size_t i = 0; i + 1 < real.size(); ++i) {
    const double lo = real[i], hi = real[i + 1];
    if (hi - lo <= 1e-9 * scale) continue;
    bool positive = true;
    for (int s = 1; s < 16; ++s) {
      if (poly(lo + (hi - lo) * s / 16.0) <= 0) {
        positive = false;
        break;
      }
    }
    if (!positive) continue;
    if (std::abs(poly.deriv(lo)) < 1e-9 || std::abs(poly.deriv(hi)) < 1e-9) continue;
    hz.rMinus = lo;
    hz.rPlus = hi;
    found = true;
    break;
  }
  if (!found)
    throw NumericalError("NoPositivityInterval",
                         "Delta_r has no pair of simple positive roots bounding a positivity interval");

  hz.rMax = toms748_root([&](double r) { return poly.deriv(r); }, hz.rMinus, hz.rPlus);

  // Delta_r = (r^2 - s r + q)(A r^2 + B r + C) + D r + E with P2 = -(A r^2 + B r + C)
  const double s = hz.rPlus + hz.rMinus;
  const double q = hz.rPlus * hz.rMinus;
  const auto& d = poly.d;
  const double A = d[4];
  const double B = d[3] + s * A;
  const double C = d[2] + s * B - q * A;
  const double D = d[1] + s * C - q * B;
  const double E = d[0] - q * C;
  hz.P2coeffs = {-C, -B, -A};
  const double dmax = std::max({std::abs(d[0]), std::abs(d[1]), std::abs(d[2]), std::abs(d[4])});
  hz.divisionRemainder = std::max(std::abs(D), std::abs(E)) / dmax;
  if (hz.divisionRemainder > 1e-12)
    throw NumericalError("NoPositivityInterval", "horizon division remainder too large");
  if (!(hz.P2(hz.rMinus) > 0 && hz.P2(hz.rPlus) > 0))
    throw NumericalError("NoPositivityInterval", "P2 not positive at the horizons");

  const double a2 = p.a * p.a;
  const double lam = p.lambda_factor();
  const double width = hz.rPlus - hz.rMinus;
  hz.OmegaMinus = p.a / (hz.rMinus * hz.rMinus + a2);
  hz.OmegaPlus = p.a / (hz.rPlus * hz.rPlus + a2);
  const double ram = hz.rMinus * hz.rMinus + a2, rap = hz.rPlus * hz.rPlus + a2;
  hz.kappaMinus = width * hz.P2(hz.rMinus) / (lam * ram);
  hz.kappaPlus = width * hz.P2(hz.rPlus) / (lam * rap);
  hz.alphaMinus = std::sqrt(hz.P2(hz.rMinus)) / (lam * ram);
  hz.alphaPlus = std::sqrt(hz.P2(hz.rPlus)) / (lam * rap);
  hz.kappaAlphaMinus = hz.alphaMinus * hz.alphaMinus * width;
  hz.kappaAlphaPlus = hz.alphaPlus * hz.alphaPlus * width;
  return hz;
}

double delta_r_factored(const HorizonData& hz, double r, double dMinus, double dPlus) {
  return dMinus * dPlus * hz.P2(r);
}

double omega_coordinate(const SpacetimeParams& p, double r, double theta) {
  const double ra = r * r + p.a * p.a;
  const double s = std::sin(theta);
  return p.a * (ra * delta_theta(p, theta) - delta_r(p, r) * p.a * p.a * s * s) /
         sigma2(p, r, theta);
}

ErgoBounds ergo_bounds(const SpacetimeParams& p, const HorizonData& hz, double theta) {
  ErgoBounds out{hz.rMinus, hz.rPlus, false};
  if (p.a == 0.0) return out;
  const double s = std::sin(theta);
  const double shift = p.a * p.a * s * s * delta_theta(p, theta);
  auto f = [&](double r) { return delta_r(p, r) - shift; };
  if (!(f(hz.rMax) > 0) || shift <= 0) return out;
  out.r1 = toms748_root(f, hz.rMinus, hz.rMax);
  out.r2 = toms748_root(f, hz.rMax, hz.rPlus);
  out.present = true;
  return out;
}

RWMap::RWMap(const SpacetimeParams& p, const HorizonData& hz, int nNodes, double xSpan)
    : p_(p), hz_(hz), xSpan_(xSpan), width_(hz.rPlus - hz.rMinus) {
  if (nNodes < 16) throw ValidationError("ConfigInvalid", "rw_map needs at least 16 nodes");
  if (!(xSpan > 0)) throw ValidationError("ConfigInvalid", "rw_map span must be positive");
  const double lam = p.lambda_factor();
  const double a2 = p.a * p.a;
  aMinus_ = lam * (hz.rMinus * hz.rMinus + a2) / (width_ * hz.P2(hz.rMinus));
  aPlus_ = lam * (hz.rPlus * hz.rPlus + a2) / (width_ * hz.P2(hz.rPlus));

  xNodes_.resize(nNodes);
  yNodes_.resize(nNodes);
  for (int i = 0; i < nNodes; ++i) xNodes_[i] = -xSpan + 2.0 * xSpan * i / (nNodes - 1);

  const double yMax = std::log((hz.rMax - hz.rMinus) / (hz.rPlus - hz.rMax));
  // March outward from the pinning point so each solve starts close.
  const auto mid = std::lower_bound(xNodes_.begin(), xNodes_.end(), 0.0) - xNodes_.begin();
  double guess = yMax;
  for (auto i = mid; i < nNodes; ++i) guess = yNodes_[i] = y_of_x(xNodes_[i], guess);
  guess = yMax;
  for (auto i = mid - 1; i >= 0; --i) guess = yNodes_[i] = y_of_x(xNodes_[i], guess);

  points_.reserve(nNodes);
  rNodes_.reserve(nNodes);
  for (double y : yNodes_) {
    points_.push_back(point_of_y(y));
    rNodes_.push_back(points_.back().r);
  }
}

RadialPoint RWMap::point_of_y(double y) const {
  RadialPoint pt;
  if (y < 0) {
    const double e = std::exp(y);
    pt.dMinus = width_ * e / (1.0 + e);
    pt.dPlus = width_ / (1.0 + e);
    pt.r = hz_.rMinus + pt.dMinus;
  } else {
    const double e = std::exp(-y);
    pt.dMinus = width_ / (1.0 + e);
    pt.dPlus = width_ * e / (1.0 + e);
    pt.r = hz_.rPlus - pt.dPlus;
  }
  return pt;
}

double RWMap::smooth_part(double r) const {
  const auto& c = hz_.P2coeffs;
  const double a2 = p_.a * p_.a;
  const double lam = p_.lambda_factor();
  const double pm = hz_.P2(hz_.rMinus), pp = hz_.P2(hz_.rPlus);
  auto D = [&](double x, double s) { return c[1] * x * s + (c[0] - a2 * c[2]) * (x + s) - a2 * c[1]; };
  auto g = [&](double s) {
    const double P = hz_.P2(s);
    return lam / width_ * (D(s, hz_.rMinus) / (P * pm) - D(s, hz_.rPlus) / (P * pp));
  };
  if (r == hz_.rMax) return 0.0;
  double err = 0;
  const double lo = std::min(r, hz_.rMax), hi = std::max(r, hz_.rMax);
  const double val = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, lo, hi, 12, 1e-14, &err);
  if (!std::isfinite(val) || err > 1e-10 * std::max(1.0, std::abs(val)))
    throw NumericalError("QuadratureFailure", "adaptive integration of dx/dr did not converge");
  return r < hz_.rMax ? -val : val;
}

double RWMap::x_of_point(const RadialPoint& pt) const {
  const double dmMax = hz_.rMax - hz_.rMinus, dpMax = hz_.rPlus - hz_.rMax;
  return aMinus_ * std::log(pt.dMinus / dmMax) - aPlus_ * std::log(pt.dPlus / dpMax) + smooth_part(pt.r);
}

double RWMap::x_of_y(double y) const {
  // log offsets straight from y so the far tails never round to zero
  const double lw = std::log(width_);
  double lm, lp;
  if (y < 0) {
    const double l1 = std::log1p(std::exp(y));
    lm = lw + y - l1;
    lp = lw - l1;
  } else {
    const double l1 = std::log1p(std::exp(-y));
    lm = lw - l1;
    lp = lw - y - l1;
  }
  const double dmMax = hz_.rMax - hz_.rMinus, dpMax = hz_.rPlus - hz_.rMax;
  return aMinus_ * (lm - std::log(dmMax)) - aPlus_ * (lp - std::log(dpMax)) + smooth_part(point_of_y(y).r);
}

double RWMap::x_of_r(double r) const {
  if (!(r > hz_.rMinus && r < hz_.rPlus))
    throw ValidationError("DomainError", "r outside the horizon interval");
  return x_of_point({r, r - hz_.rMinus, hz_.rPlus - r});
}

double RWMap::dx_dr(const RadialPoint& pt) const {
  return p_.lambda_factor() * (pt.r * pt.r + p_.a * p_.a) / delta_r_factored(hz_, pt.r, pt.dMinus, pt.dPlus);
}

double RWMap::y_of_x(double x, double guess) const {
  auto F = [&](double y) { return x_of_y(y) - x; };
  auto slope = [&](double y) {
    const RadialPoint pt = point_of_y(y);
    return p_.lambda_factor() * (pt.r * pt.r + p_.a * p_.a) / (width_ * hz_.P2(pt.r));
  };
  const double tol = 1e-13 * std::max(1.0, std::abs(x));
  double y = guess;
  double fy = F(y);
  // bracket first, then Newton with bisection fallback
  double lo = y, hi = y, flo = fy, fhi = fy;
  double step = std::max(1.0, std::abs(fy) * std::min(1.0 / aMinus_, 1.0 / aPlus_) * 1.5);
  while (flo > 0) {
    hi = lo;
    fhi = flo;
    lo -= step;
    flo = F(lo);
    step *= 2;
  }
  while (fhi < 0) {
    lo = hi;
    flo = fhi;
    hi += step;
    fhi = F(hi);
    step *= 2;
  }
  y = std::clamp(y, lo, hi);
  fy = F(y);
  for (int it = 0; it < 100 && std::abs(fy) > tol; ++it) {
    double yn = y - fy / slope(y);
    if (!(yn > lo && yn < hi)) yn = 0.5 * (lo + hi);
    y = yn;
    fy = F(y);
    if (fy > 0)
      hi = y;
    else
      lo = y;
  }
  if (std::abs(fy) > 1e-9 * std::max(1.0, std::abs(x)))
    throw NumericalError("QuadratureFailure", "Regge-Wheeler inversion did not converge");
  return y;
}

RadialPoint RWMap::r_of_x(double x) const {
  double guess;
  const std::size_t n = xNodes_.size();
  if (x <= xNodes_.front()) {
    guess = yNodes_.front() + (x - xNodes_.front()) / aMinus_;
  } else if (x >= xNodes_.back()) {
    guess = yNodes_.back() + (x - xNodes_.back()) / aPlus_;
  } else {
    const auto it = std::upper_bound(xNodes_.begin(), xNodes_.end(), x);
    const std::size_t i = std::min<std::size_t>(it - xNodes_.begin(), n - 1);
    const double t = (x - xNodes_[i - 1]) / (xNodes_[i] - xNodes_[i - 1]);
    guess = (1 - t) * yNodes_[i - 1] + t * yNodes_[i];
  }
  return point_of_y(y_of_x(x, guess));
}

}  // namespace dsk
