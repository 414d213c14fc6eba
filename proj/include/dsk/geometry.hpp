#pragma once

#include <array>
#include <vector>

#include "dsk/common.hpp"

namespace dsk {

struct SpacetimeParams {
  double Lambda = 0.03;
  double M = 1.0;
  double a = 0.0;
  double massField = 0.0;

  SpacetimeParams() = default;
  SpacetimeParams(double Lambda_, double M_, double a_, double m_ = 0.0);

  // 1 + Lambda a^2 / 3
  double lambda_factor() const { return 1.0 + Lambda * a * a / 3.0; }
  void validate() const;
};

// Coefficient functions of the metric.
double delta_r(const SpacetimeParams& p, double r);
double delta_r_prime(const SpacetimeParams& p, double r);
double delta_theta(const SpacetimeParams& p, double theta);
double sigma2(const SpacetimeParams& p, double r, double theta);
double rho2(const SpacetimeParams& p, double r, double theta);

struct HorizonData {
  double rMinus = 0, rPlus = 0, rMax = 0;
  double OmegaMinus = 0, OmegaPlus = 0;
  // Exponential rates of r - r_- ~ e^{kappaMinus x}, r_+ - r ~ e^{-kappaPlus x}
  // in the Regge-Wheeler coordinate.
  double kappaMinus = 0, kappaPlus = 0;
  // sqrt(P2(r))/(lambda (r^2+a^2)) at each horizon and alpha^2 (r_+ - r_-).
  double alphaMinus = 0, alphaPlus = 0;
  double kappaAlphaMinus = 0, kappaAlphaPlus = 0;
  // P2(r) = P2coeffs[0] + P2coeffs[1] r + P2coeffs[2] r^2, Delta_r = q^2 P2.
  std::array<double, 3> P2coeffs{};
  double divisionRemainder = 0;

  double P2(double r) const { return P2coeffs[0] + r * (P2coeffs[1] + r * P2coeffs[2]); }
};

HorizonData find_horizons(const SpacetimeParams& p);

// Delta_r evaluated from distances to both horizons; keeps relative accuracy
// deep in the tails where r itself has rounded onto a horizon.
double delta_r_factored(const HorizonData& hz, double r, double dMinus, double dPlus);

double omega_coordinate(const SpacetimeParams& p, double r, double theta);

struct ErgoBounds {
  double r1 = 0, r2 = 0;
  bool present = false;  // false: no ergoregion at this angle (r1 = r_-, r2 = r_+)
};
ErgoBounds ergo_bounds(const SpacetimeParams& p, const HorizonData& hz, double theta);

// A point of (r_-, r_+) described with both horizon offsets.
struct RadialPoint {
  double r = 0, dMinus = 0, dPlus = 0;
};

class RWMap {
 public:
  RWMap(const SpacetimeParams& p, const HorizonData& hz, int nNodes, double xSpan);

  double x_of_r(double r) const;
  double x_of_point(const RadialPoint& pt) const;
  RadialPoint r_of_x(double x) const;
  // dx/dr = lambda (r^2+a^2)/Delta_r
  double dx_dr(const RadialPoint& pt) const;

  const std::vector<double>& xNodes() const { return xNodes_; }
  const std::vector<double>& rNodes() const { return rNodes_; }
  const std::vector<RadialPoint>& points() const { return points_; }
  double xSpan() const { return xSpan_; }
  const HorizonData& horizons() const { return hz_; }
  const SpacetimeParams& params() const { return p_; }

 private:
  RadialPoint point_of_y(double y) const;
  double x_of_y(double y) const;
  double smooth_part(double r) const;  // integral of the pole-free remainder from rMax
  double y_of_x(double x, double guess) const;

  SpacetimeParams p_;
  HorizonData hz_;
  double xSpan_;
  double width_;  // r_+ - r_-
  double aMinus_, aPlus_;
  std::vector<double> xNodes_, rNodes_, yNodes_;
  std::vector<RadialPoint> points_;
};

}  // namespace dsk
