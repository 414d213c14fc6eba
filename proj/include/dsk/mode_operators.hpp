#pragma once

#include <optional>
#include <vector>

#include "dsk/geometry.hpp"
#include "dsk/kg_algebra.hpp"

namespace dsk {

// Uniform x grid on (-X, X) with Dirichlet ends, Gauss-Jacobi nodes in cos(theta)
// for the weight sin(theta)^(2 nu), nu the pole exponent of the mode.
// muWeights integrate plain functions of cos(theta): sum w_i f(mu_i) ~ int f dmu.
// 2D index = j * Ntheta + i (x-major).
struct ModeGrid {
  int n = 0;
  int Nx = 0;
  double X = 0;
  double dx = 0;
  std::vector<double> x;
  int Ntheta = 0;
  double poleExponent = 0;
  Vec mu, muWeights, theta;

  // poleExponent defaults to |n|
  static ModeGrid make(int n, int Nx, double X, int Ntheta, std::optional<double> poleExponent = {});
  Eigen::Index dim2d() const { return Eigen::Index(Nx) * Ntheta; }
  Eigen::Index index(int j, int i) const { return Eigen::Index(j) * Ntheta + i; }
  double half_node(int j) const { return -X + (j + 0.5) * dx; }  // between x[j-1] and x[j]
};

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, Vec& nodes, Vec& weights);
// Gauss rule for the weight (1 - mu^2)^nu on [-1, 1].
void gauss_gegenbauer(int n, double nu, Vec& nodes, Vec& weights);
// Exponent of sin(theta) for regular solutions near the poles: |n| lambda / sqrt(Delta_theta at the poles).
double pole_exponent(const SpacetimeParams& p, int n);

struct SphereBasis {
  Mat P;        // angular operator in orthonormal node coordinates
  Vec lambdas;  // ascending eigenvalues
  Mat Z;        // orthonormal eigenvectors (columns)
};
Mat sphere_operator(const ModeGrid& grid, const SpacetimeParams& p);
SphereBasis sphere_basis(const ModeGrid& grid, const SpacetimeParams& p);

// Node coefficient tables along the x grid.
struct RadialSamples {
  std::vector<RadialPoint> nodes, halves;  // halves[j] sits at grid.half_node(j), j = 0..Nx
};
RadialSamples sample_radial(const RWMap& rw, const ModeGrid& grid);

KGSystem assemble_full_mode(const SpacetimeParams& p, const HorizonData& hz, const RWMap& rw,
                            const ModeGrid& grid);
// One 1D system per retained angular eigenvalue.
std::vector<KGSystem> assemble_separable(const SpacetimeParams& p, const HorizonData& hz,
                                         const RWMap& rw, const ModeGrid& grid, int Q);

struct Cutoffs {
  double epsilon = 0, Rscale = 0;
  Vec iMinus, iPlus, jMinus, jPlus;    // on the x grid
  Vec iTildeMinus, iTildePlus;         // same profile at scale Rscale
};
// Smooth step: 1 for y <= -1, 0 for y >= 1, with chiMinus^2 + chiPlus^2 = 1.
double chi_minus(double y);
double chi_plus(double y);
Cutoffs build_cutoffs(const ModeGrid& grid, double epsilon, double Rscale);
// Repeat an x-grid vector over the angular nodes.
Vec expand_angular(const Vec& xv, int Ntheta);

struct ProfilePair {
  KGSystem right, left;
};
// h_r = -d_x^2, k_r = 0; h_l = -d_x^2 - l^2, k_l = l on the 1D x grid.
ProfilePair assemble_profiles(const SpacetimeParams& p, const HorizonData& hz, const ModeGrid& grid);
SpMat laplacian_1d(const ModeGrid& grid);
// A (x) I_Ntheta
SpMat kron_angular(const SpMat& A, int Ntheta);
KGSystem kron_angular(const KGSystem& sys, int Ntheta);

struct AsymptoticSystems {
  KGSystem plus;          // (h_+, k_+)
  KGSystem minus;         // (h_-, k_-), same h0
  KGSystem minusGauged;   // (h~_-, k_- - l)
  bool plusPositive = false, minusPositive = false;
  double cPlus = 0, cMinus = 0;  // min over probes of (h v|v)/(k^2 v|v)
};
AsymptoticSystems assemble_asymptotics(const KGSystem& full, const Cutoffs& cut, int Ntheta,
                                       double ell, bool strict, unsigned seed = 7);

struct HypothesisChecks {
  bool h0Positive = false;
  double h0MinEig = 0;
  bool cutoffPartition = false, cutoffSupports = false;
  bool asymptoticPlusPositive = false, asymptoticMinusPositive = false;
  double cPlus = 0, cMinus = 0;
  bool all() const {
    return h0Positive && cutoffPartition && cutoffSupports && asymptoticPlusPositive &&
           asymptoticMinusPositive;
  }
};

struct BundleOptions {
  int Q = 8;
  std::optional<double> epsilon;  // default X/8
  std::optional<double> Rscale;   // default X/4
  bool separable = true;
};

struct OperatorBundle {
  SpacetimeParams params;
  HorizonData horizons;
  ModeGrid grid;
  SphereBasis sphere;
  double ell = 0;
  std::optional<KGSystem> full;
  std::vector<KGSystem> separablePerQ;
  std::optional<KGSystem> asymptoticPlus, asymptoticMinus, asymptoticMinusRaw;
  std::optional<KGSystem> comparisonPlus, comparisonMinus;  // 2D separable comparisons
  std::optional<KGSystem> profileRight, profileLeft;        // 1D
  Cutoffs cutoffs;
  HypothesisChecks checks;
};

double ell_for_mode(const SpacetimeParams& p, const HorizonData& hz, int n);

OperatorBundle assemble_bundle(const SpacetimeParams& p, const HorizonData& hz, const RWMap& rw,
                               const ModeGrid& grid, const BundleOptions& opt = {});

// Separable comparison on the 2D grid: side +1 gives (h0_s, 0), side -1 gives (h0_s - l^2, l).
KGSystem assemble_separable_2d(const SpacetimeParams& p, const HorizonData& hz, const RWMap& rw,
                               const ModeGrid& grid, const SphereBasis& sb, int side);

// Smallest eigenvalue of a sparse symmetric matrix by shifted inverse iteration.
double smallest_eigenvalue(const SpMat& A);

Vec cosh_weight(const ModeGrid& grid, double epsilon, bool twoD);

}  // namespace dsk
