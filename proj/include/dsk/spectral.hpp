#pragma once

#include <functional>
#include <vector>

#include "dsk/kg_algebra.hpp"
#include "dsk/mode_operators.hpp"

namespace dsk {

struct EigenOptions {
  Eigen::Index budget = 6000;  // largest 2N handed to the dense solver
  bool vectors = true;         // residuals need right eigenvectors
  double imagThreshold = 1e-6;
};

struct SpectrumReport {
  std::vector<cplx> eigenvalues;  // sorted by real part, then imaginary part
  std::vector<double> residuals;  // ||H v - z v|| / ((||H||_1 + |z|) ||v||), empty without vectors
  double maxResidual = 0;
  double conjugationPairingError = 0;
  int complexCount = 0;  // |Im z| > imagThreshold
  double imagThreshold = 0;
  double maxAbsImag = 0;
  double pencilCrossCheck = 0;  // max ||p(z) v0|| / ||v0||
  CMat vectors;                 // stacked (v0, v1) columns matching eigenvalues
};

// Full dense spectrum of H = [[0, 1], [h, 2k]].
SpectrumReport eig_hamiltonian(const KGSystem& sys, const EigenOptions& opt = {});

// A few eigenvalues nearest target by shift-invert Arnoldi on the resolvent.
SpectrumReport eig_near(const KGSystem& sys, cplx target, int count, int krylovDim = 0, unsigned seed = 11);

struct SearchRegion {
  double reMin = -1e300, reMax = 1e300, imMin = -1e300, imMax = 1e300;
  bool contains(cplx z) const {
    return z.real() >= reMin && z.real() <= reMax && z.imag() >= imMin && z.imag() <= imMax;
  }
};

// Roots of det p(z) inside region, from the companion [[2k, 1], [h, 0]].
std::vector<cplx> pencil_roots(const KGSystem& sys, const SearchRegion& region, Eigen::Index budget = 6000);

struct ScanOptions {
  std::vector<double> lambdaGrid;
  std::vector<double> deltaList{0.8, 0.4, 0.2};
  double growthThreshold = 10.0;
  int powerIterations = 20;
  int restarts = 3;
  unsigned seed = 1;
  int threads = 1;
};

struct ScanSample {
  double lambda = 0, delta = 0, norm = 0;
};

struct ResonanceScan {
  std::vector<double> lambdaGrid, deltaList;
  std::vector<ScanSample> table;      // sorted by lambda, then delta descending
  std::vector<double> growth;         // per lambda: norm at smallest delta / norm at largest delta
  std::vector<double> peakCandidates;
};

// Norms of m R(lambda + i delta) m, m a multiplier on both state components.
ResonanceScan weighted_resolvent_scan(const KGSystem& sys, const Vec& multiplier, const ScanOptions& opt);

// Largest singular value of x -> m R(z) m x by power iteration on A^* A.
double weighted_resolvent_norm(const KGSystem& sys, const Vec& multiplier, cplx z, int iterations,
                               int restarts, unsigned seed);

struct ResolventBounds {
  cplx z;
  double pencilInverseNorm = 0;  // ||p(z)^{-1}||
  double energyNorm = 0;         // ||h0^{1/2} p(z)^{-1}||
  double scaledPencil = 0;       // ||p^{-1}|| |z| |Im z|
  double scaledEnergy = 0;       // ||h0^{1/2} p^{-1}|| |Im z|
};
// Fan of samples with |z| >= factor * max(||k||, floor) at ten arguments; radii grow
// geometrically by growth.
std::vector<cplx> resolvent_fan(double kNorm, int count, double factor = 1.1, double floor = 0.5,
                                double growth = 2.0);
std::vector<ResolventBounds> resolvent_bounds(const KGSystem& sys, const std::vector<cplx>& zs,
                                              int iterations = 30, unsigned seed = 5);

struct GluedParts {
  const KGSystem* full = nullptr;
  const KGSystem* plus = nullptr;   // coincides with full where iPlus is supported
  const KGSystem* minus = nullptr;  // coincides with full where iMinus is supported
  Vec iPlus, iMinus, jPlus, jMinus; // on the state dimension N
};

struct GluedCheck {
  double residual = 0;           // ||R - Q (1 + K)^{-1}|| / ||R||
  double identityDefect = 0;     // ||(H - z) Q - (1 + K)|| / ||1 + K||
  double commutatorDefect = 0;   // largest entry of [H, i] outside its lower-left block
  double factorInverseDefect = 0;  // ||(1 + Kj)(1 - Kj) - 1||
  double factorProductDefect = 0;  // ||(1 + Kj)(1 + A) - (1 + K)|| / ||1 + K||
  double rcond = 0;              // of 1 + K
};
GluedCheck glued_resolvent_check(const GluedParts& parts, cplx z);
GluedParts glued_parts(const OperatorBundle& b);

struct RieszResult {
  CMat E;
  int enclosed = 0;  // eigenvalues inside the circle
  double trace = 0;
  double idempotencyDefect = 0;  // ||E^2 - E||, spectral norm
  double norm = 0;
};
RieszResult riesz_projector(const KGSystem& sys, cplx center, double radius, int quadPoints = 256);

struct CalculusResult {
  CMat F;
  bool contourFallback = false;  // eigenvector basis too ill-conditioned
  double eigenvectorCondition = 0;
  int clusters = 0;
};
CalculusResult smooth_calculus(const KGSystem& sys, const std::function<cplx(cplx)>& f);

// Linear interpolation of samples, evaluated at Re z; zero outside the sampled range.
std::function<cplx(cplx)> sampled_function(std::vector<double> xs, std::vector<double> ys);

double spectral_norm(const CMat& A);

}  // namespace dsk
