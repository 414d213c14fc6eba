#pragma once

#include <vector>

#include "dsk/evolution.hpp"
#include "dsk/mode_operators.hpp"

namespace dsk {

// Cauchy data (u, du/dt) of one angular component on the x grid, evolving under
// u_tt - 2 i l u_t - u_xx - l^2 u = 0. Grid samples use the same scaling as State.
enum class Side { Left, Right };  // x -> -infinity (frequency l) and x -> +infinity

struct ProfileDatum {
  CVec u0, u1;
  double ell = 0;
  int q = 0;  // angular index
};

State to_state(const ProfileDatum& d);  // (u, -i du/dt)
ProfileDatum from_state(const State& s, double ell, int q = 0);

// Cumulative trapezoid from the left end, G[0] = 0.
CVec cumulative_trapezoid(const ModeGrid& grid, const CVec& g);
// Exact inverse of cumulative_trapezoid up to the constant u[0]; the free
// alternating mode is fixed by a least-squares fit to central differences.
CVec profile_derivative(const ModeGrid& grid, const CVec& u);

// g = u1 - i l u0 with its trapezoid integral and L1 norm.
double mean_defect(const ModeGrid& grid, const ProfileDatum& d);  // |int g| / ||g||_1
bool in_L(const ModeGrid& grid, const ProfileDatum& d, double tol = 1e-10);
// Removes the mean of g with a normalized Gaussian bump.
ProfileDatum subtract_mean(const ModeGrid& grid, const ProfileDatum& d, double center, double width);

// u1 = u0' + i l u0 (moves toward -infinity) or u1 = -u0' + i l u0 (toward +infinity).
ProfileDatum make_ingoing(const ModeGrid& grid, const CVec& u0, double ell, int q = 0);
ProfileDatum make_outgoing(const ModeGrid& grid, const CVec& u0, double ell, int q = 0);

// Keeps the part of psi that sys carries toward -infinity (ingoing) or
// +infinity: evolve tau, mask about the starting centroid, evolve back. Works
// on 1D states or assembled 2D states of the grid.
State directional_filter(const KGSystem& sys, const ModeGrid& grid, const State& psi, bool ingoing, double tau,
                         double dt = 0.05);
// The same with the discrete profile system of the side; removes the O(dx^2)
// opposite remnant left by make_ingoing and make_outgoing.
ProfileDatum discrete_directional(const OperatorBundle& b, Side side, const ProfileDatum& d, bool ingoing,
                                  double tau, double dt = 0.05);

// exp(-y^2/2 + i waveNumber x), y = (x - center) / width: in-going on the left
// side, out-going on the right, filtered with the profile system and mean-free.
ProfileDatum wave_packet(const OperatorBundle& b, Side side, double center, double width, double waveNumber,
                         double tau = 30);
// The same packet assembled on the 2D grid and filtered with the separable comparison.
State separable_wave_packet(const OperatorBundle& b, Side side, double center, double width, double waveNumber,
                            double tau = 30);

// sum |u0'|^2 + |u1 - i l u0|^2, the energy of the profile system.
double profile_energy(const ModeGrid& grid, const ProfileDatum& d);

// Explicit solution e^{ilt}/2 (u0(x+t) + u0(x-t) + int_{x-t}^{x+t} (u1 - i l u0)).
// Shifts by whole grid steps are exact; other shifts use cubic Hermite
// interpolation. Throws SupportOverflow when content above tol leaves the grid.
ProfileDatum profile_evolve(const ModeGrid& grid, const ProfileDatum& d, double t, double tol = 1e-8);

struct InOutSplit {
  ProfileDatum in, out;
  double reconstructionError = 0;  // max |in + out - datum|
  double ingoingDefect = 0;        // max |in.u1 - in.u0' - i l in.u0| / max |in.u1|
  double outgoingDefect = 0;
};
InOutSplit inout_split(const ModeGrid& grid, const ProfileDatum& d);  // NotInL

// Angular expansion over the sphere eigenvectors, q = 0..min(Q, Ntheta - 1).
std::vector<ProfileDatum> fin_project(const OperatorBundle& b, const State& psi, int Q, double ell);
State fin_assemble(const OperatorBundle& b, const std::vector<ProfileDatum>& parts);

Side parse_side(const std::string& s);
const char* side_name(Side s);
double side_ell(const OperatorBundle& b, Side s);
double side_kappa(const OperatorBundle& b, Side s);
Vec cutoff_squared(const OperatorBundle& b, Side s);  // i_s^2 on the 2D grid

// Profile dynamics in the wave operators: the time-stepped profile system on the
// same grid as the full system, or the explicit solution.
enum class ProfilePropagation { Discrete, Formula };

struct WaveOpOptions {
  std::vector<double> Tschedule{5, 10, 20};
  ProfilePropagation profile = ProfilePropagation::Discrete;
  double dt = 0.1;
  double margin = 1.0;
  int threads = 1;
  bool squaredCutoff = true;  // false: cut with i_s instead of i_s^2
};

struct WaveOpReport {
  Side side = Side::Left;
  std::vector<double> Tschedule;
  std::vector<State> approximants;
  std::vector<double> norms;        // energy norm of each approximant
  std::vector<double> cauchyGaps;   // norm of consecutive differences
  std::vector<double> gapRatios;    // gap[i+1] / gap[i]
  double inputNorm = 0;
  double normConstant = 0;          // max norms / inputNorm
  State limit;                      // Richardson extrapolation in e^{-kappa T}
  double kappa = 0, kappaFit = 0;
  double extrapolatedError = 0;     // norm(limit - last approximant)
  bool gapsNonincreasing = false;
};

// W_T u = e^{-iTH} i_s^2 e^{iTH_s} u: profile forward T, cut off, full system back T.
WaveOpReport wave_operator(const OperatorBundle& b, Side side, const std::vector<ProfileDatum>& datum,
                           const WaveOpOptions& opt);
// Omega_T psi = e^{-iTH_s} i_s^2 e^{iTH} psi, reported as assembled profile data.
WaveOpReport inverse_wave_operator(const OperatorBundle& b, Side side, const State& psi, const WaveOpOptions& opt);
// Same with the 2D separable comparison system in place of the profile dynamics.
WaveOpReport separable_wave_operator(const OperatorBundle& b, Side side, const State& datum,
                                     const WaveOpOptions& opt);
WaveOpReport separable_inverse_wave_operator(const OperatorBundle& b, Side side, const State& psi,
                                             const WaveOpOptions& opt);

// norm(W_T e^{isH_s} u - e^{isH} W_T u) / norm(u) for the separable comparison.
double intertwining_residual(const OperatorBundle& b, Side side, const State& datum, double s, double T, double dt);

const KGSystem& comparison_system(const OperatorBundle& b, Side side);
// Energy norm of an assembled profile state (sum over angular components).
double profile_state_norm(const OperatorBundle& b, Side side, const State& psi);
// The 1D profile system of a side repeated over the angular nodes.
KGSystem profile_system_2d(const OperatorBundle& b, Side side);

}  // namespace dsk
