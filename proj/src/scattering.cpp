#include "dsk/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dsk/parallel.hpp"

namespace dsk {

namespace {

constexpr cplx I1(0.0, 1.0);

void require_profile(const ModeGrid& grid, const ProfileDatum& d) {
  require_dims(d.u0.size(), grid.Nx, "profile datum");
  require_dims(d.u1.size(), grid.Nx, "profile datum");
}

CVec g_of(const ProfileDatum& d) { return d.u1 - I1 * d.ell * d.u0; }

// Values and slopes of one d'Alembert potential with constant extensions.
struct Potential {
  CVec v, dv;
  cplx left = 0, right = 0;
};

cplx hermite(const Potential& P, double pos, double dx, bool slope) {
  const Eigen::Index N = P.v.size();
  if (pos < 0) return slope ? cplx(0) : P.left;
  if (pos > double(N - 1)) return slope ? cplx(0) : P.right;
  Eigen::Index j = Eigen::Index(std::floor(pos));
  double s = pos - double(j);
  if (s < 1e-9) s = 0;
  if (s > 1 - 1e-9) {
    s = 0;
    ++j;
  }
  if (s == 0 || j + 1 >= N) return slope ? P.dv[j] : P.v[j];
  const double s2 = s * s, s3 = s2 * s;
  if (!slope)
    return (2 * s3 - 3 * s2 + 1) * P.v[j] + (s3 - 2 * s2 + s) * dx * P.dv[j] + (-2 * s3 + 3 * s2) * P.v[j + 1] +
           (s3 - s2) * dx * P.dv[j + 1];
  return ((6 * s2 - 6 * s) * P.v[j] + (6 * s - 6 * s2) * P.v[j + 1]) / dx + (3 * s2 - 4 * s + 1) * P.dv[j] +
         (3 * s2 - 2 * s) * P.dv[j + 1];
}

// Largest deviation from the extension value over nodes that a shift never samples.
double lost_content(const Potential& P, Eigen::Index from, Eigen::Index to, cplx ext, double dx) {
  double m = 0;
  for (Eigen::Index j = std::max<Eigen::Index>(from, 0); j < std::min<Eigen::Index>(to, P.v.size()); ++j)
    m = std::max({m, std::abs(P.v[j] - ext), dx * std::abs(P.dv[j])});
  return m;
}

double full_norm(const KGSystem& sys, const State& s) { return std::sqrt(std::max(0.0, energy_norms(sys, s).hom)); }

State cut(const State& s, const Vec& w) {
  const CVec wc = w.cast<cplx>();
  return {s.u0.cwiseProduct(wc), s.u1.cwiseProduct(wc)};
}

double state_support(const ModeGrid& grid, const State& s) { return support_radius(grid, s, 1e-8); }

void finalize(WaveOpReport& r, const std::function<double(const State&)>& norm) {
  const std::size_t n = r.approximants.size();
  for (const State& a : r.approximants) r.norms.push_back(norm(a));
  for (std::size_t i = 0; i + 1 < n; ++i) r.cauchyGaps.push_back(norm(r.approximants[i + 1] - r.approximants[i]));
  for (std::size_t i = 0; i + 1 < r.cauchyGaps.size(); ++i)
    r.gapRatios.push_back(r.cauchyGaps[i] > 0 ? r.cauchyGaps[i + 1] / r.cauchyGaps[i] : 0.0);
  r.gapsNonincreasing = true;
  for (std::size_t i = 1; i < r.cauchyGaps.size(); ++i)
    if (r.cauchyGaps[i] > r.cauchyGaps[i - 1]) r.gapsNonincreasing = false;
  r.normConstant = *std::max_element(r.norms.begin(), r.norms.end()) / std::max(r.inputNorm, 1e-300);
  r.limit = r.approximants.back();
  if (n >= 2) {
    const double q = std::exp(-r.kappa * (r.Tschedule[n - 1] - r.Tschedule[n - 2]));
    r.limit = (1.0 / (1.0 - q)) * (r.approximants[n - 1] - q * r.approximants[n - 2]);
    r.extrapolatedError = norm(r.limit - r.approximants.back());
  }
  // least-squares slope of log gaps against the left schedule point
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < r.cauchyGaps.size(); ++i)
    if (r.cauchyGaps[i] > 0) pts.emplace_back(r.Tschedule[i], std::log(r.cauchyGaps[i]));
  if (pts.size() >= 2) {
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (const auto& [t, y] : pts) {
      st += t;
      sy += y;
      stt += t * t;
      sty += t * y;
    }
    const double m = double(pts.size());
    r.kappaFit = -(m * sty - st * sy) / (m * stt - st * st);
  }
}

Vec cutoff_weights(const OperatorBundle& b, Side side, const WaveOpOptions& opt) {
  if (opt.squaredCutoff) return cutoff_squared(b, side);
  const Vec& i1 = side == Side::Left ? b.cutoffs.iMinus : b.cutoffs.iPlus;
  return expand_angular(i1, b.grid.Ntheta);
}

void validate_schedule(const WaveOpOptions& opt) {
  if (opt.Tschedule.empty()) throw ValidationError("ConfigInvalid", "empty T schedule");
  for (std::size_t i = 0; i < opt.Tschedule.size(); ++i) {
    if (!(opt.Tschedule[i] > 0)) throw ValidationError("ConfigInvalid", "schedule times must be positive");
    if (i > 0 && !(opt.Tschedule[i] > opt.Tschedule[i - 1]))
      throw ValidationError("ConfigInvalid", "T schedule must be strictly increasing");
    step_count(opt.Tschedule[i], opt.dt);
  }
}

}  // namespace

State to_state(const ProfileDatum& d) { return {d.u0, -I1 * d.u1}; }

ProfileDatum from_state(const State& s, double ell, int q) { return {s.u0, I1 * s.u1, ell, q}; }

CVec cumulative_trapezoid(const ModeGrid& grid, const CVec& g) {
  require_dims(g.size(), grid.Nx, "cumulative_trapezoid");
  CVec G(g.size());
  G[0] = 0;
  for (Eigen::Index j = 1; j < g.size(); ++j) G[j] = G[j - 1] + 0.5 * grid.dx * (g[j - 1] + g[j]);
  return G;
}

CVec profile_derivative(const ModeGrid& grid, const CVec& u) {
  require_dims(u.size(), grid.Nx, "profile_derivative");
  const Eigen::Index N = u.size();
  const double dx = grid.dx;
  CVec p(N);
  p[0] = 0;
  for (Eigen::Index j = 0; j + 1 < N; ++j) p[j + 1] = 2.0 * (u[j + 1] - u[j]) / dx - p[j];
  cplx alpha = 0;
  for (Eigen::Index j = 0; j < N; ++j) {
    const cplx c = j == 0       ? (u[1] - u[0]) / dx
                   : j == N - 1 ? (u[N - 1] - u[N - 2]) / dx
                                : (u[j + 1] - u[j - 1]) / (2 * dx);
    alpha += (j % 2 ? -1.0 : 1.0) * (c - p[j]);
  }
  alpha /= double(N);
  for (Eigen::Index j = 0; j < N; ++j) p[j] += (j % 2 ? -1.0 : 1.0) * alpha;
  return p;
}

double mean_defect(const ModeGrid& grid, const ProfileDatum& d) {
  require_profile(grid, d);
  const CVec g = g_of(d);
  const cplx total = cumulative_trapezoid(grid, g)[g.size() - 1];
  const double l1 = grid.dx * g.cwiseAbs().sum();
  return l1 > 0 ? std::abs(total) / l1 : 0.0;
}

bool in_L(const ModeGrid& grid, const ProfileDatum& d, double tol) { return mean_defect(grid, d) <= tol; }

ProfileDatum subtract_mean(const ModeGrid& grid, const ProfileDatum& d, double center, double width) {
  require_profile(grid, d);
  if (!(width > 0)) throw ValidationError("ConfigInvalid", "bump width must be positive");
  CVec psi(grid.Nx);
  for (int j = 0; j < grid.Nx; ++j) {
    const double y = (grid.x[j] - center) / width;
    psi[j] = std::exp(-0.5 * y * y);
  }
  const cplx mass = cumulative_trapezoid(grid, psi)[grid.Nx - 1];
  const cplx total = cumulative_trapezoid(grid, g_of(d))[grid.Nx - 1];
  ProfileDatum out = d;
  out.u1 -= (total / mass) * psi;
  return out;
}

ProfileDatum make_ingoing(const ModeGrid& grid, const CVec& u0, double ell, int q) {
  return {u0, profile_derivative(grid, u0) + I1 * ell * u0, ell, q};
}

ProfileDatum make_outgoing(const ModeGrid& grid, const CVec& u0, double ell, int q) {
  return {u0, -profile_derivative(grid, u0) + I1 * ell * u0, ell, q};
}

State directional_filter(const KGSystem& sys, const ModeGrid& grid, const State& psi, bool ingoing, double tau,
                         double dt) {
  if (!(tau > 0) || !(dt > 0)) throw ValidationError("ConfigInvalid", "tau and dt must be positive");
  const Eigen::Index n = psi.u0.size();
  if (n != grid.Nx && n != grid.dim2d()) throw ValidationError("ConfigInvalid", "state does not match the grid");
  require_dims(sys.dim(), n, "directional_filter");
  const Eigen::Index stride = n == grid.Nx ? 1 : grid.Ntheta;
  double mass = 0, first = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double m = std::norm(psi.u0[j]);
    mass += m;
    first += m * grid.x[j / stride];
  }
  if (mass == 0) return psi;
  const double center = first / mass;
  Vec mask(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double s = (grid.x[j / stride] - center) / (tau / 6.0);
    mask[j] = 0.5 * std::erfc(ingoing ? s : -s);
  }
  const CayleyStepper step(sys, dt);
  return propagate(step, cut(propagate(step, psi, tau), mask), -tau);
}

ProfileDatum discrete_directional(const OperatorBundle& b, Side side, const ProfileDatum& d, bool ingoing,
                                  double tau, double dt) {
  require_profile(b.grid, d);
  const auto& p = side == Side::Left ? b.profileLeft : b.profileRight;
  if (!p) throw ValidationError("ConfigInvalid", "bundle has no profile systems");
  return from_state(directional_filter(*p, b.grid, to_state(d), ingoing, tau, dt), d.ell, d.q);
}

namespace {
ProfileDatum raw_packet(const OperatorBundle& b, Side side, double center, double width, double waveNumber) {
  if (!(width > 0)) throw ValidationError("ConfigInvalid", "packet width must be positive");
  const ModeGrid& g = b.grid;
  CVec u0(g.Nx);
  for (Eigen::Index j = 0; j < g.Nx; ++j) {
    const double y = (g.x[j] - center) / width;
    u0[j] = std::exp(cplx(-0.5 * y * y, waveNumber * g.x[j]));
  }
  const double ell = side_ell(b, side);
  return side == Side::Left ? make_ingoing(g, u0, ell) : make_outgoing(g, u0, ell);
}
}  // namespace

ProfileDatum wave_packet(const OperatorBundle& b, Side side, double center, double width, double waveNumber,
                         double tau) {
  const ProfileDatum d =
      discrete_directional(b, side, raw_packet(b, side, center, width, waveNumber), side == Side::Left, tau);
  return subtract_mean(b.grid, d, center, width);
}

State separable_wave_packet(const OperatorBundle& b, Side side, double center, double width, double waveNumber,
                            double tau) {
  const State whole = fin_assemble(b, {raw_packet(b, side, center, width, waveNumber)});
  return directional_filter(comparison_system(b, side), b.grid, whole, side == Side::Left, tau);
}

double profile_energy(const ModeGrid& grid, const ProfileDatum& d) {
  require_profile(grid, d);
  return profile_derivative(grid, d.u0).squaredNorm() + g_of(d).squaredNorm();
}

ProfileDatum profile_evolve(const ModeGrid& grid, const ProfileDatum& d, double t, double tol) {
  require_profile(grid, d);
  const Eigen::Index N = grid.Nx;
  const double dx = grid.dx;
  const CVec g = g_of(d);
  const CVec G = cumulative_trapezoid(grid, g);
  const CVec du = profile_derivative(grid, d.u0);
  const cplx Gtot = G[N - 1];
  Potential A{0.5 * (d.u0 + G), 0.5 * (du + g), 0.0, 0.5 * Gtot};
  Potential B{0.5 * (d.u0 - G), 0.5 * (du - g), 0.0, -0.5 * Gtot};

  if (std::isfinite(tol)) {
    const double scale = std::max({A.v.cwiseAbs().maxCoeff(), B.v.cwiseAbs().maxCoeff(),
                                   dx * A.dv.cwiseAbs().maxCoeff(), dx * B.dv.cwiseAbs().maxCoeff(), 1e-300});
    const Eigen::Index k = Eigen::Index(std::ceil(std::abs(t) / dx - 1e-9));
    const double lost = t >= 0 ? std::max(lost_content(A, 0, k, A.left, dx), lost_content(B, N - k, N, B.right, dx))
                               : std::max(lost_content(A, N - k, N, A.right, dx), lost_content(B, 0, k, B.left, dx));
    if (lost > tol * scale)
      throw ValidationError("SupportOverflow", "translated profile leaves the grid (relative content " +
                                                   std::to_string(lost / scale) + ")");
  }

  const cplx phase = std::polar(1.0, d.ell * t);
  const double shift = t / dx;
  ProfileDatum out{CVec(N), CVec(N), d.ell, d.q};
  for (Eigen::Index j = 0; j < N; ++j) {
    const double pj = double(j);
    const cplx v = hermite(A, pj + shift, dx, false) + hermite(B, pj - shift, dx, false);
    const cplx vt = hermite(A, pj + shift, dx, true) - hermite(B, pj - shift, dx, true);
    out.u0[j] = phase * v;
    out.u1[j] = I1 * d.ell * out.u0[j] + phase * vt;
  }
  return out;
}

InOutSplit inout_split(const ModeGrid& grid, const ProfileDatum& d) {
  require_profile(grid, d);
  if (!in_L(grid, d)) throw ValidationError("NotInL", "u1 - i l u0 must have zero mean");
  const CVec g = g_of(d);
  const CVec G = cumulative_trapezoid(grid, g);
  const CVec du = profile_derivative(grid, d.u0);
  InOutSplit s;
  s.in = {0.5 * (d.u0 + G), CVec(), d.ell, d.q};
  s.out = {0.5 * (d.u0 - G), CVec(), d.ell, d.q};
  s.in.u1 = 0.5 * (du + g) + I1 * d.ell * s.in.u0;
  s.out.u1 = 0.5 * (g - du) + I1 * d.ell * s.out.u0;
  s.reconstructionError = std::max((s.in.u0 + s.out.u0 - d.u0).cwiseAbs().maxCoeff(),
                                   (s.in.u1 + s.out.u1 - d.u1).cwiseAbs().maxCoeff());
  auto defect = [&](const ProfileDatum& p, double sign) {
    const CVec r = p.u1 - sign * profile_derivative(grid, p.u0) - I1 * d.ell * p.u0;
    const double sc = p.u1.cwiseAbs().maxCoeff();
    return sc > 0 ? r.cwiseAbs().maxCoeff() / sc : 0.0;
  };
  s.ingoingDefect = defect(s.in, 1.0);
  s.outgoingDefect = defect(s.out, -1.0);
  return s;
}

std::vector<ProfileDatum> fin_project(const OperatorBundle& b, const State& psi, int Q, double ell) {
  const ModeGrid& g = b.grid;
  require_dims(psi.dim(), g.dim2d(), "fin_project");
  if (Q < 0 || Q > g.Ntheta) throw ValidationError("NotInFin", "Q must lie in [0, Ntheta]");
  const int top = std::min(Q, g.Ntheta - 1);
  std::vector<ProfileDatum> parts;
  for (int q = 0; q <= top; ++q) {
    State s = State::zero(g.Nx);
    for (int j = 0; j < g.Nx; ++j)
      for (int i = 0; i < g.Ntheta; ++i) {
        s.u0[j] += b.sphere.Z(i, q) * psi.u0[g.index(j, i)];
        s.u1[j] += b.sphere.Z(i, q) * psi.u1[g.index(j, i)];
      }
    parts.push_back(from_state(s, ell, q));
  }
  return parts;
}

State fin_assemble(const OperatorBundle& b, const std::vector<ProfileDatum>& parts) {
  const ModeGrid& g = b.grid;
  State out = State::zero(g.dim2d());
  for (const ProfileDatum& p : parts) {
    require_profile(g, p);
    if (p.q < 0 || p.q >= g.Ntheta) throw ValidationError("NotInFin", "angular index out of range");
    const State s = to_state(p);
    for (int j = 0; j < g.Nx; ++j)
      for (int i = 0; i < g.Ntheta; ++i) {
        out.u0[g.index(j, i)] += b.sphere.Z(i, p.q) * s.u0[j];
        out.u1[g.index(j, i)] += b.sphere.Z(i, p.q) * s.u1[j];
      }
  }
  return out;
}

Side parse_side(const std::string& s) {
  if (s == "left") return Side::Left;
  if (s == "right") return Side::Right;
  throw ValidationError("ConfigInvalid", "side must be 'left' or 'right', got '" + s + "'");
}

const char* side_name(Side s) { return s == Side::Left ? "left" : "right"; }

double side_ell(const OperatorBundle& b, Side s) { return s == Side::Left ? b.ell : 0.0; }

double side_kappa(const OperatorBundle& b, Side s) {
  return s == Side::Left ? b.horizons.kappaMinus : b.horizons.kappaPlus;
}

Vec cutoff_squared(const OperatorBundle& b, Side s) {
  const Vec& i1 = s == Side::Left ? b.cutoffs.iMinus : b.cutoffs.iPlus;
  return expand_angular(i1.array().square().matrix(), b.grid.Ntheta);
}

const KGSystem& comparison_system(const OperatorBundle& b, Side side) {
  const auto& c = side == Side::Left ? b.comparisonMinus : b.comparisonPlus;
  if (!c) throw ValidationError("ConfigInvalid", "bundle has no separable comparison");
  return *c;
}

double profile_state_norm(const OperatorBundle& b, Side side, const State& psi) {
  double e = 0;
  for (const ProfileDatum& p : fin_project(b, psi, b.grid.Ntheta, side_ell(b, side))) e += profile_energy(b.grid, p);
  return std::sqrt(e);
}

KGSystem profile_system_2d(const OperatorBundle& b, Side side) {
  const auto& p = side == Side::Left ? b.profileLeft : b.profileRight;
  if (!p) throw ValidationError("ConfigInvalid", "bundle has no profile systems");
  return kron_angular(*p, b.grid.Ntheta);
}

WaveOpReport wave_operator(const OperatorBundle& b, Side side, const std::vector<ProfileDatum>& datum,
                           const WaveOpOptions& opt) {
  validate_schedule(opt);
  if (datum.empty()) throw ValidationError("NotInFin", "empty angular expansion");
  const ModeGrid& g = b.grid;
  for (const ProfileDatum& p : datum) {
    require_profile(g, p);
    if (p.q < 0 || p.q >= g.Ntheta) throw ValidationError("NotInFin", "angular index out of range");
    if (!in_L(g, p)) throw ValidationError("NotInL", "u1 - i l u0 must have zero mean");
  }
  const State whole = fin_assemble(b, datum);
  check_causal_window(g, state_support(g, whole), opt.Tschedule.back(), opt.margin);

  const CayleyStepper full(*b.full, opt.dt);
  const KGSystem prof = profile_system_2d(b, side);
  const CayleyStepper profStep(prof, opt.dt);
  const Vec w = cutoff_weights(b, side, opt);
  WaveOpReport r;
  r.side = side;
  r.Tschedule = opt.Tschedule;
  r.kappa = side_kappa(b, side);
  r.approximants.resize(opt.Tschedule.size());
  parallel_for(opt.Tschedule.size(), opt.threads, [&](std::size_t i) {
    const double T = opt.Tschedule[i];
    State moved;
    if (opt.profile == ProfilePropagation::Discrete) {
      moved = propagate(profStep, whole, T);
    } else {
      std::vector<ProfileDatum> parts;
      for (const ProfileDatum& p : datum) parts.push_back(profile_evolve(g, p, T));
      moved = fin_assemble(b, parts);
    }
    r.approximants[i] = propagate(full, cut(moved, w), -T);
  });
  double e = 0;
  for (const ProfileDatum& p : datum) e += profile_energy(g, p);
  r.inputNorm = std::sqrt(e);
  finalize(r, [&](const State& s) { return full_norm(*b.full, s); });
  return r;
}

WaveOpReport inverse_wave_operator(const OperatorBundle& b, Side side, const State& psi, const WaveOpOptions& opt) {
  validate_schedule(opt);
  const ModeGrid& g = b.grid;
  require_dims(psi.dim(), g.dim2d(), "inverse_wave_operator");
  check_causal_window(g, state_support(g, psi), opt.Tschedule.back(), opt.margin);
  const CayleyStepper full(*b.full, opt.dt);
  const KGSystem prof = profile_system_2d(b, side);
  const CayleyStepper profStep(prof, opt.dt);
  const Vec w = cutoff_weights(b, side, opt);
  const double ell = side_ell(b, side);
  const bool discrete = opt.profile == ProfilePropagation::Discrete;
  WaveOpReport r;
  r.side = side;
  r.Tschedule = opt.Tschedule;
  r.kappa = side_kappa(b, side);
  r.approximants.resize(opt.Tschedule.size());
  parallel_for(opt.Tschedule.size(), opt.threads, [&](std::size_t i) {
    const double T = opt.Tschedule[i];
    const State there = cut(propagate(full, psi, T), w);
    if (discrete) {
      r.approximants[i] = propagate(profStep, there, -T);
      return;
    }
    std::vector<ProfileDatum> back;
    // outgoing residue that leaves the grid is dropped
    for (const ProfileDatum& p : fin_project(b, there, g.Ntheta, ell))
      back.push_back(profile_evolve(g, p, -T, std::numeric_limits<double>::infinity()));
    r.approximants[i] = fin_assemble(b, back);
  });
  r.inputNorm = full_norm(*b.full, psi);
  if (discrete)
    finalize(r, [&](const State& s) { return full_norm(prof, s); });
  else
    finalize(r, [&](const State& s) { return profile_state_norm(b, side, s); });
  return r;
}

WaveOpReport separable_wave_operator(const OperatorBundle& b, Side side, const State& datum,
                                     const WaveOpOptions& opt) {
  validate_schedule(opt);
  const ModeGrid& g = b.grid;
  require_dims(datum.dim(), g.dim2d(), "separable_wave_operator");
  check_causal_window(g, state_support(g, datum), opt.Tschedule.back(), opt.margin);
  const KGSystem& cmp = comparison_system(b, side);
  const CayleyStepper full(*b.full, opt.dt), comp(cmp, opt.dt);
  const Vec w = cutoff_weights(b, side, opt);
  WaveOpReport r;
  r.side = side;
  r.Tschedule = opt.Tschedule;
  r.kappa = side_kappa(b, side);
  r.approximants.resize(opt.Tschedule.size());
  parallel_for(opt.Tschedule.size(), opt.threads, [&](std::size_t i) {
    const double T = opt.Tschedule[i];
    r.approximants[i] = propagate(full, cut(propagate(comp, datum, T), w), -T);
  });
  r.inputNorm = full_norm(cmp, datum);
  finalize(r, [&](const State& s) { return full_norm(*b.full, s); });
  return r;
}

WaveOpReport separable_inverse_wave_operator(const OperatorBundle& b, Side side, const State& psi,
                                             const WaveOpOptions& opt) {
  validate_schedule(opt);
  const ModeGrid& g = b.grid;
  require_dims(psi.dim(), g.dim2d(), "separable_inverse_wave_operator");
  check_causal_window(g, state_support(g, psi), opt.Tschedule.back(), opt.margin);
  const KGSystem& cmp = comparison_system(b, side);
  const CayleyStepper full(*b.full, opt.dt), comp(cmp, opt.dt);
  const Vec w = cutoff_weights(b, side, opt);
  WaveOpReport r;
  r.side = side;
  r.Tschedule = opt.Tschedule;
  r.kappa = side_kappa(b, side);
  r.approximants.resize(opt.Tschedule.size());
  parallel_for(opt.Tschedule.size(), opt.threads, [&](std::size_t i) {
    const double T = opt.Tschedule[i];
    r.approximants[i] = propagate(comp, cut(propagate(full, psi, T), w), -T);
  });
  r.inputNorm = full_norm(*b.full, psi);
  finalize(r, [&](const State& s) { return full_norm(cmp, s); });
  return r;
}

double intertwining_residual(const OperatorBundle& b, Side side, const State& datum, double s, double T, double dt) {
  const KGSystem& cmp = comparison_system(b, side);
  const CayleyStepper full(*b.full, dt), comp(cmp, dt);
  const Vec w = cutoff_squared(b, side);
  auto W = [&](const State& u) { return propagate(full, cut(propagate(comp, u, T), w), -T); };
  const State lhs = W(propagate(comp, datum, s));
  const State rhs = propagate(full, W(datum), s);
  return full_norm(*b.full, lhs - rhs) / std::max(full_norm(cmp, datum), 1e-300);
}

}  // namespace dsk
