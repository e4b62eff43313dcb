#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "fnls/errors.hpp"
#include "fnls/params.hpp"
#include "fnls/spectral.hpp"
#include "fnls/symbols.hpp"

namespace fnls {

enum class Method { petviashvili, gradient_flow, closed_form };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::petviashvili: return "petviashvili";
    case Method::gradient_flow: return "gradient-flow";
    case Method::closed_form: return "closed-form";
  }
  return "?";
}

/// Which dispersion enters the energy 1/2 <u, sigma(D) u> - 1/(2s+2) int |u|^{2s+2}.
enum class Problem {
  local,       ///< sigma = xi^2
  fractional,  ///< sigma = |xi|^s
  reduced,     ///< sigma = n(xi), the beta-free problem at mass N
  rescaled,    ///< sigma = n_N(xi), the normalized problem at mass s0
  traveling,   ///< sigma = |xi|^s - 2 beta xi
};

/// Energy functional with a sampled real symbol.
struct Functional {
  GridPtr grid;
  RVec symbol;
  double s = 1.5;

  double quadratic(const Profile& u) const { return quadratic_form_sampled(u, symbol); }
  double potential(const Profile& u) const { return potential_integral(u, s); }
  double energy(const Profile& u) const { return 0.5 * quadratic(u) - potential(u) / (2.0 * s + 2.0); }

  Profile apply_symbol(const Profile& u) const { return apply_sampled(u, symbol); }

  /// L2 gradient sigma(D) u - |u|^{2s} u.
  Profile gradient(const Profile& u) const { return apply_symbol(u) - nonlinearity(u, s); }

  /// Multiplier obtained by pairing the Euler-Lagrange equation with u.
  double rayleigh_multiplier(const Profile& u) const { return (potential(u) - quadratic(u)) / mass(u); }

  /// ||sigma u + theta u - |u|^{2s} u|| / ||u||.
  double residual(const Profile& u, double theta) const {
    return l2_norm(axpy(gradient(u), theta, u)) / l2_norm(u);
  }
};

inline Functional make_functional(Problem problem, GridPtr grid, const ModelParams& p) {
  Functional f;
  f.s = p.s;
  const double s = p.s;
  switch (problem) {
    case Problem::local:
      f.symbol = sample_symbol(*grid, [](double xi) { return xi * xi; });
      break;
    case Problem::fractional:
      f.symbol = sample_symbol(*grid, [s](double xi) { return std::pow(std::abs(xi), s); });
      break;
    case Problem::reduced:
      f.symbol = sample_symbol(*grid, [s](double xi) { return symbol_n(xi, s); });
      break;
    case Problem::rescaled:
      require(!p.validation, "the normalized problem needs s < 2");
      f.symbol = sample_symbol(*grid, [&p](double xi) { return symbol_nN(xi, p); });
      break;
    case Problem::traveling:
      f.symbol = sample_symbol(*grid, [&p](double xi) { return symbol_mbeta(xi, p); });
      break;
  }
  f.grid = std::move(grid);
  return f;
}

struct SolveOptions {
  double tol = 1e-10;          ///< relative Euler-Lagrange residual
  int max_iter = 20000;
  double mass_tol = 1e-13;     ///< relative mass accuracy of the outer multiplier loop
  int max_outer = 60;
  double energy_slack = 1e-13; ///< roundoff allowance when comparing energies
};

struct SolveResult {
  Profile profile;
  double multiplier = 0.0;
  double residual = std::numeric_limits<double>::infinity();
  double energy = 0.0;
  double mass = 0.0;
  int iterations = 0;
  bool converged = false;
  Method method = Method::closed_form;
  double stabilizer = 1.0;          ///< final Petviashvili factor
  std::vector<double> energy_log;   ///< accepted energies (gradient flow)
  std::vector<double> residual_log;
};

inline void fill_diagnostics(SolveResult& r, const Functional& f) {
  r.mass = mass(r.profile);
  r.multiplier = f.rayleigh_multiplier(r.profile);
  r.residual = f.residual(r.profile, r.multiplier);
  r.energy = f.energy(r.profile);
}

inline Profile renormalize(const Profile& u, double target_mass) {
  const double m = mass(u);
  require(m > 0.0, "cannot renormalize a zero profile");
  return Profile(u.grid_ptr(), (std::sqrt(target_mass / m) * u).values(), u.gauge());
}

// ---- closed forms ---------------------------------------------------------------

/// ((s+1) lambda)^{1/(2s)} sech^{1/s}(s sqrt(lambda) x), the positive even solution of
/// -R'' + lambda R = R^{2s+1}.
inline double local_profile_value(double x, double s, double lambda) {
  const double a = s * std::sqrt(lambda) * std::abs(x);
  // sech(a)^{1/s} = (2 e^{-a} / (1 + e^{-2a}))^{1/s}, stable for large a
  const double e = std::exp(-a);
  const double sech = 2.0 * e / (1.0 + e * e);
  return std::pow((s + 1.0) * lambda, 1.0 / (2.0 * s)) * std::pow(sech, 1.0 / s);
}

inline Profile local_ground_state(double s, double lambda, const GridPtr& grid) {
  require(s > 1.0 && s <= 2.0, "s must lie in (1, 2]");
  require(lambda > 0.0, "lambda must be positive");
  return Profile::sample(grid, [&](double x) { return local_profile_value(x, s, lambda); });
}

struct LimitConstants {
  double rho0;
  double lambda;
};

/// rho0 by grid quadrature of the unit local profile and the limiting multiplier.
inline LimitConstants lambda_of_s(double s, const GridPtr& grid) {
  require(s > 1.0 && s < 2.0, "lambda(s) needs 1 < s < 2");
  const double rho0 = mass(local_ground_state(s, 1.0, grid));
  return {rho0, limit_multiplier(s, rho0)};
}

// ---- Petviashvili -----------------------------------------------------------------

/// Fixed point u = M^gamma (sigma + theta)^{-1} |u|^{2s} u with stabilizing factor
/// M = <(sigma+theta) u, u> / <|u|^{2s} u, u> and gamma = (2s+1)/(2s).
inline SolveResult petviashvili_solve(const Functional& f, double theta, const Profile& init,
                                      const SolveOptions& opt = {}) {
  require(init.grid().same_as(*f.grid), "initial profile lives on another grid");
  require(l2_norm(init) > 0.0, "initial profile must be nonzero");
  RVec denom(f.symbol.size()), inv(f.symbol.size());
  for (std::size_t k = 0; k < denom.size(); ++k) {
    denom[k] = f.symbol[k] + theta;
    require(denom[k] > 0.0, "sigma + theta must be positive on the grid");
    inv[k] = 1.0 / denom[k];
  }
  const double s = f.s;
  const double gamma = (2.0 * s + 1.0) / (2.0 * s);
  SolveResult res;
  res.method = Method::petviashvili;
  Profile u = init;
  int outside = 0;
  for (int it = 1; it <= opt.max_iter; ++it) {
    const Profile nl = nonlinearity(u, s);
    const double num = quadratic_form_sampled(u, denom);
    const double den = pairing(nl, u);
    if (!(den > 0.0) || !std::isfinite(num)) {
      throw ConvergenceError("Petviashvili iteration collapsed", res.residual);
    }
    const double m = num / den;
    res.stabilizer = m;
    outside = (m < 0.5 || m > 2.0) ? outside + 1 : 0;
    if (outside >= 50) throw ConvergenceError("Petviashvili stabilizer left [0.5, 2]", m);

    // residual of the current iterate; cheap because nl and denom are at hand
    const Profile lin = apply_sampled(u, denom);
    res.residual = l2_norm(lin - nl) / l2_norm(u);
    res.residual_log.push_back(res.residual);
    res.iterations = it;
    if (res.residual <= opt.tol && std::abs(m - 1.0) <= 1e-10) {
      res.converged = true;
      break;
    }
    u = std::pow(m, gamma) * apply_sampled(nl, inv);
  }
  res.profile = u;
  res.energy = f.energy(u);
  res.mass = mass(u);
  res.multiplier = f.rayleigh_multiplier(u);
  if (!res.converged) throw ConvergenceError("Petviashvili iteration hit max_iter", res.residual);
  return res;
}

/// Petviashvili solves inside a secant loop on log(theta) that enforces a prescribed mass.
/// Locally mass ~ theta^{(2-s)/(2s)}, which gives the first secant slope.
inline SolveResult petviashvili_constrained(const Functional& f, double target_mass, double theta_guess,
                                            const Profile& init, const SolveOptions& opt = {}) {
  require(target_mass > 0.0, "target mass must be positive");
  require(theta_guess > 0.0, "multiplier guess must be positive");
  const double s = f.s;
  auto log_defect = [&](const SolveResult& r) { return std::log(r.mass / target_mass); };

  double la = std::log(theta_guess);
  SolveResult ra = petviashvili_solve(f, theta_guess, init, opt);
  double fa = log_defect(ra);
  int total = ra.iterations;
  double slope = (2.0 - s) / (2.0 * s);
  for (int outer = 0; outer < opt.max_outer && std::abs(fa) > opt.mass_tol; ++outer) {
    const double lb = la - fa / slope;
    const Profile seed = std::exp((lb - la) / (2.0 * s)) * ra.profile;
    SolveResult rb = petviashvili_solve(f, std::exp(lb), seed, opt);
    total += rb.iterations;
    const double fb = log_defect(rb);
    if (fb != fa && lb != la) slope = (fb - fa) / (lb - la);
    if (!(slope > 0.0) || !std::isfinite(slope)) slope = (2.0 - s) / (2.0 * s);
    la = lb;
    fa = fb;
    ra = std::move(rb);
  }
  if (std::abs(fa) > opt.mass_tol) throw ConvergenceError("mass secant loop did not converge", std::abs(fa));
  SolveResult out = std::move(ra);
  out.profile = renormalize(out.profile, target_mass);
  out.iterations = total;
  fill_diagnostics(out, f);
  out.converged = out.residual <= opt.tol;
  return out;
}

// ---- projected gradient flow -------------------------------------------------------

/// Mass-constrained descent on the energy. Directions are Sobolev gradients
/// ((sigma + theta)^{-1} preconditioning) projected to the tangent space of the mass
/// sphere and combined Polak-Ribiere style; every trial point is renormalized back onto
/// the sphere. Step lengths come from a secant on the directional derivative, and a step
/// is accepted only if the energy does not increase (up to roundoff slack).
inline SolveResult gradient_flow_minimize(const Functional& f, double target_mass, const Profile& init,
                                          const SolveOptions& opt = {}) {
  require(init.grid().same_as(*f.grid), "initial profile lives on another grid");
  require(target_mass > 0.0, "target mass must be positive");
  SolveResult res;
  res.method = Method::gradient_flow;
  double floor = 0.0;
  for (double v : f.symbol) floor = std::min(floor, v);

  struct Point {
    Profile u;
    double energy;
    double theta;
    Profile r;  // tangent L2 gradient sigma u + theta u - |u|^{2s} u
  };
  auto evaluate = [&](Profile u) {
    const Profile grad = f.gradient(u);
    const double theta = -pairing(grad, u) / mass(u);
    Profile r = axpy(grad, theta, u);
    const double e = f.energy(u);
    return Point{std::move(u), e, theta, std::move(r)};
  };
  auto retract = [&](const Point& p, const Profile& d, double t) {
    return evaluate(renormalize(axpy(p.u, t, d), target_mass));
  };

  Point cur = evaluate(renormalize(init, target_mass));
  res.energy_log.push_back(cur.energy);
  Profile dir_prev, z_prev, r_prev;
  bool have_prev = false;
  int stalls = 0;
  RVec precond(f.symbol.size());

  for (int it = 1; it <= opt.max_iter; ++it) {
    res.residual = l2_norm(cur.r) / l2_norm(cur.u);
    res.residual_log.push_back(res.residual);
    res.iterations = it;
    if (res.residual <= opt.tol) {
      res.converged = true;
      break;
    }

    const double shift = std::max(cur.theta, 1e-3 * std::max(1.0, std::abs(cur.theta))) - floor;
    for (std::size_t k = 0; k < precond.size(); ++k) precond[k] = 1.0 / (f.symbol[k] + shift);
    const Profile pg = apply_sampled(cur.r, precond);
    const Profile pu = apply_sampled(cur.u, precond);
    const Profile z = axpy(pg, -pairing(pg, cur.u) / pairing(pu, cur.u), pu);

    Profile dir = -1.0 * z;
    if (have_prev) {
      const double beta = std::max(0.0, pairing(cur.r, z - z_prev) / pairing(r_prev, z_prev));
      Profile d = axpy(dir, beta, dir_prev);
      dir = axpy(d, -pairing(d, cur.u) / mass(cur.u), cur.u);
    }
    double slope0 = pairing(cur.r, dir);
    if (!(slope0 < 0.0)) {
      dir = -1.0 * z;
      slope0 = pairing(cur.r, dir);
    }

    const double slack = opt.energy_slack * std::max(1.0, std::abs(cur.energy));
    Point trial = retract(cur, dir, 1.0);
    double t = 1.0;
    const double slope1 = pairing(trial.r, dir);
    const double curvature = slope1 - slope0;
    if (curvature > 0.0) {
      const double tsec = std::min(-slope0 / curvature, 4.0);
      if (std::abs(tsec - 1.0) > 0.05) {
        Point alt = retract(cur, dir, tsec);
        if (alt.energy <= trial.energy + slack || trial.energy > cur.energy + slack) {
          trial = std::move(alt);
          t = tsec;
        }
      }
    }
    while (trial.energy > cur.energy + slack && t > 1e-14) {
      t *= 0.5;
      trial = retract(cur, dir, t);
    }
    if (trial.energy > cur.energy + slack) {
      if (++stalls > 3) throw ConvergenceError("gradient flow step size underflow", res.residual);
      have_prev = false;
      continue;
    }
    stalls = 0;
    dir_prev = std::move(dir);
    z_prev = z;
    r_prev = cur.r;
    have_prev = true;
    cur = std::move(trial);
    res.energy_log.push_back(cur.energy);
  }
  res.profile = renormalize(cur.u, target_mass);
  fill_diagnostics(res, f);
  if (!res.converged) throw ConvergenceError("gradient flow hit max_iter", res.residual);
  return res;
}

// ---- ground state of the fractional problem ---------------------------------------

struct GroundState {
  SolveResult result;
  double gn_constant = 0.0;     ///< (s+1)/<Q,Q>^s
  double mass_threshold = 0.0;  ///< <Q,Q>
};

/// Solves |D|^s Q + Q = Q^{2s+1}; s = 2 is accepted as a validation case.
inline GroundState fractional_ground_state(double s, const GridPtr& grid, const SolveOptions& opt = {}) {
  require(s > 1.0 && s <= 2.0, "s must lie in (1, 2]");
  ModelParams p = ModelParams::make(s, 0.0, 1.0, true);
  const Functional f = make_functional(Problem::fractional, grid, p);
  const Profile init = local_ground_state(s, 1.0, grid);
  GroundState g;
  g.result = petviashvili_solve(f, 1.0, init, opt);
  g.mass_threshold = g.result.mass;
  g.gn_constant = (s + 1.0) / std::pow(g.mass_threshold, s);
  return g;
}

/// Ratio int|u|^{2s+2} / (C_s <u,|D|^s u> <u,u>^s); at most 1 by the sharp inequality.
inline double gn_ratio(const Profile& u, double s, double gn_constant) {
  const RVec sym = sample_symbol(u.grid(), [s](double xi) { return std::pow(std::abs(xi), s); });
  const double p = potential_integral(u, s);
  return p / (gn_constant * quadratic_form_sampled(u, sym) * std::pow(mass(u), s));
}

// ---- continuation ---------------------------------------------------------------

enum class Seed { local_profile, gaussian };

struct ContinuationEntry {
  double N;
  SolveResult result;
};

struct ContinuationPath {
  double s = 1.5;
  std::vector<ContinuationEntry> entries;
  bool descending = true;
};

/// Partial path plus the mass at which a solve failed.
class ContinuationError : public std::runtime_error {
 public:
  ContinuationError(ContinuationPath partial, double failed_mass, const std::string& why)
      : std::runtime_error("continuation failed at N = " + std::to_string(failed_mass) + ": " + why),
        partial(std::move(partial)), failed_mass(failed_mass) {}
  ContinuationPath partial;
  double failed_mass;
};

/// Normalized-problem solve at one mass. The constraint is the fixed mass s0.
inline SolveResult solve_normalized(const ModelParams& p, const GridPtr& grid, const Profile& seed,
                                    Method method, double theta_guess, const SolveOptions& opt = {}) {
  const Functional f = make_functional(Problem::rescaled, grid, p);
  if (method == Method::gradient_flow) return gradient_flow_minimize(f, p.s0, seed, opt);
  return petviashvili_constrained(f, p.s0, theta_guess, seed, opt);
}

/// Solves the normalized problem along n_list in the given order, seeding each solve
/// with the previous profile.
inline ContinuationPath continuation_in_N(double s, const std::vector<double>& n_list, const GridPtr& grid,
                                          Method method = Method::petviashvili,
                                          Seed seed = Seed::local_profile, const SolveOptions& opt = {}) {
  require(!n_list.empty(), "mass list must not be empty");
  const bool desc = n_list.size() < 2 || n_list.front() > n_list.back();
  for (std::size_t i = 1; i < n_list.size(); ++i) {
    require(desc ? n_list[i] < n_list[i - 1] : n_list[i] > n_list[i - 1], "mass list must be sorted");
  }
  ContinuationPath path;
  path.s = s;
  path.descending = desc;
  ModelParams p0 = ModelParams::make(s, 0.0, n_list.front());
  Profile current = seed == Seed::local_profile
                        ? local_ground_state(s, p0.lambda, grid)
                        : renormalize(Profile::sample(grid, [&](double x) {
                                        const double w = 1.0 / std::sqrt(p0.lambda);
                                        return std::exp(-0.5 * x * x / (w * w));
                                      }),
                                      p0.s0);
  double theta = p0.lambda;
  for (double n : n_list) {
    require(!(n >= p0.mass_threshold), "mass exceeds the ground-state threshold");
    const ModelParams p = ModelParams::make(s, 0.0, n);
    try {
      SolveResult r = solve_normalized(p, grid, current, method, theta, opt);
      if (!r.converged) throw ConvergenceError("residual above tolerance", r.residual);
      current = r.profile;
      theta = r.multiplier;
      path.entries.push_back({n, std::move(r)});
    } catch (const std::exception& e) {
      throw ContinuationError(path, n, e.what());
    }
  }
  return path;
}

}  // namespace fnls
