#pragma once

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fnls/asymptotics.hpp"
#include "fnls/errors.hpp"
#include "fnls/kernel.hpp"
#include "fnls/linearized.hpp"
#include "fnls/params.hpp"
#include "fnls/profile_io.hpp"
#include "fnls/random_fields.hpp"
#include "fnls/renormalization.hpp"
#include "fnls/solvers.hpp"

namespace fnls {

/// Invalid run configuration (exit status 2).
class ConfigError : public DomainError {
 public:
  using DomainError::DomainError;
};

enum class Command { solve, sweep, verify_th2, verify_th3, verify_th4, linearize, kernel, gn_constant };

inline const std::vector<std::pair<std::string, Command>>& command_names() {
  static const std::vector<std::pair<std::string, Command>> names = {
      {"solve", Command::solve},         {"sweep", Command::sweep},         {"verify-th2", Command::verify_th2},
      {"verify-th3", Command::verify_th3}, {"verify-th4", Command::verify_th4}, {"linearize", Command::linearize},
      {"kernel", Command::kernel},       {"gn-constant", Command::gn_constant}};
  return names;
}

inline std::string command_name(Command c) {
  for (const auto& [n, v] : command_names())
    if (v == c) return n;
  return "?";
}

inline Command parse_command(const std::string& name) {
  for (const auto& [n, v] : command_names())
    if (n == name) return v;
  throw ConfigError("unknown command '" + name + "'");
}

struct RunConfig {
  Command command = Command::solve;
  std::vector<double> s_list{1.5};
  std::vector<double> n_list{0.1};
  std::vector<double> beta_list{0.0};
  double length = 0.0;             ///< 0 selects the default length for each s
  std::size_t points = 4096;
  std::size_t linear_points = 1024;
  double tol = 1e-10;
  std::string method = "petviashvili";
  int trials = 5;                  ///< random initializations for verify-th3
  std::uint64_t seed = 1;
  std::string cache_dir;
  std::string out_dir = "fnls_out";
  std::string format = "both";     ///< csv, json or both
  int workers = 1;

  /// Everything that determines the record (output location and parallelism excluded).
  nlohmann::ordered_json to_json() const {
    return {{"command", command_name(command)}, {"s", s_list},       {"N", n_list},
            {"beta", beta_list},                {"L", length},       {"M", points},
            {"linear_M", linear_points},        {"tol", tol},        {"method", method},
            {"trials", trials},                 {"seed", seed},      {"version", FNLS_VERSION}};
  }
  std::string hash() const { return hex64(fnv1a(to_json().dump())); }
};

inline Method parse_method(const std::string& m) {
  if (m == "petviashvili") return Method::petviashvili;
  if (m == "gradient-flow") return Method::gradient_flow;
  throw ConfigError("unknown method '" + m + "'");
}

/// Mass of the fractional ground state on a default grid; N must stay below it.
inline double mass_threshold(double s) {
  auto grid = make_grid(s < 2.0 ? 256.0 : 64.0, 4096);
  return fractional_ground_state(s, grid).mass_threshold;
}

inline void validate(const RunConfig& c) {
  auto nonempty = [](const std::vector<double>& v, const char* what) {
    if (v.empty()) throw ConfigError(std::string(what) + " list must not be empty");
  };
  nonempty(c.s_list, "s");
  nonempty(c.n_list, "N");
  nonempty(c.beta_list, "beta");
  const bool validation = c.command == Command::gn_constant;
  for (double s : c.s_list) {
    if (!(s > 1.0 && (s < 2.0 || (validation && s == 2.0))))
      throw ConfigError("s = " + exact(s) + " is outside (1, 2)" + (validation ? " and is not the s = 2 check" : ""));
  }
  for (double n : c.n_list)
    if (!(n > 0.0)) throw ConfigError("masses must be positive");
  for (double b : c.beta_list)
    if (!(b >= 0.0)) throw ConfigError("beta must be nonnegative");
  if (!(c.length >= 0.0)) throw ConfigError("grid length must be nonnegative (0 selects the default)");
  if (c.points < 16 || (c.points & (c.points - 1)) != 0) throw ConfigError("M must be a power of two >= 16");
  if (c.linear_points < 16 || (c.linear_points & (c.linear_points - 1)) != 0)
    throw ConfigError("linear_M must be a power of two >= 16");
  if (!(c.tol > 0.0)) throw ConfigError("tolerance must be positive");
  parse_method(c.method);
  if (c.trials < 2) throw ConfigError("verify-th3 needs at least two trials");
  if (c.workers < 1) throw ConfigError("workers must be at least 1");
  if (c.format != "csv" && c.format != "json" && c.format != "both") throw ConfigError("format must be csv, json or both");
}

// ---- record ------------------------------------------------------------------------

struct Check {
  std::string name;
  double measured = 0.0;
  double threshold = 0.0;
  std::string relation;  ///< "<=", ">=", "<", ">" or "=="
  bool pass = false;
};

inline Check make_check(std::string name, double measured, const std::string& relation, double threshold) {
  bool ok = false;
  if (relation == "<=") ok = measured <= threshold;
  else if (relation == "<") ok = measured < threshold;
  else if (relation == ">=") ok = measured >= threshold;
  else if (relation == ">") ok = measured > threshold;
  else if (relation == "==") ok = measured == threshold;
  return {std::move(name), measured, threshold, relation, ok};
}

struct PointRecord {
  std::string label;
  double s = 0.0, N = 0.0, beta = 0.0;
  double theta = std::numeric_limits<double>::quiet_NaN();
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double residual = std::numeric_limits<double>::quiet_NaN();
  double energy = std::numeric_limits<double>::quiet_NaN();
  double mass = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  std::vector<std::pair<std::string, double>> values;
  std::vector<Check> checks;
  std::string error;
  bool solver_failure = false;
  std::optional<Profile> profile;  ///< plot data, not part of the record
  double seconds = 0.0;            ///< timing, kept out of the record

  void value(const std::string& name, double v) { values.emplace_back(name, v); }
  void check(const std::string& name, double measured, const std::string& rel, double threshold) {
    checks.push_back(make_check(name, measured, rel, threshold));
  }
  void take(const SolveResult& r) {
    theta = r.multiplier;
    residual = r.residual;
    energy = r.energy;
    mass = r.mass;
    iterations = r.iterations;
  }
  bool passed() const {
    return error.empty() && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }
};

struct RunRecord {
  RunConfig config;
  std::vector<PointRecord> points;
  std::vector<Check> checks;  ///< properties across points
  double seconds = 0.0;
};

/// 0 all pass, 1 a check failed, 3 a solver failed (2 is reserved for configuration errors).
inline int exit_status(const RunRecord& r) {
  bool fail = false;
  for (const auto& p : r.points) {
    if (p.solver_failure) return 3;
    if (!p.passed()) fail = true;
  }
  for (const auto& c : r.checks)
    if (!c.pass) fail = true;
  return fail ? 1 : 0;
}

// ---- worker pool -------------------------------------------------------------------

/// Runs fn(i) for i in [0, n) on up to `workers` threads; results are placed by index, so the
/// outcome does not depend on scheduling.
template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  const std::size_t w = std::min<std::size_t>(std::max(1, workers), n);
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < w; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

// ---- pipelines ---------------------------------------------------------------------

namespace detail {

inline double grid_length(const RunConfig& c, double s) { return c.length > 0.0 ? c.length : default_length(s); }

/// Normalized-problem solve through the cache.
inline SolveResult cached_solve(const RunConfig& c, const ProfileCache& cache, const ModelParams& p,
                                const GridPtr& grid, Method method, const Profile& seed, double theta_guess,
                                const std::string& variant) {
  CacheKey key{p.s, p.N, grid->length(), grid->size(), method_name(method), c.tol, variant};
  if (auto hit = cache.load(key)) return *hit;
  SolveOptions opt;
  opt.tol = c.tol;
  SolveResult r = solve_normalized(p, grid, seed, method, theta_guess, opt);
  if (!r.converged) throw ConvergenceError("solve did not reach the tolerance", r.residual);
  cache.store(key, r, {p.s, p.N, p.beta, r.multiplier});
  return r;
}

inline SolveResult default_solve(const RunConfig& c, const ProfileCache& cache, const ModelParams& p,
                                 const GridPtr& grid, Method method) {
  return cached_solve(c, cache, p, grid, method, local_ground_state(p.s, p.lambda, grid), p.lambda, "seed=local");
}

inline double relative_h1(const Profile& a, const Profile& b) {
  return sobolev_norm(a - b, 1.0) / sobolev_norm(b, 1.0);
}

inline void guard(PointRecord& pt, const std::function<void()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body();
  } catch (const ConvergenceError& e) {
    pt.error = e.what();
    pt.solver_failure = true;
  } catch (const ContinuationError& e) {
    pt.error = e.what();
    pt.solver_failure = true;
  } catch (const std::exception& e) {
    pt.error = e.what();
  }
  pt.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline PointRecord make_point(const std::string& label, double s, double n, double beta) {
  PointRecord pt;
  pt.label = label;
  pt.s = s;
  pt.N = n;
  pt.beta = beta;
  if (s < 2.0) pt.lambda = ModelParams::make(s, 0.0, 1.0).lambda;
  return pt;
}

inline void run_solve(const RunConfig& c, const ProfileCache& cache, RunRecord& rec, bool both_methods) {
  struct Item {
    double s, n, beta;
  };
  std::vector<Item> items;
  for (double s : c.s_list)
    for (double n : c.n_list)
      for (double b : c.beta_list) items.push_back({s, n, b});
  rec.points.resize(items.size());
  parallel_for(items.size(), c.workers, [&](std::size_t i) {
    const Item it = items[i];
    PointRecord& pt = rec.points[i] = make_point("solve", it.s, it.n, it.beta);
    guard(pt, [&] {
      const ModelParams p = ModelParams::make(it.s, it.beta, it.n);
      const auto grid = make_grid(grid_length(c, it.s), c.points);
      const Method m = parse_method(c.method);
      const SolveResult r = default_solve(c, cache, p, grid, m);
      pt.take(r);
      pt.value("kappa", p.kappa);
      pt.value("s0", p.s0);
      pt.value("theta_minus_lambda", r.multiplier - p.lambda);
      pt.value("distance_to_local", l2_distance(gauge_fix(r.profile).profile, local_ground_state(p.s, p.lambda, grid)) /
                                        l2_norm(local_ground_state(p.s, p.lambda, grid)));
      if (p.beta > 0.0) {
        const MultiplierTriple t = convert_multipliers(MultiplierKind::theta, r.multiplier, p);
        pt.value("xi_star", p.xi_star);
        pt.value("eta", t.eta);
        pt.value("gamma", t.gamma);
      }
      pt.check("residual", r.residual, "<=", 1e-8);
      pt.check("mass_error", std::abs(r.mass / p.s0 - 1.0), "<=", 1e-10);
      if (both_methods) {
        const Method other = m == Method::petviashvili ? Method::gradient_flow : Method::petviashvili;
        const SolveResult r2 = default_solve(c, cache, p, grid, other);
        const double d = l2_distance(gauge_fix(r.profile).profile, gauge_fix(r2.profile).profile);
        pt.value("other_method_theta", r2.multiplier);
        pt.check("method_agreement", d, "<=", 1e-6);
      }
      pt.profile = gauge_fix(r.profile).profile;
    });
  });
}

inline void run_th2(const RunConfig& c, const ProfileCache& cache, RunRecord& rec) {
  std::vector<double> ns = c.n_list;
  std::sort(ns.begin(), ns.end(), std::greater<>());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  const std::size_t per = ns.size();
  rec.points.resize(c.s_list.size() * per);
  std::vector<std::vector<Check>> path_checks(c.s_list.size());
  parallel_for(c.s_list.size(), c.workers, [&](std::size_t si) {
    const double s = c.s_list[si];
    const auto grid = make_grid(grid_length(c, s), c.points);
    const Method m = parse_method(c.method);
    const ModelParams p0 = ModelParams::make(s, 0.0, ns.front());
    const Profile R = local_ground_state(s, p0.lambda, grid);
    Profile seed = R;
    double theta = p0.lambda;
    std::string variant = "path";
    bool broken = false;
    for (std::size_t k = 0; k < per; ++k) {
      PointRecord& pt = rec.points[si * per + k] = make_point("verify-th2", s, ns[k], 0.0);
      variant += ":" + exact(ns[k]);
      if (broken) {
        pt.error = "skipped after an earlier failure on this path";
        pt.solver_failure = true;
        continue;
      }
      guard(pt, [&] {
        const ModelParams p = ModelParams::make(s, 0.0, ns[k]);
        const SolveResult r = cached_solve(c, cache, p, grid, m, seed, theta, variant);
        pt.take(r);
        const Profile g = gauge_fix(r.profile).profile;
        pt.value("abs_theta_minus_lambda", std::abs(r.multiplier - p.lambda));
        pt.value("l2_distance", l2_distance(g, R) / l2_norm(R));
        pt.value("h1_distance", relative_h1(g, R));
        pt.check("residual", r.residual, "<=", 1e-8);
        pt.profile = g;
        seed = r.profile;
        theta = r.multiplier;
      });
      if (!pt.error.empty()) broken = true;
    }
    if (broken) return;
    auto val = [&](std::size_t k, const std::string& name) {
      for (const auto& [n, v] : rec.points[si * per + k].values)
        if (n == name) return v;
      return std::numeric_limits<double>::quiet_NaN();
    };
    for (std::size_t k = 1; k < per; ++k) {
      for (const char* name : {"abs_theta_minus_lambda", "l2_distance", "h1_distance"}) {
        rec.points[si * per + k].check(std::string(name) + "_decreasing", val(k, name), "<", val(k - 1, name));
      }
    }
    const double lam = p0.lambda;
    path_checks[si].push_back(
        make_check("s=" + exact(s) + ":multiplier_gap_at_smallest_N", val(per - 1, "abs_theta_minus_lambda"), "<=", 2e-2 * lam));
    path_checks[si].push_back(
        make_check("s=" + exact(s) + ":profile_distance_at_smallest_N", val(per - 1, "l2_distance"), "<=", 5e-2));
  });
  for (auto& v : path_checks) rec.checks.insert(rec.checks.end(), v.begin(), v.end());
}

inline void run_th3(const RunConfig& c, const ProfileCache& cache, RunRecord& rec) {
  struct Item {
    double s, n;
  };
  std::vector<Item> items;
  for (double s : c.s_list)
    for (double n : c.n_list) items.push_back({s, n});
  rec.points.resize(items.size());
  parallel_for(items.size(), c.workers, [&](std::size_t i) {
    PointRecord& pt = rec.points[i] = make_point("verify-th3", items[i].s, items[i].n, 0.0);
    guard(pt, [&] {
      const ModelParams p = ModelParams::make(items[i].s, 0.0, items[i].n);
      const auto grid = make_grid(grid_length(c, p.s), c.points);
      const Method m = parse_method(c.method);
      const double width = 2.0 / std::sqrt(p.lambda);
      std::vector<Profile> fixed;
      double worst_res = 0.0;
      for (int t = 0; t < c.trials; ++t) {
        const std::uint64_t seed = c.seed + static_cast<std::uint64_t>(t);
        const Profile init = renormalize(random_smooth_field(grid, seed, width), p.s0);
        const SolveResult r = cached_solve(c, cache, p, grid, m, init, p.lambda, "seed=random:" + std::to_string(seed));
        worst_res = std::max(worst_res, r.residual);
        if (t == 0) pt.take(r);
        fixed.push_back(gauge_fix(r.profile).profile);
      }
      double worst = 0.0;
      for (std::size_t a = 0; a < fixed.size(); ++a)
        for (std::size_t b = a + 1; b < fixed.size(); ++b) worst = std::max(worst, l2_distance(fixed[a], fixed[b]));
      pt.value("trials", c.trials);
      pt.value("max_pairwise_distance", worst);
      pt.check("residual", worst_res, "<=", 1e-8);
      pt.check("pairwise_distance", worst, "<=", 1e-6);
      pt.profile = fixed.front();
    });
  });
}

inline void run_th4(const RunConfig& c, const ProfileCache& cache, RunRecord& rec) {
  struct Item {
    double s, n;
  };
  std::vector<Item> items;
  for (double s : c.s_list)
    for (double n : c.n_list) items.push_back({s, n});
  rec.points.resize(items.size());
  parallel_for(items.size(), c.workers, [&](std::size_t i) {
    PointRecord& pt = rec.points[i] = make_point("verify-th4", items[i].s, items[i].n, 0.0);
    guard(pt, [&] {
      const ModelParams p = ModelParams::make(items[i].s, 0.0, items[i].n);
      const auto grid = make_grid(grid_length(c, p.s), c.points);
      const SolveResult r = default_solve(c, cache, p, grid, parse_method(c.method));
      pt.take(r);
      const KernelExpansionReport k = kernel_expansion_check(p, r.multiplier);
      pt.value("kernel_exp_deviation", k.exp_max_deviation);
      pt.value("kernel_crossover_model", k.crossover_model);
      pt.value("kernel_crossover_detected", k.crossover_detected);
      pt.value("kernel_exponent", k.fitted_exponent);
      pt.value("kernel_envelope", k.envelope_coefficient);
      pt.value("kernel_envelope_predicted", k.envelope_predicted);
      pt.value("kernel_envelope_printed", k.envelope_printed);
      pt.value("kernel_frequency", k.frequency);
      pt.check("kernel_exp_window", k.exp_max_deviation, "<=", 0.02);
      pt.check("kernel_exponent_offset", std::abs(k.fitted_exponent - (p.s + 1.0)), "<=", 0.05);
      pt.check("kernel_frequency_error", std::abs(k.frequency * p.kappa - 1.0), "<=", 0.02);
      const TailFit tf = tail_fit(r, p);
      pt.value("tail_rate", tf.rate);
      pt.value("tail_amplitude", tf.amplitude);
      pt.value("tail_amplitude_predicted", tf.amplitude_predicted);
      pt.value("tail_amplitude_literal", tf.amplitude_literal);
      pt.value("tail_fit_residual", tf.fit_residual);
      pt.value("far_field_ratio", tf.far_max_ratio);
      pt.check("tail_rate_error", std::abs(tf.rate / tf.rate_predicted - 1.0), "<=", 0.02);
      pt.check("tail_amplitude_error", std::abs(tf.amplitude / tf.amplitude_predicted - 1.0), "<=", 0.05);
      pt.check("tail_window", tf.fit_residual, "<=", 0.1);
      const DecayBoundReport db = decay_bound_check(r.profile, p, tf.x, tf.value);
      pt.value("decay_constant", db.constant);
      pt.profile = gauge_fix(r.profile).profile;
    });
  });
  // N-scaling and uniformity across masses, per s
  for (double s : c.s_list) {
    std::vector<double> ns, env, cs;
    for (const auto& pt : rec.points) {
      if (pt.s != s || !pt.error.empty()) continue;
      ns.push_back(pt.N);
      for (const auto& [n, v] : pt.values) {
        if (n == "kernel_envelope") env.push_back(v);
        if (n == "decay_constant") cs.push_back(v);
      }
    }
    if (ns.size() < 2) continue;
    const double predicted = algebraic_mass_exponent(s);
    rec.checks.push_back(make_check("s=" + exact(s) + ":envelope_slope_error",
                                    std::abs(log_log_slope(ns, env) / predicted - 1.0), "<=", 0.05));
    rec.checks.push_back(make_check("s=" + exact(s) + ":decay_constant_spread",
                                    *std::max_element(cs.begin(), cs.end()) / *std::min_element(cs.begin(), cs.end()),
                                    "<=", 2.0));
  }
}

inline void run_linearize(const RunConfig& c, const ProfileCache& cache, RunRecord& rec) {
  struct Item {
    double s, n;
  };
  std::vector<Item> items;
  for (double s : c.s_list)
    for (double n : c.n_list) items.push_back({s, n});
  rec.points.resize(items.size());
  parallel_for(items.size(), c.workers, [&](std::size_t i) {
    PointRecord& pt = rec.points[i] = make_point("linearize", items[i].s, items[i].n, 0.0);
    guard(pt, [&] {
      const ModelParams p = ModelParams::make(items[i].s, 0.0, items[i].n);
      const auto grid = make_grid(grid_length(c, p.s), c.linear_points);
      const SolveResult r = default_solve(c, cache, p, grid, parse_method(c.method));
      pt.take(r);
      const LinearizedOperator op = build_linearized(r, p);
      const LinearizedReport lr = kernel_diagnostics(op);
      for (std::size_t k = 0; k < lr.lowest.size(); ++k) pt.value("eigenvalue_" + std::to_string(k), lr.lowest[k]);
      pt.value("norm_estimate", lr.norm_estimate);
      pt.value("gap", lr.gap);
      pt.value("coercivity", lr.coercivity);
      pt.value("phase_correlation", lr.phase_correlation);
      pt.value("translation_correlation", lr.translation_correlation);
      pt.check("near_zero_count", lr.near_zero, "==", 2.0);
      pt.check("kernel_subspace_cosine", lr.subspace_cosine, ">=", 0.999);
      pt.check("coercivity", lr.coercivity, ">", 0.0);
      // round trip through the bordered solve
      const Profile g = random_smooth_field(grid, c.seed, 2.0 / std::sqrt(p.lambda));
      Eigen::MatrixXd b(2 * grid->size(), 2);
      b.col(0) = op.stack(op.phase_direction());
      b.col(1) = op.stack(op.translation_direction());
      const Eigen::MatrixXd q = detail::orthonormal_columns(b);
      Eigen::VectorXd gv = op.stack(g);
      gv -= q * (q.transpose() * gv);
      const Profile gp = op.unstack(gv);
      const ConstrainedSolution cs = constrained_solve(op, op.apply(gp));
      pt.value("stability_ratio", cs.stability_ratio);
      pt.check("constrained_round_trip", l2_distance(cs.solution, gp) / l2_norm(gp), "<=", 1e-8);
    });
  });
}

inline void run_kernel(const RunConfig& c, const ProfileCache& cache, RunRecord& rec) {
  struct Item {
    double s, n;
  };
  std::vector<Item> items;
  for (double s : c.s_list)
    for (double n : c.n_list) items.push_back({s, n});
  rec.points.resize(items.size());
  parallel_for(items.size(), c.workers, [&](std::size_t i) {
    PointRecord& pt = rec.points[i] = make_point("kernel", items[i].s, items[i].n, 0.0);
    guard(pt, [&] {
      const ModelParams p = ModelParams::make(items[i].s, 0.0, items[i].n);
      const auto grid = make_grid(grid_length(c, p.s), c.points);
      const SolveResult r = default_solve(c, cache, p, grid, parse_method(c.method));
      pt.take(r);
      const KernelField k(grid, p, r.multiplier);
      const RootResult& root = k.root();
      pt.value("kernel_at_zero", k.samples()[grid->size() / 2].real());
      pt.value("root_re", root.y.real());
      pt.value("root_im", root.y.imag());
      pt.value("root_scaled_im", root.y.imag() / p.kappa);
      pt.value("hermitian_defect", k.hermitian_defect());
      pt.check("root_residual", root.residual, "<=", 1e-12 * (1.0 + std::pow(std::abs(root.y), p.s)));
      RVec forward_symbol(grid->size());
      for (std::size_t q = 0; q < forward_symbol.size(); ++q) forward_symbol[q] = 1.0 / k.inverse_symbol()[q];
      const Profile back = k.apply(apply_sampled(r.profile, forward_symbol));
      pt.check("inverse_property", l2_distance(back, r.profile) / l2_norm(r.profile), "<=", 1e-10);
      CVec samples = k.samples();
      pt.profile = Profile(grid, std::move(samples));
    });
  });
}

inline void run_gn(const RunConfig& c, RunRecord& rec) {
  rec.points.resize(c.s_list.size());
  parallel_for(c.s_list.size(), c.workers, [&](std::size_t i) {
    const double s = c.s_list[i];
    PointRecord& pt = rec.points[i] = make_point("gn-constant", s, 0.0, 0.0);
    guard(pt, [&] {
      const auto grid = make_grid(c.length > 0.0 ? c.length : (s < 2.0 ? 256.0 : 64.0), c.points);
      SolveOptions opt;
      opt.tol = c.tol;
      const GroundState g = fractional_ground_state(s, grid, opt);
      pt.take(g.result);
      pt.value("gn_constant", g.gn_constant);
      pt.value("mass_threshold", g.mass_threshold);
      pt.value("gn_ratio_at_ground_state", gn_ratio(g.result.profile, s, g.gn_constant));
      pt.check("residual", g.result.residual, "<=", 1e-8);
      if (s == 2.0) pt.check("quintic_mass_error", std::abs(g.mass_threshold - kPi * std::sqrt(3.0) / 2.0), "<=", 1e-6);
      pt.profile = g.result.profile;
    });
  });
}

}  // namespace detail

/// Executes the configured pipeline. Point failures are recorded and the run continues.
inline RunRecord run(const RunConfig& config) {
  validate(config);
  if (config.command != Command::gn_constant) {
    const double nmax = *std::max_element(config.n_list.begin(), config.n_list.end());
    for (double s : config.s_list) {
      const double thr = mass_threshold(s);
      if (!(nmax < thr))
        throw ConfigError("N = " + exact(nmax) + " is not below the ground-state mass " + exact(thr) + " at s = " + exact(s));
    }
  }
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.config = config;
  const ProfileCache cache(config.cache_dir);
  switch (config.command) {
    case Command::solve: detail::run_solve(config, cache, rec, false); break;
    case Command::sweep: detail::run_solve(config, cache, rec, true); break;
    case Command::verify_th2: detail::run_th2(config, cache, rec); break;
    case Command::verify_th3: detail::run_th3(config, cache, rec); break;
    case Command::verify_th4: detail::run_th4(config, cache, rec); break;
    case Command::linearize: detail::run_linearize(config, cache, rec); break;
    case Command::kernel: detail::run_kernel(config, cache, rec); break;
    case Command::gn_constant: detail::run_gn(config, rec); break;
  }
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

// ---- outputs -----------------------------------------------------------------------

using CsvTable = std::vector<std::vector<std::string>>;

inline std::string csv_cell(std::string v) {
  std::replace(v.begin(), v.end(), ',', ';');
  std::replace(v.begin(), v.end(), '\n', ' ');
  return v;
}

inline std::string emit_csv(const CsvTable& t) {
  std::string out;
  for (const auto& row : t) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += row[i];
    }
    out += '\n';
  }
  return out;
}

/// Splits plain comma-separated text (cells never contain commas or quotes).
inline CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::size_t start = 0;
    for (;;) {
      const std::size_t pos = line.find(',', start);
      row.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    t.push_back(std::move(row));
  }
  return t;
}

inline const std::vector<std::string>& points_header() {
  static const std::vector<std::string> h = {"index", "command", "s",        "N",         "beta",
                                             "theta", "lambda_s", "residual", "energy",    "mass",
                                             "iterations", "checks_passed", "checks_total", "pass", "error"};
  return h;
}

inline CsvTable points_table(const RunRecord& r) {
  CsvTable t{points_header()};
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    const auto& p = r.points[i];
    const auto passed = std::count_if(p.checks.begin(), p.checks.end(), [](const Check& c) { return c.pass; });
    t.push_back({std::to_string(i), p.label, exact(p.s), exact(p.N), exact(p.beta), exact(p.theta), exact(p.lambda),
                 exact(p.residual), exact(p.energy), exact(p.mass), std::to_string(p.iterations),
                 std::to_string(passed), std::to_string(p.checks.size()), p.passed() ? "1" : "0", csv_cell(p.error)});
  }
  return t;
}

inline CsvTable values_table(const RunRecord& r) {
  CsvTable t{{"index", "name", "value"}};
  for (std::size_t i = 0; i < r.points.size(); ++i)
    for (const auto& [n, v] : r.points[i].values) t.push_back({std::to_string(i), n, exact(v)});
  return t;
}

inline CsvTable checks_table(const RunRecord& r) {
  CsvTable t{{"index", "name", "measured", "relation", "threshold", "pass"}};
  auto row = [&](const std::string& idx, const Check& c) {
    t.push_back({idx, csv_cell(c.name), exact(c.measured), c.relation, exact(c.threshold), c.pass ? "1" : "0"});
  };
  for (std::size_t i = 0; i < r.points.size(); ++i)
    for (const auto& c : r.points[i].checks) row(std::to_string(i), c);
  for (const auto& c : r.checks) row("run", c);
  return t;
}

inline nlohmann::ordered_json check_json(const Check& c) {
  return {{"name", c.name}, {"measured", c.measured}, {"relation", c.relation}, {"threshold", c.threshold}, {"pass", c.pass}};
}

inline nlohmann::ordered_json record_json(const RunRecord& r) {
  nlohmann::ordered_json j;
  j["schema"] = "fnls-run-record/1";
  j["config"] = r.config.to_json();
  j["points"] = nlohmann::ordered_json::array();
  for (const auto& p : r.points) {
    nlohmann::ordered_json jp = {{"command", p.label}, {"s", p.s},           {"N", p.N},
                                 {"beta", p.beta},      {"theta", p.theta},   {"lambda_s", p.lambda},
                                 {"residual", p.residual}, {"energy", p.energy}, {"mass", p.mass},
                                 {"iterations", p.iterations}};
    nlohmann::ordered_json vals = nlohmann::ordered_json::object();
    for (const auto& [n, v] : p.values) vals[n] = v;
    jp["values"] = vals;
    jp["checks"] = nlohmann::ordered_json::array();
    for (const auto& c : p.checks) jp["checks"].push_back(check_json(c));
    jp["pass"] = p.passed();
    jp["error"] = p.error;
    j["points"].push_back(jp);
  }
  j["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : r.checks) j["checks"].push_back(check_json(c));
  j["exit_status"] = exit_status(r);
  return j;
}

struct EmittedFiles {
  std::vector<std::string> paths;
  std::string prefix;
};

/// Writes the record under out_dir with names derived from the configuration hash.
/// Timings go to a separate metadata file so that the record itself is reproducible.
inline EmittedFiles emit_outputs(const RunRecord& r) {
  const std::string& dir = r.config.out_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw DomainError("cannot create output directory " + dir);
  EmittedFiles out;
  out.prefix = command_name(r.config.command) + "-" + r.config.hash();
  auto path = [&](const std::string& name) { return (std::filesystem::path(dir) / name).string(); };
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream f(path(name), std::ios::binary);
    if (!f) throw DomainError("cannot write " + path(name));
    f << text;
    if (!f) throw DomainError("failed while writing " + path(name));
    out.paths.push_back(path(name));
  };
  const std::string fmt = r.config.format;
  if (fmt == "csv" || fmt == "both") {
    write(out.prefix + ".csv", emit_csv(points_table(r)));
    write(out.prefix + "_values.csv", emit_csv(values_table(r)));
    write(out.prefix + "_checks.csv", emit_csv(checks_table(r)));
  }
  if (fmt == "json" || fmt == "both") write(out.prefix + ".json", record_json(r).dump(2) + "\n");
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    if (!r.points[i].profile) continue;
    char name[64];
    std::snprintf(name, sizeof name, "_profile_%03zu.csv", i);
    write_profile_csv(path(out.prefix + name), *r.points[i].profile);
    out.paths.push_back(path(out.prefix + name));
  }
  nlohmann::ordered_json meta;
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  meta["finished"] = stamp;
  meta["seconds"] = r.seconds;
  meta["workers"] = r.config.workers;
  meta["cache_dir"] = r.config.cache_dir;
  meta["point_seconds"] = nlohmann::ordered_json::array();
  for (const auto& p : r.points) meta["point_seconds"].push_back(p.seconds);
  write(out.prefix + ".meta.json", meta.dump(2) + "\n");
  return out;
}

}  // namespace fnls
