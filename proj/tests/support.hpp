#pragma once

#include <map>
#include <tuple>

#include "fnls/params.hpp"
#include "fnls/solvers.hpp"

namespace fnls::fixtures {

/// Normalized-problem solve on the default length, memoized per process.
inline const SolveResult& solved(double s, double n, std::size_t points = 4096, double tol = 1e-10,
                                 Method method = Method::petviashvili) {
  static std::map<std::tuple<double, double, std::size_t, double, int>, SolveResult> memo;
  const auto key = std::make_tuple(s, n, points, tol, static_cast<int>(method));
  auto it = memo.find(key);
  if (it != memo.end()) return it->second;
  const ModelParams p = ModelParams::make(s, 0.0, n);
  const auto grid = make_grid(default_length(s), points);
  SolveOptions opt;
  opt.tol = tol;
  SolveResult r = solve_normalized(p, grid, local_ground_state(s, p.lambda, grid), method, p.lambda, opt);
  return memo.emplace(key, std::move(r)).first->second;
}

inline double max_abs_diff(const Profile& a, const Profile& b) {
  double m = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a[j] - b[j]));
  return m;
}

}  // namespace fnls::fixtures
