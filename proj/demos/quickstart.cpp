// Solve one normalized ground state, compare it with its local limit and look at its tail.

#include <cmath>
#include <cstdio>

#include "fnls/asymptotics.hpp"
#include "fnls/kernel.hpp"
#include "fnls/profile_io.hpp"
#include "fnls/renormalization.hpp"
#include "fnls/solvers.hpp"

int main() {
  using namespace fnls;
  const ModelParams p = ModelParams::make(1.5, 0.0, 0.1);
  const auto grid = make_grid(default_length(p.s), 4096);

  // Petviashvili seeded with the closed-form local profile
  const Profile local = local_ground_state(p.s, p.lambda, grid);
  const SolveResult r = solve_normalized(p, grid, local, Method::petviashvili, p.lambda, {});
  const Profile fixed = gauge_fix(r.profile).profile;

  std::printf("s = %.2f  N = %.3f  L = %.0f  M = %zu\n", p.s, p.N, grid->length(), grid->size());
  std::printf("converged %s after %d iterations, residual %.2e\n", r.converged ? "yes" : "no", r.iterations,
              r.residual);
  std::printf("multiplier %.12f, local limit %.12f\n", r.multiplier, p.lambda);
  std::printf("relative L2 distance to the local profile %.3e\n", l2_distance(fixed, local) / l2_norm(local));

  const KernelField k(grid, p, r.multiplier);
  std::printf("dispersion root y/kappa = %.6f i (sqrt(lambda) = %.6f)\n", k.root().y.imag() / p.kappa,
              std::sqrt(p.lambda));

  const TailFit tail = tail_fit(r, p);
  std::printf("tail rate %.6f on [%.1f, %.1f], amplitude %.6f (predicted %.6f)\n", tail.rate, tail.lo, tail.hi,
              tail.amplitude, tail.amplitude_predicted);

  write_profile_csv("quickstart_profile.csv", fixed);
  std::printf("profile written to quickstart_profile.csv\n");
}
