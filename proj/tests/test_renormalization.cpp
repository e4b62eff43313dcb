#include <gtest/gtest.h>

#include <cmath>

#include "fnls/random_fields.hpp"
#include "fnls/renormalization.hpp"
#include "support.hpp"

using namespace fnls;
using fixtures::max_abs_diff;

namespace {

// Random profile on a length in 2 pi Z, so the modulation stays on the frequency lattice.
Profile lattice_field(std::uint64_t seed, double width = 1.5) {
  return random_smooth_field(make_grid(2.0 * kPi * 8.0, 512), seed, width, 4);
}

/// Normalized minimizer solved on a length whose reduced grid lies in 2 pi Z.
const SolveResult& lattice_minimizer(const ModelParams& p) {
  static std::map<double, SolveResult> memo;
  auto it = memo.find(p.N);
  if (it != memo.end()) return it->second;
  auto g = make_grid(lattice_length(default_length(p.s), p), 4096);
  SolveResult r = solve_normalized(p, g, local_ground_state(p.s, p.lambda, g), Method::petviashvili, p.lambda);
  return memo.emplace(p.N, std::move(r)).first->second;
}

double wrap(double a) { return std::remainder(a, 2.0 * kPi); }

}  // namespace

TEST(Multipliers, WorkedExample) {
  const ModelParams p = ModelParams::make(1.5, 0.75, 0.1);
  EXPECT_NEAR(p.xi_star, 1.0, 1e-15);
  const MultiplierTriple t = convert_multipliers(MultiplierKind::theta, 2.0, p);
  EXPECT_NEAR(t.eta, 0.75, 1e-14);
  EXPECT_NEAR(t.gamma, 1.25, 1e-14);
  EXPECT_NEAR(theta_from_gamma(1.25, p), 2.0, 1e-14);
}

TEST(Multipliers, RoundTripsAndLimit) {
  for (double beta : {0.25, 0.75, 1.0, 3.0}) {
    const ModelParams p = ModelParams::make(1.5, beta, 0.1);
    const double xs = std::pow(p.xi_star, p.s);
    for (double theta : {0.05, p.lambda, 2.0}) {
      const MultiplierTriple t = convert_multipliers(MultiplierKind::theta, theta, p);
      EXPECT_NEAR(t.eta / (0.5 * p.s * (p.s - 1.0) * theta), 1.0, 1e-12);
      EXPECT_NEAR(t.gamma / (xs * (t.eta + p.s - 1.0)), 1.0, 1e-12);
      EXPECT_NEAR(theta_from_gamma(t.gamma, p) / theta, 1.0, 1e-12);
      const MultiplierTriple back = convert_multipliers(MultiplierKind::gamma, t.gamma, p);
      EXPECT_NEAR(back.theta / theta, 1.0, 1e-12);
      EXPECT_NEAR(convert_multipliers(MultiplierKind::eta, t.eta, p).gamma / t.gamma, 1.0, 1e-12);
    }
    const MultiplierTriple lim = convert_multipliers(MultiplierKind::theta, p.lambda, p);
    EXPECT_NEAR(lim.gamma / (xs * (0.5 * p.s * (p.s - 1.0) * p.lambda + p.s - 1.0)), 1.0, 1e-12);
  }
  EXPECT_THROW(convert_multipliers(MultiplierKind::gamma, 1.0, ModelParams::make(1.5, 0.0, 0.1)), DomainError);
}

TEST(Modulation, PreservesMassAndInverts) {
  for (double beta : {0.75, 1.0}) {
    const ModelParams p = ModelParams::make(1.5, beta, 0.1);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const Profile s = lattice_field(seed);
      const Profile q = tau_beta(s, p);
      EXPECT_NEAR(mass(q) / mass(s), 1.0, 1e-12);
      const Profile back = tau_beta_inverse(q, p, s.size());
      EXPECT_LE(l2_distance(back, s) / l2_norm(s), 1e-12);
    }
  }
}

TEST(Modulation, PointwiseFormula) {
  // (xi*)^{1/2} e^{i xi* x} S(xi* x) at the output nodes
  const ModelParams p = ModelParams::make(1.5, 1.0, 0.1);
  const Profile s = lattice_field(3);
  const Profile q = tau_beta(s, p);
  double worst = 0.0;
  for (std::size_t j = 0; j < q.size(); j += 97) {
    const double x = q.grid().nodes()[j];
    const cplx expect = std::sqrt(p.xi_star) * std::polar(1.0, p.xi_star * x) * interpolate(s, p.xi_star * x);
    worst = std::max(worst, std::abs(q[j] - expect));
  }
  EXPECT_LE(worst, 1e-11);
}

TEST(Modulation, RejectsOffLatticeLength) {
  const ModelParams p = ModelParams::make(1.5, 0.75, 0.1);
  const Profile u = random_smooth_field(make_grid(50.0, 256), 1, 1.0);
  EXPECT_THROW(tau_beta(u, p), DomainError);
  EXPECT_THROW(tau_beta(lattice_field(1), ModelParams::make(1.5, 0.0, 0.1)), DomainError);
}

TEST(Modulation, EnergyIdentityOnRandomFields) {
  for (double beta : {0.75, 1.0}) {
    const ModelParams p = ModelParams::make(1.5, beta, 0.1);
    const double m_star = symbol_mbeta(p.xi_star, p);
    EXPECT_NEAR(m_star, -std::pow(p.xi_star, p.s) * (p.s - 1.0), 1e-12);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const Profile s = lattice_field(seed, 0.8 + 0.1 * static_cast<double>(seed % 7));
      const double lhs = traveling_energy(tau_beta(s, p), p);
      const double rhs = std::pow(p.xi_star, p.s) * reduced_energy(s, p) + 0.5 * m_star * mass(s);
      EXPECT_NEAR(lhs / rhs, 1.0, 1e-8) << "beta " << beta << " seed " << seed;
    }
  }
}

TEST(Modulation, EnergyIdentityOnMinimizer) {
  const ModelParams p = ModelParams::make(1.5, 0.75, 0.1);
  const SolveResult& r = lattice_minimizer(p);
  ASSERT_TRUE(r.converged);
  const Profile s = scale_R_to_S(r.profile, p);
  EXPECT_NEAR(mass(s) / p.N, 1.0, 1e-10);
  const double lhs = traveling_energy(tau_beta(s, p), p);
  const double rhs = std::pow(p.xi_star, p.s) * reduced_energy(s, p) + 0.5 * symbol_mbeta(p.xi_star, p) * p.N;
  EXPECT_NEAR(lhs / rhs, 1.0, 1e-8);
}

TEST(MassScaling, MassEnergyAndRoundTrip) {
  const ModelParams p = ModelParams::make(1.5, 0.0, 0.2);
  auto g = make_grid(2.0 * kPi * 16.0, 1024);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Profile s = renormalize(random_smooth_field(g, seed, 2.0), p.N);
    const Profile r = scale_S_to_R(s, p);
    EXPECT_NEAR(mass(r) / p.s0, 1.0, 1e-12);
    EXPECT_LE(l2_distance(scale_R_to_S(r, p), s) / l2_norm(s), 1e-12);
    EXPECT_LE(l2_distance(scale_S_to_R(scale_R_to_S(r, p), p), r) / l2_norm(r), 1e-12);
    const double predicted = std::pow(p.s0, p.s + 1.0) * std::pow(p.N, -(2.0 + p.s) / (2.0 - p.s)) * reduced_energy(s, p);
    EXPECT_NEAR(rescaled_energy(r, p) / predicted, 1.0, 1e-8);
  }
}

TEST(FullMap, CompositeMatchesDirectAndRecoversMinimizer) {
  const ModelParams p = ModelParams::make(1.5, 0.75, 0.1);
  const SolveResult& r = lattice_minimizer(p);
  const Profile q = tau_beta(scale_R_to_S(r.profile, p), p);
  const Profile a = full_map_Q_to_R(q, p, r.profile.size());
  const Profile b = full_map_direct(q, p, r.profile.size());
  EXPECT_LE(l2_distance(a, b) / l2_norm(a), 1e-10);
  EXPECT_NEAR(mass(a) / p.s0, 1.0, 1e-10);
  EXPECT_LE(l2_distance(a, r.profile) / l2_norm(r.profile), 1e-12);
  const Profile R = local_ground_state(p.s, p.lambda, a.grid_ptr());
  EXPECT_LE(l2_distance(gauge_fix(a).profile, R) / l2_norm(R), 0.1);
}

TEST(Gauge, RecoversSymmetryAndIsInvariant) {
  const Profile base = gauge_fix(fixtures::solved(1.5, 0.1).profile).profile;
  for (auto [y, phi] : {std::pair{3.7, 0.4}, {-12.25, 2.9}, {0.01, -1.3}, {40.0, 3.1}}) {
    const GaugeResult g = gauge_fix(apply_symmetry(base, y, phi));
    EXPECT_NEAR(g.shift, y, 1e-9);
    EXPECT_NEAR(wrap(g.phase - phi), 0.0, 1e-10);
    EXPECT_LE(max_abs_diff(g.profile, base), 1e-10);
  }
  const GaugeResult again = gauge_fix(base);
  EXPECT_NEAR(again.shift, 0.0, 1e-12);
  EXPECT_NEAR(again.phase, 0.0, 1e-12);
  EXPECT_LE(max_abs_diff(again.profile, base), 1e-12);
  EXPECT_THROW(gauge_fix(Profile::zeros(base.grid_ptr())), DomainError);
}
