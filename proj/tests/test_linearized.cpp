#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "fnls/linearized.hpp"
#include "fnls/random_fields.hpp"
#include "fnls/renormalization.hpp"
#include "support.hpp"

using namespace fnls;

namespace {

constexpr std::size_t kPoints = 1024;

/// Linearization around the gauge-fixed minimizer on the reduced grid, memoized.
const LinearizedOperator& linearized(double s, double n) {
  static std::map<std::pair<double, double>, LinearizedOperator> memo;
  auto it = memo.find({s, n});
  if (it != memo.end()) return it->second;
  const ModelParams p = ModelParams::make(s, 0.0, n);
  SolveResult r = fixtures::solved(s, n, kPoints);
  EXPECT_TRUE(r.converged);
  r.profile = gauge_fix(r.profile).profile;
  return memo.emplace(std::make_pair(s, n), build_linearized(r, p)).first->second;
}

const LinearizedReport& report(double s, double n) {
  static std::map<std::pair<double, double>, LinearizedReport> memo;
  auto it = memo.find({s, n});
  if (it != memo.end()) return it->second;
  return memo.emplace(std::make_pair(s, n), kernel_diagnostics(linearized(s, n))).first->second;
}

/// Random complex field with its components along `dirs` removed (stacked real coordinates).
Profile orthogonal_field(const LinearizedOperator& op, const std::vector<Profile>& dirs, std::uint64_t seed) {
  const double w = 2.0 / std::sqrt(op.theta());
  const Profile u = random_smooth_field(op.base().grid_ptr(), seed, w);
  Eigen::MatrixXd d(2 * op.points(), static_cast<Eigen::Index>(dirs.size()));
  for (std::size_t i = 0; i < dirs.size(); ++i) d.col(static_cast<Eigen::Index>(i)) = op.stack(dirs[i]);
  const Eigen::MatrixXd q = detail::orthonormal_columns(d);
  Eigen::VectorXd v = op.stack(u);
  v -= q * (q.transpose() * v);
  return op.unstack(v);
}

}  // namespace

TEST(Operator, KernelDirections) {
  const LinearizedOperator& op = linearized(1.5, 0.1);
  const Profile ir = op.phase_direction();
  const Profile dr = op.translation_direction();
  EXPECT_LE(l2_norm(op.apply(ir)), 1e-7 * l2_norm(op.base()));
  EXPECT_LE(l2_norm(op.apply(dr)), 1e-7 * l2_norm(dr));
  // real-linear but not complex-linear: L(i R) != i L(R)
  EXPECT_GT(l2_norm(op.apply(op.base())), 1e-3 * l2_norm(op.base()));
}

TEST(Operator, SymmetricUnderRealPairing) {
  const LinearizedOperator& op = linearized(1.5, 0.1);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Profile f = random_smooth_field(op.base().grid_ptr(), 2 * seed, 3.0);
    const Profile g = random_smooth_field(op.base().grid_ptr(), 2 * seed + 1, 3.0);
    const double a = pairing(op.apply(f), g);
    const double b = pairing(f, op.apply(g));
    EXPECT_LE(std::abs(a - b), 1e-10 * std::max(std::abs(a), l2_norm(op.apply(f)) * l2_norm(g))) << seed;
  }
  const Eigen::MatrixXd& a = op.matrix();
  EXPECT_LE((a - a.transpose()).cwiseAbs().maxCoeff(), 1e-12 * a.cwiseAbs().maxCoeff());
}

TEST(Operator, DenseMatchesMatrixFree) {
  const LinearizedOperator& op = linearized(1.5, 0.1);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Profile f = random_smooth_field(op.base().grid_ptr(), seed, 2.0);
    const Profile a = op.apply(f);
    EXPECT_LE(l2_distance(a, op.apply_dense(f)) / l2_norm(a), 1e-12);
  }
}

TEST(LocalLimit, KernelAndClosedForm) {
  const double s = 1.5;
  const double lambda = ModelParams::make(s, 0.0, 0.1).lambda;
  const LocalLimitOperators ops = local_limit_operators(s, lambda, make_grid(default_length(s), 4096));
  const Profile dr = derivative(ops.R);
  EXPECT_LE(l2_norm(ops.minus(ops.R)), 1e-8 * l2_norm(ops.R));
  EXPECT_LE(l2_norm(ops.plus(dr)), 1e-7 * l2_norm(dr));
  const Profile closed = ops.plus_on_profile_closed_form();
  EXPECT_LE(l2_distance(ops.plus(ops.R), closed) / l2_norm(closed), 1e-8);
}

TEST(LocalLimit, SpectrumApproachedAsMassVanishes) {
  const double s = 1.5;
  const double lambda = ModelParams::make(s, 0.0, 0.1).lambda;
  const LocalLimitOperators ops = local_limit_operators(s, lambda, make_grid(default_length(s), kPoints));
  std::vector<double> local;
  for (const Eigen::MatrixXd& m : {ops.plus_matrix(), ops.minus_matrix()}) {
    const Eigen::VectorXd v = symmetric_eigen(m, false).values;
    for (int i = 0; i < 4; ++i) local.push_back(v[i]);
  }
  std::sort(local.begin(), local.end());
  // the negative direction and the two zero modes, plus the first positive level
  double prev = 1e300;
  for (double n : {0.2, 0.1, 0.05}) {
    const LinearizedReport& rep = report(s, n);
    double worst = 0.0;
    for (int i = 0; i < 4; ++i) worst = std::max(worst, std::abs(rep.lowest[i] - local[i]) / lambda);
    EXPECT_LT(worst, prev) << "N = " << n;
    prev = worst;
  }
  EXPECT_LE(prev, 0.05);
  EXPECT_LT(local[0], 0.0);
  EXPECT_NEAR(local[1] / lambda, 0.0, 1e-6);
  EXPECT_NEAR(local[2] / lambda, 0.0, 1e-6);
}

TEST(Diagnostics, TwoDimensionalKernelAtReferencePoint) {
  const LinearizedReport& rep = report(1.5, 0.1);
  EXPECT_EQ(rep.near_zero, 2);
  EXPECT_EQ(rep.negative, 1);
  EXPECT_GE(rep.subspace_cosine, 0.999);
  EXPECT_GE(rep.phase_correlation, 0.999);
  EXPECT_GE(rep.translation_correlation, 0.999);
  EXPECT_GT(rep.gap, 1e3 * std::max(std::abs(rep.kernel_values[0]), std::abs(rep.kernel_values[1])));
  EXPECT_GT(rep.coercivity, 0.0);
}

TEST(Diagnostics, KernelDimensionAcrossOrders) {
  for (double s : {1.2, 1.8}) {
    const LinearizedReport& rep = report(s, 0.2);
    EXPECT_EQ(rep.near_zero, 2) << "s = " << s;
    EXPECT_GE(rep.subspace_cosine, 0.999) << "s = " << s;
  }
}

TEST(Diagnostics, PotentialPerturbationShiftsKernelToFirstOrder) {
  const LinearizedOperator& op = linearized(1.5, 0.1);
  const LinearizedReport& rep = report(1.5, 0.1);
  const SymmetricEigen base = eigenpairs_near(op.matrix(), -1e-3 * rep.gap, 2);
  const Profile bump = random_real_field(op.base().grid_ptr(), 77, 3.0);
  double peak = 0.0;
  for (const auto& z : bump.values()) peak = std::max(peak, std::abs(z));
  RVec potential(op.points());
  for (std::size_t j = 0; j < potential.size(); ++j) potential[j] = 1e-3 * bump[j].real() / peak;
  const LinearizedOperator moved = op.perturbed(potential);
  EXPECT_LE(l2_distance(moved.apply(op.base()), moved.apply_dense(op.base())) / l2_norm(op.base()), 1e-12);

  // degenerate first-order oracle: eigenvalues of V^T dA V on the kernel pair
  const std::size_t m = op.points();
  Eigen::VectorXd diag(2 * m);
  for (std::size_t j = 0; j < m; ++j) diag[j] = diag[m + j] = potential[j];
  const Eigen::MatrixXd small = base.vectors.transpose() * diag.asDiagonal() * base.vectors;
  Eigen::Vector2d first = symmetric_eigen(small, false).values;
  Eigen::Vector2d before(base.values[0], base.values[1]);
  std::sort(before.data(), before.data() + 2);
  const SymmetricEigen after = eigenpairs_near(moved.matrix(), -1e-3 * rep.gap, 2);
  Eigen::Vector2d shifted(after.values[0], after.values[1]);
  std::sort(shifted.data(), shifted.data() + 2);
  for (int i = 0; i < 2; ++i) {
    const double shift = shifted[i] - before[i];
    EXPECT_LE(std::abs(shift), 1e-3);
    EXPECT_NEAR(shift, first[i], 1e-2 * 1e-3) << i;
  }
}

TEST(Coercivity, PositiveOnComplementOfSymmetryDirections) {
  const LinearizedOperator& op = linearized(1.5, 0.1);
  const std::vector<Profile> dirs = {op.base(), op.phase_direction(), op.translation_direction()};
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const Profile f = orthogonal_field(op, dirs, 100 + seed);
    const double form = pairing(op.apply(f), f);
    EXPECT_GT(form, 0.0) << seed;
    EXPECT_GE(form / mass(f), report(1.5, 0.1).coercivity * (1.0 - 1e-9)) << seed;
  }
}

TEST(ConstrainedSolve, RoundTripAndKernelRightHandSide) {
  const LinearizedOperator& op = linearized(1.5, 0.1);
  const std::vector<Profile> kern = {op.phase_direction(), op.translation_direction()};
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const Profile g = orthogonal_field(op, kern, seed);
    const ConstrainedSolution sol = constrained_solve(op, op.apply(g));
    EXPECT_LE(l2_distance(sol.solution, g) / l2_norm(g), 1e-8) << seed;
    EXPECT_LE(sol.constraint_error, 1e-10);
    // <Lg, iR> = <g, L iR> is set by the residual of the solve
    EXPECT_LE(sol.removed_fraction, 1e-8);
  }
  const ConstrainedSolution pure = constrained_solve(op, op.phase_direction());
  EXPECT_NEAR(pure.removed_fraction, 1.0, 1e-12);
  EXPECT_LE(l2_norm(pure.solution), 1e-8 * l2_norm(op.base()));
}

TEST(ConstrainedSolve, StabilityConstantUniformInMass) {
  std::vector<double> ratios;
  for (double n : {0.2, 0.1, 0.05}) {
    const LinearizedOperator& op = linearized(1.5, n);
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const Profile f = random_smooth_field(op.base().grid_ptr(), 500 + seed, 1.0 / std::sqrt(op.theta()));
      worst = std::max(worst, constrained_solve(op, f).stability_ratio);
    }
    ratios.push_back(worst);
  }
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  EXPECT_LE(*hi / *lo, 2.0);
}
