#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "fnls/asymptotics.hpp"
#include "support.hpp"

using namespace fnls;

namespace {

constexpr double kOrder = 1.5;
const std::vector<double> kMasses = {0.2, 0.1, 0.05};

const KernelExpansionReport& expansion(double n) {
  static std::map<double, KernelExpansionReport> memo;
  auto it = memo.find(n);
  if (it != memo.end()) return it->second;
  const ModelParams p = ModelParams::make(kOrder, 0.0, n);
  return memo.emplace(n, kernel_expansion_check(p, fixtures::solved(kOrder, n).multiplier)).first->second;
}

const TailFit& tail(double shift) {
  static std::map<double, TailFit> memo;
  auto it = memo.find(shift);
  if (it != memo.end()) return it->second;
  TailOptions opt;
  opt.shift = shift;
  return memo.emplace(shift, tail_fit(fixtures::solved(kOrder, 0.1), ModelParams::make(kOrder, 0.0, 0.1), opt))
      .first->second;
}

}  // namespace

TEST(KernelExpansion, ExponentialWindowExponentAndFrequency) {
  for (double n : kMasses) {
    const KernelExpansionReport& k = expansion(n);
    EXPECT_LE(k.exp_max_deviation, 0.02) << n;
    EXPECT_NEAR(k.fitted_exponent, kOrder + 1.0, 0.05) << n;
    EXPECT_NEAR(k.frequency / k.frequency_predicted, 1.0, 0.02) << n;
    EXPECT_NEAR(k.crossover_detected / k.crossover_model, 1.0, 0.1) << n;
    EXPECT_GT(k.far_lo, 2.0 * k.exp_hi);
  }
}

TEST(KernelExpansion, EnvelopeScalesWithMass) {
  std::vector<double> env;
  for (double n : kMasses) {
    const KernelExpansionReport& k = expansion(n);
    EXPECT_NEAR(k.envelope_coefficient / k.envelope_predicted, 1.0, 0.02) << n;
    env.push_back(k.envelope_coefficient);
  }
  EXPECT_NEAR(log_log_slope(kMasses, env) / algebraic_mass_exponent(kOrder), 1.0, 0.05);
}

TEST(KernelExpansion, RemainderShrinksWithMassAndDistance) {
  std::vector<std::vector<double>> table;
  for (double n : kMasses) {
    const ModelParams p = ModelParams::make(kOrder, 0.0, n);
    const double theta = fixtures::solved(kOrder, n).multiplier;
    const RootResult root = find_root_f1(Branch::upper, p, theta);
    const double cross = TwoScaleModel(p).crossover(1.0);
    std::vector<double> row;
    for (double f : {0.05, 0.2, 1.0, 2.0, 4.0, 8.0, 16.0}) row.push_back(expansion_remainder(f * cross, p, theta, root));
    // beyond the crossover the algebraic term dominates and the relative remainder decays
    for (std::size_t i = 4; i < row.size(); ++i) EXPECT_LT(row[i], 1.2 * row[i - 1]) << n << " " << i;
    EXPECT_LT(row.back(), row[3]);
    table.push_back(row);
  }
  for (std::size_t j = 0; j < table[0].size(); ++j) {
    for (std::size_t i = 1; i < table.size(); ++i) EXPECT_LT(table[i][j], 1.2 * table[i - 1][j]) << i << " " << j;
  }
  EXPECT_LT(*std::max_element(table.back().begin(), table.back().end()),
            *std::max_element(table.front().begin(), table.front().end()));
}

TEST(ProfileTail, RateAndAmplitude) {
  const TailFit& t = tail(0.0);
  EXPECT_NEAR(t.rate / t.rate_predicted, 1.0, 0.02);
  EXPECT_NEAR(t.amplitude / t.amplitude_predicted, 1.0, 0.05);
  EXPECT_LE(t.fit_residual, 0.1);
  EXPECT_TRUE(t.window_ok);
  // the unnormalized convolution overstates the amplitude by sqrt(2 pi)
  EXPECT_NEAR(t.amplitude_literal / t.amplitude_predicted, kSqrt2Pi, 1e-12);
}

TEST(ProfileTail, FitIsWindowRobust) {
  const TailFit& mid = tail(0.0);
  for (double shift : {-0.25, 0.25}) {
    const TailFit& t = tail(shift);
    EXPECT_NEAR(t.rate / mid.rate, 1.0, 0.01) << shift;
    EXPECT_NEAR(t.amplitude / mid.amplitude, 1.0, 0.01) << shift;
  }
}

TEST(ProfileTail, AlgebraicFarFieldFarBelowLiteralPrediction) {
  const TailFit& t = tail(0.0);
  ASSERT_FALSE(t.far_x.empty());
  EXPECT_LE(t.far_max_ratio, 1e-3);
  for (double v : t.far_literal) EXPECT_GT(v, 0.0);
}

TEST(ProfileTail, LocalTailIntegralMatchesClosedForm) {
  // R(x) ~ ((s+1) lambda)^{1/(2s)} 2^{1/s} e^{-sqrt(lambda) x} and also (2 sqrt(lambda))^{-1} int e^{sqrt(lambda) y} R^{2s+1}
  for (double s : {1.2, 1.5, 1.8}) {
    const double lambda = ModelParams::make(s, 0.0, 0.1).lambda;
    EXPECT_NEAR(local_tail_integral(s, lambda) / (2.0 * std::sqrt(lambda)) / local_decay_constant(s, lambda), 1.0, 1e-10);
  }
}

TEST(DecayBound, UniformInMass) {
  std::vector<double> cs;
  for (double n : kMasses) {
    const ModelParams p = ModelParams::make(kOrder, 0.0, n);
    const SolveResult& r = fixtures::solved(kOrder, n);
    const DecayBoundReport db = decay_bound_check(r.profile, p);
    EXPECT_GT(db.samples, r.profile.size() / 3);
    const double at0 = std::abs(gauge_fix(r.profile).profile[r.profile.size() / 2]);
    EXPECT_LE(at0, db.constant * (1.0 + std::pow(n, algebraic_mass_exponent(kOrder))));
    cs.push_back(db.constant);
  }
  EXPECT_LE(*std::max_element(cs.begin(), cs.end()) / *std::min_element(cs.begin(), cs.end()), 2.0);
}

TEST(DecayBound, LocalProfileConstant) {
  const double s = kOrder;
  const double lambda = ModelParams::make(s, 0.0, 0.1).lambda;
  const double c = local_decay_constant(s, lambda);
  const auto g = make_grid(default_length(s), 4096);
  const Profile r = local_ground_state(s, lambda, g);
  double sharp = 0.0;
  for (std::size_t j = 0; j < g->size(); ++j) {
    const double x = g->nodes()[j];
    const double ratio = std::abs(r[j]) / (c * std::exp(-std::sqrt(lambda) * std::abs(x)));
    EXPECT_LE(ratio, 1.0 + 1e-12) << x;
    sharp = std::max(sharp, ratio);
  }
  EXPECT_GE(sharp, 0.999);
}
