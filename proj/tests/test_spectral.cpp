#include <gtest/gtest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <filesystem>

#include "fnls/profile_io.hpp"
#include "fnls/random_fields.hpp"
#include "fnls/solvers.hpp"
#include "fnls/spectral.hpp"

using namespace fnls;

TEST(Grid, UnitLatticeOnTwoPi) {
  auto g = make_grid(2.0 * kPi, 16);
  std::vector<double> xi(g->frequencies());
  std::sort(xi.begin(), xi.end());
  for (int k = 0; k < 16; ++k) EXPECT_NEAR(xi[k], k - 8, 1e-14);
}

TEST(Grid, SpacingAndNodes) {
  auto g = make_grid(64.0, 4096);
  EXPECT_DOUBLE_EQ(g->spacing(), 0.015625);
  EXPECT_DOUBLE_EQ(g->nodes().front(), -32.0);
  for (std::size_t j = 1; j < g->size(); ++j) EXPECT_NEAR(g->nodes()[j] - g->nodes()[j - 1], 0.015625, 1e-14);
}

TEST(Grid, RejectsBadSizes) {
  try {
    make_grid(64.0, 4095);
    FAIL() << "expected rejection";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("M must be a power of two"), std::string::npos);
  }
  EXPECT_THROW(make_grid(0.0, 64), DomainError);
  EXPECT_THROW(make_grid(-1.0, 64), DomainError);
  EXPECT_THROW(make_grid(1.0, 8), DomainError);
}

TEST(Transform, RoundTrip) {
  auto g = make_grid(40.0, 1024);
  const Profile u = random_smooth_field(g, 7, 2.0);
  const Profile back = from_spectrum(g, spectrum(u));
  EXPECT_LE(l2_distance(back, u) / l2_norm(u), 1e-12);
}

TEST(Multiplier, IdentityAndEigenfunction) {
  auto g = make_grid(2.0 * kPi, 64);
  const Profile u = random_smooth_field(make_grid(2.0 * kPi, 64), 3, 0.5);
  EXPECT_LE(l2_distance(apply_multiplier(u, [](double) { return 1.0; }), u), 1e-13 * l2_norm(u));
  const Profile e = Profile::sample(g, [](double x) { return std::polar(1.0, x); });
  const Profile d2 = apply_multiplier(e, [](double xi) { return xi * xi; });
  EXPECT_LE(l2_distance(d2, e), 1e-12 * l2_norm(e));
}

TEST(Multiplier, RejectsNonFiniteSymbol) {
  auto g = make_grid(10.0, 64);
  const Profile u = Profile::sample(g, [](double x) { return std::exp(-x * x); });
  EXPECT_THROW(apply_multiplier(u, [](double xi) { return 1.0 / xi; }), DomainError);
}

TEST(Multiplier, Composition) {
  auto g = make_grid(30.0, 512);
  const Profile u = random_smooth_field(g, 11, 1.5);
  auto s1 = [](double xi) { return std::pow(std::abs(xi), 1.5) + 0.3; };
  auto s2 = [](double xi) { return 1.0 / (1.0 + xi * xi); };
  const Profile a = apply_multiplier(apply_multiplier(u, s1), s2);
  const Profile b = apply_multiplier(u, [&](double xi) { return s1(xi) * s2(xi); });
  EXPECT_LE(l2_distance(a, b) / l2_norm(b), 1e-12);
}

// |D|^{3/2} of a Gaussian against adaptive quadrature of the inversion integral
// (2/sqrt(2 pi)) int_0^inf xi^{3/2} e^{-xi^2/2} cos(xi x) d xi. The torus must be long
// because the result decays like |x|^{-5/2}.
TEST(Multiplier, FractionalLaplacianOfGaussian) {
  auto g = make_grid(4096.0, 65536);
  const Profile u = Profile::sample(g, [](double x) { return std::exp(-0.5 * x * x); });
  const Profile d = apply_multiplier(u, [](double xi) { return std::pow(std::abs(xi), 1.5); });
  double worst = 0.0, scale = 0.0;
  for (std::size_t j = 0; j < g->size(); j += 16) {
    const double x = g->nodes()[j];
    if (std::abs(x) > 6.0) continue;
    auto f = [x](double xi) { return std::pow(xi, 1.5) * std::exp(-0.5 * xi * xi) * std::cos(xi * x); };
    const double exact =
        2.0 / kSqrt2Pi * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, 40.0, 15, 1e-14);
    worst = std::max(worst, std::abs(d[j] - exact));
    scale = std::max(scale, std::abs(exact));
    EXPECT_LE(std::abs(d[j].imag()), 1e-12);
  }
  EXPECT_LE(worst / scale, 1e-8);
}

TEST(Norms, ConstantAndSingleMode) {
  auto g = make_grid(1.0, 32);
  const Profile one = Profile::sample(g, [](double) { return 1.0; });
  EXPECT_NEAR(inner(one, one).real(), 1.0, 1e-14);
  auto g2 = make_grid(2.0 * kPi, 64);
  const Profile e = Profile::sample(g2, [](double x) { return std::polar(1.0, x) / std::sqrt(2.0 * kPi); });
  const NormBundle b = norms_and_products(e, e, 1.5);
  EXPECT_NEAR(b.quadratic, 1.0, 1e-12);
}

TEST(Norms, ParsevalAndRealQuadraticForms) {
  auto g = make_grid(50.0, 2048);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Profile u = random_smooth_field(g, seed, 2.0);
    EXPECT_NEAR(spectral_mass(u) / mass(u), 1.0, 1e-12);
    const cplx q = quadratic_form(u, [](double xi) { return std::pow(std::abs(xi), 1.3) - 0.4 * xi; });
    EXPECT_LE(std::abs(q.imag()), 1e-12 * std::abs(q.real()));
  }
}

TEST(Norms, GridMismatchIsRejected) {
  const Profile a = Profile::zeros(make_grid(10.0, 64));
  const Profile b = Profile::zeros(make_grid(12.0, 64));
  EXPECT_THROW(norms_and_products(a, b, 1.5), GridMismatch);
}

// rho0 = (s+1)^{1/s} int sech^{2/s}(s x) dx by adaptive quadrature
TEST(Norms, LocalProfileMassAgainstQuadrature) {
  for (double s : {1.2, 1.5, 1.8}) {
    auto f = [s](double x) {
      const double e = std::exp(-s * x);
      return std::pow(2.0 * e / (1.0 + e * e), 2.0 / s);
    };
    boost::math::quadrature::exp_sinh<double> integrator;
    const double oracle = 2.0 * std::pow(s + 1.0, 1.0 / s) * integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity());
    auto g = make_grid(64.0, 4096);
    EXPECT_NEAR(mass(local_ground_state(s, 1.0, g)) / oracle, 1.0, 1e-8) << "s = " << s;
    EXPECT_NEAR(local_unit_mass(s) / oracle, 1.0, 1e-12) << "s = " << s;
  }
}

TEST(Nonlinearity, GradientOfPotential) {
  // d/dt int |u + t v|^{2s+2} / (2s+2) at t = 0 equals Re <|u|^{2s} u, v>
  auto g = make_grid(30.0, 512);
  const Profile u = random_smooth_field(g, 4, 2.0);
  const Profile v = random_smooth_field(g, 5, 2.0);
  const double s = 1.5, t = 1e-5;
  const double fd = (potential_integral(axpy(u, t, v), s) - potential_integral(axpy(u, -t, v), s)) /
                    (2.0 * t * (2.0 * s + 2.0));
  EXPECT_NEAR(fd / pairing(nonlinearity(u, s), v), 1.0, 1e-7);
  const Profile z = Profile::zeros(g);
  EXPECT_EQ(l2_norm(nonlinearity(z, s)), 0.0);
}

TEST(ProfileFile, BinaryRoundTrip) {
  auto g = make_grid(25.0, 256);
  const Profile u = random_smooth_field(g, 9, 1.0).with_gauge(Gauge::fixed);
  const auto path = (std::filesystem::temp_directory_path() / "fnls_roundtrip.prof").string();
  write_profile(path, u, {1.5, 0.1, 0.75, 0.049});
  const StoredProfile back = read_profile(path);
  EXPECT_EQ(back.profile.grid().length(), 25.0);
  EXPECT_EQ(back.profile.size(), 256u);
  EXPECT_EQ(back.profile.gauge(), Gauge::fixed);
  EXPECT_EQ(back.meta.s, 1.5);
  EXPECT_EQ(back.meta.N, 0.1);
  EXPECT_EQ(back.meta.beta, 0.75);
  EXPECT_EQ(back.meta.multiplier, 0.049);
  for (std::size_t j = 0; j < u.size(); ++j) EXPECT_EQ(back.profile[j], u[j]);
  std::filesystem::resize_file(path, 100);
  EXPECT_THROW(read_profile(path), DomainError);
  std::filesystem::remove(path);
}
