#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "fnls/spectral.hpp"

namespace fnls {

/// Smooth localized complex field: a few Gaussian bumps with random centres, widths,
/// amplitudes and linear phases. `width` sets the typical bump width.
inline Profile random_smooth_field(const GridPtr& grid, std::uint64_t seed, double width, int bumps = 5) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  struct Bump {
    double c, w, k;
    cplx a;
  };
  std::vector<Bump> list;
  for (int b = 0; b < bumps; ++b) {
    Bump x;
    x.c = (unit(rng) - 0.5) * 3.0 * width;
    x.w = width * (0.4 + 0.8 * unit(rng));
    x.k = (unit(rng) - 0.5) * 2.0 / width;
    x.a = std::polar(0.3 + unit(rng), 2.0 * kPi * unit(rng));
    list.push_back(x);
  }
  return Profile::sample(grid, [&](double x) {
    cplx v = 0.0;
    for (const auto& b : list) {
      const double z = (x - b.c) / b.w;
      v += b.a * std::exp(-0.5 * z * z) * std::polar(1.0, b.k * x);
    }
    return v;
  });
}

/// Real-valued variant.
inline Profile random_real_field(const GridPtr& grid, std::uint64_t seed, double width, int bumps = 5) {
  const Profile u = random_smooth_field(grid, seed, width, bumps);
  CVec v(u.size());
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = u[j].real();
  return Profile(grid, std::move(v));
}

}  // namespace fnls
