#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "calaflow/errors.hpp"
#include "calaflow/field.hpp"

using namespace calaflow;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

PeriodicField cos_field(int n, int N, double scale = 1.0) {
  GridSpec g(n, N, scale);
  return sample_function([](const Vec& x) { return std::cos(kTwoPi * x[0]); }, g);
}
}  // namespace

TEST_CASE("grid spec invariants") {
  CHECK_THROWS_AS(GridSpec(0, 64, 1.0), ConfigError);
  CHECK_THROWS_AS(GridSpec(4, 64, 1.0), ConfigError);
  CHECK_THROWS_AS(GridSpec(1, 8, 1.0), ConfigError);
  CHECK_THROWS_AS(GridSpec(1, 17, 1.0), ConfigError);
  CHECK_THROWS_AS(GridSpec(1, 64, -1.0), ConfigError);
  GridSpec g(2, 32, 2.0);
  CHECK(g.h() == 2.0 / 32);
  CHECK(g.num_points() == 1024);
  Vec p = g.point({0, 16, 0});
  CHECK(p[0] == doctest::Approx(-1.0));
  CHECK(p[1] == doctest::Approx(0.0));
}

TEST_CASE("sample_function evaluates at grid points") {
  GridSpec g(1, 16, 1.0);
  PeriodicField f = sample_function([](const Vec& x) { return std::cos(kTwoPi * x[0]); }, g);
  for (int k = 0; k < 16; ++k)
    CHECK(f[k] == doctest::Approx(std::cos(kTwoPi * (k / 16.0 - 0.5))).epsilon(1e-15));

  PeriodicField zero = sample_function([](const Vec&) { return 0.0; }, g);
  for (int k = 0; k < 16; ++k) CHECK(zero[k] == 0.0);

  // Non-periodic inputs are accepted; periodicity is the caller's contract.
  CHECK_NOTHROW(sample_function([](const Vec& x) { return x[0]; }, g));

  CHECK_THROWS_AS(
      sample_function([](const Vec& x) { return x[0] == -0.5 ? 1.0 / 0.0 : 0.0; }, g),
      NumericalError);
}

TEST_CASE("derivative matches analytic derivatives to 4th order") {
  GridSpec g(1, 64, 1.0);
  PeriodicField f = cos_field(1, 64);
  const int axes_xx[2] = {0, 0};
  PeriodicField fxx = derivative(f, axes_xx);
  double sup = 0.0;
  for (int k = 0; k < 64; ++k) {
    const double x = k / 64.0 - 0.5;
    sup = std::max(sup, std::abs(fxx[k] + kTwoPi * kTwoPi * std::cos(kTwoPi * x)));
  }
  CHECK(sup < 1e-4);

  // Cross derivative by composition of first-derivative stencils. The
  // truncation constant of that scheme is 2 (2 pi)^6 h^4 / 30, i.e. 2.5e-4
  // at N = 64, dropping to 1.5e-5 at N = 128.
  for (int N : {64, 128}) {
    GridSpec g2(2, N, 1.0);
    PeriodicField f2 = sample_function(
        [](const Vec& x) { return std::cos(kTwoPi * x[0]) * std::cos(kTwoPi * x[1]); }, g2);
    const int axes_xy[2] = {0, 1};
    PeriodicField fxy = derivative(f2, axes_xy);
    sup = 0.0;
    Idx idx{0, 0, 0};
    for (std::int64_t t = 0; t < g2.num_points(); ++t) {
      Vec x = g2.point(idx);
      const double want = kTwoPi * kTwoPi * std::sin(kTwoPi * x[0]) * std::sin(kTwoPi * x[1]);
      sup = std::max(sup, std::abs(fxy[t] - want));
      for (int a = g2.n - 1; a >= 0; --a) {
        if (++idx[a] < g2.N) break;
        idx[a] = 0;
      }
    }
    CHECK(sup < (N == 64 ? 2.5e-4 : 1e-4));
  }

  PeriodicField zero = PeriodicField::zeros(g);
  PeriodicField dz = derivative(zero, axes_xx);
  CHECK(dz.max_abs() == 0.0);

  const int too_many[5] = {0, 0, 0, 0, 0};
  CHECK_THROWS_AS(derivative(f, std::span<const int>(too_many, 5)), ConfigError);
}

TEST_CASE("derivative is linear and mixed partials commute bitwise") {
  GridSpec g(2, 32, 1.0);
  std::mt19937_64 rng(7);
  auto rnd = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5; };
  PeriodicField f = sample_function(
      [&](const Vec& x) {
        return std::cos(kTwoPi * x[0]) + 0.3 * std::sin(kTwoPi * (x[0] + 2 * x[1]));
      },
      g);
  PeriodicField h = sample_function(
      [&](const Vec& x) { return std::sin(kTwoPi * 2 * x[1]) * std::cos(kTwoPi * x[0]); }, g);
  (void)rnd;

  const double a = 1.37, b = -0.59;
  const int axes[2] = {0, 1};
  PeriodicField lhs = derivative(field_add_scaled(field_scale(a, f), b, h), axes);
  PeriodicField rhs_f = derivative(f, axes);
  PeriodicField rhs_h = derivative(h, axes);
  double sup = 0.0, scale_ref = 0.0;
  for (std::int64_t t = 0; t < g.num_points(); ++t) {
    sup = std::max(sup, std::abs(lhs[t] - (a * rhs_f[t] + b * rhs_h[t])));
    scale_ref = std::max(scale_ref, std::abs(lhs[t]));
  }
  CHECK(sup <= 1e-12 * std::max(1.0, scale_ref));

  const int axes_rev[2] = {1, 0};
  PeriodicField d1 = derivative(f, axes);
  PeriodicField d2 = derivative(f, axes_rev);
  for (std::int64_t t = 0; t < g.num_points(); ++t) CHECK(d1[t] == d2[t]);
}

TEST_CASE("derivative converges at 4th order") {
  const int axes[2] = {0, 0};
  double prev = 0.0;
  for (int N : {32, 64}) {
    PeriodicField f = cos_field(1, N);
    PeriodicField fxx = derivative(f, axes);
    double sup = 0.0;
    for (int k = 0; k < N; ++k) {
      const double x = static_cast<double>(k) / N - 0.5;
      sup = std::max(sup, std::abs(fxx[k] + kTwoPi * kTwoPi * std::cos(kTwoPi * x)));
    }
    if (N == 32) prev = sup;
    else CHECK(prev / sup >= 12.0);
  }
}

TEST_CASE("integrate: exact zero-mean modes and telescoping derivatives") {
  GridSpec g(1, 32, 1.0);
  CHECK(integrate(PeriodicField::zeros(g)) == 0.0);
  PeriodicField one = sample_function([](const Vec&) { return 1.0; }, g);
  CHECK(integrate(one) == doctest::Approx(1.0).epsilon(1e-15));
  PeriodicField f = cos_field(1, 32);
  CHECK(std::abs(integrate(f)) < 1e-14);

  // Periodic telescoping: the integral of any single-axis derivative vanishes.
  GridSpec g2(2, 32, 1.0);
  PeriodicField wild = sample_function(
      [](const Vec& x) {
        return std::exp(std::sin(kTwoPi * x[0])) * std::cos(kTwoPi * 3 * x[1]);
      },
      g2);
  const int ax0[1] = {0};
  const int ax1[1] = {1};
  CHECK(std::abs(integrate(derivative(wild, ax0))) < 1e-12);
  CHECK(std::abs(integrate(derivative(wild, ax1))) < 1e-12);
}

TEST_CASE("interpolation: node-exact and accurate off nodes") {
  GridSpec g(1, 64, 1.0);
  PeriodicField f = cos_field(1, 64);
  // Exact stored value at a node.
  Vec node = g.point({13, 0, 0});
  CHECK(interpolate(f, node) == f[13]);

  CHECK(std::abs(interpolate(f, {0.1, 0.0, 0.0}) - std::cos(kTwoPi * 0.1)) < 1e-6);

  PeriodicField c7 = sample_function([](const Vec&) { return 7.5; }, g);
  CHECK(interpolate(c7, {0.237, 0.0, 0.0}) == doctest::Approx(7.5).epsilon(1e-14));

  // 2-D tensor-product accuracy.
  GridSpec g2(2, 64, 1.0);
  PeriodicField f2 = sample_function(
      [](const Vec& x) { return std::cos(kTwoPi * x[0]) * std::sin(kTwoPi * x[1]); }, g2);
  CubicInterpolant interp(f2);
  const double want = std::cos(kTwoPi * 0.13) * std::sin(kTwoPi * -0.21);
  CHECK(std::abs(interp({0.13, -0.21, 0.0}) - want) < 1e-5);
}

TEST_CASE("fourier_mode extracts coefficients") {
  GridSpec g(1, 32, 1.0);
  PeriodicField zero = PeriodicField::zeros(g);
  CHECK(std::abs(fourier_mode(zero, {1, 0, 0})) == 0.0);

  PeriodicField f = cos_field(1, 32);
  CHECK(std::abs(std::abs(fourier_mode(f, {1, 0, 0})) - 0.5) < 1e-12);

  PeriodicField one = sample_function([](const Vec&) { return 1.0; }, g);
  CHECK(std::abs(fourier_mode(one, {0, 0, 0}) - std::complex<double>(1.0, 0.0)) < 1e-14);

  CHECK_THROWS_AS(fourier_mode(f, {16, 0, 0}), ConfigError);
}
