#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "calaflow/errors.hpp"
#include "calaflow/potential.hpp"
#include "oracles.hpp"

using namespace calaflow;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

SymplecticPotential flat(int n, int N, double c = 1.0, double scale = 1.0) {
  return SymplecticPotential(c, PeriodicField::zeros(GridSpec(n, N, scale)));
}

SymplecticPotential cosine_1d(double eps, int N, double scale = 1.0) {
  GridSpec g(1, N, scale);
  PeriodicField psi = sample_function(
      [&](const Vec& x) { return eps * std::cos(kTwoPi * x[0] / scale); }, g);
  return SymplecticPotential(1.0, std::move(psi));
}
}  // namespace

TEST_CASE("construction validates convexity and c") {
  CHECK_THROWS_AS(flat(1, 64, 0.0), ConfigError);
  CHECK_THROWS_AS(flat(1, 64, -2.0), ConfigError);

  // amplitude beyond 1/(2 pi)^2 makes u'' <= 0 somewhere
  GridSpec g(1, 64, 1.0);
  PeriodicField bad = sample_function(
      [](const Vec& x) { return 0.05 * std::cos(kTwoPi * x[0]); }, g);
  CHECK_THROWS_AS(SymplecticPotential(1.0, std::move(bad)), ConvexityLossError);

  PeriodicField nan_psi(g, std::vector<double>(64, std::nan("")));
  CHECK_THROWS_AS(SymplecticPotential(1.0, std::move(nan_psi)), NumericalError);
}

TEST_CASE("hessian of the flat potential is c*I") {
  for (int n : {1, 2}) {
    SymplecticPotential u = flat(n, 32, 1.0);
    const HessianData& H = u.hessian();
    for (std::int64_t f = 0; f < u.spec().num_points(); ++f) {
      SymMat hess = H.hess_at(f);
      SymMat inv = H.inv_at(f);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          CHECK(hess(i, j) == (i == j ? 1.0 : 0.0));
          CHECK(inv(i, j) == (i == j ? 1.0 : 0.0));
        }
      CHECK(H.det[f] == 1.0);
    }
    CHECK(H.eig_min_global == 1.0);
    CHECK(H.eig_max_global == 1.0);
  }

  SymplecticPotential u2 = flat(2, 32, 2.0);
  const HessianData& H2 = u2.hessian();
  CHECK(H2.det[0] == 4.0);
  CHECK(H2.inv_at(0)(0, 0) == 0.5);
  CHECK(H2.eig_min_global == 2.0);
}

TEST_CASE("hessian matches the analytic second derivative") {
  // u = x^2/2 + 0.01 cos(2 pi x): u''(0) = 1 - 0.01 (2 pi)^2
  SymplecticPotential u = cosine_1d(0.01, 64);
  const double want = 1.0 - 0.01 * kTwoPi * kTwoPi;
  const std::int64_t center = 32;  // x = 0
  CHECK(std::abs(u.hessian().hess_at(center)(0, 0) - want) < 1e-5);
  CHECK(want == doctest::Approx(0.60522).epsilon(1e-4));

  // hess * inv = identity within 1e-10 pointwise
  for (std::int64_t f = 0; f < u.spec().num_points(); ++f) {
    const double prod = u.hessian().hess_at(f)(0, 0) * u.hessian().inv_at(f)(0, 0);
    CHECK(std::abs(prod - 1.0) < 1e-10);
  }
}

TEST_CASE("m-condition: flat potentials attain the domain extremizers") {
  // n=1: full-domain segment gives |u'(p1) - u'(p2)| = 1/3
  SymplecticPotential u1 = flat(1, 64);
  MConditionReport r1 = m_condition_estimate(u1, 64, 1);
  CHECK(std::abs(r1.M_estimate - 1.0 / 3.0) < 1e-6);

  // n=2: corner-to-corner diagonal gives sqrt(2)/3
  SymplecticPotential u2 = flat(2, 32);
  MConditionReport r2 = m_condition_estimate(u2, 128, 1);
  CHECK(std::abs(r2.M_estimate - std::sqrt(2.0) / 3.0) < 1e-4);
  CHECK(r2.samples == 2 * 32 + 2 + 128);
}

TEST_CASE("m-condition vs dense segment enumeration") {
  // u = x^2/2 + 0.01 cos(2 pi x): dense brute force over segments.
  SymplecticPotential u = cosine_1d(0.01, 128);
  auto uprime = [](double p) { return p - 0.01 * kTwoPi * std::sin(kTwoPi * p); };
  double dense = 0.0;
  const int K = 400;
  for (int i = 0; i < K; ++i)
    for (int j = i + 1; j <= K; ++j) {
      const double a = -0.5 + static_cast<double>(i) / K;
      const double b = -0.5 + static_cast<double>(j) / K;
      const double v = std::abs(uprime(a + (b - a) / 3) - uprime(a + 2 * (b - a) / 3));
      dense = std::max(dense, v);
    }

  MConditionReport rep = m_condition_estimate(u, 256, 12345);
  // full-domain axis segment value, from the analytic gradient
  const double full = std::abs(uprime(-1.0 / 6) - uprime(1.0 / 6));
  CHECK(rep.M_estimate >= full - 1e-9);
  CHECK(std::abs(rep.M_estimate - dense) / dense < 0.05);
}

TEST_CASE("m-condition bounded by twice the gradient sup") {
  // Property: M <= 2 sup|grad u| on a family of seeded potentials.
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull}) {
    GridSpec g(2, 32, 1.0);
    PeriodicField psi = sample_function(
        [&](const Vec& x) {
          const double s = static_cast<double>(seed);
          return 2e-3 / (1.0 + s * s) * std::cos(kTwoPi * (x[0] + s * x[1])) +
                 1e-3 * std::sin(kTwoPi * (2 * x[0] - x[1]));
        },
        g);
    SymplecticPotential u(1.0, std::move(psi));
    MConditionReport rep = m_condition_estimate(u, 200, seed);
    SupNorms s = sup_norms(u);
    CHECK(rep.M_estimate <= 2.0 * s.sup_grad);
  }
}

TEST_CASE("sup_norms of flat and shifted potentials") {
  SymplecticPotential u = flat(1, 64);
  SupNorms s = sup_norms(u);
  CHECK(s.sup_u == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(s.sup_grad == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(s.psi_mean) < 1e-15);

  // Shift psi by a constant k: sup norms shift, mean becomes k.
  GridSpec g(1, 64, 1.0);
  PeriodicField shifted = sample_function([](const Vec&) { return 0.25; }, g);
  SymplecticPotential us(1.0, std::move(shifted));
  SupNorms ss = sup_norms(us);
  CHECK(ss.psi_mean == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(ss.sup_u == doctest::Approx(0.375).epsilon(1e-12));

  // Dense-grid oracle for a nontrivial potential.
  SymplecticPotential uc = cosine_1d(0.01, 64);
  SupNorms sc = sup_norms(uc);
  double sup_u = 0.0, sup_g = 0.0;
  const int D = 4096;
  for (int k = 0; k < D; ++k) {
    const double x = static_cast<double>(k) / D - 0.5;
    sup_u = std::max(sup_u, std::abs(0.5 * x * x + 0.01 * std::cos(kTwoPi * x)));
    sup_g = std::max(sup_g, std::abs(x - 0.01 * kTwoPi * std::sin(kTwoPi * x)));
  }
  // node-sampled sup can undershoot the dense sup, never overshoot much
  CHECK(sc.sup_u <= sup_u + 1e-6);
  CHECK(sc.sup_u >= sup_u - 1e-4);
  CHECK(sc.sup_grad <= sup_g + 1e-6);
  CHECK(std::abs(sc.psi_mean) < 1e-12);
}

TEST_CASE("rescale: flat potential and identity case") {
  SymplecticPotential u = flat(2, 32);
  SymplecticPotential r = rescale(u, 4.0, {0.0, 0.0, 0.0});
  CHECK(r.c() == 0.25);
  CHECK(r.spec().scale == 4.0);
  CHECK(r.psi().max_abs() == 0.0);

  // lam = 1 at p = 0: identity up to the value normalization (psi(0) = 0).
  SymplecticPotential uc = cosine_1d(1e-3, 64);
  SymplecticPotential rc = rescale(uc, 1.0, {0.0, 0.0, 0.0});
  CHECK(rc.c() == 1.0);
  for (std::int64_t f = 0; f < uc.spec().num_points(); ++f)
    CHECK(std::abs(rc.psi()[f] - (uc.psi()[f] - 1e-3)) < 1e-14);
  // value normalization holds at the center node x = 0
  CHECK(rc.psi()[32] == 0.0);
}

TEST_CASE("rescale composes and scales eigenvalues") {
  SymplecticPotential u = cosine_1d(2e-3, 64);
  SymplecticPotential ab = rescale(rescale(u, 2.0, {0, 0, 0}), 3.0, {0, 0, 0});
  SymplecticPotential once = rescale(u, 6.0, {0, 0, 0});
  CHECK(ab.spec().scale == once.spec().scale);
  CHECK(ab.c() == doctest::Approx(once.c()).epsilon(1e-15));
  for (std::int64_t f = 0; f < u.spec().num_points(); ++f)
    CHECK(std::abs(ab.psi()[f] - once.psi()[f]) < 1e-8);

  // eig fields of the rescaled potential are (1/lam) x originals at mapped
  // points; with p on a node the mapping is an exact index shift.
  const double lam = 2.0;
  Vec p = u.spec().point({48, 0, 0});
  SymplecticPotential r = rescale(u, lam, p);
  const HessianData& Hr = r.hessian();
  const HessianData& Hu = u.hessian();
  for (int k = 0; k < 64; ++k) {
    const int src = (48 + k + 32) % 64;
    CHECK(std::abs(Hr.eig_min[k] - Hu.eig_min[src] / lam) < 1e-6);
  }

  CHECK_THROWS_AS(rescale(u, 0.0, {0, 0, 0}), ConfigError);
  CHECK_THROWS_AS(rescale(u, -1.0, {0, 0, 0}), ConfigError);
}

TEST_CASE("rng_unit is deterministic and uniform-range") {
  CHECK(rng_unit(0) == 0.0);
  CHECK(rng_unit(~0ull) < 1.0);
  CHECK(rng_unit(~0ull) > 0.999999);
}
