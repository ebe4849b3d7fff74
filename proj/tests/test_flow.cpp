#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "calaflow/errors.hpp"
#include "calaflow/flow.hpp"
#include "calaflow/geometry.hpp"
#include "oracles.hpp"

using namespace calaflow;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kBiharmonic = 1558.5454565440389;  // (2 pi)^4

SymplecticPotential flat(int n, int N) {
  return SymplecticPotential(1.0, PeriodicField::zeros(GridSpec(n, N, 1.0)));
}

SymplecticPotential cosine_1d(double eps, int N) {
  GridSpec g(1, N, 1.0);
  return SymplecticPotential(
      1.0, sample_function(
               [&](const Vec& x) { return eps * std::cos(kTwoPi * x[0]); }, g));
}
}  // namespace

TEST_CASE("rhs: fixed point, zero mean, linearized biharmonic") {
  CHECK(rhs(flat(2, 32)).max_abs() == 0.0);

  const double eps = 1e-6;
  SymplecticPotential u = cosine_1d(eps, 64);
  PeriodicField r = rhs(u);
  CHECK(std::abs(integrate(r)) < 1e-12);
  double sup = 0.0;
  for (int k = 0; k < 64; ++k) {
    const double x = k / 64.0 - 0.5;
    sup = std::max(sup, std::abs(r[k] + eps * kBiharmonic * std::cos(kTwoPi * x)));
  }
  CHECK(sup / (eps * kBiharmonic) < 1e-3);
}

TEST_CASE("step: flat fixed point is exact") {
  FlowState s{0.0, flat(2, 32)};
  StepResult r = step(s, 1e-6);
  CHECK(r.state.u.psi().max_abs() == 0.0);
  CHECK(r.rejections == 0);
  CHECK(r.state.t == 1e-6);
}

TEST_CASE("step: single mode follows the RK4 amplification factor") {
  const double eps = 1e-6;
  const int N = 64;
  SymplecticPotential u = cosine_1d(eps, N);
  const double dt = 0.25 * cfl_dt(u, 1.0);
  FlowState s{0.0, u};
  StepResult r = step(s, dt);

  const std::complex<double> before = fourier_mode(u.psi(), {1, 0, 0});
  const std::complex<double> after = fourier_mode(r.state.u.psi(), {1, 0, 0});
  const double z = -kBiharmonic * dt;
  const double amp = 1.0 + z + z * z / 2 + z * z * z / 6 + z * z * z * z / 24;
  CHECK(std::abs(after / before - amp) < 1e-8);
}

TEST_CASE("step: Richardson self-convergence at order 4") {
  // One step at dt vs two steps at dt/2. A smooth k=1 mode decays too slowly
  // at the stability-limited dt for the dt^5 error to clear round-off, so use
  // a high mode (k = N/4) whose amplification argument is O(1) there.
  const int N = 32;
  GridSpec g(1, N, 1.0);
  PeriodicField psi = sample_function(
      [](const Vec& x) { return 1e-4 * std::cos(kTwoPi * 8 * x[0]); }, g);
  SymplecticPotential u(1.0, std::move(psi));
  FlowState s{0.0, u};

  auto diff_at = [&](double dt) {
    StepResult big = step(s, dt);
    StepResult half1 = step(s, dt / 2);
    StepResult half2 = step(half1.state, dt / 2);
    double sup = 0.0;
    for (std::int64_t f = 0; f < u.psi().size(); ++f)
      sup = std::max(sup,
                     std::abs(big.state.u.psi()[f] - half2.state.u.psi()[f]));
    return sup;
  };

  const double dt0 = cfl_dt(u, 1.0);
  const double d1 = diff_at(dt0);
  const double d2 = diff_at(dt0 / 2);
  CHECK(d1 > 1e-12);  // clear of the round-off floor
  CHECK(d1 / d2 >= 16.0 * 0.85);
}

TEST_CASE("step rejects below dt_min on non-convex data") {
  // An amplitude close to the convexity edge: a huge step overshoots into
  // non-convexity and halving cannot rescue dt >= dt_min here because the
  // problem is the step size itself; use a tiny dt_min window to observe the
  // failure path deterministically.
  const double eps = 2.4e-2;  // eig_min barely positive
  SymplecticPotential u = cosine_1d(eps, 32);
  CHECK(u.hessian().eig_min_global > 0.0);
  FlowState s{0.0, u};
  const double huge = 1e4 * cfl_dt(u, 1.0);
  CHECK_THROWS_AS(step(s, huge, 0.5 * huge), StiffnessFailureError);
}

TEST_CASE("run: flat trace, linearized decay, records monotone") {
  FlowConfig cfg;
  cfg.t_end = 20 * cfl_dt(flat(1, 64), 0.5);
  cfg.sigma = 0.5;
  cfg.ca_stop = 0.0;
  cfg.record_every = 5;
  cfg.m_segments = 2;
  FlowTrace ft = run(flat(1, 64), cfg);
  CHECK(ft.termination == Termination::t_end);
  for (const DiagnosticsRecord& r : ft.records) {
    CHECK(r.Ca == 0.0);
    CHECK(r.max_Rm == 0.0);
    CHECK(r.eig_min == 1.0);
  }
  CHECK(ft.records.size() >= 20);

  // Linearized decay: Ca drops by e^{-2 (2pi)^4 t}.
  const double eps = 1e-4;
  SymplecticPotential u0 = cosine_1d(eps, 64);
  FlowConfig cfg2;
  cfg2.t_end = 2e-4;
  cfg2.sigma = 0.9;
  cfg2.ca_stop = 0.0;
  cfg2.record_every = 50;
  cfg2.m_segments = 2;
  FlowTrace t2 = run(u0, cfg2);
  CHECK(t2.termination == Termination::t_end);
  const double ca0 = t2.records.front().Ca;
  const double ca1 = t2.records.back().Ca;
  const double want = std::exp(-2.0 * kBiharmonic * 2e-4);
  CHECK(std::abs(ca1 / ca0 - want) / want < 0.01);

  // Monotone along the way, mean conserved.
  for (std::size_t i = 1; i < t2.records.size(); ++i) {
    const auto& a = t2.records[i - 1];
    const auto& b = t2.records[i];
    CHECK(b.Ca <= a.Ca * (1 + 1e-10) + 1e-14);
    CHECK(b.Ma <= a.Ma + 1e-10 * std::abs(a.Ma) + 1e-14);
    CHECK(b.L2 <= a.L2 + 1e-10 * std::abs(a.L2) + 1e-14);
    CHECK(std::abs(b.psi_mean - t2.records.front().psi_mean) < 1e-10);
  }
}

TEST_CASE("run: ca_stop fires") {
  const double eps = 1e-4;
  SymplecticPotential u0 = cosine_1d(eps, 32);
  FlowConfig cfg;
  cfg.t_end = 1.0;  // far beyond the decay time
  cfg.sigma = 0.9;
  cfg.record_every = 1000;
  cfg.m_segments = 0;
  const double ca0 = energies(u0).Ca;
  cfg.ca_stop = 1e-4 * ca0;
  FlowTrace ft = run(u0, cfg);
  CHECK(ft.termination == Termination::ca_stop);
  CHECK(ft.records.back().Ca < 1e-4 * ca0);
  CHECK(ft.records.back().t < 1e-2);
}

TEST_CASE("dissipation identities along a linearized run") {
  const double eps = 1e-4;
  SymplecticPotential u0 = cosine_1d(eps, 64);
  FlowConfig cfg;
  cfg.t_end = 30 * cfl_dt(u0, 0.5);
  cfg.sigma = 0.5;
  cfg.ca_stop = 0.0;
  cfg.record_every = 1;  // snapshot every step
  cfg.m_segments = 0;
  FlowTrace ft = run(u0, cfg);
  DissipationReport rep = dissipation_checks(ft);
  CHECK(rep.triples > 10);
  CHECK(rep.ca_rel_err < 1e-3);
  CHECK(rep.ma_rel_err < 1e-3);
  CHECK(rep.star_rel_err < 1e-3);

  FlowTrace tiny;
  tiny.snapshots.push_back(FlowState{0.0, u0});
  CHECK_THROWS_AS(dissipation_checks(tiny), ConfigError);
}

TEST_CASE("blowup_extract normalizes the curvature maximum") {
  const double eps = 2e-3;
  SymplecticPotential u0 = cosine_1d(eps, 64);
  FlowTrace ft;
  ft.snapshots.push_back(FlowState{0.0, u0});

  SymplecticPotential ext = blowup_extract(ft, 0.0);
  PeriodicField rm = riemann_norm(ext);
  // |Rm| = 1 at the new origin (grid node N/2).
  CHECK(std::abs(rm[ext.spec().N / 2] - 1.0) < 1e-3);
  CHECK(rm.max_abs() <= 1.0 + 1e-3);

  FlowTrace flat_tr;
  flat_tr.snapshots.push_back(FlowState{0.0, flat(1, 64)});
  CHECK_THROWS_AS(blowup_extract(flat_tr, 0.0), NumericalError);
  CHECK_THROWS_AS(blowup_extract(ft, 0.5), ConfigError);
}

TEST_CASE("fit_decay_rate: synthetic exponential and linearized run") {
  FlowTrace synth;
  for (int i = 0; i <= 100; ++i) {
    DiagnosticsRecord r;
    r.t = i * 0.01;
    r.Ca = std::exp(-3.0 * r.t);
    synth.records.push_back(r);
  }
  DecayFit fit = fit_decay_rate(synth, 0.5);
  CHECK(std::abs(fit.rate - 3.0) < 1e-10);
  CHECK(std::abs(fit.r_squared - 1.0) < 1e-10);
  CHECK_FALSE(fit.truncated);

  // Linearized flow: rate = 2 (2 pi)^4 within 1%.
  const double eps = 1e-4;
  SymplecticPotential u0 = cosine_1d(eps, 64);
  FlowConfig cfg;
  cfg.t_end = 2e-4;
  cfg.sigma = 0.9;
  cfg.ca_stop = 0.0;
  cfg.record_every = 100;
  cfg.m_segments = 0;
  FlowTrace ft = run(u0, cfg);
  DecayFit f2 = fit_decay_rate(ft, 0.5);
  CHECK(std::abs(f2.rate - 2.0 * kBiharmonic) / (2.0 * kBiharmonic) < 0.01);
  CHECK(f2.r_squared > 0.99);
}

TEST_CASE("trace pairing stays nonpositive along a run") {
  GridSpec g(2, 32, 1.0);
  PeriodicField psi = sample_function(
      [](const Vec& x) {
        return 1e-3 * std::cos(kTwoPi * x[0]) +
               5e-4 * std::cos(kTwoPi * (x[0] + x[1]));
      },
      g);
  SymplecticPotential u0(1.0, std::move(psi));
  FlowConfig cfg;
  cfg.t_end = 10 * cfl_dt(u0, 0.5);
  cfg.sigma = 0.5;
  cfg.ca_stop = 0.0;
  cfg.record_every = 2;
  cfg.m_segments = 2;
  FlowTrace ft = run(u0, cfg);
  for (const FlowState& s : ft.snapshots) {
    PeriodicField tp = trace_pairing(s.u);
    for (std::int64_t f = 0; f < tp.size(); ++f) CHECK(tp[f] <= 1e-12);
  }
}

TEST_CASE("flow config validation") {
  FlowConfig cfg;
  cfg.t_end = 1.0;
  CHECK_NOTHROW(cfg.validate());
  cfg.sigma = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.sigma = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.sigma = 0.1;
  cfg.record_every = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
