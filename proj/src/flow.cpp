#include "calaflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "calaflow/errors.hpp"
#include "calaflow/geometry.hpp"

namespace calaflow {

void FlowConfig::validate() const {
  if (!(sigma > 0.0) || sigma > 1.0)
    throw ConfigError("FlowConfig: sigma must lie in (0, 1]");
  if (!(dt_min > 0.0)) throw ConfigError("FlowConfig: dt_min must be > 0");
  if (record_every < 1) throw ConfigError("FlowConfig: record_every must be >= 1");
  if (m_segments < 0) throw ConfigError("FlowConfig: m_segments must be >= 0");
  if (!(t_end > 0.0)) throw ConfigError("FlowConfig: t_end must be > 0");
  if (ca_stop && *ca_stop < 0.0)
    throw ConfigError("FlowConfig: ca_stop must be >= 0");
}

std::string termination_name(Termination t) {
  switch (t) {
    case Termination::t_end: return "t_end";
    case Termination::ca_stop: return "ca_stop";
    case Termination::stiffness_failure: return "stiffness_failure";
    case Termination::blowup_suspected: return "blowup_suspected";
  }
  return "unknown";
}

PeriodicField rhs(const SymplecticPotential& u) {
  return field_scale(-1.0, scalar_curvature(u, CurvatureMethod::direct));
}

namespace {

// Max symbol of the one-axis second-derivative stencil is 16/3 per h^2; the
// classical RK4 real-axis stability interval ends near 2.785.
constexpr double kSecondDerivSymbolMax = 16.0 / 3.0;
constexpr double kRk4RealAxis = 2.785;

std::optional<SymplecticPotential> try_potential(double c, PeriodicField psi) {
  try {
    return SymplecticPotential(c, std::move(psi));
  } catch (const NumericalError&) {
    return std::nullopt;
  }
}

}  // namespace

double cfl_dt(const SymplecticPotential& u, double sigma) {
  const GridSpec& g = u.spec();
  const double h = g.h();
  const double max_inv_eig = 1.0 / u.hessian().eig_min_global;
  const double symbol_max = g.n * kSecondDerivSymbolMax * kSecondDerivSymbolMax *
                            max_inv_eig * max_inv_eig / (h * h * h * h);
  return sigma * kRk4RealAxis / symbol_max;
}

namespace {

std::optional<FlowState> step_attempt_with_k1(const FlowState& state, double dt,
                                              const PeriodicField& k1) {
  const SymplecticPotential& u = state.u;
  const double c = u.c();
  auto u2 = try_potential(c, field_add_scaled(u.psi(), 0.5 * dt, k1));
  if (!u2) return std::nullopt;
  const PeriodicField k2 = rhs(*u2);
  auto u3 = try_potential(c, field_add_scaled(u.psi(), 0.5 * dt, k2));
  if (!u3) return std::nullopt;
  const PeriodicField k3 = rhs(*u3);
  auto u4 = try_potential(c, field_add_scaled(u.psi(), dt, k3));
  if (!u4) return std::nullopt;
  const PeriodicField k4 = rhs(*u4);

  std::vector<double> psi(u.psi().values().begin(), u.psi().values().end());
  const double w = dt / 6.0;
  for (std::int64_t f = 0; f < u.psi().size(); ++f)
    psi[f] += w * (k1[f] + 2.0 * k2[f] + 2.0 * k3[f] + k4[f]);

  auto next = try_potential(c, PeriodicField(u.spec(), std::move(psi)));
  if (!next) return std::nullopt;
  return FlowState{state.t + dt, std::move(*next)};
}

StepResult step_with_k1(const FlowState& state, double dt, double dt_min,
                        const PeriodicField& k1) {
  int rejections = 0;
  double trial = dt;
  while (trial >= dt_min) {
    if (auto next = step_attempt_with_k1(state, trial, k1))
      return StepResult{std::move(*next), trial, rejections};
    trial *= 0.5;
    ++rejections;
  }
  std::ostringstream os;
  os << "flow step rejected down to dt = " << trial << " < dt_min = " << dt_min
     << " at t = " << state.t;
  throw StiffnessFailureError(os.str());
}

}  // namespace

std::optional<FlowState> step_attempt(const FlowState& state, double dt) {
  return step_attempt_with_k1(state, dt, rhs(state.u));
}

StepResult step(const FlowState& state, double dt, double dt_min) {
  return step_with_k1(state, dt, dt_min, rhs(state.u));
}

namespace {

// Diagnostics of a state given its (already computed) curvature field.
DiagnosticsRecord diagnose(const FlowState& state, double dt,
                           const FlowConfig& cfg, const PeriodicField& S) {
  DiagnosticsRecord r;
  r.t = state.t;
  r.dt = dt;
  const GridSpec& gs = state.u.spec();
  {
    std::vector<double> tmp(gs.num_points());
    for (std::int64_t f = 0; f < gs.num_points(); ++f) tmp[f] = S[f] * S[f];
    r.Ca = integrate(PeriodicField(gs, std::move(tmp)));
  }
  {
    const HessianData& HH = state.u.hessian();
    std::vector<double> tmp(gs.num_points());
    for (std::int64_t f = 0; f < gs.num_points(); ++f)
      tmp[f] = std::log(HH.det[f]);
    r.Ma = -integrate(PeriodicField(gs, std::move(tmp)));
  }
  {
    std::vector<double> tmp(gs.num_points());
    for (std::int64_t f = 0; f < gs.num_points(); ++f)
      tmp[f] = state.u.psi()[f] * state.u.psi()[f];
    r.L2 = integrate(PeriodicField(gs, std::move(tmp)));
  }
  r.psi_mean = integrate(state.u.psi()) / gs.volume();

  const PeriodicField rm = riemann_norm(state.u);
  r.max_Rm = rm.max_abs();
  const GridSpec& g = gs;
  std::vector<double> rm_n(rm.values().begin(), rm.values().end());
  for (double& v : rm_n) {
    double p = v;
    for (int a = 1; a < g.n; ++a) p *= v;
    v = p;
  }
  r.total_energy_n = integrate(PeriodicField(g, std::move(rm_n)));

  const HessianData& H = state.u.hessian();
  r.eig_min = H.eig_min_global;
  r.eig_max = H.eig_max_global;
  r.M_estimate =
      m_condition_estimate(state.u, cfg.m_segments, cfg.seed).M_estimate;
  r.inj_proxy = 0.5 * g.scale *
                std::min(std::sqrt(H.eig_min_global),
                         1.0 / std::sqrt(H.eig_max_global));
  return r;
}

}  // namespace

FlowTrace run(const SymplecticPotential& u0, const FlowConfig& config,
              const RecordHook& on_record) {
  config.validate();
  FlowTrace trace;
  trace.config = config;

  FlowState state{0.0, u0};
  DiagnosticsRecord first = diagnose(state, 0.0, config);
  const double ca0 = first.Ca;
  const double ca_stop =
      config.ca_stop ? *config.ca_stop : 1e-14 * std::max(1.0, ca0);
  trace.records.push_back(first);
  if (on_record) on_record(first, state);
  trace.snapshots.push_back(state);

  double dt_cur = cfl_dt(u0, config.sigma);
  std::int64_t accepted = 0;
  std::int64_t streak = 0;

  while (state.t < config.t_end) {
    const double remaining = config.t_end - state.t;
    if (remaining < std::max(config.dt_min, 1e-15 * config.t_end)) break;
    const double dt_formula = cfl_dt(state.u, config.sigma);
    double dt_try = std::min(dt_cur, dt_formula);
    dt_try = std::min(dt_try, remaining);

    std::optional<StepResult> res;
    try {
      res = step(state, dt_try, config.dt_min);
    } catch (const StiffnessFailureError&) {
      trace.termination = Termination::stiffness_failure;
      break;
    }
    state = std::move(res->state);
    ++accepted;
    if (res->rejections > 0) {
      dt_cur = res->dt_used;
      streak = 0;
    } else if (++streak >= 20) {
      dt_cur = std::min(2.0 * dt_cur, dt_formula);
      streak = 0;
    }

    DiagnosticsRecord rec = diagnose(state, res->dt_used, config);
    trace.records.push_back(rec);
    if (on_record) on_record(rec, state);
    if (accepted % config.record_every == 0) trace.snapshots.push_back(state);

    if (ca_stop > 0.0 && rec.Ca < ca_stop) {
      trace.termination = Termination::ca_stop;
      break;
    }
    if (rec.Ca > 1e3 * ca0 && rec.Ca > 1e-20) {
      trace.termination = Termination::blowup_suspected;
      break;
    }
    if (state.t >= config.t_end) {
      trace.termination = Termination::t_end;
      break;
    }
  }

  if (trace.snapshots.back().t != state.t) trace.snapshots.push_back(state);
  return trace;
}

DissipationReport dissipation_checks(const FlowTrace& trace) {
  const auto& snaps = trace.snapshots;
  if (snaps.size() < 3)
    throw ConfigError("dissipation_checks: need at least 3 snapshots");

  DissipationReport rep;
  for (std::size_t i = 0; i + 2 < snaps.size(); ++i) {
    const FlowState& a = snaps[i];
    const FlowState& b = snaps[i + 1];
    const FlowState& c = snaps[i + 2];
    const double dt1 = b.t - a.t;
    const double dt2 = c.t - b.t;
    if (dt1 <= 0.0 || std::abs(dt1 - dt2) > 1e-9 * dt1) continue;
    ++rep.triples;
    const double span = c.t - a.t;

    const Energies ea = energies(a.u);
    const Energies ec = energies(c.u);
    const PeriodicField Sb = scalar_curvature(b.u, CurvatureMethod::direct);

    // dCa/dt = -2 int S_ij u^{ia} S_ab u^{bj}
    const double flux = integrate(covariant_norm(Sb, b.u, 2));
    const double dca = (ec.Ca - ea.Ca) / span;
    rep.ca_rel_err = std::max(
        rep.ca_rel_err, std::abs(dca + 2.0 * flux) / std::max(std::abs(dca), 1e-300));

    // dMa/dt = -int S^2
    const GridSpec& g = b.u.spec();
    std::vector<double> s2(g.num_points());
    for (std::int64_t f = 0; f < g.num_points(); ++f) s2[f] = Sb[f] * Sb[f];
    const double ca_mid = integrate(PeriodicField(g, std::move(s2)));
    const double dma = (ec.Ma - ea.Ma) / span;
    rep.ma_rel_err = std::max(
        rep.ma_rel_err, std::abs(dma + ca_mid) / std::max(std::abs(dma), 1e-300));

    // d2u/dt2 = -dS/dt: thirteen-term formula vs centered difference of S.
    const PeriodicField Sa = scalar_curvature(a.u, CurvatureMethod::direct);
    const PeriodicField Sc = scalar_curvature(c.u, CurvatureMethod::direct);
    const PeriodicField star = d2u_dt2_star(b.u);
    double sup_diff = 0.0, sup_star = 0.0;
    for (std::int64_t f = 0; f < g.num_points(); ++f) {
      const double ds = -(Sc[f] - Sa[f]) / span;
      sup_diff = std::max(sup_diff, std::abs(star[f] - ds));
      sup_star = std::max(sup_star, std::abs(star[f]));
    }
    rep.star_rel_err =
        std::max(rep.star_rel_err, sup_diff / std::max(sup_star, 1e-300));
  }
  if (rep.triples == 0)
    throw ConfigError("dissipation_checks: no uniformly spaced snapshot triple");
  return rep;
}

SymplecticPotential blowup_extract(const FlowTrace& trace, double t) {
  const FlowState* found = nullptr;
  for (const FlowState& s : trace.snapshots)
    if (std::abs(s.t - t) <= 1e-12 * std::max(1.0, std::abs(t))) {
      found = &s;
      break;
    }
  if (!found) throw ConfigError("blowup_extract: no snapshot at requested time");

  const PeriodicField rm = riemann_norm(found->u);
  const GridSpec& g = found->u.spec();
  std::int64_t argmax = 0;
  double best = 0.0;
  for (std::int64_t f = 0; f < g.num_points(); ++f)
    if (rm[f] > best) {
      best = rm[f];
      argmax = f;
    }
  if (best <= 0.0)
    throw NumericalError("blowup_extract: curvature vanishes, nothing to blow up");

  const Vec p = g.point(g.unflatten(argmax));
  return rescale(found->u, best, p);
}

DecayFit fit_decay_rate(const FlowTrace& trace, double tail_fraction) {
  if (!(tail_fraction > 0.0) || tail_fraction >= 1.0)
    throw ConfigError("fit_decay_rate: tail_fraction must lie in (0, 1)");
  const auto& recs = trace.records;
  if (recs.size() < 2)
    throw ConfigError("fit_decay_rate: need at least 2 records");

  std::size_t start = recs.size() -
      std::max<std::size_t>(2, static_cast<std::size_t>(
                                   std::floor(tail_fraction * recs.size())));

  DecayFit fit;
  // Shrink to the last contiguous strictly positive stretch if needed.
  std::size_t end = recs.size();
  while (end > start && recs[end - 1].Ca <= 0.0) --end;
  for (std::size_t i = end; i-- > start;) {
    if (recs[i].Ca <= 0.0) {
      fit.truncated = true;
      start = i + 1;
      break;
    }
  }
  if (end < recs.size()) fit.truncated = true;
  if (end - start < 2)
    throw NumericalError("fit_decay_rate: fewer than 2 positive Ca records in tail");

  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0, syy = 0.0;
  const double m = static_cast<double>(end - start);
  for (std::size_t i = start; i < end; ++i) {
    const double x = recs[i].t;
    const double y = std::log(recs[i].Ca);
    st += x;
    sy += y;
    stt += x * x;
    sty += x * y;
    syy += y * y;
  }
  const double denom = m * stt - st * st;
  if (denom == 0.0) throw NumericalError("fit_decay_rate: degenerate time axis");
  const double slope = (m * sty - st * sy) / denom;
  fit.rate = -slope;

  const double mean_y = sy / m;
  double ss_tot = 0.0, ss_res = 0.0;
  const double intercept = (sy - slope * st) / m;
  for (std::size_t i = start; i < end; ++i) {
    const double y = std::log(recs[i].Ca);
    const double pred = intercept + slope * recs[i].t;
    ss_tot += (y - mean_y) * (y - mean_y);
    ss_res += (y - pred) * (y - pred);
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
  return fit;
}

}  // namespace calaflow
