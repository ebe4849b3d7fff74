#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "calaflow/field.hpp"
#include "calaflow/potential.hpp"

namespace calaflow {

struct FlowConfig {
  double t_end = 0.0;
  double sigma = 0.1;           // CFL safety factor in (0, 1]
  double dt_min = 1e-18;        // below this, a rejected step is a failure
  std::optional<double> ca_stop;  // unset: 1e-14 * max(1, Ca(0)); 0 disables
  std::int64_t record_every = 1;  // snapshot stride in accepted steps
  std::int64_t m_segments = 8;    // random segments per M-condition estimate
  std::uint64_t seed = 0;

  void validate() const;
};

struct FlowState {
  double t = 0.0;
  SymplecticPotential u;
};

struct DiagnosticsRecord {
  double t = 0.0;
  double dt = 0.0;
  double Ca = 0.0;
  double Ma = 0.0;
  double L2 = 0.0;
  double psi_mean = 0.0;
  double max_Rm = 0.0;
  double eig_min = 0.0;
  double eig_max = 0.0;
  double M_estimate = 0.0;
  double inj_proxy = 0.0;
  double total_energy_n = 0.0;  // integral of |Rm|^n
};

enum class Termination { t_end, ca_stop, stiffness_failure, blowup_suspected };

std::string termination_name(Termination t);

struct FlowTrace {
  FlowConfig config;
  std::vector<DiagnosticsRecord> records;
  std::vector<FlowState> snapshots;
  Termination termination = Termination::t_end;
};

/// Right side of the flow: sum_ij (u^ij)_,ij = -S (direct form). Zero mean.
PeriodicField rhs(const SymplecticPotential& u);

/// Single RK4 attempt at the given dt. Returns nullopt when any stage or the
/// result loses convexity or finiteness (the step is rejected).
std::optional<FlowState> step_attempt(const FlowState& state, double dt);

struct StepResult {
  FlowState state;
  double dt_used = 0.0;
  int rejections = 0;
};

/// RK4 step with halving on rejection. Throws StiffnessFailureError once the
/// attempted dt falls below dt_min.
StepResult step(const FlowState& state, double dt, double dt_min = 1e-18);

/// Stability-limited step size for the linearized operator at u.
double cfl_dt(const SymplecticPotential& u, double sigma);

/// Adaptive run. Records diagnostics at every accepted step (and at t = 0),
/// snapshots every record_every accepted steps plus the final state.
/// `on_record`, when set, fires as each record is appended with the state it
/// describes (the CLI streams CSV rows through it so a killed run leaves a
/// parseable file; tests use the state for per-step assertions).
using RecordHook = std::function<void(const DiagnosticsRecord&, const FlowState&)>;
FlowTrace run(const SymplecticPotential& u0, const FlowConfig& config,
              const RecordHook& on_record = {});

struct DissipationReport {
  double ca_rel_err = 0.0;    // dCa/dt vs -2 int covariant_norm(S, u, 2)
  double ma_rel_err = 0.0;    // dMa/dt vs -int S^2
  double star_rel_err = 0.0;  // dS/dt vs -(thirteen-term formula), sup norm
  int triples = 0;            // uniform snapshot triples examined
};

/// Centered time-differences over uniformly spaced snapshot triples against
/// the analytic right sides at the middle snapshot; reports max relative
/// errors. Requires at least 3 consecutive uniformly spaced snapshots.
DissipationReport dissipation_checks(const FlowTrace& trace);

/// Locates p = argmax |Rm| in the snapshot at time t, sets lam = |Rm|(p) and
/// returns rescale(u, lam, p). Throws NumericalError when the curvature
/// vanishes (nothing to blow up).
SymplecticPotential blowup_extract(const FlowTrace& trace, double t);

struct DecayFit {
  double rate = 0.0;
  double r_squared = 0.0;
  bool truncated = false;  // fit window shrank to the last positive stretch
};

/// Least-squares slope of log Ca(t) over the trailing tail_fraction of the
/// records; rate = -slope.
DecayFit fit_decay_rate(const FlowTrace& trace, double tail_fraction);

}  // namespace calaflow
