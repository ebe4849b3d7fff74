#pragma once

#include <vector>

#include "calaflow/field.hpp"
#include "calaflow/potential.hpp"

namespace calaflow {

/// Dual-side potential v(xi) = |xi|^2/2 + phi(xi) with phi periodic. Shares
/// the representation (and the convexity validation) of the symplectic side.
class KahlerPotential {
 public:
  explicit KahlerPotential(PeriodicField phi) : rep_(1.0, std::move(phi)) {}

  const GridSpec& spec() const { return rep_.spec(); }
  const PeriodicField& phi() const { return rep_.psi(); }
  /// The same convex object viewed as a potential with c = 1.
  const SymplecticPotential& as_potential() const { return rep_; }

 private:
  SymplecticPotential rep_;
};

/// Legendre transform v -> u: per dual node x solve grad v(xi) = x by damped
/// Newton, then u(x) = x.xi - v(xi). Fails with NumericalError if any node
/// misses residual 1e-12 within 50 iterations.
SymplecticPotential to_symplectic(const KahlerPotential& v);

/// Inverse direction; requires c = 1.
KahlerPotential to_kahler(const SymplecticPotential& u);

/// Third derivatives of the dual potential pulled back to the primal grid:
/// comps[sym3(j,k,l)](x) = -u^{ja} u^{kb} u^{lc} u_{abc}(x), with the dual
/// point xi = grad u(x) returned alongside as component fields.
struct PhiThirdDerivatives {
  std::vector<PeriodicField> comps;      // packed symmetric 3-tensor
  std::vector<PeriodicField> dual_point; // xi_a(x), one field per axis
};

PhiThirdDerivatives phi_third_derivatives(const SymplecticPotential& u);

}  // namespace calaflow
