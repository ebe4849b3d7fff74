#pragma once

#include <utility>

#include "calaflow/field.hpp"
#include "calaflow/potential.hpp"

namespace calaflow {

enum class CurvatureMethod { direct, cofactor };

/// Scalar curvature field of u. `direct` differentiates the inverse Hessian,
/// S = -sum_ij (u^ij)_,ij; `cofactor` contracts the cofactor matrix with the
/// derivatives of 1/det and exists as an independent cross-check.
PeriodicField scalar_curvature(const SymplecticPotential& u,
                               CurvatureMethod method = CurvatureMethod::direct);

/// Pointwise sqrt of sum_ijkl (u^ij)_,kl (u^kl)_,ij. Values in (-1e-10, 0)
/// are clamped to zero; anything more negative raises FormulaAnomalyError.
PeriodicField riemann_norm(const SymplecticPotential& u);

struct Energies {
  double Ca = 0.0;        // integral of S^2
  double Ma = 0.0;        // -integral of log det D2u
  double L2 = 0.0;        // integral of psi^2
  double psi_mean = 0.0;  // integral of psi / volume
};

Energies energies(const SymplecticPotential& u);

/// Pointwise sum_ij (u^ij - delta_ij)(u_ij - delta_ij); nonpositive for any
/// positive-definite Hessian.
PeriodicField trace_pairing(const SymplecticPotential& u);

/// The trace-pairing value for one Hessian/inverse pair.
double trace_pairing_kernel(const SymMat& hess, const SymMat& inv);

/// Squared metric norm of the k-th derivative tensor of f, k in {1,2,3}:
/// |D^k f|_g^2 = u^{i1 j1} ... u^{ik jk} f_{i1..ik} f_{j1..jk}.
PeriodicField covariant_norm(const PeriodicField& f, const SymplecticPotential& u,
                             int k);

/// Shortest-path length between x and y in the grid graph with the full
/// {-1,0,1}^n neighbor stencil and edge weight sqrt(dx . u_ij(mid) . dx);
/// an upper bound on the base-metric distance. Endpoints snap to the nearest
/// node with an explicit connecting segment.
double riemannian_distance(const SymplecticPotential& u, const Vec& x, const Vec& y);

/// Min eigenvalue of u_ij(y) - exp(-2 d(x,y)) u_ij(x); nonnegative whenever
/// max|Rm| <= 1 (precondition, checked with the blow-up normalization slack).
double hessian_comparison_margin(const SymplecticPotential& u, const Vec& x,
                                 const Vec& y);

/// The thirteen-term formula for d2u/dt2 = -dS/dt evaluated on the grid.
PeriodicField d2u_dt2_star(const SymplecticPotential& u);

}  // namespace calaflow
