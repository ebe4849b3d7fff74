#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "calaflow/field.hpp"
#include "calaflow/smallmat.hpp"

namespace calaflow {

/// Per-grid-point bundle of the Hessian of u, its inverse, determinant and
/// extreme eigenvalues. Components are packed fields indexed by
/// SymMat::pack_index.
struct HessianData {
  GridSpec spec;
  std::vector<PeriodicField> hess;  // u_ij
  std::vector<PeriodicField> inv;   // u^ij
  PeriodicField det;
  PeriodicField eig_min;
  PeriodicField eig_max;
  double eig_min_global = 0.0;
  double eig_max_global = 0.0;

  SymMat hess_at(std::int64_t flat) const;
  SymMat inv_at(std::int64_t flat) const;
};

struct MConditionReport {
  double M_estimate = 0.0;
  Vec worst_p0{};
  Vec worst_p3{};
  std::int64_t samples = 0;
};

struct SupNorms {
  double sup_u = 0.0;
  double sup_grad = 0.0;
  double psi_mean = 0.0;
};

/// Convex potential u(x) = c|x|^2/2 + psi(x) with psi periodic. Construction
/// validates finiteness and strong convexity at every grid node and caches the
/// Hessian bundle; further derived data (gradients, interpolants) is built
/// lazily on first use. Instances are immutable and safe to share.
class SymplecticPotential {
 public:
  SymplecticPotential(double c, PeriodicField psi);

  const GridSpec& spec() const { return psi_.spec(); }
  double c() const { return c_; }
  const PeriodicField& psi() const { return psi_; }

  /// u at a grid node by flat index.
  double u_at(std::int64_t flat) const;
  /// u at an arbitrary point (interpolated psi part).
  double u_value(const Vec& x) const;
  /// grad u at an arbitrary point (interpolated psi gradient).
  Vec gradient(const Vec& x) const;
  /// Hessian of u at an arbitrary point (interpolated psi Hessian).
  SymMat hessian_matrix(const Vec& x) const;

  const HessianData& hessian() const { return *hess_; }
  std::shared_ptr<const HessianData> hessian_ptr() const { return hess_; }

  /// Gradient component fields of psi (lazy).
  const std::vector<PeriodicField>& psi_gradient_fields() const;

 private:
  struct GradCache;    // psi gradient fields + interpolants (M-estimates)
  struct InterpCache;  // psi and Hessian interpolants (rescale, distances)
  struct CacheBox;     // once-flags + built caches, shared across copies
  const GradCache& grad_cache() const;
  const InterpCache& interp_cache() const;

  double c_;
  PeriodicField psi_;
  std::shared_ptr<const HessianData> hess_;
  std::shared_ptr<CacheBox> cache_box_;
};

/// Hessian bundle of u (cached on the potential itself).
inline const HessianData& hessian_data(const SymplecticPotential& u) {
  return u.hessian();
}

/// Donaldson-style segment estimator: max over tested segments of
/// |grad_nu u(p1) - grad_nu u(p2)| at the trisection points. Tests all
/// axis-aligned full-length grid-row segments, the main diagonals of the
/// domain, and n_segments seeded random segments.
MConditionReport m_condition_estimate(const SymplecticPotential& u,
                                      std::int64_t n_segments,
                                      std::uint64_t rng_seed);

/// Blow-up rescaling centered at p: scale -> lam*scale, c -> c/lam,
/// psi(x) -> lam*(psi(p + x/lam) - psi(p)), resampled on the same N.
/// The value normalization makes u(0) = 0 when p is the recentring point; the
/// gradient part of the affine normalization is not representable with a
/// periodic psi and is metrically irrelevant (see README).
SymplecticPotential rescale(const SymplecticPotential& u, double lam,
                            const Vec& p);

/// Sup over grid nodes of |u| and |grad u|, plus mean of psi.
SupNorms sup_norms(const SymplecticPotential& u);

/// Deterministic uniform double in [0,1) from a raw 64-bit generator output.
double rng_unit(std::uint64_t raw);

}  // namespace calaflow
