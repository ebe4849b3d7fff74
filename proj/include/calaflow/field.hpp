#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace calaflow {

inline constexpr int kMaxDim = 3;

/// A point or direction in the fundamental domain. Only the first n entries
/// of a Vec are meaningful for an n-dimensional grid; the rest must be 0.
using Vec = std::array<double, kMaxDim>;
using Idx = std::array<int, kMaxDim>;

/// Uniform periodic grid over the fundamental domain scale*[-1/2, 1/2)^n.
/// The right endpoint is the periodic alias of the left one and is not stored.
struct GridSpec {
  int n = 1;
  int N = 16;
  double scale = 1.0;

  GridSpec() = default;
  GridSpec(int n, int N, double scale);

  double h() const { return scale / N; }
  double volume() const;
  std::int64_t num_points() const;

  /// Grid node of a multi-index: x_a = scale*(k_a/N - 1/2).
  Vec point(const Idx& idx) const;
  std::int64_t flatten(const Idx& idx) const;  // row-major
  Idx unflatten(std::int64_t flat) const;

  bool operator==(const GridSpec& other) const = default;
};

/// Sampled real field on a GridSpec, periodic by index arithmetic.
class PeriodicField {
 public:
  PeriodicField(GridSpec spec, std::vector<double> values);
  static PeriodicField zeros(const GridSpec& spec);

  const GridSpec& spec() const { return spec_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::int64_t flat) const { return values_[flat]; }
  double at(const Idx& idx) const { return values_[spec_.flatten(idx)]; }
  std::int64_t size() const { return static_cast<std::int64_t>(values_.size()); }

  double max_abs() const;

 private:
  GridSpec spec_;
  std::vector<double> values_;
};

/// values[idx] = f(grid point of idx). Rejects non-finite samples, naming the
/// offending node. Periodicity of f is the caller's responsibility.
PeriodicField sample_function(const std::function<double(const Vec&)>& f,
                              const GridSpec& spec);

/// Mixed partial derivative. `axes` lists one 0-based axis per differentiation,
/// e.g. {0,0} is the second derivative along axis 0 and {0,1} the cross term.
/// Centered stencils of formal order 4, periodic wrap, total order <= 4.
/// The axis list is canonicalized (sorted) so mixed partials commute bitwise.
PeriodicField derivative(const PeriodicField& field, std::span<const int> axes);

/// h^n * sum of values, accumulated in a fixed pairwise order.
double integrate(const PeriodicField& field);

/// Periodic cubic-spline interpolation, exact at grid nodes. Build one of
/// these when evaluating the same field at many points: construction runs the
/// spline prefilter once, evaluation is a local 4^n-tap kernel.
class CubicInterpolant {
 public:
  explicit CubicInterpolant(const PeriodicField& field);
  double operator()(const Vec& point) const;
  const GridSpec& spec() const { return spec_; }

 private:
  GridSpec spec_;
  std::vector<double> coeff_;
};

/// One-off interpolation (builds a CubicInterpolant internally).
double interpolate(const PeriodicField& field, const Vec& point);

/// Discrete Fourier coefficient (1/N^n) sum values * exp(-2*pi*i k.(idx/N)).
/// Requires |k_j| < N/2 on every axis.
std::complex<double> fourier_mode(const PeriodicField& field, const Idx& k);

/// Deterministic pairwise reduction; the one summation order used everywhere.
double pairwise_sum(std::span<const double> v);

// Field arithmetic used by the flow integrator. All return fresh fields.
PeriodicField field_add_scaled(const PeriodicField& a, double s,
                               const PeriodicField& b);
PeriodicField field_scale(double s, const PeriodicField& a);

}  // namespace calaflow
