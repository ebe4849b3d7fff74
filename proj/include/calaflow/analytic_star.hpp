#pragma once

#include <array>
#include <functional>
#include <utility>

#include "calaflow/field.hpp"

namespace calaflow {

using LVec = std::array<long double, kMaxDim>;

/// Pointwise potential for the local (off-grid) evaluator. Long double so the
/// nested stencils reach the accuracy the rotation-invariance check needs.
using AnalyticPotential = std::function<long double(const LVec&)>;

/// d2u/dt2 at one point, computed from the callable alone via local uniform
/// stencils with Richardson refinement. Never touches a periodic grid.
double star_at_point(const AnalyticPotential& u, int n, const Vec& x,
                     double spacing = 0.02);

/// Evaluates the second-time-derivative formula at x for u and at the mapped
/// point for the rotated potential v(z) = u(zR), R orthogonal (checked to
/// 1e-12). Returns {original, rotated}; the pair should agree.
std::pair<double, double> star_rotation_invariance(
    const AnalyticPotential& u, int n, const std::array<std::array<double, 3>, 3>& R,
    const Vec& x, double spacing = 0.02);

}  // namespace calaflow
