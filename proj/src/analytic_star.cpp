#include "calaflow/analytic_star.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "calaflow/errors.hpp"
#include "calaflow/smallmat.hpp"
#include "calaflow/star_kernel.hpp"

namespace calaflow {

namespace {

using LD = long double;

struct LocalStencil {
  int radius;
  std::array<LD, 7> coeff;  // per h^order
};

const LocalStencil& local_stencil(int order) {
  static const LocalStencil k1{2, {1.0L / 12, -8.0L / 12, 0.0L, 8.0L / 12, -1.0L / 12, 0, 0}};
  static const LocalStencil k2{2, {-1.0L / 12, 16.0L / 12, -30.0L / 12, 16.0L / 12, -1.0L / 12, 0, 0}};
  static const LocalStencil k3{3, {1.0L / 8, -1.0L, 13.0L / 8, 0.0L, -13.0L / 8, 1.0L, -1.0L / 8}};
  static const LocalStencil k4{3, {-1.0L / 6, 2.0L, -13.0L / 2, 28.0L / 3, -13.0L / 2, 2.0L, -1.0L / 6}};
  switch (order) {
    case 1: return k1;
    case 2: return k2;
    case 3: return k3;
    default: return k4;
  }
}

/// Values on a cube of side 2R+1 around a center point, spacing delta.
struct LocalField {
  int n;
  int radius;
  LD delta;
  std::vector<LD> vals;  // row-major over [-R..R]^n

  int side() const { return 2 * radius + 1; }
  std::int64_t flat(const int* off) const {
    std::int64_t f = 0;
    for (int a = 0; a < n; ++a) f = f * side() + (off[a] + radius);
    return f;
  }
  LD at(const int* off) const { return vals[flat(off)]; }
  LD center() const {
    int zero[kMaxDim] = {0, 0, 0};
    return at(zero);
  }
};

LocalField sample_local(const AnalyticPotential& u, int n, const LVec& x, LD delta,
                        int radius) {
  LocalField f{n, radius, delta, {}};
  const int side = f.side();
  std::int64_t total = 1;
  for (int a = 0; a < n; ++a) total *= side;
  f.vals.resize(total);
  int off[kMaxDim] = {0, 0, 0};
  for (int a = 0; a < n; ++a) off[a] = -radius;
  for (std::int64_t t = 0; t < total; ++t) {
    LVec p = x;
    for (int a = 0; a < n; ++a) p[a] += off[a] * delta;
    f.vals[t] = u(p);
    for (int a = n - 1; a >= 0; --a) {
      if (++off[a] <= radius) break;
      off[a] = -radius;
    }
  }
  return f;
}

/// One derivative pass along `axis`; output loses `radius` cells of margin.
LocalField local_derivative_pass(const LocalField& in, int axis, int order) {
  const LocalStencil& st = local_stencil(order);
  LocalField out{in.n, in.radius - st.radius, in.delta, {}};
  const int side = out.side();
  std::int64_t total = 1;
  for (int a = 0; a < in.n; ++a) total *= side;
  out.vals.resize(total);
  LD inv_h = 1.0L;
  for (int o = 0; o < order; ++o) inv_h /= in.delta;

  int off[kMaxDim] = {0, 0, 0};
  for (int a = 0; a < in.n; ++a) off[a] = -out.radius;
  for (std::int64_t t = 0; t < total; ++t) {
    const LD center = in.at(off);
    LD acc = 0.0L;
    int tap[kMaxDim] = {off[0], off[1], off[2]};
    for (int s = -st.radius; s <= st.radius; ++s) {
      if (s == 0) continue;
      tap[axis] = off[axis] + s;
      acc += st.coeff[s + st.radius] * (in.at(tap) - center);
    }
    out.vals[t] = acc * inv_h;
    for (int a = in.n - 1; a >= 0; --a) {
      if (++off[a] <= out.radius) break;
      off[a] = -out.radius;
    }
  }
  return out;
}

/// Restrict a local field to a smaller concentric cube.
LocalField crop(const LocalField& in, int radius) {
  if (radius == in.radius) return in;
  LocalField out{in.n, radius, in.delta, {}};
  std::int64_t total = 1;
  for (int a = 0; a < in.n; ++a) total *= out.side();
  out.vals.resize(total);
  int off[kMaxDim] = {0, 0, 0};
  for (int a = 0; a < in.n; ++a) off[a] = -radius;
  for (std::int64_t t = 0; t < total; ++t) {
    out.vals[t] = in.at(off);
    for (int a = in.n - 1; a >= 0; --a) {
      if (++off[a] <= radius) break;
      off[a] = -radius;
    }
  }
  return out;
}

LocalField local_derivative(const LocalField& in, std::span<const int> axes) {
  std::array<int, 4> sorted{};
  std::copy(axes.begin(), axes.end(), sorted.begin());
  std::sort(sorted.begin(), sorted.begin() + axes.size());
  LocalField cur = in;
  std::size_t i = 0;
  while (i < axes.size()) {
    const int axis = sorted[i];
    int order = 0;
    while (i < axes.size() && sorted[i] == axis) {
      ++order;
      ++i;
    }
    cur = local_derivative_pass(cur, axis, order);
  }
  return cur;
}

/// Derivative of a local field evaluated at the center only.
LD center_derivative(const LocalField& in, std::span<const int> axes) {
  return local_derivative(in, axes).center();
}

double star_single(const AnalyticPotential& u, int n, const LVec& x, LD delta) {
  // Margin budget (uniform-radius accounting, worst mixed-derivative chains):
  // S needs radius 5 for its 4th derivatives, the inverse Hessian needs 9,
  // the raw samples need 13.
  const int r_u = 13;
  const int r_h = 9;
  const int r_s = 5;
  LocalField U = sample_local(u, n, x, delta, r_u);

  // Hessian components, then the pointwise inverse, on a common cube.
  const int nc2 = sym2_count(n);
  std::vector<LocalField> hess;
  hess.reserve(nc2);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const int axes[2] = {i, j};
      hess.push_back(crop(local_derivative(U, axes), r_h));
    }

  std::vector<LocalField> inv(nc2);
  for (int c = 0; c < nc2; ++c)
    inv[c] = LocalField{n, r_h, delta, std::vector<LD>(hess[0].vals.size())};
  for (std::size_t t = 0; t < hess[0].vals.size(); ++t) {
    // Long-double symmetric inverse via adjugate.
    LD a = hess[SymMat::pack_index(0, 0, n)].vals[t];
    if (n == 1) {
      inv[0].vals[t] = 1.0L / a;
    } else if (n == 2) {
      LD b = hess[1].vals[t], d = hess[2].vals[t];
      LD det = a * d - b * b;
      inv[0].vals[t] = d / det;
      inv[1].vals[t] = -b / det;
      inv[2].vals[t] = a / det;
    } else {
      LD b = hess[1].vals[t], c = hess[2].vals[t];
      LD d = hess[3].vals[t], e = hess[4].vals[t], f = hess[5].vals[t];
      LD det = a * (d * f - e * e) - b * (b * f - e * c) + c * (b * e - d * c);
      inv[0].vals[t] = (d * f - e * e) / det;
      inv[1].vals[t] = (c * e - b * f) / det;
      inv[2].vals[t] = (b * e - c * d) / det;
      inv[3].vals[t] = (a * f - c * c) / det;
      inv[4].vals[t] = (b * c - a * e) / det;
      inv[5].vals[t] = (a * d - b * b) / det;
    }
  }

  // S = -sum_ij (u^ij)_,ij on a further-shrunken cube.
  LocalField S{n, 0, delta, {}};
  {
    bool first = true;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        const int axes[2] = {i, j};
        LocalField d = crop(local_derivative(inv[SymMat::pack_index(i, j, n)], axes), r_s);
        const LD mult = (i == j) ? 1.0L : 2.0L;
        if (first) {
          S = d;
          for (LD& v : S.vals) v *= -mult;
          first = false;
        } else {
          for (std::size_t t = 0; t < S.vals.size(); ++t)
            S.vals[t] -= mult * d.vals[t];
        }
      }
  }

  const int n2 = sym2_count(n), n3 = sym3_count(n), n4 = sym4_count(n);
  std::vector<LD> inv_c(n2), d3_c(n3), d4_c(n4), s2_c(n2), s3_c(n3), s4_c(n4);

  for (int c = 0; c < n2; ++c) {
    int zero[kMaxDim] = {0, 0, 0};
    inv_c[c] = inv[c].at(zero);
  }
  {
    int t = 0;
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b)
        for (int c = b; c < n; ++c) {
          const int axes[3] = {a, b, c};
          d3_c[t++] = center_derivative(U, axes);
        }
    t = 0;
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b)
        for (int c = b; c < n; ++c)
          for (int d = c; d < n; ++d) {
            const int axes[4] = {a, b, c, d};
            d4_c[t++] = center_derivative(U, axes);
          }
    t = 0;
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b) {
        const int axes[2] = {a, b};
        s2_c[t++] = center_derivative(S, axes);
      }
    t = 0;
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b)
        for (int c = b; c < n; ++c) {
          const int axes[3] = {a, b, c};
          s3_c[t++] = center_derivative(S, axes);
        }
    t = 0;
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b)
        for (int c = b; c < n; ++c)
          for (int d = c; d < n; ++d) {
            const int axes[4] = {a, b, c, d};
            s4_c[t++] = center_derivative(S, axes);
          }
  }

  return static_cast<double>(
      star_terms_kernel<LD>(n, inv_c, d3_c, d4_c, s2_c, s3_c, s4_c));
}

}  // namespace

double star_at_point(const AnalyticPotential& u, int n, const Vec& x, double spacing) {
  LVec lx{0.0L, 0.0L, 0.0L};
  for (int a = 0; a < n; ++a) lx[a] = static_cast<LD>(x[a]);
  const LD d = static_cast<LD>(spacing);
  // Fourth-order stencils; Richardson with spacings d and d/2.
  const double coarse = star_single(u, n, lx, d);
  const double fine = star_single(u, n, lx, d / 2.0L);
  return (16.0 * fine - coarse) / 15.0;
}

std::pair<double, double> star_rotation_invariance(
    const AnalyticPotential& u, int n, const std::array<std::array<double, 3>, 3>& R,
    const Vec& x, double spacing) {
  // Orthogonality: R^T R = I within 1e-12 on the active n x n block.
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += R[k][i] * R[k][j];
      if (std::abs(s - (i == j ? 1.0 : 0.0)) > 1e-12)
        throw ConfigError("star_rotation_invariance: R is not orthogonal");
    }

  const double original = star_at_point(u, n, x, spacing);

  // v(z) = u(zR); the point x maps to y = x R^T in the rotated coordinates.
  AnalyticPotential v = [u, R, n](const LVec& z) {
    LVec w{0.0L, 0.0L, 0.0L};
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) w[j] += z[i] * static_cast<LD>(R[i][j]);
    return u(w);
  };
  Vec y{0.0, 0.0, 0.0};
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) y[j] += x[i] * R[j][i];

  const double rotated = star_at_point(v, n, y, spacing);
  return {original, rotated};
}

}  // namespace calaflow
