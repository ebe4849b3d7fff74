#include "calaflow/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <vector>

#include "calaflow/errors.hpp"
#include "calaflow/star_kernel.hpp"

namespace calaflow {

namespace {

std::string point_to_string(const Vec& p, int n) {
  std::ostringstream os;
  os << "(";
  for (int a = 0; a < n; ++a) os << (a ? ", " : "") << p[a];
  os << ")";
  return os.str();
}

PeriodicField direct_curvature(const SymplecticPotential& u) {
  const GridSpec& g = u.spec();
  const HessianData& H = u.hessian();
  std::vector<double> acc(g.num_points(), 0.0);
  for (int i = 0; i < g.n; ++i)
    for (int j = i; j < g.n; ++j) {
      const int axes[2] = {i, j};
      PeriodicField d = derivative(H.inv[SymMat::pack_index(i, j, g.n)], axes);
      const double mult = (i == j) ? 1.0 : 2.0;
      for (std::int64_t f = 0; f < g.num_points(); ++f) acc[f] -= mult * d[f];
    }
  return PeriodicField(g, std::move(acc));
}

PeriodicField cofactor_curvature(const SymplecticPotential& u) {
  const GridSpec& g = u.spec();
  const HessianData& H = u.hessian();
  std::vector<double> w(g.num_points());
  for (std::int64_t f = 0; f < g.num_points(); ++f) w[f] = 1.0 / H.det[f];
  PeriodicField wf(g, std::move(w));

  std::vector<double> acc(g.num_points(), 0.0);
  for (int i = 0; i < g.n; ++i)
    for (int j = i; j < g.n; ++j) {
      const int axes[2] = {i, j};
      PeriodicField wij = derivative(wf, axes);
      const PeriodicField& inv = H.inv[SymMat::pack_index(i, j, g.n)];
      const double mult = (i == j) ? 1.0 : 2.0;
      for (std::int64_t f = 0; f < g.num_points(); ++f)
        acc[f] -= mult * (H.det[f] * inv[f]) * wij[f];
    }
  return PeriodicField(g, std::move(acc));
}

}  // namespace

PeriodicField scalar_curvature(const SymplecticPotential& u, CurvatureMethod method) {
  return method == CurvatureMethod::direct ? direct_curvature(u)
                                           : cofactor_curvature(u);
}

PeriodicField riemann_norm(const SymplecticPotential& u) {
  const GridSpec& g = u.spec();
  const HessianData& H = u.hessian();
  const int nc = sym2_count(g.n);

  // A[(ij)][(kl)] = (u^ij)_,kl as packed fields.
  std::vector<std::vector<PeriodicField>> A(nc);
  for (int c = 0; c < nc; ++c) {
    A[c].reserve(nc);
    for (int k = 0; k < g.n; ++k)
      for (int l = k; l < g.n; ++l) {
        const int axes[2] = {k, l};
        A[c].push_back(derivative(H.inv[c], axes));
      }
  }

  std::vector<double> out(g.num_points());
  for (std::int64_t f = 0; f < g.num_points(); ++f) {
    double sum = 0.0;
    for (int i = 0; i < g.n; ++i)
      for (int j = 0; j < g.n; ++j)
        for (int k = 0; k < g.n; ++k)
          for (int l = 0; l < g.n; ++l) {
            const int ij = SymMat::pack_index(i, j, g.n);
            const int kl = SymMat::pack_index(k, l, g.n);
            sum += A[ij][kl][f] * A[kl][ij][f];
          }
    if (sum < -1e-10) {
      Vec p = g.point(g.unflatten(f));
      std::ostringstream os;
      os << "riemann_norm: |Rm|^2 = " << sum << " is structurally negative at "
         << point_to_string(p, g.n);
      throw FormulaAnomalyError(os.str(), p);
    }
    out[f] = std::sqrt(std::max(sum, 0.0));
  }
  return PeriodicField(g, std::move(out));
}

Energies energies(const SymplecticPotential& u) {
  const GridSpec& g = u.spec();
  Energies e;
  PeriodicField S = scalar_curvature(u, CurvatureMethod::direct);
  std::vector<double> s2(g.num_points());
  for (std::int64_t f = 0; f < g.num_points(); ++f) s2[f] = S[f] * S[f];
  e.Ca = integrate(PeriodicField(g, std::move(s2)));

  std::vector<double> logdet(g.num_points());
  const HessianData& H = u.hessian();
  for (std::int64_t f = 0; f < g.num_points(); ++f) logdet[f] = std::log(H.det[f]);
  e.Ma = -integrate(PeriodicField(g, std::move(logdet)));

  std::vector<double> p2(g.num_points());
  for (std::int64_t f = 0; f < g.num_points(); ++f)
    p2[f] = u.psi()[f] * u.psi()[f];
  e.L2 = integrate(PeriodicField(g, std::move(p2)));
  e.psi_mean = integrate(u.psi()) / g.volume();
  return e;
}

double trace_pairing_kernel(const SymMat& hess, const SymMat& inv) {
  double s = 0.0;
  for (int i = 0; i < hess.n; ++i)
    for (int j = 0; j < hess.n; ++j) {
      const double d = (i == j) ? 1.0 : 0.0;
      s += (inv(i, j) - d) * (hess(i, j) - d);
    }
  return s;
}

PeriodicField trace_pairing(const SymplecticPotential& u) {
  const GridSpec& g = u.spec();
  const HessianData& H = u.hessian();
  std::vector<double> out(g.num_points());
  for (std::int64_t f = 0; f < g.num_points(); ++f)
    out[f] = trace_pairing_kernel(H.hess_at(f), H.inv_at(f));
  return PeriodicField(g, std::move(out));
}

PeriodicField covariant_norm(const PeriodicField& f, const SymplecticPotential& u,
                             int k) {
  if (k < 1 || k > 3)
    throw ConfigError("covariant_norm: derivative order k must be 1, 2 or 3");
  const GridSpec& g = u.spec();
  if (!(f.spec() == g))
    throw ConfigError("covariant_norm: field and potential grids differ");
  const HessianData& H = u.hessian();
  const int n = g.n;

  // Packed derivative tensor fields of f of rank k.
  std::vector<PeriodicField> T;
  if (k == 1) {
    for (int a = 0; a < n; ++a) {
      const int axes[1] = {a};
      T.push_back(derivative(f, axes));
    }
  } else if (k == 2) {
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b) {
        const int axes[2] = {a, b};
        T.push_back(derivative(f, axes));
      }
  } else {
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b)
        for (int c = b; c < n; ++c) {
          const int axes[3] = {a, b, c};
          T.push_back(derivative(f, axes));
        }
  }

  auto tensor_at = [&](std::int64_t flat, int i1, int i2, int i3) -> double {
    if (k == 1) return T[i1][flat];
    if (k == 2) return T[SymMat::pack_index(i1, i2, n)][flat];
    return T[sym3_index(i1, i2, i3, n)][flat];
  };

  std::vector<double> out(g.num_points(), 0.0);
  for (std::int64_t flat = 0; flat < g.num_points(); ++flat) {
    SymMat inv = H.inv_at(flat);
    double sum = 0.0;
    int idx_i[3] = {0, 0, 0}, idx_j[3] = {0, 0, 0};
    int count = 1;
    for (int c = 0; c < k; ++c) count *= n;
    for (int ii = 0; ii < count; ++ii) {
      int rem = ii;
      for (int c = 0; c < k; ++c) {
        idx_i[c] = rem % n;
        rem /= n;
      }
      const double fi = tensor_at(flat, idx_i[0], idx_i[1], idx_i[2]);
      for (int jj = 0; jj < count; ++jj) {
        rem = jj;
        for (int c = 0; c < k; ++c) {
          idx_j[c] = rem % n;
          rem /= n;
        }
        double w = 1.0;
        for (int c = 0; c < k; ++c) w *= inv(idx_i[c], idx_j[c]);
        sum += w * fi * tensor_at(flat, idx_j[0], idx_j[1], idx_j[2]);
      }
    }
    out[flat] = sum;
  }
  return PeriodicField(g, std::move(out));
}

namespace {

// Wrap a coordinate displacement to the nearest periodic representative.
double wrap_delta(double d, double scale) {
  while (d > 0.5 * scale) d -= scale;
  while (d < -0.5 * scale) d += scale;
  return d;
}

double edge_weight(const SymplecticPotential& u, const Vec& a, const Vec& b) {
  const int n = u.spec().n;
  const double scale = u.spec().scale;
  Vec mid{0.0, 0.0, 0.0}, d{0.0, 0.0, 0.0};
  for (int c = 0; c < n; ++c) {
    d[c] = wrap_delta(b[c] - a[c], scale);
    mid[c] = a[c] + 0.5 * d[c];
  }
  SymMat H = u.hessian_matrix(mid);
  double q = H.quad(d.data());
  return std::sqrt(std::max(q, 0.0));
}

}  // namespace

double riemannian_distance(const SymplecticPotential& u, const Vec& x, const Vec& y) {
  const GridSpec& g = u.spec();
  const int n = g.n;
  const std::int64_t total = g.num_points();

  bool same = true;
  for (int a = 0; a < n; ++a) same = same && x[a] == y[a];
  if (same) return 0.0;

  auto nearest_node = [&](const Vec& p) {
    Idx idx{0, 0, 0};
    for (int a = 0; a < n; ++a) {
      double t = (p[a] / g.scale + 0.5) * g.N;
      std::int64_t i = static_cast<std::int64_t>(std::llround(t)) % g.N;
      if (i < 0) i += g.N;
      idx[a] = static_cast<int>(i);
    }
    return idx;
  };

  const Idx sx = nearest_node(x);
  const Idx sy = nearest_node(y);
  const std::int64_t src = g.flatten(sx);
  const std::int64_t dst = g.flatten(sy);
  const double w_in = edge_weight(u, x, g.point(sx));
  const double w_out = edge_weight(u, g.point(sy), y);

  if (src == dst) return w_in + w_out;

  // Neighbor offsets: all nonzero vectors in {-1,0,1}^n.
  std::vector<Idx> offsets;
  int count = 1;
  for (int a = 0; a < n; ++a) count *= 3;
  for (int t = 0; t < count; ++t) {
    Idx off{0, 0, 0};
    int rem = t;
    bool nonzero = false;
    for (int a = 0; a < n; ++a) {
      off[a] = rem % 3 - 1;
      rem /= 3;
      nonzero = nonzero || off[a] != 0;
    }
    if (nonzero) offsets.push_back(off);
  }

  std::vector<double> dist(total, std::numeric_limits<double>::infinity());
  using Entry = std::pair<double, std::int64_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> pq;
  dist[src] = 0.0;
  pq.emplace(0.0, src);

  while (!pq.empty()) {
    auto [d0, node] = pq.top();
    pq.pop();
    if (d0 > dist[node]) continue;
    if (node == dst) break;
    const Idx idx = g.unflatten(node);
    const Vec p = g.point(idx);
    for (const Idx& off : offsets) {
      Idx nb = idx;
      for (int a = 0; a < n; ++a) {
        nb[a] += off[a];
        if (nb[a] < 0) nb[a] += g.N;
        if (nb[a] >= g.N) nb[a] -= g.N;
      }
      const std::int64_t nf = g.flatten(nb);
      const double w = edge_weight(u, p, g.point(nb));
      if (dist[node] + w < dist[nf]) {
        dist[nf] = dist[node] + w;
        pq.emplace(dist[nf], nf);
      }
    }
  }
  return w_in + dist[dst] + w_out;
}

double hessian_comparison_margin(const SymplecticPotential& u, const Vec& x,
                                 const Vec& y) {
  const double max_rm = riemann_norm(u).max_abs();
  // Slack matches the blow-up normalization tolerance on |Rm|(0) = 1.
  if (max_rm > 1.0 + 1e-3)
    throw ConfigError("hessian_comparison_margin: requires max|Rm| <= 1, got " +
                      std::to_string(max_rm));
  const double d = riemannian_distance(u, x, y);
  const double decay = std::exp(-2.0 * d);
  SymMat Hx = u.hessian_matrix(x);
  SymMat Hy = u.hessian_matrix(y);
  SymMat M;
  M.n = u.spec().n;
  for (int k = 0; k < sym2_count(M.n); ++k) M.m[k] = Hy.m[k] - decay * Hx.m[k];
  double lo, hi;
  M.eig_range(lo, hi);
  return lo;
}

PeriodicField d2u_dt2_star(const SymplecticPotential& u) {
  const GridSpec& g = u.spec();
  const int n = g.n;
  const HessianData& H = u.hessian();

  // Third and fourth derivatives of u (the quadratic part drops out).
  std::vector<PeriodicField> d3;
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b)
      for (int c = b; c < n; ++c) {
        const int axes[3] = {a, b, c};
        d3.push_back(derivative(u.psi(), axes));
      }
  std::vector<PeriodicField> d4;
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b)
      for (int c = b; c < n; ++c)
        for (int d = c; d < n; ++d) {
          const int axes[4] = {a, b, c, d};
          d4.push_back(derivative(u.psi(), axes));
        }

  // S and its derivatives up to order four, all from the direct form.
  PeriodicField S = scalar_curvature(u, CurvatureMethod::direct);
  std::vector<PeriodicField> s2, s3, s4;
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) {
      const int axes[2] = {a, b};
      s2.push_back(derivative(S, axes));
    }
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b)
      for (int c = b; c < n; ++c) {
        const int axes[3] = {a, b, c};
        s3.push_back(derivative(S, axes));
      }
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b)
      for (int c = b; c < n; ++c)
        for (int d = c; d < n; ++d) {
          const int axes[4] = {a, b, c, d};
          s4.push_back(derivative(S, axes));
        }

  const int n2 = sym2_count(n), n3 = sym3_count(n), n4 = sym4_count(n);
  std::vector<double> out(g.num_points());
  std::vector<double> inv_v(n2), d3_v(n3), d4_v(n4), s2_v(n2), s3_v(n3), s4_v(n4);
  for (std::int64_t f = 0; f < g.num_points(); ++f) {
    for (int c = 0; c < n2; ++c) inv_v[c] = H.inv[c][f];
    for (int c = 0; c < n3; ++c) d3_v[c] = d3[c][f];
    for (int c = 0; c < n4; ++c) d4_v[c] = d4[c][f];
    for (int c = 0; c < n2; ++c) s2_v[c] = s2[c][f];
    for (int c = 0; c < n3; ++c) s3_v[c] = s3[c][f];
    for (int c = 0; c < n4; ++c) s4_v[c] = s4[c][f];
    out[f] = star_terms_kernel<double>(n, inv_v, d3_v, d4_v, s2_v, s3_v, s4_v);
  }
  return PeriodicField(g, std::move(out));
}

}  // namespace calaflow
