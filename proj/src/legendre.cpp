#include "calaflow/legendre.hpp"

#include <cmath>
#include <sstream>

#include "calaflow/errors.hpp"
#include "calaflow/smallmat.hpp"

namespace calaflow {

namespace {

constexpr int kNewtonMaxIter = 50;
constexpr double kNewtonTol = 1e-12;

/// Solve grad w(xi) = target for xi, where w is a c=1 potential given through
/// its interpolated gradient and Hessian. Damped Newton, initial guess xi =
/// target (exact for the flat potential).
Vec invert_gradient(const SymplecticPotential& w, const Vec& target) {
  const int n = w.spec().n;
  Vec xi = target;

  auto residual = [&](const Vec& q, Vec& r) {
    const Vec grad = w.gradient(q);
    double norm2 = 0.0;
    for (int a = 0; a < n; ++a) {
      r[a] = grad[a] - target[a];
      norm2 += r[a] * r[a];
    }
    return std::sqrt(norm2);
  };

  Vec r{0.0, 0.0, 0.0};
  double rn = residual(xi, r);
  for (int it = 0; it < kNewtonMaxIter; ++it) {
    if (rn <= kNewtonTol) return xi;
    SymMat Hm = w.hessian_matrix(xi);
    SymMat inv = Hm.inverse();
    Vec step{0.0, 0.0, 0.0};
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) step[a] += inv(a, b) * r[b];

    double damp = 1.0;
    for (int bt = 0; bt < 30; ++bt) {
      Vec trial = xi;
      for (int a = 0; a < n; ++a) trial[a] -= damp * step[a];
      Vec rt{0.0, 0.0, 0.0};
      const double rtn = residual(trial, rt);
      if (rtn < rn) {
        xi = trial;
        r = rt;
        rn = rtn;
        break;
      }
      damp *= 0.5;
    }
  }
  if (rn <= kNewtonTol) return xi;
  std::ostringstream os;
  os << "Legendre transform: Newton failed to reach residual " << kNewtonTol
     << " (got " << rn << ") at node (";
  for (int a = 0; a < n; ++a) os << (a ? ", " : "") << target[a];
  os << ")";
  throw NumericalError(os.str());
}

/// Core transform: given a valid c=1 potential w, produce the dual periodic
/// part on the same GridSpec.
PeriodicField dual_periodic_part(const SymplecticPotential& w) {
  const GridSpec& g = w.spec();
  std::vector<double> vals(g.num_points());
  Idx idx{0, 0, 0};
  for (std::int64_t f = 0; f < g.num_points(); ++f) {
    const Vec x = g.point(idx);
    const Vec xi = invert_gradient(w, x);
    double dot = 0.0, q = 0.0;
    for (int a = 0; a < g.n; ++a) {
      dot += x[a] * xi[a];
      q += x[a] * x[a];
    }
    vals[f] = dot - w.u_value(xi) - 0.5 * q;
    for (int a = g.n - 1; a >= 0; --a) {
      if (++idx[a] < g.N) break;
      idx[a] = 0;
    }
  }
  return PeriodicField(g, std::move(vals));
}

}  // namespace

SymplecticPotential to_symplectic(const KahlerPotential& v) {
  return SymplecticPotential(1.0, dual_periodic_part(v.as_potential()));
}

KahlerPotential to_kahler(const SymplecticPotential& u) {
  if (u.c() != 1.0)
    throw ConfigError("to_kahler: requires c = 1 (the unrescaled flow)");
  return KahlerPotential(dual_periodic_part(u));
}

PhiThirdDerivatives phi_third_derivatives(const SymplecticPotential& u) {
  if (u.c() != 1.0)
    throw ConfigError("phi_third_derivatives: requires c = 1");
  const GridSpec& g = u.spec();
  const int n = g.n;
  const HessianData& H = u.hessian();

  std::vector<PeriodicField> d3;
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b)
      for (int c = b; c < n; ++c) {
        const int axes[3] = {a, b, c};
        d3.push_back(derivative(u.psi(), axes));
      }

  PhiThirdDerivatives out;
  const int n3 = sym3_count(n);
  std::vector<std::vector<double>> comps(n3, std::vector<double>(g.num_points()));
  for (std::int64_t f = 0; f < g.num_points(); ++f) {
    SymMat inv = H.inv_at(f);
    int t = 0;
    for (int j = 0; j < n; ++j)
      for (int k = j; k < n; ++k)
        for (int l = k; l < n; ++l) {
          double sum = 0.0;
          for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
              for (int c = 0; c < n; ++c)
                sum += inv(j, a) * inv(k, b) * inv(l, c) *
                       d3[sym3_index(a, b, c, n)][f];
          comps[t++][f] = -sum;
        }
  }
  for (int c = 0; c < n3; ++c)
    out.comps.emplace_back(g, std::move(comps[c]));

  // Dual points xi = grad u(x) at the grid nodes.
  const std::vector<PeriodicField>& grad = u.psi_gradient_fields();
  for (int a = 0; a < n; ++a) {
    std::vector<double> xi(g.num_points());
    Idx idx{0, 0, 0};
    for (std::int64_t f = 0; f < g.num_points(); ++f) {
      xi[f] = g.point(idx)[a] + grad[a][f];
      for (int b = g.n - 1; b >= 0; --b) {
        if (++idx[b] < g.N) break;
        idx[b] = 0;
      }
    }
    out.dual_point.emplace_back(g, std::move(xi));
  }
  return out;
}

}  // namespace calaflow
