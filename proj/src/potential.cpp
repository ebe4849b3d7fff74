#include "calaflow/potential.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "calaflow/errors.hpp"

namespace calaflow {

namespace {

std::string point_to_string(const Vec& p, int n) {
  std::ostringstream os;
  os << "(";
  for (int a = 0; a < n; ++a) os << (a ? ", " : "") << p[a];
  os << ")";
  return os.str();
}

std::shared_ptr<const HessianData> build_hessian(double c, const PeriodicField& psi) {
  const GridSpec& g = psi.spec();
  const int nc = sym2_count(g.n);
  const std::int64_t total = g.num_points();

  std::vector<PeriodicField> hess;
  hess.reserve(nc);
  for (int i = 0; i < g.n; ++i)
    for (int j = i; j < g.n; ++j) {
      const int axes[2] = {i, j};
      hess.push_back(derivative(psi, axes));
    }

  // Add the quadratic part c * delta_ij on the diagonal components.
  for (int i = 0; i < g.n; ++i) {
    const int pk = SymMat::pack_index(i, i, g.n);
    std::vector<double> vals(hess[pk].values().begin(), hess[pk].values().end());
    for (double& v : vals) v += c;
    hess[pk] = PeriodicField(g, std::move(vals));
  }

  std::vector<std::vector<double>> inv_vals(nc, std::vector<double>(total));
  std::vector<double> det_vals(total), lo_vals(total), hi_vals(total);
  double lo_global = std::numeric_limits<double>::infinity();
  double hi_global = -std::numeric_limits<double>::infinity();
  std::int64_t worst = -1;

  for (std::int64_t f = 0; f < total; ++f) {
    SymMat H;
    H.n = g.n;
    for (int k = 0; k < nc; ++k) H.m[k] = hess[k][f];
    double lo, hi;
    H.eig_range(lo, hi);
    lo_vals[f] = lo;
    hi_vals[f] = hi;
    det_vals[f] = H.det();
    if (lo <= 0.0 && worst < 0) worst = f;
    if (lo < lo_global) lo_global = lo;
    if (hi > hi_global) hi_global = hi;
    if (lo > 0.0) {
      SymMat inv = H.inverse();
      for (int k = 0; k < nc; ++k) inv_vals[k][f] = inv.m[k];
    }
  }

  if (worst >= 0) {
    Vec p = g.point(g.unflatten(worst));
    std::ostringstream os;
    os << "convexity loss: min Hessian eigenvalue " << lo_vals[worst]
       << " <= 0 at grid point " << point_to_string(p, g.n);
    throw ConvexityLossError(os.str(), p);
  }

  auto data = std::make_shared<HessianData>(HessianData{
      g,
      std::move(hess),
      {},
      PeriodicField(g, std::move(det_vals)),
      PeriodicField(g, std::move(lo_vals)),
      PeriodicField(g, std::move(hi_vals)),
      lo_global,
      hi_global});
  data->inv.reserve(nc);
  for (int k = 0; k < nc; ++k)
    data->inv.emplace_back(g, std::move(inv_vals[k]));
  return data;
}

}  // namespace

SymMat HessianData::hess_at(std::int64_t flat) const {
  SymMat H;
  H.n = spec.n;
  for (int k = 0; k < sym2_count(spec.n); ++k) H.m[k] = hess[k][flat];
  return H;
}

SymMat HessianData::inv_at(std::int64_t flat) const {
  SymMat H;
  H.n = spec.n;
  for (int k = 0; k < sym2_count(spec.n); ++k) H.m[k] = inv[k][flat];
  return H;
}

struct SymplecticPotential::GradCache {
  std::vector<PeriodicField> grad;            // psi_,a
  std::vector<CubicInterpolant> grad_interp;  // one per axis
};

struct SymplecticPotential::InterpCache {
  std::vector<CubicInterpolant> hess_interp;  // one per packed component
  std::unique_ptr<CubicInterpolant> psi_interp;
};

struct SymplecticPotential::CacheBox {
  std::once_flag grad_once;
  std::shared_ptr<const GradCache> grad;
  std::once_flag interp_once;
  std::shared_ptr<const InterpCache> interp;
};

SymplecticPotential::SymplecticPotential(double c, PeriodicField psi)
    : c_(c), psi_(std::move(psi)), cache_box_(std::make_shared<CacheBox>()) {
  if (!(c_ > 0.0) || !std::isfinite(c_))
    throw ConfigError("SymplecticPotential: quadratic coefficient c must be > 0");
  for (double v : psi_.values())
    if (!std::isfinite(v))
      throw NumericalError("SymplecticPotential: psi contains non-finite values");
  hess_ = build_hessian(c_, psi_);
}

const SymplecticPotential::GradCache& SymplecticPotential::grad_cache() const {
  std::call_once(cache_box_->grad_once, [this] {
    auto c = std::make_shared<GradCache>();
    const GridSpec& g = psi_.spec();
    for (int a = 0; a < g.n; ++a) {
      const int axes[1] = {a};
      c->grad.push_back(derivative(psi_, axes));
    }
    for (int a = 0; a < g.n; ++a) c->grad_interp.emplace_back(c->grad[a]);
    cache_box_->grad = std::move(c);
  });
  return *cache_box_->grad;
}

const SymplecticPotential::InterpCache& SymplecticPotential::interp_cache() const {
  std::call_once(cache_box_->interp_once, [this] {
    auto c = std::make_shared<InterpCache>();
    const GridSpec& g = psi_.spec();
    for (int k = 0; k < sym2_count(g.n); ++k)
      c->hess_interp.emplace_back(hess_->hess[k]);
    c->psi_interp = std::make_unique<CubicInterpolant>(psi_);
    cache_box_->interp = std::move(c);
  });
  return *cache_box_->interp;
}

double SymplecticPotential::u_at(std::int64_t flat) const {
  Vec x = spec().point(spec().unflatten(flat));
  double q = 0.0;
  for (int a = 0; a < spec().n; ++a) q += x[a] * x[a];
  return 0.5 * c_ * q + psi_[flat];
}

double SymplecticPotential::u_value(const Vec& x) const {
  double q = 0.0;
  for (int a = 0; a < spec().n; ++a) q += x[a] * x[a];
  return 0.5 * c_ * q + (*interp_cache().psi_interp)(x);
}

Vec SymplecticPotential::gradient(const Vec& x) const {
  const GradCache& cc = grad_cache();
  Vec g{0.0, 0.0, 0.0};
  for (int a = 0; a < spec().n; ++a) g[a] = c_ * x[a] + cc.grad_interp[a](x);
  return g;
}

SymMat SymplecticPotential::hessian_matrix(const Vec& x) const {
  const InterpCache& cc = interp_cache();
  SymMat H;
  H.n = spec().n;
  for (int k = 0; k < sym2_count(spec().n); ++k) H.m[k] = cc.hess_interp[k](x);
  return H;
}

const std::vector<PeriodicField>& SymplecticPotential::psi_gradient_fields() const {
  return grad_cache().grad;
}

double rng_unit(std::uint64_t raw) {
  return static_cast<double>(raw >> 11) * 0x1.0p-53;
}

namespace {

struct Segment {
  Vec p0, p3;
};

double segment_value(const SymplecticPotential& u, const Segment& s) {
  const int n = u.spec().n;
  Vec d{0.0, 0.0, 0.0};
  double len2 = 0.0;
  for (int a = 0; a < n; ++a) {
    d[a] = s.p3[a] - s.p0[a];
    len2 += d[a] * d[a];
  }
  const double len = std::sqrt(len2);
  if (len < 1e-300) return 0.0;
  Vec p1{0.0, 0.0, 0.0}, p2{0.0, 0.0, 0.0}, nu{0.0, 0.0, 0.0};
  for (int a = 0; a < n; ++a) {
    p1[a] = s.p0[a] + d[a] / 3.0;
    p2[a] = s.p0[a] + 2.0 * d[a] / 3.0;
    nu[a] = d[a] / len;
  }
  const Vec g1 = u.gradient(p1);
  const Vec g2 = u.gradient(p2);
  double dv = 0.0;
  for (int a = 0; a < n; ++a) dv += nu[a] * (g1[a] - g2[a]);
  return std::abs(dv);
}

}  // namespace

MConditionReport m_condition_estimate(const SymplecticPotential& u,
                                      std::int64_t n_segments,
                                      std::uint64_t rng_seed) {
  if (n_segments < 0)
    throw ConfigError("m_condition_estimate: n_segments must be >= 0");
  const GridSpec& g = u.spec();
  const int n = g.n;
  const double half = 0.5 * g.scale;

  std::vector<Segment> segments;

  // Axis-aligned full-length segments through every grid row.
  for (int axis = 0; axis < n; ++axis) {
    std::int64_t rows = 1;
    for (int a = 0; a < n; ++a)
      if (a != axis) rows *= g.N;
    for (std::int64_t r = 0; r < rows; ++r) {
      Idx other{0, 0, 0};
      std::int64_t rem = r;
      for (int a = n - 1; a >= 0; --a) {
        if (a == axis) continue;
        other[a] = static_cast<int>(rem % g.N);
        rem /= g.N;
      }
      Segment s;
      s.p0 = g.point(other);
      s.p3 = s.p0;
      s.p0[axis] = -half;
      s.p3[axis] = half;
      segments.push_back(s);
    }
  }

  // Main diagonals of the fundamental domain (flat-potential extremizers in
  // the off-axis directions).
  const int diag_count = 1 << (n - 1);
  for (int bits = 0; bits < diag_count; ++bits) {
    Segment s;
    s.p0 = {-half, 0.0, 0.0};
    s.p3 = {half, 0.0, 0.0};
    for (int a = 1; a < n; ++a) {
      const double sign = (bits >> (a - 1)) & 1 ? -1.0 : 1.0;
      s.p0[a] = -sign * half;
      s.p3[a] = sign * half;
    }
    segments.push_back(s);
  }

  std::mt19937_64 rng(rng_seed);
  for (std::int64_t k = 0; k < n_segments; ++k) {
    Segment s;
    s.p0 = {0.0, 0.0, 0.0};
    s.p3 = {0.0, 0.0, 0.0};
    for (int a = 0; a < n; ++a) s.p0[a] = g.scale * (rng_unit(rng()) - 0.5);
    for (int a = 0; a < n; ++a) s.p3[a] = g.scale * (rng_unit(rng()) - 0.5);
    segments.push_back(s);
  }

  MConditionReport rep;
  rep.samples = static_cast<std::int64_t>(segments.size());
  for (const Segment& s : segments) {
    const double v = segment_value(u, s);
    if (v > rep.M_estimate) {
      rep.M_estimate = v;
      rep.worst_p0 = s.p0;
      rep.worst_p3 = s.p3;
    }
  }
  return rep;
}

SymplecticPotential rescale(const SymplecticPotential& u, double lam, const Vec& p) {
  if (!(lam > 0.0) || !std::isfinite(lam))
    throw ConfigError("rescale: lam must be > 0");
  const GridSpec& g = u.spec();
  GridSpec out_spec(g.n, g.N, lam * g.scale);

  // New node x maps to p + x/lam = p + (old-grid offset of the same index),
  // so when p sits on a grid node the resampling is an exact index shift.
  Idx p_idx{0, 0, 0};
  bool p_on_node = true;
  for (int a = 0; a < g.n; ++a) {
    double t = (p[a] / g.scale + 0.5) * g.N;
    if (t - std::floor(t) != 0.0) {
      p_on_node = false;
      break;
    }
    std::int64_t i = static_cast<std::int64_t>(std::floor(t)) % g.N;
    if (i < 0) i += g.N;
    p_idx[a] = static_cast<int>(i);
  }

  std::optional<CubicInterpolant> psi_interp;
  if (!p_on_node) psi_interp.emplace(u.psi());
  const double psi_p = p_on_node ? u.psi().at(p_idx) : (*psi_interp)(p);

  std::vector<double> vals(g.num_points());
  Idx idx{0, 0, 0};
  for (std::int64_t f = 0; f < out_spec.num_points(); ++f) {
    double sample;
    if (p_on_node) {
      // q = p + x_old lands on node p_idx + idx - N/2 (mod N).
      Idx shifted{0, 0, 0};
      for (int a = 0; a < g.n; ++a)
        shifted[a] = (p_idx[a] + idx[a] + g.N / 2) % g.N;
      sample = u.psi().at(shifted);
    } else {
      Vec x_old = g.point(idx);
      Vec q{0.0, 0.0, 0.0};
      for (int a = 0; a < g.n; ++a) q[a] = p[a] + x_old[a];
      sample = (*psi_interp)(q);
    }
    vals[f] = lam * (sample - psi_p);
    for (int a = g.n - 1; a >= 0; --a) {
      if (++idx[a] < g.N) break;
      idx[a] = 0;
    }
  }
  return SymplecticPotential(u.c() / lam, PeriodicField(out_spec, std::move(vals)));
}

SupNorms sup_norms(const SymplecticPotential& u) {
  const GridSpec& g = u.spec();
  const std::vector<PeriodicField>& grad = u.psi_gradient_fields();
  SupNorms out;
  Idx idx{0, 0, 0};
  for (std::int64_t f = 0; f < g.num_points(); ++f) {
    Vec x = g.point(idx);
    double q = 0.0, g2 = 0.0;
    for (int a = 0; a < g.n; ++a) {
      q += x[a] * x[a];
      const double ga = u.c() * x[a] + grad[a][f];
      g2 += ga * ga;
    }
    out.sup_u = std::max(out.sup_u, std::abs(0.5 * u.c() * q + u.psi()[f]));
    out.sup_grad = std::max(out.sup_grad, std::sqrt(g2));
    for (int a = g.n - 1; a >= 0; --a) {
      if (++idx[a] < g.N) break;
      idx[a] = 0;
    }
  }
  out.psi_mean = integrate(u.psi()) / g.volume();
  return out;
}

}  // namespace calaflow
