#include "calaflow/field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
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

struct Stencil {
  int radius;
  std::array<double, 7> coeff;  // offsets -radius..radius
};

// Centered finite differences, formal order 4.
const Stencil& stencil(int order) {
  static const Stencil kFirst{2, {1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12, 0, 0}};
  static const Stencil kSecond{2, {-1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12, 0, 0}};
  static const Stencil kThird{3, {1.0 / 8, -1.0, 13.0 / 8, 0.0, -13.0 / 8, 1.0, -1.0 / 8}};
  static const Stencil kFourth{3, {-1.0 / 6, 2.0, -13.0 / 2, 28.0 / 3, -13.0 / 2, 2.0, -1.0 / 6}};
  switch (order) {
    case 1: return kFirst;
    case 2: return kSecond;
    case 3: return kThird;
    default: return kFourth;
  }
}

// One differentiation pass along `axis` with derivative order `order`.
void axis_pass(const GridSpec& g, std::span<const double> in, std::span<double> out,
               int axis, int order) {
  const Stencil& st = stencil(order);
  const double inv_h = 1.0 / std::pow(g.h(), order);
  const int N = g.N;

  // Row-major strides: axis a advances by N^(n-1-a).
  std::int64_t stride = 1;
  for (int a = g.n - 1; a > axis; --a) stride *= N;
  const std::int64_t block = stride * N;  // span of one full line
  const std::int64_t total = g.num_points();

  // Difference form sum_i c_i (v_i - v_0): annihilates constants exactly in
  // floating point (every derivative stencil has zero coefficient sum).
  const int R = st.radius;
  for (std::int64_t base = 0; base < total; base += block) {
    for (std::int64_t inner = 0; inner < stride; ++inner) {
      const std::int64_t line = base + inner;
      auto apply_wrapped = [&](int k) {
        const double center = in[line + static_cast<std::int64_t>(k) * stride];
        double acc = 0.0;
        for (int off = -R; off <= R; ++off) {
          if (off == 0) continue;
          int j = k + off;
          if (j < 0) j += N;
          if (j >= N) j -= N;
          acc += st.coeff[off + R] *
                 (in[line + static_cast<std::int64_t>(j) * stride] - center);
        }
        out[line + static_cast<std::int64_t>(k) * stride] = acc * inv_h;
      };
      for (int k = 0; k < R; ++k) apply_wrapped(k);
      for (int k = N - R; k < N; ++k) apply_wrapped(k);
      for (int k = R; k < N - R; ++k) {
        const double* p = &in[line + static_cast<std::int64_t>(k) * stride];
        const double center = *p;
        double acc = 0.0;
        for (int off = -R; off <= R; ++off) {
          if (off == 0) continue;
          acc += st.coeff[off + R] * (p[off * stride] - center);
        }
        out[line + static_cast<std::int64_t>(k) * stride] = acc * inv_h;
      }
    }
  }
}

}  // namespace

GridSpec::GridSpec(int n_, int N_, double scale_) : n(n_), N(N_), scale(scale_) {
  if (n < 1 || n > kMaxDim)
    throw ConfigError("GridSpec: dimension must be 1, 2 or 3, got " + std::to_string(n));
  if (N < 16 || N % 2 != 0)
    throw ConfigError("GridSpec: N must be even and >= 16, got " + std::to_string(N));
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw ConfigError("GridSpec: scale must be a positive real");
}

double GridSpec::volume() const {
  double v = 1.0;
  for (int a = 0; a < n; ++a) v *= scale;
  return v;
}

std::int64_t GridSpec::num_points() const {
  std::int64_t p = 1;
  for (int a = 0; a < n; ++a) p *= N;
  return p;
}

Vec GridSpec::point(const Idx& idx) const {
  Vec x{0.0, 0.0, 0.0};
  for (int a = 0; a < n; ++a)
    x[a] = scale * (static_cast<double>(idx[a]) / N - 0.5);
  return x;
}

std::int64_t GridSpec::flatten(const Idx& idx) const {
  std::int64_t flat = 0;
  for (int a = 0; a < n; ++a) flat = flat * N + idx[a];
  return flat;
}

Idx GridSpec::unflatten(std::int64_t flat) const {
  Idx idx{0, 0, 0};
  for (int a = n - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(flat % N);
    flat /= N;
  }
  return idx;
}

PeriodicField::PeriodicField(GridSpec spec, std::vector<double> values)
    : spec_(spec), values_(std::move(values)) {
  if (static_cast<std::int64_t>(values_.size()) != spec_.num_points())
    throw ConfigError("PeriodicField: value count does not match grid");
}

PeriodicField PeriodicField::zeros(const GridSpec& spec) {
  return PeriodicField(spec, std::vector<double>(spec.num_points(), 0.0));
}

double PeriodicField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

PeriodicField sample_function(const std::function<double(const Vec&)>& f,
                              const GridSpec& spec) {
  std::vector<double> vals(spec.num_points());
  Idx idx{0, 0, 0};
  for (std::int64_t flat = 0; flat < spec.num_points(); ++flat) {
    Vec x = spec.point(idx);
    double v = f(x);
    if (!std::isfinite(v))
      throw NumericalError("sample_function: non-finite value at grid point " +
                           point_to_string(x, spec.n));
    vals[flat] = v;
    for (int a = spec.n - 1; a >= 0; --a) {
      if (++idx[a] < spec.N) break;
      idx[a] = 0;
    }
  }
  return PeriodicField(spec, std::move(vals));
}

PeriodicField derivative(const PeriodicField& field, std::span<const int> axes) {
  const GridSpec& g = field.spec();
  if (axes.size() > 4)
    throw ConfigError("derivative: total order > 4 is unsupported");
  std::array<int, 4> sorted{};
  std::copy(axes.begin(), axes.end(), sorted.begin());
  std::sort(sorted.begin(), sorted.begin() + axes.size());
  for (std::size_t i = 0; i < axes.size(); ++i)
    if (sorted[i] < 0 || sorted[i] >= g.n)
      throw ConfigError("derivative: axis out of range");

  std::vector<double> cur(field.values().begin(), field.values().end());
  std::vector<double> next(cur.size());
  std::size_t i = 0;
  while (i < axes.size()) {
    int axis = sorted[i];
    int order = 0;
    while (i < axes.size() && sorted[i] == axis) {
      ++order;
      ++i;
    }
    axis_pass(g, cur, next, axis, order);
    std::swap(cur, next);
  }
  return PeriodicField(g, std::move(cur));
}

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 16) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

double integrate(const PeriodicField& field) {
  const GridSpec& g = field.spec();
  double hn = 1.0;
  for (int a = 0; a < g.n; ++a) hn *= g.h();
  return hn * pairwise_sum(field.values());
}

namespace {

// Periodic tridiagonal solve for the cubic-spline prefilter system
// (c[i-1] + 4 c[i] + c[i+1]) / 6 = v[i], Sherman-Morrison on the corner terms.
void prefilter_line(std::span<double> v, std::span<double> work) {
  const std::size_t N = v.size();
  const double b = 4.0, corner = 1.0;
  // Modified diagonal system B y = 6v with B = tri(1, 4, 1), b[0] -> b - gamma,
  // b[N-1] -> b - corner^2/gamma; then correct with u = (gamma, 0.., corner).
  const double gamma = -b;
  std::span<double> diag = work.first(N);
  std::span<double> z = work.subspan(N, N);

  diag[0] = b - gamma;
  for (std::size_t i = 1; i + 1 < N; ++i) diag[i] = b;
  diag[N - 1] = b - corner * corner / gamma;

  auto thomas = [&](std::span<double> rhs) {
    // In-place Thomas with sub/super diagonals equal to `corner`.
    double beta = diag[0];
    rhs[0] /= beta;
    std::span<double> scratch = work.subspan(2 * N, N);
    for (std::size_t i = 1; i < N; ++i) {
      scratch[i] = corner / beta;
      beta = diag[i] - corner * scratch[i];
      rhs[i] = (rhs[i] - corner * rhs[i - 1]) / beta;
    }
    for (std::size_t i = N - 1; i-- > 0;) rhs[i] -= scratch[i + 1] * rhs[i + 1];
  };

  for (std::size_t i = 0; i < N; ++i) v[i] *= 6.0;
  thomas(v);
  for (std::size_t i = 0; i < N; ++i) z[i] = 0.0;
  z[0] = gamma;
  z[N - 1] = corner;
  thomas(z);

  const double factor =
      (v[0] + corner * v[N - 1] / gamma) / (1.0 + z[0] + corner * z[N - 1] / gamma);
  for (std::size_t i = 0; i < N; ++i) v[i] -= factor * z[i];
}

}  // namespace

CubicInterpolant::CubicInterpolant(const PeriodicField& field)
    : spec_(field.spec()), coeff_(field.values().begin(), field.values().end()) {
  const int N = spec_.N;
  std::vector<double> line(N);
  std::vector<double> work(3 * static_cast<std::size_t>(N));
  for (int axis = 0; axis < spec_.n; ++axis) {
    std::int64_t stride = 1;
    for (int a = spec_.n - 1; a > axis; --a) stride *= N;
    const std::int64_t block = stride * N;
    for (std::int64_t base = 0; base < spec_.num_points(); base += block) {
      for (std::int64_t inner = 0; inner < stride; ++inner) {
        const std::int64_t start = base + inner;
        for (int k = 0; k < N; ++k) line[k] = coeff_[start + k * stride];
        prefilter_line(line, work);
        for (int k = 0; k < N; ++k) coeff_[start + k * stride] = line[k];
      }
    }
  }
}

double CubicInterpolant::operator()(const Vec& point) const {
  const int N = spec_.N;
  int base_idx[kMaxDim];
  double w[kMaxDim][4];
  for (int a = 0; a < spec_.n; ++a) {
    double t = (point[a] / spec_.scale + 0.5) * N;
    double tf = std::floor(t);
    double s = t - tf;
    std::int64_t i = static_cast<std::int64_t>(tf) % N;
    if (i < 0) i += N;
    base_idx[a] = static_cast<int>(i);
    const double s2 = s * s, s3 = s2 * s;
    w[a][0] = (1.0 - 3.0 * s + 3.0 * s2 - s3) / 6.0;
    w[a][1] = (4.0 - 6.0 * s2 + 3.0 * s3) / 6.0;
    w[a][2] = (1.0 + 3.0 * s + 3.0 * s2 - 3.0 * s3) / 6.0;
    w[a][3] = s3 / 6.0;
  }

  // B-spline taps at offsets -1..2 around the cell.
  double acc = 0.0;
  int taps[kMaxDim];
  int count = 1;
  for (int a = 0; a < spec_.n; ++a) count *= 4;
  for (int t = 0; t < count; ++t) {
    int rem = t;
    double weight = 1.0;
    Idx idx{0, 0, 0};
    for (int a = spec_.n - 1; a >= 0; --a) {
      taps[a] = rem % 4;
      rem /= 4;
      weight *= w[a][taps[a]];
      int j = base_idx[a] + taps[a] - 1;
      if (j < 0) j += N;
      if (j >= N) j -= N;
      idx[a] = j;
    }
    acc += weight * coeff_[spec_.flatten(idx)];
  }
  return acc;
}

double interpolate(const PeriodicField& field, const Vec& point) {
  // Exact at nodes: return the stored value when every coordinate hits one.
  const GridSpec& g = field.spec();
  Idx idx{0, 0, 0};
  bool on_node = true;
  for (int a = 0; a < g.n && on_node; ++a) {
    double t = (point[a] / g.scale + 0.5) * g.N;
    double r = t - std::floor(t);
    if (r != 0.0) {
      on_node = false;
    } else {
      std::int64_t i = static_cast<std::int64_t>(std::floor(t)) % g.N;
      if (i < 0) i += g.N;
      idx[a] = static_cast<int>(i);
    }
  }
  if (on_node) return field.at(idx);
  return CubicInterpolant(field)(point);
}

std::complex<double> fourier_mode(const PeriodicField& field, const Idx& k) {
  const GridSpec& g = field.spec();
  for (int a = 0; a < g.n; ++a)
    if (std::abs(k[a]) >= g.N / 2)
      throw ConfigError("fourier_mode: mode " + std::to_string(k[a]) +
                        " is aliased on a grid with N = " + std::to_string(g.N));
  const std::int64_t total = g.num_points();
  std::vector<double> re(total), im(total);
  Idx idx{0, 0, 0};
  for (std::int64_t flat = 0; flat < total; ++flat) {
    double phase = 0.0;
    for (int a = 0; a < g.n; ++a)
      phase += static_cast<double>(k[a]) * idx[a] / g.N;
    const double ang = -2.0 * std::numbers::pi * phase;
    re[flat] = field[flat] * std::cos(ang);
    im[flat] = field[flat] * std::sin(ang);
    for (int a = g.n - 1; a >= 0; --a) {
      if (++idx[a] < g.N) break;
      idx[a] = 0;
    }
  }
  const double norm = 1.0 / static_cast<double>(total);
  return {norm * pairwise_sum(re), norm * pairwise_sum(im)};
}

PeriodicField field_add_scaled(const PeriodicField& a, double s,
                               const PeriodicField& b) {
  std::vector<double> out(a.values().begin(), a.values().end());
  std::span<const double> bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += s * bv[i];
  return PeriodicField(a.spec(), std::move(out));
}

PeriodicField field_scale(double s, const PeriodicField& a) {
  std::vector<double> out(a.values().begin(), a.values().end());
  for (double& v : out) v *= s;
  return PeriodicField(a.spec(), std::move(out));
}

}  // namespace calaflow
