#pragma once

#include <algorithm>
#include <array>
#include <cmath>

namespace calaflow {

/// Symmetric n x n matrix, n <= 3, packed upper triangle row by row:
/// n=1: [00]; n=2: [00, 01, 11]; n=3: [00, 01, 02, 11, 12, 22].
struct SymMat {
  int n = 1;
  std::array<double, 6> m{};

  static int pack_index(int i, int j, int n) {
    if (i > j) std::swap(i, j);
    if (n == 1) return 0;
    if (n == 2) return i == 0 ? j : 2;
    static constexpr int kRowStart[3] = {0, 3, 5};
    return kRowStart[i] + (j - i);
  }

  double operator()(int i, int j) const { return m[pack_index(i, j, n)]; }
  double& ref(int i, int j) { return m[pack_index(i, j, n)]; }

  double det() const {
    if (n == 1) return m[0];
    if (n == 2) return m[0] * m[2] - m[1] * m[1];
    const double a = m[0], b = m[1], c = m[2], d = m[3], e = m[4], f = m[5];
    return a * (d * f - e * e) - b * (b * f - e * c) + c * (b * e - d * c);
  }

  SymMat inverse() const {
    SymMat inv;
    inv.n = n;
    const double dt = det();
    if (n == 1) {
      inv.m[0] = 1.0 / m[0];
    } else if (n == 2) {
      inv.m[0] = m[2] / dt;
      inv.m[1] = -m[1] / dt;
      inv.m[2] = m[0] / dt;
    } else {
      const double a = m[0], b = m[1], c = m[2], d = m[3], e = m[4], f = m[5];
      inv.m[0] = (d * f - e * e) / dt;
      inv.m[1] = (c * e - b * f) / dt;
      inv.m[2] = (b * e - c * d) / dt;
      inv.m[3] = (a * f - c * c) / dt;
      inv.m[4] = (b * c - a * e) / dt;
      inv.m[5] = (a * d - b * b) / dt;
    }
    return inv;
  }

  /// Closed-form extreme eigenvalues (trigonometric method for n=3).
  void eig_range(double& lo, double& hi) const {
    if (n == 1) {
      lo = hi = m[0];
      return;
    }
    if (n == 2) {
      const double mean = 0.5 * (m[0] + m[2]);
      const double r = std::sqrt(0.25 * (m[0] - m[2]) * (m[0] - m[2]) + m[1] * m[1]);
      lo = mean - r;
      hi = mean + r;
      return;
    }
    const double a = m[0], b = m[1], c = m[2], d = m[3], e = m[4], f = m[5];
    const double p1 = b * b + c * c + e * e;
    if (p1 == 0.0) {
      lo = std::min({a, d, f});
      hi = std::max({a, d, f});
      return;
    }
    const double q = (a + d + f) / 3.0;
    const double p2 =
        (a - q) * (a - q) + (d - q) * (d - q) + (f - q) * (f - q) + 2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    // B = (A - q I) / p, r = det(B) / 2 in [-1, 1] up to round-off.
    const double ba = (a - q) / p, bd = (d - q) / p, bf = (f - q) / p;
    const double bb = b / p, bc = c / p, be = e / p;
    double r = 0.5 * (ba * (bd * bf - be * be) - bb * (bb * bf - be * bc) +
                      bc * (bb * be - bd * bc));
    r = std::fmin(1.0, std::fmax(-1.0, r));
    const double phi = std::acos(r) / 3.0;
    hi = q + 2.0 * p * std::cos(phi);
    lo = q + 2.0 * p * std::cos(phi + 2.0 * std::acos(-1.0) / 3.0);
  }

  double quad(const double* v) const {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s += v[i] * (*this)(i, j) * v[j];
    return s;
  }
};

/// Number of packed components of a symmetric rank-2 tensor in dimension n.
inline int sym2_count(int n) { return n * (n + 1) / 2; }

/// Packed index for a symmetric rank-3 tensor (sorted triple), n <= 3.
inline int sym3_index(int i, int j, int k, int n) {
  int a = i, b = j, c = k;
  if (a > b) std::swap(a, b);
  if (b > c) std::swap(b, c);
  if (a > b) std::swap(a, b);
  // Enumerate sorted triples lexicographically.
  int idx = 0;
  for (int x = 0; x < n; ++x)
    for (int y = x; y < n; ++y)
      for (int z = y; z < n; ++z) {
        if (x == a && y == b && z == c) return idx;
        ++idx;
      }
  return -1;
}

inline int sym3_count(int n) { return n * (n + 1) * (n + 2) / 6; }

inline int sym4_index(int i, int j, int k, int l, int n) {
  std::array<int, 4> s{i, j, k, l};
  std::sort(s.begin(), s.end());
  int idx = 0;
  for (int x = 0; x < n; ++x)
    for (int y = x; y < n; ++y)
      for (int z = y; z < n; ++z)
        for (int w = z; w < n; ++w) {
          if (x == s[0] && y == s[1] && z == s[2] && w == s[3]) return idx;
          ++idx;
        }
  return -1;
}

inline int sym4_count(int n) { return n * (n + 1) * (n + 2) * (n + 3) / 24; }

}  // namespace calaflow
