#pragma once

#include <span>

#include "calaflow/smallmat.hpp"

namespace calaflow {

/// The thirteen-term expansion of d2u/dt2 = -dS/dt in terms of the inverse
/// Hessian, third and fourth derivatives of u, and derivatives of S up to
/// order four, evaluated at one point. Tensors are passed packed: `inv2` and
/// `s2` by SymMat::pack_index, `d3`/`s3` by sym3_index, `d4`/`s4` by
/// sym4_index. Generic in the scalar type so the grid pipeline (double) and
/// the local analytic evaluator (long double) share one formula.
template <class T>
T star_terms_kernel(int n, std::span<const T> inv2, std::span<const T> d3,
                    std::span<const T> d4, std::span<const T> s2,
                    std::span<const T> s3, std::span<const T> s4) {
  auto H = [&](int i, int j) -> T { return inv2[SymMat::pack_index(i, j, n)]; };
  auto U3 = [&](int a, int b, int c) -> T { return d3[sym3_index(a, b, c, n)]; };
  auto U4 = [&](int a, int b, int c, int d) -> T {
    return d4[sym4_index(a, b, c, d, n)];
  };
  auto S2 = [&](int k, int l) -> T { return s2[SymMat::pack_index(k, l, n)]; };
  auto S3 = [&](int k, int l, int j) -> T { return s3[sym3_index(k, l, j, n)]; };
  auto S4 = [&](int k, int l, int i, int j) -> T {
    return s4[sym4_index(k, l, i, j, n)];
  };

  // Recurring contractions. V[b] = u^{ia} u_{abi}; M[b][j] = u^{bk} S_{kl} u^{jl}.
  T V[kMaxDim] = {};
  for (int b = 0; b < n; ++b)
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < n; ++a) V[b] += H(i, a) * U3(a, b, i);

  T M[kMaxDim][kMaxDim] = {};
  for (int b = 0; b < n; ++b)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) M[b][j] += H(b, k) * S2(k, l) * H(j, l);

  T total = T(0);

  // t1 = + u^{ig} u_{gdj} u^{da} u_{abi} u^{bk} S_{kl} u^{jl}
  for (int i = 0; i < n; ++i)
    for (int g = 0; g < n; ++g)
      for (int d = 0; d < n; ++d)
        for (int j = 0; j < n; ++j)
          for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
              total += H(i, g) * U3(g, d, j) * H(d, a) * U3(a, b, i) * M[b][j];

  // t2 = - u^{ia} u_{abij} u^{bk} S_{kl} u^{jl}
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int j = 0; j < n; ++j)
          total -= H(i, a) * U4(a, b, i, j) * M[b][j];

  // t3 = + V_b u^{bg} u_{gdj} u^{dk} S_{kl} u^{jl}
  for (int b = 0; b < n; ++b)
    for (int g = 0; g < n; ++g)
      for (int d = 0; d < n; ++d)
        for (int j = 0; j < n; ++j)
          total += V[b] * H(b, g) * U3(g, d, j) * M[d][j];

  // t4 = - V_b u^{bk} S_{klj} u^{jl}
  for (int b = 0; b < n; ++b)
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l)
        for (int j = 0; j < n; ++j)
          total -= V[b] * H(b, k) * S3(k, l, j) * H(j, l);

  // t5 = + V_b u^{bk} S_{kl} u^{dl} V_d
  for (int b = 0; b < n; ++b)
    for (int d = 0; d < n; ++d) total += V[b] * M[b][d] * V[d];

  // t6 = - u^{ia} u_{abj} u^{bk} S_{kli} u^{jl}
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l)
              total -= H(i, a) * U3(a, b, j) * H(b, k) * S3(k, l, i) * H(j, l);

  // t7 = + u^{ik} S_{klij} u^{jl}
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l)
          total += H(i, k) * S4(k, l, i, j) * H(j, l);

  // t8 = - u^{ik} S_{kli} V_b u^{bl}   (with u^{ja} u_{abj} = V_b)
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l)
        for (int b = 0; b < n; ++b)
          total -= H(i, k) * S3(k, l, i) * V[b] * H(b, l);

  // t9 = + u^{ig} u_{gdj} u^{dk} S_{kl} u^{ja} u_{abi} u^{bl}
  for (int i = 0; i < n; ++i)
    for (int g = 0; g < n; ++g)
      for (int d = 0; d < n; ++d)
        for (int j = 0; j < n; ++j)
          for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
              total += H(i, g) * U3(g, d, j) * H(j, a) * U3(a, b, i) * M[d][b];

  // t10 = - u^{ik} S_{klj} u^{ja} u_{abi} u^{bl}
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l)
        for (int j = 0; j < n; ++j)
          for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
              total -= H(i, k) * S3(k, l, j) * H(j, a) * U3(a, b, i) * H(b, l);

  // t11 = + u^{ik} S_{kl} u^{jg} u_{gdj} u^{da} u_{abi} u^{bl}
  //       (u^{jg} u_{gdj} = V_d)
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l)
        for (int d = 0; d < n; ++d)
          for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
              total +=
                  H(i, k) * S2(k, l) * V[d] * H(d, a) * U3(a, b, i) * H(b, l);

  // t12 = - u^{ik} S_{kl} u^{ja} u_{abij} u^{bl}
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l)
        for (int j = 0; j < n; ++j)
          for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
              total -= H(i, k) * S2(k, l) * H(j, a) * U4(a, b, i, j) * H(b, l);

  // t13 = + u^{ik} S_{kl} u^{ja} u_{abi} u^{bg} u_{gdj} u^{dl}
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l)
        for (int j = 0; j < n; ++j)
          for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
              for (int g = 0; g < n; ++g)
                for (int d = 0; d < n; ++d)
                  total += H(i, k) * S2(k, l) * H(j, a) * U3(a, b, i) *
                           H(b, g) * U3(g, d, j) * H(d, l);

  return total;
}

}  // namespace calaflow
