#pragma once

#include <array>

#include "rgtorus/types.hpp"

namespace rgt {

// Truncated power series in one parameter, c[k] = k-th Taylor coefficient.
// Arithmetic is exact series arithmetic cut at order K; feeding these through
// the model evaluators extracts perturbation-series coefficients without any
// finite-difference noise.
template <int K>
struct Taylor {
  std::array<double, K + 1> c{};

  Taylor() = default;
  Taylor(double v) { c[0] = v; }
  static Taylor seed(double v) {
    Taylor t(v);
    static_assert(K >= 1);
    t.c[1] = 1.0;
    return t;
  }

  double operator[](int i) const { return c[(size_t)i]; }
  double& operator[](int i) { return c[(size_t)i]; }

  Taylor& operator+=(const Taylor& o) {
    for (int i = 0; i <= K; ++i) c[(size_t)i] += o.c[(size_t)i];
    return *this;
  }
  Taylor& operator-=(const Taylor& o) {
    for (int i = 0; i <= K; ++i) c[(size_t)i] -= o.c[(size_t)i];
    return *this;
  }
};

template <int K>
Taylor<K> operator+(Taylor<K> x, const Taylor<K>& y) { return x += y; }
template <int K>
Taylor<K> operator-(Taylor<K> x, const Taylor<K>& y) { return x -= y; }
template <int K>
Taylor<K> operator-(const Taylor<K>& x) {
  Taylor<K> r;
  for (int i = 0; i <= K; ++i) r.c[(size_t)i] = -x.c[(size_t)i];
  return r;
}
template <int K>
Taylor<K> operator*(const Taylor<K>& x, const Taylor<K>& y) {
  Taylor<K> r;
  for (int i = 0; i <= K; ++i)
    for (int j = 0; i + j <= K; ++j) r.c[(size_t)(i + j)] += x.c[(size_t)i] * y.c[(size_t)j];
  return r;
}
template <int K>
Taylor<K> operator*(const Taylor<K>& x, double s) {
  Taylor<K> r;
  for (int i = 0; i <= K; ++i) r.c[(size_t)i] = x.c[(size_t)i] * s;
  return r;
}
template <int K>
Taylor<K> operator*(double s, const Taylor<K>& x) { return x * s; }
template <int K>
Taylor<K> operator+(const Taylor<K>& x, double s) { Taylor<K> r = x; r.c[0] += s; return r; }
template <int K>
Taylor<K> operator+(double s, const Taylor<K>& x) { return x + s; }
template <int K>
Taylor<K> operator-(const Taylor<K>& x, double s) { Taylor<K> r = x; r.c[0] -= s; return r; }
template <int K>
Taylor<K> operator-(double s, const Taylor<K>& x) { return -(x - s); }

// r = x / y: r0 = x0 / y0, r_k = (x_k - sum_{0<j<=k} y_j r_{k-j}) / y0.
template <int K>
Taylor<K> operator/(const Taylor<K>& x, const Taylor<K>& y) {
  Taylor<K> r;
  r.c[0] = x.c[0] / y.c[0];
  for (int k = 1; k <= K; ++k) {
    double s = x.c[(size_t)k];
    for (int j = 1; j <= k; ++j) s -= y.c[(size_t)j] * r.c[(size_t)(k - j)];
    r.c[(size_t)k] = s / y.c[0];
  }
  return r;
}
template <int K>
Taylor<K> operator/(const Taylor<K>& x, double s) { return x * (1.0 / s); }

// r = sqrt(x): r0 = sqrt(x0), r_k = (x_k - sum_{0<j<k} r_j r_{k-j}) / (2 r0).
template <int K>
Taylor<K> sqrt(const Taylor<K>& x) {
  Taylor<K> r;
  r.c[0] = std::sqrt(x.c[0]);
  for (int k = 1; k <= K; ++k) {
    double s = x.c[(size_t)k];
    for (int j = 1; j < k; ++j) s -= r.c[(size_t)j] * r.c[(size_t)(k - j)];
    r.c[(size_t)k] = s / (2.0 * r.c[0]);
  }
  return r;
}

// sin and cos by the joint recurrence k s_k = sum j a_j c_{k-j},
// k c_k = -sum j a_j s_{k-j}.
template <int K>
void sincos(const Taylor<K>& a, Taylor<K>& s, Taylor<K>& c) {
  s = Taylor<K>{};
  c = Taylor<K>{};
  s.c[0] = std::sin(a.c[0]);
  c.c[0] = std::cos(a.c[0]);
  for (int k = 1; k <= K; ++k) {
    double sa = 0.0, ca = 0.0;
    for (int j = 1; j <= k; ++j) {
      sa += j * a.c[(size_t)j] * c.c[(size_t)(k - j)];
      ca += j * a.c[(size_t)j] * s.c[(size_t)(k - j)];
    }
    s.c[(size_t)k] = sa / k;
    c.c[(size_t)k] = -ca / k;
  }
}
template <int K>
Taylor<K> sin(const Taylor<K>& a) { Taylor<K> s, c; sincos(a, s, c); return s; }
template <int K>
Taylor<K> cos(const Taylor<K>& a) { Taylor<K> s, c; sincos(a, s, c); return c; }

template <int K>
double value_of(const Taylor<K>& x) { return x.c[0]; }

}  // namespace rgt
