#pragma once

#include "rgtorus/types.hpp"

namespace rgt {

// First-order forward-mode dual number a + eps * b, eps^2 = 0.
// Nest Dual<Dual<double>> etc. for higher mixed directional derivatives.
template <typename T>
struct Dual {
  T a{};  // value
  T b{};  // derivative

  Dual() = default;
  Dual(T value) : a(value), b(T{}) {}
  Dual(T value, T deriv) : a(value), b(deriv) {}

  Dual& operator+=(const Dual& o) { a += o.a; b += o.b; return *this; }
  Dual& operator-=(const Dual& o) { a -= o.a; b -= o.b; return *this; }
};

template <typename T> Dual<T> operator+(Dual<T> x, const Dual<T>& y) { return {x.a + y.a, x.b + y.b}; }
template <typename T> Dual<T> operator-(Dual<T> x, const Dual<T>& y) { return {x.a - y.a, x.b - y.b}; }
template <typename T> Dual<T> operator-(const Dual<T>& x) { return {-x.a, -x.b}; }
template <typename T> Dual<T> operator*(const Dual<T>& x, const Dual<T>& y) {
  return {x.a * y.a, x.a * y.b + x.b * y.a};
}
template <typename T> Dual<T> operator/(const Dual<T>& x, const Dual<T>& y) {
  T inv = T(1.0) / y.a;
  T q = x.a * inv;
  return {q, (x.b - q * y.b) * inv};
}

template <typename T> Dual<T> operator+(const Dual<T>& x, double s) { return {x.a + T(s), x.b}; }
template <typename T> Dual<T> operator+(double s, const Dual<T>& x) { return x + s; }
template <typename T> Dual<T> operator-(const Dual<T>& x, double s) { return {x.a - T(s), x.b}; }
template <typename T> Dual<T> operator-(double s, const Dual<T>& x) { return {T(s) - x.a, -x.b}; }
template <typename T> Dual<T> operator*(const Dual<T>& x, double s) { return {x.a * T(s), x.b * T(s)}; }
template <typename T> Dual<T> operator*(double s, const Dual<T>& x) { return x * s; }
template <typename T> Dual<T> operator/(const Dual<T>& x, double s) { return x * (1.0 / s); }

template <typename T> Dual<T> sqrt(const Dual<T>& x) {
  using std::sqrt;
  T r = sqrt(x.a);
  return {r, x.b / (T(2.0) * r)};
}
template <typename T> Dual<T> sin(const Dual<T>& x) {
  using std::cos; using std::sin;
  return {sin(x.a), x.b * cos(x.a)};
}
template <typename T> Dual<T> cos(const Dual<T>& x) {
  using std::cos; using std::sin;
  return {cos(x.a), -x.b * sin(x.a)};
}

inline double value_of(double x) { return x; }
template <typename T> auto value_of(const Dual<T>& x) { return value_of(x.a); }

// Complex numbers over an arbitrary real-like scalar (std::complex requires a
// standard floating type, so duals need their own).
template <typename T>
struct Cplx {
  T re{};
  T im{};

  Cplx() = default;
  Cplx(T r) : re(r), im(T{}) {}
  Cplx(T r, T i) : re(r), im(i) {}
  Cplx(const cplx& z) : re(T(z.real())), im(T(z.imag())) {}

  Cplx& operator+=(const Cplx& o) { re += o.re; im += o.im; return *this; }
};

template <typename T> Cplx<T> operator+(const Cplx<T>& x, const Cplx<T>& y) { return {x.re + y.re, x.im + y.im}; }
template <typename T> Cplx<T> operator-(const Cplx<T>& x, const Cplx<T>& y) { return {x.re - y.re, x.im - y.im}; }
template <typename T> Cplx<T> operator-(const Cplx<T>& x) { return {-x.re, -x.im}; }
template <typename T> Cplx<T> operator*(const Cplx<T>& x, const Cplx<T>& y) {
  return {x.re * y.re - x.im * y.im, x.re * y.im + x.im * y.re};
}
template <typename T> Cplx<T> operator*(const Cplx<T>& x, const T& s) { return {x.re * s, x.im * s}; }
template <typename T> Cplx<T> operator*(const T& s, const Cplx<T>& x) { return x * s; }
template <typename T> Cplx<T> operator*(const Cplx<T>& x, const cplx& z) { return x * Cplx<T>(z); }
template <typename T> Cplx<T> operator*(const cplx& z, const Cplx<T>& x) { return Cplx<T>(z) * x; }
template <typename T> Cplx<T> conj(const Cplx<T>& x) { return {x.re, -x.im}; }
template <typename T> T real_part(const Cplx<T>& x) { return x.re; }

inline cplx to_cplx(const Cplx<double>& z) { return {z.re, z.im}; }

}  // namespace rgt
