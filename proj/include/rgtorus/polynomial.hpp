#pragma once

#include <cstdint>
#include <map>

#include "rgtorus/dual.hpp"

namespace rgt {

// Polynomial with complex coefficients in variables z_1..z_d, zbar_1..zbar_d.
// Exponent key: alpha_1..alpha_d, beta_1..beta_d packed as bytes. Monomials
// are kept in map order, so all accumulation is deterministic.
class Polynomial {
 public:
  using Key = std::vector<std::uint8_t>;

  explicit Polynomial(int d = 0) : d_(d) {}

  static Polynomial constant(int d, cplx c) {
    Polynomial p(d);
    if (c != 0.0) p.terms_[Key((size_t)(2 * d), 0)] = c;
    return p;
  }
  static Polynomial variable(int d, int i, bool bar) {
    Polynomial p(d);
    Key k((size_t)(2 * d), 0);
    k[(size_t)(bar ? d + i : i)] = 1;
    p.terms_[k] = 1.0;
    return p;
  }

  int dim() const { return d_; }
  bool empty() const { return terms_.empty(); }
  const std::map<Key, cplx>& terms() const { return terms_; }

  void add_term(const Key& k, cplx c) {
    auto it = terms_.find(k);
    cplx v = (it == terms_.end() ? cplx(0) : it->second) + c;
    if (v == 0.0) {
      if (it != terms_.end()) terms_.erase(it);
    } else {
      terms_[k] = v;
    }
  }

  cplx coeff(const Key& k) const {
    auto it = terms_.find(k);
    return it == terms_.end() ? cplx(0) : it->second;
  }

  static int degree_of(const Key& k) {
    int s = 0;
    for (auto e : k) s += e;
    return s;
  }

  Polynomial& operator+=(const Polynomial& o) {
    for (auto& [k, c] : o.terms_) add_term(k, c);
    return *this;
  }
  Polynomial operator+(const Polynomial& o) const {
    Polynomial r = *this;
    r += o;
    return r;
  }
  Polynomial operator-(const Polynomial& o) const { return *this + o * cplx(-1.0); }
  Polynomial operator*(cplx s) const {
    Polynomial r(d_);
    if (s == 0.0) return r;
    for (auto& [k, c] : terms_) r.terms_[k] = c * s;
    return r;
  }

  // Product truncated at total degree degcap (degcap < 0: no cap).
  Polynomial mul(const Polynomial& o, int degcap = -1) const {
    Polynomial r(d_);
    for (auto& [ka, ca] : terms_)
      for (auto& [kb, cb] : o.terms_) {
        Key k(ka.size());
        int deg = 0;
        for (size_t t = 0; t < k.size(); ++t) {
          k[t] = (std::uint8_t)(ka[t] + kb[t]);
          deg += k[t];
        }
        if (degcap >= 0 && deg > degcap) continue;
        r.add_term(k, ca * cb);
      }
    return r;
  }

  Polynomial truncate_degree(int maxdeg) const {
    Polynomial r(d_);
    for (auto& [k, c] : terms_)
      if (degree_of(k) <= maxdeg) r.terms_[k] = c;
    return r;
  }

  Polynomial derivative(int i, bool bar) const {
    Polynomial r(d_);
    size_t slot = (size_t)(bar ? d_ + i : i);
    for (auto& [k, c] : terms_) {
      if (k[slot] == 0) continue;
      Key kd = k;
      kd[slot] -= 1;
      r.add_term(kd, c * double(k[slot]));
    }
    return r;
  }

  double max_abs_coeff() const {
    double m = 0.0;
    for (auto& [k, c] : terms_) m = std::max(m, std::abs(c));
    return m;
  }

  // Evaluate with arbitrary complex-like scalars (Cplx<double>, Cplx<Dual>...).
  template <typename CT>
  CT eval(const std::vector<CT>& z, const std::vector<CT>& zbar) const {
    CT acc{};
    for (auto& [k, c] : terms_) {
      CT mono = CT(cplx(1.0, 0.0));
      for (int i = 0; i < d_; ++i) {
        for (int e = 0; e < k[(size_t)i]; ++e) mono = mono * z[(size_t)i];
        for (int e = 0; e < k[(size_t)(d_ + i)]; ++e) mono = mono * zbar[(size_t)i];
      }
      acc += mono * c;
    }
    return acc;
  }

 private:
  int d_;
  std::map<Key, cplx> terms_;
};

inline Polynomial operator*(cplx s, const Polynomial& p) { return p * s; }

// {W, F} = -i sum_m (dW/dz_m dF/dzbar_m - dW/dzbar_m dF/dz_m), the derivative
// of W along the flow z_m' = -i dF/dzbar_m.
inline Polynomial poisson(const Polynomial& W, const Polynomial& F, int degcap = -1) {
  int d = W.dim();
  Polynomial r(d);
  for (int m = 0; m < d; ++m) {
    r += W.derivative(m, false).mul(F.derivative(m, true), degcap);
    r += cplx(-1.0) * W.derivative(m, true).mul(F.derivative(m, false), degcap);
  }
  return cplx(0.0, -1.0) * r;
}

}  // namespace rgt
