#pragma once

#include <cstdint>
#include <numeric>

#include "rgtorus/types.hpp"

namespace rgt {

// Finite window of the mode space: Fourier sites q in Z^d with |q|_inf <= Q,
// normal-mode families k = 0..kmax with block dimensions mult[k] in {0,1,2}.
// Sites are enumerated in lexicographic order; that order is the accumulation
// order everywhere, so runs are bit-reproducible.
struct Truncation {
  int d = 1;
  int Q = 6;
  int kmax = 6;
  std::vector<int> mult;  // size kmax+1

  std::vector<int> offset;  // block start of family k inside a site vector
  int dim = 0;              // sum of mult
  int nsites = 0;           // (2Q+1)^d

  void finalize() {
    if (d < 1 || d > 4) throw std::invalid_argument("truncation: d out of range");
    if (Q < 0) throw std::invalid_argument("truncation: negative Q");
    if ((int)mult.size() != kmax + 1)
      throw std::invalid_argument("truncation: mult size != kmax+1");
    for (int m : mult)
      if (m < 0 || m > 2) throw std::invalid_argument("truncation: mult entry not in 0..2");
    offset.assign(kmax + 1, 0);
    dim = 0;
    for (int k = 0; k <= kmax; ++k) {
      offset[k] = dim;
      dim += mult[k];
    }
    nsites = 1;
    for (int i = 0; i < d; ++i) nsites *= 2 * Q + 1;
  }

  bool compatible(const Truncation& o) const {
    return d == o.d && Q == o.Q && kmax == o.kmax && mult == o.mult;
  }

  // site index <-> lattice vector, lexicographic over [-Q,Q]^d
  int site_index(const std::vector<int>& q) const {
    int idx = 0;
    for (int i = 0; i < d; ++i) {
      if (q[i] < -Q || q[i] > Q) return -1;
      idx = idx * (2 * Q + 1) + (q[i] + Q);
    }
    return idx;
  }
  std::vector<int> site_vector(int idx) const {
    std::vector<int> q(d);
    for (int i = d - 1; i >= 0; --i) {
      q[i] = idx % (2 * Q + 1) - Q;
      idx /= (2 * Q + 1);
    }
    return q;
  }
  int negate_index(int idx) const {
    std::vector<int> q = site_vector(idx);
    for (int& c : q) c = -c;
    return site_index(q);
  }

  // q > 0 in the fixed lexicographic sense: first nonzero component positive.
  static bool lex_positive(const std::vector<int>& q) {
    for (int c : q) {
      if (c > 0) return true;
      if (c < 0) return false;
    }
    return false;
  }
  bool site_lex_positive(int idx) const { return lex_positive(site_vector(idx)); }

  bool is_zero_site(int idx) const {
    for (int c : site_vector(idx))
      if (c != 0) return false;
    return true;
  }

  int linf(int idx) const {
    int m = 0;
    for (int c : site_vector(idx)) m = std::max(m, std::abs(c));
    return m;
  }
};

inline double dot(const std::vector<double>& omega, const std::vector<int>& q) {
  double s = 0;
  for (size_t i = 0; i < q.size(); ++i) s += omega[i] * q[i];
  return s;
}

}  // namespace rgt
