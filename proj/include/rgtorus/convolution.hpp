#pragma once

#include "rgtorus/types.hpp"

namespace rgt {

// Scalar sequence on the symmetric window [-W, W].
struct Sequence {
  int W = 0;
  std::vector<cplx> v;  // size 2W+1, index n stored at n+W

  explicit Sequence(int window = 0) : W(window), v(2 * window + 1, cplx{0.0, 0.0}) {}
  cplx& at(int n) { return v[n + W]; }
  cplx at(int n) const { return (n < -W || n > W) ? cplx{0.0, 0.0} : v[n + W]; }

  double norm(double s) const {
    double acc = 0.0;
    for (int n = -W; n <= W; ++n) acc += kweight(std::abs(n), s) * std::abs(at(n));
    return acc;
  }
};

struct ConvolveResult {
  Sequence seq;
  double dropped_mass = 0.0;  // l1 mass that fell outside the output window
  bool truncated = false;
};

// (a*b)(n) = sum_m a(m) b(n-m), restricted to |n| <= Wout.
inline ConvolveResult convolve(const Sequence& a, const Sequence& b, int Wout) {
  ConvolveResult r{Sequence(Wout)};
  for (int n = -(a.W + b.W); n <= a.W + b.W; ++n) {
    cplx acc{0.0, 0.0};
    for (int m = -a.W; m <= a.W; ++m) acc += a.at(m) * b.at(n - m);
    if (std::abs(n) <= Wout) {
      r.seq.at(n) = acc;
    } else {
      r.dropped_mass += std::abs(acc);
      if (std::abs(acc) > 0.0) r.truncated = true;
    }
  }
  return r;
}

}  // namespace rgt
