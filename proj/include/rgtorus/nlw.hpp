#pragma once

#include "rgtorus/truncation.hpp"

namespace rgt {

// 1D nonlinear wave equation u_tt = u_xx - m u - f(u) on [0, 2pi] periodic,
// f(u) = sum_{p >= 3} c_p u^p with finitely many terms.
struct NLWConfig {
  double m = 1.0;
  std::vector<double> f_coeffs = {1.0};  // c_3, c_4, ...
  std::vector<int> tangential = {1};     // signed modes n_1..n_d, pairwise distinct |n_i|
  int n_space = 8;                       // spatial mode cutoff N

  int dim_t() const { return (int)tangential.size(); }
  void validate() const;
};

// zeta_n = n^2 + m, mu_n = sqrt(zeta_n); depends on |n| only.
inline double eigenvalue(int n, double m) { return double(n) * double(n) + m; }
inline double mu_of(int n, double m) { return std::sqrt(eigenvalue(n, m)); }

// psi_0 = 1/sqrt(2pi), psi_n = cos(nx)/sqrt(pi), psi_{-n} = sin(nx)/sqrt(pi).
inline double basis_value(int n, double x) {
  if (n == 0) return 1.0 / std::sqrt(2.0 * pi);
  if (n > 0) return std::cos(n * x) / std::sqrt(pi);
  return std::sin(-n * x) / std::sqrt(pi);
}

// g_ijkl = integral psi_i psi_j psi_k psi_l over [0, 2pi], in closed form via
// the exponential representation of the basis.
double quartic_coefficient(int i, int j, int k, int l);

// f, f', f'', f''' and the potential density g(u) = integral_0^u f.
double f_eval(const std::vector<double>& c, double u);
double f_deriv(const std::vector<double>& c, double u, int order);
double g_eval(const std::vector<double>& c, double u);

// f and g over a generic scalar (dual numbers, truncated series); S needs
// S(double), S*S, S*double, +=.
template <typename S>
S f_of(const std::vector<double>& c, const S& u) {
  S acc(0.0);
  S upow = u * u * u;
  for (size_t i = 0; i < c.size(); ++i) {
    if (c[i] != 0.0) acc += upow * c[i];
    upow = upow * u;
  }
  return acc;
}
template <typename S>
S g_of(const std::vector<double>& c, const S& u) {
  S acc(0.0);
  S u2 = u * u;
  S upow = u2 * u2;
  for (size_t i = 0; i < c.size(); ++i) {
    if (c[i] != 0.0) acc += upow * (c[i] / double(4 + i));
    upow = upow * u;
  }
  return acc;
}

// Mode vectors live on n in [-N, N], index n+N.
using ModeVector = VectorXd;
inline int mode_index(int n, int N) { return n + N; }

// grad_n G = integral f(u) psi_n dx by collocation on (pmax+1)N+1 points.
// Throws if ||q||_{l1} exceeds the analyticity ball.
ModeVector gradient_G(const NLWConfig& cfg, const ModeVector& q, double ball = 1.0e3);

double potential_G(const NLWConfig& cfg, const ModeVector& q);

struct HamiltonianSplit {
  double total = 0.0;
  double tangential = 0.0;  // Lambda_d + G_d
  double normal = 0.0;      // normal quadratic + (G - G_d)
};
HamiltonianSplit hamiltonian(const NLWConfig& cfg, const ModeVector& q, const ModeVector& p);

// Packing of non-tangential modes into per-family blocks x_k:
// family k = 0 holds q_0 (if normal); k >= 1 holds (q_k, q_{-k}) minus any
// tangential member, cosine component first.
struct ModePacking {
  int kmax = 0;
  std::vector<std::vector<int>> members;  // members[k] = modes packed at family k

  static ModePacking build(const NLWConfig& cfg, int kmax);
  std::vector<int> mults() const;
  Truncation truncation(int d, int Q) const;
};

struct HypothesisReport {
  double growth_const = 0.0;   // inf_k mu_k / k  (gamma = 1)
  double xi_fit = 0.0;         // fitted decay exponent of gap defects
  double worst_gap_defect = 0.0;
  bool growth_ok = false;
  bool gaps_ok = false;        // gap defect * k^1 bounded (xi >= 1)
};
HypothesisReport check_hypotheses(double m, int k_lo, int k_hi);

}  // namespace rgt
