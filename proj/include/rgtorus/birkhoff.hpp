#pragma once

#include <array>

#include "rgtorus/nlw.hpp"
#include "rgtorus/polynomial.hpp"

namespace rgt {

// Quartic Birkhoff normal form on the tangential modes. Variables are the
// complex coordinates z_i = (mu_i q_i + i p_i) / sqrt(2 mu_i); in them the
// quartic part of H becomes Gbar = (1/2) sum_ij gbar_ij |z_i|^2 |z_j|^2 after
// the time-1 flow of the generator F removes all nonresonant monomials.
struct NormalFormData {
  int d = 0;
  std::vector<int> modes;  // tangential n_i
  VectorXd mu;
  MatrixXd gbar;
  Polynomial F{0};
  std::vector<Polynomial> jet;      // Gamma_i(z) = z_i + {z_i, F}, cubic
  std::vector<Polynomial> jet_inv;  // inverse jet, cubic
  Polynomial resonant{0};           // Gbar as a polynomial
  double nonres_residual = 0.0;     // nonresonant degree-4 content of H o Gamma
  double divisor_min = 0.0;         // smallest |mu-hat| actually divided by
};

NormalFormData birkhoff_transform(const NLWConfig& cfg);

// Same construction from explicit quartic data in the z coordinates.
NormalFormData birkhoff_transform_quartic(const Polynomial& G4, const VectorXd& mu,
                                          const std::vector<int>& modes);

// Direct tensor contraction, bypassing the generator machinery.
MatrixXd gbar_matrix(const NLWConfig& cfg);

// sum_t signs[t] * mu_{modes[t]}. Throws std::domain_error when the signed
// combination vanishes identically in m (paired equal |n| with opposite signs),
// the resonant patterns excluded from the normal form.
double small_divisor(double m, const std::array<int, 4>& modes,
                     const std::array<int, 4>& signs);

// omega_i(a) = mu_i + sum_j gbar_ij a_j^2 for torus amplitudes |z_i| = a_i.
VectorXd modulated_frequencies(const NormalFormData& nf, const VectorXd& a);

// Book-keeping for the amplitude rescaling x = delta^2 xt, I = delta^4 It:
// the order-m jet of the scaled normal forcing carries delta^(pmin + m - 2).
struct ScaledHamiltonian {
  double delta = 0.0;
  double lambda = 0.0;  // = delta, the primary small parameter
  std::vector<int> jet_exponents;
  VectorXd a;
  VectorXd omega;
};
ScaledHamiltonian rescale_hamiltonian(const NormalFormData& nf, const NLWConfig& cfg,
                                      const VectorXd& a);

}  // namespace rgt
