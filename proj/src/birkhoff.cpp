#include "rgtorus/birkhoff.hpp"

#include <limits>
#include <map>
#include <stdexcept>

namespace rgt {

namespace {

bool is_resonant_key(const Polynomial::Key& k, int d) {
  for (int i = 0; i < d; ++i)
    if (k[(size_t)i] != k[(size_t)(d + i)]) return false;
  return true;
}

// mu-hat of a monomial: sum_i mu_i (alpha_i - beta_i).
double mu_hat(const Polynomial::Key& k, const VectorXd& mu) {
  int d = (int)mu.size();
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += mu[i] * (double(k[(size_t)i]) - double(k[(size_t)(d + i)]));
  return s;
}

Polynomial quartic_tangential(const NLWConfig& cfg, const VectorXd& mu) {
  int d = cfg.dim_t();
  double c3 = cfg.f_coeffs[0];
  // q_i = (z_i + zbar_i) / sqrt(2 mu_i)
  std::vector<Polynomial> q;
  for (int i = 0; i < d; ++i) {
    Polynomial qi = Polynomial::variable(d, i, false) + Polynomial::variable(d, i, true);
    q.push_back(qi * cplx(1.0 / std::sqrt(2.0 * mu[i])));
  }
  Polynomial G(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      Polynomial qij = q[(size_t)i].mul(q[(size_t)j]);
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
          double g = quartic_coefficient(cfg.tangential[(size_t)i], cfg.tangential[(size_t)j],
                                         cfg.tangential[(size_t)k], cfg.tangential[(size_t)l]);
          if (g == 0.0) continue;
          G += qij.mul(q[(size_t)k]).mul(q[(size_t)l]) * cplx(0.25 * c3 * g);
        }
    }
  return G;
}

}  // namespace

NormalFormData birkhoff_transform(const NLWConfig& cfg) {
  cfg.validate();
  VectorXd mu(cfg.dim_t());
  for (int i = 0; i < cfg.dim_t(); ++i) mu[i] = mu_of(cfg.tangential[(size_t)i], cfg.m);
  return birkhoff_transform_quartic(quartic_tangential(cfg, mu), mu, cfg.tangential);
}

NormalFormData birkhoff_transform_quartic(const Polynomial& G4, const VectorXd& mu,
                                          const std::vector<int>& modes) {
  NormalFormData nf;
  nf.d = (int)mu.size();
  nf.modes = modes;
  nf.mu = mu;

  Polynomial F(nf.d), reso(nf.d);
  nf.divisor_min = std::numeric_limits<double>::infinity();
  for (auto& [k, c] : G4.terms()) {
    if (is_resonant_key(k, nf.d)) {
      reso.add_term(k, c);
      continue;
    }
    double mh = mu_hat(k, nf.mu);
    if (mh == 0.0) throw std::runtime_error("birkhoff: exact nonresonant zero divisor");
    nf.divisor_min = std::min(nf.divisor_min, std::abs(mh));
    // remove c*W from the quartic: c + i mu-hat F_W = 0
    F.add_term(k, iu * c / mh);
  }
  nf.F = F;
  nf.resonant = reso;

  for (int i = 0; i < nf.d; ++i) {
    Polynomial zi = Polynomial::variable(nf.d, i, false);
    nf.jet.push_back((zi + poisson(zi, F, 3)).truncate_degree(3));
    nf.jet_inv.push_back((zi - poisson(zi, F, 3)).truncate_degree(3));
  }

  // gbar from the resonant polynomial: Gbar = (1/2) sum_ij gbar_ij |z_i|^2 |z_j|^2.
  nf.gbar = MatrixXd::Zero(nf.d, nf.d);
  for (int i = 0; i < nf.d; ++i)
    for (int j = 0; j < nf.d; ++j) {
      Polynomial::Key k((size_t)(2 * nf.d), 0);
      k[(size_t)i] += 1;
      k[(size_t)j] += 1;
      k[(size_t)(nf.d + i)] += 1;
      k[(size_t)(nf.d + j)] += 1;
      cplx c = reso.coeff(k);
      nf.gbar(i, j) = (i == j) ? 2.0 * c.real() : c.real();
    }

  // Lie-series check: H o Gamma at degree 4 must be Lambda + Gbar.
  Polynomial Lambda(nf.d);
  for (int i = 0; i < nf.d; ++i) {
    Polynomial::Key k((size_t)(2 * nf.d), 0);
    k[(size_t)i] = 1;
    k[(size_t)(nf.d + i)] = 1;
    Lambda.add_term(k, nf.mu[i]);
  }
  Polynomial H4 = (Lambda + G4 + poisson(Lambda, F, 4)).truncate_degree(4);
  Polynomial defect = H4 - Lambda - reso;
  nf.nonres_residual = defect.max_abs_coeff();
  return nf;
}

MatrixXd gbar_matrix(const NLWConfig& cfg) {
  cfg.validate();
  int d = cfg.dim_t();
  double c3 = cfg.f_coeffs[0];
  MatrixXd g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      int ni = cfg.tangential[(size_t)i], nj = cfg.tangential[(size_t)j];
      double mi = mu_of(ni, cfg.m), mj = mu_of(nj, cfg.m);
      double gij = quartic_coefficient(ni, ni, nj, nj);
      g(i, j) = (i == j) ? 0.75 * c3 * quartic_coefficient(ni, ni, ni, ni) / (mi * mi)
                         : 1.5 * c3 * gij / (mi * mj);
    }
  return g;
}

double small_divisor(double m, const std::array<int, 4>& modes,
                     const std::array<int, 4>& signs) {
  for (int s : signs)
    if (s != 1 && s != -1) throw std::invalid_argument("small_divisor: signs must be +-1");
  // identically zero iff the signed multiplicities cancel per eigenvalue |n|
  std::map<int, int> net;
  for (int t = 0; t < 4; ++t) net[std::abs(modes[(size_t)t])] += signs[(size_t)t];
  bool all_zero = true;
  for (auto& [n, s] : net) all_zero = all_zero && (s == 0);
  if (all_zero)
    throw std::domain_error("small_divisor: resonant index pattern, excluded combination");
  double v = 0.0;
  for (int t = 0; t < 4; ++t) v += signs[(size_t)t] * mu_of(modes[(size_t)t], m);
  return v;
}

VectorXd modulated_frequencies(const NormalFormData& nf, const VectorXd& a) {
  if (a.size() != nf.d) throw std::invalid_argument("modulated_frequencies: bad amplitude size");
  return nf.mu + nf.gbar * a.cwiseProduct(a);
}

ScaledHamiltonian rescale_hamiltonian(const NormalFormData& nf, const NLWConfig& cfg,
                                      const VectorXd& a) {
  ScaledHamiltonian s;
  s.a = a;
  s.delta = a.norm();
  s.lambda = s.delta;
  s.omega = modulated_frequencies(nf, a);
  // lowest power of f is 3 + index of the first nonzero coefficient; the
  // m-th normal jet coefficient of the rescaled field carries delta^(pmin+m-2)
  int pmin = 3;
  for (std::size_t i = 0; i < cfg.f_coeffs.size(); ++i) {
    if (cfg.f_coeffs[i] != 0.0) { pmin = 3 + (int)i; break; }
  }
  int pmax = 2 + (int)cfg.f_coeffs.size();
  for (int mord = 0; mord <= pmax; ++mord)
    s.jet_exponents.push_back(pmin + mord - 2);
  return s;
}

}  // namespace rgt
