#include "rgtorus/nlw.hpp"

#include <limits>
#include <set>
#include <stdexcept>

namespace rgt {

void NLWConfig::validate() const {
  if (!(m > 0.0)) throw std::invalid_argument("nlw: mass m must be positive");
  if (tangential.empty()) throw std::invalid_argument("nlw: tangential set is empty");
  std::set<int> abs_seen;
  for (int n : tangential) {
    if (!abs_seen.insert(std::abs(n)).second)
      throw std::invalid_argument("nlw: tangential modes must have distinct |n|");
    if (std::abs(n) > n_space)
      throw std::invalid_argument("nlw: tangential mode outside spatial cutoff");
  }
  if (f_coeffs.empty()) throw std::invalid_argument("nlw: f has no coefficients");
  for (double c : f_coeffs)
    if (!std::isfinite(c)) throw std::invalid_argument("nlw: non-finite f coefficient");
  if (n_space < 1) throw std::invalid_argument("nlw: n_space must be >= 1");
}

namespace {

// psi_n as sum of at most two complex exponentials c * e^{i w x}.
struct ExpTerm {
  int w;
  cplx c;
};

int exp_terms(int n, ExpTerm out[2]) {
  if (n == 0) {
    out[0] = {0, cplx(1.0 / std::sqrt(2.0 * pi), 0.0)};
    return 1;
  }
  double s = 1.0 / (2.0 * std::sqrt(pi));
  if (n > 0) {
    out[0] = {n, cplx(s, 0.0)};
    out[1] = {-n, cplx(s, 0.0)};
  } else {
    // sin(kx) = (e^{ikx} - e^{-ikx}) / (2i)
    out[0] = {-n, cplx(0.0, -s)};
    out[1] = {n, cplx(0.0, s)};
  }
  return 2;
}

}  // namespace

double quartic_coefficient(int i, int j, int k, int l) {
  ExpTerm a[2], b[2], c[2], d[2];
  int na = exp_terms(i, a), nb = exp_terms(j, b), nc = exp_terms(k, c), nd = exp_terms(l, d);
  cplx acc = 0.0;
  for (int p = 0; p < na; ++p)
    for (int q = 0; q < nb; ++q)
      for (int r = 0; r < nc; ++r)
        for (int s = 0; s < nd; ++s)
          if (a[p].w + b[q].w + c[r].w + d[s].w == 0)
            acc += a[p].c * b[q].c * c[r].c * d[s].c;
  return 2.0 * pi * acc.real();  // imaginary part cancels exactly
}

double f_eval(const std::vector<double>& c, double u) {
  // f(u) = sum_p c[p-3] u^p, Horner from the top power
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * u + *it;
  return acc * u * u * u;
}

double f_deriv(const std::vector<double>& c, double u, int order) {
  if (order == 0) return f_eval(c, u);
  double out = 0.0;
  for (int idx = 0; idx < (int)c.size(); ++idx) {
    int p = idx + 3;
    if (p < order) continue;
    double fac = 1.0;
    for (int j = 0; j < order; ++j) fac *= double(p - j);
    out += c[idx] * fac * std::pow(u, p - order);
  }
  return out;
}

double g_eval(const std::vector<double>& c, double u) {
  double out = 0.0;
  for (int idx = 0; idx < (int)c.size(); ++idx) {
    int p = idx + 3;
    out += c[idx] * std::pow(u, p + 1) / double(p + 1);
  }
  return out;
}

namespace {

int grid_size(const NLWConfig& cfg) {
  int pmax = 2 + (int)cfg.f_coeffs.size();  // highest power of f
  return (pmax + 1) * cfg.n_space + 1;      // exact trapezoid for f(u) psi_n
}

std::vector<double> field_on_grid(const NLWConfig& cfg, const ModeVector& q, int M) {
  int N = cfg.n_space;
  std::vector<double> u((size_t)M, 0.0);
  for (int j = 0; j < M; ++j) {
    double x = 2.0 * pi * j / M;
    double s = 0.0;
    for (int n = -N; n <= N; ++n) {
      double qn = q[mode_index(n, N)];
      if (qn != 0.0) s += qn * basis_value(n, x);
    }
    u[(size_t)j] = s;
  }
  return u;
}

}  // namespace

ModeVector gradient_G(const NLWConfig& cfg, const ModeVector& q, double ball) {
  int N = cfg.n_space;
  if (q.size() != 2 * N + 1) throw std::invalid_argument("gradient_G: wrong mode vector size");
  if (q.template lpNorm<1>() > ball)
    throw std::domain_error("gradient_G: state outside analyticity ball");
  int M = grid_size(cfg);
  std::vector<double> u = field_on_grid(cfg, q, M);
  std::vector<double> fu((size_t)M);
  for (int j = 0; j < M; ++j) fu[(size_t)j] = f_eval(cfg.f_coeffs, u[(size_t)j]);
  ModeVector grad = ModeVector::Zero(2 * N + 1);
  double wq = 2.0 * pi / M;
  for (int n = -N; n <= N; ++n) {
    double acc = 0.0;
    for (int j = 0; j < M; ++j) acc += fu[(size_t)j] * basis_value(n, 2.0 * pi * j / M);
    grad[mode_index(n, N)] = wq * acc;
  }
  return grad;
}

double potential_G(const NLWConfig& cfg, const ModeVector& q) {
  int M = grid_size(cfg) + cfg.n_space;  // g has one power more than f
  std::vector<double> u = field_on_grid(cfg, q, M);
  double acc = 0.0;
  for (int j = 0; j < M; ++j) acc += g_eval(cfg.f_coeffs, u[(size_t)j]);
  return acc * 2.0 * pi / M;
}

HamiltonianSplit hamiltonian(const NLWConfig& cfg, const ModeVector& q, const ModeVector& p) {
  int N = cfg.n_space;
  HamiltonianSplit out;
  ModeVector qt = ModeVector::Zero(2 * N + 1);
  for (int n : cfg.tangential) qt[mode_index(n, N)] = q[mode_index(n, N)];
  double quad_t = 0.0, quad_n = 0.0;
  for (int n = -N; n <= N; ++n) {
    int idx = mode_index(n, N);
    double zeta = eigenvalue(n, cfg.m);
    double term = 0.5 * (zeta * q[idx] * q[idx] + p[idx] * p[idx]);
    bool tang = false;
    for (int t : cfg.tangential) tang = tang || (t == n);
    (tang ? quad_t : quad_n) += term;
  }
  double G_full = potential_G(cfg, q);
  double G_d = potential_G(cfg, qt);
  out.tangential = quad_t + G_d;
  out.normal = quad_n + (G_full - G_d);
  out.total = out.tangential + out.normal;
  return out;
}

ModePacking ModePacking::build(const NLWConfig& cfg, int kmax) {
  cfg.validate();
  if (kmax > cfg.n_space) throw std::invalid_argument("packing: kmax exceeds n_space");
  ModePacking pk;
  pk.kmax = kmax;
  pk.members.resize((size_t)kmax + 1);
  auto is_tang = [&](int n) {
    for (int t : cfg.tangential)
      if (t == n) return true;
    return false;
  };
  if (!is_tang(0)) pk.members[0].push_back(0);
  for (int k = 1; k <= kmax; ++k) {
    if (!is_tang(k)) pk.members[(size_t)k].push_back(k);    // cosine
    if (!is_tang(-k)) pk.members[(size_t)k].push_back(-k);  // sine
  }
  return pk;
}

std::vector<int> ModePacking::mults() const {
  std::vector<int> m;
  for (auto& v : members) m.push_back((int)v.size());
  return m;
}

Truncation ModePacking::truncation(int d, int Q) const {
  Truncation tr;
  tr.d = d;
  tr.Q = Q;
  tr.kmax = kmax;
  tr.mult = mults();
  tr.finalize();
  return tr;
}

HypothesisReport check_hypotheses(double m, int k_lo, int k_hi) {
  HypothesisReport rep;
  rep.growth_const = std::numeric_limits<double>::infinity();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (int k = k_lo; k <= k_hi; ++k) {
    double mk = mu_of(k, m);
    rep.growth_const = std::min(rep.growth_const, mk / k);
    double defect = std::abs(mu_of(k + 1, m) - mk - 1.0);  // asymptotic gap is 1
    rep.worst_gap_defect = std::max(rep.worst_gap_defect, defect * k);
    if (defect > 0) {
      double lx = std::log((double)k), ly = std::log(defect);
      sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
      ++cnt;
    }
  }
  if (cnt >= 2) rep.xi_fit = -(cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  rep.growth_ok = rep.growth_const > 0.0;
  rep.gaps_ok = std::isfinite(rep.worst_gap_defect);  // defect * k stayed finite, xi >= 1
  return rep;
}

}  // namespace rgt
