#include <random>

#include "doctest.h"
#include "rgtorus/nlw.hpp"

using namespace rgt;

namespace {

// Composite Simpson quadrature over [0, 2pi], the independent oracle for
// every integral identity below.
template <typename F>
double quad(F f, int panels = 4000) {
  double h = 2.0 * pi / panels;
  double acc = f(0.0) + f(2.0 * pi);
  for (int j = 1; j < panels; ++j) acc += f(j * h) * (j % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

}  // namespace

TEST_CASE("eigenvalues") {
  CHECK(eigenvalue(0, 1.0) == 1.0);
  CHECK(eigenvalue(2, 1.0) == 5.0);
  CHECK(mu_of(2, 1.0) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-15));
  CHECK(eigenvalue(-3, 2.0) == 11.0);  // even in n
}

TEST_CASE("basis orthonormality by quadrature") {
  CHECK(quad([](double x) { return basis_value(1, x) * basis_value(1, x); }) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(quad([](double x) { return basis_value(1, x) * basis_value(-1, x); })) < 1e-12);
  CHECK(basis_value(0, 1.7) == doctest::Approx(1.0 / std::sqrt(2.0 * pi)).epsilon(1e-15));
  CHECK(quad([](double x) { return basis_value(0, x) * basis_value(0, x); }) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("quartic coefficients: closed form vs quadrature") {
  CHECK(quartic_coefficient(0, 0, 0, 0) == doctest::Approx(1.0 / (2.0 * pi)).epsilon(1e-14));
  CHECK(quartic_coefficient(1, 1, 1, 1) == doctest::Approx(3.0 / (4.0 * pi)).epsilon(1e-14));
  CHECK(quartic_coefficient(1, 2, 4, 8) == 0.0);  // no vanishing sign combination

  std::mt19937 rng(41);
  std::uniform_int_distribution<int> idx(-5, 5);
  for (int t = 0; t < 25; ++t) {
    int i = idx(rng), j = idx(rng), k = idx(rng), l = idx(rng);
    double closed = quartic_coefficient(i, j, k, l);
    double integral = quad([&](double x) {
      return basis_value(i, x) * basis_value(j, x) * basis_value(k, x) * basis_value(l, x);
    });
    CHECK(closed == doctest::Approx(integral).epsilon(1e-10));
    // permutation symmetry (summation order differs, so compare to rounding)
    CHECK(closed == doctest::Approx(quartic_coefficient(l, k, j, i)).epsilon(1e-13));
    CHECK(closed == doctest::Approx(quartic_coefficient(j, i, l, k)).epsilon(1e-13));
    // selection rule
    bool rule = false;
    for (int s1 : {1, -1})
      for (int s2 : {1, -1})
        for (int s3 : {1, -1})
          if (std::abs(i) + s1 * std::abs(j) + s2 * std::abs(k) + s3 * std::abs(l) == 0)
            rule = true;
    if (!rule) CHECK(closed == 0.0);
  }
}

TEST_CASE("gradient_G: single cosine mode, homogeneity, ball") {
  NLWConfig cfg;
  cfg.m = 1.0;
  cfg.n_space = 8;
  cfg.tangential = {1};
  int N = cfg.n_space;

  // u = c psi_1: components 3c^3/(4pi) at n=1 and c^3/(4pi) at n=3
  double c = 0.7;
  ModeVector q = ModeVector::Zero(2 * N + 1);
  q[mode_index(1, N)] = c;
  ModeVector g = gradient_G(cfg, q);
  CHECK(g[mode_index(1, N)] == doctest::Approx(3.0 * c * c * c / (4.0 * pi)).epsilon(1e-13));
  CHECK(g[mode_index(3, N)] == doctest::Approx(c * c * c / (4.0 * pi)).epsilon(1e-13));
  for (int n = -N; n <= N; ++n)
    if (n != 1 && n != 3) CHECK(std::abs(g[mode_index(n, N)]) < 1e-14);

  // cubic homogeneity
  ModeVector g2 = gradient_G(cfg, 2.0 * q);
  CHECK((g2 - 8.0 * g).norm() < 1e-12);

  // zero in, zero out
  CHECK(gradient_G(cfg, ModeVector::Zero(2 * N + 1)).norm() == 0.0);

  // analyticity ball guard
  CHECK_THROWS_AS((void)gradient_G(cfg, q, 0.5), std::domain_error);
}

TEST_CASE("gradient_G is the gradient of potential_G (finite differences)") {
  NLWConfig cfg;
  cfg.m = 1.0;
  cfg.n_space = 5;
  cfg.tangential = {1};
  cfg.f_coeffs = {1.0, -0.3};  // u^3 - 0.3 u^4
  int N = cfg.n_space;

  std::mt19937 rng(4242);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  ModeVector q(2 * N + 1);
  for (int i = 0; i < q.size(); ++i) q[i] = u(rng);

  ModeVector g = gradient_G(cfg, q);
  double h = 1e-5;
  for (int n = -N; n <= N; n += 2) {
    ModeVector qp = q, qm = q;
    qp[mode_index(n, N)] += h;
    qm[mode_index(n, N)] -= h;
    double fd = (potential_G(cfg, qp) - potential_G(cfg, qm)) / (2.0 * h);
    CHECK(std::abs(fd - g[mode_index(n, N)]) < 1e-6);
  }
}

TEST_CASE("hamiltonian split is exact") {
  NLWConfig cfg;
  cfg.m = 1.3;
  cfg.n_space = 6;
  cfg.tangential = {1, -4};
  int N = cfg.n_space;
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (int t = 0; t < 5; ++t) {
    ModeVector q(2 * N + 1), p(2 * N + 1);
    for (int i = 0; i < q.size(); ++i) {
      q[i] = u(rng);
      p[i] = u(rng);
    }
    HamiltonianSplit hs = hamiltonian(cfg, q, p);
    // unsplit recomputation
    double quad_full = 0.0;
    for (int n = -N; n <= N; ++n) {
      int i = mode_index(n, N);
      quad_full += 0.5 * (eigenvalue(n, cfg.m) * q[i] * q[i] + p[i] * p[i]);
    }
    double H = quad_full + potential_G(cfg, q);
    CHECK(hs.total == doctest::Approx(H).epsilon(1e-12));
    CHECK(hs.tangential + hs.normal == doctest::Approx(H).epsilon(1e-12));
  }
}

TEST_CASE("mode packing follows the tangential exceptions") {
  NLWConfig cfg;
  cfg.m = 1.0;
  cfg.n_space = 6;
  cfg.tangential = {1};
  ModePacking pk = ModePacking::build(cfg, 4);
  CHECK(pk.mults() == std::vector<int>{1, 1, 2, 2, 2});  // k=0: q_0; k=1: sine only
  CHECK(pk.members[1] == std::vector<int>{-1});
  CHECK(pk.members[2] == std::vector<int>{2, -2});  // cosine first

  cfg.tangential = {0, 2};
  ModePacking pk2 = ModePacking::build(cfg, 3);
  CHECK(pk2.mults() == std::vector<int>{0, 2, 1, 2});  // k=0 absent, k=2 sine only
  CHECK(pk2.members[2] == std::vector<int>{-2});

  Truncation tr = pk2.truncation(2, 3);
  CHECK(tr.dim == 5);
  CHECK(tr.d == 2);
}

TEST_CASE("hypothesis report: growth and gap asymptotics") {
  HypothesisReport rep = check_hypotheses(1.0, 2, 1000);
  CHECK(rep.growth_ok);
  CHECK(rep.growth_const > 0.99);  // mu_k/k -> 1 from above for m=1
  CHECK(rep.gaps_ok);
  // gap defect ~ m/(2k^2): fitted decay exponent about 2, comfortably >= 1
  CHECK(rep.xi_fit == doctest::Approx(2.0).epsilon(0.05));
  CHECK(rep.worst_gap_defect < 1.0);
}

TEST_CASE("config validation") {
  NLWConfig cfg;
  cfg.tangential = {1, -1};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);  // |n| collision
  cfg.tangential = {1, 2};
  cfg.m = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.m = 1.0;
  cfg.n_space = 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);  // mode 2 outside cutoff
}
