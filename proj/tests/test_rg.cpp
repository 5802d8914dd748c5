#include <cmath>
#include <complex>

#include "doctest.h"
#include "rgtorus/birkhoff.hpp"
#include "rgtorus/rg.hpp"

using namespace rgt;

namespace {

Truncation make_tr(int d, int Q, std::vector<int> mult) {
  Truncation tr;
  tr.d = d;
  tr.Q = Q;
  tr.kmax = (int)mult.size() - 1;
  tr.mult = std::move(mult);
  tr.finalize();
  return tr;
}

int site_of(const Truncation& tr, std::vector<int> q) { return tr.site_index(q); }

// A_n-style kernel with one family block everywhere except q = 0.
DiagonalKernel constant_a_kernel(const Truncation& tr, const std::vector<double>& omega,
                                 const std::vector<MatrixXcd>& afam) {
  DiagonalKernel A(tr);
  for (int site = 0; site < tr.nsites; ++site) {
    if (tr.is_zero_site(site)) continue;
    double kap = dot(omega, tr.site_vector(site));
    for (int k = 0; k <= tr.kmax; ++k) {
      if (tr.mult[k] == 0) continue;
      A.block(site, k) = kap < 0.0 ? afam[k].conjugate().eval() : afam[k];
    }
  }
  return A;
}

}  // namespace

TEST_CASE("divisor kernel and resolvent on the scalar toy") {
  Truncation tr = make_tr(1, 4, {1});
  std::vector<MatrixXcd> mu2 = {MatrixXcd::Constant(1, 1, 4.0)};
  std::vector<double> omega = {3.0};
  ClusterLevel lvl = initial_clusters(mu2, 0.5);
  DiagonalKernel K = k0_kernel(tr, omega, mu2);

  CHECK(K.block(site_of(tr, {1}), 0)(0, 0).real() == doctest::Approx(5.0));
  CHECK(K.block(site_of(tr, {0}), 0)(0, 0).real() == doctest::Approx(-4.0));
  CHECK(K.reality_defect() == 0.0);

  GammaBuild gb = gamma_operator(K, lvl, nullptr, omega, 1e12);
  // mu~ = 2, omega.q = 3, chihat = 1: Gamma = 1/(9-4) = 0.2
  CHECK(gb.G.block(site_of(tr, {1}), 0)(0, 0).real() == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(gb.G.block(site_of(tr, {-1}), 0)(0, 0).real() == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(gb.G.block(site_of(tr, {2}), 0)(0, 0).real() ==
        doctest::Approx(1.0 / 32.0).epsilon(1e-15));
  CHECK(gb.G.block(site_of(tr, {0}), 0)(0, 0).real() == doctest::Approx(-0.25).epsilon(1e-15));
  CHECK(gb.G.reality_defect() == 0.0);
  CHECK(gb.norm == doctest::Approx(0.25));
  CHECK(gb.max_cond == doctest::Approx(1.0));

  // plateau: kappa lands inside the cluster window, the weight vanishes
  std::vector<double> om2 = {2.01};
  DiagonalKernel K2 = k0_kernel(tr, om2, mu2);
  GammaBuild gb2 = gamma_operator(K2, lvl, nullptr, om2, 1e12);
  CHECK(gb2.G.block(site_of(tr, {1}), 0).norm() == 0.0);
  CHECK(gb2.G.block(site_of(tr, {2}), 0)(0, 0).real() ==
        doctest::Approx(1.0 / (4.02 * 4.02 - 4.0)).epsilon(1e-14));
}

TEST_CASE("second-level resolvent sees the annulus-weighted kernel update") {
  Truncation tr = make_tr(1, 3, {1});
  std::vector<double> omega = {2.09};
  std::vector<MatrixXcd> mu2 = {MatrixXcd::Constant(1, 1, 4.0)};
  ClusterLevel lv1 = initial_clusters(mu2, 0.5);
  DiagonalKernel K1 = k0_kernel(tr, omega, mu2);
  LevelProjectors pj1 = build_projectors(lv1, omega, tr);

  double a1 = 0.01;
  DiagonalKernel A1 = constant_a_kernel(tr, omega, {MatrixXcd::Constant(1, 1, a1)});
  DiagonalKernel K2 = K1 - pj1.P * A1;
  std::vector<MatrixXcd> mu2b = {MatrixXcd::Constant(1, 1, 4.0 + a1)};
  ClusterLevel lv2 = recluster(lv1, mu2b);
  GammaBuild gb = gamma_operator(K2, lv2, &lv1, omega, 1e12);

  // q=1 sits in the parent transition annulus: d(2.09, [2,2]) = 0.09; the
  // child interval is clamped to the parent's, so both cutoffs see d = 0.09
  double chi1 = cutoff(2.09, 2.0, 2.0, 0.5, 1);
  double chi2 = cutoff(2.09, lv2.at(0).clo, lv2.at(0).chi, 0.5, 2);
  CHECK(chi1 == doctest::Approx(0.589568).epsilon(1e-6));
  CHECK(chi2 == 0.0);
  double div = 2.09 * 2.09 - 4.0 - chi1 * a1;
  double oracle = (1.0 - chi2) * chi1 / div;
  CHECK(gb.G.block(site_of(tr, {1}), 0)(0, 0).real() ==
        doctest::Approx(oracle).epsilon(1e-14));
  CHECK(gb.G.block(site_of(tr, {-1}), 0)(0, 0) ==
        std::conj(gb.G.block(site_of(tr, {1}), 0)(0, 0)));

  // far site: the parent weight is zero, so Gamma_2 vanishes even though the
  // child weight alone would not
  std::vector<double> om3 = {3.0};
  DiagonalKernel K1b = k0_kernel(tr, om3, mu2);
  DiagonalKernel K2b = K1b - build_projectors(lv1, om3, tr).P *
                                 constant_a_kernel(tr, om3, {MatrixXcd::Constant(1, 1, a1)});
  GammaBuild gb3 = gamma_operator(K2b, lv2, &lv1, om3, 1e12);
  CHECK(gb3.G.block(site_of(tr, {1}), 0).norm() == 0.0);
  CHECK(gb3.G.sup_block_norm() == 0.0);
}

TEST_CASE("Gamma K = Q_n P_{n-1} across branches on mixing and splitting families") {
  // family 0: complex-mixed pair that merges at level 1 and splits at level 2,
  // family 1: two well separated parents, family 2: a singleton
  Truncation tr = make_tr(1, 3, {2, 2, 1});
  MatrixXcd U(2, 2);
  double th = 0.3;
  U(0, 0) = std::cos(th);
  U(0, 1) = -std::sin(th);
  U(1, 0) = std::sin(th) * std::exp(cplx(0.0, 0.4));
  U(1, 1) = std::cos(th) * std::exp(cplx(0.0, 0.4));
  VectorXd zeta0(2);
  zeta0 << 4.0, 4.2;
  MatrixXcd mu2f0 = U * zeta0.asDiagonal() * U.adjoint();
  std::vector<MatrixXcd> mu2 = {
      mu2f0, (MatrixXd(2, 2) << 4.0, 0.0, 0.0, 36.0).finished(), MatrixXcd::Constant(1, 1, 9.0)};

  ClusterLevel lv1 = initial_clusters(mu2, 0.5);
  REQUIRE(lv1.count() == 4);  // fam 0: [2, 2.0494]; fam 1: [2,2], [6,6]; fam 2: [3,3]
  REQUIRE(lv1.at(0).eigs.size() == 2);

  // hermitian update, block-diagonal within the level-1 cluster subspaces; the
  // family-0 shift opens a gap above eta^2 so the merged pair splits again
  VectorXd shift0(2);
  shift0 << 0.01, 1.3;
  MatrixXcd afam0 = U * shift0.asDiagonal() * U.adjoint();
  std::vector<MatrixXcd> afam = {
      afam0, (MatrixXd(2, 2) << 0.015, 0.0, 0.0, 0.01).finished(),
      MatrixXcd::Constant(1, 1, 0.02)};
  std::vector<MatrixXcd> mu2b(3);
  for (int k = 0; k < 3; ++k) mu2b[(size_t)k] = mu2[(size_t)k] + afam[(size_t)k];
  ClusterLevel lv2 = recluster(lv1, mu2b);
  REQUIRE(lv2.count() == 5);  // the family-0 pair split into two children

  // omega sweep hits plateau parents with mixed children (both orientations),
  // a two-vector annulus, single-vector annuli on both family-1 parents, a
  // skipped plateau child, and a dead parent that kills a live child window
  for (double w : {2.09, 2.13, 2.95, 3.05, 1.97, 2.21}) {
    std::vector<double> omega = {w};
    DiagonalKernel K1 = k0_kernel(tr, omega, mu2);
    LevelProjectors pj1 = build_projectors(lv1, omega, tr);
    DiagonalKernel A1 = constant_a_kernel(tr, omega, afam);
    DiagonalKernel K2 = K1 - pj1.P * A1;
    LevelProjectors pj2 = build_projectors(lv2, omega, tr);
    GammaBuild gb = gamma_operator(K2, lv2, &lv1, omega, 1e12);
    CHECK(gb.G.reality_defect() < 1e-13);
    DiagonalKernel id = DiagonalKernel::identity(tr);
    for (int site = 0; site < tr.nsites; ++site)
      for (int k = 0; k <= tr.kmax; ++k) {
        MatrixXcd lhs = gb.G.block(site, k) * K2.block(site, k);
        MatrixXcd rhs =
            (id.block(site, k) - pj2.P.block(site, k)) * pj1.P.block(site, k);
        CHECK((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
      }
  }
}

TEST_CASE("near-singular divisor inside an active window aborts with the witness") {
  Truncation tr = make_tr(1, 2, {2});
  std::vector<MatrixXcd> mu2 = {(MatrixXd(2, 2) << 4.0, 0.0, 0.0, 4.3).finished()};
  ClusterLevel lvl = initial_clusters(mu2, 0.5);  // one pair cluster [2, 2.0736]
  std::vector<double> omega = {2.16};             // annulus of the level-1 cutoff

  // deliberately inconsistent kernel: one direction of the block is singular
  // at the annulus sites q = +-1, well conditioned elsewhere
  DiagonalKernel K(tr);
  for (int site = 0; site < tr.nsites; ++site) {
    bool hot = std::abs(tr.site_vector(site)[0]) == 1;
    K.block(site, 0) = hot ? (MatrixXd(2, 2) << 0.5, 0.0, 0.0, 1e-13).finished()
                           : (0.5 * MatrixXd::Identity(2, 2)).eval();
  }

  CHECK_THROWS_AS(gamma_operator(K, lvl, nullptr, omega, 1e12), RGAbort);
  try {
    gamma_operator(K, lvl, nullptr, omega, 1e12);
  } catch (const RGAbort& ab) {
    CHECK(ab.level == 1);
    CHECK(ab.family == 0);
    CHECK(ab.value > 1e12);
    REQUIRE(ab.q.size() == 1);
    CHECK(std::abs(ab.q[0]) == 1);
  }
}

TEST_CASE("solve_R: constant forcing, affine Neumann oracle, zero, abort") {
  SUBCASE("constant map forces R(z) = Gamma v for every z") {
    Truncation tr = make_tr(1, 1, {1, 2});
    DiagonalKernel G(tr);
    for (int site = 0; site < tr.nsites; ++site) {
      G.block(site, 0) = MatrixXcd::Constant(1, 1, 0.3);
      G.block(site, 1) = (MatrixXd(2, 2) << 0.2, 0.05, 0.05, -0.1).finished();
    }
    FourierMap v(tr, false);
    for (int site = 0; site < tr.nsites; ++site) {
      VectorXcd c(3);
      c << 0.4, -0.2, 0.1;
      v.set_coeff(site, c);
    }
    JetFunctional w(v);
    w.order = 2;
    JetSolve js = solve_R(w, G, 0.1, 1e-13);
    VectorXcd expect = G.apply_stacked(v.to_stacked());
    CHECK((js.R.constant.to_stacked() - expect).norm() < 1e-14);
    CHECK(js.R.linear.norm() < 1e-14);
    VectorXcd z = VectorXcd::Constant(expect.size(), cplx(0.3, -0.2));
    CHECK((js.R.eval(z) - expect).norm() < 1e-13);
    CHECK(js.contraction == 0.0);
    CHECK(js.tail < 1e-13);
  }

  SUBCASE("affine scalar: closed form matches the summed Neumann series") {
    Truncation tr = make_tr(1, 0, {1});
    DiagonalKernel G(tr);
    G.block(0, 0) = MatrixXcd::Constant(1, 1, 0.3);
    FourierMap v(tr, false);
    v.set_coeff(0, VectorXcd::Constant(1, 0.5));
    JetFunctional w(v);
    w.order = 1;
    w.linear = MatrixXcd::Constant(1, 1, 1.2);
    JetSolve js = solve_R(w, G, 0.05, 1e-14);

    // Neumann series for R = (1 - g L)^{-1} g (v + L z), g L = 0.36
    double c_sum = 0.0, l_sum = 0.0, pw = 1.0;
    while (pw > 1e-18) {
      c_sum += pw * 0.3 * 0.5;
      l_sum += pw * 0.36;
      pw *= 0.36;
    }
    CHECK(js.R.constant.to_stacked()(0).real() == doctest::Approx(c_sum).epsilon(1e-14));
    CHECK(js.R.linear(0, 0).real() == doctest::Approx(l_sum).epsilon(1e-14));
    CHECK(js.contraction == doctest::Approx(0.36).epsilon(1e-13));
    CHECK(js.tail < 1e-15);
  }

  SUBCASE("zero forcing gives the zero jet") {
    Truncation tr = make_tr(1, 1, {1});
    DiagonalKernel G(tr);
    for (int site = 0; site < tr.nsites; ++site) G.block(site, 0) = MatrixXcd::Constant(1, 1, 0.4);
    JetFunctional w(FourierMap(tr, false));
    w.order = 2;
    JetSolve js = solve_R(w, G, 0.1, 1e-14);
    CHECK(js.R.constant.to_stacked().norm() == 0.0);
    CHECK(js.R.linear.norm() == 0.0);
    CHECK(js.tail == 0.0);
  }

  SUBCASE("contraction precondition failure aborts") {
    Truncation tr = make_tr(1, 0, {1});
    DiagonalKernel G(tr);
    G.block(0, 0) = MatrixXcd::Constant(1, 1, 0.4);
    JetFunctional w(FourierMap(tr, false));
    w.order = 1;
    w.linear = MatrixXcd::Constant(1, 1, 1.5);  // ||Gamma Dw|| = 0.6
    CHECK_THROWS_AS(solve_R(w, G, 0.1, 1e-13), RGAbort);
  }
}

TEST_CASE("solve_R: quadratic scalar jet in closed form") {
  Truncation tr = make_tr(1, 0, {1});
  DiagonalKernel G(tr);
  double g = 0.4, v = 0.5, b = 0.3;
  G.block(0, 0) = MatrixXcd::Constant(1, 1, g);
  FourierMap vm(tr, false);
  vm.set_coeff(0, VectorXcd::Constant(1, v));
  JetFunctional w(vm);
  w.order = 2;
  w.linear = MatrixXcd::Zero(1, 1);
  w.quad = [b](const VectorXcd& x, const VectorXcd& y) {
    return (b * x.cwiseProduct(y)).eval();
  };

  JetSolve js = solve_R(w, G, 0.01, 1e-14);

  // constant: c = g(v + b c^2) -> c = (1 - sqrt(1 - 4 g^2 v b)) / (2 g b)
  double c = (1.0 - std::sqrt(1.0 - 4.0 * g * g * v * b)) / (2.0 * g * b);
  CHECK(js.R.constant.to_stacked()(0).real() == doctest::Approx(c).epsilon(1e-12));
  // linear: r1 = H g w'(c), H = 1/(1 - g w'(c)), w'(c) = 2 b c
  double H = 1.0 / (1.0 - g * 2.0 * b * c);
  double r1 = H * g * 2.0 * b * c;
  CHECK(js.R.linear(0, 0).real() == doctest::Approx(r1).epsilon(1e-12));
  // quadratic: r2 = H g b (1 + r1)^2
  double r2 = H * g * b * (1.0 + r1) * (1.0 + r1);
  VectorXcd e = VectorXcd::Constant(1, 1.0);
  CHECK(js.R.quad(e, e)(0).real() == doctest::Approx(r2).epsilon(1e-12));

  // the jet satisfies its own equation up to the cubic tail
  VectorXcd z = VectorXcd::Constant(1, 0.01);
  VectorXcd Rz = js.R.eval(z);
  VectorXcd defect = Rz - G.apply_stacked(w.eval(z + Rz));
  CHECK(defect.norm() < 1e-5);
  CHECK(js.tail < 1e-5);
}

TEST_CASE("extract_A reads the resonant diagonal and keeps reality") {
  Truncation tr = make_tr(1, 2, {2});
  std::vector<MatrixXcd> mu2 = {4.0 * MatrixXcd::Identity(2, 2)};
  ClusterLevel lvl = initial_clusters(mu2, 0.5);
  Eigen::Index n = (Eigen::Index)tr.nsites * tr.dim;

  MatrixXcd c(2, 2);
  c << cplx(0.40, 0.0), cplx(0.10, 0.05), cplx(0.10, -0.05), cplx(0.33, 0.0);
  MatrixXcd noise = MatrixXcd::Zero(2, 2);
  noise(0, 1) = cplx(1e-11, 0.0);

  SUBCASE("constant hermitian diagonal is extracted exactly") {
    MatrixXcd Dwn = MatrixXcd::Zero(n, n);
    for (int site = 0; site < tr.nsites; ++site)
      Dwn.block(2 * site, 2 * site, 2, 2) = c + noise;
    std::vector<double> omega = {2.0};
    auto S = resonant_sets(omega, lvl, tr);
    REQUIRE(S[0].size() == 2);  // q = 1 and q = -1
    AExtraction ax = extract_A(Dwn, lvl, S, omega, tr);
    MatrixXcd herm = c + 0.5 * (noise + noise.adjoint());
    CHECK((ax.family_blocks[0] - herm).norm() < 1e-14);
    CHECK(ax.raw_defect == doctest::Approx(std::sqrt(2.0) * 1e-11).epsilon(1e-6));
    CHECK(ax.norm == doctest::Approx(herm.operatorNorm()));
    CHECK((ax.A.block(site_of(tr, {1}), 0) - herm).norm() < 1e-14);
    CHECK((ax.A.block(site_of(tr, {-1}), 0) - herm.conjugate()).norm() < 1e-14);
    CHECK(ax.A.block(site_of(tr, {0}), 0).norm() == 0.0);
    CHECK(ax.A.reality_defect() < 1e-14);
    // subtracting A empties the diagonal at the resonant site
    MatrixXcd wt = Dwn - ax.A.to_matrix();
    int rs = site_of(tr, {1});
    CHECK(wt.block(2 * rs, 2 * rs, 2, 2).norm() < 1e-10);
  }

  SUBCASE("purely off-diagonal derivative extracts nothing") {
    MatrixXcd Dwn = MatrixXcd::Zero(n, n);
    Dwn.block(0, 4, 2, 2) = c;
    Dwn.block(6, 2, 2, 2) = 2.0 * c;
    std::vector<double> omega = {2.0};
    auto S = resonant_sets(omega, lvl, tr);
    AExtraction ax = extract_A(Dwn, lvl, S, omega, tr);
    CHECK(ax.norm == 0.0);
    CHECK(ax.raw_defect == 0.0);
  }

  SUBCASE("an empty resonant set leaves the cluster unrenormalized") {
    MatrixXcd Dwn = MatrixXcd::Zero(n, n);
    for (int site = 0; site < tr.nsites; ++site)
      Dwn.block(2 * site, 2 * site, 2, 2) = c;
    std::vector<double> omega = {10.0};
    auto S = resonant_sets(omega, lvl, tr);
    CHECK(S[0].empty());
    AExtraction ax = extract_A(Dwn, lvl, S, omega, tr);
    CHECK(ax.norm == 0.0);
    CHECK(ax.A.to_matrix().norm() == 0.0);
  }
}

TEST_CASE("translation continuity of the resolvent") {
  Truncation tr = make_tr(1, 4, {1});
  std::vector<MatrixXcd> mu2 = {MatrixXcd::Constant(1, 1, 4.0)};
  std::vector<double> omega = {3.0};
  ClusterLevel lvl = initial_clusters(mu2, 0.5);
  DiagonalKernel K = k0_kernel(tr, omega, mu2);
  GammaBuild gb = gamma_operator(K, lvl, nullptr, omega, 1e12);

  GammaContinuity rep0 = gamma_continuity_check(gb.G, {0}, omega);
  CHECK(rep0.delta_norm == 0.0);
  CHECK(rep0.gamma_norm == doctest::Approx(0.25));

  GammaContinuity rep = gamma_continuity_check(gb.G, {1}, omega);
  CHECK(rep.omega_dot_p == doctest::Approx(3.0));
  // every weight here is (1 - chi) = 1, so Gamma(q) = 1/((3q)^2 - 4)
  double expect = 0.0;
  for (int q = -4; q <= 3; ++q) {
    double f0 = 1.0 / (9.0 * q * q - 4.0);
    double f1 = 1.0 / (9.0 * (q + 1) * (q + 1) - 4.0);
    expect = std::max(expect, std::abs(f1 - f0));
  }
  CHECK(rep.delta_norm == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("flow on a detuned single-mode toy walks down the scales") {
  // mu = 2, omega = 2.003: the resonant site q = 1 stays inside the cutoff
  // plateau through level 5 and enters the transition annulus at level 6,
  // where Gamma_6 activates and the iterate acquires its q = +-1 content.
  Truncation tr = make_tr(1, 6, {1});
  std::vector<MatrixXcd> mu2 = {MatrixXcd::Constant(1, 1, 4.0)};
  std::vector<double> omega = {2.003};
  Eigen::Index n = (Eigen::Index)tr.nsites * tr.dim;
  double cdiag = 1e-3;

  FourierMap v(tr, true);
  for (int site = 0; site < tr.nsites; ++site) {
    int q = tr.site_vector(site)[0];
    v.set_coeff(site, VectorXcd::Constant(1, 0.02 / (1.0 + std::abs(q))));
  }
  JetFunctional w0(v);
  w0.order = 1;
  w0.linear = cdiag * MatrixXcd::Identity(n, n);
  auto dw0 = [n, cdiag](const VectorXcd&) {
    return (cdiag * MatrixXcd::Identity(n, n)).eval();
  };

  RGParams prm;
  RGFlow flow(tr, omega, mu2, w0, dw0, prm);
  RGResult res = flow.run();

  REQUIRE(res.abort_reason.empty());
  REQUIRE(res.converged);
  REQUIRE((int)res.levels.size() == 6);

  // a_1 = c exactly; every later extraction sees the emptied diagonal
  CHECK(res.levels[0].a_norm == doctest::Approx(cdiag).epsilon(1e-12));
  for (int m = 1; m < 6; ++m) CHECK(res.levels[m].a_norm == 0.0);
  CHECK(res.mu2_final[0](0, 0).real() == doctest::Approx(4.0 + cdiag).epsilon(1e-14));

  // scales 2..5 are frozen: no active window, no motion
  for (int m = 1; m < 5; ++m) {
    CHECK(res.levels[m].rho_norm == 0.0);
    CHECK(res.levels[m].z_diff < 1e-12);
    CHECK(res.levels[m].gamma_norm == 0.0);
  }
  // level 6 activates the annulus at q = +-1
  CHECK(res.levels[5].rho_norm > 1e-12);
  CHECK(res.levels[5].z_diff > 1e-12);
  CHECK(res.levels[5].contraction == 0.0);  // Dw~_5 vanishes on the active window

  // closed form for Gamma_6 at q = 1
  int rs = site_of(tr, {1});
  const Cluster& c6 = res.levels[5].level.at(0);
  double chi6 = cutoff(2.003, c6.clo, c6.chi, 0.5, 6);
  double chi5 = cutoff(2.003, c6.clo, c6.chi, 0.5, 5);
  CHECK(chi5 == 1.0);
  CHECK(chi6 > 0.0);
  CHECK(chi6 < 1.0);
  double div = 2.003 * 2.003 - 4.0 - cdiag;
  CHECK(res.levels[5].Gamma.block(rs, 0)(0, 0).real() ==
        doctest::Approx((1.0 - chi6) / div).epsilon(1e-13));

  for (const LevelRecord& rec : res.levels) {
    CHECK(rec.residual <= 1e-10);
    CHECK(rec.s_nested);
    CHECK(rec.pp_defect <= 1e-12);
    CHECK(rec.z_reality_defect <= 1e-13);
    CHECK(rec.symm1 <= 1e-12);
    CHECK(rec.symm2 <= 1e-12);
    CHECK(rec.min_mu2_eig > 0.0);
  }
}

TEST_CASE("flow on the wave model reference configuration") {
  NLWConfig cfg;
  cfg.m = 1.0;
  cfg.f_coeffs = {1.0};
  cfg.tangential = {1};
  cfg.n_space = 8;
  ModePacking pack = ModePacking::build(cfg, 8);
  Truncation tr = pack.truncation(1, 12);
  NormalFormData nf = birkhoff_transform(cfg);
  VectorXd a = VectorXd::Constant(1, 5e-3);
  VectorXd om = modulated_frequencies(nf, a);
  std::vector<double> omega = {om[0]};
  std::vector<MatrixXcd> mu2 = initial_mu2_blocks(pack, cfg);

  SUBCASE("lambda = 0 stays at the trivial fixed point") {
    PerturbationEngine eng(cfg, pack, tr, nf, a, om, 0.0);
    TangentialMap pj(tr);
    JetFunctional w0 = eng.build_w0(pj, 2);
    auto dw0 = [&](const VectorXcd& z) { return eng.dw0_matrix(pj, z, 2); };
    RGParams prm;
    prm.max_levels = 4;
    RGFlow flow(tr, omega, mu2, w0, dw0, prm);
    RGResult res = flow.run();
    REQUIRE(res.converged);
    for (const LevelRecord& rec : res.levels) {
      CHECK(rec.z_norm == 0.0);
      CHECK(rec.a_norm == 0.0);
      CHECK(rec.residual == 0.0);
    }
  }

  SUBCASE("lambda = 1 run: limit identity, parity degeneracy, symmetries") {
    PerturbationEngine eng(cfg, pack, tr, nf, a, om, 1.0);
    TangentialMap pj(tr);
    JetFunctional w0 = eng.build_w0(pj, 2);
    auto dw0 = [&](const VectorXcd& z) { return eng.dw0_matrix(pj, z, 2); };
    RGParams prm;
    RGFlow flow(tr, omega, mu2, w0, dw0, prm);
    RGResult res = flow.run();

    REQUIRE(res.abort_reason.empty());
    REQUIRE(res.converged);
    REQUIRE((int)res.levels.size() == 6);

    const LevelRecord& l1 = res.levels[0];
    CHECK(l1.z_norm > 1e-4);
    CHECK(l1.z_norm < 1e-2);
    CHECK(l1.a_norm > 1e-6);
    CHECK(l1.a_norm < 1e-4);
    CHECK(l1.mu_shift > 1e-7);
    CHECK(l1.mu_shift < 1e-5);
    CHECK(l1.chain_rate < 1e-3);

    // Gamma_1 is dominated by the unit divisor of the zero mode of the lowest
    // family; Gamma_2 keeps exactly the annulus window of the third harmonic
    // against the k = 4 family, with the level-1 cutoff as its weight
    CHECK(l1.gamma_norm == doctest::Approx(1.0).epsilon(1e-12));
    double chi1 = cutoff(3.0 * omega[0], std::sqrt(17.0), std::sqrt(17.0), 0.5, 1);
    double div34 = 9.0 * omega[0] * omega[0] - 17.0;
    CHECK(res.levels[1].gamma_norm == doctest::Approx(chi1 / div34).epsilon(1e-5));
    for (int m = 2; m < 6; ++m) CHECK(res.levels[m].gamma_norm == 0.0);

    for (const LevelRecord& rec : res.levels) {
      CAPTURE(rec.n);
      CHECK(rec.residual <= 1e-10);
      CHECK(rec.contraction < 1e-3);
      CHECK(rec.a_raw_defect <= 1e-10);
      CHECK(rec.symm1 <= 1e-10);
      CHECK(rec.symm2 <= 1e-10);
      CHECK(rec.s_nested);
      CHECK(rec.pp_defect <= 1e-12);
      CHECK(rec.z_reality_defect <= 1e-12);
      CHECK(rec.min_mu2_eig > 0.99);
      CHECK(rec.drift_ratio < 0.1);
      CHECK(rec.warnings.empty());
      // the resonant window carries no constant term and no quadratic
      // remainder at this parity-degenerate reference: both sides of the
      // effective-linearity ratio sit at the rounding floor
      CHECK(rec.phat_w_norm <= 1e-15);
      CHECK(rec.eff_lin_num <= 1e-12);
      CHECK(std::isfinite(rec.eff_linearity));
    }

    // parity degeneracy: all motion happens at level 1
    for (int m = 1; m < 6; ++m) {
      CHECK(res.levels[m].rho_norm <= 1e-15);
      CHECK(res.levels[m].z_diff <= 1e-15);
      CHECK(res.levels[m].a_norm <= 1e-16);
      CHECK(res.levels[m].mu_shift <= 1e-15);
    }

    // the iterate lives on the odd families, the sine sector stays empty
    for (int site = 0; site < tr.nsites; ++site) {
      VectorXcd zc = res.z.coeff(site);
      for (int k = 0; k <= tr.kmax; k += 2)
        if (tr.mult[k] > 0)
          CHECK(zc.segment(tr.offset[k], tr.mult[k]).norm() <= 1e-13 * (1.0 + l1.z_norm));
      if (tr.mult[1] > 0)  // family 1 holds the sine partner of the tangential mode
        CHECK(zc.segment(tr.offset[1], tr.mult[1]).norm() <= 1e-13 * (1.0 + l1.z_norm));
    }

  }
}
