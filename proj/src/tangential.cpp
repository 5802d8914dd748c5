#include "rgtorus/tangential.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace rgt {

namespace {

double q_length(const std::vector<int>& q) {
  double acc = 0.0;
  for (int qi : q) acc += double(qi) * double(qi);
  return std::sqrt(acc);
}

std::string q_string(const std::vector<int>& q) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < q.size(); ++i) os << (i ? "," : "") << q[i];
  os << ")";
  return os.str();
}

// Residual rows of the block system at (pj, z), site-major with the d first-
// block components ahead of the d second-block components, plus the
// coefficient transforms of the forcing. The Hessians are filled only when
// jacobians is set.
struct SysRows {
  VectorXcd rows;
  double scale = 0.0;
  double solved = 0.0;
  double solvability = 0.0;
  PerturbationEngine::VData vd;
};

SysRows assemble_rows(const TangentialProblem& prob, const PerturbationEngine& eng,
                      const TangentialMap& pj, const FourierMap& z, bool jacobians) {
  const Truncation& tr = eng.trunc();
  const int d = tr.d;
  SysRows sb;
  sb.vd = eng.v_data(pj, z, jacobians);
  MatrixXcd vphi(tr.nsites, d), vi(tr.nsites, d);
  for (int i = 0; i < d; ++i) {
    vphi.col(i) = eng.node_to_site(VectorXd(sb.vd.dphi.col(i)));
    vi.col(i) = eng.node_to_site(VectorXd(sb.vd.dI.col(i)));
  }
  sb.scale = std::sqrt(vphi.squaredNorm() + vi.squaredNorm());
  sb.rows.resize(2 * d * tr.nsites);
  double acc_solved = 0.0, acc_cok = 0.0;
  for (int s = 0; s < tr.nsites; ++s) {
    cplx D(0.0, -dot(prob.omega, tr.site_vector(s)));
    for (int i = 0; i < d; ++i) {
      cplx r1 = D * pj.j()(s, i) + vphi(s, i);
      cplx r2 = -D * pj.phi()(s, i) + vi(s, i);
      for (int jj = 0; jj < d; ++jj) r2 += prob.g(i, jj) * pj.j()(s, jj);
      sb.rows(s * 2 * d + i) = r1;
      sb.rows(s * 2 * d + d + i) = r2;
      (tr.is_zero_site(s) ? acc_cok : acc_solved) += std::norm(r1);
      acc_solved += std::norm(r2);
    }
  }
  sb.solved = std::sqrt(acc_solved);
  sb.solvability = std::sqrt(acc_cok);
  return sb;
}

// Derivative of the residual rows in the complexified coefficients: the
// homogeneous blocks on the diagonal plus the node Hessians of the forcing
// conjugated with the angle transform.
MatrixXcd assemble_jacobian(const TangentialProblem& prob, const PerturbationEngine& eng,
                            const PerturbationEngine::VData& vd) {
  const Truncation& tr = eng.trunc();
  const int d = tr.d, n2 = 2 * d, N = n2 * tr.nsites;
  MatrixXcd M = MatrixXcd::Zero(N, N);
  for (int s = 0; s < tr.nsites; ++s) {
    cplx D(0.0, -dot(prob.omega, tr.site_vector(s)));
    for (int i = 0; i < d; ++i) {
      M(s * n2 + i, s * n2 + d + i) += D;
      M(s * n2 + d + i, s * n2 + i) -= D;
      for (int jj = 0; jj < d; ++jj) M(s * n2 + d + i, s * n2 + d + jj) += prob.g(i, jj);
    }
  }
  const MatrixXcd& P = eng.phases();
  const int nn = eng.nodes();
  VectorXd w(nn);
  for (int a = 0; a < n2; ++a)
    for (int b = 0; b < n2; ++b) {
      for (int g = 0; g < nn; ++g) w(g) = vd.jac[(size_t)g](a, b);
      MatrixXcd blk = P.adjoint() * w.asDiagonal() * P / double(nn);
      for (int s = 0; s < tr.nsites; ++s)
        for (int sp = 0; sp < tr.nsites; ++sp) M(s * n2 + a, sp * n2 + b) += blk(s, sp);
    }
  return M;
}

}  // namespace

MatrixXcd tangential_block(const TangentialProblem& prob, const std::vector<int>& q) {
  const int d = (int)prob.omega.size();
  cplx D(0.0, -dot(prob.omega, q));
  MatrixXcd B = MatrixXcd::Zero(2 * d, 2 * d);
  for (int i = 0; i < d; ++i) {
    B(i, d + i) = D;
    B(d + i, i) = -D;
    for (int jj = 0; jj < d; ++jj) B(d + i, d + jj) = prob.g(i, jj);
  }
  return B;
}

VectorXcd tangential_block_solve(const TangentialProblem& prob, const std::vector<int>& q,
                                 const VectorXcd& rhs) {
  if (dot(prob.omega, q) == 0.0)
    throw std::invalid_argument("tangential block: zero mode is handled by the gauge");
  return tangential_block(prob, q).fullPivLu().solve(rhs);
}

TangentialResidual tangential_residual(const TangentialProblem& prob,
                                       const PerturbationEngine& eng, const TangentialMap& pj,
                                       const FourierMap& z) {
  SysRows sb = assemble_rows(prob, eng, pj, z, false);
  TangentialResidual out;
  out.solved = sb.solved;
  out.solvability = sb.solvability;
  out.scale = sb.scale;
  return out;
}

TangentialSolve solve_tangential(const TangentialProblem& prob, const PerturbationEngine& eng,
                                 const FourierMap& z) {
  const Truncation& tr = eng.trunc();
  const int d = tr.d, n2 = 2 * d;
  if ((int)prob.omega.size() != d)
    throw std::invalid_argument("tangential: frequency dimension mismatch");

  TangentialSolve out;
  out.sol = TangentialMap(tr);

  // Diophantine guard and block-inverse diagnostic over the active window
  for (int s = 0; s < tr.nsites; ++s) {
    if (tr.is_zero_site(s)) continue;
    std::vector<int> q = tr.site_vector(s);
    double kap = std::abs(dot(prob.omega, q));
    if (prob.dioph_K > 0.0 && kap <= prob.dioph_K * std::pow(q_length(q), -prob.dioph_nu))
      throw std::runtime_error("tangential: Diophantine violation at q = " + q_string(q));
    Eigen::JacobiSVD<MatrixXcd> svd(tangential_block(prob, q));
    double smin = svd.singularValues()(svd.singularValues().size() - 1);
    if (smin <= 0.0)
      throw std::runtime_error("tangential: singular block at q = " + q_string(q));
    out.block_inv_bound = std::max(out.block_inv_bound, kap / smin);
  }

  for (int it = 0;; ++it) {
    SysRows sb = assemble_rows(prob, eng, out.sol, z, true);
    if (it == 0) out.scale = sb.scale;
    out.residual = sb.solved;
    out.solvability = sb.solvability;
    out.history.push_back(sb.solved);
    out.iterations = it;
    if (sb.scale == 0.0 || sb.solved <= prob.newton_tol * out.scale) break;
    if (it >= prob.max_newton)
      throw std::runtime_error("tangential Newton: no convergence within the iteration cap");
    if (it >= 2 && out.history[(size_t)it] > 0.5 * out.history[(size_t)it - 1] &&
        out.history[(size_t)it - 1] > 0.5 * out.history[(size_t)it - 2])
      throw std::runtime_error("tangential Newton stagnated; reduce the forcing or lambda");

    MatrixXcd M = assemble_jacobian(prob, eng, sb.vd);
    // translation gauge: the zero-mode first-block rows and columns drop out
    std::vector<int> keep;
    keep.reserve((size_t)(n2 * tr.nsites - d));
    for (int s = 0; s < tr.nsites; ++s)
      for (int c = 0; c < n2; ++c)
        if (!(tr.is_zero_site(s) && c < d)) keep.push_back(s * n2 + c);
    const int Nr = (int)keep.size();
    MatrixXcd Mr(Nr, Nr);
    VectorXcd rr(Nr);
    for (int r = 0; r < Nr; ++r) {
      rr(r) = sb.rows(keep[(size_t)r]);
      for (int c = 0; c < Nr; ++c) Mr(r, c) = M(keep[(size_t)r], keep[(size_t)c]);
    }
    VectorXcd dx = Mr.fullPivLu().solve(-rr);
    for (int r = 0; r < Nr; ++r) {
      int idx = keep[(size_t)r], s = idx / n2, c = idx % n2;
      if (c < d)
        out.sol.phi()(s, c) += dx(r);
      else
        out.sol.j()(s, c - d) += dx(r);
    }
    out.reality_defect = std::max(out.reality_defect, out.sol.enforce_reality());
  }
  return out;
}

TorusSolution coupled_solve(const NLWConfig& cfg, const VectorXd& a, double lambda, int kmax,
                            int Q, const CoupledParams& p) {
  cfg.validate();
  TorusSolution ts;
  ts.cfg = cfg;
  ts.a = a;
  ts.lambda = lambda;
  ts.pack = ModePacking::build(cfg, kmax);
  ts.tr = std::make_shared<Truncation>(ts.pack.truncation(cfg.dim_t(), Q));
  ts.nf = birkhoff_transform(cfg);
  ts.omega = modulated_frequencies(ts.nf, a);

  PerturbationEngine eng(cfg, ts.pack, *ts.tr, ts.nf, a, ts.omega, lambda);
  ts.delta = eng.delta();
  std::vector<MatrixXcd> mu2 = initial_mu2_blocks(ts.pack, cfg);

  TangentialProblem prob;
  prob.omega.assign(ts.omega.data(), ts.omega.data() + ts.omega.size());
  prob.g = std::pow(ts.delta, 4) * ts.nf.gbar;
  prob.dioph_K = p.dioph_K;
  prob.dioph_nu = p.dioph_nu;
  prob.newton_tol = p.newton_tol;

  ts.pj = TangentialMap(*ts.tr);
  ts.z = FourierMap::zero(*ts.tr);
  DiagonalKernel k0 = k0_kernel(*ts.tr, prob.omega, mu2);

  double prev_joint = 0.0;
  for (int sweep = 1; sweep <= p.max_sweeps; ++sweep) {
    ts.sweeps = sweep;

    TangentialSolve ty = solve_tangential(prob, eng, ts.z);
    ts.pj.phi() += p.damping * (ty.sol.phi() - ts.pj.phi());
    ts.pj.j() += p.damping * (ty.sol.j() - ts.pj.j());

    JetFunctional w0 = eng.build_w0(ts.pj, p.jet_order);
    auto dw0 = [&](const VectorXcd& zz) { return eng.dw0_matrix(ts.pj, zz, p.jet_order); };
    RGFlow flow(*ts.tr, prob.omega, mu2, w0, dw0, p.rg);
    RGResult rr = flow.run();
    if (!rr.converged)
      throw std::runtime_error("coupled solve: normal step aborted: " + rr.abort_reason);
    ts.rg_residual = rr.levels.empty() ? 0.0 : rr.levels.back().residual;
    ts.rg_levels = (int)rr.levels.size();
    ts.mu2_final = rr.mu2_final;

    VectorXcd zs_old = ts.z.to_stacked();
    VectorXcd zs_new = zs_old + p.damping * (rr.z.to_stacked() - zs_old);
    ts.step_norms.push_back((zs_new - zs_old).norm());
    ts.z.from_stacked(zs_new);

    TangentialResidual trr = tangential_residual(prob, eng, ts.pj, ts.z);
    FourierMap wex = eng.w_full(ts.pj, ts.z);
    double r2 = (k0.apply_stacked(ts.z.to_stacked()) - wex.to_stacked()).norm();
    double wscale = wex.to_stacked().norm();
    ts.joint_residual = std::sqrt(trr.solved * trr.solved +
                                  trr.solvability * trr.solvability + r2 * r2);
    ts.scale = std::sqrt(trr.scale * trr.scale + wscale * wscale);
    ts.solvability = trr.solvability;
    ts.history.push_back(ts.joint_residual);

    if (sweep >= 2 && ts.step_norms[(size_t)sweep - 2] > 0.0 && ts.contraction == 0.0)
      ts.contraction = ts.step_norms[(size_t)sweep - 1] / ts.step_norms[(size_t)sweep - 2];
    if (ts.joint_residual <= p.tol * ts.scale + 1e-300) {
      ts.converged = true;
      break;
    }
    if (sweep >= 2 && ts.joint_residual > prev_joint &&
        ts.step_norms[(size_t)sweep - 1] > ts.step_norms[(size_t)sweep - 2])
      throw std::runtime_error("coupled iteration diverging; reduce lambda");
    prev_joint = ts.joint_residual;
  }
  if (!ts.converged)
    throw std::runtime_error("coupled iteration did not converge; reduce lambda or raise the cap");
  return ts;
}

}  // namespace rgt
