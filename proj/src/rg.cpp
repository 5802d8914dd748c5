#include "rgtorus/rg.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

namespace rgt {

namespace {

std::string format_site(const std::vector<int>& q) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < q.size(); ++i) os << (i ? "," : "") << q[i];
  os << ")";
  return os.str();
}

// Restricted inverse with a condition guard. B is the divisor block in an
// orthonormal cluster or parent basis.
MatrixXcd guarded_inverse(const MatrixXcd& B, double cond_limit, double& max_cond, int n,
                          const std::vector<int>& q, int k, int idx) {
  Eigen::FullPivLU<MatrixXcd> lu(B);
  double cond = 0.0;
  if (lu.isInvertible()) {
    MatrixXcd inv = lu.inverse();
    cond = B.operatorNorm() * inv.operatorNorm();
    max_cond = std::max(max_cond, cond);
    if (cond < cond_limit) return inv;
  } else {
    cond = std::numeric_limits<double>::infinity();
  }
  std::ostringstream os;
  os << "gamma_operator: near-singular divisor at level " << n << ", q=" << format_site(q)
     << ", family " << k << ", cluster " << idx << ", cond=" << cond;
  throw RGAbort(os.str(), n, q, k, idx, cond);
}

double rel(double num, double den) { return num / std::max(den, 1e-300); }

// Hermitian square root of a small positive block, for frequency shifts.
MatrixXcd herm_sqrt(const MatrixXcd& B) {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(0.5 * (B + B.adjoint()));
  VectorXd ev = es.eigenvalues();
  VectorXd root = ev.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

DiagonalKernel k0_kernel(const Truncation& tr, const std::vector<double>& omega,
                         const std::vector<MatrixXcd>& mu2_blocks) {
  if ((int)omega.size() != tr.d) throw std::invalid_argument("k0_kernel: omega size");
  if ((int)mu2_blocks.size() != tr.kmax + 1)
    throw std::invalid_argument("k0_kernel: one mu^2 block per family expected");
  DiagonalKernel K(tr);
  for (int site = 0; site < tr.nsites; ++site) {
    double kap = dot(omega, tr.site_vector(site));
    for (int k = 0; k <= tr.kmax; ++k) {
      int dk = tr.mult[k];
      if (dk == 0) continue;
      const MatrixXcd& m2 = mu2_blocks[k];
      K.block(site, k) = kap * kap * MatrixXcd::Identity(dk, dk) -
                         (kap < 0.0 ? m2.conjugate() : m2);
    }
  }
  return K;
}

GammaBuild gamma_operator(const DiagonalKernel& K, const ClusterLevel& level,
                          const ClusterLevel* parent_level, const std::vector<double>& omega,
                          double cond_limit) {
  const Truncation& tr = K.trunc();
  if (level.n > 1 && parent_level == nullptr)
    throw std::invalid_argument("gamma_operator: parent level required for n > 1");
  GammaBuild out;
  out.G = DiagonalKernel(tr);
  for (int site = 0; site < tr.nsites; ++site) {
    std::vector<int> q = tr.site_vector(site);
    double kap = dot(omega, q);
    bool neg = kap < 0.0;
    for (int k = 0; k < (int)level.by_family.size(); ++k) {
      if (tr.mult[k] == 0) continue;
      // group the family's clusters by parent; -1 groups the whole family
      std::vector<std::pair<int, std::vector<int>>> groups;
      for (int id : level.by_family[k]) {
        int par = level.n == 1 ? -1 : level.at(id).parent;
        auto it = std::find_if(groups.begin(), groups.end(),
                               [&](const auto& g) { return g.first == par; });
        if (it == groups.end())
          groups.push_back({par, {id}});
        else
          it->second.push_back(id);
      }
      for (const auto& [par, ids] : groups) {
        double chi_par = 1.0;
        if (level.n > 1) {
          const Cluster& pc = parent_level->at(par);
          chi_par = cutoff(kap, pc.clo, pc.chi, level.eta, level.n - 1);
        }
        if (chi_par == 0.0) continue;
        std::vector<double> hats(ids.size());
        bool any = false;
        for (size_t i = 0; i < ids.size(); ++i) {
          const Cluster& c = level.at(ids[i]);
          hats[i] = (1.0 - cutoff(kap, c.clo, c.chi, level.eta, level.n)) * chi_par;
          any = any || hats[i] > 0.0;
        }
        if (!any) continue;
        if (chi_par == 1.0) {
          // K is exactly block-diagonal over the children here
          for (size_t i = 0; i < ids.size(); ++i) {
            if (hats[i] == 0.0) continue;
            const Cluster& c = level.at(ids[i]);
            MatrixXcd J = neg ? c.basis.conjugate() : c.basis;
            MatrixXcd B = J.adjoint() * K.block(site, k) * J;
            MatrixXcd Binv =
                guarded_inverse(B, cond_limit, out.max_cond, level.n, q, k, c.index);
            out.G.block(site, k) += hats[i] * (J * Binv * J.adjoint());
          }
        } else {
          const Cluster& pc = parent_level->at(par);
          MatrixXcd Jp = neg ? pc.basis.conjugate() : pc.basis;
          MatrixXcd B = Jp.adjoint() * K.block(site, k) * Jp;
          MatrixXcd Binv =
              guarded_inverse(B, cond_limit, out.max_cond, level.n, q, k, pc.index);
          MatrixXcd W = MatrixXcd::Zero(B.rows(), B.cols());
          for (size_t i = 0; i < ids.size(); ++i) {
            if (hats[i] == 0.0) continue;
            const Cluster& c = level.at(ids[i]);
            MatrixXcd V = Jp.adjoint() * (neg ? c.basis.conjugate() : c.basis);
            W += hats[i] * (V * V.adjoint());
          }
          out.G.block(site, k) += Jp * (Binv * W) * Jp.adjoint();
        }
      }
    }
  }
  out.norm = out.G.sup_block_norm();
  return out;
}

JetSolve solve_R(const JetFunctional& win, const DiagonalKernel& Gamma, double r, double tol_R,
                 int max_iter) {
  const Truncation& tr = Gamma.trunc();
  Eigen::Index n = (Eigen::Index)tr.nsites * tr.dim;
  int order = std::min(win.order, 3);
  JetFunctional w = win;
  if (w.linear.size() == 0) w.linear = MatrixXcd::Zero(n, n);
  MatrixXcd Gmat = Gamma.to_matrix();

  auto dw_at = [&](const VectorXcd& c) {
    MatrixXcd D = w.linear.size() ? w.linear : MatrixXcd::Zero(n, n);
    if (order >= 2 && w.quad) {
      for (Eigen::Index j = 0; j < n; ++j) {
        VectorXcd e = VectorXcd::Zero(n);
        e[j] = 1.0;
        D.col(j) += 2.0 * w.quad(c, e);
        if (order >= 3 && w.cubic) D.col(j) += 3.0 * w.cubic(c, c, e);
      }
    }
    return D;
  };

  MatrixXcd D0 = w.linear.size() ? w.linear : MatrixXcd::Zero(n, n);
  double contraction = (Gmat * D0).operatorNorm();
  if (contraction >= 0.5)
    throw RGAbort("solve_R: contraction precondition ||Gamma Dw(0)|| >= 0.5 failed; "
                  "reduce the forcing amplitude",
                  0, {}, -1, -1, contraction);

  JetSolve out{JetFunctional(FourierMap(tr, false)), contraction, 0, 0.0};
  out.R.order = order;

  // constant part: Picard c <- Gamma w(c), seeded with the Newton step from 0
  VectorXcd w0 = w.constant.to_stacked();
  MatrixXcd H0 = (MatrixXcd::Identity(n, n) - Gmat * D0).partialPivLu().inverse();
  VectorXcd c = H0 * (Gmat * w0);
  double scale = std::max(1.0, c.norm());
  for (int it = 0; it < max_iter; ++it) {
    VectorXcd next = Gamma.apply_stacked(w.eval(c));
    double change = (next - c).norm();
    c = next;
    ++out.iterations;
    if (change <= tol_R * scale) break;
    if (it + 1 == max_iter)
      throw RGAbort("solve_R: constant part did not converge", 0, {}, -1, -1, change);
  }
  out.R.constant.from_stacked(c);

  // linear part in closed form at the converged base point
  MatrixXcd Dc = dw_at(c);
  MatrixXcd Hc = (MatrixXcd::Identity(n, n) - Gmat * Dc).partialPivLu().inverse();
  out.R.linear = Hc * (Gmat * Dc);

  if (order >= 2 && w.quad) {
    auto state = std::make_shared<std::tuple<MatrixXcd, MatrixXcd, VectorXcd, DiagonalKernel>>(
        Hc, MatrixXcd(MatrixXcd::Identity(n, n) + out.R.linear), c, Gamma);
    auto wq = w.quad;
    auto wc = w.cubic;
    bool use_cubic = order >= 3 && (bool)wc;
    out.R.quad = [state, wq, wc, use_cubic](const VectorXcd& u, const VectorXcd& v) {
      const auto& [H, Z1, cc, G] = *state;
      VectorXcd a = Z1 * u, b = Z1 * v;
      VectorXcd t = wq(a, b);
      if (use_cubic) t += 3.0 * wc(cc, a, b);
      return (H * G.apply_stacked(t)).eval();
    };
    if (order >= 3) {
      auto rq = out.R.quad;
      out.R.cubic = [state, rq, wq, wc, use_cubic](const VectorXcd& u, const VectorXcd& v,
                                                   const VectorXcd& t) {
        const auto& [H, Z1, cc, G] = *state;
        VectorXcd a = Z1 * u, b = Z1 * v, e = Z1 * t;
        VectorXcd r2ab = rq(u, v), r2ae = rq(u, t), r2be = rq(v, t);
        VectorXcd s = VectorXcd::Zero(a.size());
        s += (2.0 / 3.0) * (wq(a, r2be) + wq(b, r2ae) + wq(e, r2ab));
        if (use_cubic) {
          s += wc(a, b, e);
          s += 2.0 * (wc(cc, a, r2be) + wc(cc, b, r2ae) + wc(cc, e, r2ab));
        }
        return (H * G.apply_stacked(s)).eval();
      };
    }
  }

  // self-defect of the jet equation at radius r
  if (r > 0.0) {
    VectorXcd zr = VectorXcd::Constant(n, cplx(1.0, 0.0));
    zr *= r / zr.norm();
    VectorXcd Rz = out.R.eval(zr);
    out.tail = (Rz - Gamma.apply_stacked(w.eval(zr + Rz))).norm();
  }
  return out;
}

AExtraction extract_A(const MatrixXcd& Dwn, const ClusterLevel& level,
                      const std::vector<std::vector<int>>& S, const std::vector<double>& omega,
                      const Truncation& tr) {
  if ((int)S.size() != level.count())
    throw std::invalid_argument("extract_A: one resonant set per cluster expected");
  AExtraction out;
  out.A = DiagonalKernel(tr);
  out.family_blocks.assign(level.by_family.size(), MatrixXcd());
  for (int k = 0; k < (int)level.by_family.size(); ++k)
    if (tr.mult[k] > 0) out.family_blocks[k] = MatrixXcd::Zero(tr.mult[k], tr.mult[k]);

  auto diag_block = [&](int site, int k) {
    Eigen::Index base = (Eigen::Index)site * tr.dim + tr.offset[k];
    return Dwn.block(base, base, tr.mult[k], tr.mult[k]);
  };

  for (int id = 0; id < level.count(); ++id) {
    const Cluster& c = level.at(id);
    int best = -1;
    double best_dist = 0.0;
    for (int site : S[id]) {
      double kap = dot(omega, tr.site_vector(site));
      if (kap <= 0.0) continue;
      double dist = std::abs(kap - c.center);
      if (best < 0 || dist < best_dist) {
        best = site;
        best_dist = dist;
      }
    }
    // no resonant site: this cluster is not renormalized, its block stays zero
    if (best < 0) continue;
    MatrixXcd sig = c.basis.adjoint() * diag_block(best, c.k) * c.basis;
    out.raw_defect = std::max(out.raw_defect, (sig - sig.adjoint()).norm());
    MatrixXcd a = 0.5 * (sig + sig.adjoint());
    out.family_blocks[c.k] += c.basis * a * c.basis.adjoint();
  }

  for (int site = 0; site < tr.nsites; ++site) {
    std::vector<int> q = tr.site_vector(site);
    double kap = dot(omega, q);
    bool zero = tr.is_zero_site(site);
    for (int k = 0; k <= tr.kmax; ++k) {
      if (tr.mult[k] == 0) continue;
      if (zero) continue;  // q = 0 never resonates; zero block keeps reality exact
      out.A.block(site, k) = kap < 0.0 ? out.family_blocks[k].conjugate().eval()
                                       : out.family_blocks[k];
    }
  }
  for (const auto& b : out.family_blocks)
    if (b.size()) out.norm = std::max(out.norm, b.operatorNorm());
  return out;
}

GammaContinuity gamma_continuity_check(const DiagonalKernel& G, const std::vector<int>& p,
                                       const std::vector<double>& omega) {
  const Truncation& tr = G.trunc();
  GammaContinuity rep;
  rep.gamma_norm = G.sup_block_norm();
  rep.omega_dot_p = dot(omega, p);
  for (int site = 0; site < tr.nsites; ++site) {
    std::vector<int> q = tr.site_vector(site);
    for (int i = 0; i < tr.d; ++i) q[i] += p[i];
    int shifted = tr.site_index(q);
    if (shifted < 0) continue;
    for (int k = 0; k <= tr.kmax; ++k) {
      if (tr.mult[k] == 0) continue;
      double d = (G.block(shifted, k) - G.block(site, k)).operatorNorm();
      rep.delta_norm = std::max(rep.delta_norm, d);
    }
  }
  return rep;
}

RGFlow::RGFlow(const Truncation& tr, std::vector<double> omega,
               std::vector<MatrixXcd> mu2_blocks, JetFunctional w0,
               std::function<MatrixXcd(const VectorXcd&)> dw0, RGParams params)
    : tr_(&tr),
      omega_(std::move(omega)),
      mu2_(std::move(mu2_blocks)),
      w0_(std::move(w0)),
      dw0_(std::move(dw0)),
      p_(params) {
  if ((int)omega_.size() != tr.d) throw std::invalid_argument("RGFlow: omega size");
}

void RGFlow::build_level(int n) {
  LevelData ld;
  if (n == 1) {
    ld.cl = initial_clusters(mu2_, p_.eta);
    ld.K = k0_kernel(*tr_, omega_, mu2_);
  } else {
    LevelData& prev = lv_[(size_t)n - 2];
    ld.cl = recluster(prev.cl, mu2_);
    if (ld.cl.count() < prev.cl.count())
      throw std::logic_error("build_level: refinement lost clusters");
    ld.K = prev.K - prev.proj.P * prev.A;
  }
  ld.proj = build_projectors(ld.cl, omega_, *tr_);
  ld.S = resonant_sets(omega_, ld.cl, *tr_);
  GammaBuild gb = gamma_operator(ld.K, ld.cl, n == 1 ? nullptr : &lv_[(size_t)n - 2].cl,
                                 omega_, p_.cond_limit);
  ld.Gamma = gb.G;
  ld.gamma_norm = gb.norm;
  ld.gamma_cond = gb.max_cond;
  ld.Gmat = ld.Gamma.to_matrix();
  lv_.push_back(std::move(ld));
}

// Values of the chain rho_m = Gamma_m [w0(y_0) - sum_{k<m} A_k y_k] with
// y_N = tail and y_{m-1} = y_m + rho_m; tail = 0 gives z_N = y_0 and the
// R_m(0)-chain, a nonzero tail gives w_N(tail) for probes.
RGFlow::ChainEval RGFlow::solve_chain(int N, const VectorXcd* tail,
                                      const std::vector<VectorXcd>* warm) {
  Eigen::Index n = (Eigen::Index)tr_->nsites * tr_->dim;
  ChainEval ch;
  ch.rho.assign((size_t)N + 1, VectorXcd::Zero(n));
  ch.y.assign((size_t)N + 1, VectorXcd::Zero(n));
  if (warm)
    for (size_t m = 1; m < std::min(warm->size(), ch.rho.size()); ++m)
      ch.rho[m] = (*warm)[m];
  VectorXcd y_tail = tail ? *tail : VectorXcd::Zero(n);

  double prev_change = 0.0;
  std::vector<VectorXcd> next((size_t)N + 1, VectorXcd::Zero(n));
  for (int it = 0; it < p_.max_chain_iter; ++it) {
    ch.y[(size_t)N] = y_tail;
    for (int m = N; m >= 1; --m) ch.y[(size_t)m - 1] = ch.y[(size_t)m] + ch.rho[(size_t)m];
    ch.w0_value = w0_.eval(ch.y[0]);
    VectorXcd rhs = ch.w0_value;
    double change = 0.0;
    for (int m = 1; m <= N; ++m) {
      if (m >= 2 && lv_[(size_t)m - 2].has_A)
        rhs -= lv_[(size_t)m - 2].A.apply_stacked(ch.y[(size_t)m - 1]);
      next[(size_t)m] = lv_[(size_t)m - 1].Gamma.apply_stacked(rhs);
      change = std::max(change, (next[(size_t)m] - ch.rho[(size_t)m]).norm());
    }
    for (int m = 1; m <= N; ++m) ch.rho[(size_t)m] = next[(size_t)m];
    ++ch.iters;
    // converge relative to the solution's own scale; once below the coarse
    // absolute tolerance keep polishing while the change still shrinks, so
    // small solutions are resolved down to the rounding floor
    double ynorm = ch.y[0].norm();
    bool coarse = change <= p_.tol_chain * std::max(1.0, ynorm);
    if (it > 0 && prev_change > 0.0 && !coarse) ch.rate = change / prev_change;
    if (change == 0.0 || change <= p_.tol_chain * ynorm ||
        (it > 0 && coarse && change >= prev_change))
      break;
    if (it + 1 == p_.max_chain_iter) {
      if (coarse) break;
      throw RGAbort("chain solve did not converge; reduce the forcing amplitude", N, {}, -1,
                    -1, ch.rate);
    }
    prev_change = change;
  }
  ch.y[(size_t)N] = y_tail;
  for (int m = N; m >= 1; --m) ch.y[(size_t)m - 1] = ch.y[(size_t)m] + ch.rho[(size_t)m];
  ch.w0_value = w0_.eval(ch.y[0]);
  ch.wn_value = ch.w0_value;
  for (int k = 1; k <= N - 1; ++k)
    if (lv_[(size_t)k - 1].has_A)
      ch.wn_value -= lv_[(size_t)k - 1].A.apply_stacked(ch.y[(size_t)k]);
  return ch;
}

// Dw_N(tail) through D_m = (D_{m-1} - A_{m-1}) (1 - Gamma_m (D_{m-1} - A_{m-1}))^{-1}
// along the chain points; also reports ||Gamma_N (D_{N-1} - A_{N-1})||.
MatrixXcd RGFlow::d_chain(int N, const ChainEval& ch, double* contraction_out) {
  Eigen::Index n = (Eigen::Index)tr_->nsites * tr_->dim;
  MatrixXcd D = dw0_(ch.y[0]);
  MatrixXcd I = MatrixXcd::Identity(n, n);
  for (int m = 1; m <= N; ++m) {
    LevelData& ld = lv_[(size_t)m - 1];
    MatrixXcd Dt = (m >= 2 && lv_[(size_t)m - 2].has_A) ? (D - lv_[(size_t)m - 2].Amat).eval()
                                                        : D;
    if (m == N && contraction_out) {
      *contraction_out = (ld.Gmat * Dt).operatorNorm();
      if (*contraction_out >= p_.contraction_limit)
        throw RGAbort("contraction bound reached; reduce the forcing amplitude", m, {}, -1,
                      -1, *contraction_out);
    }
    D = Dt * (I - ld.Gmat * Dt).partialPivLu().inverse();
  }
  return D;
}

RGResult RGFlow::run() {
  RGResult res;
  res.z = FourierMap(*tr_, true);
  Eigen::Index nstk = (Eigen::Index)tr_->nsites * tr_->dim;
  std::vector<VectorXcd> warm;
  VectorXcd z_prev = VectorXcd::Zero(nstk);
  double en = p_.eta;

  try {
    for (int n = 1; n <= p_.max_levels; ++n) {
      build_level(n);
      LevelData& ld = lv_.back();
      LevelRecord rec;
      rec.n = n;
      rec.level = ld.cl;
      rec.proj = ld.proj;
      rec.S = ld.S;
      rec.K = ld.K;
      rec.Gamma = ld.Gamma;
      rec.gamma_norm = ld.gamma_norm;
      rec.gamma_cond = ld.gamma_cond;

      // resonant-set nesting inside the parent's set
      if (n >= 2) {
        const LevelData& prev = lv_[(size_t)n - 2];
        for (int id = 0; id < ld.cl.count() && rec.s_nested; ++id) {
          const auto& child = ld.S[(size_t)id];
          const auto& par = prev.S[(size_t)ld.cl.at(id).parent];
          for (int site : child)
            if (std::find(par.begin(), par.end(), site) == par.end()) {
              rec.s_nested = false;
              break;
            }
        }
        if (!rec.s_nested) rec.warnings.push_back("resonant set escaped its parent set");
      }

      ChainEval ch = solve_chain(n, nullptr, warm.empty() ? nullptr : &warm);
      warm = ch.rho;
      rec.chain_iters = ch.iters;
      rec.chain_rate = ch.rate;
      rec.rho_norm = ch.rho[(size_t)n].norm();

      double contraction = 0.0;
      MatrixXcd Dn = d_chain(n, ch, &contraction);
      rec.contraction = contraction;

      AExtraction ax = extract_A(Dn, ld.cl, ld.S, omega_, *tr_);
      ld.A = ax.A;
      ld.Amat = ax.A.to_matrix();
      ld.has_A = true;
      rec.A = ax.A;
      rec.a_norm = ax.norm;
      rec.a_raw_defect = ax.raw_defect;

      // iterate and its decay
      rec.z = FourierMap(*tr_, true);
      rec.z_reality_defect = rec.z.from_stacked(ch.y[0]);
      rec.z_norm = rec.z.norm(p_.s_norm);
      FourierMap zd(*tr_, false);
      zd.from_stacked(ch.y[0] - z_prev);
      rec.z_diff = zd.norm(p_.s_norm);
      z_prev = ch.y[0];

      // limit identity K_0 z_n = Q_n w_0(z_n) + A_{<n} P_n R_n(0)
      {
        VectorXcd lhs = lv_[0].K.apply_stacked(ch.y[0]);
        VectorXcd rhs = ld.proj.Q.apply_stacked(ch.w0_value);
        VectorXcd prn = ld.proj.P.apply_stacked(ch.rho[(size_t)n]);
        for (int k = 1; k <= n - 1; ++k)
          if (lv_[(size_t)k - 1].has_A) rhs += lv_[(size_t)k - 1].A.apply_stacked(prn);
        double scale = std::max(lhs.norm(), ch.w0_value.norm());
        rec.residual = rel((lhs - rhs).norm(), scale);
      }

      // Prop.-5 style norms at this level
      {
        FourierMap wn(*tr_, false);
        wn.from_stacked(ld.proj.Phat.apply_stacked(ch.wn_value));
        rec.phat_w_norm = wn.norm(p_.s_norm);
        MatrixXcd Dt = Dn - ld.Amat;
        rec.phat_dw_norm =
            weighted_block_colsum_norm(ld.proj.Phat.to_matrix() * Dt, *tr_, p_.s_norm,
                                       p_.s_norm);
      }

      // jet reality and transpose symmetries of Dw_n(0)
      {
        double sup = Dn.cwiseAbs().maxCoeff();
        double s1 = 0.0, s2 = 0.0;
        for (int site = 0; site < tr_->nsites; ++site) {
          int msite = tr_->negate_index(site);
          for (int sp = 0; sp < tr_->nsites; ++sp) {
            int msp = tr_->negate_index(sp);
            auto blk = [&](int a, int b) {
              return Dn.block((Eigen::Index)a * tr_->dim, (Eigen::Index)b * tr_->dim,
                              tr_->dim, tr_->dim);
            };
            s1 = std::max(s1, (blk(site, sp) - blk(msite, msp).conjugate()).norm());
            s2 = std::max(s2, (blk(site, sp) - blk(msp, msite).transpose()).norm());
          }
        }
        rec.symm1 = rel(s1, sup);
        rec.symm2 = rel(s2, sup);
      }

      // effective linearity at a fixed-amplitude probe along the iterate
      if (rec.z_norm > 0.0) {
        VectorXcd probe = ch.y[0] * p_.probe_scale;
        ChainEval pch = solve_chain(n, &probe, &ch.rho);
        VectorXcd lin = ch.wn_value + Dn * probe;
        VectorXcd num = ld.proj.Phat.apply_stacked(pch.wn_value - lin);
        VectorXcd den = ld.proj.Phat.apply_stacked(Dn * probe);
        rec.eff_lin_num = num.norm();
        rec.eff_lin_den = den.norm();
        rec.eff_linearity = rel(rec.eff_lin_num, rec.eff_lin_den);
      }

      // projector composition across levels
      if (n >= 2) {
        const LevelData& prev = lv_[(size_t)n - 2];
        for (int site = 0; site < tr_->nsites; ++site)
          for (int k = 0; k <= tr_->kmax; ++k) {
            if (tr_->mult[k] == 0) continue;
            double d = (ld.proj.P.block(site, k) * prev.proj.P.block(site, k) -
                        ld.proj.P.block(site, k))
                           .norm();
            rec.pp_defect = std::max(rec.pp_defect, d);
          }
      }

      // interval drift against every ancestor
      for (int id = 0; id < ld.cl.count(); ++id) {
        const Cluster* c = &ld.cl.at(id);
        double lo = c->lo, hi = c->hi;
        int anc = c->parent;
        for (int m = n - 1; m >= 1 && anc >= 0; --m) {
          const Cluster& a = lv_[(size_t)m - 1].cl.at(anc);
          double excess = std::max({0.0, a.lo - lo, hi - a.hi});
          rec.drift_ratio = std::max(rec.drift_ratio, excess / std::pow(en, m + 1));
          anc = a.parent;
        }
      }

      // frequency update mu~_{n+1}^2 = mu~_n^2 + a_n
      {
        double shift = 0.0, min_eig = std::numeric_limits<double>::infinity();
        for (int k = 0; k <= tr_->kmax; ++k) {
          if (tr_->mult[k] == 0) continue;
          MatrixXcd next = mu2_[(size_t)k] + ax.family_blocks[(size_t)k];
          shift = std::max(shift, (herm_sqrt(next) - herm_sqrt(mu2_[(size_t)k])).norm());
          Eigen::SelfAdjointEigenSolver<MatrixXcd> es(0.5 * (next + next.adjoint()));
          min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
          mu2_[(size_t)k] = next;
        }
        rec.mu_shift = shift;
        rec.min_mu2_eig = min_eig;
        if (min_eig <= 0.0)
          throw RGAbort("updated mu^2 lost positive definiteness", n, {}, -1, -1, min_eig);
      }

      res.levels.push_back(std::move(rec));
      res.z = res.levels.back().z;
    }
    res.converged = true;
  } catch (const RGAbort& ab) {
    std::ostringstream os;
    os << ab.what();
    if (!ab.q.empty())
      os << " [q=" << format_site(ab.q) << ", |omega.q|="
         << std::abs(dot(omega_, ab.q)) << "]";
    res.abort_reason = os.str();
  } catch (const std::runtime_error& e) {
    // structural violations from the cluster layer (disjointness, invariance)
    // certify that omega is inadmissible at the level being built
    res.abort_reason = e.what();
  }
  res.mu2_final = mu2_;
  return res;
}

}  // namespace rgt
