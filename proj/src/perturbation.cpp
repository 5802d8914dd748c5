#include "rgtorus/perturbation.hpp"

#include <memory>

namespace rgt {

namespace {

MatrixXcd unstack(const VectorXcd& v, int nsites, int dim) {
  MatrixXcd m(nsites, dim);
  for (int s = 0; s < nsites; ++s) m.row(s) = v.segment((Eigen::Index)s * dim, dim).transpose();
  return m;
}

VectorXcd restack(const MatrixXcd& m) {
  VectorXcd v(m.rows() * m.cols());
  for (int s = 0; s < m.rows(); ++s) v.segment((Eigen::Index)s * m.cols(), m.cols()) = m.row(s).transpose();
  return v;
}

}  // namespace

struct PerturbationEngine::Fields {
  MatrixXd qt;                  // nnodes x d
  MatrixXd u0;                  // nnodes x nx
  MatrixXd f0, f1, f2, f3;      // f and derivatives at u0
};

PerturbationEngine::PerturbationEngine(const NLWConfig& cfg, const ModePacking& pack,
                                       const Truncation& tr, const NormalFormData& nf,
                                       const VectorXd& a, const VectorXd& omega, double lambda,
                                       int nphi, int nx)
    : cfg_(cfg), pack_(pack), tr_(&tr), nf_(nf), a_(a), omega_(omega), lambda_(lambda) {
  cfg_.validate();
  d_ = cfg_.dim_t();
  if (nf_.d != d_ || a_.size() != d_ || omega_.size() != d_)
    throw std::invalid_argument("engine: tangential dimension mismatch");
  if (tr_->d != d_) throw std::invalid_argument("engine: truncation d mismatch");
  if (tr_->kmax != pack_.kmax || tr_->mult != pack_.mults())
    throw std::invalid_argument("engine: truncation does not match packing");
  delta_ = a_.norm();
  if (delta_ <= 0.0) throw std::invalid_argument("engine: amplitude must be nonzero");
  delta2_ = delta_ * delta_;
  delta4_ = delta2_ * delta2_;
  for (int i = 0; i < d_; ++i) {
    mu_t_.push_back(mu_of(cfg_.tangential[(size_t)i], cfg_.m));
    sq2mu_.push_back(std::sqrt(2.0 / mu_t_.back()));
  }

  int pmax = 2 + (int)cfg_.f_coeffs.size();
  nx_ = nx > 0 ? nx : (pmax + 1) * cfg_.n_space + 1;
  wx_ = 2.0 * pi / nx_;
  for (int j = 0; j < nx_; ++j) xs_.push_back(wx_ * j);
  psi_.resize(tr_->dim, nx_);
  int row = 0;
  for (int k = 0; k <= pack_.kmax; ++k) {
    if ((int)pack_.members[(size_t)k].size() != tr_->mult[(size_t)k])
      throw std::invalid_argument("engine: packing member count mismatch");
    for (int n : pack_.members[(size_t)k]) {
      for (int j = 0; j < nx_; ++j) psi_(row, j) = basis_value(n, xs_[(size_t)j]);
      ++row;
    }
  }
  psit_.resize(d_, nx_);
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < nx_; ++j)
      psit_(i, j) = basis_value(cfg_.tangential[(size_t)i], xs_[(size_t)j]);

  nphi_ = nphi > 0 ? nphi : 4 * tr_->Q + 8;
  if (nphi_ <= 2 * tr_->Q) throw std::invalid_argument("engine: angle grid too small");
  nnodes_ = 1;
  for (int i = 0; i < d_; ++i) nnodes_ *= nphi_;
  angles_.resize((size_t)nnodes_);
  double dphi = 2.0 * pi / nphi_;
  for (int g = 0; g < nnodes_; ++g) {
    std::vector<double> ang((size_t)d_);
    int t = g;
    for (int i = d_ - 1; i >= 0; --i) {
      ang[(size_t)i] = dphi * (t % nphi_);
      t /= nphi_;
    }
    angles_[(size_t)g] = std::move(ang);
  }
  phase_.resize(nnodes_, tr_->nsites);
  for (int s = 0; s < tr_->nsites; ++s) {
    std::vector<int> q = tr_->site_vector(s);
    for (int g = 0; g < nnodes_; ++g)
      phase_(g, s) = std::exp(cplx(0.0, -dot(angles_[(size_t)g], q)));
  }
  off_tr_.d = d_;
  off_tr_.Q = 2 * tr_->Q;
  off_tr_.kmax = 0;
  off_tr_.mult = {1};
  off_tr_.finalize();
  off_phase_.resize(nnodes_, off_tr_.nsites);
  for (int s = 0; s < off_tr_.nsites; ++s) {
    std::vector<int> p = off_tr_.site_vector(s);
    for (int g = 0; g < nnodes_; ++g)
      off_phase_(g, s) = std::exp(cplx(0.0, dot(angles_[(size_t)g], p)));
  }
}

PerturbationEngine::Fields PerturbationEngine::torus_fields(const TangentialMap& pj) const {
  if (!tr_->compatible(pj.trunc()))
    throw std::invalid_argument("engine: tangential map truncation mismatch");
  Fields F;
  F.qt.resize(nnodes_, d_);
  F.u0.resize(nnodes_, nx_);
  F.f0.resize(nnodes_, nx_);
  F.f1.resize(nnodes_, nx_);
  F.f2.resize(nnodes_, nx_);
  F.f3.resize(nnodes_, nx_);
  VectorXd pv, jv;
  std::vector<double> th((size_t)d_), it((size_t)d_), qt;
  for (int g = 0; g < nnodes_; ++g) {
    pj.values(angles_[(size_t)g], pv, jv);
    for (int i = 0; i < d_; ++i) {
      th[(size_t)i] = angles_[(size_t)g][(size_t)i] + pv[i];
      it[(size_t)i] = jv[i];
    }
    tangential_q(th, it, qt);
    for (int i = 0; i < d_; ++i) F.qt(g, i) = qt[(size_t)i];
    for (int j = 0; j < nx_; ++j) {
      double u = 0.0;
      for (int i = 0; i < d_; ++i) u += qt[(size_t)i] * psit_(i, j);
      F.u0(g, j) = u;
      F.f0(g, j) = f_eval(cfg_.f_coeffs, u);
      F.f1(g, j) = f_deriv(cfg_.f_coeffs, u, 1);
      F.f2(g, j) = f_deriv(cfg_.f_coeffs, u, 2);
      F.f3(g, j) = f_deriv(cfg_.f_coeffs, u, 3);
    }
  }
  return F;
}

FourierMap PerturbationEngine::field_to_map(const MatrixXcd& node_block_values, bool real) const {
  MatrixXcd what = phase_.adjoint() * node_block_values / double(nnodes_);
  FourierMap m(*tr_, real);
  for (int s = 0; s < tr_->nsites; ++s) m.set_coeff(s, what.row(s).transpose());
  return m;
}

std::vector<MatrixXcd> PerturbationEngine::offset_moments(const MatrixXd& weight_grid) const {
  if (weight_grid.rows() != nnodes_ || weight_grid.cols() != nx_)
    throw std::invalid_argument("engine: weight grid shape mismatch");
  std::vector<MatrixXcd> mhat((size_t)off_tr_.nsites,
                              MatrixXcd::Zero(tr_->dim, tr_->dim));
  MatrixXd mg(tr_->dim, tr_->dim);
  for (int g = 0; g < nnodes_; ++g) {
    mg.noalias() = psi_ * weight_grid.row(g).asDiagonal() * psi_.transpose();
    mg *= wx_ / double(nnodes_);
    for (int p = 0; p < off_tr_.nsites; ++p) mhat[(size_t)p] += off_phase_(g, p) * mg;
  }
  return mhat;
}

MatrixXcd PerturbationEngine::assemble_from_moments(const std::vector<MatrixXcd>& mhat) const {
  int dim = tr_->dim;
  MatrixXcd out = MatrixXcd::Zero((Eigen::Index)tr_->nsites * dim, (Eigen::Index)tr_->nsites * dim);
  std::vector<int> p((size_t)d_);
  for (int s = 0; s < tr_->nsites; ++s) {
    std::vector<int> qs = tr_->site_vector(s);
    for (int s2 = 0; s2 < tr_->nsites; ++s2) {
      std::vector<int> q2 = tr_->site_vector(s2);
      for (int i = 0; i < d_; ++i) p[(size_t)i] = qs[(size_t)i] - q2[(size_t)i];
      int idx = off_tr_.site_index(p);
      out.block((Eigen::Index)s * dim, (Eigen::Index)s2 * dim, dim, dim) = mhat[(size_t)idx];
    }
  }
  return out;
}

MatrixXcd PerturbationEngine::linear_kernel(const MatrixXd& weight_grid) const {
  return assemble_from_moments(offset_moments(weight_grid));
}

JetFunctional PerturbationEngine::build_w0(const TangentialMap& pj, int M) const {
  if (M < 1 || M > 3) throw std::invalid_argument("build_w0: jet order must be 1..3");
  Fields F = torus_fields(pj);

  MatrixXcd w0vals = ((lambda_ / delta2_) * wx_ * (F.f0 * psi_.transpose())).cast<cplx>();
  JetFunctional jf(field_to_map(w0vals, true));
  jf.order = M;

  std::vector<MatrixXcd> mhat = offset_moments(lambda_ * F.f1);
  jf.linear = assemble_from_moments(mhat);
  double maxn = 0.0;
  for (auto& m : mhat) maxn = std::max(maxn, m.norm());
  for (int p = 0; p < off_tr_.nsites; ++p)
    if (mhat[(size_t)p].norm() > 1e-13 * maxn)
      jf.kernel_halfwidth = std::max(jf.kernel_halfwidth, (double)off_tr_.linf(p));

  struct Snap {
    int nnodes, nsites, dim;
    double wx;
    MatrixXd psi;
    MatrixXcd phase;
    MatrixXcd fw2, fw3;  // prefactored derivative weights on the node grid
  };
  auto snap = std::make_shared<Snap>();
  snap->nnodes = nnodes_;
  snap->nsites = tr_->nsites;
  snap->dim = tr_->dim;
  snap->wx = wx_;
  snap->psi = psi_;
  snap->phase = phase_;
  if (M >= 2) snap->fw2 = ((lambda_ * delta2_ / 2.0) * F.f2).cast<cplx>();
  if (M >= 3) snap->fw3 = ((lambda_ * delta4_ / 6.0) * F.f3).cast<cplx>();

  auto synth = [](const Snap& sn, const VectorXcd& z) {
    MatrixXcd blocks = unstack(z, sn.nsites, sn.dim);
    return MatrixXcd((sn.phase * blocks) * sn.psi);  // nnodes x nx
  };
  auto project = [](const Snap& sn, const MatrixXcd& integrand) {
    MatrixXcd vals = integrand * sn.psi.transpose() * sn.wx;       // nnodes x dim
    MatrixXcd what = sn.phase.adjoint() * vals / double(sn.nnodes);  // nsites x dim
    return restack(what);
  };
  if (M >= 2)
    jf.quad = [snap, synth, project](const VectorXcd& u, const VectorXcd& v) {
      MatrixXcd uf = synth(*snap, u), vf = synth(*snap, v);
      return project(*snap, (uf.array() * vf.array() * snap->fw2.array()).matrix());
    };
  if (M >= 3)
    jf.cubic = [snap, synth, project](const VectorXcd& u, const VectorXcd& v, const VectorXcd& w) {
      MatrixXcd uf = synth(*snap, u), vf = synth(*snap, v), wf = synth(*snap, w);
      return project(*snap,
                     (uf.array() * vf.array() * wf.array() * snap->fw3.array()).matrix());
    };
  return jf;
}

FourierMap PerturbationEngine::w_full(const TangentialMap& pj, const FourierMap& z) const {
  Fields F = torus_fields(pj);
  MatrixXd zn = normal_node_values(z);
  MatrixXd ufield = F.u0 + delta2_ * (zn * psi_);
  MatrixXd fvals(nnodes_, nx_);
  for (int g = 0; g < nnodes_; ++g)
    for (int j = 0; j < nx_; ++j) fvals(g, j) = f_eval(cfg_.f_coeffs, ufield(g, j));
  MatrixXcd wvals = ((lambda_ / delta2_) * wx_ * (fvals * psi_.transpose())).cast<cplx>();
  return field_to_map(wvals, true);
}

MatrixXcd PerturbationEngine::dw0_matrix(const TangentialMap& pj, const VectorXcd& z, int M) const {
  if (M < 1 || M > 3) throw std::invalid_argument("dw0_matrix: jet order must be 1..3");
  Fields F = torus_fields(pj);
  MatrixXd weight = F.f1;
  if (M >= 2) {
    MatrixXcd blocks = unstack(z, tr_->nsites, tr_->dim);
    MatrixXd uz = ((phase_ * blocks) * psi_).real();
    weight += delta2_ * (F.f2.array() * uz.array()).matrix();
    if (M >= 3) weight += (delta4_ / 2.0) * (F.f3.array() * uz.array() * uz.array()).matrix();
  }
  return linear_kernel(lambda_ * weight);
}

MatrixXd PerturbationEngine::normal_node_values(const FourierMap& z, double* imag_defect) const {
  MatrixXcd blocks = unstack(z.to_stacked(), tr_->nsites, tr_->dim);
  MatrixXcd c = phase_ * blocks;
  if (imag_defect) *imag_defect = c.imag().cwiseAbs().maxCoeff();
  return c.real();
}

PerturbationEngine::VData PerturbationEngine::v_data(const TangentialMap& pj, const FourierMap& z,
                                                     bool with_jacobian) const {
  VData out;
  MatrixXd zn = normal_node_values(z, &out.z_imag_defect);
  out.dphi.resize(nnodes_, d_);
  out.dI.resize(nnodes_, d_);
  if (with_jacobian) out.jac.assign((size_t)nnodes_, MatrixXd::Zero(2 * d_, 2 * d_));
  VectorXd pv, jv;
  std::vector<double> th((size_t)d_), it((size_t)d_), xt((size_t)tr_->dim);
  std::vector<double> dphi, dI;
  using DD = Dual<Dual<double>>;
  std::vector<DD> thdd((size_t)d_), itdd((size_t)d_), xtdd((size_t)tr_->dim);
  for (int g = 0; g < nnodes_; ++g) {
    pj.values(angles_[(size_t)g], pv, jv);
    for (int i = 0; i < d_; ++i) {
      th[(size_t)i] = angles_[(size_t)g][(size_t)i] + pv[i];
      it[(size_t)i] = jv[i];
    }
    for (int b = 0; b < tr_->dim; ++b) xt[(size_t)b] = zn(g, b);
    v_node(th, it, xt, dphi, dI);
    for (int i = 0; i < d_; ++i) {
      out.dphi(g, i) = dphi[(size_t)i];
      out.dI(g, i) = dI[(size_t)i];
    }
    if (!with_jacobian) continue;
    for (size_t b = 0; b < xt.size(); ++b) xtdd[b] = DD(Dual<double>(xt[b]));
    MatrixXd& J = out.jac[(size_t)g];
    for (int al = 0; al < 2 * d_; ++al) {
      for (int be = al; be < 2 * d_; ++be) {
        for (int i = 0; i < d_; ++i) {
          thdd[(size_t)i] = DD(Dual<double>(th[(size_t)i], al == i ? 1.0 : 0.0),
                               Dual<double>(be == i ? 1.0 : 0.0, 0.0));
          itdd[(size_t)i] = DD(Dual<double>(it[(size_t)i], al == d_ + i ? 1.0 : 0.0),
                               Dual<double>(be == d_ + i ? 1.0 : 0.0, 0.0));
        }
        DD r = utilde(thdd, itdd, xtdd);
        J(al, be) = J(be, al) = lambda_ * r.b.b;
      }
    }
  }
  return out;
}

VectorXcd PerturbationEngine::node_to_site(const VectorXcd& node_values) const {
  return phase_.adjoint() * node_values / double(nnodes_);
}

VectorXcd PerturbationEngine::node_to_site(const VectorXd& node_values) const {
  return node_to_site(VectorXcd(node_values.cast<cplx>()));
}

VectorXd PerturbationEngine::site_to_node(const VectorXcd& site_coeffs) const {
  return (phase_ * site_coeffs).real();
}

}  // namespace rgt
