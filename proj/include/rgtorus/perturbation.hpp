#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "rgtorus/birkhoff.hpp"
#include "rgtorus/dual.hpp"
#include "rgtorus/fourier_map.hpp"
#include "rgtorus/nlw.hpp"
#include "rgtorus/tangential_map.hpp"

namespace rgt {

// Order <= M jet of the nonlinear map w(z) around the approximate torus:
// constant term w^(0), stacked linear kernel w^(1) with block (q,q') given by
// the offset transform Mhat(q-q'), and symmetric multilinear closures for the
// quadratic and cubic kernels, all assembled by collocation.
struct JetFunctional {
  int order = 2;
  FourierMap constant;
  MatrixXcd linear;
  std::function<VectorXcd(const VectorXcd&, const VectorXcd&)> quad;
  std::function<VectorXcd(const VectorXcd&, const VectorXcd&, const VectorXcd&)> cubic;
  double kernel_halfwidth = 0.0;  // measured |q-q'| support of the linear kernel

  explicit JetFunctional(FourierMap c) : constant(std::move(c)) {}

  VectorXcd eval(const VectorXcd& z) const {
    VectorXcd r = constant.to_stacked() + linear * z;
    if (order >= 2 && quad) r += quad(z, z);
    if (order >= 3 && cubic) r += cubic(z, z, z);
    return r;
  }
};

// Collocation engine for the rescaled perturbation. Owns the angle and space
// grids, basis tables, and the Birkhoff jet; assembles the kernels of w0, the
// exact nonlinear forcing, the tangential forcing V, and their Jacobians.
// Keeps a pointer to the caller-owned Truncation, like FourierMap does.
class PerturbationEngine {
 public:
  PerturbationEngine(const NLWConfig& cfg, const ModePacking& pack, const Truncation& tr,
                     const NormalFormData& nf, const VectorXd& a, const VectorXd& omega,
                     double lambda, int nphi = 0, int nx = 0);

  const Truncation& trunc() const { return *tr_; }
  const NLWConfig& model() const { return cfg_; }
  const ModePacking& packing() const { return pack_; }
  const NormalFormData& normal_form() const { return nf_; }
  double delta() const { return delta_; }
  double lambda_value() const { return lambda_; }
  const VectorXd& amplitudes() const { return a_; }
  const VectorXd& frequencies() const { return omega_; }
  int nodes() const { return nnodes_; }
  int angle_grid() const { return nphi_; }
  int space_grid() const { return nx_; }

  JetFunctional build_w0(const TangentialMap& pj, int M) const;

  // Exact nonlinear forcing at a real coefficient map z, no jet truncation.
  FourierMap w_full(const TangentialMap& pj, const FourierMap& z) const;

  // Jacobian of the order-M jet at stacked z, assembled from the weight field
  // lambda [f'(u0) + delta^2 f''(u0) U_z + (delta^4/2) f'''(u0) U_z^2].
  MatrixXcd dw0_matrix(const TangentialMap& pj, const VectorXcd& z, int M) const;

  // Stacked convolution operator from an arbitrary weight field on the
  // (node, space) grid: out(q)_a = sum_q' Mhat(q-q')_{ab} z(q')_b with
  // M(phi)_{ab} = integral weight(phi, x) psi_a psi_b dx.
  MatrixXcd linear_kernel(const MatrixXd& weight_grid) const;

  // Tangential forcing V = lambda (d_theta U, d_I U) at the nodes, plus the
  // per-node Jacobian in the (Phi, J) node values when requested.
  struct VData {
    MatrixXd dphi;               // nnodes x d
    MatrixXd dI;                 // nnodes x d
    std::vector<MatrixXd> jac;   // per node, 2d x 2d, slots (theta..., I...)
    double z_imag_defect = 0.0;  // dropped imaginary part of the normal field
  };
  VData v_data(const TangentialMap& pj, const FourierMap& z, bool with_jacobian) const;

  // Node values of the packed normal field, real part; the imaginary defect
  // of the synthesis is reported if requested.
  MatrixXd normal_node_values(const FourierMap& z, double* imag_defect = nullptr) const;

  // Angle-grid transforms. node_to_site: shat(q) = mean_g e^{+i q.phi_g} v_g;
  // site_to_node: v_g = Re sum_q e^{-i q.phi_g} shat(q).
  VectorXcd node_to_site(const VectorXcd& node_values) const;
  VectorXcd node_to_site(const VectorXd& node_values) const;
  VectorXd site_to_node(const VectorXcd& site_coeffs) const;
  const std::vector<double>& node_angle(int g) const { return angles_[(size_t)g]; }
  const MatrixXcd& phases() const { return phase_; }

  // Scalar building blocks over a generic scalar type (double, duals,
  // truncated series). theta, itil are the d tangential arguments, xt the
  // dim packed normal values at one node.

  template <class S>
  void tangential_q(const std::vector<S>& theta, const std::vector<S>& itil,
                    std::vector<S>& qt) const {
    using std::sqrt;
    using std::sin;
    using std::cos;
    std::vector<Cplx<S>> Z((size_t)d_), Zb((size_t)d_);
    for (int i = 0; i < d_; ++i) {
      S rho = sqrt(S(a_[i] * a_[i]) + itil[(size_t)i] * delta4_);
      S cs = cos(theta[(size_t)i]);
      S sn = sin(theta[(size_t)i]);
      Z[(size_t)i] = Cplx<S>(rho * cs, -(rho * sn));
      Zb[(size_t)i] = conj(Z[(size_t)i]);
    }
    qt.assign((size_t)d_, S(0.0));
    for (int i = 0; i < d_; ++i) {
      Cplx<S> zeta = nf_.jet[(size_t)i].eval(Z, Zb);
      qt[(size_t)i] = real_part(zeta) * sq2mu_[(size_t)i];
    }
  }

  // Utilde = delta^-4 [G(q_t + delta^2 x) - G(q_t)]; identically zero at x=0.
  template <class S>
  S utilde(const std::vector<S>& theta, const std::vector<S>& itil,
           const std::vector<S>& xt) const {
    std::vector<S> qt;
    tangential_q(theta, itil, qt);
    S acc(0.0);
    for (int j = 0; j < nx_; ++j) {
      S ut(0.0);
      for (int i = 0; i < d_; ++i) ut += qt[(size_t)i] * psit_(i, j);
      S un(0.0);
      for (int b = 0; b < tr_->dim; ++b) un += xt[(size_t)b] * psi_(b, j);
      S u = ut + un * delta2_;
      acc += g_of(cfg_.f_coeffs, u) - g_of(cfg_.f_coeffs, ut);
    }
    return acc * (wx_ / delta4_);
  }

  // Full forcing components at one node: out_b = lambda delta^-2
  // integral f(u) psi_b dx with u = u_t + delta^2 sum_b xt_b psi_b.
  template <class S>
  void w_node(const std::vector<S>& theta, const std::vector<S>& itil,
              const std::vector<S>& xt, std::vector<S>& out) const {
    std::vector<S> qt;
    tangential_q(theta, itil, qt);
    std::vector<S> fu((size_t)nx_, S(0.0));
    for (int j = 0; j < nx_; ++j) {
      S ut(0.0);
      for (int i = 0; i < d_; ++i) ut += qt[(size_t)i] * psit_(i, j);
      S un(0.0);
      for (int b = 0; b < tr_->dim; ++b) un += xt[(size_t)b] * psi_(b, j);
      fu[(size_t)j] = f_of(cfg_.f_coeffs, ut + un * delta2_);
    }
    out.assign((size_t)tr_->dim, S(0.0));
    double pref = lambda_ * wx_ / delta2_;
    for (int b = 0; b < tr_->dim; ++b) {
      S acc(0.0);
      for (int j = 0; j < nx_; ++j) acc += fu[(size_t)j] * psi_(b, j);
      out[(size_t)b] = acc * pref;
    }
  }

  // V components at one node via dual seeds on the theta and I slots.
  template <class S>
  void v_node(const std::vector<S>& theta, const std::vector<S>& itil,
              const std::vector<S>& xt, std::vector<S>& dphi, std::vector<S>& dI) const {
    using D = Dual<S>;
    std::vector<D> xtd(xt.size());
    for (size_t b = 0; b < xt.size(); ++b) xtd[b] = D(xt[b]);
    dphi.assign((size_t)d_, S(0.0));
    dI.assign((size_t)d_, S(0.0));
    for (int slot = 0; slot < 2 * d_; ++slot) {
      std::vector<D> th((size_t)d_), it((size_t)d_);
      for (int i = 0; i < d_; ++i) {
        th[(size_t)i] = D(theta[(size_t)i], S(slot == i ? 1.0 : 0.0));
        it[(size_t)i] = D(itil[(size_t)i], S(slot == d_ + i ? 1.0 : 0.0));
      }
      D u = utilde(th, it, xtd);
      if (slot < d_) dphi[(size_t)slot] = u.b * lambda_;
      else dI[(size_t)(slot - d_)] = u.b * lambda_;
    }
  }

 private:
  NLWConfig cfg_;
  ModePacking pack_;
  const Truncation* tr_;
  NormalFormData nf_;
  VectorXd a_, omega_;
  double delta_ = 0.0, delta2_ = 0.0, delta4_ = 0.0, lambda_ = 0.0;
  int d_ = 0;
  std::vector<double> mu_t_, sq2mu_;
  int nphi_ = 0, nnodes_ = 0, nx_ = 0;
  double wx_ = 0.0;
  std::vector<double> xs_;
  MatrixXd psi_;   // dim x nx
  MatrixXd psit_;  // d x nx
  std::vector<std::vector<double>> angles_;
  MatrixXcd phase_;      // e^{-i q.phi_g}, nnodes x nsites
  Truncation off_tr_;    // offset lattice |p|_inf <= 2Q
  MatrixXcd off_phase_;  // e^{+i p.phi_g}, nnodes x offset sites

  struct Fields;
  Fields torus_fields(const TangentialMap& pj) const;
  FourierMap field_to_map(const MatrixXcd& node_block_values, bool real) const;
  // offset transforms Mhat(p) of the weight-field moment matrices, p on off_tr_
  std::vector<MatrixXcd> offset_moments(const MatrixXd& weight_grid) const;
  MatrixXcd assemble_from_moments(const std::vector<MatrixXcd>& mhat) const;
};

}  // namespace rgt
