#pragma once

#include "rgtorus/fourier_map.hpp"

namespace rgt {

// Operators that are diagonal in q and block-diagonal over the mode families:
// L(q) = blockdiag_k L_k(q). Covers K_n, P_n, Q_n, Phat_n, Gamma_n and A_n.
class DiagonalKernel {
 public:
  DiagonalKernel() = default;
  explicit DiagonalKernel(const Truncation& tr) : tr_(&tr) {
    blocks_.assign(tr.nsites, {});
    for (auto& site_blocks : blocks_) {
      site_blocks.resize(tr.kmax + 1);
      for (int k = 0; k <= tr.kmax; ++k)
        site_blocks[k] = MatrixXcd::Zero(tr.mult[k], tr.mult[k]);
    }
  }

  static DiagonalKernel identity(const Truncation& tr) {
    DiagonalKernel id(tr);
    for (int site = 0; site < tr.nsites; ++site)
      for (int k = 0; k <= tr.kmax; ++k)
        id.blocks_[site][k] = MatrixXcd::Identity(tr.mult[k], tr.mult[k]);
    return id;
  }

  const Truncation& trunc() const { return *tr_; }

  MatrixXcd& block(int site, int k) { return blocks_[site][k]; }
  const MatrixXcd& block(int site, int k) const { return blocks_[site][k]; }

  FourierMap apply(const FourierMap& z) const {
    if (!tr_->compatible(z.trunc()))
      throw std::invalid_argument("apply_diagonal: truncation mismatch");
    FourierMap out(*tr_, false);
    for (int site = 0; site < tr_->nsites; ++site) {
      VectorXcd v = z.coeff(site), r = VectorXcd::Zero(tr_->dim);
      for (int k = 0; k <= tr_->kmax; ++k) {
        int dk = tr_->mult[k];
        if (dk == 0) continue;
        r.segment(tr_->offset[k], dk) = blocks_[site][k] * v.segment(tr_->offset[k], dk);
      }
      out.set_coeff(site, r);
    }
    if (z.real_mode() && reality_defect() < 1e-12) {
      FourierMap re(*tr_, true);
      for (int site = 0; site < tr_->nsites; ++site) re.set_coeff(site, out.coeff(site));
      return re;
    }
    return out;
  }

  VectorXcd apply_stacked(const VectorXcd& v) const {
    if (v.size() != (Eigen::Index)tr_->nsites * tr_->dim)
      throw std::invalid_argument("apply_stacked: wrong length");
    VectorXcd out(v.size());
    for (int site = 0; site < tr_->nsites; ++site) {
      Eigen::Index base = (Eigen::Index)site * tr_->dim;
      for (int k = 0; k <= tr_->kmax; ++k) {
        int dk = tr_->mult[k];
        if (dk == 0) continue;
        out.segment(base + tr_->offset[k], dk) =
            blocks_[site][k] * v.segment(base + tr_->offset[k], dk);
      }
    }
    return out;
  }

  DiagonalKernel operator*(const DiagonalKernel& o) const {
    DiagonalKernel r(*tr_);
    for (int site = 0; site < tr_->nsites; ++site)
      for (int k = 0; k <= tr_->kmax; ++k)
        r.blocks_[site][k] = blocks_[site][k] * o.blocks_[site][k];
    return r;
  }
  DiagonalKernel operator+(const DiagonalKernel& o) const {
    DiagonalKernel r(*tr_);
    for (int site = 0; site < tr_->nsites; ++site)
      for (int k = 0; k <= tr_->kmax; ++k)
        r.blocks_[site][k] = blocks_[site][k] + o.blocks_[site][k];
    return r;
  }
  DiagonalKernel operator-(const DiagonalKernel& o) const {
    DiagonalKernel r(*tr_);
    for (int site = 0; site < tr_->nsites; ++site)
      for (int k = 0; k <= tr_->kmax; ++k)
        r.blocks_[site][k] = blocks_[site][k] - o.blocks_[site][k];
    return r;
  }

  // sup over (q,k) of [k]^{s_out-s_in} sigma_max(L_k(q)); exact induced norm
  // h_{s_in} -> h_{s_out} for operators of this diagonal shape.
  double weighted_norm(double s_in, double s_out) const {
    double m = 0.0;
    for (int site = 0; site < tr_->nsites; ++site)
      for (int k = 0; k <= tr_->kmax; ++k) {
        if (tr_->mult[k] == 0) continue;
        double b = blocks_[site][k].operatorNorm();
        m = std::max(m, kweight(k, s_out - s_in) * b);
      }
    return m;
  }

  // max over sites of || L(-q) - conj(L(q)) ||; zero for operators that map
  // real maps to real maps.
  double reality_defect() const {
    double m = 0.0;
    for (int site = 0; site < tr_->nsites; ++site) {
      int neg = tr_->negate_index(site);
      for (int k = 0; k <= tr_->kmax; ++k) {
        if (tr_->mult[k] == 0) continue;
        m = std::max(m, (blocks_[neg][k] - blocks_[site][k].conjugate()).norm());
      }
    }
    return m;
  }

  double sup_block_norm() const {
    double m = 0.0;
    for (int site = 0; site < tr_->nsites; ++site)
      for (int k = 0; k <= tr_->kmax; ++k)
        if (tr_->mult[k] > 0) m = std::max(m, blocks_[site][k].operatorNorm());
    return m;
  }

  // Stacked (nsites*dim)^2 matrix; used when a diagonal kernel has to enter
  // general matrix algebra.
  MatrixXcd to_matrix() const {
    Eigen::Index n = (Eigen::Index)tr_->nsites * tr_->dim;
    MatrixXcd m = MatrixXcd::Zero(n, n);
    for (int site = 0; site < tr_->nsites; ++site)
      for (int k = 0; k <= tr_->kmax; ++k) {
        int dk = tr_->mult[k];
        if (dk == 0) continue;
        m.block((Eigen::Index)site * tr_->dim + tr_->offset[k],
                (Eigen::Index)site * tr_->dim + tr_->offset[k], dk, dk) = blocks_[site][k];
      }
    return m;
  }

 private:
  const Truncation* tr_ = nullptr;
  std::vector<std::vector<MatrixXcd>> blocks_;
};

// Upper bound for the h_s -> h_s' induced norm of a general stacked operator:
// max over input blocks of the weighted column sum of block spectral norms.
inline double weighted_block_colsum_norm(const MatrixXcd& B, const Truncation& tr,
                                         double s_in, double s_out) {
  double worst = 0.0;
  for (int site_in = 0; site_in < tr.nsites; ++site_in)
    for (int kin = 0; kin <= tr.kmax; ++kin) {
      int din = tr.mult[kin];
      if (din == 0) continue;
      double colsum = 0.0;
      for (int site_out = 0; site_out < tr.nsites; ++site_out)
        for (int kout = 0; kout <= tr.kmax; ++kout) {
          int dout = tr.mult[kout];
          if (dout == 0) continue;
          MatrixXcd blk = B.block((Eigen::Index)site_out * tr.dim + tr.offset[kout],
                                  (Eigen::Index)site_in * tr.dim + tr.offset[kin], dout, din);
          colsum += kweight(kout, s_out) * blk.operatorNorm();
        }
      worst = std::max(worst, colsum / kweight(kin, s_in));
    }
  return worst;
}

}  // namespace rgt
