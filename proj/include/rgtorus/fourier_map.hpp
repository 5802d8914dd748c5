#pragma once

#include "rgtorus/truncation.hpp"

namespace rgt {

// Map from the Fourier window into the stacked normal-mode blocks.
// Real-mode maps represent real-valued functions of the torus angle: only the
// lexicographic positive half plus q = 0 is stored and z(-q) = conj(z(q)) is
// synthesized on read, so reality cannot drift. Complex-mode maps store the
// whole window.
class FourierMap {
 public:
  FourierMap() = default;
  FourierMap(const Truncation& tr, bool real) : tr_(&tr), real_(real) {
    build_half_table();
    vals_.assign(real_ ? half_sites_.size() : (size_t)tr.nsites,
                 VectorXcd::Zero(tr.dim));
  }
  static FourierMap zero(const Truncation& tr, bool real = true) {
    return FourierMap(tr, real);
  }

  const Truncation& trunc() const { return *tr_; }
  bool real_mode() const { return real_; }

  VectorXcd coeff(int site) const {
    if (real_) {
      int slot = half_slot_[site];
      if (slot >= 0) return vals_[slot];
      int neg = tr_->negate_index(site);
      return vals_[half_slot_[neg]].conjugate();
    }
    return vals_[site];
  }

  void set_coeff(int site, const VectorXcd& v) {
    if ((int)v.size() != tr_->dim) throw std::invalid_argument("set_coeff: wrong block size");
    if (real_) {
      int slot = half_slot_[site];
      if (slot >= 0) {
        vals_[slot] = v;
        if (tr_->is_zero_site(site)) vals_[slot] = v.real().cast<cplx>();
      } else {
        int neg = tr_->negate_index(site);
        vals_[half_slot_[neg]] = v.conjugate();
      }
    } else {
      vals_[site] = v;
    }
  }

  // ||z||_s = sum over the full window, site-lexicographic then k ascending.
  double norm(double s) const {
    double acc = 0.0;
    for (int site = 0; site < tr_->nsites; ++site) {
      VectorXcd v = coeff(site);
      for (int k = 0; k <= tr_->kmax; ++k) {
        int dk = tr_->mult[k];
        if (dk == 0) continue;
        acc += kweight(k, s) * v.segment(tr_->offset[k], dk).norm();
      }
    }
    return acc;
  }

  double sup_block_norm() const {
    double m = 0.0;
    for (int site = 0; site < tr_->nsites; ++site) m = std::max(m, coeff(site).norm());
    return m;
  }

  // (tau_beta z)(q) = e^{i beta . q} z(q); real beta preserves reality.
  FourierMap translate(const std::vector<cplx>& beta) const {
    if ((int)beta.size() != tr_->d) throw std::invalid_argument("translate: beta size != d");
    bool beta_real = true;
    for (const cplx& b : beta)
      if (b.imag() != 0.0) beta_real = false;
    FourierMap out(*tr_, real_ && beta_real);
    for (int site = 0; site < tr_->nsites; ++site) {
      if (out.real_ && out.half_slot_[site] < 0) continue;
      std::vector<int> q = tr_->site_vector(site);
      cplx phase_arg = 0.0;
      for (int i = 0; i < tr_->d; ++i) phase_arg += beta[i] * double(q[i]);
      out.set_coeff(site, std::exp(iu * phase_arg) * coeff(site));
    }
    return out;
  }

  FourierMap& operator+=(const FourierMap& o) { return merge(o, 1.0); }
  FourierMap& operator-=(const FourierMap& o) { return merge(o, -1.0); }
  FourierMap operator+(const FourierMap& o) const { FourierMap r = *this; r += o; return r; }
  FourierMap operator-(const FourierMap& o) const { FourierMap r = *this; r -= o; return r; }
  FourierMap operator*(cplx c) const {
    FourierMap r = *this;
    if (r.real_ && c.imag() != 0.0) r = r.to_complex_mode();
    for (auto& v : r.vals_) v *= c;
    return r;
  }

  FourierMap to_complex_mode() const {
    if (!real_) return *this;
    FourierMap r(*tr_, false);
    for (int site = 0; site < tr_->nsites; ++site) r.vals_[site] = coeff(site);
    return r;
  }

  // Stacked layout: site-major, block layout inside each site.
  VectorXcd to_stacked() const {
    VectorXcd v(tr_->nsites * tr_->dim);
    for (int site = 0; site < tr_->nsites; ++site)
      v.segment((Eigen::Index)site * tr_->dim, tr_->dim) = coeff(site);
    return v;
  }

  // Rebuild from a stacked vector. In real mode mirror halves are averaged;
  // returns the reality defect that was removed.
  double from_stacked(const VectorXcd& v) {
    if (v.size() != (Eigen::Index)tr_->nsites * tr_->dim)
      throw std::invalid_argument("from_stacked: wrong length");
    double defect = 0.0;
    if (!real_) {
      for (int site = 0; site < tr_->nsites; ++site)
        vals_[site] = v.segment((Eigen::Index)site * tr_->dim, tr_->dim);
      return 0.0;
    }
    for (size_t h = 0; h < half_sites_.size(); ++h) {
      int site = half_sites_[h];
      int neg = tr_->negate_index(site);
      VectorXcd a = v.segment((Eigen::Index)site * tr_->dim, tr_->dim);
      VectorXcd b = v.segment((Eigen::Index)neg * tr_->dim, tr_->dim).conjugate();
      defect = std::max(defect, (a - b).norm());
      vals_[h] = 0.5 * (a + b);
      if (tr_->is_zero_site(site)) vals_[h] = vals_[h].real().cast<cplx>();
    }
    return defect;
  }

 private:
  FourierMap& merge(const FourierMap& o, double sign) {
    if (!tr_->compatible(*o.tr_)) throw std::invalid_argument("map arithmetic: truncation mismatch");
    if (real_ == o.real_) {
      for (size_t i = 0; i < vals_.size(); ++i) vals_[i] += sign * o.vals_[i];
    } else if (!real_) {
      for (int site = 0; site < tr_->nsites; ++site) vals_[site] += sign * o.coeff(site);
    } else {
      *this = to_complex_mode();
      return merge(o, sign);
    }
    return *this;
  }

  void build_half_table() {
    half_slot_.assign(tr_->nsites, -1);
    half_sites_.clear();
    for (int site = 0; site < tr_->nsites; ++site) {
      std::vector<int> q = tr_->site_vector(site);
      bool zero = true;
      for (int c : q)
        if (c != 0) zero = false;
      if (zero || Truncation::lex_positive(q)) {
        half_slot_[site] = (int)half_sites_.size();
        half_sites_.push_back(site);
      }
    }
  }

  const Truncation* tr_ = nullptr;
  bool real_ = true;
  std::vector<int> half_slot_;
  std::vector<int> half_sites_;
  std::vector<VectorXcd> vals_;
};

inline FourierMap operator*(cplx c, const FourierMap& m) { return m * c; }

}  // namespace rgt
