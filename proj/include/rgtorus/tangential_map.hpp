#pragma once

#include <vector>

#include "rgtorus/truncation.hpp"
#include "rgtorus/types.hpp"

namespace rgt {

// Angle and action correction maps Phi, J : T^d -> R^d stored as Fourier
// coefficients on the truncation window, one row per site, one column per
// tangential direction. Real-valuedness is row(-q) = conj(row(q)).
class TangentialMap {
 public:
  TangentialMap() = default;
  explicit TangentialMap(const Truncation& tr)
      : tr_(&tr),
        phi_(MatrixXcd::Zero(tr.nsites, tr.d)),
        j_(MatrixXcd::Zero(tr.nsites, tr.d)) {}

  const Truncation& trunc() const { return *tr_; }
  MatrixXcd& phi() { return phi_; }
  const MatrixXcd& phi() const { return phi_; }
  MatrixXcd& j() { return j_; }
  const MatrixXcd& j() const { return j_; }

  // Symmetrizes both maps to real-valued form, returns the removed defect.
  double enforce_reality() {
    double defect = 0.0;
    for (MatrixXcd* m : {&phi_, &j_}) {
      for (int s = 0; s < tr_->nsites; ++s) {
        int ns = tr_->negate_index(s);
        if (ns < s) continue;
        for (int i = 0; i < tr_->d; ++i) {
          cplx a = (*m)(s, i), b = std::conj((*m)(ns, i));
          cplx avg = 0.5 * (a + b);
          defect = std::max(defect, std::abs(a - b));
          (*m)(s, i) = avg;
          (*m)(ns, i) = std::conj(avg);
        }
      }
    }
    return defect;
  }

  // Values by direct summation, F(angle) = Re sum_q e^{-i q.angle} Fhat(q).
  void values(const std::vector<double>& angle, VectorXd& phi_val, VectorXd& j_val) const {
    phi_val = VectorXd::Zero(tr_->d);
    j_val = VectorXd::Zero(tr_->d);
    for (int s = 0; s < tr_->nsites; ++s) {
      double qa = dot(angle, tr_->site_vector(s));
      cplx ph = std::exp(cplx(0.0, -qa));
      for (int i = 0; i < tr_->d; ++i) {
        phi_val[i] += std::real(ph * phi_(s, i));
        j_val[i] += std::real(ph * j_(s, i));
      }
    }
  }

  double sup_abs() const {
    double m = 0.0;
    for (int s = 0; s < tr_->nsites; ++s)
      for (int i = 0; i < tr_->d; ++i)
        m = std::max({m, std::abs(phi_(s, i)), std::abs(j_(s, i))});
    return m;
  }

  // l1 coefficient norm of both components, plain site weight.
  double norm1() const {
    double acc = 0.0;
    for (int s = 0; s < tr_->nsites; ++s)
      for (int i = 0; i < tr_->d; ++i) acc += std::abs(phi_(s, i)) + std::abs(j_(s, i));
    return acc;
  }

 private:
  const Truncation* tr_ = nullptr;
  MatrixXcd phi_, j_;
};

}  // namespace rgt
