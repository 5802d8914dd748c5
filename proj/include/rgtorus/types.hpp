#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rgt {

using cplx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

inline constexpr double pi = std::numbers::pi_v<double>;
inline constexpr cplx iu{0.0, 1.0};

// Weight [k] = max(1,k) used by every k^s norm; keeps the k = 0 block finite.
inline double kweight(int k, double s) {
  int kk = k < 1 ? 1 : k;
  if (s == 0.0) return 1.0;
  if (s == 1.0) return double(kk);
  if (s == 2.0) return double(kk) * double(kk);
  return std::pow(double(kk), s);
}

struct TruncationEvent {
  std::string where;
  double dropped = 0.0;  // mass that fell outside the window
};

}  // namespace rgt
