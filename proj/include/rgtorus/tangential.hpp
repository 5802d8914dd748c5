#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rgtorus/perturbation.hpp"
#include "rgtorus/rg.hpp"

namespace rgt {

// Standard KAM block problem for the torus corrections (Phi, J). The twist g
// is the action-quadratic coefficient of the rescaled normal form, delta^4
// gbar for the wave model. A positive dioph_K turns on the small-divisor
// check |omega.q| > K |q|^-nu over the active window before solving.
struct TangentialProblem {
  std::vector<double> omega;
  MatrixXd g;
  double dioph_K = 0.0;
  double dioph_nu = 6.0;
  double newton_tol = 1e-12;  // residual over forcing scale
  int max_newton = 25;
};

// Per-mode homogeneous block [[0, D],[-D, g]] with D = -i omega.q on the
// diagonal of the first-order part; x solves block * x = rhs.
MatrixXcd tangential_block(const TangentialProblem& prob, const std::vector<int>& q);
VectorXcd tangential_block_solve(const TangentialProblem& prob, const std::vector<int>& q,
                                 const VectorXcd& rhs);

// Residual of the block system at (pj, z): rows D J + V_phi and
// -D Phi + g J + V_I over the truncation window. "solved" collects every row
// except the q = 0 row of the first block; that row is the cokernel direction
// the translation gauge leaves open and is reported as "solvability". At any
// solution of the solved rows it equals -<W . Z'> exactly, so it vanishes
// when z solves the normal equation and is a residual component of the
// coupled problem, not of the tangential one.
struct TangentialResidual {
  double solved = 0.0;
  double solvability = 0.0;
  double scale = 0.0;  // stacked norm of the forcing V at (pj, z)
};
TangentialResidual tangential_residual(const TangentialProblem& prob,
                                       const PerturbationEngine& eng, const TangentialMap& pj,
                                       const FourierMap& z);

struct TangentialSolve {
  TangentialMap sol;            // Phi(0) = 0 gauge
  double residual = 0.0;        // solved rows at the returned iterate
  double solvability = 0.0;     // cokernel row at the returned iterate
  double scale = 0.0;           // forcing norm at the first iterate
  double reality_defect = 0.0;  // largest symmetrization correction applied
  double block_inv_bound = 0.0; // sup over active q of |B(q)^-1| |omega.q|
  int iterations = 0;
  std::vector<double> history;  // residual per Newton evaluation
};

// Newton iteration in Fourier space. The homogeneous per-mode blocks carry
// the derivative of the left side; the forcing contributes the per-node
// Hessian of the potential, which couples the modes, so each step solves one
// dense system over the window. Quadratic convergence is measured by the
// residual history. Throws on a Diophantine violation at an active mode, on
// stagnation, and on iteration exhaustion.
TangentialSolve solve_tangential(const TangentialProblem& prob, const PerturbationEngine& eng,
                                 const FourierMap& z);

// Coupled fixed point Z = Z_s(lambda, Y_s(lambda, Z)): alternate the
// tangential solve at fixed Z with the renormalization flow at fixed (Phi,J)
// until the joint residual of the full torus equation is below tolerance.
struct CoupledParams {
  RGParams rg;
  int jet_order = 2;
  double newton_tol = 1e-12;
  double dioph_K = 0.0;
  double dioph_nu = 6.0;
  double tol = 1e-11;   // joint residual over the joint scale
  int max_sweeps = 30;
  double damping = 1.0; // fraction of each sub-solve update applied
};

struct TorusSolution {
  NLWConfig cfg;
  ModePacking pack;
  NormalFormData nf;
  std::shared_ptr<const Truncation> tr;  // owner of the window pj and z use
  VectorXd a;
  VectorXd omega;
  double lambda = 0.0;
  double delta = 0.0;
  TangentialMap pj;
  FourierMap z;

  bool converged = false;
  double joint_residual = 0.0;
  double scale = 0.0;        // joint forcing scale max(|V|, |w|)
  double solvability = 0.0;  // cokernel row at the final iterate
  double contraction = 0.0;  // measured rate of the z-update sequence
  int sweeps = 0;
  std::vector<double> history;     // joint residual per sweep
  std::vector<double> step_norms;  // |z_k - z_{k-1}| per sweep
  double rg_residual = 0.0;        // limit identity residual of the last flow
  int rg_levels = 0;
  std::vector<MatrixXcd> mu2_final;  // renormalized mu^2 blocks of the last flow
};

TorusSolution coupled_solve(const NLWConfig& cfg, const VectorXd& a, double lambda, int kmax,
                            int Q, const CoupledParams& p);

}  // namespace rgt
