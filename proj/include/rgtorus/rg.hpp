#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rgtorus/clusters.hpp"
#include "rgtorus/perturbation.hpp"

namespace rgt {

// Tunables of the renormalization iteration. eta is the scale ratio of the
// cluster hierarchy; tolerances are relative to measured solution sizes.
struct RGParams {
  double eta = 0.5;
  int max_levels = 6;
  double tol_chain = 1e-12;        // fixed point tolerance of the chain solve
  int max_chain_iter = 200;
  double cond_limit = 1e12;        // divisor block condition abort threshold
  double contraction_limit = 0.5;  // abort when ||Gamma_n Dw~_{n-1}|| reaches this
  double s_norm = 2.0;             // h_s index used in diagnostics
  double probe_scale = 1.0;        // effective-linearity probe amplitude factor
};

// Thrown when a divisor block fails the admissibility guard or a contraction
// precondition is violated; carries the witness for the stop certificate.
struct RGAbort : std::runtime_error {
  int level = 0;
  std::vector<int> q;
  int family = -1;
  int cluster = -1;   // index within the family, -1 when not cluster-specific
  double value = 0.0; // condition number or contraction factor
  RGAbort(const std::string& msg, int n, std::vector<int> site_q, int k, int idx, double v)
      : std::runtime_error(msg), level(n), q(std::move(site_q)), family(k), cluster(idx),
        value(v) {}
};

// K_0(q) = (omega.q)^2 - mu^2 blockwise. Real mu2 blocks keep the kernel
// reality L(-q) = conj(L(q)) exact; the flow only feeds real blocks here.
DiagonalKernel k0_kernel(const Truncation& tr, const std::vector<double>& omega,
                         const std::vector<MatrixXcd>& mu2_blocks);

// Gamma_n = K_n^{-1} Q_n P_{n-1}, assembled per site from the weights
// chihat = (1 - chi^n_child) chi^{n-1}_parent on the cluster subspaces
// (chi^0 = 1). On the parent plateau K_n is exactly block-diagonal over the
// children and each child block is inverted on its own subspace, skipping
// children with chihat = 0; in the parent transition annulus the parent
// restriction is inverted as one block. Condition numbers above cond_limit
// abort with the offending site and cluster.
struct GammaBuild {
  DiagonalKernel G;
  double norm = 0.0;      // sup over (q,k) of block operator norms
  double max_cond = 0.0;  // worst restricted-block condition number seen
};
GammaBuild gamma_operator(const DiagonalKernel& K, const ClusterLevel& level,
                          const ClusterLevel* parent_level, const std::vector<double>& omega,
                          double cond_limit);

// Order-M jet R solving R(z) = Gamma w(z + R(z)). The constant part is the
// fixed point of c -> Gamma w(c) (Picard, seeded with H Gamma w(0)); with
// H = (1 - Gamma Dw(c))^{-1} the linear part is H Gamma Dw(c) and the
// quadratic and cubic parts are the per-order Picard limits in closed form,
// so nesting depth stays bounded. Aborts when ||Gamma Dw(0)|| >= 0.5.
struct JetSolve {
  JetFunctional R;
  double contraction = 0.0;  // measured ||Gamma Dw|| bound
  int iterations = 0;        // Picard steps taken by the constant part
  double tail = 0.0;         // self-defect of the jet equation at radius r
};
JetSolve solve_R(const JetFunctional& w, const DiagonalKernel& Gamma, double r, double tol_R,
                 int max_iter = 200);

// Diagonal blocks of Dw_n(0) read at the best resonant site per cluster
// (omega.q > 0 minimizing |omega.q - center|), projected to the cluster
// subspace and hermitized. Clusters with an empty resonant set keep a zero
// block: they are not being renormalized, which is the generic case for a
// Diophantine frequency. A_n carries the family blocks on Q+, their
// conjugates on Q-, and zero at q = 0.
struct AExtraction {
  DiagonalKernel A;
  std::vector<MatrixXcd> family_blocks;  // per k, embedded sum over clusters
  double raw_defect = 0.0;               // max ||sigma - sigma^+|| before hermitization
  double norm = 0.0;                     // sup family block norm
};
AExtraction extract_A(const MatrixXcd& Dwn, const ClusterLevel& level,
                      const std::vector<std::vector<int>>& S, const std::vector<double>& omega,
                      const Truncation& tr);

// Translation continuity of Gamma: Delta_p Gamma(q) = Gamma(q+p) - Gamma(q)
// over sites with both ends in the window.
struct GammaContinuity {
  double gamma_norm = 0.0;
  double delta_norm = 0.0;
  double omega_dot_p = 0.0;
};
GammaContinuity gamma_continuity_check(const DiagonalKernel& G, const std::vector<int>& p,
                                       const std::vector<double>& omega);

// Everything measured at one level of the iteration.
struct LevelRecord {
  int n = 0;
  ClusterLevel level;
  LevelProjectors proj;
  std::vector<std::vector<int>> S;
  DiagonalKernel K;      // K_n
  DiagonalKernel Gamma;  // Gamma_n
  DiagonalKernel A;      // A_n extracted at this level
  double gamma_norm = 0.0, gamma_cond = 0.0;
  double a_norm = 0.0, a_raw_defect = 0.0;
  double contraction = 0.0;      // ||Gamma_n Dw~_{n-1}|| (h_s bound)
  double chain_rate = 0.0;       // measured Picard rate of the chain solve
  int chain_iters = 0;
  FourierMap z;                  // z_n = F_n(0), real coefficient map
  double z_norm = 0.0;           // ||z_n||_s
  double z_diff = 0.0;           // ||z_n - z_{n-1}||_s
  double z_reality_defect = 0.0;
  double rho_norm = 0.0;         // ||R_n(0)|| on the length-n chain
  double residual = 0.0;         // relative defect of the limit identity
  double phat_w_norm = 0.0;      // ||Phat_n w_n(0)||_s
  double phat_dw_norm = 0.0;     // ||Phat_n Dw~_n|| (h_s bound)
  double eff_linearity = 0.0;    // eff_lin_num / eff_lin_den
  double eff_lin_num = 0.0;      // ||Phat (w_n(zp) - w_n(0) - Dw_n(0) zp)||
  double eff_lin_den = 0.0;      // ||Phat Dw_n(0) zp||
  double pp_defect = 0.0;        // max_q ||P_n P_{n-1} - P_n||
  double symm1 = 0.0, symm2 = 0.0;
  double mu_shift = 0.0;         // ||mu~_{n+1} - mu~_n||
  double min_mu2_eig = 0.0;      // of the updated blocks
  double drift_ratio = 0.0;      // max interval drift / eta^{m+1} over ancestors
  bool s_nested = true;
  std::vector<std::string> warnings;
};

struct RGResult {
  bool converged = false;
  std::string abort_reason;  // empty on a clean run
  std::vector<LevelRecord> levels;
  FourierMap z;              // final iterate
  std::vector<MatrixXcd> mu2_final;
};

// Driver for the full iteration. The model enters only through the order-M
// jet of w_0 and a callback for its Jacobian at a stacked point, so toy
// models and the wave-equation engine share the same flow.
class RGFlow {
 public:
  RGFlow(const Truncation& tr, std::vector<double> omega, std::vector<MatrixXcd> mu2_blocks,
         JetFunctional w0, std::function<MatrixXcd(const VectorXcd&)> dw0, RGParams params);

  RGResult run();

 private:
  struct LevelData {
    ClusterLevel cl;
    LevelProjectors proj;
    std::vector<std::vector<int>> S;
    DiagonalKernel K, Gamma, A;
    MatrixXcd Gmat, Amat;
    double gamma_norm = 0.0, gamma_cond = 0.0;
    bool has_A = false;
  };

  struct ChainEval {
    std::vector<VectorXcd> rho;  // rho[m], m = 1..N (index 0 unused)
    std::vector<VectorXcd> y;    // y[m], m = 0..N; y[N] = tail, y[m-1] = y[m] + rho[m]
    VectorXcd w0_value;          // w0(y[0])
    VectorXcd wn_value;          // w_N(tail) = w0(y[0]) - sum_{k<N} A_k y[k]
    int iters = 0;
    double rate = 0.0;
  };

  void build_level(int n);  // clusters, projectors, S, K_n, Gamma_n
  ChainEval solve_chain(int N, const VectorXcd* tail, const std::vector<VectorXcd>* warm);
  MatrixXcd d_chain(int N, const ChainEval& ch, double* contraction_out);

  const Truncation* tr_;
  std::vector<double> omega_;
  std::vector<MatrixXcd> mu2_;
  JetFunctional w0_;
  std::function<MatrixXcd(const VectorXcd&)> dw0_;
  RGParams p_;
  std::vector<LevelData> lv_;
};

}  // namespace rgt
