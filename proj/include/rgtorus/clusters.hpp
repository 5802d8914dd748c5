#pragma once

#include <vector>

#include "rgtorus/diagonal_kernel.hpp"
#include "rgtorus/nlw.hpp"
#include "rgtorus/truncation.hpp"

namespace rgt {

// One spectral cluster of mu~_n restricted to family k: eigenvalues in mu
// units, the orthonormal eigenbasis (columns), the covering interval, and the
// interval clamped into the ancestor chain. Cutoffs and resonant sets use the
// clamped interval, which makes the support of a child cutoff sit inside the
// parent plateau exactly, so P_n P_{n-1} = P_n holds to rounding.
struct Cluster {
  int k = 0;
  int index = 0;    // position within the family at this level
  int parent = -1;  // id in the previous level, -1 at the first level
  VectorXd eigs;    // ascending
  double lo = 0.0, hi = 0.0;
  double clo = 0.0, chi = 0.0;
  double center = 0.0;  // midpoint of the raw interval
  MatrixXcd basis;      // mult[k] x eigs.size()
};

struct ClusterLevel {
  int n = 1;
  double eta = 0.5;
  std::vector<Cluster> clusters;
  std::vector<std::vector<int>> by_family;

  const Cluster& at(int id) const { return clusters[(size_t)id]; }
  int count() const { return (int)clusters.size(); }
};

// Maximal decomposition of a sorted sequence: split exactly when the gap
// exceeds the threshold (ties do not split). Returns [begin, end) ranges.
std::vector<std::pair<int, int>> split_by_gaps(const VectorXd& sorted_values, double gap);

// Level-1 decomposition from per-family hermitian blocks of mu^2.
ClusterLevel initial_clusters(const std::vector<MatrixXcd>& mu2_blocks, double eta);

// Pure form of the decomposition for already-diagonal spectra (toy models):
// family k gets the given sorted eigenvalues with the identity basis.
ClusterLevel cluster_decompose(const std::vector<VectorXd>& spectrum_per_family, double eta,
                               int n);

// Level n+1 from the updated mu^2 blocks. The update must preserve the
// parent eigenspaces (block-diagonal a_n); each parent is rediagonalized in
// its own subspace, children split by the gap rule at eta^(n+1), and their
// intervals are clamped into the parent's. Throws if the invariance defect is
// large or if clusters from different parents come closer than eta^(n+1).
ClusterLevel recluster(const ClusterLevel& prev, const std::vector<MatrixXcd>& mu2_blocks);

// Cutoff profile chi^n: 1 within distance eta^n/8 of [lo, hi] in |kappa|,
// 0 beyond eta^n/4, C^1 cubic smoothstep between; |chi'| <= 12 eta^-n.
double cutoff(double kappa, double lo, double hi, double eta, int n);
double cutoff_indicator(double kappa, double lo, double hi, double eta, int n);

// S^n_{k,i} = {q : d(|omega.q|, clamped interval) < eta^n/4}, per cluster id.
// Within a family the sets must be pairwise disjoint; violation throws.
std::vector<std::vector<int>> resonant_sets(const std::vector<double>& omega,
                                            const ClusterLevel& level, const Truncation& tr);

// P_n(q) = sum chi^n(|omega.q|) P^n_{k,i} (conjugate basis on omega.q < 0),
// Q_n = 1 - P_n, Phat_n the indicator version. All satisfy the kernel
// reality L(-q) = conj(L(q)).
struct LevelProjectors {
  DiagonalKernel P, Q, Phat;
};
LevelProjectors build_projectors(const ClusterLevel& level, const std::vector<double>& omega,
                                 const Truncation& tr);

// Initial per-family mu^2 blocks of the wave model: diag(zeta_n) over the
// packed members.
std::vector<MatrixXcd> initial_mu2_blocks(const ModePacking& pack, const NLWConfig& cfg);

}  // namespace rgt
