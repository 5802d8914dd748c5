#include "rgtorus/clusters.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace rgt {

namespace {

// Deterministic eigenvector phase: largest-magnitude component real positive.
void fix_phase(MatrixXcd& v) {
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    Eigen::Index imax = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      double a = std::abs(v(i, j));
      if (a > best) {
        best = a;
        imax = i;
      }
    }
    cplx piv = v(imax, j);
    if (std::abs(piv) > 0.0) v.col(j) *= std::conj(piv) / std::abs(piv);
  }
}

// Eigen-decompose a hermitian block; throws on a visible hermiticity defect
// or a non-positive eigenvalue. Returns mu values (sqrt) ascending.
void herm_eig(const MatrixXcd& B, const char* what, VectorXd& mu, MatrixXcd& vecs) {
  double defect = (B - B.adjoint()).norm();
  if (defect > 1e-10 * (1.0 + B.norm())) {
    std::ostringstream os;
    os << what << ": block hermiticity defect " << defect;
    throw std::runtime_error(os.str());
  }
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(((B + B.adjoint()) * 0.5).eval());
  if (es.info() != Eigen::Success) throw std::runtime_error("cluster eigensolver failed");
  VectorXd zeta = es.eigenvalues();
  for (Eigen::Index i = 0; i < zeta.size(); ++i)
    if (!(zeta(i) > 0.0)) {
      std::ostringstream os;
      os << what << ": mu^2 block not positive definite, eigenvalue " << zeta(i);
      throw std::runtime_error(os.str());
    }
  mu = zeta.array().sqrt();
  vecs = es.eigenvectors();
  fix_phase(vecs);
}

double dist_to_interval(double kappa, double lo, double hi) {
  kappa = std::abs(kappa);
  if (kappa < lo) return lo - kappa;
  if (kappa > hi) return kappa - hi;
  return 0.0;
}

void index_level(ClusterLevel& lvl, int kmax) {
  lvl.by_family.assign((size_t)kmax + 1, {});
  std::vector<int> counter((size_t)kmax + 1, 0);
  for (int id = 0; id < lvl.count(); ++id) {
    Cluster& c = lvl.clusters[(size_t)id];
    c.index = counter[(size_t)c.k]++;
    lvl.by_family[(size_t)c.k].push_back(id);
  }
}

}  // namespace

std::vector<std::pair<int, int>> split_by_gaps(const VectorXd& v, double gap) {
  std::vector<std::pair<int, int>> ranges;
  int begin = 0;
  for (int i = 0; i + 1 < (int)v.size(); ++i) {
    if (v(i + 1) - v(i) < -1e-14 * (1.0 + std::abs(v(i))))
      throw std::invalid_argument("split_by_gaps: values not ascending");
    if (v(i + 1) - v(i) > gap) {
      ranges.emplace_back(begin, i + 1);
      begin = i + 1;
    }
  }
  if (v.size() > 0) ranges.emplace_back(begin, (int)v.size());
  return ranges;
}

ClusterLevel initial_clusters(const std::vector<MatrixXcd>& mu2_blocks, double eta) {
  if (!(eta > 0.0 && eta <= 0.5))
    throw std::invalid_argument("clusters: eta must lie in (0, 1/2]");
  ClusterLevel lvl;
  lvl.n = 1;
  lvl.eta = eta;
  int kmax = (int)mu2_blocks.size() - 1;
  for (int k = 0; k <= kmax; ++k) {
    const MatrixXcd& B = mu2_blocks[(size_t)k];
    if (B.rows() == 0) continue;
    VectorXd mu;
    MatrixXcd vecs;
    herm_eig(B, "initial_clusters", mu, vecs);
    for (auto [b, e] : split_by_gaps(mu, eta)) {
      Cluster c;
      c.k = k;
      c.parent = -1;
      c.eigs = mu.segment(b, e - b);
      c.basis = vecs.middleCols(b, e - b);
      c.lo = c.clo = c.eigs(0);
      c.hi = c.chi = c.eigs(c.eigs.size() - 1);
      c.center = 0.5 * (c.lo + c.hi);
      lvl.clusters.push_back(std::move(c));
    }
  }
  index_level(lvl, kmax);
  return lvl;
}

ClusterLevel cluster_decompose(const std::vector<VectorXd>& spectrum_per_family, double eta,
                               int n) {
  if (!(eta > 0.0 && eta <= 0.5))
    throw std::invalid_argument("clusters: eta must lie in (0, 1/2]");
  if (n < 1) throw std::invalid_argument("cluster_decompose: level must be >= 1");
  ClusterLevel lvl;
  lvl.n = n;
  lvl.eta = eta;
  int kmax = (int)spectrum_per_family.size() - 1;
  double gap = std::pow(eta, n);
  for (int k = 0; k <= kmax; ++k) {
    const VectorXd& mu = spectrum_per_family[(size_t)k];
    if (mu.size() == 0) continue;
    MatrixXcd id = MatrixXcd::Identity(mu.size(), mu.size());
    for (auto [b, e] : split_by_gaps(mu, gap)) {
      Cluster c;
      c.k = k;
      c.parent = -1;
      c.eigs = mu.segment(b, e - b);
      c.basis = id.middleCols(b, e - b);
      c.lo = c.clo = c.eigs(0);
      c.hi = c.chi = c.eigs(c.eigs.size() - 1);
      c.center = 0.5 * (c.lo + c.hi);
      lvl.clusters.push_back(std::move(c));
    }
  }
  index_level(lvl, kmax);
  return lvl;
}

ClusterLevel recluster(const ClusterLevel& prev, const std::vector<MatrixXcd>& mu2_blocks) {
  ClusterLevel lvl;
  lvl.n = prev.n + 1;
  lvl.eta = prev.eta;
  int kmax = (int)prev.by_family.size() - 1;
  double gap = std::pow(prev.eta, lvl.n);

  for (int k = 0; k <= kmax; ++k) {
    const MatrixXcd& M = mu2_blocks[(size_t)k];
    double mscale = 1.0 + M.norm();
    double prev_hi = 0.0;
    int prev_parent = -1;
    bool first = true;
    for (int pid : prev.by_family[(size_t)k]) {
      const Cluster& p = prev.at(pid);
      MatrixXcd W = p.basis.adjoint() * M * p.basis;
      double invariance = (M * p.basis - p.basis * W).norm();
      if (invariance > 1e-10 * mscale) {
        std::ostringstream os;
        os << "recluster: update does not preserve the parent subspace, family " << k
           << " cluster " << p.index << ", defect " << invariance;
        throw std::runtime_error(os.str());
      }
      VectorXd mu;
      MatrixXcd vecs;
      herm_eig(W, "recluster", mu, vecs);
      MatrixXcd full = p.basis * vecs;
      fix_phase(full);
      for (auto [b, e] : split_by_gaps(mu, gap)) {
        Cluster c;
        c.k = k;
        c.parent = pid;
        c.eigs = mu.segment(b, e - b);
        c.basis = full.middleCols(b, e - b);
        c.lo = c.eigs(0);
        c.hi = c.eigs(c.eigs.size() - 1);
        c.center = 0.5 * (c.lo + c.hi);
        c.clo = std::min(std::max(c.lo, p.clo), p.chi);
        c.chi = std::min(std::max(c.hi, p.clo), p.chi);
        if (!first) {
          if (c.lo < prev_hi - 1e-14 * mscale) {
            std::ostringstream os;
            os << "recluster: family " << k << " children interleave across parents";
            throw std::runtime_error(os.str());
          }
          if (c.parent != prev_parent && c.lo - prev_hi <= gap) {
            std::ostringstream os;
            os << "recluster: family " << k << " clusters from different parents closer than "
               << gap;
            throw std::runtime_error(os.str());
          }
        }
        prev_hi = c.hi;
        prev_parent = c.parent;
        first = false;
        lvl.clusters.push_back(std::move(c));
      }
    }
  }
  index_level(lvl, kmax);
  return lvl;
}

double cutoff(double kappa, double lo, double hi, double eta, int n) {
  double en = std::pow(eta, n);
  double dd = dist_to_interval(kappa, lo, hi);
  if (dd <= en / 8.0) return 1.0;
  if (dd >= en / 4.0) return 0.0;
  double u = (dd - en / 8.0) / (en / 8.0);
  return 1.0 - u * u * (3.0 - 2.0 * u);
}

double cutoff_indicator(double kappa, double lo, double hi, double eta, int n) {
  return dist_to_interval(kappa, lo, hi) < std::pow(eta, n) / 4.0 ? 1.0 : 0.0;
}

std::vector<std::vector<int>> resonant_sets(const std::vector<double>& omega,
                                            const ClusterLevel& level, const Truncation& tr) {
  if ((int)omega.size() != tr.d) throw std::invalid_argument("resonant_sets: omega size != d");
  std::vector<std::vector<int>> sets((size_t)level.count());
  std::vector<int> owner((size_t)tr.nsites, -1);
  int kmax = (int)level.by_family.size() - 1;
  for (int k = 0; k <= kmax; ++k) {
    std::fill(owner.begin(), owner.end(), -1);
    for (int id : level.by_family[(size_t)k]) {
      const Cluster& c = level.at(id);
      double quarter = std::pow(level.eta, level.n) / 4.0;
      for (int site = 0; site < tr.nsites; ++site) {
        double kappa = std::abs(dot(omega, tr.site_vector(site)));
        if (dist_to_interval(kappa, c.clo, c.chi) < quarter) {
          if (owner[(size_t)site] >= 0) {
            std::ostringstream os;
            os << "resonant_sets: level " << level.n << " family " << k << " clusters "
               << level.at(owner[(size_t)site]).index << " and " << c.index
               << " overlap at site " << site;
            throw std::runtime_error(os.str());
          }
          owner[(size_t)site] = id;
          sets[(size_t)id].push_back(site);
        }
      }
    }
  }
  return sets;
}

LevelProjectors build_projectors(const ClusterLevel& level, const std::vector<double>& omega,
                                 const Truncation& tr) {
  if ((int)omega.size() != tr.d) throw std::invalid_argument("build_projectors: omega size != d");
  if ((int)level.by_family.size() != tr.kmax + 1)
    throw std::invalid_argument("build_projectors: family count mismatch");
  for (int k = 0; k <= tr.kmax; ++k) {
    int total = 0;
    for (int id : level.by_family[(size_t)k]) total += (int)level.at(id).eigs.size();
    if (total != tr.mult[(size_t)k])
      throw std::invalid_argument("build_projectors: cluster dimensions do not fill the family");
  }

  std::vector<MatrixXcd> proj((size_t)level.count());
  for (int id = 0; id < level.count(); ++id) {
    const Cluster& c = level.at(id);
    proj[(size_t)id] = c.basis * c.basis.adjoint();
  }

  LevelProjectors out{DiagonalKernel(tr), DiagonalKernel(tr), DiagonalKernel(tr)};
  for (int site = 0; site < tr.nsites; ++site) {
    double od = dot(omega, tr.site_vector(site));
    double kappa = std::abs(od);
    bool negative = od < 0.0;
    for (int k = 0; k <= tr.kmax; ++k) {
      int dk = tr.mult[(size_t)k];
      if (dk == 0) continue;
      MatrixXcd P = MatrixXcd::Zero(dk, dk), Phat = MatrixXcd::Zero(dk, dk);
      for (int id : level.by_family[(size_t)k]) {
        const Cluster& c = level.at(id);
        double chi = cutoff(kappa, c.clo, c.chi, level.eta, level.n);
        double ind = cutoff_indicator(kappa, c.clo, c.chi, level.eta, level.n);
        if (chi == 0.0 && ind == 0.0) continue;
        MatrixXcd pc = negative ? proj[(size_t)id].conjugate() : proj[(size_t)id];
        if (chi != 0.0) P += chi * pc;
        if (ind != 0.0) Phat += pc;
      }
      out.P.block(site, k) = P;
      out.Phat.block(site, k) = Phat;
      out.Q.block(site, k) = MatrixXcd::Identity(dk, dk) - P;
    }
  }
  return out;
}

std::vector<MatrixXcd> initial_mu2_blocks(const ModePacking& pack, const NLWConfig& cfg) {
  std::vector<MatrixXcd> blocks((size_t)pack.kmax + 1);
  for (int k = 0; k <= pack.kmax; ++k) {
    const auto& mem = pack.members[(size_t)k];
    MatrixXcd B = MatrixXcd::Zero((Eigen::Index)mem.size(), (Eigen::Index)mem.size());
    for (size_t j = 0; j < mem.size(); ++j) B((Eigen::Index)j, (Eigen::Index)j) = eigenvalue(mem[j], cfg.m);
    blocks[(size_t)k] = B;
  }
  return blocks;
}

}  // namespace rgt
