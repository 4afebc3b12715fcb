#pragma once

#include <span>
#include <vector>

#include "cfmimo/linalg.hpp"
#include "cfmimo/topology.hpp"

namespace cfmimo {

// ---------------------------------------------------------------------------
// Network-wide (cell-free) sum-rate bound.
//
// With estimate G_hat, error G_tilde and precoder P restricted to the n
// scheduled users (columns in schedule order):
//
//   R    = rho G_hat^T P P^H conj(G_hat) (rho G_tilde^T P P^H conj(G_tilde) + s2 I_n)^-1
//   rate = log2 det(R + I_n)
// ---------------------------------------------------------------------------

CMatrix cf_covariance(const CMatrix& g_hat, const CMatrix& g_tilde, const CMatrix& p, double rho_f,
                      double sigma_w2);

// log2 det(R + I) from an LU factorization of R + I. The imaginary part of the
// log-determinant must vanish to 1e-6 (relative); otherwise NumericError.
double cf_sumrate(const CMatrix& r);

// Same quantity through two Hermitian factorizations:
//   log2 det(S + N) - log2 det(N),  S = rho G_hat^T P P^H conj(G_hat),
//   N = rho G_tilde^T P P^H conj(G_tilde) + s2 I.
double cf_rate(const CMatrix& g_hat, const CMatrix& g_tilde, const CMatrix& p, double rho_f,
               double sigma_w2);

// ---------------------------------------------------------------------------
// Clustered cell-free bound with inter-cluster interference.
// ---------------------------------------------------------------------------

// Everything cluster c needs, restricted to its scheduled users (n_c columns).
struct ClusterView {
  CMatrix g_hat_own;    // M_c x n_c
  CMatrix g_tilde_own;  // M_c x n_c
  CMatrix precoder;     // P_c, M_c x n_c
  // Indexed by interfering cluster i: APs of cluster i -> users of cluster c,
  // M_i x n_c. Entry c itself is ignored.
  std::vector<CMatrix> g_hat_cross;
  std::vector<CMatrix> g_tilde_cross;

  Eigen::Index users() const { return g_hat_own.cols(); }
};

struct RateInputs {
  double rho_f = 1.0;
  double sigma_w2 = 1.0;
  std::vector<ClusterView> clusters;
};

struct RateResult {
  double sum_rate = 0.0;
  std::vector<double> per_cluster;
};

// R_c = rho G~_cc^T P_c P_c^H G~_cc* + sum_{i != c} rho (G^_ic^T P_i P_i^H G^_ic* +
//       G~_ic^T P_i P_i^H G~_ic*) + s2 I
CMatrix cluster_covariance(const RateInputs& inputs, int c);

// log2 det((rho G^_cc^T P_c P_c^H G^_cc*) R_c^-1 + I); zero for an empty cluster.
double cluster_rate(const RateInputs& inputs, int c);

RateResult network_rate(const RateInputs& inputs);

// Builds RateInputs from full M x K estimate/error matrices, a partition, the
// scheduled global user indices per cluster, and one precoder per cluster
// (rows ordered as partition.aps_of(c)).
RateInputs make_rate_inputs(const CMatrix& g_hat, const CMatrix& g_tilde, const ClusterPartition& partition,
                            const std::vector<std::vector<int>>& scheduled, const std::vector<CMatrix>& precoders,
                            double rho_f, double sigma_w2);

// Interference-plus-noise seen by *all* users in `victims` (global indices)
// from the given transmitting clusters, excluding cluster `self`:
//   sum_{i != self} rho (G^_i^T P_i P_i^H G^_i* + G~_i^T P_i P_i^H G~_i*)
// where G^_i = G_hat(aps_of(i), victims). Noise is not included.
CMatrix interference_matrix(const CMatrix& g_hat, const CMatrix& g_tilde, const ClusterPartition& partition,
                            std::span<const int> victims, int self, const std::vector<CMatrix>& precoders,
                            double rho_f);

}  // namespace cfmimo
