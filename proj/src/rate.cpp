#include "cfmimo/rate.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "cfmimo/channel.hpp"
#include "cfmimo/errors.hpp"

namespace cfmimo {

double hermitian_logdet(const CMatrix& a) {
  if (a.rows() == 0) return 0.0;
  Eigen::LLT<CMatrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw NumericError("hermitian_logdet: matrix is not positive definite (n=" + std::to_string(a.rows()) + ")");
  }
  const auto& l = llt.matrixLLT();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) acc += std::log(l(i, i).real());
  return 2.0 * acc;
}

namespace {

constexpr double kNegativeRateTol = 1e-9;

void check_noise(double sigma_w2) {
  if (!(sigma_w2 > 0.0)) throw ConfigError("noise variance sigma_w2 must be > 0");
}

// Hermitian part; removes round-off asymmetry before a Cholesky.
CMatrix herm(const CMatrix& a) { return 0.5 * (a + a.adjoint()); }

// rho * A^T P P^H conj(A)
CMatrix projected_power(const CMatrix& a, const CMatrix& p, double rho_f) {
  const CMatrix t = a.transpose() * p;
  return rho_f * (t * t.adjoint());
}

double finish_rate(double nats, const char* who) {
  const double bits = nats / std::numbers::ln2;
  if (!std::isfinite(bits)) throw NumericError(std::string(who) + ": non-finite rate");
  if (bits < -kNegativeRateTol * std::max(1.0, std::abs(bits))) {
    throw NumericError(std::string(who) + ": negative rate " + std::to_string(bits));
  }
  return std::max(0.0, bits);
}

void check_cf_dims(const CMatrix& g_hat, const CMatrix& g_tilde, const CMatrix& p) {
  if (g_hat.rows() != g_tilde.rows() || g_hat.cols() != g_tilde.cols()) {
    throw UsageError("cf rate: G_hat and G_tilde dimensions differ");
  }
  if (p.rows() != g_hat.rows() || p.cols() != g_hat.cols()) {
    throw UsageError("cf rate: precoder must be " + std::to_string(g_hat.rows()) + "x" +
                     std::to_string(g_hat.cols()));
  }
}

}  // namespace

CMatrix cf_covariance(const CMatrix& g_hat, const CMatrix& g_tilde, const CMatrix& p, double rho_f,
                      double sigma_w2) {
  check_noise(sigma_w2);
  check_cf_dims(g_hat, g_tilde, p);
  const Eigen::Index n = g_hat.cols();
  const CMatrix signal = projected_power(g_hat, p, rho_f);
  CMatrix noise = herm(projected_power(g_tilde, p, rho_f));
  noise.diagonal().array() += sigma_w2;
  Eigen::LLT<CMatrix> llt(noise);
  if (llt.info() != Eigen::Success) throw NumericError("cf_covariance: error-plus-noise matrix not positive definite");
  // S N^-1 = (N^-1 S)^H since S and N are Hermitian.
  if (n == 0) return CMatrix(0, 0);
  return llt.solve(signal).adjoint();
}

double cf_sumrate(const CMatrix& r) {
  if (r.rows() != r.cols()) throw UsageError("cf_sumrate: covariance must be square");
  const Eigen::Index n = r.rows();
  if (n == 0) return 0.0;
  const CMatrix a = r + CMatrix::Identity(n, n);
  Eigen::PartialPivLU<CMatrix> lu(a);
  const CMatrix& u = lu.matrixLU();
  double log_abs = 0.0;
  double phase = lu.permutationP().determinant() < 0 ? std::numbers::pi : 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    log_abs += std::log(std::abs(u(i, i)));
    phase += std::arg(u(i, i));
  }
  if (!std::isfinite(log_abs)) {
    throw NumericError("cf_sumrate: non-finite determinant (reciprocal condition " + std::to_string(lu.rcond()) + ")");
  }
  const double residual = std::abs(std::sin(phase));
  const double wrapped = std::remainder(phase, 2.0 * std::numbers::pi);
  if (residual > 1e-6 || std::abs(wrapped) > 0.5 * std::numbers::pi) {
    throw NumericError("cf_sumrate: det(R + I) is not positive real (phase " + std::to_string(wrapped) + ")");
  }
  return finish_rate(log_abs, "cf_sumrate");
}

double cf_rate(const CMatrix& g_hat, const CMatrix& g_tilde, const CMatrix& p, double rho_f, double sigma_w2) {
  check_noise(sigma_w2);
  check_cf_dims(g_hat, g_tilde, p);
  if (g_hat.cols() == 0) return 0.0;
  CMatrix noise = herm(projected_power(g_tilde, p, rho_f));
  noise.diagonal().array() += sigma_w2;
  const CMatrix total = noise + herm(projected_power(g_hat, p, rho_f));
  return finish_rate(hermitian_logdet(total) - hermitian_logdet(noise), "cf_rate");
}

CMatrix cluster_covariance(const RateInputs& in, int c) {
  check_noise(in.sigma_w2);
  const int count = static_cast<int>(in.clusters.size());
  if (c < 0 || c >= count) throw UsageError("cluster_covariance: cluster index out of range");
  const ClusterView& self = in.clusters[c];
  const Eigen::Index n = self.users();
  if (self.g_tilde_own.rows() != self.g_hat_own.rows() || self.g_tilde_own.cols() != n ||
      self.precoder.rows() != self.g_hat_own.rows() || self.precoder.cols() != n) {
    throw UsageError("cluster_covariance: own-cluster dimensions of cluster " + std::to_string(c) + " disagree");
  }
  if (static_cast<int>(self.g_hat_cross.size()) != count || static_cast<int>(self.g_tilde_cross.size()) != count) {
    throw UsageError("cluster_covariance: cross matrices must be given for every cluster");
  }

  CMatrix rc = projected_power(self.g_tilde_own, self.precoder, in.rho_f);
  for (int i = 0; i < count; ++i) {
    if (i == c) continue;
    const CMatrix& p_i = in.clusters[i].precoder;
    const CMatrix& gh = self.g_hat_cross[i];
    const CMatrix& gt = self.g_tilde_cross[i];
    if (gh.rows() != p_i.rows() || gt.rows() != p_i.rows() || gh.cols() != n || gt.cols() != n) {
      throw UsageError("cluster_covariance: cross matrix from cluster " + std::to_string(i) + " to cluster " +
                       std::to_string(c) + " does not match the interferer's precoder");
    }
    if (p_i.cols() == 0) continue;
    rc += projected_power(gh, p_i, in.rho_f);
    rc += projected_power(gt, p_i, in.rho_f);
  }
  rc = herm(rc);
  rc.diagonal().array() += in.sigma_w2;
  return rc;
}

double cluster_rate(const RateInputs& in, int c) {
  const CMatrix rc = cluster_covariance(in, c);
  const ClusterView& self = in.clusters[c];
  if (self.users() == 0) return 0.0;
  const CMatrix total = rc + herm(projected_power(self.g_hat_own, self.precoder, in.rho_f));
  return finish_rate(hermitian_logdet(total) - hermitian_logdet(rc), "cluster_rate");
}

RateResult network_rate(const RateInputs& in) {
  RateResult out;
  out.per_cluster.reserve(in.clusters.size());
  for (int c = 0; c < static_cast<int>(in.clusters.size()); ++c) {
    out.per_cluster.push_back(cluster_rate(in, c));
    out.sum_rate += out.per_cluster.back();
  }
  return out;
}

RateInputs make_rate_inputs(const CMatrix& g_hat, const CMatrix& g_tilde, const ClusterPartition& partition,
                            const std::vector<std::vector<int>>& scheduled, const std::vector<CMatrix>& precoders,
                            double rho_f, double sigma_w2) {
  const int count = partition.cluster_count;
  if (static_cast<int>(scheduled.size()) != count || static_cast<int>(precoders.size()) != count) {
    throw UsageError("make_rate_inputs: need one schedule and one precoder per cluster");
  }
  std::vector<std::vector<int>> aps(count);
  for (int c = 0; c < count; ++c) aps[c] = partition.aps_of(c);

  RateInputs in;
  in.rho_f = rho_f;
  in.sigma_w2 = sigma_w2;
  in.clusters.resize(count);
  for (int c = 0; c < count; ++c) {
    for (int k : scheduled[c]) {
      if (k < 0 || k >= static_cast<int>(partition.user_cluster.size()) || partition.user_cluster[k] != c) {
        throw UsageError("make_rate_inputs: user " + std::to_string(k) + " is not in cluster " + std::to_string(c));
      }
    }
    ClusterView& v = in.clusters[c];
    v.g_hat_own = subchannel(g_hat, aps[c], scheduled[c]);
    v.g_tilde_own = subchannel(g_tilde, aps[c], scheduled[c]);
    v.precoder = precoders[c];
    v.g_hat_cross.resize(count);
    v.g_tilde_cross.resize(count);
    for (int i = 0; i < count; ++i) {
      if (i == c) continue;
      v.g_hat_cross[i] = subchannel(g_hat, aps[i], scheduled[c]);
      v.g_tilde_cross[i] = subchannel(g_tilde, aps[i], scheduled[c]);
    }
  }
  return in;
}

CMatrix interference_matrix(const CMatrix& g_hat, const CMatrix& g_tilde, const ClusterPartition& partition,
                            std::span<const int> victims, int self, const std::vector<CMatrix>& precoders,
                            double rho_f) {
  const auto n = static_cast<Eigen::Index>(victims.size());
  CMatrix acc = CMatrix::Zero(n, n);
  for (int i = 0; i < partition.cluster_count; ++i) {
    if (i == self || precoders.at(i).cols() == 0) continue;
    const std::vector<int> aps = partition.aps_of(i);
    acc += projected_power(subchannel(g_hat, aps, victims), precoders[i], rho_f);
    acc += projected_power(subchannel(g_tilde, aps, victims), precoders[i], rho_f);
  }
  return herm(acc);
}

}  // namespace cfmimo
