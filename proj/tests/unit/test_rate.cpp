#include <doctest.h>

#include <cmath>

#include "cfmimo/channel.hpp"
#include "cfmimo/errors.hpp"
#include "cfmimo/precoding.hpp"
#include "cfmimo/rate.hpp"
#include "oracles.hpp"

using namespace cfmimo;

namespace {

ClusterPartition hand_partition(std::vector<int> ap_cluster, std::vector<int> user_cluster, int count) {
  ClusterPartition p;
  p.cluster_count = count;
  p.ap_cluster = std::move(ap_cluster);
  p.user_cluster = std::move(user_cluster);
  p.ap_counts.assign(count, 0);
  p.user_counts.assign(count, 0);
  for (int c : p.ap_cluster) ++p.ap_counts[c];
  for (int c : p.user_cluster) ++p.user_counts[c];
  return p;
}

}  // namespace

TEST_CASE("single antenna, single user rate by hand") {
  CMatrix gh(1, 1), gt(1, 1), p(1, 1);
  gh << cd(0.6, 0.8);
  gt << cd(0.0, 0.5);
  p << cd(std::sqrt(0.5), std::sqrt(0.5)) * std::sqrt(2.0);
  const double rho = 3.0, s2 = 0.5;
  // |gh|^2 = 1, |gt|^2 = 0.25, |p|^2 = 2
  const double sinr = rho * 1.0 * 2.0 / (rho * 0.25 * 2.0 + s2);
  CHECK(cf_rate(gh, gt, p, rho, s2) == doctest::Approx(std::log2(1.0 + sinr)).epsilon(1e-14));
  CHECK(cf_sumrate(cf_covariance(gh, gt, p, rho, s2)) == doctest::Approx(std::log2(1.0 + sinr)).epsilon(1e-14));
}

TEST_CASE("log-det of trivial covariances") {
  CHECK(cf_sumrate(CMatrix::Zero(3, 3)) == 0.0);
  CHECK(cf_sumrate(CMatrix::Identity(1, 1)) == doctest::Approx(1.0));
  CHECK(cf_sumrate(CMatrix::Identity(4, 4) * 3.0) == doctest::Approx(8.0));
  CHECK(cf_sumrate(CMatrix(0, 0)) == 0.0);
  CHECK_THROWS_AS(cf_sumrate(CMatrix::Zero(2, 3)), UsageError);
  CHECK_THROWS_AS(cf_sumrate(-2.0 * CMatrix::Identity(1, 1)), NumericError);
}

TEST_CASE("network rate agrees with the eigenvalue oracle") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 4 + trial % 5, n = 1 + trial % 4;
    const CMatrix g = oracle::random_channel(m, n, rng, 6.0);
    const ChannelRealization ch = split_csi(g, std::sqrt(0.9));
    const double rho = std::pow(10.0, (trial % 7) - 2.0), s2 = 1.0;
    const CMatrix p = oracle::precoder(ch.g_hat, oracle::mmse_reg(n, rho, s2), 1.0);
    const double want = oracle::eig_rate(oracle::covariance(ch.g_hat, ch.g_tilde, p, rho, s2));
    CHECK(cf_rate(ch.g_hat, ch.g_tilde, p, rho, s2) == doctest::Approx(want).epsilon(1e-9));
    CHECK(cf_sumrate(cf_covariance(ch.g_hat, ch.g_tilde, p, rho, s2)) == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("rate is non-negative and grows with SNR") {
  std::mt19937_64 rng(12);
  const CMatrix g = oracle::random_channel(6, 4, rng);
  const ChannelRealization ch = split_csi(g, std::sqrt(0.95));
  const CMatrix p = build_precoder(ch.g_hat, PrecoderKind::kMmse, 1.0, 1.0, 1.0).p;
  double prev = 0.0;
  for (double rho : {1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0}) {
    const double r = cf_rate(ch.g_hat, ch.g_tilde, p, rho, 1.0);
    CHECK(r >= prev);
    prev = r;
  }
}

TEST_CASE("perfect CSI with ZF gives parallel channels") {
  std::mt19937_64 rng(13);
  const CMatrix g = oracle::random_channel(8, 3, rng);
  const Precoder pre = build_precoder(g, PrecoderKind::kZf, 1.0, 1.0, 3.0);
  const CMatrix eff = g.transpose() * pre.p;
  double want = 0.0;
  for (int j = 0; j < 3; ++j) want += std::log2(1.0 + 2.0 * std::norm(eff(j, j)) / 0.5);
  CHECK(cf_rate(g, CMatrix::Zero(8, 3), pre.p, 2.0, 0.5) == doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("rate does not depend on the order of the scheduled users") {
  std::mt19937_64 rng(14);
  const CMatrix g = oracle::random_channel(7, 5, rng, 4.0);
  const ChannelRealization ch = split_csi(g, 0.8);
  const std::vector<int> perm{4, 2, 0, 3, 1};
  const CMatrix p = build_precoder(ch.g_hat, PrecoderKind::kMmse, 4.0, 1.0, 1.0).p;
  const double a = cf_rate(ch.g_hat, ch.g_tilde, p, 4.0, 1.0);
  const double b = cf_rate(oracle::columns(ch.g_hat, perm), oracle::columns(ch.g_tilde, perm),
                           oracle::columns(p, perm), 4.0, 1.0);
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("rate input validation") {
  const CMatrix g = CMatrix::Ones(3, 2);
  CHECK_THROWS_AS(cf_rate(g, g, CMatrix::Ones(3, 3), 1.0, 1.0), UsageError);
  CHECK_THROWS_AS(cf_rate(g, CMatrix::Ones(2, 2), g, 1.0, 1.0), UsageError);
  CHECK_THROWS_AS(cf_rate(g, g, g, 1.0, 0.0), ConfigError);
  CHECK(cf_rate(CMatrix(3, 0), CMatrix(3, 0), CMatrix(3, 0), 1.0, 1.0) == 0.0);
}

TEST_CASE("one cluster reduces to the network-wide bound") {
  std::mt19937_64 rng(15);
  const NetworkLayout l = generate_layout(6, 9, 400.0, 3);
  const ClusterPartition part = partition_grid(l, 1);
  const ChannelRealization ch = split_csi(oracle::random_channel(6, 9, rng, 8.0), std::sqrt(0.95));
  const std::vector<int> users{1, 4, 5, 8};
  const CMatrix h = select_columns(ch.g_hat, users);
  const CMatrix p = build_precoder(h, PrecoderKind::kMmse, 2.0, 1.0, 1.0).p;
  const RateInputs in = make_rate_inputs(ch.g_hat, ch.g_tilde, part, {users}, {p}, 2.0, 1.0);
  const RateResult r = network_rate(in);
  CHECK(r.per_cluster.size() == 1);
  CHECK(r.sum_rate == doctest::Approx(cf_rate(h, select_columns(ch.g_tilde, users), p, 2.0, 1.0)).epsilon(1e-12));
}

TEST_CASE("two-cluster rate matches a hand-expanded covariance") {
  std::mt19937_64 rng(16);
  // APs 0, 2 and users 1, 2 in cluster 0; AP 1, 3 and users 0, 3 in cluster 1.
  const ClusterPartition part = hand_partition({0, 1, 0, 1}, {1, 0, 0, 1}, 2);
  const ChannelRealization ch = split_csi(oracle::random_channel(4, 4, rng, 6.0), std::sqrt(0.9));
  const std::vector<std::vector<int>> sched{{2, 1}, {3}};
  const double rho = 5.0, s2 = 0.8;
  std::vector<CMatrix> pre;
  for (int c = 0; c < 2; ++c) {
    const CMatrix h = subchannel(ch.g_hat, part.aps_of(c), sched[c]);
    pre.push_back(oracle::precoder(h, oracle::mmse_reg(h.cols(), rho, s2), 0.5));
  }
  const RateInputs in = make_rate_inputs(ch.g_hat, ch.g_tilde, part, sched, pre, rho, s2);
  const RateResult r = network_rate(in);

  double total = 0.0;
  for (int c = 0; c < 2; ++c) {
    const int o = 1 - c;
    const CMatrix gh_cc = subchannel(ch.g_hat, part.aps_of(c), sched[c]);
    const CMatrix gt_cc = subchannel(ch.g_tilde, part.aps_of(c), sched[c]);
    const CMatrix gh_oc = subchannel(ch.g_hat, part.aps_of(o), sched[c]);
    const CMatrix gt_oc = subchannel(ch.g_tilde, part.aps_of(o), sched[c]);
    const auto n = gh_cc.cols();
    auto outer = [&](const CMatrix& a, const CMatrix& p) {
      const CMatrix t = a.transpose() * p;
      return CMatrix(rho * t * t.adjoint());
    };
    CMatrix rc = outer(gt_cc, pre[c]) + outer(gh_oc, pre[o]) + outer(gt_oc, pre[o]);
    rc += s2 * CMatrix::Identity(n, n);
    CHECK((cluster_covariance(in, c) - rc).norm() < 1e-12 * rc.norm());
    const double want = oracle::eig_rate(outer(gh_cc, pre[c]) * rc.inverse());
    CHECK(r.per_cluster[c] == doctest::Approx(want).epsilon(1e-10));
    total += want;

    const CMatrix x = interference_matrix(ch.g_hat, ch.g_tilde, part, sched[c], c, pre, rho);
    CHECK((x + s2 * CMatrix::Identity(n, n) + outer(gt_cc, pre[c]) - rc).norm() < 1e-12 * rc.norm());
  }
  CHECK(r.sum_rate == doctest::Approx(total).epsilon(1e-10));
}

TEST_CASE("inter-cluster interference lowers the cluster rate") {
  std::mt19937_64 rng(17);
  const ClusterPartition part = hand_partition({0, 0, 1, 1}, {0, 0, 1, 1}, 2);
  const ChannelRealization ch = split_csi(oracle::random_channel(4, 4, rng), std::sqrt(0.95));
  const std::vector<std::vector<int>> sched{{0, 1}, {2, 3}};
  std::vector<CMatrix> pre;
  for (int c = 0; c < 2; ++c) {
    pre.push_back(build_precoder(subchannel(ch.g_hat, part.aps_of(c), sched[c]), PrecoderKind::kMmse, 10.0, 1.0,
                                 0.5).p);
  }
  const double with = cluster_rate(make_rate_inputs(ch.g_hat, ch.g_tilde, part, sched, pre, 10.0, 1.0), 0);
  std::vector<CMatrix> silent = pre;
  silent[1] = CMatrix::Zero(2, 0);
  const double without =
      cluster_rate(make_rate_inputs(ch.g_hat, ch.g_tilde, part, {sched[0], {}}, silent, 10.0, 1.0), 0);
  CHECK(with < without);
  CHECK(cluster_rate(make_rate_inputs(ch.g_hat, ch.g_tilde, part, {{}, sched[1]}, {CMatrix::Zero(2, 0), pre[1]},
                                      10.0, 1.0),
                     0) == 0.0);
}

TEST_CASE("rate inputs reject users outside their cluster") {
  const ClusterPartition part = hand_partition({0, 1}, {0, 1}, 2);
  const CMatrix g = CMatrix::Ones(2, 2);
  const std::vector<CMatrix> pre{CMatrix::Ones(1, 1), CMatrix::Ones(1, 1)};
  CHECK_THROWS_AS(make_rate_inputs(g, g, part, {{1}, {0}}, pre, 1.0, 1.0), UsageError);
  CHECK_THROWS_AS(make_rate_inputs(g, g, part, {{0}}, pre, 1.0, 1.0), UsageError);
  RateInputs in = make_rate_inputs(g, g, part, {{0}, {1}}, pre, 1.0, 1.0);
  CHECK_THROWS_AS(cluster_covariance(in, 2), UsageError);
  in.clusters[0].g_hat_cross.pop_back();
  CHECK_THROWS_AS(cluster_covariance(in, 0), UsageError);
}

TEST_CASE("hermitian log-determinant") {
  CMatrix a(2, 2);
  a << 2.0, cd(0.0, 1.0), cd(0.0, -1.0), 2.0;
  CHECK(hermitian_logdet(a) == doctest::Approx(std::log(3.0)));
  CHECK(hermitian_logdet(CMatrix(0, 0)) == 0.0);
  CHECK_THROWS_AS(hermitian_logdet(-a), NumericError);
}
