#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "cfmimo/linalg.hpp"
#include "cfmimo/precoding.hpp"
#include "cfmimo/scheduler.hpp"
#include "cfmimo/subset_rate.hpp"
#include "cfmimo/topology.hpp"

namespace cfmimo {

struct ClusterSchedulerOptions {
  double rho_f = 1.0;
  double sigma_w2 = 1.0;
  PrecoderKind precoder = PrecoderKind::kMmse;
  double cluster_power = 1.0;  // ||P_c||^2 cap of every transmitting cluster
  std::uint64_t random_seed = 0;
  std::uint64_t exhaustive_cap = kDefaultExhaustiveCap;
};

struct ClusterSchedule {
  int cluster = 0;
  int target = 0;            // n_c after capping
  std::vector<int> users;    // global user indices
  double oracle_rate = 0.0;  // rate seen by the scheduler (0 for baselines)
  std::optional<ScheduleTrace> trace;  // C-ESG only, global user indices
};

// n_total / C per cluster, remainder to the lowest-index clusters, each capped
// at min(M_c, K_c).
std::vector<int> split_targets(const ClusterPartition& partition, int n_total);

// Runs any scheduler independently in every cluster. Two phases:
//   1. greedy in every cluster, scored without inter-cluster interference;
//   2. C-ESG stages / exhaustive search scored by the clustered bound, with
//      the other clusters transmitting to their phase-1 greedy sets.
// Phase-1 results are cached, so greedy and cesg share one greedy pass.
class ClusterScheduler {
 public:
  ClusterScheduler(const CMatrix& g_hat, const CMatrix& g_tilde, const ClusterPartition& partition, int n_total,
                   ClusterSchedulerOptions options);

  std::vector<ClusterSchedule> run(SchedulerKind kind);

  const std::vector<int>& targets() const { return targets_; }

  // Cluster c's own channel block: APs of c -> users of c (local columns).
  const CMatrix& local_estimate(int c) const { return clusters_.at(c).g_hat_cc; }

 private:
  struct Cluster {
    std::vector<int> aps;
    std::vector<int> users;
    CMatrix g_hat_cc;
    CMatrix g_tilde_cc;
    std::unique_ptr<SubsetRateEvaluator> isolated;
    std::unique_ptr<SubsetRateEvaluator> interfered;
  };

  void ensure_greedy();
  void ensure_interference();
  RateOracle isolated_oracle(int c) const;
  RateOracle interfered_oracle(int c) const;
  std::vector<int> to_global(int c, const std::vector<int>& local) const;

  const CMatrix& g_hat_;
  const CMatrix& g_tilde_;
  const ClusterPartition& partition_;
  ClusterSchedulerOptions opt_;
  std::vector<int> targets_;
  std::vector<Cluster> clusters_;
  std::optional<std::vector<ScheduleSet>> greedy_;
  bool interference_ready_ = false;
};

std::vector<ClusterSchedule> schedule_all_clusters(const CMatrix& g_hat, const CMatrix& g_tilde,
                                                   const ClusterPartition& partition, int n_total, SchedulerKind kind,
                                                   const ClusterSchedulerOptions& options);

// Final per-cluster precoders P_c (rows ordered as partition.aps_of(c)) for the
// scheduled users; empty clusters get an M_c x 0 matrix.
std::vector<CMatrix> build_cluster_precoders(const CMatrix& g_hat, const ClusterPartition& partition,
                                             const std::vector<std::vector<int>>& scheduled, PrecoderKind kind,
                                             double rho_f, double sigma_w2, double cluster_power);

}  // namespace cfmimo
