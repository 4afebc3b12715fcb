#include "cfmimo/cluster_scheduler.hpp"

#include <algorithm>
#include <optional>
#include <string>

#include "cfmimo/channel.hpp"
#include "cfmimo/errors.hpp"
#include "cfmimo/rate.hpp"
#include "cfmimo/seeding.hpp"

namespace cfmimo {

std::vector<int> split_targets(const ClusterPartition& partition, int n_total) {
  if (n_total < 1) throw ConfigError("total scheduled users must be >= 1");
  const int count = partition.cluster_count;
  std::vector<int> out(count);
  for (int c = 0; c < count; ++c) {
    const int share = n_total / count + (c < n_total % count ? 1 : 0);
    out[c] = std::min({share, partition.ap_counts.at(c), partition.user_counts.at(c)});
  }
  return out;
}

ClusterScheduler::ClusterScheduler(const CMatrix& g_hat, const CMatrix& g_tilde, const ClusterPartition& partition,
                                   int n_total, ClusterSchedulerOptions options)
    : g_hat_(g_hat), g_tilde_(g_tilde), partition_(partition), opt_(options) {
  if (static_cast<Eigen::Index>(partition.ap_cluster.size()) != g_hat.rows() ||
      static_cast<Eigen::Index>(partition.user_cluster.size()) != g_hat.cols()) {
    throw UsageError("ClusterScheduler: partition does not match channel dimensions");
  }
  targets_ = split_targets(partition, n_total);
  clusters_.resize(partition.cluster_count);
  for (int c = 0; c < partition.cluster_count; ++c) {
    Cluster& cl = clusters_[c];
    cl.aps = partition.aps_of(c);
    cl.users = partition.users_of(c);
    cl.g_hat_cc = subchannel(g_hat, cl.aps, cl.users);
    cl.g_tilde_cc = subchannel(g_tilde, cl.aps, cl.users);
    if (targets_[c] > 0) {
      cl.isolated = std::make_unique<SubsetRateEvaluator>(cl.g_hat_cc, cl.g_tilde_cc, opt_.rho_f, opt_.sigma_w2,
                                                          opt_.precoder, opt_.cluster_power);
    }
  }
}

RateOracle ClusterScheduler::isolated_oracle(int c) const {
  const SubsetRateEvaluator* eval = clusters_[c].isolated.get();
  return [eval](std::span<const int> s) { return (*eval)(s); };
}

RateOracle ClusterScheduler::interfered_oracle(int c) const {
  const SubsetRateEvaluator* eval =
      clusters_[c].interfered ? clusters_[c].interfered.get() : clusters_[c].isolated.get();
  return [eval](std::span<const int> s) { return (*eval)(s); };
}

std::vector<int> ClusterScheduler::to_global(int c, const std::vector<int>& local) const {
  std::vector<int> out;
  out.reserve(local.size());
  for (int k : local) out.push_back(clusters_[c].users[k]);
  return out;
}

void ClusterScheduler::ensure_greedy() {
  if (greedy_) return;
  std::vector<ScheduleSet> sets(clusters_.size());
  for (int c = 0; c < partition_.cluster_count; ++c) {
    if (targets_[c] == 0) continue;
    const SubsetRateEvaluator* eval = clusters_[c].isolated.get();
    const StepOracle step = [eval](std::span<const int> base, std::span<const int> candidates) {
      return eval->extend_each(base, candidates);
    };
    sets[c] = greedy_select(clusters_[c].g_hat_cc, targets_[c], isolated_oracle(c), step);
  }
  greedy_ = std::move(sets);
}

void ClusterScheduler::ensure_interference() {
  if (interference_ready_) return;
  ensure_greedy();
  if (partition_.cluster_count > 1) {
    std::vector<std::vector<int>> greedy_global(clusters_.size());
    for (int c = 0; c < partition_.cluster_count; ++c) greedy_global[c] = to_global(c, (*greedy_)[c].users);
    const std::vector<CMatrix> precoders = build_cluster_precoders(
        g_hat_, partition_, greedy_global, opt_.precoder, opt_.rho_f, opt_.sigma_w2, opt_.cluster_power);
    for (int c = 0; c < partition_.cluster_count; ++c) {
      if (targets_[c] == 0) continue;
      Cluster& cl = clusters_[c];
      CMatrix extra = interference_matrix(g_hat_, g_tilde_, partition_, cl.users, c, precoders, opt_.rho_f);
      cl.interfered = std::make_unique<SubsetRateEvaluator>(cl.g_hat_cc, cl.g_tilde_cc, opt_.rho_f, opt_.sigma_w2,
                                                            opt_.precoder, opt_.cluster_power, std::move(extra));
    }
  }
  interference_ready_ = true;
}

std::vector<ClusterSchedule> ClusterScheduler::run(SchedulerKind kind) {
  if (kind == SchedulerKind::kGreedy || kind == SchedulerKind::kCesg) ensure_greedy();
  if (kind == SchedulerKind::kCesg || kind == SchedulerKind::kExhaustive) ensure_interference();

  std::vector<ClusterSchedule> out(clusters_.size());
  for (int c = 0; c < partition_.cluster_count; ++c) {
    ClusterSchedule& cs = out[c];
    cs.cluster = c;
    cs.target = targets_[c];
    if (cs.target == 0) continue;
    const Cluster& cl = clusters_[c];
    ScheduleSet chosen;
    switch (kind) {
      case SchedulerKind::kGreedy:
        chosen = (*greedy_)[c];
        break;
      case SchedulerKind::kCesg: {
        // Stage 1 reuses the cached greedy set; only the stage scoring differs.
        const RateOracle stage = interfered_oracle(c);
        const SubsetRateEvaluator& eval = cl.interfered ? *cl.interfered : *cl.isolated;
        std::optional<SwapChain> chain;
        SwapOracle swap;
        if (eval.incremental()) {
          chain.emplace(eval, (*greedy_)[c].users);
          swap = [&](int out_user, int in_user) { return chain->swap(out_user, in_user); };
        }
        ScheduleTrace trace = cesg_refine(cl.g_hat_cc, (*greedy_)[c].users, stage, swap);
        chosen = trace.best;
        for (auto& s : trace.stage_sets) s.users = to_global(c, s.users);
        for (auto& k : trace.excluded_users) k = cl.users[k];
        for (auto& k : trace.new_users) k = cl.users[k];
        trace.best.users = to_global(c, trace.best.users);
        cs.trace = std::move(trace);
        break;
      }
      case SchedulerKind::kExhaustive:
        chosen = exhaustive_schedule(cl.g_hat_cc, cs.target, interfered_oracle(c), opt_.exhaustive_cap);
        break;
      case SchedulerKind::kRandom:
        chosen = baseline_random(static_cast<int>(cl.users.size()), cs.target,
                                 derive_seed(opt_.random_seed, static_cast<std::uint64_t>(c)));
        break;
      case SchedulerKind::kTopPower:
        chosen = baseline_top_power(cl.g_hat_cc, cs.target);
        break;
    }
    cs.users = to_global(c, chosen.users);
    cs.oracle_rate = chosen.rate;
  }
  return out;
}

std::vector<ClusterSchedule> schedule_all_clusters(const CMatrix& g_hat, const CMatrix& g_tilde,
                                                   const ClusterPartition& partition, int n_total, SchedulerKind kind,
                                                   const ClusterSchedulerOptions& options) {
  ClusterScheduler scheduler(g_hat, g_tilde, partition, n_total, options);
  return scheduler.run(kind);
}

std::vector<CMatrix> build_cluster_precoders(const CMatrix& g_hat, const ClusterPartition& partition,
                                             const std::vector<std::vector<int>>& scheduled, PrecoderKind kind,
                                             double rho_f, double sigma_w2, double cluster_power) {
  std::vector<CMatrix> out(partition.cluster_count);
  for (int c = 0; c < partition.cluster_count; ++c) {
    const std::vector<int> aps = partition.aps_of(c);
    if (scheduled.at(c).empty()) {
      out[c] = CMatrix::Zero(static_cast<Eigen::Index>(aps.size()), 0);
      continue;
    }
    out[c] = build_precoder(subchannel(g_hat, aps, scheduled[c]), kind, rho_f, sigma_w2, cluster_power).p;
  }
  return out;
}

}  // namespace cfmimo
