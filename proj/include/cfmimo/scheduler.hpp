#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "cfmimo/linalg.hpp"

namespace cfmimo {

// Sum-rate of a candidate user set (column indices of the scheduling channel).
// May throw PrecodingError for an infeasible set (ZF on a singular Gram).
using RateOracle = std::function<double(std::span<const int>)>;

// Rates of base + {k} for each candidate k, in candidate order (-inf marks an
// infeasible set). Lets an oracle share work across one greedy step.
using StepOracle = std::function<std::vector<double>(std::span<const int> base, std::span<const int> candidates)>;
// Rate after replacing `out` by `in` in the previous stage's set (stateful,
// called once per swap in stage order).
using SwapOracle = std::function<double(int out, int in)>;

struct ScheduleSet {
  std::vector<int> users;  // selection order
  double rate = 0.0;       // bits/s/Hz
  bool feasible = true;
};

// One C-ESG run. Swap j turns stage j into stage j + 1:
//   stage_{j+1} = (stage_j \ excluded_users[j]) u new_users[j]
struct ScheduleTrace {
  std::vector<ScheduleSet> stage_sets;
  std::vector<int> excluded_users;
  std::vector<int> new_users;
  ScheduleSet best;
  int best_stage = 0;  // 0-based index into stage_sets
};

enum class SchedulerKind { kGreedy, kCesg, kExhaustive, kRandom, kTopPower };

SchedulerKind parse_scheduler_kind(std::string_view name);
std::string_view to_string(SchedulerKind kind);

constexpr std::uint64_t kDefaultExhaustiveCap = 1'000'000;

// g_k^H g_k for column k.
double channel_power(const CMatrix& g, int k);
RVector channel_powers(const CMatrix& g);

// argmin / argmax of channel power, ties to the lowest user index.
int excluded_user(std::span<const int> set, const RVector& powers);
int excluded_user(std::span<const int> set, const CMatrix& g);
int new_user(std::span<const int> remaining, const RVector& powers);
int new_user(std::span<const int> remaining, const CMatrix& g);

// Stage 1: seed with the strongest user, then add the user that maximizes the
// oracle rate until n users or until the rate stops increasing. K <= n
// selects everybody without searching. A step oracle, when given, scores the
// candidates of each step instead of per-set oracle calls.
ScheduleSet greedy_select(const CMatrix& g_sched, int n, const RateOracle& oracle, const StepOracle& step = {});

// Swap stages starting from a given stage-1 set: K - l lowest-power-out /
// highest-power-in swaps (l = |first|), every stage scored by `stage_oracle`.
// Best = highest stage rate, earliest stage on ties. A swap oracle, when given,
// scores stages 2.. instead of `stage_oracle`.
ScheduleTrace cesg_refine(const CMatrix& g_sched, std::span<const int> first, const RateOracle& stage_oracle,
                          const SwapOracle& swap = {});

// Greedy stage (driven by `greedy_oracle`) followed by cesg_refine.
ScheduleTrace cesg_schedule(const CMatrix& g_sched, int n, const RateOracle& greedy_oracle,
                            const RateOracle& stage_oracle);
ScheduleTrace cesg_schedule(const CMatrix& g_sched, int n, const RateOracle& oracle);

// Number of n-subsets of K users, saturating at UINT64_MAX.
std::uint64_t binomial(int k, int n);

// Number of non-empty subsets with at most n of K users.
std::uint64_t exhaustive_count(int k, int n);

// Best subset of at most n users. Sizes are enumerated in ascending order and
// each size lexicographically, so ties go to the smaller, then the
// lexicographically first set. Greedy may stop below n users, so smaller sets
// are part of the search. Refuses (UsageError) above `cap` subsets.
ScheduleSet exhaustive_schedule(const CMatrix& g_sched, int n, const RateOracle& oracle,
                                std::uint64_t cap = kDefaultExhaustiveCap);

// Uniform n-subset (sorted). Rate filled in when an oracle is supplied.
ScheduleSet baseline_random(int num_users, int n, std::uint64_t seed, const RateOracle& oracle = {});

// The n strongest users by channel power (ties to lower index).
ScheduleSet baseline_top_power(const CMatrix& g_sched, int n, const RateOracle& oracle = {});

// Audit CSV for C-ESG traces.
void write_trace_csv_header(std::ostream& os);
void write_trace_csv_rows(std::ostream& os, long trial, int cluster, const ScheduleTrace& trace);

}  // namespace cfmimo
