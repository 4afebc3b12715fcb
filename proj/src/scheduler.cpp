#include "cfmimo/scheduler.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

#include "cfmimo/errors.hpp"
#include "cfmimo/format.hpp"

namespace cfmimo {

namespace {

constexpr double kInfeasible = -std::numeric_limits<double>::infinity();

// PrecodingError marks a set the precoder cannot serve; any other error propagates.
double try_rate(const RateOracle& oracle, std::span<const int> users) {
  try {
    return oracle(users);
  } catch (const PrecodingError&) {
    return kInfeasible;
  }
}

ScheduleSet scored(std::vector<int> users, const RateOracle& oracle) {
  ScheduleSet s;
  s.users = std::move(users);
  if (oracle) {
    const double r = try_rate(oracle, s.users);
    s.feasible = r != kInfeasible;
    s.rate = s.feasible ? r : 0.0;
  }
  return s;
}

void check_target(const CMatrix& g, int n, const char* who) {
  if (g.cols() < 1) throw UsageError(std::string(who) + ": empty candidate pool");
  if (n < 1) throw UsageError(std::string(who) + ": target user count must be >= 1");
}

std::vector<int> all_users(Eigen::Index k) {
  std::vector<int> v(static_cast<std::size_t>(k));
  std::iota(v.begin(), v.end(), 0);
  return v;
}

}  // namespace

SchedulerKind parse_scheduler_kind(std::string_view name) {
  if (name == "greedy") return SchedulerKind::kGreedy;
  if (name == "cesg") return SchedulerKind::kCesg;
  if (name == "exhaustive") return SchedulerKind::kExhaustive;
  if (name == "random") return SchedulerKind::kRandom;
  if (name == "top_power") return SchedulerKind::kTopPower;
  throw ConfigError("unknown scheduler '" + std::string(name) + "'");
}

std::string_view to_string(SchedulerKind kind) {
  switch (kind) {
    case SchedulerKind::kGreedy: return "greedy";
    case SchedulerKind::kCesg: return "cesg";
    case SchedulerKind::kExhaustive: return "exhaustive";
    case SchedulerKind::kRandom: return "random";
    case SchedulerKind::kTopPower: return "top_power";
  }
  return "?";
}

double channel_power(const CMatrix& g, int k) {
  if (k < 0 || k >= g.cols()) throw UsageError("channel_power: user index out of range");
  return g.col(k).squaredNorm();
}

RVector channel_powers(const CMatrix& g) { return g.colwise().squaredNorm().transpose(); }

int excluded_user(std::span<const int> set, const RVector& powers) {
  if (set.empty()) throw UsageError("excluded_user: empty set");
  int best = set.front();
  for (int k : set) {
    if (powers(k) < powers(best) || (powers(k) == powers(best) && k < best)) best = k;
  }
  return best;
}

int excluded_user(std::span<const int> set, const CMatrix& g) { return excluded_user(set, channel_powers(g)); }

int new_user(std::span<const int> remaining, const RVector& powers) {
  if (remaining.empty()) throw UsageError("new_user: no remaining users");
  int best = remaining.front();
  for (int k : remaining) {
    if (powers(k) > powers(best) || (powers(k) == powers(best) && k < best)) best = k;
  }
  return best;
}

int new_user(std::span<const int> remaining, const CMatrix& g) { return new_user(remaining, channel_powers(g)); }

ScheduleSet greedy_select(const CMatrix& g_sched, int n, const RateOracle& oracle, const StepOracle& step) {
  check_target(g_sched, n, "greedy_select");
  const auto k_count = static_cast<int>(g_sched.cols());
  if (k_count <= n) return scored(all_users(k_count), oracle);

  const RVector powers = channel_powers(g_sched);
  const std::vector<int> everyone = all_users(k_count);
  ScheduleSet current;
  current.users.push_back(new_user(everyone, powers));
  current.rate = try_rate(oracle, current.users);

  std::vector<bool> taken(k_count, false);
  taken[current.users.front()] = true;
  std::vector<int> trial;
  std::vector<int> candidates;
  while (static_cast<int>(current.users.size()) < n) {
    candidates.clear();
    for (int k = 0; k < k_count; ++k) {
      if (!taken[k]) candidates.push_back(k);
    }
    std::vector<double> rates;
    if (step) {
      rates = step(current.users, candidates);
      if (rates.size() != candidates.size()) throw UsageError("greedy_select: step oracle returned wrong size");
    } else {
      trial = current.users;
      trial.push_back(-1);
      for (int k : candidates) {
        trial.back() = k;
        rates.push_back(try_rate(oracle, trial));
      }
    }
    int best_user = -1;
    double best_rate = kInfeasible;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (rates[i] > best_rate) {
        best_rate = rates[i];
        best_user = candidates[i];
      }
    }
    if (best_user < 0 || best_rate <= current.rate) break;
    taken[best_user] = true;
    current.users.push_back(best_user);
    current.rate = best_rate;
  }
  current.feasible = current.rate != kInfeasible;
  if (!current.feasible) current.rate = 0.0;
  return current;
}

ScheduleTrace cesg_refine(const CMatrix& g_sched, std::span<const int> first, const RateOracle& stage_oracle,
                          const SwapOracle& swap) {
  if (first.empty()) throw UsageError("cesg_refine: empty stage-1 set");
  ScheduleTrace trace;
  const auto k_count = static_cast<int>(g_sched.cols());
  const RVector powers = channel_powers(g_sched);

  std::vector<bool> in_first(k_count, false);
  for (int k : first) {
    if (k < 0 || k >= k_count || in_first[k]) throw UsageError("cesg_refine: invalid stage-1 set");
    in_first[k] = true;
  }
  std::vector<int> remaining;
  for (int k = 0; k < k_count; ++k) {
    if (!in_first[k]) remaining.push_back(k);
  }

  trace.stage_sets.push_back(scored({first.begin(), first.end()}, stage_oracle));
  while (!remaining.empty()) {
    const std::vector<int>& prev = trace.stage_sets.back().users;
    const int out = excluded_user(prev, powers);
    const int in = new_user(remaining, powers);
    std::vector<int> next = prev;
    *std::find(next.begin(), next.end(), out) = in;
    remaining.erase(std::find(remaining.begin(), remaining.end(), in));
    trace.excluded_users.push_back(out);
    trace.new_users.push_back(in);
    if (swap) {
      const RateOracle one = [&](std::span<const int>) { return swap(out, in); };
      trace.stage_sets.push_back(scored(std::move(next), one));
    } else {
      trace.stage_sets.push_back(scored(std::move(next), stage_oracle));
    }
  }

  trace.best_stage = 0;
  for (int j = 1; j < static_cast<int>(trace.stage_sets.size()); ++j) {
    const auto& cand = trace.stage_sets[j];
    const auto& best = trace.stage_sets[trace.best_stage];
    if (cand.feasible && (!best.feasible || cand.rate > best.rate)) trace.best_stage = j;
  }
  trace.best = trace.stage_sets[trace.best_stage];
  return trace;
}

ScheduleTrace cesg_schedule(const CMatrix& g_sched, int n, const RateOracle& greedy_oracle,
                            const RateOracle& stage_oracle) {
  const ScheduleSet first = greedy_select(g_sched, n, greedy_oracle);
  return cesg_refine(g_sched, first.users, stage_oracle);
}

ScheduleTrace cesg_schedule(const CMatrix& g_sched, int n, const RateOracle& oracle) {
  return cesg_schedule(g_sched, n, oracle, oracle);
}

std::uint64_t binomial(int k, int n) {
  if (n < 0 || k < 0 || n > k) return 0;
  n = std::min(n, k - n);
  unsigned __int128 acc = 1;
  for (int i = 1; i <= n; ++i) {
    acc = acc * static_cast<unsigned>(k - n + i) / static_cast<unsigned>(i);
    if (acc > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(acc);
}

std::uint64_t exhaustive_count(int k, int n) {
  std::uint64_t total = 0;
  for (int j = 1; j <= std::min(n, k); ++j) {
    const std::uint64_t b = binomial(k, j);
    if (b > std::numeric_limits<std::uint64_t>::max() - total) return std::numeric_limits<std::uint64_t>::max();
    total += b;
  }
  return total;
}

ScheduleSet exhaustive_schedule(const CMatrix& g_sched, int n, const RateOracle& oracle, std::uint64_t cap) {
  check_target(g_sched, n, "exhaustive_schedule");
  const auto k_count = static_cast<int>(g_sched.cols());
  const int max_size = std::min(n, k_count);
  const std::uint64_t count = exhaustive_count(k_count, n);
  if (count > cap) {
    throw UsageError("exhaustive_schedule: " + std::to_string(count) + " subsets of up to " + std::to_string(n) +
                     " out of " + std::to_string(k_count) + " users exceed the cap of " + std::to_string(cap) +
                     "; use the cesg scheduler instead");
  }

  ScheduleSet best;
  best.feasible = false;
  double best_rate = kInfeasible;
  for (int size = 1; size <= max_size; ++size) {
    std::vector<int> combo(size);
    std::iota(combo.begin(), combo.end(), 0);
    while (true) {
      const double r = try_rate(oracle, combo);
      if (r > best_rate) {
        best_rate = r;
        best.users = combo;
      }
      int i = size - 1;
      while (i >= 0 && combo[i] == k_count - size + i) --i;
      if (i < 0) break;
      ++combo[i];
      for (int j = i + 1; j < size; ++j) combo[j] = combo[j - 1] + 1;
    }
  }
  if (best_rate != kInfeasible) {
    best.rate = best_rate;
    best.feasible = true;
  } else {
    best.users.resize(max_size);
    std::iota(best.users.begin(), best.users.end(), 0);
  }
  return best;
}

ScheduleSet baseline_random(int num_users, int n, std::uint64_t seed, const RateOracle& oracle) {
  if (num_users < 1) throw UsageError("baseline_random: empty candidate pool");
  if (n < 1) throw UsageError("baseline_random: target user count must be >= 1");
  const std::vector<int> everyone = all_users(num_users);
  if (num_users <= n) return scored(everyone, oracle);
  std::vector<int> pick;
  pick.reserve(n);
  std::mt19937_64 rng(seed);
  std::sample(everyone.begin(), everyone.end(), std::back_inserter(pick), n, rng);
  return scored(std::move(pick), oracle);
}

ScheduleSet baseline_top_power(const CMatrix& g_sched, int n, const RateOracle& oracle) {
  check_target(g_sched, n, "baseline_top_power");
  const auto k_count = static_cast<int>(g_sched.cols());
  if (k_count <= n) return scored(all_users(k_count), oracle);
  const RVector powers = channel_powers(g_sched);
  std::vector<int> order = all_users(k_count);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return powers(a) > powers(b); });
  order.resize(n);
  return scored(std::move(order), oracle);
}

void write_trace_csv_header(std::ostream& os) { os << "trial,cluster,stage,users,rate,excluded,new\n"; }

void write_trace_csv_rows(std::ostream& os, long trial, int cluster, const ScheduleTrace& trace) {
  for (std::size_t j = 0; j < trace.stage_sets.size(); ++j) {
    const auto& s = trace.stage_sets[j];
    os << trial << ',' << cluster << ',' << (j + 1) << ',';
    for (std::size_t i = 0; i < s.users.size(); ++i) os << (i ? " " : "") << s.users[i];
    os << ',' << fixed_str(s.rate, 9) << ',';
    if (j < trace.excluded_users.size()) os << trace.excluded_users[j] << ',' << trace.new_users[j];
    else os << ',';
    os << '\n';
  }
}

}  // namespace cfmimo
