#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "cfmimo/channel.hpp"
#include "cfmimo/config.hpp"
#include "cfmimo/scheduler.hpp"
#include "cfmimo/topology.hpp"

namespace cfmimo {

inline constexpr const char* kArtifactVersion = "0.1.0";

// One trial's random draws.
struct TrialScenario {
  std::uint64_t trial_seed = 0;
  NetworkLayout layout;
  ClusterPartition partition;  // C clusters
  RMatrix beta;
  ChannelRealization channel;
};

// Seeds: trial seed = derive(master, trial); layout, shadowing and fading use
// independent substreams of it (layout from the master seed when layouts are
// not redrawn).
std::uint64_t trial_seed(const ScenarioConfig& cfg, int trial_index);
TrialScenario make_trial_scenario(const ScenarioConfig& cfg, int trial_index);

struct RateRecord {
  Mode mode = Mode::kCf;  // kCf or kClcf
  SchedulerKind scheduler = SchedulerKind::kGreedy;
  double snr_db = 0.0;
  double rate = 0.0;
  std::vector<std::vector<int>> scheduled;  // per cluster (one entry in CF mode)
};

struct TraceRecord {
  Mode mode = Mode::kCf;
  double snr_db = 0.0;
  int cluster = 0;
  ScheduleTrace trace;
};

struct TrialRecord {
  int trial_index = 0;
  std::uint64_t trial_seed = 0;
  std::vector<RateRecord> rates;
  std::vector<TraceRecord> traces;  // only with collect_traces

  // Rate for (mode, scheduler, snr); throws UsageError if absent.
  double rate(Mode mode, SchedulerKind scheduler, double snr_db) const;
};

TrialRecord run_trial(const ScenarioConfig& cfg, int trial_index, bool collect_traces = false);

struct SweepRow {
  Mode mode = Mode::kCf;
  SchedulerKind scheduler = SchedulerKind::kGreedy;
  double snr_db = 0.0;
  double mean_rate = 0.0;
  double std_rate = 0.0;
  int trials = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::uint64_t config_hash = 0;
  std::uint64_t master_seed = 0;
  std::string version = kArtifactVersion;

  const SweepRow& row(Mode mode, SchedulerKind scheduler, double snr_db) const;
};

using TrialCallback = std::function<void(const TrialRecord&)>;

// Runs every trial (optionally on cfg.threads workers) and folds the records
// in trial order, so the result does not depend on scheduling. on_trial is
// called once per trial, in index order.
SweepResult run_sweep(const ScenarioConfig& cfg, const TrialCallback& on_trial = {}, bool collect_traces = false);

// mode,scheduler,snr_db,mean_rate,std_rate,trials
void write_sweep_csv(std::ostream& os, const SweepResult& result);
std::vector<SweepRow> read_sweep_csv(std::istream& is);
void emit_csv(const SweepResult& result, const std::string& path);

// key=value sidecar with hash, seed and version.
void write_sweep_metadata(std::ostream& os, const SweepResult& result);

}  // namespace cfmimo
