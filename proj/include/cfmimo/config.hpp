#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "cfmimo/channel.hpp"
#include "cfmimo/precoding.hpp"
#include "cfmimo/scheduler.hpp"

namespace cfmimo {

enum class Mode { kCf, kClcf, kBoth };

Mode parse_mode(std::string_view name);
std::string_view to_string(Mode mode);

// How the clustered network shares transmit power between clusters.
//   per_cluster: every cluster precoder gets the full cap (||P_c||^2 <= P).
//   network:     the cap is split evenly (||P_c||^2 <= P / C), matching the
//                network-wide precoder's total.
enum class ClusterPowerSplit { kPerCluster, kNetwork };

ClusterPowerSplit parse_power_split(std::string_view name);
std::string_view to_string(ClusterPowerSplit split);

// All experiment knobs. Text form is flat `key = value` lines, '#' comments,
// comma-separated lists; units are in the key names.
struct ScenarioConfig {
  int num_aps = 64;           // M
  int num_users = 256;        // K
  int clusters = 4;           // C
  int n_total = 64;           // scheduled users, network-wide
  double side_length_m = 400.0;
  std::vector<double> snr_db{-10, -5, 0, 5, 10, 15, 20};
  int trials = 500;
  std::uint64_t master_seed = 1;
  double gamma = 0.97467943448089633;  // sqrt(0.95)
  PrecoderKind precoder = PrecoderKind::kMmse;
  std::vector<SchedulerKind> schedulers{SchedulerKind::kGreedy, SchedulerKind::kCesg, SchedulerKind::kRandom,
                                        SchedulerKind::kTopPower};
  Mode mode = Mode::kBoth;
  std::uint64_t exhaustive_cap = kDefaultExhaustiveCap;
  LargeScaleParams large_scale;
  double sigma_w2 = 1.0;
  // The SNR axis is transmit power over noise *after* the path loss at this
  // distance: rho_f = 10^((snr_db - PL_dB(d_ref)) / 10).
  double snr_reference_distance_m = 50.0;
  double total_power = 1.0;
  ClusterPowerSplit power_split = ClusterPowerSplit::kNetwork;
  bool redraw_layout = true;  // new AP/user drop every trial
  int threads = 1;            // does not affect results

  void validate() const;

  // Canonical text (every result-relevant key, fixed order, exact numbers).
  std::string canonical() const;
};

ScenarioConfig parse_config(std::istream& is);
ScenarioConfig load_config(const std::string& path);

// FNV-1a of canonical().
std::uint64_t config_hash(const ScenarioConfig& cfg);

// Transmit SNR rho_f / sigma_w2 (linear) for an axis value in dB.
double rho_from_snr_db(const ScenarioConfig& cfg, double snr_db);

// Per-cluster precoder power cap in clustered mode.
double cluster_power_cap(const ScenarioConfig& cfg);

}  // namespace cfmimo
