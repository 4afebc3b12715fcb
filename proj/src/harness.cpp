#include "cfmimo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "cfmimo/cluster_scheduler.hpp"
#include "cfmimo/errors.hpp"
#include "cfmimo/format.hpp"
#include "cfmimo/precoding.hpp"
#include "cfmimo/rate.hpp"
#include "cfmimo/seeding.hpp"

namespace cfmimo {

namespace {

constexpr std::uint64_t kFixedLayoutTag = 0x6c61796f7574ULL;

double cf_pipeline_rate(const ChannelRealization& ch, const std::vector<int>& users, const ScenarioConfig& cfg,
                        double rho_f) {
  if (users.empty()) return 0.0;
  const CMatrix g_hat = select_columns(ch.g_hat, users);
  const CMatrix g_tilde = select_columns(ch.g_tilde, users);
  const Precoder pre = build_precoder(g_hat, cfg.precoder, rho_f, cfg.sigma_w2, cfg.total_power);
  return cf_sumrate(cf_covariance(g_hat, g_tilde, pre.p, rho_f, cfg.sigma_w2));
}

double clcf_pipeline_rate(const ChannelRealization& ch, const ClusterPartition& part,
                          const std::vector<std::vector<int>>& scheduled, const ScenarioConfig& cfg, double rho_f) {
  const double cap = cluster_power_cap(cfg);
  const std::vector<CMatrix> precoders =
      build_cluster_precoders(ch.g_hat, part, scheduled, cfg.precoder, rho_f, cfg.sigma_w2, cap);
  return network_rate(make_rate_inputs(ch.g_hat, ch.g_tilde, part, scheduled, precoders, rho_f, cfg.sigma_w2)).sum_rate;
}

void run_mode(const ScenarioConfig& cfg, const TrialScenario& sc, Mode mode, double snr_db, bool collect_traces,
              TrialRecord& out) {
  const double rho_f = rho_from_snr_db(cfg, snr_db);
  const bool cf = mode == Mode::kCf;
  const ClusterPartition single = cf ? partition_grid(sc.layout, 1) : ClusterPartition{};
  const ClusterPartition& part = cf ? single : sc.partition;

  ClusterSchedulerOptions opt;
  opt.rho_f = rho_f;
  opt.sigma_w2 = cfg.sigma_w2;
  opt.precoder = cfg.precoder;
  opt.cluster_power = cf ? cfg.total_power : cluster_power_cap(cfg);
  opt.random_seed = stream_seed(sc.trial_seed, Stream::kBaselineRandom);
  opt.exhaustive_cap = cfg.exhaustive_cap;
  ClusterScheduler scheduler(sc.channel.g_hat, sc.channel.g_tilde, part, cfg.n_total, opt);

  for (SchedulerKind kind : cfg.schedulers) {
    std::vector<ClusterSchedule> sched = scheduler.run(kind);
    RateRecord rec;
    rec.mode = mode;
    rec.scheduler = kind;
    rec.snr_db = snr_db;
    for (auto& cs : sched) {
      rec.scheduled.push_back(cs.users);
      if (collect_traces && cs.trace) out.traces.push_back({mode, snr_db, cs.cluster, std::move(*cs.trace)});
    }
    rec.rate = cf ? cf_pipeline_rate(sc.channel, rec.scheduled.front(), cfg, rho_f)
                  : clcf_pipeline_rate(sc.channel, part, rec.scheduled, cfg, rho_f);
    out.rates.push_back(std::move(rec));
  }
}

std::vector<Mode> modes_of(const ScenarioConfig& cfg) {
  if (cfg.mode == Mode::kBoth) return {Mode::kCf, Mode::kClcf};
  return {cfg.mode};
}

}  // namespace

std::uint64_t trial_seed(const ScenarioConfig& cfg, int trial_index) {
  return derive_seed(cfg.master_seed, static_cast<std::uint64_t>(trial_index));
}

TrialScenario make_trial_scenario(const ScenarioConfig& cfg, int trial_index) {
  cfg.validate();
  TrialScenario sc;
  sc.trial_seed = trial_seed(cfg, trial_index);
  const std::uint64_t layout_seed = cfg.redraw_layout ? stream_seed(sc.trial_seed, Stream::kLayout)
                                                      : derive_seed(cfg.master_seed, kFixedLayoutTag);
  sc.layout = generate_layout(cfg.num_aps, cfg.num_users, cfg.side_length_m, layout_seed);
  sc.partition = partition_grid(sc.layout, cfg.clusters);
  sc.beta = large_scale_matrix(sc.layout, cfg.large_scale, stream_seed(sc.trial_seed, Stream::kShadowing));
  sc.channel = split_csi(draw_channel(sc.beta, stream_seed(sc.trial_seed, Stream::kFading)), cfg.gamma);
  return sc;
}

double TrialRecord::rate(Mode mode, SchedulerKind scheduler, double snr_db) const {
  for (const auto& r : rates) {
    if (r.mode == mode && r.scheduler == scheduler && r.snr_db == snr_db) return r.rate;
  }
  throw UsageError("TrialRecord::rate: no record for " + std::string(to_string(mode)) + "/" +
                   std::string(to_string(scheduler)) + " at " + exact_str(snr_db) + " dB");
}

TrialRecord run_trial(const ScenarioConfig& cfg, int trial_index, bool collect_traces) {
  TrialRecord out;
  out.trial_index = trial_index;
  try {
    const TrialScenario sc = make_trial_scenario(cfg, trial_index);
    out.trial_seed = sc.trial_seed;
    for (double snr : cfg.snr_db) {
      for (Mode mode : modes_of(cfg)) run_mode(cfg, sc, mode, snr, collect_traces, out);
    }
  } catch (const std::exception& e) {
    throw std::runtime_error("trial " + std::to_string(trial_index) + ": " + e.what());
  }
  return out;
}

const SweepRow& SweepResult::row(Mode mode, SchedulerKind scheduler, double snr_db) const {
  for (const auto& r : rows) {
    if (r.mode == mode && r.scheduler == scheduler && r.snr_db == snr_db) return r;
  }
  throw UsageError("SweepResult::row: no row for " + std::string(to_string(mode)) + "/" +
                   std::string(to_string(scheduler)) + " at " + exact_str(snr_db) + " dB");
}

SweepResult run_sweep(const ScenarioConfig& cfg, const TrialCallback& on_trial, bool collect_traces) {
  cfg.validate();
  std::vector<std::optional<TrialRecord>> records(cfg.trials);
  std::atomic<int> next{0};
  std::mutex mu;
  std::exception_ptr failure;
  int delivered = 0;

  auto worker = [&] {
    for (int t = next++; t < cfg.trials; t = next++) {
      try {
        TrialRecord rec = run_trial(cfg, t, collect_traces);
        std::lock_guard lock(mu);
        records[t] = std::move(rec);
        // callbacks see trials in index order
        for (; delivered < cfg.trials && records[delivered]; ++delivered) {
          if (on_trial) on_trial(*records[delivered]);
          if (collect_traces) records[delivered]->traces.clear();
        }
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next = cfg.trials;
      }
    }
  };
  const int workers = std::min(cfg.threads, cfg.trials);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  SweepResult result;
  result.config_hash = config_hash(cfg);
  result.master_seed = cfg.master_seed;
  // Row order: mode, scheduler (config order), SNR (grid order).
  for (Mode mode : modes_of(cfg)) {
    for (SchedulerKind kind : cfg.schedulers) {
      for (double snr : cfg.snr_db) {
        std::vector<double> xs;
        xs.reserve(records.size());
        for (const auto& rec : records) xs.push_back(rec->rate(mode, kind, snr));
        double sum = 0.0;
        for (double x : xs) sum += x;
        const double mean = sum / static_cast<double>(xs.size());
        double ss = 0.0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        const double sd = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
        result.rows.push_back({mode, kind, snr, mean, sd, static_cast<int>(xs.size())});
      }
    }
  }
  return result;
}

void write_sweep_csv(std::ostream& os, const SweepResult& result) {
  os << "mode,scheduler,snr_db,mean_rate,std_rate,trials\n";
  for (const auto& r : result.rows) {
    os << to_string(r.mode) << ',' << to_string(r.scheduler) << ',' << fixed_str(r.snr_db, 3) << ','
       << fixed_str(r.mean_rate, 9) << ',' << fixed_str(r.std_rate, 9) << ',' << r.trials << '\n';
  }
}

std::vector<SweepRow> read_sweep_csv(std::istream& is) {
  std::vector<SweepRow> rows;
  std::string line;
  if (!std::getline(is, line) || line != "mode,scheduler,snr_db,mean_rate,std_rate,trials") {
    throw IoError("read_sweep_csv: unexpected header");
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string mode, sched, snr, mean, sd, trials;
    if (!std::getline(ls, mode, ',') || !std::getline(ls, sched, ',') || !std::getline(ls, snr, ',') ||
        !std::getline(ls, mean, ',') || !std::getline(ls, sd, ',') || !std::getline(ls, trials)) {
      throw IoError("read_sweep_csv: malformed row '" + line + "'");
    }
    rows.push_back({parse_mode(mode), parse_scheduler_kind(sched), std::stod(snr), std::stod(mean), std::stod(sd),
                    std::stoi(trials)});
  }
  return rows;
}

void emit_csv(const SweepResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  write_sweep_csv(out, result);
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

void write_sweep_metadata(std::ostream& os, const SweepResult& result) {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(result.config_hash));
  os << "config_hash=" << hash << "\nmaster_seed=" << result.master_seed << "\nversion=" << result.version << '\n';
}

}  // namespace cfmimo
