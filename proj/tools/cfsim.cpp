// cfsim: command-line front end for sweeps, scheduler comparisons, cost
// reports and topology dumps.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cfmimo/complexity.hpp"
#include "cfmimo/errors.hpp"
#include "cfmimo/format.hpp"
#include "cfmimo/harness.hpp"

namespace {

using namespace cfmimo;

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> threads;
  std::string out;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Scenario config file (key = value)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", args.seed, "Override master_seed");
  cmd->add_option("--trials", args.trials, "Override trials")->check(CLI::PositiveNumber);
  cmd->add_option("--threads", args.threads, "Worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out", args.out, "Output CSV path (default: stdout)");
}

ScenarioConfig resolve_config(const CommonArgs& args) {
  ScenarioConfig cfg = args.config_path.empty() ? ScenarioConfig{} : load_config(args.config_path);
  if (args.seed) cfg.master_seed = *args.seed;
  if (args.trials) cfg.trials = *args.trials;
  if (args.threads) cfg.threads = *args.threads;
  cfg.validate();
  return cfg;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  return out;
}

template <typename Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out = open_out(path);
  fn(out);
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

void write_traces(std::ostream& os, const TrialRecord& rec) {
  for (const auto& tr : rec.traces) {
    std::ostringstream rows;
    write_trace_csv_rows(rows, rec.trial_index, tr.cluster, tr.trace);
    std::istringstream lines(rows.str());
    for (std::string line; std::getline(lines, line);) os << to_string(tr.mode) << ',' << line << '\n';
  }
}

int run_sweep_cmd(const CommonArgs& args, bool quiet) {
  const ScenarioConfig cfg = resolve_config(args);
  int done = 0;
  TrialCallback progress;
  if (!quiet) {
    progress = [&](const TrialRecord&) {
      if (++done % 10 == 0 || done == cfg.trials) std::cerr << "\rtrials " << done << "/" << cfg.trials << std::flush;
    };
  }
  const SweepResult result = run_sweep(cfg, progress);
  if (!quiet) std::cerr << '\n';
  if (args.out.empty() || args.out == "-") {
    write_sweep_csv(std::cout, result);
  } else {
    emit_csv(result, args.out);
    with_output(args.out + ".meta", [&](std::ostream& os) { write_sweep_metadata(os, result); });
  }
  return 0;
}

int run_compare_cmd(const CommonArgs& args, double snr_db, const std::string& trace_out) {
  ScenarioConfig cfg = resolve_config(args);
  cfg.snr_db = {snr_db};
  std::optional<std::ofstream> traces;
  if (!trace_out.empty()) {
    traces.emplace(open_out(trace_out));
    *traces << "mode,";
    write_trace_csv_header(*traces);
  }
  TrialCallback on_trial;
  if (traces) on_trial = [&](const TrialRecord& rec) { write_traces(*traces, rec); };
  const SweepResult result = run_sweep(cfg, on_trial, traces.has_value());
  if (traces && !traces->flush()) throw IoError("write to '" + trace_out + "' failed");

  with_output(args.out, [&](std::ostream& os) {
    os << "scheduler,mode,snr_db,mean_rate,std_rate,trials\n";
    for (SchedulerKind kind : cfg.schedulers) {
      for (const auto& row : result.rows) {
        if (row.scheduler != kind) continue;
        os << to_string(kind) << ',' << to_string(row.mode) << ',' << fixed_str(row.snr_db, 3) << ','
           << fixed_str(row.mean_rate, 9) << ',' << fixed_str(row.std_rate, 9) << ',' << row.trials << '\n';
      }
    }
  });
  return 0;
}

int run_complexity_cmd(const std::vector<int>& aps, int users_per_ap, int clusters, const std::string& out,
                       const std::string& table_out) {
  for (int m : aps) {
    if (m < 1) throw ConfigError("--aps values must be >= 1");
  }
  if (users_per_ap < 1) throw ConfigError("--users-per-ap must be >= 1");
  if (clusters < 1) throw ConfigError("--clusters must be >= 1");

  std::vector<std::string> warnings;
  with_output(out, [&](std::ostream& os) {
    write_cost_csv_header(os);
    for (int m : aps) {
      const CostReport r = cost_report(m, m * users_per_ap, clusters);
      write_cost_csv_row(os, r);
      warnings.insert(warnings.end(), r.warnings.begin(), r.warnings.end());
    }
  });
  if (!table_out.empty()) {
    const CostReport ref = cost_report(64, 16, 4);
    with_output(table_out, [&](std::ostream& os) { write_reference_table(os, ref); });
    warnings.insert(warnings.end(), ref.warnings.begin(), ref.warnings.end());
  }
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  return 0;
}

int run_dump_cmd(const CommonArgs& args, int trial, const std::string& channel_out) {
  const ScenarioConfig cfg = resolve_config(args);
  const TrialScenario sc = make_trial_scenario(cfg, trial);
  with_output(args.out, [&](std::ostream& os) { write_layout_csv(os, sc.layout, sc.partition); });
  if (!channel_out.empty()) {
    with_output(channel_out, [&](std::ostream& os) { write_channel_csv(os, sc.beta, sc.channel.g); });
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cell-free / clustered cell-free massive MIMO downlink simulator"};
  app.require_subcommand(1);

  CommonArgs sweep_args;
  bool quiet = false;
  auto* sweep = app.add_subcommand("sweep", "Mean sum rate per (mode, scheduler, SNR)");
  add_common(sweep, sweep_args);
  sweep->add_flag("-q,--quiet", quiet, "No progress on stderr");

  CommonArgs cmp_args;
  double snr = 0.0;
  std::string trace_out;
  auto* compare = app.add_subcommand("compare", "Scheduler table at a single SNR");
  add_common(compare, cmp_args);
  compare->add_option("--snr", snr, "SNR in dB")->required();
  compare->add_option("--trace-out", trace_out, "Write per-stage scheduler traces to this CSV");

  std::vector<int> aps{16, 32, 64, 128, 256};
  int users_per_ap = 4;
  int clusters = 4;
  std::string cost_out;
  std::string table_out;
  auto* cost = app.add_subcommand("complexity-report", "Closed-form FLOP and signaling counts");
  cost->add_option("--aps", aps, "AP counts M")->delimiter(',')->capture_default_str();
  cost->add_option("--users-per-ap", users_per_ap, "K = ratio * M")->capture_default_str();
  cost->add_option("--clusters", clusters, "Cluster count C (equal split)")->capture_default_str();
  cost->add_option("--out", cost_out, "Output CSV path (default: stdout)");
  cost->add_option("--table-out", table_out, "Reference table for M=64, K=16, C=4");

  CommonArgs dump_args;
  int trial = 0;
  std::string channel_out;
  auto* dump = app.add_subcommand("dump-topology", "AP/user positions and cluster labels for one trial");
  add_common(dump, dump_args);
  dump->add_option("--trial", trial, "Trial index")->check(CLI::NonNegativeNumber)->capture_default_str();
  dump->add_option("--channel-out", channel_out, "Also write beta and G for the trial");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*sweep) return run_sweep_cmd(sweep_args, quiet);
    if (*compare) return run_compare_cmd(cmp_args, snr, trace_out);
    if (*cost) return run_complexity_cmd(aps, users_per_ap, clusters, cost_out, table_out);
    if (*dump) return run_dump_cmd(dump_args, trial, channel_out);
  } catch (const std::exception& e) {
    std::cerr << "cfsim: error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
