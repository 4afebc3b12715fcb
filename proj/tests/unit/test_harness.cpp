#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cfmimo/errors.hpp"
#include "cfmimo/harness.hpp"
#include "cfmimo/seeding.hpp"

using namespace cfmimo;

namespace {

ScenarioConfig small(int trials = 3) {
  ScenarioConfig cfg;
  cfg.num_aps = 16;
  cfg.num_users = 16;
  cfg.clusters = 4;
  cfg.n_total = 4;
  cfg.snr_db = {-10, 0, 10, 20};
  cfg.trials = trials;
  cfg.master_seed = 3;
  cfg.schedulers = {SchedulerKind::kGreedy, SchedulerKind::kCesg, SchedulerKind::kExhaustive, SchedulerKind::kRandom,
                    SchedulerKind::kTopPower};
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("seed derivation") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(stream_seed(5, Stream::kLayout) != stream_seed(5, Stream::kFading));
  const ScenarioConfig cfg = small();
  CHECK(trial_seed(cfg, 4) == derive_seed(3, 4));
}

TEST_CASE("a trial is a function of the config and its index") {
  const ScenarioConfig cfg = small();
  const TrialRecord a = run_trial(cfg, 1);
  const TrialRecord b = run_trial(cfg, 1);
  REQUIRE(a.rates.size() == b.rates.size());
  CHECK(a.rates.size() == 2 * 5 * 4);
  for (std::size_t i = 0; i < a.rates.size(); ++i) {
    CHECK(a.rates[i].rate == b.rates[i].rate);
    CHECK(a.rates[i].scheduled == b.rates[i].scheduled);
  }
  const TrialRecord c = run_trial(cfg, 2);
  CHECK(a.rate(Mode::kCf, SchedulerKind::kCesg, 0.0) != c.rate(Mode::kCf, SchedulerKind::kCesg, 0.0));
  CHECK_THROWS_AS(a.rate(Mode::kCf, SchedulerKind::kCesg, 5.0), UsageError);
}

TEST_CASE("trial records are sane") {
  const ScenarioConfig cfg = small();
  for (int t = 0; t < 3; ++t) {
    const TrialRecord rec = run_trial(cfg, t);
    for (const auto& r : rec.rates) {
      CHECK(r.rate >= 0.0);
      int total = 0;
      for (const auto& s : r.scheduled) total += static_cast<int>(s.size());
      CHECK(total <= cfg.n_total);
      CHECK(r.scheduled.size() == (r.mode == Mode::kCf ? 1u : 4u));
    }
    for (double snr : cfg.snr_db) {
      const double g = rec.rate(Mode::kCf, SchedulerKind::kGreedy, snr);
      const double c = rec.rate(Mode::kCf, SchedulerKind::kCesg, snr);
      const double x = rec.rate(Mode::kCf, SchedulerKind::kExhaustive, snr);
      CHECK(g <= c + 1e-9);
      CHECK(c <= x + 1e-9);
    }
  }
}

TEST_CASE("one cluster: network-wide and clustered modes coincide") {
  ScenarioConfig cfg = small();
  cfg.clusters = 1;
  for (int t = 0; t < 3; ++t) {
    const TrialRecord rec = run_trial(cfg, t);
    for (SchedulerKind k : cfg.schedulers) {
      for (double snr : cfg.snr_db) {
        CHECK(rec.rate(Mode::kClcf, k, snr) == doctest::Approx(rec.rate(Mode::kCf, k, snr)).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("fixed layout keeps the drop across trials") {
  ScenarioConfig cfg = small();
  cfg.redraw_layout = false;
  const TrialScenario a = make_trial_scenario(cfg, 0);
  const TrialScenario b = make_trial_scenario(cfg, 5);
  CHECK(a.layout.ap_positions[3].x == b.layout.ap_positions[3].x);
  CHECK(a.layout.user_positions[7].y == b.layout.user_positions[7].y);
  CHECK(a.channel.g != b.channel.g);
  cfg.redraw_layout = true;
  CHECK(make_trial_scenario(cfg, 0).layout.ap_positions[3].x != make_trial_scenario(cfg, 5).layout.ap_positions[3].x);
}

TEST_CASE("trial scenario is consistent") {
  const ScenarioConfig cfg = small();
  const TrialScenario sc = make_trial_scenario(cfg, 0);
  CHECK(sc.beta.rows() == 16);
  CHECK(sc.channel.g.cols() == 16);
  CHECK((sc.channel.g_hat - cfg.gamma * sc.channel.g).norm() <= 1e-15 * sc.channel.g.norm());
  CHECK(sc.partition.cluster_count == 4);
}

TEST_CASE("sweep aggregates trials") {
  const ScenarioConfig cfg = small(4);
  const SweepResult res = run_sweep(cfg);
  CHECK(res.rows.size() == 2 * 5 * 4);
  CHECK(res.master_seed == 3);
  CHECK(res.config_hash == config_hash(cfg));
  CHECK(res.rows.front().mode == Mode::kCf);
  CHECK(res.rows.front().scheduler == SchedulerKind::kGreedy);
  CHECK(res.rows.front().snr_db == -10.0);
  std::vector<TrialRecord> recs;
  for (int t = 0; t < 4; ++t) recs.push_back(run_trial(cfg, t));
  for (const auto& row : res.rows) {
    double sum = 0.0, ss = 0.0;
    for (const auto& r : recs) sum += r.rate(row.mode, row.scheduler, row.snr_db);
    const double mean = sum / 4.0;
    for (const auto& r : recs) ss += std::pow(r.rate(row.mode, row.scheduler, row.snr_db) - mean, 2);
    CHECK(row.mean_rate == doctest::Approx(mean).epsilon(1e-14));
    CHECK(row.std_rate == doctest::Approx(std::sqrt(ss / 3.0)).epsilon(1e-12));
    CHECK(row.trials == 4);
    CHECK(row.mean_rate >= 0.0);
  }
}

TEST_CASE("one trial has zero spread") {
  const SweepResult res = run_sweep(small(1));
  for (const auto& row : res.rows) CHECK(row.std_rate == 0.0);
}

TEST_CASE("worker count does not change the result") {
  ScenarioConfig cfg = small(5);
  std::vector<int> order;
  const SweepResult one = run_sweep(cfg, [&](const TrialRecord& r) { order.push_back(r.trial_index); });
  CHECK(order == std::vector<int>{0, 1, 2, 3, 4});
  cfg.threads = 3;
  order.clear();
  const SweepResult three = run_sweep(cfg, [&](const TrialRecord& r) { order.push_back(r.trial_index); });
  CHECK(order == std::vector<int>{0, 1, 2, 3, 4});
  std::ostringstream a, b;
  write_sweep_csv(a, one);
  write_sweep_csv(b, three);
  CHECK(a.str() == b.str());
}

TEST_CASE("traces are collected on request") {
  ScenarioConfig cfg = small(1);
  cfg.schedulers = {SchedulerKind::kCesg};
  cfg.mode = Mode::kClcf;
  CHECK(run_trial(cfg, 0).traces.empty());
  const TrialRecord rec = run_trial(cfg, 0, true);
  CHECK_FALSE(rec.traces.empty());
  for (const auto& t : rec.traces) CHECK(t.mode == Mode::kClcf);
}

TEST_CASE("sweep CSV round trip") {
  const SweepResult res = run_sweep(small(2));
  std::ostringstream os;
  write_sweep_csv(os, res);
  std::istringstream is(os.str());
  const std::vector<SweepRow> back = read_sweep_csv(is);
  REQUIRE(back.size() == res.rows.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].mode == res.rows[i].mode);
    CHECK(back[i].scheduler == res.rows[i].scheduler);
    CHECK(back[i].snr_db == res.rows[i].snr_db);
    CHECK(back[i].mean_rate == doctest::Approx(res.rows[i].mean_rate).epsilon(1e-9));
    CHECK(back[i].std_rate == doctest::Approx(res.rows[i].std_rate).epsilon(1e-9));
    CHECK(back[i].trials == 2);
  }
  std::istringstream bad("mode,scheduler\n");
  CHECK_THROWS_AS(read_sweep_csv(bad), IoError);
}

TEST_CASE("empty result writes only the header") {
  const auto path = (std::filesystem::temp_directory_path() / "cfmimo_empty.csv").string();
  emit_csv(SweepResult{}, path);
  CHECK(slurp(path) == "mode,scheduler,snr_db,mean_rate,std_rate,trials\n");
  std::remove(path.c_str());
  CHECK_THROWS_AS(emit_csv(SweepResult{}, "/nonexistent/dir/out.csv"), IoError);
}

TEST_CASE("metadata sidecar") {
  SweepResult r;
  r.config_hash = 0xabcULL;
  r.master_seed = 9;
  std::ostringstream os;
  write_sweep_metadata(os, r);
  CHECK(os.str() == std::string("config_hash=0000000000000abc\nmaster_seed=9\nversion=") + kArtifactVersion + "\n");
}

TEST_CASE("golden sweep for the tiny scenario") {
  const ScenarioConfig cfg = load_config(std::string(CFMIMO_CONFIG_DIR) + "/tiny.cfg");
  std::ostringstream os;
  write_sweep_csv(os, run_sweep(cfg));
  CHECK(os.str() == slurp(std::string(CFMIMO_TEST_DATA_DIR) + "/tiny_sweep.csv"));
}

TEST_CASE("trial failures carry the trial index") {
  ScenarioConfig cfg = small(2);
  cfg.exhaustive_cap = 1;
  try {
    run_sweep(cfg);
    FAIL("expected a failure");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("trial 0") != std::string::npos);
  }
}
