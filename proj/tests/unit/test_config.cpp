#include <doctest.h>

#include <sstream>

#include "cfmimo/config.hpp"
#include "cfmimo/errors.hpp"

using namespace cfmimo;

namespace {

ScenarioConfig parse(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

}  // namespace

TEST_CASE("config text is parsed with comments, blanks and lists") {
  const ScenarioConfig cfg = parse(
      "# scenario\n"
      "M = 16\n"
      "K=40   # users\n"
      "\n"
      "C = 4\r\n"
      "n_total = 8\n"
      "snr_db = -10, 0 ,10\n"
      "schedulers = cesg,random\n"
      "precoder = zf\n"
      "mode = clcf\n"
      "gamma = 0.9\n"
      "sigma_sh_db = 0\n"
      "cluster_power_split = per_cluster\n"
      "redraw_layout = false\n"
      "master_seed = 18446744073709551615\n");
  CHECK(cfg.num_aps == 16);
  CHECK(cfg.num_users == 40);
  CHECK(cfg.n_total == 8);
  CHECK(cfg.snr_db == std::vector<double>{-10, 0, 10});
  CHECK(cfg.schedulers == std::vector<SchedulerKind>{SchedulerKind::kCesg, SchedulerKind::kRandom});
  CHECK(cfg.precoder == PrecoderKind::kZf);
  CHECK(cfg.mode == Mode::kClcf);
  CHECK(cfg.gamma == 0.9);
  CHECK(cfg.large_scale.sigma_sh_db == 0.0);
  CHECK(cfg.power_split == ClusterPowerSplit::kPerCluster);
  CHECK_FALSE(cfg.redraw_layout);
  CHECK(cfg.master_seed == 18446744073709551615ULL);
}

TEST_CASE("defaults") {
  const ScenarioConfig cfg = parse("");
  CHECK(cfg.num_aps == 64);
  CHECK(cfg.num_users == 256);
  CHECK(cfg.clusters == 4);
  CHECK(cfg.trials == 500);
  CHECK(cfg.gamma * cfg.gamma == doctest::Approx(0.95).epsilon(1e-15));
  CHECK(cfg.power_split == ClusterPowerSplit::kNetwork);
  CHECK(cluster_power_cap(cfg) == 0.25);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse("M 16\n"), ConfigError);
  CHECK_THROWS_AS(parse("bogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("M = 1x\n"), ConfigError);
  CHECK_THROWS_AS(parse("M = 4\nn_total = 5\n"), ConfigError);
  CHECK_THROWS_AS(parse("C = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse("snr_db =\n"), ConfigError);
  CHECK_THROWS_AS(parse("trials = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse("gamma = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse("gamma = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse("schedulers = wsr\n"), ConfigError);
  CHECK_THROWS_AS(parse("mode = hybrid\n"), ConfigError);
  CHECK_THROWS_AS(parse("redraw_layout = maybe\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/dir/x.cfg"), IoError);
}

TEST_CASE("canonical form and hash") {
  const ScenarioConfig a = parse("M = 16\nK = 32\nn_total = 4\n");
  const ScenarioConfig b = parse("# same thing\nn_total=4\nK= 32\nM =16\nthreads = 3\n");
  CHECK(a.canonical() == b.canonical());
  CHECK(config_hash(a) == config_hash(b));
  CHECK(parse(a.canonical()).canonical() == a.canonical());
  const ScenarioConfig c = parse("M = 16\nK = 32\nn_total = 4\nmaster_seed = 2\n");
  CHECK(config_hash(a) != config_hash(c));
  CHECK(a.canonical().find("M=16\nK=32\n") == 0);
}

TEST_CASE("SNR axis is referenced to the path loss at the reference distance") {
  ScenarioConfig cfg;
  const double pl = pathloss_db(cfg.snr_reference_distance_m, attenuation_constant(cfg.large_scale), cfg.large_scale);
  CHECK(linear_to_db(rho_from_snr_db(cfg, 0.0)) == doctest::Approx(-pl).epsilon(1e-12));
  CHECK(rho_from_snr_db(cfg, 10.0) / rho_from_snr_db(cfg, 0.0) == doctest::Approx(10.0).epsilon(1e-12));
  cfg.sigma_w2 = 2.0;
  CHECK(rho_from_snr_db(cfg, 5.0) == doctest::Approx(2.0 * db_to_linear(5.0 - pl)).epsilon(1e-12));
}

TEST_CASE("mode and power-split names") {
  for (Mode m : {Mode::kCf, Mode::kClcf, Mode::kBoth}) CHECK(parse_mode(to_string(m)) == m);
  for (auto s : {ClusterPowerSplit::kNetwork, ClusterPowerSplit::kPerCluster}) {
    CHECK(parse_power_split(to_string(s)) == s);
  }
  CHECK_THROWS_AS(parse_power_split("half"), ConfigError);
}
