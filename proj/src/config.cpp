#include "cfmimo/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cfmimo/errors.hpp"
#include "cfmimo/format.hpp"

namespace cfmimo {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto end = comma == std::string_view::npos ? s.size() : comma;
    std::string item = trim(s.substr(start, end - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc{} || ptr != last) throw ConfigError("config key '" + key + "': cannot parse '" + value + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + value + "'");
}

}  // namespace

Mode parse_mode(std::string_view name) {
  if (name == "cf") return Mode::kCf;
  if (name == "clcf") return Mode::kClcf;
  if (name == "both") return Mode::kBoth;
  throw ConfigError("unknown mode '" + std::string(name) + "' (expected cf, clcf or both)");
}

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::kCf: return "cf";
    case Mode::kClcf: return "clcf";
    case Mode::kBoth: return "both";
  }
  return "?";
}

ClusterPowerSplit parse_power_split(std::string_view name) {
  if (name == "per_cluster") return ClusterPowerSplit::kPerCluster;
  if (name == "network") return ClusterPowerSplit::kNetwork;
  throw ConfigError("unknown cluster_power_split '" + std::string(name) + "' (expected per_cluster or network)");
}

std::string_view to_string(ClusterPowerSplit split) {
  return split == ClusterPowerSplit::kPerCluster ? "per_cluster" : "network";
}

void ScenarioConfig::validate() const {
  if (num_aps < 1 || num_users < 1) throw ConfigError("M and K must be >= 1");
  if (clusters < 1) throw ConfigError("C must be >= 1");
  if (n_total < 1) throw ConfigError("n_total must be >= 1");
  if (n_total > num_aps) throw ConfigError("n_total must not exceed M");
  if (!(side_length_m > 0)) throw ConfigError("side_length_m must be > 0");
  if (snr_db.empty()) throw ConfigError("snr_db grid must not be empty");
  for (double s : snr_db) {
    if (!std::isfinite(s)) throw ConfigError("snr_db values must be finite");
  }
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
  if (schedulers.empty()) throw ConfigError("at least one scheduler is required");
  if (!(sigma_w2 > 0)) throw ConfigError("sigma_w2 must be > 0");
  if (!(total_power > 0)) throw ConfigError("total_power must be > 0");
  if (!(snr_reference_distance_m > 0)) throw ConfigError("snr_reference_distance_m must be > 0");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  large_scale.validate();
  const int g = static_cast<int>(std::lround(std::sqrt(static_cast<double>(clusters))));
  if (g * g != clusters) throw ConfigError("C must be a perfect square");
}

std::string ScenarioConfig::canonical() const {
  std::ostringstream os;
  os << "M=" << num_aps << "\nK=" << num_users << "\nC=" << clusters << "\nn_total=" << n_total
     << "\nside_length_m=" << exact_str(side_length_m) << "\nsnr_db=";
  for (std::size_t i = 0; i < snr_db.size(); ++i) os << (i ? "," : "") << exact_str(snr_db[i]);
  os << "\ntrials=" << trials << "\nmaster_seed=" << master_seed << "\ngamma=" << exact_str(gamma)
     << "\nprecoder=" << to_string(precoder) << "\nschedulers=";
  for (std::size_t i = 0; i < schedulers.size(); ++i) os << (i ? "," : "") << to_string(schedulers[i]);
  os << "\nmode=" << to_string(mode) << "\nexhaustive_cap=" << exhaustive_cap
     << "\ncarrier_freq_mhz=" << exact_str(large_scale.carrier_freq_mhz) << "\nh_ap_m=" << exact_str(large_scale.h_ap_m)
     << "\nh_user_m=" << exact_str(large_scale.h_user_m) << "\nd0_m=" << exact_str(large_scale.d0_m)
     << "\nd1_m=" << exact_str(large_scale.d1_m) << "\nsigma_sh_db=" << exact_str(large_scale.sigma_sh_db)
     << "\nsigma_w2=" << exact_str(sigma_w2) << "\nsnr_reference_distance_m=" << exact_str(snr_reference_distance_m)
     << "\ntotal_power=" << exact_str(total_power) << "\ncluster_power_split=" << to_string(power_split)
     << "\nredraw_layout=" << (redraw_layout ? "true" : "false") << '\n';
  return os.str();
}

ScenarioConfig parse_config(std::istream& is) {
  ScenarioConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));

    if (key == "M") cfg.num_aps = parse_number<int>(key, value);
    else if (key == "K") cfg.num_users = parse_number<int>(key, value);
    else if (key == "C") cfg.clusters = parse_number<int>(key, value);
    else if (key == "n_total") cfg.n_total = parse_number<int>(key, value);
    else if (key == "side_length_m") cfg.side_length_m = parse_number<double>(key, value);
    else if (key == "snr_db") {
      cfg.snr_db.clear();
      for (const auto& item : split_list(value)) cfg.snr_db.push_back(parse_number<double>(key, item));
    } else if (key == "trials") cfg.trials = parse_number<int>(key, value);
    else if (key == "master_seed") cfg.master_seed = parse_number<std::uint64_t>(key, value);
    else if (key == "gamma") cfg.gamma = parse_number<double>(key, value);
    else if (key == "precoder") cfg.precoder = parse_precoder_kind(value);
    else if (key == "schedulers") {
      cfg.schedulers.clear();
      for (const auto& item : split_list(value)) cfg.schedulers.push_back(parse_scheduler_kind(item));
    } else if (key == "mode") cfg.mode = parse_mode(value);
    else if (key == "exhaustive_cap") cfg.exhaustive_cap = parse_number<std::uint64_t>(key, value);
    else if (key == "carrier_freq_mhz") cfg.large_scale.carrier_freq_mhz = parse_number<double>(key, value);
    else if (key == "h_ap_m") cfg.large_scale.h_ap_m = parse_number<double>(key, value);
    else if (key == "h_user_m") cfg.large_scale.h_user_m = parse_number<double>(key, value);
    else if (key == "d0_m") cfg.large_scale.d0_m = parse_number<double>(key, value);
    else if (key == "d1_m") cfg.large_scale.d1_m = parse_number<double>(key, value);
    else if (key == "sigma_sh_db") cfg.large_scale.sigma_sh_db = parse_number<double>(key, value);
    else if (key == "sigma_w2") cfg.sigma_w2 = parse_number<double>(key, value);
    else if (key == "snr_reference_distance_m") cfg.snr_reference_distance_m = parse_number<double>(key, value);
    else if (key == "total_power") cfg.total_power = parse_number<double>(key, value);
    else if (key == "cluster_power_split") cfg.power_split = parse_power_split(value);
    else if (key == "redraw_layout") cfg.redraw_layout = parse_bool(key, value);
    else if (key == "threads") cfg.threads = parse_number<int>(key, value);
    else throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  return parse_config(in);
}

std::uint64_t config_hash(const ScenarioConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : cfg.canonical()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double rho_from_snr_db(const ScenarioConfig& cfg, double snr_db) {
  const double atten = attenuation_constant(cfg.large_scale);
  const double ref_pl_db = pathloss_db(cfg.snr_reference_distance_m, atten, cfg.large_scale);
  return cfg.sigma_w2 * db_to_linear(snr_db - ref_pl_db);
}

double cluster_power_cap(const ScenarioConfig& cfg) {
  return cfg.power_split == ClusterPowerSplit::kPerCluster ? cfg.total_power
                                                           : cfg.total_power / static_cast<double>(cfg.clusters);
}

}  // namespace cfmimo
