#include "cfmimo/complexity.hpp"

#include <limits>
#include <ostream>

#include "cfmimo/errors.hpp"

namespace cfmimo {

namespace {

using i128 = __int128;

std::int64_t narrow(i128 twice, const char* who) {
  if (twice % 2 != 0) throw NumericError(std::string(who) + ": non-integer count");
  const i128 v = twice / 2;
  if (v > std::numeric_limits<std::int64_t>::max() || v < std::numeric_limits<std::int64_t>::min()) {
    throw NumericError(std::string(who) + ": count overflows 64 bits");
  }
  return static_cast<std::int64_t>(v);
}

void check_dims(std::int64_t m, std::int64_t k, const char* who) {
  if (m < 1 || k < 1) throw ConfigError(std::string(who) + ": dimensions must be >= 1");
}

}  // namespace

std::int64_t flops_cluster(std::int64_t m_c, std::int64_t k_c) {
  check_dims(m_c, k_c, "flops_cluster");
  const i128 m = m_c;
  const i128 k = k_c;
  // 2 N_cl, so the 7/2 terms stay integral.
  const i128 twice = 2 * (16 * k * k * k * k + 16 * (m + 1) * k * k * k + 2 * (-16 * m * m + 16 * m + 1) * k * k +
                          (4 * m + 6) * k + 3) -
                     7 * m * m - 7 * m;
  return narrow(twice, "flops_cluster");
}

std::int64_t flops_cf(std::int64_t m_total, std::int64_t k_total) {
  check_dims(m_total, k_total, "flops_cf");
  const i128 m = m_total;
  const i128 k = k_total;
  const i128 twice = 2 * (6 * k * k * k * k + (2 * m + 6) * k * k * k + 2 * (-4 * m * m + 4 * m + 1) * k * k +
                          (4 * m + 2) * k - 1) -
                     7 * m * m + m;
  return narrow(twice, "flops_cf");
}

std::int64_t signaling(std::int64_t m, std::int64_t k) {
  if (m < 0 || k < 0) throw ConfigError("signaling: dimensions must be >= 0");
  return 3 * m * k;
}

std::vector<int> equal_split(int total, int parts) {
  if (parts < 1) throw ConfigError("equal_split: parts must be >= 1");
  std::vector<int> out(parts);
  for (int i = 0; i < parts; ++i) out[i] = total / parts + (i < total % parts ? 1 : 0);
  return out;
}

CostReport cost_report(int m, int k, const std::vector<int>& m_c, const std::vector<int>& k_c) {
  if (m_c.size() != k_c.size() || m_c.empty()) throw ConfigError("cost_report: per-cluster lists must match");
  CostReport r;
  r.m = m;
  r.k = k;
  r.c = static_cast<int>(m_c.size());
  r.m_c = m_c;
  r.k_c = k_c;
  r.flops_cf = flops_cf(m, k);
  r.signaling_cf = signaling(m, k);
  if (r.flops_cf < 0) {
    r.warnings.push_back("network-wide FLOP polynomial is negative at M=" + std::to_string(m) +
                         ", K=" + std::to_string(k) + " (outside the K >> M regime)");
  }
  for (std::size_t c = 0; c < m_c.size(); ++c) {
    r.signaling_clustered += signaling(m_c[c], k_c[c]);
    if (m_c[c] < 1 || k_c[c] < 1) continue;  // idle cluster schedules nobody
    const std::int64_t f = flops_cluster(m_c[c], k_c[c]);
    if (f < 0) {
      r.warnings.push_back("cluster FLOP polynomial is negative at M_c=" + std::to_string(m_c[c]) +
                           ", K_c=" + std::to_string(k_c[c]) + " (outside the K_c >> M_c regime)");
    }
    r.flops_clustered += f;
  }
  return r;
}

CostReport cost_report(int m, int k, int clusters) {
  return cost_report(m, k, equal_split(m, clusters), equal_split(k, clusters));
}

void write_cost_csv_header(std::ostream& os) { os << "M,K,C,N_CF,sum_N_cl,L_CF,sum_L_cl,domain_warning\n"; }

void write_cost_csv_row(std::ostream& os, const CostReport& r) {
  os << r.m << ',' << r.k << ',' << r.c << ',' << r.flops_cf << ',' << r.flops_clustered << ',' << r.signaling_cf
     << ',' << r.signaling_clustered << ',' << (r.warnings.empty() ? 0 : 1) << '\n';
}

void write_reference_table(std::ostream& os, const CostReport& r) {
  os << "method,reference_flops,formula_flops,mismatch\n";
  for (const auto& ref : kTableReferenceFlops) {
    os << ref.method << ',' << ref.flops << ',';
    // Only the C-ESG count has a closed form; the others have none to compare.
    if (ref.method == "cesg") {
      os << r.flops_clustered << ',' << (r.flops_clustered != ref.flops ? 1 : 0);
    } else {
      os << ",";
    }
    os << '\n';
  }
}

}  // namespace cfmimo
