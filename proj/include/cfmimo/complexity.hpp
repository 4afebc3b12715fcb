#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace cfmimo {

// Closed-form scheduling FLOP counts, evaluated exactly in integer arithmetic
// (the half-integer terms always combine to an integer). Polynomials are taken
// verbatim, so they can go negative when K_c is not much larger than M_c.
std::int64_t flops_cluster(std::int64_t m_c, std::int64_t k_c);
std::int64_t flops_cf(std::int64_t m, std::int64_t k);

// Channel parameters exchanged with the central unit: 3 per AP-user link.
std::int64_t signaling(std::int64_t m, std::int64_t k);

// Near-equal split of `total` over `parts` (remainder to the lowest indices).
std::vector<int> equal_split(int total, int parts);

struct CostReport {
  int m = 0;
  int k = 0;
  int c = 1;
  std::vector<int> m_c;
  std::vector<int> k_c;
  std::int64_t flops_cf = 0;
  std::int64_t flops_clustered = 0;  // sum of per-cluster counts
  std::int64_t signaling_cf = 0;
  std::int64_t signaling_clustered = 0;
  std::vector<std::string> warnings;
};

CostReport cost_report(int m, int k, const std::vector<int>& m_c, const std::vector<int>& k_c);
CostReport cost_report(int m, int k, int clusters);  // equal split

// Published reference counts for the clustered network with M=64, K=16, n=8.
struct ReferenceFlops {
  std::string_view method;
  std::int64_t flops;
};
inline constexpr std::array<ReferenceFlops, 4> kTableReferenceFlops{{
    {"cesg", 70728},
    {"greedy", 37432},
    {"wsr", 52864},
    {"exhaustive", 221472},
}};

void write_cost_csv_header(std::ostream& os);
void write_cost_csv_row(std::ostream& os, const CostReport& r);

// Reference table next to the formula value for the same configuration.
// Columns: method,reference_flops,formula_flops,mismatch
void write_reference_table(std::ostream& os, const CostReport& r);

}  // namespace cfmimo
