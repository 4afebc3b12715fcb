#include "cfmimo/topology.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <string>

#include "cfmimo/errors.hpp"
#include "cfmimo/format.hpp"

namespace cfmimo {

double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::vector<int> ClusterPartition::aps_of(int c) const {
  std::vector<int> out;
  for (int m = 0; m < static_cast<int>(ap_cluster.size()); ++m) {
    if (ap_cluster[m] == c) out.push_back(m);
  }
  return out;
}

std::vector<int> ClusterPartition::users_of(int c) const {
  std::vector<int> out;
  for (int k = 0; k < static_cast<int>(user_cluster.size()); ++k) {
    if (user_cluster[k] == c) out.push_back(k);
  }
  return out;
}

NetworkLayout generate_layout(int num_aps, int num_users, double side, std::uint64_t seed) {
  if (num_aps < 1) throw ConfigError("generate_layout: number of APs must be >= 1");
  if (num_users < 1) throw ConfigError("generate_layout: number of users must be >= 1");
  if (!(side > 0.0)) throw ConfigError("generate_layout: side length must be > 0");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(0.0, side);

  NetworkLayout layout;
  layout.side_length = side;
  layout.ap_positions.resize(num_aps);
  layout.user_positions.resize(num_users);
  for (auto& p : layout.ap_positions) {
    p.x = coord(rng);
    p.y = coord(rng);
  }
  for (auto& p : layout.user_positions) {
    p.x = coord(rng);
    p.y = coord(rng);
  }
  return layout;
}

int grid_dimension(int cluster_count) {
  if (cluster_count < 1) throw ConfigError("cluster count must be >= 1");
  const int g = static_cast<int>(std::lround(std::sqrt(static_cast<double>(cluster_count))));
  if (g * g != cluster_count) {
    throw ConfigError("cluster count " + std::to_string(cluster_count) +
                      " is not a perfect square grid");
  }
  return g;
}

int grid_cell(const Point& p, double side, int grid_dim) {
  const double cell = side / grid_dim;
  auto axis = [&](double v) {
    const int i = static_cast<int>(std::floor(v / cell));
    return std::clamp(i, 0, grid_dim - 1);
  };
  return axis(p.x) + grid_dim * axis(p.y);
}

ClusterPartition partition_grid(const NetworkLayout& layout, int cluster_count) {
  const int g = grid_dimension(cluster_count);
  ClusterPartition part;
  part.cluster_count = cluster_count;
  part.ap_counts.assign(cluster_count, 0);
  part.user_counts.assign(cluster_count, 0);
  part.ap_cluster.reserve(layout.ap_positions.size());
  part.user_cluster.reserve(layout.user_positions.size());
  for (const auto& p : layout.ap_positions) {
    const int c = grid_cell(p, layout.side_length, g);
    part.ap_cluster.push_back(c);
    ++part.ap_counts[c];
  }
  for (const auto& p : layout.user_positions) {
    const int c = grid_cell(p, layout.side_length, g);
    part.user_cluster.push_back(c);
    ++part.user_counts[c];
  }
  return part;
}

void write_layout_csv(std::ostream& os, const NetworkLayout& layout, const ClusterPartition& partition) {
  os << "kind,index,x,y,cluster\n";
  for (int m = 0; m < layout.num_aps(); ++m) {
    const auto& p = layout.ap_positions[m];
    os << "ap," << m << ',' << fixed_str(p.x, 6) << ',' << fixed_str(p.y, 6) << ','
       << partition.ap_cluster.at(m) << '\n';
  }
  for (int k = 0; k < layout.num_users(); ++k) {
    const auto& p = layout.user_positions[k];
    os << "user," << k << ',' << fixed_str(p.x, 6) << ',' << fixed_str(p.y, 6) << ','
       << partition.user_cluster.at(k) << '\n';
  }
}

}  // namespace cfmimo
