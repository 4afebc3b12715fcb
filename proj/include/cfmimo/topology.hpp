#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace cfmimo {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

double distance(const Point& a, const Point& b);

// AP and user drop on a square [0, side]^2.
struct NetworkLayout {
  double side_length = 0.0;
  std::vector<Point> ap_positions;
  std::vector<Point> user_positions;

  int num_aps() const { return static_cast<int>(ap_positions.size()); }
  int num_users() const { return static_cast<int>(user_positions.size()); }
};

// Network-centric g x g grid of equal-area rectangular clusters.
struct ClusterPartition {
  int cluster_count = 1;
  std::vector<int> ap_cluster;    // AP index -> cluster
  std::vector<int> user_cluster;  // user index -> cluster
  std::vector<int> ap_counts;     // M_c
  std::vector<int> user_counts;   // K_c

  // Global indices of the APs / users in cluster c, ascending.
  std::vector<int> aps_of(int c) const;
  std::vector<int> users_of(int c) const;
};

// Uniform i.i.d. drop of M APs and K users; fully determined by seed.
NetworkLayout generate_layout(int num_aps, int num_users, double side, std::uint64_t seed);

// Cluster index of a point for a g x g grid; coordinates equal to side clamp
// into the last cell.
int grid_cell(const Point& p, double side, int grid_dim);

// C must be a perfect square (C = g^2).
ClusterPartition partition_grid(const NetworkLayout& layout, int cluster_count);

// Grid dimension g for C = g^2, or throws ConfigError.
int grid_dimension(int cluster_count);

// CSV dump: kind,index,x,y,cluster (one row per AP/user).
void write_layout_csv(std::ostream& os, const NetworkLayout& layout, const ClusterPartition& partition);

}  // namespace cfmimo
