#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace vransplit {

class Rng;

enum class NodeKind { CU, DU, Router };

std::string to_string(NodeKind kind);
NodeKind node_kind_from_string(const std::string& text);

struct Node {
  int id = 0;
  NodeKind kind = NodeKind::Router;
  double x = 0.0;  // unit-square coordinates
  double y = 0.0;

  friend bool operator==(const Node&, const Node&) = default;
};

/// Undirected crosshaul link. Endpoints are stored with u < v.
struct Link {
  int u = 0;
  int v = 0;
  double capacity_mbps = 0.0;
  double delay_us = 0.0;
  double unit_routing_cost = 0.0;  // monetary units per Mbps

  friend bool operator==(const Link&, const Link&) = default;
};

/// Single DU -> CU route.
struct RoutePath {
  int du = 0;
  std::vector<int> nodes;  // DU first, CU last
  std::vector<int> links;  // link indices in traversal order
  double total_delay_us = 0.0;
  double total_routing_cost = 0.0;

  /// Whether the route crosses the given link.
  bool uses(int link) const;
  /// Dense 0/1 indicator over all links of the topology.
  std::vector<std::uint8_t> link_membership(std::size_t link_count) const;

  friend bool operator==(const RoutePath&, const RoutePath&) = default;
};

struct Topology {
  std::vector<Node> nodes;
  std::vector<Link> links;
  std::vector<RoutePath> paths;  // one per DU, ordered by DU id
  std::uint64_t seed = 0;

  int cu() const;
  std::vector<int> du_ids() const;
  const RoutePath& path_for(int du) const;
  /// Index of the link joining a and b, or -1.
  int find_link(int a, int b) const;

  friend bool operator==(const Topology&, const Topology&) = default;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct WaxmanParams {
  std::size_t n_nodes = 100;
  double alpha = 0.5;
  double beta = 0.1;
  Interval capacity_gbps{1.0, 100.0};
  double delay_us_per_unit = 2500.0;
  Interval routing_cost_per_mbps{0.0001, 0.001};
  /// Number of DU nodes; the remaining non-CU nodes become routers.
  /// Zero means every non-CU node is a DU.
  std::size_t n_dus = 0;
  std::uint64_t seed = 1;
};

/// alpha * exp(-d / (beta * max_distance)).
double waxman_edge_probability(double distance, double max_distance, double alpha, double beta);

/// Raw Waxman edge draw over node positions, before connectivity repair.
std::vector<std::pair<int, int>> sample_waxman_edges(std::span<const Node> nodes, double alpha,
                                                     double beta, Rng& rng);

Topology generate_waxman(const WaxmanParams& params);

/// Fills `paths` with delay-shortest DU -> CU routes. Ties go to fewer
/// hops, then to the lexicographically smallest DU -> CU node sequence.
Topology compute_paths(Topology topology);

/// Structural checks shared by the loader and the generator.
void validate_topology(const Topology& topology);

void save_topology(const Topology& topology, const std::filesystem::path& destination);
Topology load_topology(const std::filesystem::path& source);
std::string topology_to_json(const Topology& topology);
Topology topology_from_json(const std::string& text);

}  // namespace vransplit
