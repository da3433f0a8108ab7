#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>
#include <vector>

#include "vransplit/rng.hpp"
#include "vransplit/topology.hpp"
#include "vransplit/vran_model.hpp"

namespace fixtures {

using namespace vransplit;

struct StarDu {
  double delay_us = 100.0;
  double capacity_mbps = 1e6;
  double routing_cost = 0.0;
  double lambda_mbps = 150.0;
};

/// CU at node 0, DU k+1 wired straight to it.
inline Scenario star_scenario(const std::vector<StarDu>& dus, SystemParams params = {}) {
  Topology t;
  t.nodes.push_back({0, NodeKind::CU, 0.5, 0.5});
  for (std::size_t k = 0; k < dus.size(); ++k) {
    const int id = static_cast<int>(k + 1);
    t.nodes.push_back({id, NodeKind::DU, 0.1, 0.1});
    t.links.push_back({0, id, dus[k].capacity_mbps, dus[k].delay_us, dus[k].routing_cost});
  }
  t = compute_paths(std::move(t));
  Scenario s;
  s.topology = std::make_shared<const Topology>(std::move(t));
  s.profiles = make_profiles(*s.topology);
  for (std::size_t k = 0; k < dus.size(); ++k) s.profiles[k].lambda_mbps = dus[k].lambda_mbps;
  s.params = params;
  return s;
}

/// Small Waxman instance whose link, CU and DU capacities are tight
/// enough that coupling constraints actually bind.
inline Scenario random_instance(std::size_t n_dus, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 77));
  WaxmanParams w;
  w.n_nodes = n_dus + 3;
  w.n_dus = n_dus;
  w.alpha = 0.6;
  w.beta = 0.4;
  w.capacity_gbps = {0.2, 3.0};
  w.seed = seed;
  Scenario s;
  s.topology = std::make_shared<const Topology>(generate_waxman(w));
  s.profiles = make_profiles(*s.topology);
  for (auto& p : s.profiles) {
    p.lambda_mbps = rng.uniform(10.0, 150.0);
    p.vm_cost_du = rng.uniform(0.5, 1.5);
    p.compute_cost_du = rng.uniform(0.5, 1.5);
    p.du_capacity_rc = rng.uniform(2.0, 8.0);
  }
  s.params.cu_capacity_rc = rng.uniform(2.0, 20.0);
  s.params.mu = default_penalty_weights(s.profiles, s.params, *s.topology);
  return s;
}

inline std::filesystem::path fresh_dir(const std::string& name) {
  const std::filesystem::path dir = std::filesystem::path(VRANSPLIT_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace fixtures
