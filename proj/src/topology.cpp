#include "vransplit/topology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "vransplit/error.hpp"
#include "vransplit/rng.hpp"

namespace vransplit {

namespace {

constexpr int kTopologySchemaVersion = 1;

double distance(const Node& a, const Node& b) { return std::hypot(a.x - b.x, a.y - b.y); }

bool valid_interval(const Interval& r) {
  return std::isfinite(r.lo) && std::isfinite(r.hi) && r.lo >= 0.0 && r.hi >= r.lo;
}

// Union-find over node ids.
class Components {
 public:
  explicit Components(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t i) {
    while (parent_[i] != i) {
      parent_[i] = parent_[parent_[i]];
      i = parent_[i];
    }
    return i;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent_[std::max(a, b)] = std::min(a, b);
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

std::string to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::CU: return "CU";
    case NodeKind::DU: return "DU";
    case NodeKind::Router: return "Router";
  }
  return "Router";
}

NodeKind node_kind_from_string(const std::string& text) {
  if (text == "CU") return NodeKind::CU;
  if (text == "DU") return NodeKind::DU;
  if (text == "Router") return NodeKind::Router;
  throw ParseError("unknown node kind '" + text + "'");
}

bool RoutePath::uses(int link) const { return std::find(links.begin(), links.end(), link) != links.end(); }

std::vector<std::uint8_t> RoutePath::link_membership(std::size_t link_count) const {
  std::vector<std::uint8_t> out(link_count, 0);
  for (int l : links) out.at(static_cast<std::size_t>(l)) = 1;
  return out;
}

int Topology::cu() const {
  for (const auto& n : nodes) {
    if (n.kind == NodeKind::CU) return n.id;
  }
  throw TopologyError("topology has no CU node");
}

std::vector<int> Topology::du_ids() const {
  std::vector<int> ids;
  for (const auto& n : nodes) {
    if (n.kind == NodeKind::DU) ids.push_back(n.id);
  }
  return ids;
}

const RoutePath& Topology::path_for(int du) const {
  for (const auto& p : paths) {
    if (p.du == du) return p;
  }
  throw TopologyError("no route stored for DU " + std::to_string(du));
}

int Topology::find_link(int a, int b) const {
  if (a > b) std::swap(a, b);
  for (std::size_t i = 0; i < links.size(); ++i) {
    if (links[i].u == a && links[i].v == b) return static_cast<int>(i);
  }
  return -1;
}

double waxman_edge_probability(double distance, double max_distance, double alpha, double beta) {
  if (max_distance <= 0.0) return alpha;
  return alpha * std::exp(-distance / (beta * max_distance));
}

std::vector<std::pair<int, int>> sample_waxman_edges(std::span<const Node> nodes, double alpha,
                                                     double beta, Rng& rng) {
  double max_distance = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      max_distance = std::max(max_distance, distance(nodes[i], nodes[j]));
    }
  }
  std::vector<std::pair<int, int>> edges;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      const double p = waxman_edge_probability(distance(nodes[i], nodes[j]), max_distance, alpha, beta);
      if (rng.uniform() < p) edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  }
  return edges;
}

Topology generate_waxman(const WaxmanParams& params) {
  if (params.n_nodes < 2) throw ParameterError("n_nodes must be at least 2");
  if (!(params.alpha > 0.0 && params.alpha <= 1.0)) throw ParameterError("alpha must lie in (0, 1]");
  if (!(params.beta > 0.0 && params.beta <= 1.0)) throw ParameterError("beta must lie in (0, 1]");
  if (!valid_interval(params.capacity_gbps) || params.capacity_gbps.lo <= 0.0) {
    throw ParameterError("capacity range must be a positive interval");
  }
  if (!valid_interval(params.routing_cost_per_mbps)) {
    throw ParameterError("routing cost range must be a nonnegative interval");
  }
  if (!(params.delay_us_per_unit >= 0.0) || !std::isfinite(params.delay_us_per_unit)) {
    throw ParameterError("delay scale must be nonnegative");
  }
  if (params.n_dus > params.n_nodes - 1) throw ParameterError("n_dus exceeds the non-CU node count");

  Rng rng(params.seed);
  Topology topo;
  topo.seed = params.seed;
  const std::size_t n = params.n_nodes;
  topo.nodes.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    topo.nodes[i].id = static_cast<int>(i);
    topo.nodes[i].x = rng.uniform();
    topo.nodes[i].y = rng.uniform();
  }

  // CU: node nearest the centroid of the unit square.
  const Node centre{0, NodeKind::Router, 0.5, 0.5};
  std::size_t cu = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (distance(topo.nodes[i], centre) < distance(topo.nodes[cu], centre)) cu = i;
  }

  auto edges = sample_waxman_edges(topo.nodes, params.alpha, params.beta, rng);

  // Join components with the shortest inter-component edges.
  Components comps(n);
  std::size_t n_components = n;
  for (const auto& [a, b] : edges) {
    if (comps.unite(static_cast<std::size_t>(a), static_cast<std::size_t>(b))) --n_components;
  }
  while (n_components > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::pair<int, int> best_edge{-1, -1};
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (comps.find(i) == comps.find(j)) continue;
        const double d = distance(topo.nodes[i], topo.nodes[j]);
        if (d < best) {
          best = d;
          best_edge = {static_cast<int>(i), static_cast<int>(j)};
        }
      }
    }
    comps.unite(static_cast<std::size_t>(best_edge.first), static_cast<std::size_t>(best_edge.second));
    edges.push_back(best_edge);
    --n_components;
  }
  std::sort(edges.begin(), edges.end());

  topo.links.reserve(edges.size());
  for (const auto& [a, b] : edges) {
    Link link;
    link.u = a;
    link.v = b;
    link.capacity_mbps = 1000.0 * rng.uniform(params.capacity_gbps.lo, params.capacity_gbps.hi);
    link.delay_us = params.delay_us_per_unit * distance(topo.nodes[a], topo.nodes[b]);
    link.unit_routing_cost = rng.uniform(params.routing_cost_per_mbps.lo, params.routing_cost_per_mbps.hi);
    topo.links.push_back(link);
  }

  // Roles: CU, then either every other node is a DU or a seeded subset is.
  std::vector<std::size_t> others;
  for (std::size_t i = 0; i < n; ++i) {
    if (i != cu) others.push_back(i);
  }
  std::size_t n_dus = params.n_dus == 0 ? others.size() : params.n_dus;
  if (n_dus < others.size()) rng.shuffle(std::span<std::size_t>(others));
  for (std::size_t k = 0; k < others.size(); ++k) {
    topo.nodes[others[k]].kind = k < n_dus ? NodeKind::DU : NodeKind::Router;
  }
  topo.nodes[cu].kind = NodeKind::CU;

  return compute_paths(std::move(topo));
}

Topology compute_paths(Topology topo) {
  const std::size_t n = topo.nodes.size();
  const int cu = topo.cu();

  std::vector<std::vector<std::pair<int, int>>> adj(n);  // (neighbour, link)
  for (std::size_t l = 0; l < topo.links.size(); ++l) {
    const auto& link = topo.links[l];
    adj.at(static_cast<std::size_t>(link.u)).emplace_back(link.v, static_cast<int>(l));
    adj.at(static_cast<std::size_t>(link.v)).emplace_back(link.u, static_cast<int>(l));
  }

  // Label of the best known route node -> CU, compared as (delay, hops, sequence).
  struct Label {
    double delay = std::numeric_limits<double>::infinity();
    std::vector<int> seq;   // node sequence, this node first
    std::vector<int> links;
  };
  auto better = [](double d1, const std::vector<int>& s1, double d2, const std::vector<int>& s2) {
    if (d1 != d2) return d1 < d2;
    if (s1.size() != s2.size()) return s1.size() < s2.size();
    return s1 < s2;
  };

  std::vector<Label> label(n);
  std::vector<bool> done(n, false);
  label[static_cast<std::size_t>(cu)].delay = 0.0;
  label[static_cast<std::size_t>(cu)].seq = {cu};

  for (std::size_t iter = 0; iter < n; ++iter) {
    int u = -1;
    for (std::size_t i = 0; i < n; ++i) {
      if (done[i] || !std::isfinite(label[i].delay)) continue;
      if (u < 0 || better(label[i].delay, label[i].seq, label[static_cast<std::size_t>(u)].delay,
                          label[static_cast<std::size_t>(u)].seq)) {
        u = static_cast<int>(i);
      }
    }
    if (u < 0) break;
    const auto& lu = label[static_cast<std::size_t>(u)];
    done[static_cast<std::size_t>(u)] = true;
    for (const auto& [v, l] : adj[static_cast<std::size_t>(u)]) {
      auto& lv = label[static_cast<std::size_t>(v)];
      if (done[static_cast<std::size_t>(v)]) continue;
      const double d = lu.delay + topo.links[static_cast<std::size_t>(l)].delay_us;
      std::vector<int> seq;
      seq.reserve(lu.seq.size() + 1);
      seq.push_back(v);
      seq.insert(seq.end(), lu.seq.begin(), lu.seq.end());
      if (better(d, seq, lv.delay, lv.seq)) {
        lv.delay = d;
        lv.seq = std::move(seq);
        lv.links.clear();
        lv.links.push_back(l);
        lv.links.insert(lv.links.end(), lu.links.begin(), lu.links.end());
      }
    }
  }

  topo.paths.clear();
  for (const auto& node : topo.nodes) {
    if (node.kind != NodeKind::DU) continue;
    const auto& lab = label[static_cast<std::size_t>(node.id)];
    if (!std::isfinite(lab.delay)) {
      throw TopologyError("DU " + std::to_string(node.id) + " is not connected to the CU");
    }
    RoutePath path;
    path.du = node.id;
    path.nodes = lab.seq;
    path.links = lab.links;
    for (int l : path.links) {
      path.total_delay_us += topo.links[static_cast<std::size_t>(l)].delay_us;
      path.total_routing_cost += topo.links[static_cast<std::size_t>(l)].unit_routing_cost;
    }
    topo.paths.push_back(std::move(path));
  }
  return topo;
}

void validate_topology(const Topology& topo) {
  const std::size_t n = topo.nodes.size();
  std::size_t cu_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& node = topo.nodes[i];
    const std::string where = "nodes[" + std::to_string(i) + "]";
    if (node.id != static_cast<int>(i)) throw ValidationError(where + ".id: ids must equal their index");
    if (!(node.x >= 0.0 && node.x <= 1.0 && node.y >= 0.0 && node.y <= 1.0)) {
      throw ValidationError(where + ": position outside the unit square");
    }
    if (node.kind == NodeKind::CU) ++cu_count;
  }
  if (cu_count != 1) {
    throw ValidationError("topology must contain exactly one CU node (found " + std::to_string(cu_count) + ")");
  }
  for (std::size_t l = 0; l < topo.links.size(); ++l) {
    const auto& link = topo.links[l];
    const std::string where = "links[" + std::to_string(l) + "]";
    if (link.u < 0 || link.v < 0 || static_cast<std::size_t>(link.u) >= n ||
        static_cast<std::size_t>(link.v) >= n || link.u >= link.v) {
      throw ValidationError(where + ": endpoints must be distinct node ids with u < v");
    }
    if (!(link.capacity_mbps > 0.0) || !std::isfinite(link.capacity_mbps)) {
      throw ValidationError(where + ".capacity_mbps: must be > 0");
    }
    if (!(link.delay_us >= 0.0) || !std::isfinite(link.delay_us)) {
      throw ValidationError(where + ".delay_us: must be >= 0");
    }
    if (!(link.unit_routing_cost >= 0.0) || !std::isfinite(link.unit_routing_cost)) {
      throw ValidationError(where + ".unit_routing_cost: must be >= 0");
    }
  }
  const int cu = topo.cu();
  const auto dus = topo.du_ids();
  if (topo.paths.size() != dus.size()) throw ValidationError("expected one path per DU");
  for (std::size_t k = 0; k < dus.size(); ++k) {
    const auto& p = topo.paths[k];
    const std::string where = "paths[" + std::to_string(k) + "]";
    if (p.du != dus[k]) throw ValidationError(where + ".du: paths must follow DU id order");
    if (p.nodes.size() != p.links.size() + 1 || p.nodes.front() != p.du || p.nodes.back() != cu) {
      throw ValidationError(where + ": route must run from its DU to the CU");
    }
    for (std::size_t h = 0; h < p.links.size(); ++h) {
      const int l = p.links[h];
      if (l < 0 || static_cast<std::size_t>(l) >= topo.links.size() ||
          topo.find_link(p.nodes[h], p.nodes[h + 1]) != l) {
        throw ValidationError(where + ".links[" + std::to_string(h) + "]: does not join consecutive nodes");
      }
    }
  }
}

std::string topology_to_json(const Topology& topo) {
  nlohmann::json j;
  j["schema"] = "vransplit.topology";
  j["version"] = kTopologySchemaVersion;
  j["seed"] = topo.seed;
  j["nodes"] = nlohmann::json::array();
  for (const auto& n : topo.nodes) {
    j["nodes"].push_back({{"id", n.id}, {"kind", to_string(n.kind)}, {"x", n.x}, {"y", n.y}});
  }
  j["links"] = nlohmann::json::array();
  for (const auto& l : topo.links) {
    j["links"].push_back({{"u", l.u},
                          {"v", l.v},
                          {"capacity_mbps", l.capacity_mbps},
                          {"delay_us", l.delay_us},
                          {"unit_routing_cost", l.unit_routing_cost}});
  }
  j["paths"] = nlohmann::json::array();
  for (const auto& p : topo.paths) {
    j["paths"].push_back({{"du", p.du},
                          {"nodes", p.nodes},
                          {"links", p.links},
                          {"total_delay_us", p.total_delay_us},
                          {"total_routing_cost", p.total_routing_cost}});
  }
  return j.dump(1);
}

namespace {

template <typename T>
T field(const nlohmann::json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw ParseError(where + "." + key + ": missing field");
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(where + "." + key + ": " + e.what());
  }
}

}  // namespace

Topology topology_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("topology: ") + e.what());
  }
  const std::string root = "topology";
  if (field<std::string>(j, "schema", root) != "vransplit.topology") throw ParseError("topology.schema: unexpected value");
  if (field<int>(j, "version", root) != kTopologySchemaVersion) throw ParseError("topology.version: unsupported");

  Topology topo;
  topo.seed = field<std::uint64_t>(j, "seed", root);
  const auto& nodes = j.at("nodes");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string where = "nodes[" + std::to_string(i) + "]";
    Node n;
    n.id = field<int>(nodes[i], "id", where);
    n.kind = node_kind_from_string(field<std::string>(nodes[i], "kind", where));
    n.x = field<double>(nodes[i], "x", where);
    n.y = field<double>(nodes[i], "y", where);
    topo.nodes.push_back(n);
  }
  const auto& links = j.at("links");
  for (std::size_t i = 0; i < links.size(); ++i) {
    const std::string where = "links[" + std::to_string(i) + "]";
    Link l;
    l.u = field<int>(links[i], "u", where);
    l.v = field<int>(links[i], "v", where);
    l.capacity_mbps = field<double>(links[i], "capacity_mbps", where);
    l.delay_us = field<double>(links[i], "delay_us", where);
    l.unit_routing_cost = field<double>(links[i], "unit_routing_cost", where);
    if (!(l.capacity_mbps > 0.0)) throw ParseError(where + ".capacity_mbps: must be > 0");
    if (l.delay_us < 0.0) throw ParseError(where + ".delay_us: must be >= 0");
    if (l.unit_routing_cost < 0.0) throw ParseError(where + ".unit_routing_cost: must be >= 0");
    topo.links.push_back(l);
  }
  const auto& paths = j.at("paths");
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const std::string where = "paths[" + std::to_string(i) + "]";
    RoutePath p;
    p.du = field<int>(paths[i], "du", where);
    p.nodes = field<std::vector<int>>(paths[i], "nodes", where);
    p.links = field<std::vector<int>>(paths[i], "links", where);
    p.total_delay_us = field<double>(paths[i], "total_delay_us", where);
    p.total_routing_cost = field<double>(paths[i], "total_routing_cost", where);
    topo.paths.push_back(std::move(p));
  }
  validate_topology(topo);
  return topo;
}

void save_topology(const Topology& topo, const std::filesystem::path& destination) {
  std::ofstream out(destination);
  if (!out) throw IoError("cannot write topology to " + destination.string());
  out << topology_to_json(topo) << '\n';
  if (!out) throw IoError("failed writing " + destination.string());
}

Topology load_topology(const std::filesystem::path& source) {
  std::ifstream in(source);
  if (!in) throw IoError("cannot read topology from " + source.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return topology_from_json(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(source.string() + ": " + e.what());
  }
}

}  // namespace vransplit
