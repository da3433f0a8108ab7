#include "vransplit/vran_model.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "vransplit/error.hpp"
#include "vransplit/format.hpp"

namespace vransplit {

std::string to_string(Split s) { return "S" + std::to_string(index_of(s)); }

std::string to_string(Constraint c) {
  switch (c) {
    case Constraint::CuCapacity: return "cu_capacity";
    case Constraint::DuCapacity: return "du_capacity";
    case Constraint::LinkCapacity: return "link_capacity";
    case Constraint::Delay: return "delay";
  }
  return "unknown";
}

SplitTable default_split_table() {
  return {{
      {Split::S0, 30.0, 0.05, 0.0},
      {Split::S1, 30.0, 0.04, 0.001},
      {Split::S2, 2.0, 0.00325, 0.00175},
      {Split::S3, 0.25, 0.0, 0.05},
  }};
}

double flow_of(Split split, double lambda_mbps) {
  switch (split) {
    case Split::S0:
    case Split::S1: return lambda_mbps;
    case Split::S2: return 1.02 * lambda_mbps + 1.5;
    case Split::S3: return 2500.0;
  }
  return 0.0;
}

double overshoot(double load, double bound) {
  if (load <= bound + kFeasibilityTolerance * std::max(1.0, std::abs(bound))) return 0.0;
  return load - bound;
}

// Overshoot relative to the bound; a zero bound has no scale, so the raw
// amount is used.
double normalized(double over, double bound) {
  if (over == 0.0) return 0.0;
  return bound > 0.0 ? over / bound : over;
}

bool CostReport::feasible() const {
  return std::all_of(violation.begin(), violation.end(), [](double c) { return c == 0.0; });
}

double du_cost(const BsProfile& p, Split split, const SplitTable& splits) {
  return p.vm_cost_du + p.compute_cost_du * p.lambda_mbps * splits[index_of(split)].rho_du;
}

double cu_share(const BsProfile& p, Split split, const SystemParams& params) {
  return params.vm_cost_cu + p.lambda_mbps * params.compute_cost_cu * params.splits[index_of(split)].rho_cu;
}

double cu_cost(std::span<const Split> assignment, std::span<const BsProfile> profiles, const SystemParams& params) {
  if (assignment.size() != profiles.size()) throw InputError("assignment length does not match DU count");
  double v0 = 0.0;
  for (std::size_t n = 0; n < profiles.size(); ++n) v0 += cu_share(profiles[n], assignment[n], params);
  return v0;
}

double routing_cost(const BsProfile& p, const RoutePath& route, Split split, double scale) {
  return scale * route.total_routing_cost * flow_of(split, p.lambda_mbps);
}

double option_cost(const BsProfile& p, const RoutePath& route, Split split, const SystemParams& params) {
  return du_cost(p, split, params.splits) + routing_cost(p, route, split, params.routing_cost_scale) +
         cu_share(p, split, params);
}

CostReport evaluate(std::span<const Split> assignment, std::span<const BsProfile> profiles,
                    const SystemParams& params, const Topology& topology, EvalMode mode) {
  const std::size_t n = profiles.size();
  if (assignment.size() != n) {
    throw InputError("assignment covers " + std::to_string(assignment.size()) + " DUs, instance has " +
                     std::to_string(n));
  }
  CostReport r;
  r.du_cost.resize(n);
  r.cu_share.resize(n);
  r.routing_cost.resize(n);

  std::vector<double> link_load(topology.links.size(), 0.0);
  double cu_load = 0.0;
  double du_raw = 0.0;
  double du_norm = 0.0;
  double delay_raw = 0.0;
  double delay_norm = 0.0;
  double sum_du_and_route = 0.0;

  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = profiles[i];
    const Split s = assignment[i];
    const auto& opt = params.splits[index_of(s)];
    if (p.route >= topology.paths.size()) throw InputError("profile route index out of range");
    const auto& route = topology.paths[p.route];

    r.du_cost[i] = du_cost(p, s, params.splits);
    r.cu_share[i] = cu_share(p, s, params);
    r.routing_cost[i] = routing_cost(p, route, s, params.routing_cost_scale);
    sum_du_and_route += r.du_cost[i] + r.routing_cost[i];
    r.cu_cost += r.cu_share[i];

    cu_load += p.lambda_mbps * opt.rho_cu;

    const double du_over = overshoot(p.lambda_mbps * opt.rho_du, p.du_capacity_rc);
    du_raw += du_over;
    du_norm += normalized(du_over, p.du_capacity_rc);

    const double bound_us = 1000.0 * opt.delay_bound_ms;
    const double delay_over = overshoot(route.total_delay_us, bound_us);
    delay_raw += delay_over;
    delay_norm += normalized(delay_over, bound_us);

    const double flow = flow_of(s, p.lambda_mbps);
    for (int l : route.links) link_load[static_cast<std::size_t>(l)] += flow;
  }

  double link_raw = 0.0;
  double link_norm = 0.0;
  for (std::size_t l = 0; l < link_load.size(); ++l) {
    const double over = overshoot(link_load[l], topology.links[l].capacity_mbps);
    link_raw += over;
    link_norm += normalized(over, topology.links[l].capacity_mbps);
  }
  const double cu_over = overshoot(cu_load, params.cu_capacity_rc);

  r.raw_violation = {cu_over, du_raw, link_raw, delay_raw};
  r.violation = {normalized(cu_over, params.cu_capacity_rc), du_norm, link_norm, delay_norm};
  r.total = sum_du_and_route + r.cu_cost;

  if (mode == EvalMode::Penalized) {
    for (std::size_t f = 0; f < kConstraintCount; ++f) r.penalty += params.mu[f] * r.violation[f];
    r.penalty_charged = true;
  } else {
    r.penalty_charged = false;
  }
  r.penalized = r.total + r.penalty;
  return r;
}

CostReport evaluate(std::span<const Split> assignment, const Scenario& scenario, EvalMode mode) {
  return evaluate(assignment, scenario.profiles, scenario.params, *scenario.topology, mode);
}

Assignment dran_assignment(std::size_t n) { return Assignment(n, Split::S0); }
Assignment cran_assignment(std::size_t n) { return Assignment(n, Split::S3); }

std::vector<BsProfile> make_profiles(const Topology& topology, const ProfileDefaults& d) {
  std::vector<BsProfile> out;
  for (std::size_t k = 0; k < topology.paths.size(); ++k) {
    BsProfile p;
    p.du_id = topology.paths[k].du;
    p.lambda_mbps = d.lambda_mbps;
    p.vm_cost_du = d.vm_cost_du;
    p.compute_cost_du = d.compute_cost_du;
    p.du_capacity_rc = d.du_capacity_rc;
    p.route = k;
    out.push_back(p);
  }
  return out;
}

PenaltyWeights default_penalty_weights(std::span<const BsProfile> profiles, const SystemParams& params,
                                       const Topology& topology) {
  const auto dran = dran_assignment(profiles.size());
  const double j = evaluate(dran, profiles, params, topology).total;
  return {j, j, j, j};
}

Scenario rescale_scenario(const Scenario& base, double lambda_mbps, double routing_cost_scale,
                          bool recompute_penalty) {
  Scenario s = base;
  for (auto& p : s.profiles) p.lambda_mbps = lambda_mbps;
  s.params.routing_cost_scale = routing_cost_scale;
  if (recompute_penalty) s.params.mu = default_penalty_weights(s.profiles, s.params, *s.topology);
  return s;
}

void write_cost_report_csv(std::ostream& out, const CostReport& r, std::span<const Split> assignment,
                           const Scenario& scenario) {
  out << "row,du_id,split,lambda_mbps,flow_mbps,path_delay_us,du_cost,cu_cost,routing_cost,total_cost,"
         "viol_cu_capacity,viol_du_capacity,viol_link_capacity,viol_delay,penalty,penalized_cost\n";
  double du_sum = 0.0;
  double route_sum = 0.0;
  for (std::size_t i = 0; i < scenario.size(); ++i) {
    const auto& p = scenario.profiles[i];
    const auto& route = scenario.route(i);
    du_sum += r.du_cost[i];
    route_sum += r.routing_cost[i];
    out << i << ',' << p.du_id << ',' << to_string(assignment[i]) << ',' << format_double(p.lambda_mbps) << ','
        << format_double(flow_of(assignment[i], p.lambda_mbps)) << ',' << format_double(route.total_delay_us)
        << ',' << format_double(r.du_cost[i]) << ',' << format_double(r.cu_share[i]) << ','
        << format_double(r.routing_cost[i]) << ','
        << format_double(r.du_cost[i] + r.cu_share[i] + r.routing_cost[i]) << ",,,,,,\n";
  }
  out << "total,,,,,," << format_double(du_sum) << ',' << format_double(r.cu_cost) << ','
      << format_double(route_sum) << ',' << format_double(r.total);
  for (double c : r.violation) out << ',' << format_double(c);
  out << ',' << format_double(r.penalty) << ',' << format_double(r.penalized) << '\n';
}

Assignment assignment_from_string(const std::string& text) {
  Assignment a;
  for (char c : text) {
    if (c < '0' || c > '3') throw InputError("split digits must be 0-3");
    a.push_back(split_from_index(static_cast<std::size_t>(c - '0')));
  }
  return a;
}

std::string assignment_to_string(std::span<const Split> assignment) {
  std::string s;
  for (Split x : assignment) s.push_back(static_cast<char>('0' + index_of(x)));
  return s;
}

}  // namespace vransplit
