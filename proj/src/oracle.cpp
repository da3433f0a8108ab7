#include "vransplit/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "vransplit/error.hpp"
#include "vransplit/format.hpp"

namespace vransplit {

namespace {

// Costs closer than this are treated as equal, so the lexicographic
// tie-break is stable against summation-order rounding.
double tie_tolerance(double cost) { return 1e-9 * std::max(1.0, std::abs(cost)); }

bool lex_less(std::span<const Split> a, std::span<const Split> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

struct Incumbent {
  bool found = false;
  double cost = 0.0;
  Assignment assignment;

  // Returns true when the candidate replaces the incumbent.
  bool offer(double candidate_cost, std::span<const Split> candidate) {
    if (found) {
      const double tol = tie_tolerance(cost);
      if (candidate_cost > cost + tol) return false;
      if (candidate_cost >= cost - tol && !lex_less(candidate, assignment)) return false;
    }
    found = true;
    cost = candidate_cost;
    assignment.assign(candidate.begin(), candidate.end());
    return true;
  }
};

OracleResult finish(Incumbent&& inc, std::uint64_t nodes) {
  OracleResult r;
  r.nodes_explored = nodes;
  if (inc.found) {
    r.status = OracleStatus::Optimal;
    r.best_cost = inc.cost;
    r.best_assignment = std::move(inc.assignment);
  }
  return r;
}

struct Candidate {
  Split split;
  double cost;
};

class BranchAndBound {
 public:
  BranchAndBound(std::span<const BsProfile> profiles, const SystemParams& params, const Topology& topology)
      : profiles_(profiles), params_(params), topology_(topology), n_(profiles.size()) {}

  OracleResult run() {
    candidates_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      const auto& p = profiles_[i];
      if (p.route >= topology_.paths.size()) throw InputError("profile route index out of range");
      const auto& route = topology_.paths[p.route];
      for (std::size_t o = 0; o < kSplitCount; ++o) {
        const auto& opt = params_.splits[o];
        // Per-DU computing capacity and delay only involve this DU.
        if (overshoot(p.lambda_mbps * opt.rho_du, p.du_capacity_rc) > 0.0) continue;
        if (overshoot(route.total_delay_us, 1000.0 * opt.delay_bound_ms) > 0.0) continue;
        candidates_[i].push_back({split_from_index(o), option_cost(p, route, split_from_index(o), params_)});
      }
      if (candidates_[i].empty()) return finish(Incumbent{}, 0);
      std::stable_sort(candidates_[i].begin(), candidates_[i].end(),
                       [](const Candidate& a, const Candidate& b) { return a.cost < b.cost; });
    }

    order_.resize(n_);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
      return profiles_[a].lambda_mbps > profiles_[b].lambda_mbps;
    });

    suffix_bound_.assign(n_ + 1, 0.0);
    for (std::size_t k = n_; k-- > 0;) {
      suffix_bound_[k] = suffix_bound_[k + 1] + candidates_[order_[k]].front().cost;
    }

    link_load_.assign(topology_.links.size(), 0.0);
    current_.assign(n_, Split::S0);
    cu_load_ = 0.0;
    if (n_ == 0) {
      incumbent_.offer(evaluate(current_, profiles_, params_, topology_).total, current_);
    } else {
      descend(0, 0.0);
    }
    return finish(std::move(incumbent_), nodes_);
  }

 private:
  void descend(std::size_t depth, double accumulated) {
    const std::size_t du = order_[depth];
    const auto& p = profiles_[du];
    const auto& route = topology_.paths[p.route];
    for (const auto& cand : candidates_[du]) {
      ++nodes_;
      const double bound = accumulated + cand.cost + suffix_bound_[depth + 1];
      // Candidates are sorted by cost, so later ones cannot do better.
      if (incumbent_.found && bound > incumbent_.cost + tie_tolerance(incumbent_.cost)) break;

      const auto& opt = params_.splits[index_of(cand.split)];
      const double cu_load = cu_load_ + p.lambda_mbps * opt.rho_cu;
      if (overshoot(cu_load, params_.cu_capacity_rc) > 0.0) continue;
      const double flow = flow_of(cand.split, p.lambda_mbps);
      bool links_ok = true;
      for (int l : route.links) {
        const auto li = static_cast<std::size_t>(l);
        if (overshoot(link_load_[li] + flow, topology_.links[li].capacity_mbps) > 0.0) {
          links_ok = false;
          break;
        }
      }
      if (!links_ok) continue;

      // Apply, remembering exact previous loads for restoration.
      const double saved_cu = cu_load_;
      std::vector<double> restore;
      restore.reserve(route.links.size());
      for (int l : route.links) restore.push_back(link_load_[static_cast<std::size_t>(l)]);
      cu_load_ = cu_load;
      for (int l : route.links) link_load_[static_cast<std::size_t>(l)] += flow;
      current_[du] = cand.split;

      if (depth + 1 == n_) {
        const auto report = evaluate(current_, profiles_, params_, topology_);
        if (report.feasible()) incumbent_.offer(report.total, current_);
      } else {
        descend(depth + 1, accumulated + cand.cost);
      }

      cu_load_ = saved_cu;
      for (std::size_t h = 0; h < route.links.size(); ++h) {
        link_load_[static_cast<std::size_t>(route.links[h])] = restore[h];
      }
    }
  }

  std::span<const BsProfile> profiles_;
  const SystemParams& params_;
  const Topology& topology_;
  std::size_t n_;
  std::vector<std::vector<Candidate>> candidates_;
  std::vector<std::size_t> order_;
  std::vector<double> suffix_bound_;
  std::vector<double> link_load_;
  double cu_load_ = 0.0;
  Assignment current_;
  Incumbent incumbent_;
  std::uint64_t nodes_ = 0;
};

}  // namespace

std::string to_string(OracleStatus status) { return status == OracleStatus::Optimal ? "Optimal" : "Infeasible"; }

OracleResult solve_exhaustive(std::span<const BsProfile> profiles, const SystemParams& params,
                              const Topology& topology) {
  const std::size_t n = profiles.size();
  if (n > kExhaustiveLimit) {
    throw SizeError("exhaustive search supports at most " + std::to_string(kExhaustiveLimit) + " DUs, got " +
                    std::to_string(n));
  }
  Incumbent inc;
  std::uint64_t nodes = 0;
  Assignment a(n, Split::S0);
  // Counting with DU 0 as the most significant digit visits assignments
  // in lexicographic order, so the first of equal-cost optima is kept.
  while (true) {
    ++nodes;
    const auto report = evaluate(a, profiles, params, topology);
    if (report.feasible()) {
      if (!inc.found || report.total < inc.cost - tie_tolerance(inc.cost)) {
        inc.found = true;
        inc.cost = report.total;
        inc.assignment = a;
      }
    }
    std::size_t k = n;
    while (k > 0) {
      --k;
      const auto next = index_of(a[k]) + 1;
      if (next < kSplitCount) {
        a[k] = split_from_index(next);
        break;
      }
      a[k] = Split::S0;
      if (k == 0) return finish(std::move(inc), nodes);
    }
    if (n == 0) return finish(std::move(inc), nodes);
  }
}

OracleResult solve_bnb(std::span<const BsProfile> profiles, const SystemParams& params, const Topology& topology,
                       const BnbOptions& options) {
  if (profiles.size() > options.max_dus) {
    throw SizeError("branch-and-bound limit is " + std::to_string(options.max_dus) + " DUs, got " +
                    std::to_string(profiles.size()));
  }
  return BranchAndBound(profiles, params, topology).run();
}

OracleResult solve_exhaustive(const Scenario& s) { return solve_exhaustive(s.profiles, s.params, *s.topology); }

OracleResult solve_bnb(const Scenario& s, const BnbOptions& options) {
  return solve_bnb(s.profiles, s.params, *s.topology, options);
}

std::string oracle_result_to_json(const OracleResult& r) {
  nlohmann::json j;
  j["status"] = to_string(r.status);
  j["best_cost"] = r.best_cost;
  j["nodes_explored"] = r.nodes_explored;
  j["best_assignment"] = assignment_to_string(r.best_assignment);
  return j.dump(1);
}

void write_oracle_csv_line(std::ostream& out, const std::string& instance_id, const OracleResult& r,
                           double wall_seconds) {
  out << instance_id << ',' << format_double(r.best_cost) << ',' << to_string(r.status) << ',' << r.nodes_explored
      << ',' << format_double(wall_seconds) << '\n';
}

}  // namespace vransplit
