#include "vransplit/inference.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <json.hpp>

#include "vransplit/error.hpp"
#include "vransplit/format.hpp"
#include "vransplit/rng.hpp"

namespace vransplit {

namespace {

struct Best {
  bool found = false;
  Assignment splits;
  CostReport report;
  double temperature = 0.0;

  void offer(Assignment&& a, CostReport&& r, double t) {
    if (found && !better_candidate(r, a, report, splits)) return;
    found = true;
    splits = std::move(a);
    report = std::move(r);
    temperature = t;
  }
};

struct Tally {
  std::size_t evaluated = 0;
  std::size_t feasible = 0;
};

void run_samples(const Policy& policy, const Scenario& scenario, const FeatureScales& scales,
                 std::size_t count, double temperature, bool greedy, std::uint64_t seed, Best& best, Tally& tally) {
  Tape tape(policy.params());
  const auto features = featurize(scenario, scales);
  const auto enc = policy.encode(tape, features);
  const std::size_t mark = tape.mark();
  Rng rng(seed);

  auto consider = [&](Rollout&& r, double t) {
    auto report = evaluate(r.splits, scenario);
    ++tally.evaluated;
    if (report.feasible()) ++tally.feasible;
    best.offer(std::move(r.splits), std::move(report), t);
    tape.rewind(mark);
  };

  if (greedy) {
    DecodeOptions g;
    g.mode = SampleMode::Greedy;
    consider(policy.decode(tape, enc, g, rng), 0.0);
  }
  DecodeOptions s;
  s.mode = SampleMode::Sample;
  s.temperature = temperature;
  s.log_prob = LogProbMode::Tempered;
  for (std::size_t k = 0; k < count; ++k) consider(policy.decode(tape, enc, s, rng), temperature);
}

SearchResult finish(Best&& best, const Tally& tally) {
  SearchResult r;
  r.best = std::move(best.splits);
  r.report = std::move(best.report);
  r.temperature = best.temperature;
  r.samples_evaluated = tally.evaluated;
  r.feasible_fraction =
      tally.evaluated == 0 ? 0.0 : static_cast<double>(tally.feasible) / static_cast<double>(tally.evaluated);
  return r;
}

}  // namespace

void validate_search_config(const SearchConfig& c) {
  if (c.sample_count == 0 && !c.include_greedy) throw ConfigError("search.sample_count must be at least 1");
  if (c.temperatures.empty() && !(c.temperature > 0.0)) throw ConfigError("search.temperature must be positive");
  for (double t : c.temperatures) {
    if (!(t > 0.0)) throw ConfigError("search temperatures must be positive");
  }
}

bool better_candidate(const CostReport& a, std::span<const Split> sa, const CostReport& b,
                      std::span<const Split> sb) {
  const bool fa = a.feasible();
  const bool fb = b.feasible();
  if (fa != fb) return fa;
  const double ka = fa ? a.total : a.penalized;
  const double kb = fb ? b.total : b.penalized;
  if (ka != kb) return ka < kb;
  return std::lexicographical_compare(sa.begin(), sa.end(), sb.begin(), sb.end());
}

SearchResult search_at(const Policy& policy, const Scenario& scenario, const FeatureScales& scales,
                       std::size_t sample_count, double temperature, bool include_greedy, std::uint64_t seed) {
  if (!(temperature > 0.0)) throw ParameterError("temperature must be positive");
  Best best;
  Tally tally;
  run_samples(policy, scenario, scales, sample_count, temperature, include_greedy, seed, best, tally);
  if (!best.found) throw InputError("search evaluated no candidates");
  return finish(std::move(best), tally);
}

SearchResult search(const Policy& policy, const Scenario& scenario, const FeatureScales& scales,
                    const SearchConfig& config) {
  validate_search_config(config);
  if (config.temperatures.empty()) {
    return search_at(policy, scenario, scales, config.sample_count, config.temperature, config.include_greedy,
                     config.seed);
  }
  Best best;
  Tally tally;
  for (std::size_t i = 0; i < config.temperatures.size(); ++i) {
    run_samples(policy, scenario, scales, config.sample_count, config.temperatures[i],
                config.include_greedy && i == 0, mix_seed(config.seed, i), best, tally);
  }
  if (!best.found) throw InputError("search evaluated no candidates");
  return finish(std::move(best), tally);
}

std::vector<GapRow> evaluate_suite(const Policy& policy, std::span<const SuiteInstance> instances,
                                   const FeatureScales& scales, const SearchConfig& config) {
  std::vector<GapRow> rows;
  rows.reserve(instances.size());
  for (const auto& inst : instances) {
    const auto& s = inst.scenario;
    GapRow row;
    row.instance_id = inst.id;
    const auto found = search(policy, s, scales, config);
    row.J_search = found.report.total;
    row.search_feasible = found.report.feasible();
    row.search_temperature = found.temperature;
    row.search_assignment = found.best;
    const auto opt = solve_bnb(s);
    row.oracle_optimal = opt.status == OracleStatus::Optimal;
    row.J_opt = opt.best_cost;
    row.oracle_assignment = opt.best_assignment;
    if (row.oracle_optimal && row.search_feasible && row.J_opt != 0.0) {
      row.gap_percent = 100.0 * (row.J_search - row.J_opt) / row.J_opt;
    }
    row.J_dran = evaluate(dran_assignment(s.size()), s).total;
    row.J_cran_reference = evaluate(cran_assignment(s.size()), s, EvalMode::Reference).total;
    rows.push_back(std::move(row));
  }
  return rows;
}

GapSummary summarize(std::span<const GapRow> rows) {
  GapSummary g;
  g.rows = rows.size();
  double total = 0.0;
  for (const auto& r : rows) {
    if (!r.oracle_optimal || !r.search_feasible) continue;
    ++g.counted;
    total += r.gap_percent;
    g.max_gap_percent = g.counted == 1 ? r.gap_percent : std::max(g.max_gap_percent, r.gap_percent);
  }
  if (g.counted > 0) g.mean_gap_percent = total / static_cast<double>(g.counted);
  return g;
}

void write_gap_csv(std::ostream& out, std::span<const GapRow> rows) {
  out << "instance_id,J_search,J_opt,gap_percent,J_dran,J_cran_reference,oracle_status,search_feasible,"
         "search_temperature,search_assignment,oracle_assignment\n";
  for (const auto& r : rows) {
    out << r.instance_id << ',' << format_double(r.J_search) << ',';
    if (r.oracle_optimal) {
      out << format_double(r.J_opt) << ',' << (r.search_feasible ? format_double(r.gap_percent) : "") << ',';
    } else {
      out << ",,";
    }
    out << format_double(r.J_dran) << ',' << format_double(r.J_cran_reference) << ','
        << to_string(r.oracle_optimal ? OracleStatus::Optimal : OracleStatus::Infeasible) << ','
        << (r.search_feasible ? "true" : "false") << ',' << format_double(r.search_temperature) << ','
        << assignment_to_string(r.search_assignment) << ',' << assignment_to_string(r.oracle_assignment) << '\n';
  }
}

std::string assignment_to_json(std::span<const Split> assignment, const Scenario& scenario) {
  if (assignment.size() != scenario.size()) throw InputError("assignment length differs from the DU count");
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    j[std::to_string(scenario.profiles[i].du_id)] = to_string(assignment[i]);
  }
  return j.dump(1);
}

}  // namespace vransplit
