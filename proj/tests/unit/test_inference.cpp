#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "vransplit/error.hpp"
#include "vransplit/inference.hpp"
#include "vransplit/rng.hpp"
#include "vransplit/tape.hpp"
#include "vransplit/trainer.hpp"

using namespace vransplit;
using fixtures::StarDu;

namespace {

CostReport report_with(double J, double xi) {
  CostReport r;
  r.total = J;
  r.penalty = xi;
  r.penalized = J + xi;
  if (xi > 0.0) r.violation[0] = 1.0;
  return r;
}

Rollout sample_once(const Policy& p, const Scenario& s, const FeatureScales& sc, double temperature,
                    std::uint64_t seed) {
  Tape t(p.params());
  const auto enc = p.encode(t, featurize(s, sc));
  DecodeOptions o;
  o.temperature = temperature;
  o.log_prob = LogProbMode::Tempered;
  Rng rng(seed);
  return p.decode(t, enc, o, rng);
}

Scenario s0_bandit() {
  SystemParams params;
  params.cu_capacity_rc = 0.01;
  auto s = fixtures::star_scenario({{500.0, 1e4, 0.0005, 100.0}}, params);
  s.params.mu = default_penalty_weights(s.profiles, s.params, *s.topology);
  return s;
}

}  // namespace

TEST_SUITE("inference") {

TEST_CASE("candidate ordering") {
  const Assignment a{Split::S0}, b{Split::S1};
  CHECK(better_candidate(report_with(10, 0), a, report_with(5, 1), b));
  CHECK(better_candidate(report_with(5, 0), b, report_with(6, 0), a));
  CHECK(better_candidate(report_with(5, 3), b, report_with(4, 5), a));
  CHECK(better_candidate(report_with(5, 0), a, report_with(5, 0), b));
  CHECK_FALSE(better_candidate(report_with(5, 0), b, report_with(5, 0), a));
}

TEST_CASE("config validation") {
  SearchConfig c;
  CHECK_NOTHROW(validate_search_config(c));
  CHECK(c.sample_count == 1280);
  CHECK(c.temperature == 1.5);
  CHECK(c.temperatures == std::vector<double>{0.5, 1.0, 1.5, 2.0, 2.5});
  c.temperatures = {1.0, 0.0};
  CHECK_THROWS_AS(validate_search_config(c), ConfigError);
  c = {};
  c.sample_count = 0;
  c.include_greedy = false;
  CHECK_THROWS_AS(validate_search_config(c), ConfigError);
}

TEST_CASE("one sample plus greedy under a uniform policy returns the better of the two") {
  const Policy uniform(PolicyConfig{8, 8});
  auto s = fixtures::random_instance(5, 3);
  const auto sc = feature_scales(s);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto r = search_at(uniform, s, sc, 1, 1.0, true, seed);
    const Assignment greedy = dran_assignment(5);  // ties resolve to index 0
    const Assignment sampled = sample_once(uniform, s, sc, 1.0, seed).splits;
    const auto rg = evaluate(greedy, s);
    const auto rs = evaluate(sampled, s);
    const Assignment& expected = better_candidate(rg, greedy, rs, sampled) ? greedy : sampled;
    CHECK(r.best == expected);
    CHECK(r.samples_evaluated == 2);
  }
}

TEST_CASE("sample sets are nested across counts") {
  Policy p(PolicyConfig{8, 8});
  Rng init(4);
  p.initialize(init);
  const auto s = fixtures::random_instance(6, 4);
  const auto sc = feature_scales(s);
  const auto small = search_at(p, s, sc, 50, 1.5, false, 9);
  const auto large = search_at(p, s, sc, 400, 1.5, false, 9);
  CHECK_FALSE(better_candidate(small.report, small.best, large.report, large.best));
  CHECK(large.samples_evaluated == 400);
}

TEST_CASE("temperature sweep evaluates every pass and is deterministic") {
  Policy p(PolicyConfig{8, 8});
  Rng init(5);
  p.initialize(init);
  const auto s = fixtures::random_instance(5, 5);
  const auto sc = feature_scales(s);
  SearchConfig c;
  c.sample_count = 40;
  const auto a = search(p, s, sc, c);
  const auto b = search(p, s, sc, c);
  CHECK(a.best == b.best);
  CHECK(a.samples_evaluated == 5 * 40 + 1);
  CHECK(a.feasible_fraction >= 0.0);
  CHECK(a.feasible_fraction <= 1.0);
  bool known = a.temperature == 0.0;
  for (double t : c.temperatures) known = known || a.temperature == t;
  CHECK(known);
}

TEST_CASE("higher temperature gives at least as many distinct assignments") {
  const auto s = fixtures::random_instance(5, 6);
  const auto sc = feature_scales(s);
  const auto f = featurize(s, sc);
  int wins = 0;
  double hot_total = 0.0, cold_total = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Policy p(PolicyConfig{8, 8});
    Rng init(seed);
    p.initialize(init);
    auto& head = p.params()[p.params().id_of("head.w")].value.values;
    for (double& w : head) w *= 6.0;
    auto distinct = [&](double temperature) {
      Tape t(p.params());
      const auto enc = p.encode(t, f);
      const auto mark = t.mark();
      DecodeOptions o;
      o.temperature = temperature;
      Rng rng(mix_seed(seed, 1));
      std::set<std::string> seen;
      for (int k = 0; k < 1000; ++k) {
        seen.insert(assignment_to_string(p.decode(t, enc, o, rng).splits));
        t.rewind(mark);
      }
      return static_cast<double>(seen.size());
    };
    const double hot = distinct(2.0), cold = distinct(0.5);
    hot_total += hot;
    cold_total += cold;
    wins += hot >= cold;
  }
  CHECK(hot_total > cold_total);
  CHECK(wins >= 18);
}

TEST_CASE("a policy trained to the single-BS optimum is found with zero gap") {
  const auto inst = make_training_instance(s0_bandit());
  TrainConfig c;
  c.epochs = 2000;
  c.seed = 3;
  Trainer t({inst}, c);
  t.initialize();
  double mass = 0.0;
  while (t.epoch() < c.epochs && mass < 0.99) {
    t.train_epoch();
    Tape tape(t.policy().params());
    const auto enc = t.policy().encode(tape, featurize(inst.scenario, inst.scales));
    DecodeOptions o;
    const Assignment s0{Split::S0};
    o.forced = s0;
    Rng unused(0);
    mass = std::exp(t.policy().decode(tape, enc, o, unused).log_prob);
  }
  REQUIRE(mass >= 0.99);

  const auto r = search(t.policy(), inst.scenario, inst.scales, SearchConfig{});
  CHECK(r.best == Assignment{Split::S0});
  const std::vector<SuiteInstance> suite{{"bandit", inst.scenario}};
  const auto rows = evaluate_suite(t.policy(), suite, inst.scales, SearchConfig{});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].oracle_optimal);
  CHECK(rows[0].search_feasible);
  CHECK(rows[0].gap_percent == 0.0);
  CHECK(rows[0].J_dran == rows[0].J_search);
}

TEST_CASE("suite rows carry D-RAN and reference-only C-RAN costs") {
  Policy p(PolicyConfig{8, 8});
  Rng init(6);
  p.initialize(init);
  std::vector<SuiteInstance> suite;
  for (std::uint64_t k = 1; k <= 3; ++k) suite.push_back({"i" + std::to_string(k), fixtures::random_instance(4, k)});
  SearchConfig c;
  c.sample_count = 30;
  const auto rows = evaluate_suite(p, suite, feature_scales(suite[0].scenario), c);
  REQUIRE(rows.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& s = suite[k].scenario;
    CHECK(rows[k].J_dran == evaluate(dran_assignment(4), s).total);
    CHECK(rows[k].J_cran_reference == evaluate(cran_assignment(4), s).total);
    if (rows[k].oracle_optimal && rows[k].search_feasible) {
      CHECK(rows[k].gap_percent >= 0.0);
      CHECK(rows[k].gap_percent == doctest::Approx(100.0 * (rows[k].J_search - rows[k].J_opt) / rows[k].J_opt));
    }
  }
}

TEST_CASE("gap summary and CSV") {
  std::vector<GapRow> rows(3);
  rows[0] = {"a", 11.0, 10.0, 10.0, 20.0, 30.0, true, true, 1.0, {Split::S0}, {Split::S1}};
  rows[1] = {"b", 10.0, 10.0, 0.0, 20.0, 30.0, true, true, 0.0, {Split::S1}, {Split::S1}};
  rows[2] = {"c", 50.0, 0.0, 0.0, 20.0, 30.0, false, false, 2.0, {Split::S2}, {}};
  const auto g = summarize(rows);
  CHECK(g.rows == 3);
  CHECK(g.counted == 2);
  CHECK(g.mean_gap_percent == doctest::Approx(5.0));
  CHECK(g.max_gap_percent == 10.0);
  std::ostringstream out;
  write_gap_csv(out, rows);
  std::istringstream in(out.str());
  std::string header, line;
  std::getline(in, header);
  CHECK(header ==
        "instance_id,J_search,J_opt,gap_percent,J_dran,J_cran_reference,oracle_status,search_feasible,"
        "search_temperature,search_assignment,oracle_assignment");
  std::getline(in, line);
  CHECK(line == "a,11,10,10,20,30,Optimal,true,1,0,1");
  std::getline(in, line);
  std::getline(in, line);
  CHECK(line == "c,50,,,20,30,Infeasible,false,2,2,");
}

TEST_CASE("assignment JSON is keyed by DU id") {
  const auto s = fixtures::star_scenario({{100.0}, {200.0}});
  const Assignment a{Split::S2, Split::S0};
  CHECK(assignment_to_json(a, s).find("\"1\": \"S2\"") != std::string::npos);
  CHECK_THROWS_AS(assignment_to_json(Assignment{Split::S0}, s), InputError);
}

}
