#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "vransplit/error.hpp"
#include "vransplit/vran_model.hpp"

using namespace vransplit;
using fixtures::StarDu;

namespace {

// Split table constants written out independently of the library.
constexpr double kRhoDu[4] = {0.05, 0.04, 0.00325, 0.0};
constexpr double kRhoCu[4] = {0.0, 0.001, 0.00175, 0.05};
constexpr double kBoundUs[4] = {30000.0, 30000.0, 2000.0, 250.0};

double flow(int s, double lambda) {
  if (s == 3) return 2500.0;
  if (s == 2) return 1.02 * lambda + 1.5;
  return lambda;
}

struct Recomputed {
  double J = 0.0;
  std::array<double, 4> C{};
};

Recomputed recompute(const Assignment& a, const Scenario& s) {
  Recomputed r;
  const auto& t = *s.topology;
  std::vector<double> link_load(t.links.size(), 0.0);
  double cu_load = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int k = static_cast<int>(a[i]);
    const auto& p = s.profiles[i];
    const auto& path = t.paths[p.route];
    const double v_n = p.vm_cost_du + p.compute_cost_du * p.lambda_mbps * kRhoDu[k];
    const double u_n = s.params.routing_cost_scale * path.total_routing_cost * flow(k, p.lambda_mbps);
    const double cu = s.params.vm_cost_cu + s.params.compute_cost_cu * p.lambda_mbps * kRhoCu[k];
    r.J += v_n + u_n + cu;
    cu_load += p.lambda_mbps * kRhoCu[k];
    const double du_load = p.lambda_mbps * kRhoDu[k];
    if (du_load > p.du_capacity_rc * (1 + 1e-9)) r.C[1] += (du_load - p.du_capacity_rc) / p.du_capacity_rc;
    if (path.total_delay_us > kBoundUs[k] * (1 + 1e-9)) r.C[3] += (path.total_delay_us - kBoundUs[k]) / kBoundUs[k];
    for (int l : path.links) link_load[static_cast<std::size_t>(l)] += flow(k, p.lambda_mbps);
  }
  for (std::size_t l = 0; l < link_load.size(); ++l) {
    const double c = t.links[l].capacity_mbps;
    if (link_load[l] > c * (1 + 1e-9)) r.C[2] += (link_load[l] - c) / c;
  }
  const double h0 = s.params.cu_capacity_rc;
  if (cu_load > h0 * (1 + 1e-9)) r.C[0] = (cu_load - h0) / h0;
  return r;
}

BsProfile profile(double lambda, double alpha = 1.0, double beta = 1.0) {
  BsProfile p;
  p.lambda_mbps = lambda;
  p.vm_cost_du = alpha;
  p.compute_cost_du = beta;
  return p;
}

}  // namespace

TEST_SUITE("vran_model") {

TEST_CASE("flow per split") {
  CHECK(flow_of(Split::S3, 150.0) == 2500.0);
  CHECK(flow_of(Split::S0, 0.0) == 0.0);
  CHECK(flow_of(Split::S2, 150.0) == doctest::Approx(154.5));
  CHECK(flow_of(Split::S1, 80.0) == 80.0);
}

TEST_CASE("split table constants") {
  const auto t = default_split_table();
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(t[k].rho_du == kRhoDu[k]);
    CHECK(t[k].rho_cu == kRhoCu[k]);
    CHECK(1000.0 * t[k].delay_bound_ms == kBoundUs[k]);
  }
}

TEST_CASE("DU cost") {
  CHECK(du_cost(profile(150.0), Split::S0) == doctest::Approx(8.5));
  for (double lambda : {0.0, 37.0, 150.0}) CHECK(du_cost(profile(lambda, 2.5, 3.0), Split::S3) == 2.5);
  for (std::size_t k = 0; k < 4; ++k) CHECK(du_cost(profile(0.0, 1.75), split_from_index(k)) == 1.75);
}

TEST_CASE("CU cost") {
  SystemParams params;
  const std::vector<BsProfile> one{profile(150.0)};
  const Assignment s3{Split::S3};
  CHECK(cu_cost(s3, one, params) == doctest::Approx(0.6275));

  const std::vector<BsProfile> three{profile(150.0), profile(20.0), profile(80.0)};
  CHECK(cu_cost(dran_assignment(3), three, params) == doctest::Approx(1.5));
  const std::vector<BsProfile> idle{profile(0.0), profile(0.0)};
  CHECK(cu_cost(Assignment{Split::S2, Split::S3}, idle, params) == doctest::Approx(1.0));
}

TEST_CASE("routing cost") {
  RoutePath r;
  r.total_routing_cost = 0.001;
  CHECK(routing_cost(profile(150.0), r, Split::S3) == doctest::Approx(2.5));
  r.total_routing_cost = 0.0;
  for (std::size_t k = 0; k < 4; ++k) CHECK(routing_cost(profile(150.0), r, split_from_index(k)) == 0.0);
  r.total_routing_cost = 0.0005;
  CHECK(routing_cost(profile(150.0), r, Split::S0) == doctest::Approx(0.075));
  CHECK(routing_cost(profile(150.0), r, Split::S0, 0.5) == doctest::Approx(0.0375));
}

TEST_CASE("D-RAN is feasible when DU capacity and delay allow it") {
  const auto s = fixtures::star_scenario({{500.0, 1e4, 0.0003, 150.0}, {9000.0, 1e4, 0.0001, 60.0}});
  const auto r = evaluate(dran_assignment(2), s);
  CHECK(r.feasible());
  CHECK(r.penalty == 0.0);
  CHECK(r.penalized == r.total);
}

TEST_CASE("S3 over a 0.3 ms path overshoots the delay bound by 50 us") {
  SystemParams params;
  params.mu = {1.0, 1.0, 1.0, 1.0};
  const auto s = fixtures::star_scenario({{300.0, 1e4, 0.0, 100.0}}, params);
  const auto r = evaluate(cran_assignment(1), s);
  CHECK(r.raw_violation[3] == doctest::Approx(50.0));
  CHECK(r.violation[3] == doctest::Approx(0.2));
  CHECK_FALSE(r.feasible());
  CHECK(r.penalty == doctest::Approx(0.2));
  CHECK(r.penalized == doctest::Approx(r.total + 0.2));
}

TEST_CASE("load exactly at capacity is feasible") {
  // S0 at 150 Mbps uses 7.5 reference cores, the default H_n.
  const auto s = fixtures::star_scenario({{100.0, 150.0, 0.0, 150.0}});
  CHECK(evaluate(dran_assignment(1), s).feasible());
  CHECK(overshoot(7.5 * (1 + 1e-12), 7.5) == 0.0);
  CHECK(overshoot(7.6, 7.5) == doctest::Approx(0.1));
}

TEST_CASE("zero CU capacity") {
  SystemParams params;
  params.cu_capacity_rc = 0.0;
  const auto s = fixtures::star_scenario({{100.0, 1e6, 0.0, 100.0}}, params);
  const auto d = evaluate(dran_assignment(1), s);
  CHECK(d.feasible());
  CHECK(d.violation[0] == 0.0);
  // No scale to normalize by: the raw 5 RC is reported.
  const auto c = evaluate(cran_assignment(1), s);
  CHECK(c.violation[0] == doctest::Approx(5.0));
  CHECK(std::isfinite(c.penalty));
}

TEST_CASE("evaluation matches an independent recomputation on random instances") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto s = fixtures::random_instance(6, seed);
    s.params.routing_cost_scale = 0.3 + 0.05 * static_cast<double>(seed);
    Rng rng(seed);
    for (int trial = 0; trial < 20; ++trial) {
      Assignment a;
      for (std::size_t i = 0; i < 6; ++i) a.push_back(split_from_index(rng.index(4)));
      const auto r = evaluate(a, s);
      const auto expected = recompute(a, s);
      CHECK(r.total == doctest::Approx(expected.J).epsilon(1e-12));
      double xi = 0.0;
      for (std::size_t f = 0; f < 4; ++f) {
        CHECK(r.violation[f] == doctest::Approx(expected.C[f]).epsilon(1e-12));
        xi += s.params.mu[f] * expected.C[f];
      }
      CHECK(r.penalty == doctest::Approx(xi).epsilon(1e-12));
      CHECK(r.penalized == doctest::Approx(r.total + r.penalty).epsilon(1e-12));
      CHECK(r.feasible() == (xi == 0.0));
    }
  }
}

TEST_CASE("cost report totals are the sum of their parts") {
  const auto s = fixtures::random_instance(5, 3);
  const Assignment a{Split::S0, Split::S1, Split::S2, Split::S3, Split::S1};
  const auto r = evaluate(a, s);
  double sum = r.cu_cost;
  double shares = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    sum += r.du_cost[i] + r.routing_cost[i];
    shares += r.cu_share[i];
    CHECK(r.du_cost[i] == doctest::Approx(du_cost(s.profiles[i], a[i])));
  }
  CHECK(r.total == doctest::Approx(sum));
  CHECK(r.cu_cost == doctest::Approx(shares));
}

TEST_CASE("reference assignments") {
  CHECK(dran_assignment(3) == Assignment{Split::S0, Split::S0, Split::S0});
  CHECK(cran_assignment(2) == Assignment{Split::S3, Split::S3});
}

TEST_CASE("reference mode reports L = J without charging the penalty") {
  SystemParams params;
  params.mu = {10.0, 10.0, 10.0, 10.0};
  const auto s = fixtures::star_scenario({{3000.0, 100.0, 0.0001, 150.0}, {3000.0, 100.0, 0.0001, 150.0}}, params);
  const auto charged = evaluate(cran_assignment(2), s);
  const auto ref = evaluate(cran_assignment(2), s, EvalMode::Reference);
  CHECK(charged.penalty > 0.0);
  CHECK_FALSE(ref.penalty_charged);
  CHECK(ref.penalized == ref.total);
  CHECK(ref.total == charged.total);
  CHECK(ref.violation == charged.violation);
}

TEST_CASE("default penalty weights equal the D-RAN cost") {
  const auto s = fixtures::random_instance(6, 8);
  const double j = evaluate(dran_assignment(6), s).total;
  for (double mu : default_penalty_weights(s.profiles, s.params, *s.topology)) CHECK(mu == j);
}

TEST_CASE("rescaling sets every lambda and the routing scale") {
  auto base = fixtures::random_instance(4, 2);
  const auto s = rescale_scenario(base, 42.0, 0.25, true);
  for (const auto& p : s.profiles) CHECK(p.lambda_mbps == 42.0);
  CHECK(s.params.routing_cost_scale == 0.25);
  const double j = evaluate(dran_assignment(4), s).total;
  CHECK(s.params.mu[0] == j);
  const auto kept = rescale_scenario(base, 42.0, 0.25, false);
  CHECK(kept.params.mu == base.params.mu);
}

TEST_CASE("assignment length mismatch is an input error") {
  const auto s = fixtures::random_instance(3, 1);
  CHECK_THROWS_AS(evaluate(dran_assignment(2), s), InputError);
}

TEST_CASE("assignment text round trip") {
  const Assignment a{Split::S0, Split::S3, Split::S2, Split::S1};
  CHECK(assignment_to_string(a) == "0321");
  CHECK(assignment_from_string("0321") == a);
  CHECK_THROWS(assignment_from_string("04"));
}

TEST_CASE("cost report CSV has a row per DU plus totals") {
  const auto s = fixtures::random_instance(3, 5);
  std::ostringstream out;
  write_cost_report_csv(out, evaluate(dran_assignment(3), s), dran_assignment(3), s);
  const std::string text = out.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 5);
}

}
