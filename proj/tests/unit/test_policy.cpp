#include <doctest.h>

#include <cmath>
#include <map>
#include <memory>

#include "fixtures.hpp"
#include "vransplit/error.hpp"
#include "vransplit/gradcheck.hpp"
#include "vransplit/policy.hpp"
#include "vransplit/rng.hpp"
#include "vransplit/tape.hpp"

using namespace vransplit;
using fixtures::StarDu;

namespace {

Policy random_policy(std::uint64_t seed, PolicyConfig config = {}) {
  Policy p(config);
  Rng rng(seed);
  p.initialize(rng);
  return p;
}

std::vector<Features> some_features(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Features> out(n);
  for (auto& f : out) {
    for (double& x : f) x = rng.uniform();
  }
  return out;
}

Rollout decode_once(const Policy& p, std::span<const Features> f, DecodeOptions opts, Rng& rng) {
  Tape t(p.params());
  const auto enc = p.encode(t, f);
  return p.decode(t, enc, opts, rng);
}

double forced_log_prob(const Policy& p, std::span<const Features> f, const Assignment& a) {
  DecodeOptions opts;
  opts.forced = a;
  Rng unused(0);
  return decode_once(p, f, opts, unused).log_prob;
}

}  // namespace

TEST_SUITE("policy") {

TEST_CASE("uniform lambda gives identical traffic components") {
  const auto s = fixtures::random_instance(5, 4);
  auto u = s;
  for (auto& p : u.profiles) p.lambda_mbps = 80.0;
  const auto f = featurize(u, feature_scales(u));
  for (const auto& x : f) CHECK(x[0] == f[0][0]);
  CHECK(f[0][0] == 1.0);
}

TEST_CASE("the longest path has delay component 1") {
  const auto s = fixtures::star_scenario({{300.0}, {1200.0}, {700.0}});
  const auto f = featurize(s, feature_scales(s));
  CHECK(f[1][1] == 1.0);
  CHECK(f[0][1] == doctest::Approx(0.25));
  CHECK(f[2][1] == doctest::Approx(700.0 / 1200.0));
}

TEST_CASE("components lie in [0, 1] and zero maxima give zero") {
  const auto s = fixtures::random_instance(7, 2);
  for (const auto& f : featurize(s, feature_scales(s))) {
    for (double x : f) {
      CHECK(x >= 0.0);
      CHECK(x <= 1.0);
    }
  }
  const auto z = fixtures::star_scenario({{0.0, 1e4, 0.0, 0.0}, {0.0, 1e4, 0.0, 0.0}});
  for (const auto& f : featurize(z, feature_scales(z))) {
    CHECK(f[0] == 0.0);
    CHECK(f[1] == 0.0);
    CHECK(f[2] == 0.0);
  }
}

TEST_CASE("features are invariant to a common rescaling of monetary costs") {
  const auto s = fixtures::random_instance(6, 9);
  auto topo = *s.topology;
  for (auto& l : topo.links) l.unit_routing_cost *= 7.0;
  for (auto& p : topo.paths) p.total_routing_cost *= 7.0;
  auto r = s;
  r.topology = std::make_shared<const Topology>(topo);
  for (auto& p : r.profiles) {
    p.vm_cost_du *= 7.0;
    p.compute_cost_du *= 7.0;
  }
  r.params.vm_cost_cu *= 7.0;
  r.params.compute_cost_cu *= 7.0;
  const auto a = featurize(s, feature_scales(s));
  const auto b = featurize(r, feature_scales(r));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t k = 0; k < kFeatureCount; ++k) CHECK(b[i][k] == doctest::Approx(a[i][k]).epsilon(1e-12));
  }
}

TEST_CASE("ordered featurize follows the order") {
  const auto s = fixtures::random_instance(4, 3);
  const auto sc = feature_scales(s);
  const std::vector<std::size_t> order{2, 0, 3, 1};
  const auto f = featurize(s, sc, order);
  for (std::size_t k = 0; k < 4; ++k) CHECK(f[k] == featurize_one(s, order[k], sc));
  CHECK_THROWS_AS(featurize(s, sc, std::vector<std::size_t>{0, 1}), InputError);
}

TEST_CASE("N = 1 encoding is one LSTM step of the embedded feature") {
  const Policy p = random_policy(3);
  const auto f = some_features(1, 5);
  Tape t(p.params());
  const auto enc = p.encode(t, f);
  REQUIRE(enc.rows.size() == 1);

  // Embed and step by hand with the stored weights.
  const auto& ps = p.params();
  const auto& w = ps[ps.id_of("embed.w")].value;
  const auto& b = ps[ps.id_of("embed.b")].value;
  const auto& wih = ps[ps.id_of("enc.w_ih")].value;
  const auto& whh = ps[ps.id_of("enc.w_hh")].value;
  const auto& bias = ps[ps.id_of("enc.b")].value;
  const std::size_t e = w.rows(), h = whh.cols();
  std::vector<double> x(e);
  for (std::size_t r = 0; r < e; ++r) {
    x[r] = b.values[r];
    for (std::size_t c = 0; c < kFeatureCount; ++c) x[r] += w.at(r, c) * f[0][c];
  }
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  for (std::size_t j = 0; j < h; ++j) {
    double gate[4];
    for (std::size_t g = 0; g < 4; ++g) {
      double acc = bias.values[g * h + j];
      for (std::size_t c = 0; c < e; ++c) acc += wih.at(g * h + j, c) * x[c];
      gate[g] = acc;  // previous state is zero
    }
    const double c = sig(gate[0]) * std::tanh(gate[2]);
    CHECK(t.value(enc.rows[0])[j] == doctest::Approx(sig(gate[3]) * std::tanh(c)).epsilon(1e-12));
  }
}

TEST_CASE("permuting the input changes the hidden sequence") {
  const Policy p = random_policy(8);
  auto f = some_features(4, 2);
  Tape t(p.params());
  const auto a = p.encode(t, f);
  std::swap(f[0], f[3]);
  const auto b = p.encode(t, f);
  const auto va = t.value(a.rows[3]);
  const auto vb = t.value(b.rows[3]);
  CHECK_FALSE(std::equal(va.begin(), va.end(), vb.begin()));
}

TEST_CASE("zero parameters encode to zero hidden states") {
  Policy p;
  const auto f = some_features(5, 1);
  Tape t(p.params());
  const auto enc = p.encode(t, f);
  for (const Var r : enc.rows) {
    for (double v : t.value(r)) CHECK(v == 0.0);
  }
  CHECK_THROWS_AS(p.encode(t, std::vector<Features>{}), ShapeError);
}

TEST_CASE("greedy decoding is deterministic and takes each step's mode") {
  const Policy p = random_policy(11);
  const auto f = some_features(6, 3);
  DecodeOptions greedy;
  greedy.mode = SampleMode::Greedy;
  Rng r1(1), r2(2);
  const auto a = decode_once(p, f, greedy, r1);
  const auto b = decode_once(p, f, greedy, r2);
  CHECK(a.splits == b.splits);
  for (std::size_t t = 0; t < a.splits.size(); ++t) {
    for (std::size_t k = 0; k < kSplitCount; ++k) {
      Assignment alt = a.splits;
      alt[t] = split_from_index(k);
      DecodeOptions opts;
      opts.forced = alt;
      Rng unused(0);
      CHECK(decode_once(p, f, opts, unused).step_log_probs[t] <= a.step_log_probs[t]);
    }
  }
}

TEST_CASE("log-probability factorizes over steps") {
  const Policy p = random_policy(12);
  const auto f = some_features(7, 4);
  Rng rng(3);
  for (int k = 0; k < 20; ++k) {
    const auto r = decode_once(p, f, DecodeOptions{}, rng);
    double sum = 0.0, prod = 1.0;
    for (double lp : r.step_log_probs) {
      sum += lp;
      prod *= std::exp(lp);
      CHECK(lp < 0.0);
    }
    CHECK(r.log_prob == doctest::Approx(sum).epsilon(1e-14));
    CHECK(std::exp(r.log_prob) > 0.0);
    CHECK(std::exp(r.log_prob) <= 1.0);
    CHECK(std::abs(std::exp(r.log_prob) - prod) < 1e-12);
  }
}

TEST_CASE("per-step distributions sum to one") {
  const Policy p = random_policy(14);
  const auto f = some_features(3, 6);
  for (std::size_t first = 0; first < kSplitCount; ++first) {
    double total = 0.0;
    for (std::size_t second = 0; second < kSplitCount; ++second) {
      Assignment a{split_from_index(first), split_from_index(second), Split::S0};
      DecodeOptions opts;
      opts.forced = a;
      Rng unused(0);
      total += std::exp(decode_once(p, f, opts, unused).step_log_probs[1]);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("zero output projection gives a uniform policy") {
  Policy p = random_policy(15);
  auto& ps = p.params();
  ps[ps.id_of("head.w")].value.values.assign(ps[ps.id_of("head.w")].value.size(), 0.0);
  ps[ps.id_of("head.b")].value.values.assign(kSplitCount, 0.0);
  const auto f = some_features(5, 7);
  Rng rng(4);
  const auto r = decode_once(p, f, DecodeOptions{}, rng);
  for (double lp : r.step_log_probs) CHECK(lp == doctest::Approx(std::log(0.25)).epsilon(1e-14));
  CHECK(r.log_prob == doctest::Approx(5.0 * std::log(0.25)).epsilon(1e-14));
}

TEST_CASE("sampled rollouts follow the policy distribution (chi-square, 2 BSs)") {
  const Policy p = random_policy(16);
  const auto f = some_features(2, 8);
  std::map<std::string, double> expected;
  for (std::size_t a = 0; a < kSplitCount; ++a) {
    for (std::size_t b = 0; b < kSplitCount; ++b) {
      const Assignment x{split_from_index(a), split_from_index(b)};
      expected[assignment_to_string(x)] = std::exp(forced_log_prob(p, f, x));
    }
  }
  Tape t(p.params());
  const auto enc = p.encode(t, f);
  const auto mark = t.mark();
  Rng rng(99);
  std::map<std::string, double> counts;
  const int n = 100000;
  for (int k = 0; k < n; ++k) {
    counts[assignment_to_string(p.decode(t, enc, DecodeOptions{}, rng).splits)] += 1.0;
    t.rewind(mark);
  }
  double chi2 = 0.0, mass = 0.0;
  for (const auto& [key, prob] : expected) {
    mass += prob;
    chi2 += (counts[key] - n * prob) * (counts[key] - n * prob) / (n * prob);
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(chi2 < 24.996);  // 5% critical value, 15 degrees of freedom
}

TEST_CASE("forced decisions must match the sequence length") {
  const Policy p = random_policy(17);
  const auto f = some_features(3, 1);
  const Assignment short_seq{Split::S1};
  DecodeOptions opts;
  opts.forced = short_seq;
  Rng rng(0);
  CHECK_THROWS_AS(decode_once(p, f, opts, rng), ShapeError);
}

TEST_CASE("critic: zero parameters give 0") {
  Critic c(PolicyConfig{}, 10.0);
  Tape t(c.params());
  CHECK(t.scalar(c.value(t, some_features(4, 2))) == 0.0);
}

TEST_CASE("critic gradients match central differences") {
  Critic c(PolicyConfig{8, 8}, 2.0);
  Rng init(5);
  c.initialize(init);
  const auto f = some_features(4, 3);
  auto loss = [&](Tape& t) { return c.value(t, f); };
  GradcheckOptions o;
  o.tolerance = 1e-5;
  Rng rng(6);
  const auto r = gradcheck("critic", c.params(), loss, 2000, rng, o);
  CHECK(r.coordinates == c.params().scalar_count());
  CHECK_MESSAGE(r.passed(), r.worst_coordinate << " " << r.max_rel_error);
}

TEST_CASE("critic regresses a constant target to within 1%") {
  Critic c(PolicyConfig{}, 10.0);
  Rng init(7);
  c.initialize(init);
  AdamState adam(c.params());
  GradientSet g(c.params());
  const double target = 23.0;
  std::vector<std::vector<Features>> inputs;
  for (std::uint64_t k = 0; k < 8; ++k) inputs.push_back(some_features(3 + k % 4, 100 + k));
  for (int step = 0; step < 600; ++step) {
    g.zero();
    for (const auto& f : inputs) {
      Tape t(c.params(), &g);
      const Var v = c.value(t, f);
      t.backward(v, 2.0 * (t.scalar(v) - target) / static_cast<double>(inputs.size()));
    }
    adam_update(c.params(), g, adam, 5e-3);
  }
  for (const auto& f : inputs) {
    Tape t(c.params());
    CHECK(std::abs(t.scalar(c.value(t, f)) - target) < 0.01 * target);
  }
}

TEST_CASE("unpermute maps decisions back to DU order") {
  const Assignment seq{Split::S3, Split::S0, Split::S1};
  const std::vector<std::size_t> order{2, 0, 1};
  CHECK(unpermute(seq, order) == Assignment{Split::S0, Split::S1, Split::S3});
}

TEST_CASE("parameter scopes") {
  Policy p;
  for (const char* name : {"embed.w", "embed.b", "enc.w_ih", "dec.embed", "dec.w_hh", "attn.w1", "attn.w2", "attn.v",
                           "head.w", "head.b"}) {
    CHECK_MESSAGE(p.params().contains(name), name);
  }
  Critic c;
  CHECK(c.params().contains("critic.enc.w_ih"));
  CHECK(c.params().scalar_count() > 0);
  CHECK(p.params()[p.params().id_of("dec.embed")].value.rows() == kSplitCount + 1);
}

}
