#include "vransplit/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <set>

#include "vransplit/error.hpp"
#include "vransplit/format.hpp"
#include "vransplit/rng.hpp"

namespace vransplit {

namespace {

using json = nlohmann::json;

// Reads one JSON object, remembering which keys were consumed so that
// leftovers (typos) can be reported.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  void consume(const std::string& key) { used_.insert(key); }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    used_.insert(key);
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path_ + "." + key + ": wrong type");
    }
  }

  void read_interval(const std::string& key, Interval& out) {
    used_.insert(key);
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      throw ConfigError(path_ + "." + key + ": expected [lo, hi]");
    }
    out = {v[0].get<double>(), v[1].get<double>()};
  }

  void read_optional(const std::string& key, std::optional<double>& out) {
    used_.insert(key);
    if (!has(key)) return;
    if (!j_.at(key).is_number()) throw ConfigError(path_ + "." + key + ": expected a number");
    out = j_.at(key).get<double>();
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (used_.count(it.key()) == 0) throw ConfigError(path_ + ": unknown key '" + it.key() + "'");
    }
  }

  const std::string& path() const { return path_; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

PenaltyWeights parse_mu(const json& v, const std::string& path) {
  PenaltyWeights mu{};
  if (v.is_number()) {
    mu.fill(v.get<double>());
  } else if (v.is_array() && v.size() == kConstraintCount) {
    for (std::size_t i = 0; i < kConstraintCount; ++i) {
      if (!v[i].is_number()) throw ConfigError(path + ": expected numbers");
      mu[i] = v[i].get<double>();
    }
  } else {
    throw ConfigError(path + ": expected a number or four numbers");
  }
  for (double m : mu) {
    if (!(m >= 0.0) || !std::isfinite(m)) throw ConfigError(path + ": weights must be finite and nonnegative");
  }
  return mu;
}

void parse_topology(Section s, TopologySpec& t) {
  std::string file;
  s.read("file", file);
  if (!file.empty()) t.file = std::filesystem::path(file);
  auto& w = t.waxman;
  s.read("n_nodes", w.n_nodes);
  s.read("alpha", w.alpha);
  s.read("beta", w.beta);
  s.read_interval("capacity_gbps", w.capacity_gbps);
  s.read("delay_us_per_unit", w.delay_us_per_unit);
  s.read_interval("routing_cost_per_mbps", w.routing_cost_per_mbps);
  s.read("n_dus", w.n_dus);
  s.read("seed", w.seed);
  s.read("scale_to_dus", t.scale_to_dus);
  s.read("require_dran_feasible", t.require_dran_feasible);
  s.read("max_attempts", t.max_attempts);
  s.finish();
  if (t.max_attempts == 0) throw ConfigError(s.path() + ".max_attempts must be positive");
}

void parse_scenario(Section s, ScenarioSpec& sc) {
  s.read("lambda_mbps", sc.profile.lambda_mbps);
  s.read("vm_cost_du", sc.profile.vm_cost_du);
  s.read("compute_cost_du", sc.profile.compute_cost_du);
  s.read("du_capacity_rc", sc.profile.du_capacity_rc);
  s.read("cu_capacity_rc", sc.system.cu_capacity_rc);
  s.read("vm_cost_cu", sc.system.vm_cost_cu);
  s.read("compute_cost_cu", sc.system.compute_cost_cu);
  s.read("routing_cost_scale", sc.system.routing_cost_scale);
  if (s.has("mu")) sc.mu = parse_mu(s.raw("mu"), s.path() + ".mu");
  s.consume("mu");
  if (s.has("overrides")) {
    const auto& arr = s.raw("overrides");
    if (!arr.is_array()) throw ConfigError(s.path() + ".overrides: expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Section o(arr[i], s.path() + ".overrides[" + std::to_string(i) + "]");
      ProfileOverride po;
      if (!o.has("du_id")) throw ConfigError(o.path() + ": missing du_id");
      o.read("du_id", po.du_id);
      o.read_optional("lambda_mbps", po.lambda_mbps);
      o.read_optional("vm_cost_du", po.vm_cost_du);
      o.read_optional("compute_cost_du", po.compute_cost_du);
      o.read_optional("du_capacity_rc", po.du_capacity_rc);
      o.finish();
      sc.overrides.push_back(po);
    }
  }
  s.consume("overrides");
  s.finish();
  if (sc.profile.lambda_mbps < 0.0 || sc.profile.du_capacity_rc <= 0.0 || sc.system.cu_capacity_rc <= 0.0 ||
      sc.system.routing_cost_scale < 0.0) {
    throw ConfigError(s.path() + ": loads and scales must be nonnegative, capacities positive");
  }
}

void parse_train(Section s, TrainConfig& t) {
  s.read("epochs", t.epochs);
  s.read("batch_size", t.batch_size);
  s.read("agent_lr", t.agent_lr);
  s.read("critic_lr", t.critic_lr);
  s.read("temperature", t.temperature);
  s.read("clip_norm", t.clip_norm);
  s.read("randomize", t.randomize);
  s.read_interval("lambda_mbps", t.lambda_mbps);
  s.read_interval("routing_cost_scale", t.routing_cost_scale);
  s.read("seed", t.seed);
  s.read("checkpoint_every", t.checkpoint_every);
  s.read("hidden", t.network.hidden);
  s.read("embedding", t.network.embedding);
  s.finish();
  try {
    validate_train_config(t);
  } catch (const ConfigError& e) {
    throw ConfigError(s.path() + ": " + e.what());
  }
}

void parse_search(Section s, SearchConfig& c) {
  s.read("sample_count", c.sample_count);
  s.read("temperature", c.temperature);
  s.read("include_greedy", c.include_greedy);
  s.read("temperatures", c.temperatures);
  s.read("seed", c.seed);
  s.finish();
  validate_search_config(c);
}

json interval_json(const Interval& i) { return json::array({i.lo, i.hi}); }

}  // namespace

std::vector<double> Sweep::points() const {
  if (!(step > 0.0) || !(hi >= lo)) throw ConfigError("sweep " + name + ": need lo <= hi and step > 0");
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    // Twelve significant digits drop the rounding noise of lo + k * step
    // so that point labels stay readable (0.3, not 0.30000000000000004).
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", lo + static_cast<double>(k) * step);
    out.push_back(std::min(std::strtod(buf, nullptr), hi));
  }
  return out;
}

Sweep parse_sweep(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ConfigError("sweep '" + text + "': expected name=lo:hi:step");
  Sweep s;
  s.name = text.substr(0, eq);
  if (s.name != "lambda_mbps" && s.name != "routing_cost_scale") {
    throw ConfigError("sweep '" + text + "': unknown quantity '" + s.name + "'");
  }
  std::vector<std::string> parts;
  std::size_t pos = eq + 1;
  while (true) {
    const auto colon = text.find(':', pos);
    parts.push_back(text.substr(pos, colon == std::string::npos ? std::string::npos : colon - pos));
    if (colon == std::string::npos) break;
    pos = colon + 1;
  }
  if (parts.size() != 3) throw ConfigError("sweep '" + text + "': expected name=lo:hi:step");
  double* fields[3] = {&s.lo, &s.hi, &s.step};
  for (std::size_t k = 0; k < 3; ++k) {
    try {
      std::size_t used = 0;
      *fields[k] = std::stod(parts[k], &used);
      if (used != parts[k].size()) throw std::invalid_argument(parts[k]);
    } catch (const std::exception&) {
      throw ConfigError("sweep '" + text + "': '" + parts[k] + "' is not a number");
    }
  }
  s.points();
  return s;
}

ExperimentConfig parse_experiment_config(const json& j) {
  ExperimentConfig c;
  Section root(j, "config");
  root.read("seed", c.seed);
  apply_seed(c, c.seed);
  std::string output_dir;
  root.read("output_dir", output_dir);
  if (!output_dir.empty()) c.output_dir = output_dir;
  if (root.has("topology")) parse_topology(Section(root.raw("topology"), "topology"), c.topology);
  root.consume("topology");
  if (root.has("scenario")) parse_scenario(Section(root.raw("scenario"), "scenario"), c.scenario);
  root.consume("scenario");
  if (root.has("train")) parse_train(Section(root.raw("train"), "train"), c.train);
  root.consume("train");
  if (root.has("search")) parse_search(Section(root.raw("search"), "search"), c.search);
  root.consume("search");
  if (root.has("sweeps")) {
    const auto& arr = root.raw("sweeps");
    if (!arr.is_array()) throw ConfigError("sweeps: expected an array of name=lo:hi:step strings");
    for (const auto& s : arr) {
      if (!s.is_string()) throw ConfigError("sweeps: expected strings");
      c.sweeps.push_back(parse_sweep(s.get<std::string>()));
    }
  }
  root.consume("sweeps");
  root.finish();
  c.train.mu = c.scenario.mu;
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  auto c = parse_experiment_config(j);
  if (c.topology.file && c.topology.file->is_relative()) {
    c.topology.file = path.parent_path() / *c.topology.file;
  }
  return c;
}

void apply_seed(ExperimentConfig& c, std::uint64_t seed) {
  c.seed = seed;
  c.topology.waxman.seed = seed;
  c.train.seed = seed;
  c.search.seed = seed;
}

nlohmann::ordered_json experiment_config_to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir.string();
  const auto& w = c.topology.waxman;
  j["topology"] = {{"file", c.topology.file ? json(c.topology.file->string()) : json(nullptr)},
                   {"n_nodes", w.n_nodes},
                   {"alpha", w.alpha},
                   {"beta", w.beta},
                   {"capacity_gbps", interval_json(w.capacity_gbps)},
                   {"delay_us_per_unit", w.delay_us_per_unit},
                   {"routing_cost_per_mbps", interval_json(w.routing_cost_per_mbps)},
                   {"n_dus", w.n_dus},
                   {"seed", w.seed},
                   {"scale_to_dus", c.topology.scale_to_dus},
                   {"require_dran_feasible", c.topology.require_dran_feasible},
                   {"max_attempts", c.topology.max_attempts}};
  const auto& sc = c.scenario;
  nlohmann::ordered_json overrides = nlohmann::ordered_json::array();
  for (const auto& o : sc.overrides) {
    nlohmann::ordered_json e{{"du_id", o.du_id}};
    if (o.lambda_mbps) e["lambda_mbps"] = *o.lambda_mbps;
    if (o.vm_cost_du) e["vm_cost_du"] = *o.vm_cost_du;
    if (o.compute_cost_du) e["compute_cost_du"] = *o.compute_cost_du;
    if (o.du_capacity_rc) e["du_capacity_rc"] = *o.du_capacity_rc;
    overrides.push_back(e);
  }
  j["scenario"] = {{"lambda_mbps", sc.profile.lambda_mbps},
                   {"vm_cost_du", sc.profile.vm_cost_du},
                   {"compute_cost_du", sc.profile.compute_cost_du},
                   {"du_capacity_rc", sc.profile.du_capacity_rc},
                   {"cu_capacity_rc", sc.system.cu_capacity_rc},
                   {"vm_cost_cu", sc.system.vm_cost_cu},
                   {"compute_cost_cu", sc.system.compute_cost_cu},
                   {"routing_cost_scale", sc.system.routing_cost_scale},
                   {"mu", sc.mu ? json(*sc.mu) : json("default: D-RAN cost of each evaluated instance")},
                   {"overrides", overrides}};
  const auto& t = c.train;
  j["train"] = {{"epochs", t.epochs},
                {"batch_size", t.batch_size},
                {"agent_lr", t.agent_lr},
                {"critic_lr", t.critic_lr},
                {"temperature", t.temperature},
                {"clip_norm", t.clip_norm},
                {"randomize", t.randomize},
                {"lambda_mbps", interval_json(t.lambda_mbps)},
                {"routing_cost_scale", interval_json(t.routing_cost_scale)},
                {"seed", t.seed},
                {"checkpoint_every", t.checkpoint_every},
                {"hidden", t.network.hidden},
                {"embedding", t.network.embedding}};
  const auto& s = c.search;
  j["search"] = {{"sample_count", s.sample_count},
                 {"temperature", s.temperature},
                 {"include_greedy", s.include_greedy},
                 {"temperatures", s.temperatures},
                 {"seed", s.seed}};
  nlohmann::ordered_json sweeps = nlohmann::ordered_json::array();
  for (const auto& sw : c.sweeps) {
    sweeps.push_back(sw.name + "=" + format_double(sw.lo) + ":" + format_double(sw.hi) + ":" + format_double(sw.step));
  }
  j["sweeps"] = sweeps;
  return j;
}

BuiltScenario build_scenario(const TopologySpec& spec, const ScenarioSpec& sc) {
  BuiltScenario out;
  for (std::size_t attempt = 0; attempt < spec.max_attempts; ++attempt) {
    Topology topo;
    if (spec.file) {
      topo = load_topology(*spec.file);
    } else {
      WaxmanParams w = spec.waxman;
      if (attempt > 0) w.seed = mix_seed(spec.waxman.seed, attempt);
      topo = generate_waxman(w);
    }
    SystemParams params = sc.system;
    if (spec.scale_to_dus) {
      const double nodes = static_cast<double>(topo.nodes.size());
      const double factor = nodes > 1.0 ? static_cast<double>(topo.paths.size()) / (nodes - 1.0) : 1.0;
      for (auto& l : topo.links) l.capacity_mbps *= factor;
      params.cu_capacity_rc *= factor;
    }
    auto shared = std::make_shared<const Topology>(std::move(topo));
    auto profiles = make_profiles(*shared, sc.profile);
    for (const auto& o : sc.overrides) {
      auto it = std::find_if(profiles.begin(), profiles.end(), [&](const BsProfile& p) { return p.du_id == o.du_id; });
      if (it == profiles.end()) throw ConfigError("override for unknown DU " + std::to_string(o.du_id));
      if (o.lambda_mbps) it->lambda_mbps = *o.lambda_mbps;
      if (o.vm_cost_du) it->vm_cost_du = *o.vm_cost_du;
      if (o.compute_cost_du) it->compute_cost_du = *o.compute_cost_du;
      if (o.du_capacity_rc) it->du_capacity_rc = *o.du_capacity_rc;
    }
    Scenario s{shared, std::move(profiles), params};
    s.params.mu = sc.mu ? *sc.mu : default_penalty_weights(s.profiles, s.params, *s.topology);
    out.scenario = std::move(s);
    out.attempts = attempt + 1;
    if (!spec.require_dran_feasible || evaluate(dran_assignment(out.scenario.size()), out.scenario).feasible()) {
      return out;
    }
    if (spec.file) throw ConfigError(spec.file->string() + ": D-RAN is infeasible on this topology");
  }
  throw ConfigError("no D-RAN feasible topology within " + std::to_string(spec.max_attempts) + " attempts");
}

Scenario scaled_instance(std::size_t n_dus, std::uint64_t seed, std::size_t n_nodes) {
  TopologySpec t;
  t.waxman.n_nodes = n_nodes;
  t.waxman.n_dus = n_dus;
  t.waxman.seed = seed;
  t.scale_to_dus = true;
  t.require_dran_feasible = true;
  return build_scenario(t, ScenarioSpec{}).scenario;
}

std::vector<SuiteInstance> sweep_instances(const Scenario& base, const Sweep& sweep,
                                           const std::optional<PenaltyWeights>& mu) {
  std::vector<SuiteInstance> out;
  for (double x : sweep.points()) {
    Scenario s = base;
    if (sweep.name == "lambda_mbps") {
      for (auto& p : s.profiles) p.lambda_mbps = x;
    } else if (sweep.name == "routing_cost_scale") {
      s.params.routing_cost_scale = x;
    } else {
      throw ConfigError("unknown sweep quantity '" + sweep.name + "'");
    }
    s.params.mu = mu ? *mu : default_penalty_weights(s.profiles, s.params, *s.topology);
    out.push_back({sweep.name + "=" + format_double(x), std::move(s)});
  }
  return out;
}

}  // namespace vransplit
