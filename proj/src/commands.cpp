#include "vransplit/commands.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vransplit/error.hpp"
#include "vransplit/format.hpp"
#include "vransplit/gradcheck.hpp"
#include "vransplit/oracle.hpp"

namespace vransplit {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

void write_manifest(const fs::path& out, const std::string& command, const ExperimentConfig& config,
                    const nlohmann::ordered_json& extra = {}) {
  nlohmann::ordered_json m;
  m["command"] = command;
  m["config"] = experiment_config_to_json(config);
  if (!extra.is_null()) m["resolved"] = extra;
  write_text(out / "manifest.json", m.dump(2));
}

void write_ecdf(const fs::path& path, const std::string& column, std::vector<double> values) {
  std::sort(values.begin(), values.end());
  auto out = open_out(path);
  out << column << ",cdf\n";
  const double n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    out << format_double(values[i]) << ',' << format_double(static_cast<double>(i + 1) / n) << '\n';
  }
}

nlohmann::ordered_json scales_json(const FeatureScales& s) {
  return {{"lambda_mbps", s.lambda_mbps}, {"delay_us", s.delay_us}, {"routing_cost", s.routing_cost}};
}

nlohmann::ordered_json report_json(const CostReport& r) {
  nlohmann::ordered_json j;
  j["J"] = r.total;
  j["xi"] = r.penalty;
  j["L"] = r.penalized;
  j["feasible"] = r.feasible();
  nlohmann::ordered_json v;
  for (std::size_t f = 0; f < kConstraintCount; ++f) v[to_string(static_cast<Constraint>(f))] = r.violation[f];
  j["violation"] = v;
  return j;
}

void write_report(const fs::path& path, const CostReport& r, std::span<const Split> a, const Scenario& s) {
  auto out = open_out(path);
  write_cost_report_csv(out, r, a, s);
}

// Rows of an existing curve up to and including `epoch`.
std::vector<std::string> curve_prefix(const fs::path& path, std::size_t epoch) {
  std::vector<std::string> rows;
  std::ifstream in(path);
  if (!in) return rows;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    std::size_t e = 0;
    try {
      e = std::stoul(line.substr(0, comma));
    } catch (const std::exception&) {
      throw ParseError(path.string() + ": malformed curve row '" + line + "'");
    }
    if (e <= epoch) rows.push_back(line);
  }
  return rows;
}

}  // namespace

int cmd_generate(const ExperimentConfig& config, const fs::path& out, std::ostream& log) {
  const auto built = build_scenario(config);
  const auto& topo = *built.scenario.topology;
  fs::create_directories(out);
  save_topology(topo, out / "topology.json");
  std::vector<double> caps;
  for (const auto& l : topo.links) caps.push_back(l.capacity_mbps);
  std::vector<double> delays;
  for (const auto& p : topo.paths) delays.push_back(p.total_delay_us);
  write_ecdf(out / "capacity_ecdf.csv", "capacity_mbps", caps);
  write_ecdf(out / "path_delay_ecdf.csv", "delay_us", delays);
  write_manifest(out, "generate", config, {{"attempts", built.attempts}, {"topology_seed", topo.seed}});
  log << "topology: " << topo.nodes.size() << " nodes, " << topo.links.size() << " links, " << topo.paths.size()
      << " DUs -> " << (out / "topology.json").string() << '\n';
  return kExitOk;
}

int cmd_train(const ExperimentConfig& config, const fs::path& out, const std::optional<fs::path>& resume,
              std::ostream& log) {
  const auto built = build_scenario(config);
  TrainConfig tc = config.train;
  tc.checkpoint_dir = out / "checkpoints";
  std::vector<TrainingInstance> instances{make_training_instance(built.scenario)};
  const auto scales = instances.front().scales;
  Trainer trainer(std::move(instances), tc);
  trainer.initialize();
  std::vector<std::string> earlier;
  if (resume) {
    trainer.load_checkpoint(*resume);
    earlier = curve_prefix(out / "curve.csv", trainer.epoch());
    log << "resuming at epoch " << trainer.epoch() << '\n';
  }
  write_manifest(out, "train", config,
                 {{"feature_scales", scales_json(scales)},
                  {"mu", built.scenario.params.mu},
                  {"critic_output_scale", trainer.critic().output_scale()},
                  {"resumed_from", resume ? nlohmann::ordered_json(resume->string()) : nlohmann::ordered_json()}});

  auto curve = open_out(out / "curve.csv");
  write_curve_header(curve);
  for (const auto& row : earlier) curve << row << '\n';
  const std::size_t every = std::max<std::size_t>(1, tc.epochs / 20);
  trainer.train([&](const EpochRecord& r) {
    write_curve_row(curve, r);
    if (r.epoch % every == 0 || r.epoch == tc.epochs) {
      log << "epoch " << r.epoch << " J=" << format_double(r.mean_J) << " xi=" << format_double(r.mean_xi)
          << " L=" << format_double(r.mean_L) << " critic_loss=" << format_double(r.critic_loss) << '\n';
    }
  });
  curve.flush();
  if (!curve) throw IoError("failed writing curve.csv");
  const auto final_path = tc.checkpoint_dir / checkpoint_name(trainer.epoch());
  if (!fs::exists(final_path)) trainer.save_checkpoint(final_path);
  log << "checkpoint: " << final_path.string() << '\n';
  return kExitOk;
}

int cmd_infer(const ExperimentConfig& config, const fs::path& out, const fs::path& checkpoint, std::ostream& log) {
  const auto built = build_scenario(config);
  const auto& s = built.scenario;
  const Policy policy = load_policy_checkpoint(checkpoint);
  const auto scales = feature_scales(s);
  const auto result = search(policy, s, scales, config.search);

  nlohmann::ordered_json j;
  j["best_assignment"] = assignment_to_string(result.best);
  j["report"] = report_json(result.report);
  j["feasible_fraction"] = result.feasible_fraction;
  j["samples_evaluated"] = result.samples_evaluated;
  j["temperature"] = result.temperature;
  j["search"] = experiment_config_to_json(config)["search"];
  j["checkpoint"] = checkpoint.string();
  write_text(out / "search.json", j.dump(2));
  write_text(out / "best_assignment.json", assignment_to_json(result.best, s));
  write_report(out / "cost_report.csv", result.report, result.best, s);
  write_manifest(out, "infer", config, {{"feature_scales", scales_json(scales)}});
  log << "search: J=" << format_double(result.report.total) << " L=" << format_double(result.report.penalized)
      << " feasible=" << (result.report.feasible() ? "yes" : "no") << " assignment=" << assignment_to_string(result.best)
      << '\n';
  return result.report.feasible() ? kExitOk : kExitInfeasible;
}

int cmd_solve_exact(const ExperimentConfig& config, const fs::path& out, std::ostream& log) {
  const auto built = build_scenario(config);
  const auto& s = built.scenario;
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = solve_bnb(s);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_text(out / "oracle.json", oracle_result_to_json(r));
  {
    auto csv = open_out(out / "oracle.csv");
    csv << "instance_id,cost,status,nodes_explored,wall_seconds\n";
    write_oracle_csv_line(csv, "base", r, wall);
  }
  write_manifest(out, "solve-exact", config);
  std::ostringstream line;
  write_oracle_csv_line(line, "base", r, wall);
  log << line.str();
  if (r.status != OracleStatus::Optimal) return kExitInfeasible;
  write_report(out / "cost_report.csv", evaluate(r.best_assignment, s), r.best_assignment, s);
  return kExitOk;
}

int cmd_compare(const ExperimentConfig& config, const fs::path& out, const fs::path& checkpoint, std::ostream& log) {
  const auto built = build_scenario(config);
  const auto& base = built.scenario;
  const Policy policy = load_policy_checkpoint(checkpoint);
  const auto scales = feature_scales(base);

  std::vector<std::pair<std::string, double>> points;
  std::vector<SuiteInstance> suite;
  if (config.sweeps.empty()) {
    suite.push_back({"base", base});
    points.emplace_back("base", 0.0);
  }
  for (const auto& sw : config.sweeps) {
    auto insts = sweep_instances(base, sw, config.scenario.mu);
    const auto xs = sw.points();
    for (std::size_t k = 0; k < insts.size(); ++k) {
      points.emplace_back(sw.name, xs[k]);
      suite.push_back(std::move(insts[k]));
    }
  }
  const auto rows = evaluate_suite(policy, suite, scales, config.search);
  {
    auto gap = open_out(out / "gap.csv");
    write_gap_csv(gap, rows);
  }
  {
    auto plot = open_out(out / "plot_data.csv");
    plot << "sweep,value,gap_percent,J_search,J_opt,J_dran,J_cran,cran_reference_only\n";
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto& r = rows[k];
      plot << points[k].first << ',' << format_double(points[k].second) << ','
           << (r.oracle_optimal && r.search_feasible ? format_double(r.gap_percent) : "") << ','
           << format_double(r.J_search) << ',' << (r.oracle_optimal ? format_double(r.J_opt) : "") << ','
           << format_double(r.J_dran) << ',' << format_double(r.J_cran_reference) << ",true\n";
    }
  }
  const auto summary = summarize(rows);
  bool all_feasible = true;
  for (const auto& r : rows) all_feasible = all_feasible && r.search_feasible && r.oracle_optimal;
  nlohmann::ordered_json j;
  j["rows"] = summary.rows;
  j["counted"] = summary.counted;
  j["mean_gap_percent"] = summary.mean_gap_percent;
  j["max_gap_percent"] = summary.max_gap_percent;
  j["all_feasible"] = all_feasible;
  write_text(out / "summary.json", j.dump(2));
  write_manifest(out, "compare", config, {{"feature_scales", scales_json(scales)}, {"checkpoint", checkpoint.string()}});
  log << "compare: " << summary.rows << " rows, mean gap " << format_double(summary.mean_gap_percent) << "%, max gap "
      << format_double(summary.max_gap_percent) << "%\n";
  return all_feasible ? kExitOk : kExitInfeasible;
}

int cmd_gradcheck(std::uint64_t seed, const fs::path& out, std::ostream& log) {
  GradcheckOptions o;
  o.seed = seed;
  const auto results = run_gradcheck_suite(o);
  auto csv = open_out(out / "gradcheck.csv");
  csv << "case,coordinates,failures,max_rel_error,worst_coordinate\n";
  bool ok = true;
  for (const auto& r : results) {
    csv << r.name << ',' << r.coordinates << ',' << r.failures << ',' << format_double(r.max_rel_error) << ','
        << r.worst_coordinate << '\n';
    log << (r.passed() ? "PASS " : "FAIL ") << r.name << ": " << r.coordinates << " coordinates, max relative error "
        << format_double(r.max_rel_error) << '\n';
    ok = ok && r.passed();
  }
  return ok ? kExitOk : kExitNumeric;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Functional split placement for virtualized RAN"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string checkpoint;
  std::vector<std::string> sweeps;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", config_path, "Experiment configuration (JSON)");
    if (needs_config) c->required();
    sub->add_option("--seed", seed, "Seed for every random stream (overrides the config)");
    sub->add_option("--out", out_dir, "Output directory (overrides the config)");
  };
  auto* generate = app.add_subcommand("generate", "Generate a topology and its eCDF summaries");
  add_common(generate, true);
  auto* train = app.add_subcommand("train", "Train the policy and critic");
  add_common(train, true);
  train->add_option("--checkpoint", checkpoint, "Resume from this checkpoint");
  auto* infer = app.add_subcommand("infer", "Sample the trained policy and keep the best assignment");
  add_common(infer, true);
  infer->add_option("--checkpoint", checkpoint, "Trained checkpoint")->required();
  auto* solve = app.add_subcommand("solve-exact", "Solve the base instance with branch-and-bound");
  add_common(solve, true);
  auto* compare = app.add_subcommand("compare", "Gap and cost table against the exact oracle, D-RAN and C-RAN");
  add_common(compare, true);
  compare->add_option("--checkpoint", checkpoint, "Trained checkpoint")->required();
  compare->add_option("--sweep", sweeps, "name=lo:hi:step, repeatable (lambda_mbps, routing_cost_scale)");
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every network gradient");
  add_common(gradcheck, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitConfig;
  }

  try {
    auto* sub = app.get_subcommands().front();
    const bool seed_given = sub->count("--seed") > 0;
    if (sub == gradcheck) {
      return cmd_gradcheck(seed_given ? seed : 1, out_dir.empty() ? fs::path("out") : fs::path(out_dir), out);
    }
    ExperimentConfig config = load_experiment_config(config_path);
    if (seed_given) apply_seed(config, seed);
    if (!out_dir.empty()) config.output_dir = out_dir;
    for (const auto& s : sweeps) config.sweeps.push_back(parse_sweep(s));
    const fs::path dir = config.output_dir;
    if (sub == generate) return cmd_generate(config, dir, out);
    if (sub == train) {
      return cmd_train(config, dir, checkpoint.empty() ? std::nullopt : std::optional<fs::path>(checkpoint), out);
    }
    if (sub == infer) return cmd_infer(config, dir, checkpoint, out);
    if (sub == solve) return cmd_solve_exact(config, dir, out);
    if (sub == compare) return cmd_compare(config, dir, checkpoint, out);
    return kExitFailure;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParameterError& e) {
    err << "parameter error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ValidationError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const TopologyError& e) {
    err << "topology error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace vransplit
