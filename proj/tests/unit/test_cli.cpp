#include <doctest.h>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fixtures.hpp"
#include "vransplit/commands.hpp"
#include "vransplit/error.hpp"
#include "vransplit/experiment.hpp"

using namespace vransplit;
namespace fs = std::filesystem;

namespace {

nlohmann::json small_config(const fs::path& out) {
  return {{"seed", 3},
          {"output_dir", out.string()},
          {"topology", {{"n_nodes", 8}}},
          {"train", {{"epochs", 3}, {"batch_size", 4}, {"hidden", 8}, {"embedding", 8}, {"checkpoint_every", 1}}},
          {"search", {{"sample_count", 16}, {"temperatures", {1.0}}}}};
}

fs::path write_config(const fs::path& dir, const nlohmann::json& j) {
  fs::create_directories(dir);
  const auto path = dir / "config.json";
  std::ofstream(path) << j.dump(2);
  return path;
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "vransplit");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) n += !line.empty();
  return n;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("sweep parsing") {
  const auto s = parse_sweep("lambda_mbps=10:150:10");
  CHECK(s.name == "lambda_mbps");
  const auto xs = s.points();
  REQUIRE(xs.size() == 15);
  CHECK(xs.front() == 10.0);
  CHECK(xs.back() == 150.0);
  CHECK(parse_sweep("routing_cost_scale=0.1:1:0.1").points().size() == 10);
  CHECK(parse_sweep("routing_cost_scale=0.1:1:0.1").points()[2] == 0.3);
  CHECK_THROWS_AS(parse_sweep("epochs=1:2:1"), ConfigError);
  CHECK_THROWS_AS(parse_sweep("lambda_mbps=10:150"), ConfigError);
  CHECK_THROWS_AS(parse_sweep("lambda_mbps=10:150:0"), ConfigError);
  CHECK_THROWS_AS(parse_sweep("lambda_mbps=150:10:10"), ConfigError);
  CHECK_THROWS_AS(parse_sweep("lambda_mbps"), ConfigError);
}

TEST_CASE("unknown configuration keys are rejected") {
  auto j = small_config("x");
  j["train"]["epoch"] = 5;
  CHECK_THROWS_AS(parse_experiment_config(j), ConfigError);
  j = small_config("x");
  j["extra"] = true;
  CHECK_THROWS_AS(parse_experiment_config(j), ConfigError);
  CHECK_NOTHROW(parse_experiment_config(small_config("x")));
}

TEST_CASE("topology files resolve relative to the config") {
  const auto dir = fixtures::fresh_dir("cli_relative");
  auto j = small_config(dir / "gen");
  const auto cfg = write_config(dir, j);
  REQUIRE(cli({"generate", "--config", cfg.string()}).code == 0);
  nlohmann::json k = small_config(dir / "solve");
  k["topology"] = {{"file", "gen/topology.json"}};
  const auto sub = write_config(dir, k);
  const auto c = load_experiment_config(sub);
  REQUIRE(c.topology.file.has_value());
  CHECK(*c.topology.file == dir / "gen/topology.json");
  CHECK(cli({"solve-exact", "--config", sub.string()}).code == 0);
  CHECK(fs::exists(dir / "solve" / "oracle.json"));
}

TEST_CASE("exit codes") {
  const auto dir = fixtures::fresh_dir("cli_exit");
  CHECK(cli({}).code == kExitConfig);
  CHECK(cli({"bogus"}).code == kExitConfig);
  CHECK(cli({"generate"}).code == kExitConfig);
  CHECK(cli({"infer", "--config", "x.json"}).code == kExitConfig);
  CHECK(cli({"generate", "--config", (dir / "missing.json").string()}).code == kExitConfig);

  auto bad = small_config(dir / "bad");
  bad["train"]["epochs"] = 0;
  CHECK(cli({"train", "--config", write_config(dir / "bad", bad).string()}).code == kExitConfig);

  auto tight = small_config(dir / "tight");
  tight["scenario"] = {{"lambda_mbps", 150}, {"du_capacity_rc", 0.001}, {"cu_capacity_rc", 0.001}};
  const auto r = cli({"solve-exact", "--config", write_config(dir / "tight", tight).string()});
  CHECK(r.code == kExitInfeasible);
  CHECK(fs::exists(dir / "tight" / "oracle.json"));
  CHECK_FALSE(fs::exists(dir / "tight" / "cost_report.csv"));
}

TEST_CASE("gradcheck subcommand") {
  const auto dir = fixtures::fresh_dir("cli_gradcheck");
  const auto r = cli({"gradcheck", "--out", dir.string()});
  CHECK(r.code == kExitOk);
  CHECK(line_count(dir / "gradcheck.csv") == 7);
  CHECK(r.out.find("FAIL") == std::string::npos);
}

TEST_CASE("generate writes reproducible outputs") {
  const auto dir = fixtures::fresh_dir("cli_generate");
  const auto cfg = write_config(dir, small_config(dir / "a"));
  REQUIRE(cli({"generate", "--config", cfg.string()}).code == 0);
  REQUIRE(cli({"generate", "--config", cfg.string(), "--out", (dir / "b").string()}).code == 0);
  for (const char* f : {"topology.json", "capacity_ecdf.csv", "path_delay_ecdf.csv"}) {
    CHECK(fixtures::read_file(dir / "a" / f) == fixtures::read_file(dir / "b" / f));
  }
  CHECK(line_count(dir / "a" / "path_delay_ecdf.csv") == 8);
  REQUIRE(cli({"generate", "--config", cfg.string(), "--seed", "4", "--out", (dir / "c").string()}).code == 0);
  CHECK(fixtures::read_file(dir / "a" / "topology.json") != fixtures::read_file(dir / "c" / "topology.json"));

  auto two = small_config(dir / "two");
  two["topology"]["n_nodes"] = 2;
  REQUIRE(cli({"generate", "--config", write_config(dir / "two", two).string()}).code == 0);
  CHECK(line_count(dir / "two" / "path_delay_ecdf.csv") == 2);
  const auto topo = load_topology(dir / "two" / "topology.json");
  CHECK(topo.nodes.size() == 2);
  CHECK(topo.paths.size() == 1);
}

TEST_CASE("train, resume, infer and compare") {
  const auto dir = fixtures::fresh_dir("cli_pipeline");
  const auto cfg = write_config(dir, small_config(dir / "run"));
  REQUIRE(cli({"train", "--config", cfg.string()}).code == 0);
  CHECK(line_count(dir / "run" / "curve.csv") == 4);
  for (int e = 1; e <= 3; ++e) CHECK(fs::exists(dir / "run" / "checkpoints" / checkpoint_name(e)));
  const auto manifest = nlohmann::json::parse(fixtures::read_file(dir / "run" / "manifest.json"));
  CHECK(manifest["config"]["seed"] == 3);
  CHECK(manifest["resolved"]["mu"].size() == 4);

  auto longer = small_config(dir / "run");
  longer["train"]["epochs"] = 5;
  const auto cfg5 = write_config(dir / "five", longer);
  const auto ckpt = (dir / "run" / "checkpoints" / checkpoint_name(2)).string();
  REQUIRE(cli({"train", "--config", cfg5.string(), "--checkpoint", ckpt}).code == 0);
  REQUIRE(cli({"train", "--config", cfg5.string(), "--out", (dir / "fresh").string()}).code == 0);
  CHECK(line_count(dir / "run" / "curve.csv") == 6);
  CHECK(fixtures::read_file(dir / "run" / "curve.csv") == fixtures::read_file(dir / "fresh" / "curve.csv"));

  const auto final_ckpt = (dir / "run" / "checkpoints" / checkpoint_name(5)).string();
  const auto inf = cli({"infer", "--config", cfg.string(), "--checkpoint", final_ckpt});
  CHECK((inf.code == kExitOk || inf.code == kExitInfeasible));
  CHECK(fs::exists(dir / "run" / "search.json"));
  CHECK(line_count(dir / "run" / "cost_report.csv") == 7 + 2);

  const auto cmp = cli({"compare", "--config", cfg.string(), "--checkpoint", final_ckpt, "--sweep",
                        "lambda_mbps=10:150:10", "--out", (dir / "cmp").string()});
  CHECK((cmp.code == kExitOk || cmp.code == kExitInfeasible));
  CHECK(line_count(dir / "cmp" / "gap.csv") == 16);
  CHECK(line_count(dir / "cmp" / "plot_data.csv") == 16);
  std::istringstream plot(fixtures::read_file(dir / "cmp" / "plot_data.csv"));
  std::string header, row;
  std::getline(plot, header);
  CHECK(header.find("J_dran") != std::string::npos);
  CHECK(header.find("cran_reference_only") != std::string::npos);
  std::getline(plot, row);
  CHECK(row.rfind("lambda_mbps,10,", 0) == 0);
  CHECK(row.substr(row.size() - 5) == ",true");
  const auto summary = nlohmann::json::parse(fixtures::read_file(dir / "cmp" / "summary.json"));
  CHECK(summary["rows"] == 15);

  CHECK(cli({"infer", "--config", cfg.string(), "--checkpoint", (dir / "none.json").string()}).code == kExitConfig);
}

}
