#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "varopt/error.hpp"
#include "varopt/experiment.hpp"

using namespace varopt;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::ParseError;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::current_path() / "experiment_scratch" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

// Runs the CLI with stderr captured into dir/stderr.txt.
int cli(const fs::path& dir, const std::string& args) {
  const std::string cmd = std::string(VAROPT_CLI) + " " + args + " >" + (dir / "stdout.txt").string() +
                          " 2>" + (dir / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json small_solve() {
  return json::parse(R"({
    "experiment": "solve-nls",
    "graph": {"construction": "lattice", "d": 1, "L": 6},
    "problem": {"a": 1.0, "p": 4.0},
    "seed": 3
  })");
}

}  // namespace

TEST_CASE("config parsing errors") {
  CHECK(kind_of([] { parse_config(json::array()); }) == ErrorKind::InvalidSpec);
  CHECK(kind_of([] { parse_config({{"experiment", "fly"}}); }) == ErrorKind::InvalidSpec);
  CHECK(kind_of([] { parse_config({{"experiment", "solve-nls"}}); }) == ErrorKind::InvalidSpec);

  json extra = small_solve();
  extra["colour"] = "red";
  CHECK(kind_of([&] { parse_config(extra); }) == ErrorKind::InvalidSpec);

  json bad_param = small_solve();
  bad_param["params"] = {{"a_grid", {1.0}}};
  CHECK(kind_of([&] { parse_config(bad_param); }) == ErrorKind::InvalidSpec);

  json bad_p = small_solve();
  bad_p["problem"]["p"] = 2.0;
  CHECK(kind_of([&] { parse_config(bad_p); }) == ErrorKind::InvalidSpec);

  json bad_graph = small_solve();
  bad_graph["graph"] = {{"construction", "sphere_deletion"}, {"d", 1}, {"L", 6}, {"R", 2}};
  CHECK(kind_of([&] { parse_config(bad_graph); }) == ErrorKind::DisconnectedGraph);

  const json threshold = {{"experiment", "threshold"},
                          {"graph", {{"construction", "lattice"}, {"d", 1}, {"L", 8}}},
                          {"problem", {{"p", 7.0}}},
                          {"params", {{"a_range", {3.0, 1.0}}}}};
  CHECK(kind_of([&] { parse_config(threshold); }) == ErrorKind::InvalidRange);

  const json gap = {{"experiment", "sobolev-gap"}, {"problem", {{"p", 2.0}}},
                    {"params", {{"d", 3}, {"R_list", {2, 3}}, {"L", 6}}}};
  CHECK(kind_of([&] { parse_config(gap); }) == ErrorKind::InvalidSpec);

  CHECK(kind_of([] { load_config("/nonexistent/config.json"); }) == ErrorKind::ParseError);
}

TEST_CASE("parse_config carries the seed into the solver") {
  const ExperimentConfig cfg = parse_config(small_solve());
  CHECK(cfg.experiment == ExperimentKind::solve_nls);
  CHECK(cfg.seed == 3);
  CHECK(cfg.solver.rng_seed == 3);
  CHECK(cfg.problem.kind == ProblemKind::nls);
  CHECK(cfg.output_dir == "results");
}

TEST_CASE("execute is deterministic and the graph survives a round trip") {
  const ExperimentConfig cfg = parse_config(small_solve());
  const Artifacts a = execute(cfg);
  const Artifacts b = execute(cfg);
  CHECK(a.summary.dump() == b.summary.dump());
  CHECK(a.table.str() == b.table.str());
  CHECK_FALSE(a.not_converged);
  CHECK(graph_spec_from_json(a.summary["graph"]) == graph_spec_from_json(cfg.graph));
  CHECK(a.table.header().front() == "seed");
}

TEST_CASE("CLI: malformed JSON exits 2 and writes nothing") {
  const fs::path dir = scratch("malformed");
  const fs::path cfg = write_config(dir, "{\"experiment\": \"solve-nls\",");
  const fs::path out = dir / "out";
  CHECK(cli(dir, "solve-nls --config " + cfg.string() + " --out " + out.string()) == 2);
  CHECK_FALSE(fs::exists(out));
  const json err = json::parse(slurp(dir / "stderr.txt"));
  CHECK(err["error"] == "ParseError");
  CHECK(err.contains("message"));
}

TEST_CASE("CLI: experiment mismatch exits 2") {
  const fs::path dir = scratch("mismatch");
  const fs::path cfg = write_config(dir, small_solve().dump());
  CHECK(cli(dir, "threshold --config " + cfg.string() + " --out " + (dir / "out").string()) == 2);
  CHECK_FALSE(fs::exists(dir / "out"));
}

TEST_CASE("CLI: non-converged solve exits 3 with artifacts") {
  const fs::path dir = scratch("not_converged");
  json j = small_solve();
  j["graph"]["L"] = 10;
  j["solver"] = {{"max_iters", 1}};
  const fs::path cfg = write_config(dir, j.dump());
  const fs::path out = dir / "out";
  CHECK(cli(dir, "solve-nls --config " + cfg.string() + " --out " + out.string()) == 3);
  CHECK(fs::exists(out / "results.json"));
  CHECK(fs::exists(out / "results.csv"));
  CHECK(json::parse(slurp(dir / "stderr.txt"))["error"] == "NotConverged");
  CHECK(json::parse(slurp(out / "results.json"))["result"]["converged"] == false);
}

TEST_CASE("CLI: repeated runs give identical bytes, field and seed overrides apply") {
  const fs::path dir = scratch("repeat");
  const fs::path cfg = write_config(dir, small_solve().dump());
  const fs::path a = dir / "a", b = dir / "b";
  REQUIRE(cli(dir, "solve-nls --config " + cfg.string() + " --out " + a.string() + " --emit-field --seed 9") == 0);
  REQUIRE(cli(dir, "solve-nls --config " + cfg.string() + " --out " + b.string() +
                       " --emit-field --seed 9 --threads 2") == 0);
  for (const char* f : {"results.json", "results.csv", "field.csv"}) {
    REQUIRE(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  CHECK(json::parse(slurp(a / "results.json"))["seed"] == 9);
}

TEST_CASE("CLI: verify-lemmas and plot data") {
  const fs::path dir = scratch("lemmas");
  const fs::path cfg = write_config(dir, R"({"experiment": "verify-lemmas", "params": {"trials": 10}})");
  const fs::path out = dir / "out";
  REQUIRE(cli(dir, "verify-lemmas --config " + cfg.string() + " --out " + out.string()) == 0);
  std::ifstream in(out / "results.csv");
  const CsvTable t = read_csv(in);
  CHECK(t.header() == std::vector<std::string>{"check", "detail", "margin", "pass"});
  for (const auto& row : t.rows()) CHECK(row[3] == "true");

  CHECK(kind_of([&] { emit_plot_data(out, PlotKind::energy_vs_L); }) == ErrorKind::MissingColumns);
  CHECK(cli(dir, "plot-data " + out.string() + " --kind escape-vs-L") == 2);
}

TEST_CASE("CLI: compare writes plot-ready columns") {
  const fs::path dir = scratch("compare");
  const fs::path cfg = write_config(dir, R"({
    "experiment": "compare",
    "graph": {"construction": "sphere_deletion", "d": 2, "L": 6, "R": 2},
    "problem": {"a": 1.0, "p": 4.0},
    "params": {"a_grid": [0.5, 2.0]}
  })");
  const fs::path out = dir / "out";
  REQUIRE(cli(dir, "compare --config " + cfg.string() + " --out " + out.string()) == 0);
  const CsvTable plot = emit_plot_data(out / "results.csv", PlotKind::energy_vs_a);
  CHECK(plot.header() == std::vector<std::string>{"a", "E_perturbed", "E_base"});
  CHECK(plot.rows().size() == 2);
  const fs::path plot_file = dir / "plot.csv";
  CHECK(cli(dir, "plot-data " + out.string() + " --kind energy-vs-a --out " + plot_file.string()) == 0);
  CHECK(slurp(plot_file) == plot.str());
}

TEST_CASE("CLI: threshold on the line") {
  const fs::path dir = scratch("threshold");
  const fs::path cfg = write_config(dir, R"({
    "experiment": "threshold",
    "graph": {"construction": "lattice", "d": 1, "L": 8},
    "problem": {"p": 7.0},
    "params": {"a_range": [0.1, 4.0], "bracket_tol": 0.05}
  })");
  const fs::path out = dir / "out";
  REQUIRE(cli(dir, "threshold --config " + cfg.string() + " --out " + out.string()) == 0);
  const json r = json::parse(slurp(out / "results.json"));
  CHECK(r.contains("threshold"));
  std::ifstream in(out / "results.csv");
  CHECK(read_csv(in).header() == std::vector<std::string>{"a", "energy", "converged", "below"});
}
