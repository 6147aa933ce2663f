// Command-line front end:
//   varopt <experiment> --config <file.json> [--emit-field] [--out <dir>]
//                       [--seed <int>] [--threads <int>]
//   varopt plot-data <results.csv|dir> --kind <energy-vs-a|energy-vs-L|escape-vs-L>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "varopt/error.hpp"
#include "varopt/experiment.hpp"

namespace {

struct RunOptions {
  std::string config;
  bool emit_field = false;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

int run_experiment(const std::string& name, const RunOptions& opt) {
  using namespace varopt;
  try {
    std::ifstream in(opt.config);
    if (!in) raise(ErrorKind::ParseError, "cannot open config '" + opt.config + "'");
    json j;
    try {
      j = json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      raise(ErrorKind::ParseError, std::string("malformed config: ") + e.what());
    }
    if (!j.is_object()) raise(ErrorKind::ParseError, "config must be a JSON object");
    if (!j.contains("experiment")) j["experiment"] = name;
    if (j["experiment"] != name) {
      raise(ErrorKind::InvalidSpec, "config is for '" + j["experiment"].dump() + "', not '" + name + "'");
    }
    if (opt.seed) j["seed"] = *opt.seed;
    if (opt.out) j["output_dir"] = *opt.out;
    if (opt.threads) j["solver"]["threads"] = *opt.threads;
    ExperimentConfig cfg = parse_config(j);
    cfg.emit_field = opt.emit_field;
    return run(cfg, std::cerr);
  } catch (const Error& e) {
    report_error(std::cerr, to_string(e.kind()), e.what());
    return exit_code::validation;
  }
}

int run_plot(const std::string& results, const std::string& kind, const std::optional<std::string>& out) {
  using namespace varopt;
  try {
    const CsvTable table = emit_plot_data(results, plot_kind_from_string(kind));
    if (out) {
      std::ofstream f(*out);
      if (!f) raise(ErrorKind::InvalidSpec, "cannot write " + *out);
      table.write(f);
    } else {
      table.write(std::cout);
    }
    return exit_code::ok;
  } catch (const Error& e) {
    report_error(std::cerr, to_string(e.kind()), e.what());
    return exit_code::validation;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained variational problems on perturbed lattice graphs"};
  app.require_subcommand(1);

  RunOptions opt;
  std::string chosen;
  for (const char* name : {"solve-nls", "solve-sobolev", "threshold", "compare", "sobolev-gap",
                           "star-probe", "verify-lemmas"}) {
    auto* sub = app.add_subcommand(name, std::string("run the ") + name + " experiment");
    sub->add_option("--config", opt.config, "experiment config (JSON)")->required();
    sub->add_flag("--emit-field", opt.emit_field, "include the minimiser in the artifacts");
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--seed", opt.seed, "RNG seed for random restarts");
    sub->add_option("--threads", opt.threads, "worker threads (default $VAROPT_THREADS or 1)")
        ->check(CLI::PositiveNumber);
    sub->callback([&chosen, name] { chosen = name; });
  }

  std::string results;
  std::string kind;
  std::optional<std::string> plot_out;
  auto* plot = app.add_subcommand("plot-data", "extract a plot table from a results.csv");
  plot->add_option("results", results, "results.csv or run directory")->required();
  plot->add_option("--kind", kind, "energy-vs-a | energy-vs-L | escape-vs-L")->required();
  plot->add_option("--out", plot_out, "output CSV (default stdout)");
  plot->callback([&chosen] { chosen = "plot-data"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : varopt::exit_code::validation;
  }
  if (chosen == "plot-data") return run_plot(results, kind, plot_out);
  return run_experiment(chosen, opt);
}
