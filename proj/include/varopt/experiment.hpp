#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "varopt/serialization.hpp"

namespace varopt {

enum class ExperimentKind {
  solve_nls,
  solve_sobolev,
  threshold,
  compare,
  sobolev_gap,
  star_probe,
  verify_lemmas,
};

std::string_view to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(std::string_view name);

/// Parsed experiment configuration. The JSON layout is
///   {"experiment": name, "graph": {...}, "base_graph": {...},
///    "problem": {...}, "solver": {...}, "params": {...},
///    "output_dir": path, "seed": int}
/// where "params" carries the experiment-specific fields documented in the
/// README.
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::solve_nls;
  json graph;
  json base_graph;
  ProblemSpec problem;
  SolverConfig solver;
  json params = json::object();
  std::filesystem::path output_dir = "results";
  std::uint64_t seed = 0;
  bool emit_field = false;
};

/// Throws InvalidSpec or ParseError. Construction parameters are validated
/// by building the referenced graphs.
ExperimentConfig parse_config(const json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Files produced by one run, held in memory until written.
struct Artifacts {
  json summary;
  CsvTable table{{}};
  std::optional<CsvTable> trace;
  std::optional<CsvTable> field;
  /// Set when a required probe did not converge.
  bool not_converged = false;
};

/// Runs the experiment without touching the filesystem.
Artifacts execute(const ExperimentConfig& cfg);

/// Writes results.json, results.csv and, if present, trace.csv and
/// field.csv into cfg.output_dir.
void write_artifacts(const Artifacts& artifacts, const std::filesystem::path& dir);

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int validation = 2;
inline constexpr int not_converged = 3;
}  // namespace exit_code

/// Executes and writes artifacts; errors are reported as one JSON object
/// on `err`. Returns the process exit code.
int run(const ExperimentConfig& cfg, std::ostream& err);

/// Structured error line: {"error": kind, "message": text}.
void report_error(std::ostream& err, std::string_view kind, std::string_view message);

enum class PlotKind { energy_vs_a, energy_vs_L, escape_vs_L };
PlotKind plot_kind_from_string(std::string_view name);

/// Extracts a two- or three-column table from a results.csv (or a run
/// directory containing one). Throws MissingColumns if the file lacks the
/// columns for `kind`.
CsvTable emit_plot_data(const std::filesystem::path& results_path, PlotKind kind);

}  // namespace varopt
