#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "varopt/analysis.hpp"
#include "varopt/discrete_calculus.hpp"
#include "varopt/lattice_graph.hpp"
#include "varopt/variational_solver.hpp"

namespace varopt {

using json = nlohmann::ordered_json;

// Graph specs. The explicit form is
//   {"d", "L", "R": int|null, "deletions": [[x, y], ...], "additions": [...],
//    "boundary": "drop"|"dirichlet", "construction": name}
// with vertices as integer arrays. A named form without edge lists is also
// accepted: {"construction": "lattice"|"sphere_deletion"|"star_addition"|
// "path", "d", "L", "R", "kept": [x, y], "n", "boundary"}.
json to_json(const GraphSpec& spec);
GraphSpec graph_spec_from_json(const json& j);
/// Builds the graph for either form; "path" yields make_path_graph(n).
Graph graph_from_json(const json& j);

json to_json(const Vertex& v);
Vertex vertex_from_json(const json& j);

/// Values in canonical vertex order.
json to_json(const Field& u);
Field field_from_json(const Graph& graph, const json& j);

/// {"p", "dirichlet_p", "lq_<q>": ..., "phi": value|null}.
json to_json(const EnergyReport& report);

json to_json(const ProblemSpec& spec);
ProblemSpec problem_spec_from_json(const json& j);
json to_json(const SolverConfig& cfg);
/// Missing keys keep their defaults.
SolverConfig solver_config_from_json(const json& j, SolverConfig base = {});

json to_json(const Localization& loc);
json to_json(const SolveResult& result, bool emit_field);

json to_json(const ThresholdResult& r);
json to_json(const ComparisonReport& r);
json to_json(const PropertyReport& r);
json to_json(const SobolevGapReport& r);
json to_json(const StarProbeReport& r);

/// %.17g, so that values round-trip exactly.
std::string csv_number(double x);

/// Comma-separated table with a fixed header.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
  /// Throws InvalidSpec if the row width differs from the header.
  void add_row(std::vector<std::string> row);
  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  void write(std::ostream& out) const;
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Columns iter, energy, residual, step.
CsvTable trace_table(const std::vector<TracePoint>& trace);

/// Parses a table written by CsvTable::write; throws ParseError.
CsvTable read_csv(std::istream& in);

}  // namespace varopt
