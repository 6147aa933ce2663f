#include "varopt/serialization.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "varopt/error.hpp"

namespace varopt {

namespace {

void require_keys(const json& j, std::initializer_list<const char*> allowed, const char* what) {
  if (!j.is_object()) raise(ErrorKind::InvalidSpec, std::string(what) + " must be a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) {
      raise(ErrorKind::InvalidSpec, std::string("unknown key '") + key + "' in " + what);
    }
  }
}

template <class T>
T get(const json& j, const char* key, const char* what) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::InvalidSpec, std::string(what) + "." + key + ": " + e.what());
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const char* what) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return get<T>(j, key, what);
}

json edges_to_json(const std::set<Edge>& edges) {
  json out = json::array();
  for (const Edge& e : edges) out.push_back({to_json(e.first()), to_json(e.second())});
  return out;
}

std::set<Edge> edges_from_json(const json& j, const char* what) {
  if (!j.is_array()) raise(ErrorKind::InvalidSpec, std::string(what) + " must be an array");
  std::set<Edge> out;
  for (const json& e : j) {
    if (!e.is_array() || e.size() != 2) {
      raise(ErrorKind::InvalidSpec, std::string(what) + " entries must be vertex pairs");
    }
    out.insert(Edge(vertex_from_json(e[0]), vertex_from_json(e[1])));
  }
  return out;
}

// JSON has no infinity; non-finite values become null.
json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

json to_json(const Vertex& v) { return json(v.coords); }

Vertex vertex_from_json(const json& j) {
  if (!j.is_array()) raise(ErrorKind::InvalidSpec, "vertex must be an integer array");
  std::vector<int> c;
  for (const json& x : j) {
    if (!x.is_number_integer()) raise(ErrorKind::InvalidSpec, "vertex coordinates must be integers");
    c.push_back(x.get<int>());
  }
  return Vertex(std::move(c));
}

json to_json(const GraphSpec& spec) {
  json j;
  j["construction"] = spec.construction;
  j["d"] = spec.d;
  j["L"] = spec.L;
  j["R"] = spec.R ? json(*spec.R) : json(nullptr);
  j["deletions"] = edges_to_json(spec.deletions);
  j["additions"] = edges_to_json(spec.additions);
  j["boundary"] = to_string(spec.boundary);
  return j;
}

GraphSpec graph_spec_from_json(const json& j) {
  const char* what = "graph";
  require_keys(j, {"construction", "d", "L", "R", "deletions", "additions", "boundary", "kept", "n"},
               what);
  const std::string name = get_or<std::string>(j, "construction", "lattice", what);
  const BoundaryMode boundary =
      boundary_mode_from_string(get_or<std::string>(j, "boundary", "dirichlet", what));
  const bool explicit_form = j.contains("deletions") || j.contains("additions");

  if (explicit_form) {
    GraphSpec spec;
    spec.construction = name;
    spec.d = get<int>(j, "d", what);
    spec.L = get<int>(j, "L", what);
    if (j.contains("R") && !j["R"].is_null()) spec.R = get<int>(j, "R", what);
    if (j.contains("deletions")) spec.deletions = edges_from_json(j["deletions"], "deletions");
    if (j.contains("additions")) spec.additions = edges_from_json(j["additions"], "additions");
    spec.boundary = boundary;
    validate(spec);
    return spec;
  }
  if (name == "lattice") {
    return lattice_spec(get<int>(j, "d", what), get<int>(j, "L", what), boundary);
  }
  if (name == "sphere_deletion") {
    std::optional<Edge> kept;
    if (j.contains("kept")) {
      const json& k = j["kept"];
      if (!k.is_array() || k.size() != 2) raise(ErrorKind::InvalidSpec, "kept must be a vertex pair");
      kept = Edge(vertex_from_json(k[0]), vertex_from_json(k[1]));
    }
    return sphere_deletion_spec(get<int>(j, "d", what), get<int>(j, "R", what),
                                get<int>(j, "L", what), kept, boundary);
  }
  if (name == "star_addition") {
    return star_addition_spec(get<int>(j, "d", what), get<int>(j, "R", what),
                              get<int>(j, "L", what), boundary);
  }
  if (name == "path") {
    raise(ErrorKind::InvalidSpec, "path graphs have no GraphSpec; use graph_from_json");
  }
  raise(ErrorKind::InvalidSpec, "unknown construction '" + name + "'");
}

Graph graph_from_json(const json& j) {
  if (j.is_object() && j.value("construction", "") == "path") {
    require_keys(j, {"construction", "n", "boundary"}, "graph");
    return make_path_graph(get<int>(j, "n", "graph"),
                           boundary_mode_from_string(get_or<std::string>(j, "boundary", "drop", "graph")));
  }
  return build_graph(graph_spec_from_json(j));
}

json to_json(const Field& u) {
  json out = json::array();
  for (double v : u.values()) out.push_back(v);
  return out;
}

Field field_from_json(const Graph& graph, const json& j) {
  if (!j.is_array()) raise(ErrorKind::InvalidSpec, "field must be an array");
  std::vector<double> values;
  for (const json& x : j) {
    if (!x.is_number()) raise(ErrorKind::InvalidSpec, "field entries must be numbers");
    values.push_back(x.get<double>());
  }
  return Field(graph, std::move(values));
}

json to_json(const EnergyReport& report) {
  json j;
  j["p"] = report.p;
  j["dirichlet_p"] = report.dirichlet_p;
  for (const auto& [q, value] : report.lq_norms) {
    j["lq_" + (std::isinf(q) ? std::string("inf") : csv_number(q))] = value;
  }
  j["phi"] = report.phi ? json(*report.phi) : json(nullptr);
  return j;
}

json to_json(const ProblemSpec& spec) {
  json j;
  j["kind"] = to_string(spec.kind);
  j["a"] = spec.a;
  j["p"] = spec.p;
  if (spec.kind == ProblemKind::sobolev) j["q"] = spec.q;
  if (spec.allow_subcritical) j["allow_subcritical"] = true;
  return j;
}

ProblemSpec problem_spec_from_json(const json& j) {
  const char* what = "problem";
  require_keys(j, {"kind", "a", "p", "q", "allow_subcritical"}, what);
  ProblemSpec spec;
  spec.kind = problem_kind_from_string(get_or<std::string>(j, "kind", "nls", what));
  spec.a = get_or<double>(j, "a", spec.a, what);
  spec.p = get_or<double>(j, "p", spec.p, what);
  spec.q = get_or<double>(j, "q", spec.q, what);
  spec.allow_subcritical = get_or<bool>(j, "allow_subcritical", false, what);
  return spec;
}

json to_json(const SolverConfig& cfg) {
  json j;
  j["max_iters"] = cfg.max_iters;
  j["step"] = cfg.step;
  j["tol_grad"] = cfg.tol_grad;
  j["restarts"] = cfg.restarts;
  json seeds = json::array();
  for (const SeedSpec& s : cfg.seeds) seeds.push_back(s.to_string());
  j["seeds"] = seeds;
  j["step_rule"] = cfg.step_rule == StepRule::fixed ? "fixed" : "backtracking";
  j["armijo"] = cfg.armijo;
  j["smoothing"] = cfg.smoothing;
  j["rng_seed"] = cfg.rng_seed;
  j["probe_radius"] = cfg.probe_radius;
  return j;
}

SolverConfig solver_config_from_json(const json& j, SolverConfig cfg) {
  const char* what = "solver";
  require_keys(j, {"max_iters", "step", "tol_grad", "restarts", "seeds", "step_rule", "armijo",
                   "smoothing", "rng_seed", "threads", "record_trace", "probe_radius"},
               what);
  cfg.max_iters = get_or<int>(j, "max_iters", cfg.max_iters, what);
  cfg.step = get_or<double>(j, "step", cfg.step, what);
  cfg.tol_grad = get_or<double>(j, "tol_grad", cfg.tol_grad, what);
  cfg.restarts = get_or<int>(j, "restarts", cfg.restarts, what);
  if (j.contains("seeds")) {
    cfg.seeds.clear();
    for (const auto& s : get<std::vector<std::string>>(j, "seeds", what)) {
      cfg.seeds.push_back(SeedSpec::parse(s));
    }
  }
  if (j.contains("step_rule")) {
    const auto rule = get<std::string>(j, "step_rule", what);
    if (rule == "fixed") {
      cfg.step_rule = StepRule::fixed;
    } else if (rule == "backtracking") {
      cfg.step_rule = StepRule::backtracking;
    } else {
      raise(ErrorKind::InvalidSpec, "step_rule must be fixed or backtracking");
    }
  }
  cfg.armijo = get_or<double>(j, "armijo", cfg.armijo, what);
  cfg.smoothing = get_or<double>(j, "smoothing", cfg.smoothing, what);
  cfg.rng_seed = get_or<std::uint64_t>(j, "rng_seed", cfg.rng_seed, what);
  cfg.threads = get_or<int>(j, "threads", cfg.threads, what);
  cfg.record_trace = get_or<bool>(j, "record_trace", cfg.record_trace, what);
  cfg.probe_radius = get_or<int>(j, "probe_radius", cfg.probe_radius, what);
  validate(cfg);
  return cfg;
}

json to_json(const Localization& loc) {
  json j;
  j["center_of_mass"] = loc.center_of_mass;
  j["center_of_mass_sup"] = loc.center_of_mass_sup();
  j["probe_radius"] = loc.probe_radius;
  j["mass_in_ball"] = loc.mass_in_ball;
  j["boundary_mass_fraction"] = loc.boundary_mass_fraction;
  j["median_sup_distance"] = loc.median_sup_distance;
  return j;
}

json to_json(const SolveResult& r, bool emit_field) {
  json j;
  j["problem"] = to_json(r.spec);
  j["energy"] = r.energy;
  j["multiplier"] = r.multiplier;
  j["el_residual"] = r.el_residual;
  j["converged"] = r.converged;
  j["approximate"] = r.approximate;
  j["iterations"] = r.iterations;
  j["seed"] = r.seed;
  j["ascent_steps"] = r.ascent_steps;
  j["localization"] = to_json(r.localization);
  json restarts = json::array();
  for (const RestartSummary& s : r.restarts) {
    restarts.push_back({{"seed", s.seed},
                        {"energy", number(s.energy)},
                        {"multiplier", s.multiplier},
                        {"el_residual", s.el_residual},
                        {"converged", s.converged},
                        {"iterations", s.iterations},
                        {"center_of_mass_sup", s.center_of_mass_sup}});
  }
  j["restarts"] = restarts;
  if (emit_field) j["minimizer"] = to_json(r.minimizer);
  return j;
}

json to_json(const ThresholdResult& r) {
  json j;
  j["kind"] = to_string(r.kind);
  j["alpha_lo"] = number(r.alpha_lo);
  j["alpha_hi"] = number(r.alpha_hi);
  j["p"] = r.p;
  j["tol_neg"] = r.tol_neg;
  j["graph_id"] = r.graph_id;
  json probes = json::array();
  for (const ThresholdProbe& p : r.probes) {
    probes.push_back({{"a", p.a},
                      {"energy", p.energy},
                      {"converged", p.converged},
                      {"below", p.below ? json(*p.below) : json(nullptr)}});
  }
  j["probes"] = probes;
  return j;
}

json to_json(const ComparisonReport& r) {
  json j;
  j["problem"] = to_json(r.spec);
  j["tol"] = r.tol;
  j["strict_margin"] = r.strict_margin;
  j["a_grid"] = r.a_grid;
  j["perturbed"] = r.perturbed;
  j["base"] = r.base;
  j["margins"] = r.margins;
  json verdicts = json::array();
  for (Verdict v : r.verdicts) verdicts.push_back(to_string(v));
  j["verdicts"] = verdicts;
  return j;
}

json to_json(const PropertyReport& r) {
  json j;
  j["all_pass"] = r.all_pass();
  j["violations"] = r.violations();
  if (!r.a_grid.empty()) {
    j["a_grid"] = r.a_grid;
    j["values"] = r.values;
    j["converged"] = r.converged;
  }
  json checks = json::array();
  for (const PropertyCheck& c : r.checks) {
    checks.push_back({{"name", c.name}, {"detail", c.detail}, {"margin", number(c.margin)}, {"pass", c.pass}});
  }
  j["checks"] = checks;
  return j;
}

json to_json(const SobolevGapReport& r) {
  json j;
  j["d"] = r.d;
  j["L"] = r.L;
  j["p"] = r.p;
  j["q"] = r.q;
  j["J_base"] = r.J_base;
  j["base_converged"] = r.base_converged;
  j["witness_R"] = r.witness_R ? json(*r.witness_R) : json(nullptr);
  json rows = json::array();
  for (const SobolevGapRow& row : r.rows) {
    rows.push_back({{"R", row.R},
                    {"ball_size", row.ball_size},
                    {"bound", row.bound},
                    {"measured", row.measured},
                    {"margin", row.margin}});
  }
  j["rows"] = rows;
  return j;
}

json to_json(const StarProbeReport& r) {
  json j;
  j["d"] = r.d;
  j["R"] = r.R;
  j["problem"] = to_json(r.spec);
  j["tol_equal"] = r.tol_equal;
  j["tol_multiplier"] = r.tol_multiplier;
  j["equality"] = r.equality;
  j["escape"] = r.escape;
  j["multiplier_mismatch"] = r.multiplier_mismatch;
  j["witness"] = r.witness();
  json rows = json::array();
  for (const StarProbeRow& row : r.rows) {
    rows.push_back({{"L", row.L},
                    {"energy_star", row.energy_star},
                    {"energy_base", row.energy_base},
                    {"gap", row.gap},
                    {"center_of_mass", row.center_of_mass},
                    {"median_distance", row.median_distance},
                    {"base_center_of_mass", row.base_center_of_mass},
                    {"multiplier", row.multiplier},
                    {"u0", row.u0},
                    {"multiplier_reference", row.multiplier_reference},
                    {"multiplier_gap", row.multiplier_gap}});
  }
  j["rows"] = rows;
  return j;
}

std::string csv_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != header_.size()) {
    raise(ErrorKind::InvalidSpec, "CSV row has " + std::to_string(row.size()) + " fields, header has " +
                                      std::to_string(header_.size()));
  }
  rows_.push_back(std::move(row));
}

void CsvTable::write(std::ostream& out) const {
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      out << cells[i];
    }
    out << '\n';
  };
  line(header_);
  for (const auto& row : rows_) line(row);
}

std::string CsvTable::str() const {
  std::ostringstream s;
  write(s);
  return s.str();
}

CsvTable trace_table(const std::vector<TracePoint>& trace) {
  CsvTable t({"iter", "energy", "residual", "step"});
  for (const TracePoint& p : trace) {
    t.add_row({std::to_string(p.iter), csv_number(p.energy), csv_number(p.residual),
               csv_number(p.step)});
  }
  return t;
}

CsvTable read_csv(std::istream& in) {
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream s(line);
    while (std::getline(s, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  };
  std::string line;
  if (!std::getline(in, line) || line.empty()) raise(ErrorKind::ParseError, "CSV has no header");
  CsvTable table(split(line));
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != table.header().size()) {
      raise(ErrorKind::ParseError, "CSV row width does not match header");
    }
    table.add_row(std::move(cells));
  }
  return table;
}

}  // namespace varopt
