#include "varopt/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <set>

#include "varopt/error.hpp"

namespace varopt {

namespace fs = std::filesystem;

namespace {

template <class T>
T param(const json& j, const char* key) {
  if (!j.contains(key)) raise(ErrorKind::InvalidSpec, std::string("missing params.") + key);
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::InvalidSpec, std::string("params.") + key + ": " + e.what());
  }
}

template <class T>
T param_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return param<T>(j, key);
}

void require_params(const json& j, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) raise(ErrorKind::InvalidSpec, "params must be a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) raise(ErrorKind::InvalidSpec, "unknown key 'params." + key + "'");
  }
}

std::string bool_cell(bool b) { return b ? "true" : "false"; }

// The graph JSON with its truncation radius replaced.
json with_radius(json graph, int L) {
  graph["L"] = L;
  return graph;
}

json default_base(const json& graph) {
  const GraphSpec spec = graph_spec_from_json(graph);
  return to_json(lattice_spec(spec.d, spec.L, spec.boundary));
}

BoundaryMode boundary_param(const json& params) {
  return boundary_mode_from_string(param_or<std::string>(params, "boundary", "dirichlet"));
}

json graph_summary(const Graph& g) {
  if (g.is_lattice()) return to_json(g.spec());
  return {{"construction", g.spec().construction},
          {"n", g.size()},
          {"boundary", to_string(g.boundary())}};
}

CsvTable property_table(const PropertyReport& r) {
  CsvTable t({"check", "detail", "margin", "pass"});
  for (const PropertyCheck& c : r.checks) {
    t.add_row({c.name, c.detail, csv_number(c.margin), bool_cell(c.pass)});
  }
  return t;
}

// Checks experiment-specific fields before anything runs, so that invalid
// configs fail with exit code 2 and no artifacts.
void validate_params(const ExperimentConfig& cfg) {
  const json& p = cfg.params;
  switch (cfg.experiment) {
    case ExperimentKind::solve_nls:
    case ExperimentKind::solve_sobolev: {
      require_params(p, {});
      const Graph g = graph_from_json(cfg.graph);
      validate(cfg.problem, g.dim());
      break;
    }
    case ExperimentKind::threshold: {
      require_params(p, {"a_range", "L_list", "bracket_tol", "tol_neg", "max_probes"});
      const auto range = param<std::vector<double>>(p, "a_range");
      if (range.size() != 2) raise(ErrorKind::InvalidSpec, "params.a_range must have two entries");
      if (!(range[0] > 0.0) || !(range[1] > range[0])) {
        raise(ErrorKind::InvalidRange, "a_range must satisfy 0 < a_min < a_max");
      }
      const GraphSpec spec = graph_spec_from_json(cfg.graph);
      for (int L : param_or<std::vector<int>>(p, "L_list", {spec.L})) {
        validate(graph_spec_from_json(with_radius(cfg.graph, L)));
      }
      if (!(cfg.problem.p > 2.0)) raise(ErrorKind::InvalidSpec, "threshold needs p > 2");
      break;
    }
    case ExperimentKind::compare: {
      require_params(p, {"a_grid", "tol"});
      const Graph g = graph_from_json(cfg.graph);
      const Graph b = graph_from_json(cfg.base_graph.is_null() ? default_base(cfg.graph) : cfg.base_graph);
      if (g.dim() != b.dim() || g.box_radius() != b.box_radius()) {
        raise(ErrorKind::InvalidSpec, "compared graphs must share d and L");
      }
      if (param<std::vector<double>>(p, "a_grid").empty()) {
        raise(ErrorKind::InvalidSpec, "params.a_grid must not be empty");
      }
      validate(cfg.problem, g.dim());
      break;
    }
    case ExperimentKind::sobolev_gap: {
      require_params(p, {"d", "R_list", "L", "boundary"});
      const int d = param<int>(p, "d");
      const int L = param<int>(p, "L");
      const auto Rs = param<std::vector<int>>(p, "R_list");
      if (Rs.empty() || !std::is_sorted(Rs.begin(), Rs.end()) || 2 * Rs.back() >= L) {
        raise(ErrorKind::InvalidSpec, "R_list must be ascending with max(R_list) < L/2");
      }
      validate(lattice_spec(d, L, boundary_param(p)));
      ProblemSpec spec{ProblemKind::sobolev, 1.0, cfg.problem.p, 0.0};
      spec.q = sobolev_critical_exponent(d, spec.p);
      validate(spec, d);
      break;
    }
    case ExperimentKind::star_probe: {
      require_params(p, {"d", "R", "L_list", "tol_equal", "boundary"});
      const int d = param<int>(p, "d");
      const int R = param<int>(p, "R");
      const auto Ls = param<std::vector<int>>(p, "L_list");
      if (Ls.empty() || !std::is_sorted(Ls.begin(), Ls.end())) {
        raise(ErrorKind::InvalidSpec, "params.L_list must be non-empty and ascending");
      }
      for (int L : Ls) validate(star_addition_spec(d, R, L, boundary_param(p)));
      validate(cfg.problem, d);
      break;
    }
    case ExperimentKind::verify_lemmas: {
      require_params(p, {"d", "L", "trials", "E_grid", "J_grid", "rel_tol"});
      if (p.contains("E_grid") || p.contains("J_grid")) {
        const Graph g = graph_from_json(cfg.graph);
        if (p.contains("E_grid")) validate(ProblemSpec{ProblemKind::nls, 1.0, cfg.problem.p}, g.dim());
        if (p.contains("J_grid")) {
          validate(ProblemSpec{ProblemKind::sobolev, 1.0, cfg.problem.p, cfg.problem.q}, g.dim());
        }
      }
      if (param_or<int>(p, "trials", 100) < 1) raise(ErrorKind::InvalidSpec, "params.trials must be >= 1");
      break;
    }
  }
}

Artifacts run_solve(const ExperimentConfig& cfg) {
  const Graph g = graph_from_json(cfg.graph);
  SolverConfig solver = cfg.solver;
  const SolveResult r = minimize(g, cfg.problem, solver);

  Artifacts out;
  out.summary["graph"] = graph_summary(g);
  out.summary["result"] = to_json(r, cfg.emit_field);
  out.table = CsvTable({"seed", "energy", "multiplier", "el_residual", "converged", "iterations",
                        "center_of_mass_norm"});
  for (const RestartSummary& s : r.restarts) {
    out.table.add_row({s.seed, csv_number(s.energy), csv_number(s.multiplier),
                       csv_number(s.el_residual), bool_cell(s.converged),
                       std::to_string(s.iterations), csv_number(s.center_of_mass_sup)});
  }
  if (solver.record_trace) out.trace = trace_table(r.trace);
  if (cfg.emit_field) {
    std::vector<std::string> header;
    for (int k = 0; k < g.dim(); ++k) header.push_back("x" + std::to_string(k + 1));
    header.push_back("u");
    CsvTable field(header);
    for (std::size_t i = 0; i < g.size(); ++i) {
      std::vector<std::string> row;
      for (int c : g.vertex(static_cast<Graph::Id>(i)).coords) row.push_back(std::to_string(c));
      row.push_back(csv_number(r.minimizer[i]));
      field.add_row(std::move(row));
    }
    out.field = std::move(field);
  }
  out.not_converged = !r.converged;
  return out;
}

Artifacts run_threshold(const ExperimentConfig& cfg) {
  const json& p = cfg.params;
  const auto range = param<std::vector<double>>(p, "a_range");
  const GraphSpec spec = graph_spec_from_json(cfg.graph);
  ThresholdConfig tcfg;
  tcfg.bracket_tol = param_or<double>(p, "bracket_tol", tcfg.bracket_tol);
  tcfg.tol_neg = param_or<double>(p, "tol_neg", tcfg.tol_neg);
  tcfg.max_probes = param_or<int>(p, "max_probes", tcfg.max_probes);
  const json graph = cfg.graph;
  const ThresholdResult r = estimate_threshold(
      [&](int L) { return graph_spec_from_json(with_radius(graph, L)); },
      param_or<std::vector<int>>(p, "L_list", {spec.L}), cfg.problem.p, {range[0], range[1]},
      cfg.solver, tcfg);

  Artifacts out;
  out.summary["threshold"] = to_json(r);
  out.table = CsvTable({"a", "energy", "converged", "below"});
  for (const ThresholdProbe& pr : r.probes) {
    out.table.add_row({csv_number(pr.a), csv_number(pr.energy), bool_cell(pr.converged),
                       pr.below ? bool_cell(*pr.below) : "inconclusive"});
  }
  return out;
}

Artifacts run_compare(const ExperimentConfig& cfg) {
  const Graph g = graph_from_json(cfg.graph);
  const json base_json = cfg.base_graph.is_null() ? default_base(cfg.graph) : cfg.base_graph;
  const Graph b = graph_from_json(base_json);
  const ComparisonReport r =
      compare_energies(g, b, cfg.problem, param<std::vector<double>>(cfg.params, "a_grid"),
                       cfg.solver, param_or<double>(cfg.params, "tol", 0.0));
  Artifacts out;
  out.summary["graph"] = graph_summary(g);
  out.summary["base_graph"] = graph_summary(b);
  out.summary["comparison"] = to_json(r);
  out.table = CsvTable({"a", "E_perturbed", "E_base", "margin", "verdict"});
  for (std::size_t i = 0; i < r.a_grid.size(); ++i) {
    out.table.add_row({csv_number(r.a_grid[i]), csv_number(r.perturbed[i]), csv_number(r.base[i]),
                       csv_number(r.margins[i]), std::string(to_string(r.verdicts[i]))});
  }
  return out;
}

Artifacts run_sobolev_gap(const ExperimentConfig& cfg) {
  const json& p = cfg.params;
  const SobolevGapReport r =
      sobolev_critical_gap(param<int>(p, "d"), cfg.problem.p, param<std::vector<int>>(p, "R_list"),
                           param<int>(p, "L"), cfg.solver, boundary_param(p));
  Artifacts out;
  out.summary["sobolev_gap"] = to_json(r);
  out.table = CsvTable({"R", "ball_size", "bound", "measured", "J_base", "margin"});
  for (const SobolevGapRow& row : r.rows) {
    out.table.add_row({std::to_string(row.R), std::to_string(row.ball_size), csv_number(row.bound),
                       csv_number(row.measured), csv_number(r.J_base), csv_number(row.margin)});
  }
  return out;
}

Artifacts run_star_probe(const ExperimentConfig& cfg) {
  const json& p = cfg.params;
  const StarProbeReport r = star_nonattainment_probe(
      param<int>(p, "d"), param<int>(p, "R"), cfg.problem, param<std::vector<int>>(p, "L_list"),
      cfg.solver, param_or<double>(p, "tol_equal", 0.0), boundary_param(p));
  Artifacts out;
  out.summary["star_probe"] = to_json(r);
  out.table = CsvTable({"L", "E_star", "E_base", "gap", "center_of_mass_norm", "median_distance",
                        "base_center_of_mass_norm", "multiplier", "u0", "multiplier_reference",
                        "multiplier_gap"});
  for (const StarProbeRow& row : r.rows) {
    out.table.add_row({std::to_string(row.L), csv_number(row.energy_star),
                       csv_number(row.energy_base), csv_number(row.gap),
                       csv_number(row.center_of_mass), std::to_string(row.median_distance),
                       csv_number(row.base_center_of_mass), csv_number(row.multiplier),
                       csv_number(row.u0), csv_number(row.multiplier_reference),
                       csv_number(row.multiplier_gap)});
  }
  return out;
}

Artifacts run_verify_lemmas(const ExperimentConfig& cfg) {
  const json& p = cfg.params;
  LemmaSuiteConfig lcfg;
  lcfg.d = param_or<int>(p, "d", lcfg.d);
  lcfg.L = param_or<int>(p, "L", lcfg.L);
  lcfg.trials = param_or<int>(p, "trials", lcfg.trials);
  lcfg.seed = cfg.seed;
  PropertyReport all = lemma_suite(lcfg);
  Artifacts out;
  out.summary["lemma_suite"] = to_json(all);
  if (p.contains("E_grid") || p.contains("J_grid")) {
    const Graph g = graph_from_json(cfg.graph);
    out.summary["graph"] = graph_summary(g);
    if (p.contains("E_grid")) {
      const PropertyReport e =
          verify_E_properties(g, cfg.problem.p, param<std::vector<double>>(p, "E_grid"), cfg.solver);
      out.summary["E_properties"] = to_json(e);
      for (PropertyCheck c : e.checks) {
        c.name = "E_" + c.name;
        all.checks.push_back(std::move(c));
      }
    }
    if (p.contains("J_grid")) {
      const PropertyReport jr =
          verify_J_properties(g, cfg.problem.p, cfg.problem.q, param<std::vector<double>>(p, "J_grid"),
                              cfg.solver, param_or<double>(p, "rel_tol", 1e-4));
      out.summary["J_properties"] = to_json(jr);
      for (PropertyCheck c : jr.checks) {
        c.name = "J_" + c.name;
        all.checks.push_back(std::move(c));
      }
    }
  }
  out.summary["all_pass"] = all.all_pass();
  out.table = property_table(all);
  return out;
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::solve_nls: return "solve-nls";
    case ExperimentKind::solve_sobolev: return "solve-sobolev";
    case ExperimentKind::threshold: return "threshold";
    case ExperimentKind::compare: return "compare";
    case ExperimentKind::sobolev_gap: return "sobolev-gap";
    case ExperimentKind::star_probe: return "star-probe";
    case ExperimentKind::verify_lemmas: return "verify-lemmas";
  }
  return "?";
}

ExperimentKind experiment_kind_from_string(std::string_view name) {
  for (auto k : {ExperimentKind::solve_nls, ExperimentKind::solve_sobolev, ExperimentKind::threshold,
                 ExperimentKind::compare, ExperimentKind::sobolev_gap, ExperimentKind::star_probe,
                 ExperimentKind::verify_lemmas}) {
    if (to_string(k) == name) return k;
  }
  raise(ErrorKind::InvalidSpec, "unknown experiment '" + std::string(name) + "'");
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) raise(ErrorKind::InvalidSpec, "config must be a JSON object");
  const std::set<std::string> ok{"experiment", "graph", "base_graph", "problem", "solver",
                                 "params", "output_dir", "seed"};
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) raise(ErrorKind::InvalidSpec, "unknown config key '" + key + "'");
  }
  if (!j.contains("experiment") || !j["experiment"].is_string()) {
    raise(ErrorKind::InvalidSpec, "config needs an \"experiment\" name");
  }
  ExperimentConfig cfg;
  cfg.experiment = experiment_kind_from_string(j["experiment"].get<std::string>());
  if (j.contains("graph")) cfg.graph = j["graph"];
  if (j.contains("base_graph")) cfg.base_graph = j["base_graph"];
  if (j.contains("problem")) cfg.problem = problem_spec_from_json(j["problem"]);
  if (cfg.experiment == ExperimentKind::solve_nls) cfg.problem.kind = ProblemKind::nls;
  if (cfg.experiment == ExperimentKind::solve_sobolev) cfg.problem.kind = ProblemKind::sobolev;
  // Thread count defaults to $VAROPT_THREADS unless the config fixes it.
  SolverConfig base;
  base.threads = 0;
  cfg.solver = j.contains("solver") ? solver_config_from_json(j["solver"], base) : base;
  if (j.contains("params")) cfg.params = j["params"];
  if (j.contains("output_dir")) {
    if (!j["output_dir"].is_string()) raise(ErrorKind::InvalidSpec, "output_dir must be a string");
    cfg.output_dir = j["output_dir"].get<std::string>();
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer()) raise(ErrorKind::InvalidSpec, "seed must be an integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  cfg.solver.rng_seed = cfg.seed;

  const bool needs_graph = cfg.experiment == ExperimentKind::solve_nls ||
                           cfg.experiment == ExperimentKind::solve_sobolev ||
                           cfg.experiment == ExperimentKind::threshold ||
                           cfg.experiment == ExperimentKind::compare;
  if (needs_graph && cfg.graph.is_null()) raise(ErrorKind::InvalidSpec, "config needs a \"graph\"");
  validate_params(cfg);
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::ParseError, "cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    raise(ErrorKind::ParseError, std::string("malformed config: ") + e.what());
  }
  return parse_config(j);
}

Artifacts execute(const ExperimentConfig& cfg) {
  Artifacts out;
  switch (cfg.experiment) {
    case ExperimentKind::solve_nls:
    case ExperimentKind::solve_sobolev: out = run_solve(cfg); break;
    case ExperimentKind::threshold: out = run_threshold(cfg); break;
    case ExperimentKind::compare: out = run_compare(cfg); break;
    case ExperimentKind::sobolev_gap: out = run_sobolev_gap(cfg); break;
    case ExperimentKind::star_probe: out = run_star_probe(cfg); break;
    case ExperimentKind::verify_lemmas: out = run_verify_lemmas(cfg); break;
  }
  json summary;
  summary["experiment"] = to_string(cfg.experiment);
  summary["seed"] = cfg.seed;
  summary["problem"] = to_json(cfg.problem);
  summary["solver"] = to_json(cfg.solver);
  if (!cfg.params.empty()) summary["params"] = cfg.params;
  for (auto& [key, value] : out.summary.items()) summary[key] = value;
  out.summary = std::move(summary);
  return out;
}

void write_artifacts(const Artifacts& artifacts, const fs::path& dir) {
  fs::create_directories(dir);
  auto write = [&](const fs::path& name, auto&& fn) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) raise(ErrorKind::InvalidSpec, "cannot write " + (dir / name).string());
    fn(f);
  };
  write("results.json", [&](std::ostream& f) { f << artifacts.summary.dump(2) << '\n'; });
  write("results.csv", [&](std::ostream& f) { artifacts.table.write(f); });
  if (artifacts.trace) write("trace.csv", [&](std::ostream& f) { artifacts.trace->write(f); });
  if (artifacts.field) write("field.csv", [&](std::ostream& f) { artifacts.field->write(f); });
}

void report_error(std::ostream& err, std::string_view kind, std::string_view message) {
  json j;
  j["error"] = kind;
  j["message"] = message;
  err << j.dump() << '\n';
}

int run(const ExperimentConfig& cfg, std::ostream& err) {
  try {
    const Artifacts artifacts = execute(cfg);
    write_artifacts(artifacts, cfg.output_dir);
    if (artifacts.not_converged) {
      report_error(err, to_string(ErrorKind::NotConverged),
                   "solver stopped before the residual tolerance; best iterate written");
      return exit_code::not_converged;
    }
    return exit_code::ok;
  } catch (const Error& e) {
    report_error(err, to_string(e.kind()), e.what());
    const bool convergence =
        e.kind() == ErrorKind::NotConverged || e.kind() == ErrorKind::InconclusiveProbe;
    return convergence ? exit_code::not_converged : exit_code::validation;
  }
}

PlotKind plot_kind_from_string(std::string_view name) {
  if (name == "energy-vs-a") return PlotKind::energy_vs_a;
  if (name == "energy-vs-L") return PlotKind::energy_vs_L;
  if (name == "escape-vs-L") return PlotKind::escape_vs_L;
  raise(ErrorKind::InvalidSpec, "unknown plot kind '" + std::string(name) + "'");
}

CsvTable emit_plot_data(const fs::path& results_path, PlotKind kind) {
  const fs::path file = fs::is_directory(results_path) ? results_path / "results.csv" : results_path;
  std::ifstream in(file);
  if (!in) raise(ErrorKind::ParseError, "cannot open " + file.string());
  const CsvTable table = read_csv(in);
  const auto& header = table.header();
  auto column = [&](const std::string& name) -> std::optional<std::size_t> {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  auto pick = [&](const std::vector<std::string>& names) -> std::optional<CsvTable> {
    std::vector<std::size_t> idx;
    for (const auto& n : names) {
      const auto c = column(n);
      if (!c) return std::nullopt;
      idx.push_back(*c);
    }
    CsvTable out(names);
    for (const auto& row : table.rows()) {
      std::vector<std::string> cells;
      for (std::size_t i : idx) cells.push_back(row[i]);
      out.add_row(std::move(cells));
    }
    return out;
  };

  std::optional<CsvTable> out;
  switch (kind) {
    case PlotKind::energy_vs_a:
      out = pick({"a", "E_perturbed", "E_base"});
      if (!out) out = pick({"a", "energy"});
      break;
    case PlotKind::energy_vs_L: out = pick({"L", "E_star", "E_base"}); break;
    case PlotKind::escape_vs_L: out = pick({"L", "center_of_mass_norm"}); break;
  }
  if (!out) raise(ErrorKind::MissingColumns, file.string() + " lacks the columns for this plot");
  return *out;
}

}  // namespace varopt
