// Acceptance runner: one PASS/FAIL line per criterion.
//   acceptance                 run every criterion
//   acceptance --criterion N   run criterion N only
// Exit status is 0 iff every selected criterion passed.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "varopt/analysis.hpp"
#include "varopt/error.hpp"
#include "varopt/experiment.hpp"

using namespace varopt;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ProblemSpec nls(double a, double p) {
  ProblemSpec s;
  s.kind = ProblemKind::nls;
  s.a = a;
  s.p = p;
  return s;
}

ProblemSpec sobolev(double a, double p, double q, bool subcritical = false) {
  ProblemSpec s;
  s.kind = ProblemKind::sobolev;
  s.a = a;
  s.p = p;
  s.q = q;
  s.allow_subcritical = subcritical;
  return s;
}

Outcome oracle_equivalence() {
  const SolverConfig cfg;
  double worst = 0.0;
  bool all_converged = true;
  auto check = [&](const Graph& g, const ProblemSpec& spec) {
    const SolveResult r = minimize(g, spec, cfg);
    all_converged &= r.converged;
    worst = std::max(worst, std::abs(r.energy - brute_force_oracle(g, spec)));
  };
  for (int n : {2, 3}) {
    const Graph path = make_path_graph(n);
    for (double p : {3.0, 4.0, 6.0}) check(path, nls(1.0, p));
    // Both boundary modes; the problem is subcritical on a path.
    check(path, sobolev(1.0, 2.0, 6.0, true));
    check(make_path_graph(n, BoundaryMode::dirichlet), sobolev(1.0, 2.0, 6.0, true));
  }
  const Graph two = make_path_graph(2);
  const double closed = minimize(two, nls(1.0, 4.0), cfg).energy;
  const bool exact = std::abs(closed + 0.125) <= 1e-12;
  return {worst <= 1e-5 && exact && all_converged,
          fmt("max |solver - oracle| = %.3e (tol 1e-5), two-vertex p=4 energy %.15f", worst, closed)};
}

Outcome delta_identity() {
  double worst = 0.0;
  for (int d = 1; d <= 3; ++d) {
    const Graph g = build_graph(lattice_spec(d, 3));
    for (double a : {0.5, 1.0, 4.0}) {
      for (double p : {3.0, 4.0, 6.0}) {
        const Field u = Field::delta(g, Vertex::origin(d), std::sqrt(a));
        const double expected = d * a - std::pow(a, p / 2.0) / p;
        worst = std::max(worst, std::abs(nls_energy(g, u, p) - expected));
      }
    }
  }
  return {worst <= 1e-12, fmt("max deviation %.3e over 27 cases (tol 1e-12)", worst)};
}

Outcome ball_indicator_identity() {
  double worst = 0.0;
  for (int R : {2, 3}) {
    const Graph g = build_graph(sphere_deletion_spec(3, R, 3 * R));
    const double e = dirichlet_energy(g, ball_indicator(g, R, 6.0), 2.0);
    worst = std::max(worst, std::abs(e - 1.0 / (2 * R - 1)));
  }
  return {worst <= 1e-12, fmt("max deviation %.3e for R in {2,3} (tol 1e-12)", worst)};
}

Outcome lemma_checks() {
  const PropertyReport r = lemma_suite(LemmaSuiteConfig{});
  std::string detail;
  for (const PropertyCheck& c : r.checks) {
    detail += fmt("%s%s margin %.2e%s", detail.empty() ? "" : "; ", c.name.c_str(), c.margin,
                  c.pass ? "" : " VIOLATED");
  }
  return {r.all_pass(), detail};
}

Outcome e_properties() {
  const Graph g = build_graph(lattice_spec(1, 20));
  std::vector<double> grid;
  for (int k = 1; k <= 10; ++k) grid.push_back(0.5 * k);
  const PropertyReport r = verify_E_properties(g, 4.0, grid, SolverConfig{}, EPropertyTolerances{1e-8, 1e-6, 1e-6});
  bool converged = true;
  for (bool c : r.converged) converged &= c;
  return {r.all_pass() && converged,
          fmt("%zu checks, %zu violations, E(0.5) = %.6g, E(5) = %.6g", r.checks.size(), r.violations(),
              r.values.front(), r.values.back())};
}

Outcome j_homogeneity() {
  const Graph g = build_graph(lattice_spec(3, 10, BoundaryMode::dirichlet));
  const SolverConfig cfg;
  std::vector<double> ratios;
  double worst = 0.0;
  bool converged = true;
  for (double a : {1.0, 8.0, 64.0}) {
    const SolveResult r = minimize(g, sobolev(a, 2.0, 6.0), cfg);
    converged &= r.converged;
    ratios.push_back(r.energy / std::cbrt(a));
  }
  for (double x : ratios) worst = std::max(worst, std::abs(x / ratios.front() - 1.0));
  const SolveResult two = minimize(g, sobolev(2.0, 2.0, 6.0), cfg);
  converged &= two.converged;
  const double J1 = ratios.front();
  const bool strict = two.energy < 2.0 * J1;
  return {worst <= 1e-4 && strict && converged,
          fmt("J(a)/a^(1/3) = %.10f, max rel spread %.3e (tol 1e-4); J(2) = %.10f < 2 J(1) = %.10f", J1, worst,
              two.energy, 2.0 * J1)};
}

Outcome comparisons() {
  const SolverConfig cfg;
  const std::vector<double> grid{1.0, 4.0};
  const Graph base1 = build_graph(lattice_spec(1, 20));
  const Graph star = build_graph(star_addition_spec(1, 2, 20));
  const ComparisonReport add = compare_energies(star, base1, nls(1.0, 4.0), grid, cfg);
  double worst_eq = 0.0;
  for (double m : add.margins) worst_eq = std::max(worst_eq, std::abs(m));

  // One-dimensional sphere deletion disconnects the line; the deletion
  // comparison runs in two dimensions.
  const Graph base2 = build_graph(lattice_spec(2, 20));
  const Graph del = build_graph(sphere_deletion_spec(2, 2, 20));
  const ComparisonReport sub = compare_energies(del, base2, nls(1.0, 4.0), grid, cfg);
  double worst_excess = -kInfinity;
  for (double m : sub.margins) worst_excess = std::max(worst_excess, -m);

  return {worst_eq <= 2e-6 && worst_excess <= 1e-8,
          fmt("(i) max |E_G - E_Z| = %.3e (tol 2e-6); (ii) max E_G - E_Z = %.3e (tol 1e-8)", worst_eq,
              worst_excess)};
}

Outcome sobolev_gap() {
  const SobolevGapReport r = sobolev_critical_gap(3, 2.0, {2, 3, 4}, 12, SolverConfig{});
  std::string detail = fmt("J_base(1) = %.10f;", r.J_base);
  for (const SobolevGapRow& row : r.rows) detail += fmt(" R=%d bound %.6f margin %.6f;", row.R, row.bound, row.margin);
  detail += r.witness_R ? fmt(" witness R = %d", *r.witness_R) : std::string(" no witness");
  return {r.witness_R.has_value() && r.base_converged, detail};
}

Outcome star_escape() {
  const StarProbeReport r = star_nonattainment_probe(1, 11, nls(5.0, 4.0), {15, 20, 25}, SolverConfig{}, 2e-6);
  std::string detail;
  for (const StarProbeRow& row : r.rows) {
    detail += fmt("L=%d gap %.3e com %.2f |lambda-u0^2| %.3e; ", row.L, row.gap, row.center_of_mass, row.multiplier_gap);
  }
  detail += fmt("equality %s, escape %s, mismatch %s", r.equality ? "yes" : "no", r.escape ? "yes" : "no",
                r.multiplier_mismatch ? "yes" : "no");
  return {r.witness(), detail};
}

std::vector<std::string> csv_files(const fs::path& dir) {
  std::vector<std::string> out;
  for (const char* name : {"results.csv", "trace.csv", "field.csv"}) {
    std::ifstream in(dir / name, std::ios::binary);
    if (!in) continue;
    std::ostringstream s;
    s << in.rdbuf();
    out.push_back(name + std::string(":") + s.str());
  }
  return out;
}

Outcome determinism() {
  const std::vector<std::pair<std::string, std::string>> configs = {
      {"solve", R"({"experiment": "solve-nls", "graph": {"construction": "lattice", "d": 1, "L": 20},
                    "problem": {"a": 5.0, "p": 4.0}, "solver": {"record_trace": true}, "seed": 7})"},
      {"compare", R"({"experiment": "compare", "graph": {"construction": "star_addition", "d": 1, "L": 20, "R": 2},
                      "problem": {"p": 4.0}, "params": {"a_grid": [1.0, 4.0]}, "seed": 7})"},
      {"gap", R"({"experiment": "sobolev-gap", "problem": {"p": 2.0},
                  "params": {"d": 3, "R_list": [2, 3, 4], "L": 12}, "seed": 7})"},
      {"lemmas", R"({"experiment": "verify-lemmas", "graph": {"construction": "lattice", "d": 1, "L": 20},
                     "problem": {"p": 4.0}, "params": {"E_grid": [0.5, 1.0, 1.5, 2.0]}, "seed": 7})"},
  };
  const fs::path root = fs::temp_directory_path() / "varopt_acceptance_determinism";
  fs::remove_all(root);
  std::string detail;
  bool pass = true;
  for (const auto& [name, text] : configs) {
    ExperimentConfig cfg = parse_config(json::parse(text));
    cfg.emit_field = true;
    std::vector<std::string> runs[2];
    for (int k = 0; k < 2; ++k) {
      const fs::path dir = root / name / std::to_string(k);
      write_artifacts(execute(cfg), dir);
      runs[k] = csv_files(dir);
    }
    const bool same = !runs[0].empty() && runs[0] == runs[1];
    pass &= same;
    detail += fmt("%s%s %s (%zu files)", detail.empty() ? "" : "; ", name.c_str(), same ? "identical" : "DIFFER",
                  runs[0].size());
  }
  fs::remove_all(root);
  return {pass, detail};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "oracle equivalence", oracle_equivalence},
      {2, "delta identity", delta_identity},
      {3, "ball indicator identity", ball_indicator_identity},
      {4, "lemma suite", lemma_checks},
      {5, "E properties", e_properties},
      {6, "J homogeneity", j_homogeneity},
      {7, "comparison of energies", comparisons},
      {8, "critical Sobolev gap witness", sobolev_gap},
      {9, "star nonattainment witness", star_escape},
      {10, "determinism", determinism},
  };

  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: acceptance [--criterion N]\n");
      return 2;
    }
  }

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (only != 0 && c.id != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const Error& e) {
      o = {false, std::string(to_string(e.kind())) + ": " + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s C%d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
