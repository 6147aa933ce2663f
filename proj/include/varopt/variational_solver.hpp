#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "varopt/discrete_calculus.hpp"
#include "varopt/lattice_graph.hpp"

namespace varopt {

enum class ProblemKind { nls, sobolev };

std::string_view to_string(ProblemKind kind);
ProblemKind problem_kind_from_string(std::string_view name);

/// One of the two constrained problems.
///
///  - nls:     minimise Phi(u) over ||u||_2^2 = a, p > 2.
///  - sobolev: minimise dirichlet_energy(u, p) over ||u||_q^q = a, with
///             1 <= p < d and q >= dp/(d-p) unless allow_subcritical.
struct ProblemSpec {
  ProblemKind kind = ProblemKind::nls;
  double a = 1.0;
  double p = 4.0;
  double q = 0.0;
  bool allow_subcritical = false;
};

/// Throws InvalidSpec if the exponents or mass are inadmissible for
/// dimension d.
void validate(const ProblemSpec& spec, int d);

/// 2 + 4/d.
double mass_critical_exponent(int d);
/// dp/(d-p); requires p < d.
double sobolev_critical_exponent(int d, double p);

enum class StepRule { fixed, backtracking };

/// Initial-field descriptor. Textual forms: "delta", "gaussian[:width]",
/// "random", "bump:x1,...,xd[:width]", "translates[:stride]".
struct SeedSpec {
  enum class Kind { delta, gaussian, random, bump, translates };
  Kind kind = Kind::delta;
  double width = 0.0;   // 0 selects a size-dependent default
  int stride = 0;       // translates only; 0 selects a size-dependent default
  Vertex centre;        // bump only

  static SeedSpec parse(std::string_view text);
  std::string to_string() const;
};

struct SolverConfig {
  int max_iters = 50000;
  double step = 0.1;
  double tol_grad = 1e-8;
  /// Number of random starts added to the deterministic seeds.
  int restarts = 2;
  std::vector<SeedSpec> seeds{SeedSpec::parse("delta"), SeedSpec::parse("gaussian"),
                              SeedSpec::parse("translates")};
  StepRule step_rule = StepRule::backtracking;
  double armijo = 1e-4;
  /// eps for the p = 1 smoothing |t|_eps = sqrt(t^2 + eps^2).
  double smoothing = 1e-8;
  std::uint64_t rng_seed = 0;
  int threads = 1;
  bool record_trace = false;
  /// Radius used for mass_in_ball in the localization record; 0 means L/2.
  int probe_radius = 0;
};

/// Throws InvalidSpec if a config invariant fails.
void validate(const SolverConfig& cfg);

struct Localization {
  std::vector<double> center_of_mass;
  double mass_in_ball = 0.0;
  int probe_radius = 0;
  double boundary_mass_fraction = 0.0;
  /// |m|_inf of the coordinate-wise weighted median m.
  int median_sup_distance = 0;

  double center_of_mass_sup() const;
};

struct TracePoint {
  int iter;
  double energy;
  double residual;
  double step;
};

/// Outcome of one start, kept for reporting.
struct RestartSummary {
  std::string seed;
  double energy = 0.0;
  double multiplier = 0.0;
  double el_residual = 0.0;
  bool converged = false;
  int iterations = 0;
  double center_of_mass_sup = 0.0;
};

struct SolveResult {
  SolveResult(const ProblemSpec& s, Field u) : spec(s), minimizer(std::move(u)) {}

  ProblemSpec spec;
  Field minimizer;
  double energy = 0.0;
  double multiplier = 0.0;
  double el_residual = 0.0;
  bool converged = false;
  /// Set when p = 1 was handled through smoothing.
  bool approximate = false;
  int iterations = 0;
  std::string seed;
  Localization localization;
  std::vector<RestartSummary> restarts;
  std::vector<TracePoint> trace;
  /// Descent violations seen under backtracking (should stay 0).
  int ascent_steps = 0;
};

/// Lagrange multiplier and Euler-Lagrange residual of `u` for `spec`.
///  nls:     lambda = (||u||_p^p - dirichlet_2)/a,
///           residual = || -Delta u + lambda u - |u|^(p-2) u ||_2
///  sobolev: lambda = dirichlet_p / ||u||_q^q,
///           residual = || -Delta_p u - lambda |u|^(q-2) u ||_2
struct Stationarity {
  double energy;
  double multiplier;
  double residual;
};
Stationarity stationarity(const Graph& graph, const ProblemSpec& spec,
                          std::span<const double> u);

/// Functional value of spec.kind evaluated at u (no constraint enforcement).
double objective(const Graph& graph, const ProblemSpec& spec, std::span<const double> u);

SolveResult minimize_nls(const Graph& graph, const ProblemSpec& spec,
                         const SolverConfig& cfg);
SolveResult minimize_sobolev(const Graph& graph, const ProblemSpec& spec,
                             const SolverConfig& cfg);
/// Dispatches on spec.kind.
SolveResult minimize(const Graph& graph, const ProblemSpec& spec, const SolverConfig& cfg);

/// Initial fields produced by cfg for `graph`, paired with their labels.
/// Fields are nonnegative and not yet normalised.
std::vector<std::pair<std::string, std::vector<double>>> initial_fields(
    const Graph& graph, const SolverConfig& cfg);

struct OracleGrid {
  /// Target angular resolution of the final refinement level.
  double resolution = 1e-4;
  /// Half-width, in cells of the previous level, of each refinement window.
  double box_bound = 2.0;
};

/// Exhaustive angular search over the constraint sphere, for graphs with at
/// most 4 vertices. Throws TooLarge otherwise.
double brute_force_oracle(const Graph& graph, const ProblemSpec& spec,
                          const OracleGrid& grid = {});

/// Localization diagnostics of u. Weights are u^2 (nls) or |u|^q (sobolev).
Localization localization_report(const Graph& graph, const ProblemSpec& spec,
                                 std::span<const double> u, int probe_radius);
inline Localization localization_report(const SolveResult& result, int probe_radius) {
  return localization_report(result.minimizer.graph(), result.spec,
                             result.minimizer.values(), probe_radius);
}

}  // namespace varopt
