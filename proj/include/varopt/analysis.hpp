#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "varopt/lattice_graph.hpp"
#include "varopt/variational_solver.hpp"

namespace varopt {

// ---------------------------------------------------------------------------
// Threshold bisection

struct ThresholdConfig {
  /// Energies below -tol_neg count as negative.
  double tol_neg = 1e-6;
  double bracket_tol = 1e-2;
  int max_probes = 64;
};

struct ThresholdProbe {
  double a = 0.0;
  double energy = 0.0;
  bool converged = false;
  /// Sign classification; absent when the probe was inconclusive.
  std::optional<bool> below;
};

struct ThresholdResult {
  enum class Kind { bracket, all_below, all_above };
  Kind kind = Kind::bracket;
  /// For all_below, alpha_hi is a_min and alpha_lo is 0; for all_above,
  /// alpha_lo is a_max and alpha_hi is +inf.
  double alpha_lo = 0.0;
  double alpha_hi = 0.0;
  double p = 0.0;
  double tol_neg = 0.0;
  std::string graph_id;
  std::vector<ThresholdProbe> probes;
};

std::string_view to_string(ThresholdResult::Kind kind);

using GraphFamily = std::function<GraphSpec(int L)>;

/// Bisection on a for the sign change of E^{a,p}, probed on the largest
/// truncation in L_list. A probe whose solve did not converge still counts
/// as negative when its energy is below -tol_neg, since any feasible field
/// bounds E from above. Throws InvalidRange for a bad a_range and
/// InconclusiveProbe when no converged probe can be found near a midpoint.
ThresholdResult estimate_threshold(const GraphFamily& family, const std::vector<int>& L_list,
                                   double p, std::pair<double, double> a_range,
                                   const SolverConfig& cfg, const ThresholdConfig& tcfg = {});

// ---------------------------------------------------------------------------
// Energy comparisons

enum class Verdict { strict, holds, violated };
std::string_view to_string(Verdict v);

/// "strict" iff perturbed < base - strict_margin; "holds" iff
/// perturbed <= base + tol; otherwise "violated".
Verdict classify(double perturbed, double base, double tol, double strict_margin);

struct ComparisonReport {
  ProblemSpec spec;
  std::vector<double> a_grid;
  std::vector<double> perturbed;
  std::vector<double> base;
  /// base - perturbed.
  std::vector<double> margins;
  std::vector<Verdict> verdicts;
  double tol = 0.0;
  double strict_margin = 0.0;
};

/// Solves spec (with a taken from a_grid) on both graphs. tol <= 0 selects
/// cfg.tol_grad; the strict margin is 10 * cfg.tol_grad. Throws InvalidSpec
/// if the graphs differ in (d, L) and NotConverged if any solve fails.
ComparisonReport compare_energies(const Graph& perturbed, const Graph& base,
                                  const ProblemSpec& spec, const std::vector<double>& a_grid,
                                  const SolverConfig& cfg, double tol = 0.0);

// ---------------------------------------------------------------------------
// Property checks

struct PropertyCheck {
  std::string name;
  std::string detail;
  /// Signed slack: >= 0 when the property holds.
  double margin = 0.0;
  bool pass = false;
};

struct PropertyReport {
  std::vector<double> a_grid;
  std::vector<double> values;
  std::vector<bool> converged;
  std::vector<PropertyCheck> checks;

  bool all_pass() const;
  std::size_t violations() const;
};

struct EPropertyTolerances {
  double sign = 1e-8;
  double monotone = 1e-6;
  double subadditive = 1e-6;
};

/// E(a) <= tol, E non-increasing along the grid and E(a+b) <= E(a) + E(b)
/// for grid pairs with a + b on the grid. Violations are reported.
PropertyReport verify_E_properties(const Graph& graph, double p, const std::vector<double>& a_grid,
                                   const SolverConfig& cfg, const EPropertyTolerances& tol = {});

/// Homogeneity J(a) = a^{p/q} J(a_0) relative to the first grid point,
/// J(theta a) < theta J(a) for theta in {2, 4} (solving at theta a as
/// needed) and J(a+b) < J(a) + J(b) on pairs within the solved set.
PropertyReport verify_J_properties(const Graph& graph, double p, double q,
                                   const std::vector<double>& a_grid, const SolverConfig& cfg,
                                   double rel_tol = 1e-4);

// ---------------------------------------------------------------------------
// Sobolev constant and the critical gap construction

struct SobolevConstant {
  double J1 = 0.0;
  /// J1^{1/p}: the best constant of the truncation.
  double S = 0.0;
  double el_residual = 0.0;
  int iterations = 0;
};

/// Throws NotConverged.
SobolevConstant estimate_sobolev_constant(const Graph& graph, double p, double q,
                                          const SolverConfig& cfg);

/// |B_R|^{-1/q} on B_R, zero elsewhere.
Field ball_indicator(const Graph& graph, int R, double q);

struct SobolevGapRow {
  int R = 0;
  std::size_t ball_size = 0;
  /// |B_R|^{-p/q}.
  double bound = 0.0;
  /// dirichlet_energy of the ball indicator on the sphere-deletion graph.
  double measured = 0.0;
  /// J_base - bound.
  double margin = 0.0;
};

struct SobolevGapReport {
  int d = 0;
  int L = 0;
  double p = 0.0;
  double q = 0.0;
  double J_base = 0.0;
  bool base_converged = false;
  std::vector<SobolevGapRow> rows;
  std::optional<int> witness_R;
};

/// Requires R_list ascending with max(R_list) < L/2; q is the critical
/// exponent dp/(d-p). Throws NotConverged if the base solve fails.
SobolevGapReport sobolev_critical_gap(int d, double p, const std::vector<int>& R_list, int L,
                                      const SolverConfig& cfg,
                                      BoundaryMode boundary = BoundaryMode::dirichlet);

// ---------------------------------------------------------------------------
// Star nonattainment probe

struct StarProbeRow {
  int L = 0;
  double energy_star = 0.0;
  double energy_base = 0.0;
  double gap = 0.0;
  double center_of_mass = 0.0;
  int median_distance = 0;
  double base_center_of_mass = 0.0;
  double multiplier = 0.0;
  double u0 = 0.0;
  /// u(0)^{p-2} for nls; 0 for sobolev.
  double multiplier_reference = 0.0;
  double multiplier_gap = 0.0;
  bool converged = false;
};

struct StarProbeReport {
  int d = 0;
  int R = 0;
  ProblemSpec spec;
  double tol_equal = 0.0;
  double tol_multiplier = 0.0;
  std::vector<StarProbeRow> rows;
  bool equality = false;
  bool escape = false;
  bool multiplier_mismatch = false;

  /// Equality, escape and multiplier mismatch together.
  bool witness() const { return equality && escape && multiplier_mismatch; }
};

/// tol_equal <= 0 selects 2 * cfg.tol_grad; the multiplier mismatch must
/// exceed 10 * cfg.tol_grad. Throws NotConverged.
StarProbeReport star_nonattainment_probe(int d, int R, const ProblemSpec& spec,
                                         const std::vector<int>& L_list, const SolverConfig& cfg,
                                         double tol_equal = 0.0,
                                         BoundaryMode boundary = BoundaryMode::dirichlet);

// ---------------------------------------------------------------------------
// Random-field lemma checks

/// Running maximum of ||u||_q / dirichlet_energy(u, p)^{1/p}.
class SobolevBoundTracker {
 public:
  SobolevBoundTracker(double p, double q) : p_(p), q_(q) {}
  /// Records the quotient of u and returns it; zero-energy fields are skipped.
  double observe(const Graph& graph, std::span<const double> u);
  double bound() const { return bound_; }
  const std::vector<double>& history() const { return history_; }

 private:
  double p_;
  double q_;
  double bound_ = 0.0;
  std::vector<double> history_;
};

/// v + translate(w, -shift): w moved so that its support sits at `shift`.
Field split_sequence_term(const Field& v, const Field& w, const Vertex& shift);

struct LemmaSuiteConfig {
  int d = 2;
  int L = 6;
  int trials = 100;
  std::uint64_t seed = 0;
};

/// One row per lemma: norm nesting, NLS lower bound, the two split-sequence
/// identities, integration by parts, the analytic gradient against finite
/// differences and the running Sobolev bound. Each row aggregates `trials`
/// random fields; margin is the worst slack seen.
PropertyReport lemma_suite(const LemmaSuiteConfig& cfg);

}  // namespace varopt
