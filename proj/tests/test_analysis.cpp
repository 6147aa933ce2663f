#include <doctest.h>

#include <cmath>

#include "varopt/analysis.hpp"
#include "varopt/error.hpp"

using namespace varopt;

namespace {

ProblemSpec nls(double a, double p) {
  ProblemSpec s;
  s.a = a;
  s.p = p;
  return s;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::ParseError;
}

GraphSpec line(int L) { return lattice_spec(1, L); }

}  // namespace

TEST_CASE("verdict classification") {
  CHECK(classify(-1.0, 0.0, 1e-8, 1e-7) == Verdict::strict);
  CHECK(classify(-5e-8, 0.0, 1e-8, 1e-7) == Verdict::holds);
  CHECK(classify(5e-9, 0.0, 1e-8, 1e-7) == Verdict::holds);
  CHECK(classify(2e-8, 0.0, 1e-8, 1e-7) == Verdict::violated);
  CHECK(to_string(Verdict::strict) == "strict");
}

TEST_CASE("comparing a graph with itself gives zero margins") {
  const Graph g = build_graph(lattice_spec(2, 4));
  const ComparisonReport r = compare_energies(g, g, nls(1.0, 4.0), {0.5, 1.0, 2.0}, SolverConfig{});
  REQUIRE(r.margins.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(r.margins[i] == 0.0);
    CHECK(r.verdicts[i] == Verdict::holds);
  }
  CHECK(r.strict_margin == doctest::Approx(1e-7));
}

TEST_CASE("comparison rejects graphs of different size") {
  const Graph a = build_graph(lattice_spec(2, 4));
  const Graph b = build_graph(lattice_spec(2, 5));
  CHECK(kind_of([&] { compare_energies(a, b, nls(1.0, 4.0), {1.0}, SolverConfig{}); }) ==
        ErrorKind::InvalidSpec);
}

TEST_CASE("sphere deletion lowers the energy") {
  const Graph pert = build_graph(sphere_deletion_spec(2, 2, 6));
  const Graph base = build_graph(lattice_spec(2, 6));
  const ComparisonReport r = compare_energies(pert, base, nls(1.0, 4.0), {1.0, 4.0}, SolverConfig{});
  for (std::size_t i = 0; i < r.verdicts.size(); ++i) {
    CHECK(r.verdicts[i] != Verdict::violated);
    CHECK(r.margins[i] >= -r.tol);
  }
}

TEST_CASE("threshold: bad ranges are rejected") {
  CHECK(kind_of([] { estimate_threshold(line, {10}, 7.0, {2.0, 1.0}, SolverConfig{}); }) ==
        ErrorKind::InvalidRange);
  CHECK(kind_of([] { estimate_threshold(line, {10}, 7.0, {0.0, 1.0}, SolverConfig{}); }) ==
        ErrorKind::InvalidRange);
}

TEST_CASE("threshold bracket is sound and below the three-site bound") {
  // Any field on three consecutive sites is admissible on the line, with
  // the outer edges going to zero neighbours.
  const Graph window = make_path_graph(3, BoundaryMode::dirichlet);
  double three_site = 0.0;
  for (double a = 0.5; a <= 4.0; a += 0.05) {
    if (brute_force_oracle(window, nls(a, 7.0)) < -1e-6) {
      three_site = a;
      break;
    }
  }
  REQUIRE(three_site > 0.0);

  ThresholdConfig tcfg;
  tcfg.bracket_tol = 0.02;
  const ThresholdResult r = estimate_threshold(line, {8, 12}, 7.0, {0.1, 4.0}, SolverConfig{}, tcfg);
  REQUIRE(r.kind == ThresholdResult::Kind::bracket);
  CHECK(r.alpha_hi - r.alpha_lo <= tcfg.bracket_tol);
  CHECK(r.alpha_lo <= three_site);
  CHECK(r.graph_id.find("12") != std::string::npos);

  const Graph g = build_graph(line(12));
  CHECK(minimize(g, nls(r.alpha_hi, 7.0), SolverConfig{}).energy < -tcfg.tol_neg);
  CHECK(minimize(g, nls(r.alpha_lo, 7.0), SolverConfig{}).energy >= -tcfg.tol_neg);
}

TEST_CASE("threshold reports ranges with no sign change") {
  const ThresholdResult below = estimate_threshold(line, {8}, 7.0, {6.0, 8.0}, SolverConfig{});
  CHECK(below.kind == ThresholdResult::Kind::all_below);
  CHECK(below.alpha_hi == 6.0);
  const ThresholdResult above = estimate_threshold(line, {8}, 7.0, {0.01, 0.02}, SolverConfig{});
  CHECK(above.kind == ThresholdResult::Kind::all_above);
  CHECK(std::isinf(above.alpha_hi));
}

TEST_CASE("E properties on a small lattice") {
  const Graph g = build_graph(lattice_spec(2, 5, BoundaryMode::drop));
  const PropertyReport r = verify_E_properties(g, 4.0, {0.5, 1.0, 1.5, 2.0, 3.0}, SolverConfig{});
  CHECK(r.all_pass());
  CHECK(r.violations() == 0);
  CHECK_FALSE(r.checks.empty());
  for (bool c : r.converged) CHECK(c);
}

TEST_CASE("J properties on a small lattice") {
  const Graph g = build_graph(lattice_spec(3, 4));
  const PropertyReport r = verify_J_properties(g, 2.0, 6.0, {1.0, 2.0, 8.0}, SolverConfig{});
  CHECK(r.all_pass());
  bool saw_scaling = false;
  for (const auto& c : r.checks) saw_scaling |= c.name == "scaling";
  CHECK(saw_scaling);
}

TEST_CASE("sobolev constant of a truncation is below the delta bound") {
  const Graph g = build_graph(lattice_spec(3, 4));
  const SobolevConstant s = estimate_sobolev_constant(g, 2.0, 6.0, SolverConfig{});
  CHECK(s.J1 < 6.0);
  CHECK(s.S == doctest::Approx(std::sqrt(s.J1)));
  CHECK(s.el_residual <= 1e-8);
}

TEST_CASE("sobolev gap: the ball indicator beats the lattice constant") {
  const SobolevGapReport r = sobolev_critical_gap(3, 2.0, {2}, 6, SolverConfig{});
  REQUIRE(r.rows.size() == 1);
  CHECK(r.q == 6.0);
  CHECK(r.rows[0].ball_size == 27);
  CHECK(std::abs(r.rows[0].bound - 1.0 / 3.0) <= 1e-12);
  CHECK(std::abs(r.rows[0].measured - r.rows[0].bound) <= 1e-12);
  CHECK(r.base_converged);
  REQUIRE(r.witness_R);
  CHECK(*r.witness_R == 2);
  CHECK(kind_of([] { sobolev_critical_gap(3, 2.0, {3}, 6, SolverConfig{}); }) == ErrorKind::InvalidSpec);
  CHECK(kind_of([] { sobolev_critical_gap(3, 2.0, {3, 2}, 12, SolverConfig{}); }) == ErrorKind::InvalidSpec);
}

TEST_CASE("star probe on the line") {
  const StarProbeReport r = star_nonattainment_probe(1, 3, nls(1.0, 4.0), {8, 12}, SolverConfig{});
  REQUIRE(r.rows.size() == 2);
  for (const auto& row : r.rows) {
    CHECK(row.converged);
    // Extra edges only add kinetic energy.
    CHECK(row.energy_star >= row.energy_base - 1e-9);
    CHECK(row.gap == doctest::Approx(row.energy_star - row.energy_base));
    CHECK(row.multiplier_reference == doctest::Approx(row.u0 * row.u0));
  }
  CHECK(r.tol_equal == doctest::Approx(2e-8));
  CHECK(kind_of([] { star_nonattainment_probe(1, 3, nls(1.0, 4.0), {12, 8}, SolverConfig{}); }) ==
        ErrorKind::InvalidSpec);
}

TEST_CASE("lemma suite") {
  LemmaSuiteConfig cfg;
  cfg.trials = 20;
  const PropertyReport r = lemma_suite(cfg);
  CHECK(r.all_pass());
  CHECK(r.checks.size() == 7);
}

TEST_CASE("bound tracker keeps the running maximum") {
  const Graph g = build_graph(lattice_spec(2, 3));
  SobolevBoundTracker t(2.0, 4.0);
  const Field d0 = Field::delta(g, Vertex{0, 0});
  const double q0 = t.observe(g, d0.values());
  CHECK(q0 == doctest::Approx(1.0 / 2.0));
  Field flat(g, std::vector<double>(g.size(), 1.0));
  t.observe(g, flat.values());
  CHECK(t.bound() == doctest::Approx(std::max(q0, t.history().back())));
  CHECK(t.observe(g, Field(g).values()) == 0.0);
  CHECK(t.history().size() == 2);
}
