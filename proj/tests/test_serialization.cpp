#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "varopt/error.hpp"
#include "varopt/serialization.hpp"

using namespace varopt;

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

}  // namespace

TEST_CASE("graph specs round-trip through the explicit form") {
  for (const GraphSpec& s : {lattice_spec(2, 5), lattice_spec(1, 3, BoundaryMode::drop),
                             sphere_deletion_spec(3, 2, 5), star_addition_spec(2, 2, 4)}) {
    const json j = to_json(s);
    CHECK(graph_spec_from_json(j) == s);
    CHECK(graph_spec_from_json(json::parse(j.dump())) == s);
  }
}

TEST_CASE("named graph forms") {
  const json sd = {{"construction", "sphere_deletion"}, {"d", 2}, {"L", 6}, {"R", 2}};
  CHECK(graph_spec_from_json(sd) == sphere_deletion_spec(2, 2, 6));
  const json kept = {{"construction", "sphere_deletion"}, {"d", 2}, {"L", 6}, {"R", 2},
                     {"kept", {{0, 1}, {0, 2}}}, {"boundary", "drop"}};
  CHECK(graph_spec_from_json(kept) ==
        sphere_deletion_spec(2, 2, 6, Edge(Vertex{0, 1}, Vertex{0, 2}), BoundaryMode::drop));
  const json star = {{"construction", "star_addition"}, {"d", 1}, {"L", 9}, {"R", 3}};
  CHECK(graph_spec_from_json(star) == star_addition_spec(1, 3, 9));
  const json lat = {{"construction", "lattice"}, {"d", 3}, {"L", 4}};
  CHECK(graph_spec_from_json(lat) == lattice_spec(3, 4));

  const Graph p = graph_from_json({{"construction", "path"}, {"n", 4}});
  CHECK(p.size() == 4);
  CHECK(p.boundary() == BoundaryMode::drop);
}

TEST_CASE("graph spec errors") {
  CHECK(kind_of([] { graph_spec_from_json({{"construction", "lattice"}, {"d", 2}, {"L", 4}, {"colour", 1}}); }) ==
        ErrorKind::InvalidSpec);
  CHECK(kind_of([] { graph_spec_from_json({{"construction", "torus"}, {"d", 2}, {"L", 4}}); }) ==
        ErrorKind::InvalidSpec);
  CHECK(kind_of([] { graph_spec_from_json({{"construction", "lattice"}, {"d", 2}, {"L", 4}, {"boundary", "x"}}); }) ==
        ErrorKind::InvalidSpec);
  CHECK_THROWS_AS(graph_spec_from_json({{"construction", "lattice"}, {"d", "two"}, {"L", 4}}), Error);
}

TEST_CASE("fields round-trip") {
  const Graph g = build_graph(lattice_spec(2, 3));
  Field u(g);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::sqrt(static_cast<double>(i)) / 7.0;
  const Field v = field_from_json(g, json::parse(to_json(u).dump()));
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(v[i] == u[i]);
  CHECK(kind_of([&] { field_from_json(build_graph(lattice_spec(2, 2)), to_json(u)); }) == ErrorKind::InvalidSpec);
}

TEST_CASE("energy report keys") {
  const Graph g = build_graph(lattice_spec(1, 3));
  const std::vector<double> qs{2.0, 6.0};
  const json j = to_json(energy_report(g, Field::delta(g, Vertex{0}), 2.0, qs, 4.0));
  CHECK(j.contains("dirichlet_p"));
  CHECK(j.contains("lq_2"));
  CHECK(j.contains("lq_6"));
  CHECK(j.contains("phi"));
}

TEST_CASE("problem and solver configs round-trip") {
  ProblemSpec s;
  s.kind = ProblemKind::sobolev;
  s.a = 2.5;
  s.p = 1.5;
  s.q = 3.0;
  const ProblemSpec t = problem_spec_from_json(to_json(s));
  CHECK(t.kind == s.kind);
  CHECK(t.a == s.a);
  CHECK(t.p == s.p);
  CHECK(t.q == s.q);

  SolverConfig c;
  c.max_iters = 77;
  c.tol_grad = 1e-9;
  c.restarts = 4;
  c.seeds = {SeedSpec::parse("bump:1,2:1.5")};
  c.step_rule = StepRule::fixed;
  c.rng_seed = 99;
  const SolverConfig d = solver_config_from_json(json::parse(to_json(c).dump()));
  CHECK(d.max_iters == 77);
  CHECK(d.tol_grad == 1e-9);
  CHECK(d.restarts == 4);
  REQUIRE(d.seeds.size() == 1);
  CHECK(d.seeds[0].to_string() == c.seeds[0].to_string());
  CHECK(d.step_rule == StepRule::fixed);
  CHECK(d.rng_seed == 99);

  CHECK(kind_of([] { solver_config_from_json({{"max_iter", 5}}); }) == ErrorKind::InvalidSpec);
}

TEST_CASE("csv numbers are exact") {
  for (double x : {0.1, 1.0 / 3.0, -2.2719e-5, 1e300, 5e-324}) CHECK(std::strtod(csv_number(x).c_str(), nullptr) == x);
  CHECK(csv_number(std::nan("")) == "nan");
  CHECK(csv_number(kInfinity) == "inf");
  CHECK(csv_number(-kInfinity) == "-inf");
}

TEST_CASE("csv tables") {
  CsvTable t({"a", "b"});
  t.add_row({"1", csv_number(0.25)});
  t.add_row({"2", "x"});
  CHECK(t.str() == "a,b\n1,0.25\n2,x\n");
  CHECK(kind_of([&] { t.add_row({"1"}); }) == ErrorKind::InvalidSpec);

  std::istringstream in(t.str());
  const CsvTable back = read_csv(in);
  CHECK(back.header() == t.header());
  CHECK(back.rows() == t.rows());

  std::istringstream ragged("a,b\n1\n");
  CHECK(kind_of([&] { read_csv(ragged); }) == ErrorKind::ParseError);
  std::istringstream empty("");
  CHECK(kind_of([&] { read_csv(empty); }) == ErrorKind::ParseError);
}

TEST_CASE("trace table") {
  const CsvTable t = trace_table({{0, -1.0, 0.5, 0.1}, {1, -1.5, 0.25, 0.2}});
  CHECK(t.rows().size() == 2);
  CHECK(t.header().size() == 4);
}
