#include "varopt/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "varopt/error.hpp"
#include "varopt/parallel.hpp"

namespace varopt {

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

// Runs n independent solves. When the jobs themselves are spread over
// threads each solve runs its starts serially.
template <class Fn>
void run_jobs(std::size_t n, const SolverConfig& cfg, Fn&& fn) {
  const int threads = resolve_threads(cfg.threads);
  SolverConfig inner = cfg;
  if (threads > 1 && n > 1) inner.threads = 1;
  parallel_for(n, threads, [&](std::size_t i) { fn(i, inner); });
}

ProblemSpec with_mass(ProblemSpec spec, double a) {
  spec.a = a;
  return spec;
}

bool near(double x, double y) { return std::abs(x - y) <= 1e-9 * std::max(1.0, std::abs(y)); }

std::optional<std::size_t> find_value(const std::vector<double>& xs, double x) {
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (near(xs[i], x)) return i;
  }
  return std::nullopt;
}

[[noreturn]] void not_converged(const char* where, double a, const SolveResult& r) {
  raise(ErrorKind::NotConverged, std::string(where) + ": solve at a=" + fmt(a) +
                                     " stopped with residual " + fmt(r.el_residual));
}

std::string graph_label(const GraphSpec& spec) {
  return spec.construction + " d=" + std::to_string(spec.d) + " L=" + std::to_string(spec.L) +
         " " + std::string(to_string(spec.boundary));
}

}  // namespace

bool PropertyReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const PropertyCheck& c) { return c.pass; });
}

std::size_t PropertyReport::violations() const {
  return static_cast<std::size_t>(
      std::count_if(checks.begin(), checks.end(), [](const PropertyCheck& c) { return !c.pass; }));
}

// ---------------------------------------------------------------------------
// Threshold

std::string_view to_string(ThresholdResult::Kind kind) {
  switch (kind) {
    case ThresholdResult::Kind::bracket: return "bracket";
    case ThresholdResult::Kind::all_below: return "all_below";
    case ThresholdResult::Kind::all_above: return "all_above";
  }
  return "?";
}

ThresholdResult estimate_threshold(const GraphFamily& family, const std::vector<int>& L_list,
                                   double p, std::pair<double, double> a_range,
                                   const SolverConfig& cfg, const ThresholdConfig& tcfg) {
  auto [a_min, a_max] = a_range;
  if (!(a_min > 0.0) || !(a_max > a_min) || !std::isfinite(a_max)) {
    raise(ErrorKind::InvalidRange, "a_range must satisfy 0 < a_min < a_max");
  }
  if (L_list.empty()) raise(ErrorKind::InvalidSpec, "threshold needs at least one truncation");
  if (!(p > 2.0)) raise(ErrorKind::InvalidSpec, "threshold needs p > 2");
  if (!(tcfg.bracket_tol > 0.0)) raise(ErrorKind::InvalidSpec, "bracket_tol must be > 0");

  const int L = *std::max_element(L_list.begin(), L_list.end());
  const Graph graph = build_graph(family(L));
  const ProblemSpec spec{ProblemKind::nls, 1.0, p};

  ThresholdResult out;
  out.p = p;
  out.tol_neg = tcfg.tol_neg;
  out.graph_id = graph_label(graph.spec());

  auto probe = [&](double a) {
    const SolveResult r = minimize_nls(graph, with_mass(spec, a), cfg);
    ThresholdProbe pr{a, r.energy, r.converged, std::nullopt};
    if (r.energy < -tcfg.tol_neg) {
      pr.below = true;
    } else if (r.converged) {
      pr.below = false;
    }
    out.probes.push_back(pr);
    return pr.below;
  };
  // Retries an inconclusive midpoint a quarter-width to either side.
  auto conclusive = [&](double a, double lo, double hi) -> std::pair<double, bool> {
    if (auto b = probe(a)) return {a, *b};
    const double w = hi - lo;
    for (double shift : {0.25 * w, -0.25 * w}) {
      if (auto b = probe(a + shift)) return {a + shift, *b};
    }
    raise(ErrorKind::InconclusiveProbe, "no converged probe near a=" + fmt(a));
  };

  const auto lo_below = probe(a_min);
  if (!lo_below) raise(ErrorKind::InconclusiveProbe, "probe at a_min did not converge");
  if (*lo_below) {
    out.kind = ThresholdResult::Kind::all_below;
    out.alpha_lo = 0.0;
    out.alpha_hi = a_min;
    return out;
  }
  const auto hi_below = probe(a_max);
  if (!hi_below) raise(ErrorKind::InconclusiveProbe, "probe at a_max did not converge");
  if (!*hi_below) {
    out.kind = ThresholdResult::Kind::all_above;
    out.alpha_lo = a_max;
    out.alpha_hi = std::numeric_limits<double>::infinity();
    return out;
  }

  double lo = a_min;
  double hi = a_max;
  while (hi - lo > tcfg.bracket_tol && static_cast<int>(out.probes.size()) < tcfg.max_probes) {
    const auto [a, below] = conclusive(0.5 * (lo + hi), lo, hi);
    (below ? hi : lo) = a;
  }
  out.kind = ThresholdResult::Kind::bracket;
  out.alpha_lo = lo;
  out.alpha_hi = hi;
  return out;
}

// ---------------------------------------------------------------------------
// Comparisons

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::strict: return "strict";
    case Verdict::holds: return "holds";
    case Verdict::violated: return "violated";
  }
  return "?";
}

Verdict classify(double perturbed, double base, double tol, double strict_margin) {
  if (perturbed < base - strict_margin) return Verdict::strict;
  if (perturbed <= base + tol) return Verdict::holds;
  return Verdict::violated;
}

ComparisonReport compare_energies(const Graph& perturbed, const Graph& base,
                                  const ProblemSpec& spec, const std::vector<double>& a_grid,
                                  const SolverConfig& cfg, double tol) {
  if (perturbed.dim() != base.dim() || perturbed.box_radius() != base.box_radius()) {
    raise(ErrorKind::InvalidSpec, "compared graphs must share d and L");
  }
  validate(cfg);
  const std::size_t n = a_grid.size();
  std::vector<std::optional<SolveResult>> runs(2 * n);
  run_jobs(2 * n, cfg, [&](std::size_t i, const SolverConfig& inner) {
    const Graph& g = i < n ? perturbed : base;
    runs[i] = minimize(g, with_mass(spec, a_grid[i % n]), inner);
  });

  ComparisonReport report;
  report.spec = spec;
  report.a_grid = a_grid;
  report.tol = tol > 0.0 ? tol : cfg.tol_grad;
  report.strict_margin = 10.0 * cfg.tol_grad;
  for (std::size_t i = 0; i < n; ++i) {
    const SolveResult& rp = *runs[i];
    const SolveResult& rb = *runs[n + i];
    if (!rp.converged) not_converged("compare (perturbed)", a_grid[i], rp);
    if (!rb.converged) not_converged("compare (base)", a_grid[i], rb);
    report.perturbed.push_back(rp.energy);
    report.base.push_back(rb.energy);
    report.margins.push_back(rb.energy - rp.energy);
    report.verdicts.push_back(classify(rp.energy, rb.energy, report.tol, report.strict_margin));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Property checks

PropertyReport verify_E_properties(const Graph& graph, double p, const std::vector<double>& a_grid,
                                   const SolverConfig& cfg, const EPropertyTolerances& tol) {
  if (!std::is_sorted(a_grid.begin(), a_grid.end())) {
    raise(ErrorKind::InvalidSpec, "a_grid must be ascending");
  }
  const ProblemSpec spec{ProblemKind::nls, 1.0, p};
  validate(spec, graph.dim());
  const std::size_t n = a_grid.size();
  std::vector<std::optional<SolveResult>> runs(n);
  run_jobs(n, cfg, [&](std::size_t i, const SolverConfig& inner) {
    runs[i] = minimize_nls(graph, with_mass(spec, a_grid[i]), inner);
  });

  PropertyReport report;
  report.a_grid = a_grid;
  for (auto& r : runs) {
    report.values.push_back(r->energy);
    report.converged.push_back(r->converged);
  }
  const auto& E = report.values;
  for (std::size_t i = 0; i < n; ++i) {
    const double m = tol.sign - E[i];
    report.checks.push_back({"nonpositive", "a=" + fmt(a_grid[i]), m, m >= 0.0});
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double m = E[i] + tol.monotone - E[i + 1];
    report.checks.push_back(
        {"nonincreasing", "a=" + fmt(a_grid[i]) + "->" + fmt(a_grid[i + 1]), m, m >= 0.0});
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const auto k = find_value(a_grid, a_grid[i] + a_grid[j]);
      if (!k) continue;
      const double m = E[i] + E[j] + tol.subadditive - E[*k];
      report.checks.push_back(
          {"subadditive", "a=" + fmt(a_grid[i]) + ",b=" + fmt(a_grid[j]), m, m >= 0.0});
    }
  }
  return report;
}

PropertyReport verify_J_properties(const Graph& graph, double p, double q,
                                   const std::vector<double>& a_grid, const SolverConfig& cfg,
                                   double rel_tol) {
  if (a_grid.empty()) raise(ErrorKind::InvalidSpec, "a_grid must not be empty");
  const ProblemSpec spec{ProblemKind::sobolev, 1.0, p, q};
  validate(spec, graph.dim());

  std::vector<double> masses;
  auto add = [&](double a) {
    if (!find_value(masses, a)) masses.push_back(a);
  };
  for (double a : a_grid) add(a);
  for (double a : a_grid) {
    add(2.0 * a);
    add(4.0 * a);
  }
  std::vector<std::optional<SolveResult>> runs(masses.size());
  run_jobs(masses.size(), cfg, [&](std::size_t i, const SolverConfig& inner) {
    runs[i] = minimize_sobolev(graph, with_mass(spec, masses[i]), inner);
  });

  PropertyReport report;
  report.a_grid = masses;
  for (auto& r : runs) {
    report.values.push_back(r->energy);
    report.converged.push_back(r->converged);
  }
  auto J = [&](double a) { return report.values[*find_value(masses, a)]; };
  const double r = p / q;
  const double strict = 10.0 * cfg.tol_grad;

  const double ref = J(a_grid[0]) / std::pow(a_grid[0], r);
  for (double a : a_grid) {
    const double dev = std::abs(J(a) / std::pow(a, r) / ref - 1.0);
    const double m = rel_tol - dev;
    report.checks.push_back({"homogeneity", "a=" + fmt(a), m, m >= 0.0});
  }
  for (double theta : {2.0, 4.0}) {
    for (double a : a_grid) {
      const double m = theta * J(a) - J(theta * a);
      report.checks.push_back(
          {"scaling", "theta=" + fmt(theta) + ",a=" + fmt(a), m, m > strict});
    }
  }
  for (std::size_t i = 0; i < a_grid.size(); ++i) {
    for (std::size_t j = i; j < a_grid.size(); ++j) {
      const double s = a_grid[i] + a_grid[j];
      if (!find_value(masses, s)) continue;
      const double m = J(a_grid[i]) + J(a_grid[j]) - J(s);
      report.checks.push_back(
          {"subadditive", "a=" + fmt(a_grid[i]) + ",b=" + fmt(a_grid[j]), m, m > strict});
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Sobolev constant and gap

SobolevConstant estimate_sobolev_constant(const Graph& graph, double p, double q,
                                          const SolverConfig& cfg) {
  const ProblemSpec spec{ProblemKind::sobolev, 1.0, p, q};
  const SolveResult r = minimize_sobolev(graph, spec, cfg);
  if (!r.converged) not_converged("sobolev constant", 1.0, r);
  return {r.energy, std::pow(r.energy, 1.0 / p), r.el_residual, r.iterations};
}

Field ball_indicator(const Graph& graph, int R, double q) {
  Field f(graph);
  std::size_t count = 0;
  for (const Vertex& v : graph.vertices()) count += in_ball(v, R);
  if (count == 0) return f;
  const double value = std::pow(static_cast<double>(count), -1.0 / q);
  for (std::size_t i = 0; i < graph.size(); ++i) {
    if (in_ball(graph.vertex(static_cast<Graph::Id>(i)), R)) f[i] = value;
  }
  return f;
}

SobolevGapReport sobolev_critical_gap(int d, double p, const std::vector<int>& R_list, int L,
                                      const SolverConfig& cfg, BoundaryMode boundary) {
  if (R_list.empty()) raise(ErrorKind::InvalidSpec, "R_list must not be empty");
  if (!std::is_sorted(R_list.begin(), R_list.end()) || R_list.front() < 1) {
    raise(ErrorKind::InvalidSpec, "R_list must be ascending and positive");
  }
  if (2 * R_list.back() >= L) raise(ErrorKind::InvalidSpec, "max(R_list) must be < L/2");

  SobolevGapReport report;
  report.d = d;
  report.L = L;
  report.p = p;
  report.q = sobolev_critical_exponent(d, p);

  const Graph base = build_graph(lattice_spec(d, L, boundary));
  const SobolevConstant c = estimate_sobolev_constant(base, p, report.q, cfg);
  report.J_base = c.J1;
  report.base_converged = true;

  for (int R : R_list) {
    const Graph g = build_graph(sphere_deletion_spec(d, R, L, std::nullopt, boundary));
    SobolevGapRow row;
    row.R = R;
    row.ball_size = static_cast<std::size_t>(std::llround(std::pow(2.0 * R - 1.0, d)));
    row.bound = std::pow(static_cast<double>(row.ball_size), -p / report.q);
    row.measured = dirichlet_energy(g, ball_indicator(g, R, report.q), p);
    row.margin = report.J_base - row.bound;
    if (!report.witness_R && row.bound < report.J_base) report.witness_R = R;
    report.rows.push_back(row);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Star probe

StarProbeReport star_nonattainment_probe(int d, int R, const ProblemSpec& spec,
                                         const std::vector<int>& L_list, const SolverConfig& cfg,
                                         double tol_equal, BoundaryMode boundary) {
  if (L_list.empty() || !std::is_sorted(L_list.begin(), L_list.end())) {
    raise(ErrorKind::InvalidSpec, "L_list must be non-empty and ascending");
  }
  validate(spec, d);
  const std::size_t n = L_list.size();
  std::vector<GraphSpec> star_specs;
  for (int L : L_list) star_specs.push_back(star_addition_spec(d, R, L, boundary));

  std::vector<std::optional<Graph>> graphs(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    graphs[i] = build_graph(star_specs[i]);
    graphs[n + i] = build_graph(lattice_spec(d, L_list[i], boundary));
  }
  std::vector<std::optional<SolveResult>> runs(2 * n);
  run_jobs(2 * n, cfg, [&](std::size_t i, const SolverConfig& inner) {
    runs[i] = minimize(*graphs[i], spec, inner);
  });

  StarProbeReport report;
  report.d = d;
  report.R = R;
  report.spec = spec;
  report.tol_equal = tol_equal > 0.0 ? tol_equal : 2.0 * cfg.tol_grad;
  report.tol_multiplier = 10.0 * cfg.tol_grad;
  report.equality = true;
  report.escape = true;
  report.multiplier_mismatch = true;
  for (std::size_t i = 0; i < n; ++i) {
    const SolveResult& rs = *runs[i];
    const SolveResult& rb = *runs[n + i];
    if (!rs.converged) not_converged("star probe (star)", spec.a, rs);
    if (!rb.converged) not_converged("star probe (base)", spec.a, rb);
    StarProbeRow row;
    row.L = L_list[i];
    row.energy_star = rs.energy;
    row.energy_base = rb.energy;
    row.gap = rs.energy - rb.energy;
    row.center_of_mass = rs.localization.center_of_mass_sup();
    row.median_distance = rs.localization.median_sup_distance;
    row.base_center_of_mass = rb.localization.center_of_mass_sup();
    row.multiplier = rs.multiplier;
    row.u0 = rs.minimizer.at(Vertex::origin(d));
    row.multiplier_reference =
        spec.kind == ProblemKind::nls ? std::pow(std::abs(row.u0), spec.p - 2.0) : 0.0;
    row.multiplier_gap = std::abs(row.multiplier - row.multiplier_reference);
    row.converged = true;

    report.equality = report.equality && std::abs(row.gap) <= report.tol_equal;
    report.multiplier_mismatch =
        report.multiplier_mismatch && row.multiplier_gap >= report.tol_multiplier;
    if (!report.rows.empty()) {
      report.escape = report.escape && row.center_of_mass >= report.rows.back().center_of_mass;
    }
    report.rows.push_back(row);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Lemma checks

double SobolevBoundTracker::observe(const Graph& graph, std::span<const double> u) {
  const double energy = dirichlet_energy(graph, u, p_);
  if (!(energy > 0.0)) return 0.0;
  const double quotient = lp_norm(u, q_) / std::pow(energy, 1.0 / p_);
  history_.push_back(quotient);
  bound_ = std::max(bound_, quotient);
  return quotient;
}

Field split_sequence_term(const Field& v, const Field& w, const Vertex& shift) {
  Vertex back = shift;
  for (int& c : back.coords) c = -c;
  return v + translate(w, back);
}

PropertyReport lemma_suite(const LemmaSuiteConfig& cfg) {
  if (cfg.d < 1 || cfg.L < 6 || cfg.trials < 1) {
    raise(ErrorKind::InvalidSpec, "lemma suite needs d >= 1, L >= 6 and trials >= 1");
  }
  const Graph graph = build_graph(lattice_spec(cfg.d, cfg.L));
  const std::size_t n = graph.size();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto random_field = [&]() {
    Field u(graph);
    for (std::size_t i = 0; i < n; ++i) u[i] = unit(rng);
    return u;
  };
  // Random values on the sup-ball of radius 1 around c.
  auto local_field = [&](const Vertex& c) {
    Field u(graph);
    for (std::size_t i = 0; i < n; ++i) {
      if ((graph.vertex(static_cast<Graph::Id>(i)) - c).sup_norm() <= 1) u[i] = unit(rng);
    }
    return u;
  };
  auto rel = [](double x, double y) { return std::abs(x - y) / std::max(1.0, std::abs(y)); };

  struct Tally {
    std::string name;
    double tol;
    double worst = std::numeric_limits<double>::infinity();
    int violations = 0;
    void add(double margin) {
      worst = std::min(worst, margin);
      violations += margin < 0.0;
    }
  };
  Tally nesting{"norm_nesting", 1e-12};
  Tally lower{"nls_lower_bound", 1e-12};
  Tally bl_norm{"split_norm_identity", 1e-10};
  Tally bl_energy{"split_energy_identity", 1e-10};
  Tally ibp{"integration_by_parts", 1e-10};
  Tally gradient{"gradient_check", 1e-6};
  Tally sobolev{"sobolev_running_bound", 0.0};
  SobolevBoundTracker tracker(2.0, cfg.d >= 3 ? sobolev_critical_exponent(cfg.d, 2.0) : 4.0);

  const int half = cfg.L / 2;
  for (int t = 0; t < cfg.trials; ++t) {
    {
      const Field u = random_field();
      const double p = 1.0 + 3.0 * unif(rng);
      const double q = (t % 10 == 9) ? kInfinity : p + 4.0 * unif(rng) + 1e-3;
      nesting.add(lp_norm(u, p) + nesting.tol - lp_norm(u, q));
    }
    {
      Field u = random_field();
      const double a = 0.1 + 4.9 * unif(rng);
      const double p = 2.0 + 1e-3 + 6.0 * unif(rng);
      u *= std::sqrt(a) / lp_norm(u, 2.0);
      lower.add(nls_energy(graph, u, p) + std::pow(a, p / 2.0) / p + lower.tol);
    }
    {
      Vertex cv = Vertex::origin(cfg.d);
      Vertex cw = Vertex::origin(cfg.d);
      cv.coords[0] = -half;
      for (int k = 1; k < cfg.d; ++k) {
        cv.coords[k] = static_cast<int>(rng() % 3) - 1;
        cw.coords[k] = static_cast<int>(rng() % 3) - 1;
      }
      const Field v = local_field(cv);
      const Field w = local_field(cw);
      Vertex shift = Vertex::origin(cfg.d);
      shift.coords[0] = half;
      const Field u = split_sequence_term(v, w, shift);
      const Field rest = u - v;
      const double q = 1.0 + 5.0 * unif(rng);
      const double p = 1.0 + 3.0 * unif(rng);
      bl_norm.add(bl_norm.tol - rel(power_sum(u.values(), q) - power_sum(rest.values(), q),
                                    power_sum(v.values(), q)));
      bl_energy.add(bl_energy.tol - rel(dirichlet_energy(graph, u, p) -
                                            dirichlet_energy(graph, rest, p),
                                        dirichlet_energy(graph, v, p)));
    }
    {
      const Field u = random_field();
      const double p = (t % 4 == 0) ? 2.0 : 1.1 + 4.0 * unif(rng);
      const Field lap = p == 2.0 ? laplacian(graph, u) : p_laplacian(graph, u, p);
      double pairing = 0.0;
      for (std::size_t i = 0; i < n; ++i) pairing -= u[i] * lap[i];
      const double energy = dirichlet_energy(graph, u, p);
      ibp.add(ibp.tol - std::abs(pairing - energy) / energy);
    }
    {
      Field u = random_field();
      const double p = 2.0 + 1e-3 + 4.0 * unif(rng);
      std::vector<double> g(n);
      nls_energy_gradient(graph, u.values(), p, g);
      const double h = 1e-5;
      double diff2 = 0.0;
      double norm2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double keep = u[i];
        u[i] = keep + h;
        const double ep = nls_energy(graph, u, p);
        u[i] = keep - h;
        const double em = nls_energy(graph, u, p);
        u[i] = keep;
        const double fd = (ep - em) / (2.0 * h);
        diff2 += (fd - g[i]) * (fd - g[i]);
        norm2 += g[i] * g[i];
      }
      gradient.add(gradient.tol - std::sqrt(diff2 / std::max(norm2, 1e-300)));
    }
    {
      const Field u = random_field();
      tracker.observe(graph, u.values());
    }
  }
  for (double quotient : tracker.history()) sobolev.add(tracker.bound() - quotient);

  PropertyReport report;
  for (const Tally* t : {&nesting, &lower, &bl_norm, &bl_energy, &ibp, &gradient, &sobolev}) {
    report.checks.push_back({t->name,
                             "trials=" + std::to_string(cfg.trials) +
                                 " violations=" + std::to_string(t->violations) +
                                 " tol=" + fmt(t->tol),
                             t->worst, t->violations == 0});
  }
  return report;
}

}  // namespace varopt
