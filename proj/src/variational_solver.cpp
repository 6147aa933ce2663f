#include "varopt/variational_solver.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "varopt/error.hpp"
#include "varopt/parallel.hpp"

namespace varopt {

std::string_view to_string(ProblemKind kind) {
  return kind == ProblemKind::nls ? "nls" : "sobolev";
}

ProblemKind problem_kind_from_string(std::string_view name) {
  if (name == "nls" || name == "NLS") return ProblemKind::nls;
  if (name == "sobolev" || name == "SOBOLEV") return ProblemKind::sobolev;
  raise(ErrorKind::InvalidSpec, "unknown problem kind '" + std::string(name) + "'");
}

double mass_critical_exponent(int d) { return 2.0 + 4.0 / d; }

double sobolev_critical_exponent(int d, double p) {
  if (!(p < d)) raise(ErrorKind::InvalidSpec, "Sobolev exponent needs p < d");
  return d * p / (d - p);
}

void validate(const ProblemSpec& spec, int d) {
  if (!(spec.a > 0.0) || !std::isfinite(spec.a)) raise(ErrorKind::InvalidSpec, "mass a must be > 0");
  if (spec.kind == ProblemKind::nls) {
    if (!(spec.p > 2.0)) raise(ErrorKind::InvalidSpec, "NLS needs p > 2");
    return;
  }
  if (!(spec.p >= 1.0)) raise(ErrorKind::InvalidSpec, "Sobolev problem needs p >= 1");
  if (!(spec.q >= 1.0)) raise(ErrorKind::InvalidSpec, "Sobolev problem needs q >= 1");
  if (spec.allow_subcritical) return;
  if (!(spec.p < d)) raise(ErrorKind::InvalidSpec, "Sobolev problem needs p < d");
  // Allow q to sit on the critical exponent up to rounding.
  const double critical = sobolev_critical_exponent(d, spec.p);
  if (spec.q < critical * (1.0 - 1e-12)) {
    raise(ErrorKind::InvalidSpec, "Sobolev problem needs q >= dp/(d-p)");
  }
}

void validate(const SolverConfig& cfg) {
  if (cfg.max_iters < 1) raise(ErrorKind::InvalidSpec, "max_iters must be >= 1");
  if (!(cfg.tol_grad > 0.0)) raise(ErrorKind::InvalidSpec, "tol_grad must be > 0");
  if (cfg.restarts < 1) raise(ErrorKind::InvalidSpec, "restarts must be >= 1");
  if (!(cfg.step > 0.0)) raise(ErrorKind::InvalidSpec, "step must be > 0");
}

// ---------------------------------------------------------------------------
// Seeds

SeedSpec SeedSpec::parse(std::string_view text) {
  SeedSpec seed;
  const auto colon = text.find(':');
  const std::string_view head = text.substr(0, colon);
  std::string_view tail = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  auto to_double = [&](std::string_view s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(std::string(s), &used);
      if (used != s.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      raise(ErrorKind::InvalidSpec, "bad seed descriptor '" + std::string(text) + "'");
    }
  };
  if (head == "delta") {
    seed.kind = Kind::delta;
  } else if (head == "gaussian") {
    seed.kind = Kind::gaussian;
    if (!tail.empty()) seed.width = to_double(tail);
  } else if (head == "random") {
    seed.kind = Kind::random;
  } else if (head == "translates") {
    seed.kind = Kind::translates;
    if (!tail.empty()) seed.stride = static_cast<int>(to_double(tail));
  } else if (head == "bump") {
    seed.kind = Kind::bump;
    const auto width_sep = tail.find(':');
    if (width_sep != std::string_view::npos) {
      seed.width = to_double(tail.substr(width_sep + 1));
      tail = tail.substr(0, width_sep);
    }
    while (!tail.empty()) {
      const auto comma = tail.find(',');
      seed.centre.coords.push_back(static_cast<int>(to_double(tail.substr(0, comma))));
      if (comma == std::string_view::npos) break;
      tail = tail.substr(comma + 1);
    }
    if (seed.centre.coords.empty()) raise(ErrorKind::InvalidSpec, "bump seed needs a centre");
  } else {
    raise(ErrorKind::InvalidSpec, "unknown seed kind '" + std::string(text) + "'");
  }
  return seed;
}

std::string SeedSpec::to_string() const {
  auto num = [](double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
  };
  switch (kind) {
    case Kind::delta: return "delta";
    case Kind::gaussian: return width > 0 ? "gaussian:" + num(width) : "gaussian";
    case Kind::random: return "random";
    case Kind::translates:
      return stride > 0 ? "translates:" + std::to_string(stride) : "translates";
    case Kind::bump: {
      std::string out = "bump:";
      for (std::size_t k = 0; k < centre.dim(); ++k) {
        if (k) out += ",";
        out += std::to_string(centre[k]);
      }
      if (width > 0) out += ":" + num(width);
      return out;
    }
  }
  return "?";
}

namespace {

std::vector<double> gaussian_bump(const Graph& graph, const std::vector<double>& centre,
                                  double width) {
  std::vector<double> u(graph.size());
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const Vertex& x = graph.vertex(static_cast<Graph::Id>(i));
    double r2 = 0.0;
    for (std::size_t k = 0; k < x.dim(); ++k) r2 += (x[k] - centre[k]) * (x[k] - centre[k]);
    u[i] = std::exp(-r2 / (2.0 * width * width));
  }
  return u;
}

std::vector<double> point_mass(const Graph& graph, const Vertex& x) {
  std::vector<double> u(graph.size(), 0.0);
  if (const auto id = graph.index_of(x)) {
    u[*id] = 1.0;
  } else {
    u[0] = 1.0;
  }
  return u;
}

// Centre of the vertex set; the origin for lattice truncations.
std::vector<double> graph_centre(const Graph& graph) {
  std::vector<double> c(static_cast<std::size_t>(graph.dim()), 0.0);
  if (graph.is_lattice()) return c;
  for (const Vertex& x : graph.vertices()) {
    for (std::size_t k = 0; k < c.size(); ++k) c[k] += x[k];
  }
  for (double& v : c) v /= static_cast<double>(graph.size());
  return c;
}

Vertex nearest_vertex(const std::vector<double>& c) {
  Vertex v;
  for (double x : c) v.coords.push_back(static_cast<int>(std::lround(x)));
  return v;
}

}  // namespace

std::vector<std::pair<std::string, std::vector<double>>> initial_fields(
    const Graph& graph, const SolverConfig& cfg) {
  std::vector<std::pair<std::string, std::vector<double>>> out;
  const int d = graph.dim();
  const int L = graph.box_radius();
  const double default_width = std::max(1.0, L / 3.0);
  const std::vector<double> centre = graph_centre(graph);

  for (const SeedSpec& seed : cfg.seeds) {
    switch (seed.kind) {
      case SeedSpec::Kind::delta:
        out.emplace_back(seed.to_string(), point_mass(graph, nearest_vertex(centre)));
        break;
      case SeedSpec::Kind::gaussian:
        out.emplace_back(seed.to_string(),
                         gaussian_bump(graph, centre, seed.width > 0 ? seed.width : default_width));
        break;
      case SeedSpec::Kind::bump: {
        if (seed.centre.dim() != static_cast<std::size_t>(d)) {
          raise(ErrorKind::InvalidSpec, "bump seed dimension mismatch");
        }
        std::vector<double> c(seed.centre.coords.begin(), seed.centre.coords.end());
        out.emplace_back(seed.to_string(),
                         gaussian_bump(graph, c, seed.width > 0 ? seed.width : 1.0));
        break;
      }
      case SeedSpec::Kind::translates: {
        const double width = seed.width > 0 ? seed.width : 1.0;
        if (!graph.is_lattice()) {
          for (const Vertex& x : graph.vertices()) {
            std::vector<double> c(x.coords.begin(), x.coords.end());
            out.emplace_back("bump:" + std::to_string(x[0]), gaussian_bump(graph, c, width));
          }
          break;
        }
        const int stride = seed.stride > 0 ? seed.stride : std::max(1, (L - 1) / 4);
        for (int k = 0; k < d; ++k) {
          for (int s : {-1, 1}) {
            for (int j = stride; j <= L - 2; j += stride) {
              Vertex c = Vertex::unit(static_cast<std::size_t>(d), static_cast<std::size_t>(k), s * j);
              SeedSpec bump{SeedSpec::Kind::bump, width, 0, c};
              std::vector<double> cc(c.coords.begin(), c.coords.end());
              out.emplace_back(bump.to_string(), gaussian_bump(graph, cc, width));
            }
          }
        }
        break;
      }
      case SeedSpec::Kind::random:
        // Random starts are appended below with counter-derived streams.
        break;
    }
  }
  int random_count = cfg.restarts;
  for (const SeedSpec& seed : cfg.seeds) random_count += seed.kind == SeedSpec::Kind::random;
  for (int r = 0; r < random_count; ++r) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.rng_seed & 0xffffffffu),
                      static_cast<std::uint32_t>(cfg.rng_seed >> 32),
                      static_cast<std::uint32_t>(r)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> u(graph.size());
    for (double& v : u) v = unif(rng);
    out.emplace_back("random#" + std::to_string(r), std::move(u));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Functionals

namespace {

inline double abs_pow(double t, double p) {
  const double a = std::abs(t);
  if (p == 2.0) return a * a;
  if (p == 4.0) return (a * a) * (a * a);
  if (p == 6.0) {
    const double a2 = a * a;
    return a2 * a2 * a2;
  }
  if (p == 1.0) return a;
  return std::pow(a, p);
}

// |x + dx|^p - |x|^p without cancelling the leading digits.
inline double pow_increment(double x, double dx, double p) {
  if (p == 2.0) return dx * (2.0 * x + dx);
  if (x == 0.0 || std::abs(dx) > 0.5 * std::abs(x)) return abs_pow(x + dx, p) - abs_pow(x, p);
  return abs_pow(x, p) * std::expm1(p * std::log1p(dx / x));
}

double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

// Common interface over the two problems: constraint normalisation and the
// Euler-Lagrange residual vector r, whose negative is the descent direction.
class Functional {
 public:
  Functional(const Graph& graph, const ProblemSpec& spec, double smoothing)
      : graph_(graph), spec_(spec), smoothing_(smoothing), grad_(graph.size()),
        normal_(graph.size()) {}

  // Rescales u onto the constraint set; false if u vanishes.
  bool normalize(std::vector<double>& u) const {
    const double exponent = spec_.kind == ProblemKind::nls ? 2.0 : spec_.q;
    double mass = 0.0;
    for (double v : u) mass += abs_pow(v, exponent);
    if (!(mass > 0.0) || !std::isfinite(mass)) return false;
    const double s = std::pow(spec_.a / mass, 1.0 / exponent);
    for (double& v : u) v *= s;
    return true;
  }

  // Energy at u. Fills dir with the constraint-tangent descent direction
  // and sets the multiplier and the Euler-Lagrange residual norm.
  double evaluate(std::span<const double> u, std::span<double> dir, double& multiplier,
                  double& residual) {
    if (spec_.kind == ProblemKind::nls) {
      const double energy = nls_energy_gradient(graph_, u, spec_.p, grad_);
      multiplier = -dot(grad_, u) / dot(u, u);
      for (std::size_t i = 0; i < u.size(); ++i) dir[i] = grad_[i] + multiplier * u[i];
      residual = norm2(dir);
      return energy;
    }
    const double energy = dirichlet_energy_gradient(graph_, u, spec_.p, grad_, smoothing_);
    double mass = 0.0;
    double proj = 0.0;
    double nn = 0.0;
    double gn = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      grad_[i] /= spec_.p;
      const double uq = u[i] == 0.0 ? 0.0 : abs_pow(u[i], spec_.q) / u[i];
      normal_[i] = uq;
      mass += abs_pow(u[i], spec_.q);
      proj += grad_[i] * u[i];
      nn += uq * uq;
      gn += grad_[i] * uq;
    }
    // <grad F / p, u> = F for exact p-homogeneous F; the projection form also
    // covers the smoothed p = 1 energy.
    multiplier = proj / mass;
    double rr = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double r = grad_[i] - multiplier * normal_[i];
      rr += r * r;
    }
    residual = std::sqrt(rr);
    // The l^q sphere has normal |u|^(q-2) u, which is not parallel to u, so
    // the step direction uses its own projection.
    const double mu = nn > 0.0 ? gn / nn : 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) dir[i] = grad_[i] - mu * normal_[i];
    return energy;
  }

  // E(v) - E(u) for the scale-invariant extension of E off the constraint
  // set. Each sum is accumulated term by term so that differences far below
  // the rounding of E, or of the renormalisation, stay visible.
  double increment(std::span<const double> u, std::span<const double> v) const {
    const bool nls = spec_.kind == ProblemKind::nls;
    const double p = nls ? 2.0 : spec_.p;
    const double q = nls ? 2.0 : spec_.q;
    const bool smooth = !nls && p == 1.0 && smoothing_ > 0.0;
    const double eps2 = smoothing_ * smoothing_;
    auto edge_value = [&](double x) { return smooth ? std::sqrt(x * x + eps2) : abs_pow(x, p); };
    auto edge_change = [&](double x, double dx) {
      if (!smooth) return pow_increment(x, dx, p);
      const double y = x + dx;
      return dx * (x + y) / (std::sqrt(x * x + eps2) + std::sqrt(y * y + eps2));
    };
    double k = 0.0, dk = 0.0, n = 0.0, dn = 0.0, w = 0.0, dw = 0.0;
    for (auto [i, j] : graph_.edges()) {
      const double x = u[i] - u[j];
      k += edge_value(x);
      dk += edge_change(x, (v[i] - u[i]) - (v[j] - u[j]));
    }
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double dx = v[i] - u[i];
      if (const int g = graph_.ghost_degree(static_cast<Graph::Id>(i))) {
        k += g * edge_value(u[i]);
        dk += g * edge_change(u[i], dx);
      }
      n += abs_pow(u[i], q);
      dn += pow_increment(u[i], dx, q);
      if (nls) {
        w += abs_pow(u[i], spec_.p);
        dw += pow_increment(u[i], dx, spec_.p);
      }
    }
    // c * X / N^r evaluated at v minus at u.
    auto term = [&](double c, double x, double dx, double r) {
      if (x == 0.0) return c * dx / std::pow((n + dn) / spec_.a, r);
      const double base = c * x / std::pow(n / spec_.a, r);
      return base * std::expm1(std::log1p(dx / x) - r * std::log1p(dn / n));
    };
    if (nls) return term(0.5, k, dk, 1.0) - term(1.0 / spec_.p, w, dw, spec_.p / 2.0);
    return term(1.0, k, dk, p / q);
  }

  // Directional-derivative factor: E(u - t r) ~ E(u) - t * slope * |r|^2.
  double slope() const { return spec_.kind == ProblemKind::nls ? 1.0 : spec_.p; }

 private:
  const Graph& graph_;
  const ProblemSpec& spec_;
  double smoothing_;
  std::vector<double> grad_;
  std::vector<double> normal_;
};

struct RunOutcome {
  std::vector<double> u;
  double energy = 0.0;
  double residual = 0.0;
  bool converged = false;
  bool valid = false;
  int iterations = 0;
  int ascent_steps = 0;
  std::vector<TracePoint> trace;
};

RunOutcome descend(const Graph& graph, const ProblemSpec& spec, const SolverConfig& cfg,
                   std::vector<double> u) {
  RunOutcome out;
  Functional functional(graph, spec, cfg.smoothing);
  for (double& v : u) v = std::abs(v);
  if (!functional.normalize(u)) return out;

  const std::size_t n = u.size();
  std::vector<double> r(n), trial(n), r_trial(n);
  double multiplier = 0.0;
  double residual = 0.0;
  double energy = functional.evaluate(u, r, multiplier, residual);
  double tau = cfg.step;
  const double eps = std::numeric_limits<double>::epsilon();

  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    if (cfg.record_trace) out.trace.push_back({it, energy, residual, tau});
    if (residual <= cfg.tol_grad) {
      out.converged = true;
      break;
    }
    const double decrease = cfg.armijo * functional.slope() * dot(r, r);
    bool accepted = false;
    double trial_energy = 0.0;
    double trial_multiplier = 0.0;
    double trial_residual = 0.0;
    for (int halvings = 0; halvings < 60; ++halvings) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = std::abs(u[i] - tau * r[i]);
      if (!functional.normalize(trial)) {
        tau *= 0.5;
        continue;
      }
      trial_energy = functional.evaluate(trial, r_trial, trial_multiplier, trial_residual);
      if (cfg.step_rule == StepRule::fixed) {
        accepted = std::isfinite(trial_energy);
        break;
      }
      const double change = functional.increment(u, trial);
      const bool armijo = change <= -tau * decrease;
      // Once even the incremental decrease is lost in rounding, accept level
      // steps that reduce the residual.
      const bool flat = change <= 0.0 && trial_residual < residual;
      if (std::isfinite(trial_energy) && (armijo || flat)) {
        accepted = true;
        break;
      }
      tau *= 0.5;
    }
    if (!accepted) break;
    if (trial_energy > energy + 8.0 * eps * std::abs(energy)) ++out.ascent_steps;

    // Barzilai-Borwein trial step for the next iteration.
    double ss = 0.0;
    double sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = trial[i] - u[i];
      ss += s * s;
      sy += s * (r_trial[i] - r[i]);
    }
    if (cfg.step_rule == StepRule::backtracking) {
      tau = sy > 0.0 ? ss / sy : 2.0 * tau;
      tau = std::clamp(tau, 1e-12, 1e4);
    }
    u.swap(trial);
    r.swap(r_trial);
    energy = trial_energy;
    residual = trial_residual;
    multiplier = trial_multiplier;
  }
  out.iterations = it;
  out.u = std::move(u);
  out.energy = energy;
  out.residual = residual;
  out.valid = true;
  return out;
}

bool lex_less(const std::vector<double>& a, const std::vector<double>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

SolveResult solve(const Graph& graph, const ProblemSpec& spec, const SolverConfig& cfg) {
  validate(spec, graph.dim());
  validate(cfg);
  const auto starts = initial_fields(graph, cfg);
  std::vector<RunOutcome> runs(starts.size());
  parallel_for(starts.size(), resolve_threads(cfg.threads), [&](std::size_t k) {
    runs[k] = descend(graph, spec, cfg, starts[k].second);
  });

  const int probe = cfg.probe_radius > 0 ? cfg.probe_radius : std::max(1, graph.box_radius() / 2);
  SolveResult result(spec, Field(graph));
  result.approximate = spec.kind == ProblemKind::sobolev && spec.p == 1.0;

  std::optional<std::size_t> best;
  std::vector<Localization> locs(runs.size());
  std::vector<Stationarity> stats(runs.size());
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const RunOutcome& run = runs[k];
    RestartSummary summary;
    summary.seed = starts[k].first;
    if (!run.valid) {
      summary.energy = std::numeric_limits<double>::quiet_NaN();
      result.restarts.push_back(summary);
      continue;
    }
    stats[k] = stationarity(graph, spec, run.u);
    locs[k] = localization_report(graph, spec, run.u, probe);
    summary.energy = stats[k].energy;
    summary.multiplier = stats[k].multiplier;
    summary.el_residual = stats[k].residual;
    summary.converged = stats[k].residual <= cfg.tol_grad;
    summary.iterations = run.iterations;
    summary.center_of_mass_sup = locs[k].center_of_mass_sup();
    result.restarts.push_back(summary);

    if (!best) {
      best = k;
      continue;
    }
    const double e_best = stats[*best].energy;
    const double e = stats[k].energy;
    const double tie = 1e-12 * std::max(1.0, std::abs(e_best));
    if (e < e_best - tie) {
      best = k;
    } else if (e <= e_best + tie) {
      const double r_best = stats[*best].residual;
      const double r = stats[k].residual;
      if (r < r_best || (r == r_best && lex_less(locs[k].center_of_mass, locs[*best].center_of_mass))) {
        best = k;
      }
    }
  }
  if (!best) raise(ErrorKind::NotConverged, "no start produced a feasible field");

  RunOutcome& chosen = runs[*best];
  result.minimizer = Field(graph, std::move(chosen.u));
  result.energy = stats[*best].energy;
  result.multiplier = stats[*best].multiplier;
  result.el_residual = stats[*best].residual;
  result.converged = result.el_residual <= cfg.tol_grad;
  result.iterations = chosen.iterations;
  result.seed = starts[*best].first;
  result.localization = locs[*best];
  result.trace = std::move(chosen.trace);
  for (const RunOutcome& run : runs) result.ascent_steps += run.ascent_steps;
  return result;
}

}  // namespace

double objective(const Graph& graph, const ProblemSpec& spec, std::span<const double> u) {
  if (spec.kind == ProblemKind::nls) return nls_energy(graph, u, spec.p);
  return dirichlet_energy(graph, u, spec.p);
}

Stationarity stationarity(const Graph& graph, const ProblemSpec& spec,
                          std::span<const double> u) {
  Stationarity out{};
  const Field field(graph, std::vector<double>(u.begin(), u.end()));
  if (spec.kind == ProblemKind::nls) {
    const double kinetic = dirichlet_energy(graph, u, 2.0);
    const double potential = power_sum(u, spec.p);
    const double mass = power_sum(u, 2.0);
    out.energy = 0.5 * kinetic - potential / spec.p;
    out.multiplier = (potential - kinetic) / mass;
    const Field lap = laplacian(graph, field);
    double r2 = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double nonlinear = u[i] == 0.0 ? 0.0 : abs_pow(u[i], spec.p) / u[i];
      const double r = -lap[i] + out.multiplier * u[i] - nonlinear;
      r2 += r * r;
    }
    out.residual = std::sqrt(r2);
    return out;
  }
  const double energy = dirichlet_energy(graph, u, spec.p);
  const double mass = power_sum(u, spec.q);
  out.energy = energy;
  out.multiplier = energy / mass;
  if (spec.p == 1.0) {
    // Delta_1 is set-valued; report the smoothed residual.
    std::vector<double> grad(u.size());
    dirichlet_energy_gradient(graph, u, 1.0, grad, 1e-8);
    double r2 = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double uq = u[i] == 0.0 ? 0.0 : abs_pow(u[i], spec.q) / u[i];
      const double r = grad[i] - out.multiplier * uq;
      r2 += r * r;
    }
    out.residual = std::sqrt(r2);
    return out;
  }
  const Field plap = p_laplacian(graph, field, spec.p);
  double r2 = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double uq = u[i] == 0.0 ? 0.0 : abs_pow(u[i], spec.q) / u[i];
    const double r = -plap[i] - out.multiplier * uq;
    r2 += r * r;
  }
  out.residual = std::sqrt(r2);
  return out;
}

SolveResult minimize_nls(const Graph& graph, const ProblemSpec& spec, const SolverConfig& cfg) {
  if (spec.kind != ProblemKind::nls) raise(ErrorKind::InvalidSpec, "minimize_nls needs an NLS spec");
  return solve(graph, spec, cfg);
}

SolveResult minimize_sobolev(const Graph& graph, const ProblemSpec& spec,
                             const SolverConfig& cfg) {
  if (spec.kind != ProblemKind::sobolev) {
    raise(ErrorKind::InvalidSpec, "minimize_sobolev needs a Sobolev spec");
  }
  return solve(graph, spec, cfg);
}

SolveResult minimize(const Graph& graph, const ProblemSpec& spec, const SolverConfig& cfg) {
  return spec.kind == ProblemKind::nls ? minimize_nls(graph, spec, cfg)
                                       : minimize_sobolev(graph, spec, cfg);
}

// ---------------------------------------------------------------------------
// Localization

double Localization::center_of_mass_sup() const {
  double m = 0.0;
  for (double c : center_of_mass) m = std::max(m, std::abs(c));
  return m;
}

Localization localization_report(const Graph& graph, const ProblemSpec& spec,
                                 std::span<const double> u, int probe_radius) {
  Localization loc;
  loc.probe_radius = probe_radius;
  const std::size_t d = static_cast<std::size_t>(graph.dim());
  const int L = graph.box_radius();
  const double exponent = spec.kind == ProblemKind::nls ? 2.0 : spec.q;
  std::vector<double> w(u.size());
  double total = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    w[i] = abs_pow(u[i], exponent);
    total += w[i];
  }
  loc.center_of_mass.assign(d, 0.0);
  if (!(total > 0.0)) return loc;
  double ring = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const Vertex& x = graph.vertex(static_cast<Graph::Id>(i));
    for (std::size_t k = 0; k < d; ++k) loc.center_of_mass[k] += x[k] * w[i];
    const int r = x.sup_norm();
    if (r < probe_radius) loc.mass_in_ball += w[i];
    if (r >= L - 2) ring += w[i];
  }
  for (double& c : loc.center_of_mass) c /= total;
  loc.boundary_mass_fraction = ring / total;

  Vertex median = Vertex::origin(d);
  for (std::size_t k = 0; k < d; ++k) {
    std::vector<std::pair<int, double>> marginal;
    marginal.reserve(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
      marginal.emplace_back(graph.vertex(static_cast<Graph::Id>(i))[k], w[i]);
    }
    std::sort(marginal.begin(), marginal.end());
    double acc = 0.0;
    for (auto [c, weight] : marginal) {
      acc += weight;
      if (acc >= 0.5 * total) {
        median.coords[k] = c;
        break;
      }
    }
  }
  loc.median_sup_distance = median.sup_norm();
  return loc;
}

// ---------------------------------------------------------------------------
// Brute-force oracle

namespace {

// Hyperspherical coordinates: angles[0..n-3] in [0, pi], angles[n-2] in
// [0, 2pi). Angles outside those ranges still land on the sphere.
void sphere_point(std::span<const double> angles, std::span<double> v) {
  const std::size_t n = v.size();
  double s = 1.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    v[k] = s * std::cos(angles[k]);
    s *= std::sin(angles[k]);
  }
  v[n - 1] = s;
}

}  // namespace

double brute_force_oracle(const Graph& graph, const ProblemSpec& spec, const OracleGrid& grid) {
  const std::size_t n = graph.size();
  if (n > 4) raise(ErrorKind::TooLarge, "brute-force oracle supports at most 4 vertices");
  if (!(grid.resolution > 0.0) || !(grid.box_bound > 0.0)) {
    raise(ErrorKind::InvalidSpec, "oracle grid needs positive resolution and box_bound");
  }
  validate(spec, graph.dim());
  const double exponent = spec.kind == ProblemKind::nls ? 2.0 : spec.q;

  std::vector<double> v(n), u(n);
  auto value_on_sphere = [&](std::span<const double> dir) {
    double mass = 0.0;
    for (double x : dir) mass += abs_pow(x, exponent);
    const double s = std::pow(spec.a / mass, 1.0 / exponent);
    for (std::size_t i = 0; i < n; ++i) u[i] = s * dir[i];
    return objective(graph, spec, u);
  };

  if (n == 1) {
    v[0] = 1.0;
    const double plus = value_on_sphere(v);
    v[0] = -1.0;
    return std::min(plus, value_on_sphere(v));
  }

  const std::size_t dims = n - 1;
  const double pi = std::acos(-1.0);
  // Coarse level: cells per angle.
  std::vector<int> cells(dims);
  std::vector<double> h(dims);
  const int base = n == 2 ? 4096 : (n == 3 ? 512 : 64);
  for (std::size_t k = 0; k < dims; ++k) {
    const bool last = k + 1 == dims;
    cells[k] = last ? 2 * base : base;
    h[k] = (last ? 2.0 * pi : pi) / (last ? cells[k] : cells[k] - 1);
  }

  struct Candidate {
    double value;
    std::vector<double> angles;
  };
  std::vector<Candidate> coarse;
  std::vector<double> angles(dims);
  std::vector<int> idx(dims, 0);
  while (true) {
    for (std::size_t k = 0; k < dims; ++k) angles[k] = idx[k] * h[k];
    sphere_point(angles, v);
    coarse.push_back({value_on_sphere(v), angles});
    std::size_t k = 0;
    while (k < dims && ++idx[k] == cells[k]) idx[k++] = 0;
    if (k == dims) break;
  }
  const std::size_t keep = std::min<std::size_t>(32, coarse.size());
  std::partial_sort(coarse.begin(), coarse.begin() + static_cast<std::ptrdiff_t>(keep), coarse.end(),
                    [](const Candidate& a, const Candidate& b) { return a.value < b.value; });
  coarse.resize(keep);

  // Each refinement level shrinks the cell by `factor`.
  const int factor = 4;
  const int half = static_cast<int>(std::ceil(grid.box_bound * factor));
  double best = coarse.front().value;
  for (Candidate& cand : coarse) {
    std::vector<double> step = h;
    while (*std::max_element(step.begin(), step.end()) > grid.resolution) {
      for (double& s : step) s /= factor;
      std::vector<double> centre = cand.angles;
      std::vector<int> off(dims, -half);
      while (true) {
        for (std::size_t k = 0; k < dims; ++k) angles[k] = centre[k] + off[k] * step[k];
        sphere_point(angles, v);
        const double val = value_on_sphere(v);
        if (val < cand.value) {
          cand.value = val;
          cand.angles = angles;
        }
        std::size_t k = 0;
        while (k < dims && ++off[k] > half) off[k++] = -half;
        if (k == dims) break;
      }
    }
    best = std::min(best, cand.value);
  }
  return best;
}

}  // namespace varopt
