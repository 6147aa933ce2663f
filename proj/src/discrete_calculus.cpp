#include "varopt/discrete_calculus.hpp"

#include <cmath>
#include <string>

#include "varopt/error.hpp"

namespace varopt {

namespace {

void require_exponent(double p, double min, bool strict, const char* what) {
  const bool bad = strict ? !(p > min) : !(p >= min);
  if (bad || std::isnan(p)) {
    raise(ErrorKind::InvalidExponent,
          std::string(what) + ": exponent " + std::to_string(p) + " out of range");
  }
}

// |t|^p, with the p == 2 case kept exact.
inline double abs_pow(double t, double p) {
  if (p == 2.0) return t * t;
  if (p == 1.0) return std::abs(t);
  return std::pow(std::abs(t), p);
}

// |t|^(p-2) t, zero at t = 0 for every p > 1.
inline double signed_pow(double t, double p) {
  if (p == 2.0) return t;
  if (t == 0.0) return 0.0;
  return std::pow(std::abs(t), p - 2.0) * t;
}

}  // namespace

Field::Field(const Graph& graph, std::vector<double> values)
    : graph_(&graph), values_(std::move(values)) {
  if (values_.size() != graph.size()) {
    raise(ErrorKind::InvalidSpec, "field length " + std::to_string(values_.size()) +
                                      " does not match graph size " +
                                      std::to_string(graph.size()));
  }
}

Field Field::delta(const Graph& graph, const Vertex& x, double scale) {
  const auto id = graph.index_of(x);
  if (!id) raise(ErrorKind::OutOfBox, "delta centre outside the truncation");
  Field f(graph);
  f[*id] = scale;
  return f;
}

double Field::at(const Vertex& x) const {
  const auto id = graph_->index_of(x);
  return id ? values_[*id] : 0.0;
}

Field& Field::operator+=(const Field& other) {
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

Field& Field::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }

double power_sum(std::span<const double> u, double p) {
  require_exponent(p, 1.0, false, "power_sum");
  double sum = 0.0;
  for (double v : u) sum += abs_pow(v, p);
  return sum;
}

double lp_norm(std::span<const double> u, double p) {
  require_exponent(p, 1.0, false, "lp_norm");
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : u) m = std::max(m, std::abs(v));
    return m;
  }
  // Scale by the sup norm so large exponents do not underflow.
  double m = 0.0;
  for (double v : u) m = std::max(m, std::abs(v));
  if (m == 0.0) return 0.0;
  double sum = 0.0;
  for (double v : u) sum += abs_pow(v / m, p);
  return m * std::pow(sum, 1.0 / p);
}

double dirichlet_energy(const Graph& graph, std::span<const double> u, double p) {
  require_exponent(p, 1.0, false, "dirichlet_energy");
  double sum = 0.0;
  for (auto [i, j] : graph.edges()) sum += abs_pow(u[i] - u[j], p);
  if (graph.boundary() == BoundaryMode::dirichlet) {
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (const int g = graph.ghost_degree(static_cast<Graph::Id>(i))) sum += g * abs_pow(u[i], p);
    }
  }
  return sum;
}

Field laplacian(const Graph& graph, const Field& u) {
  Field out(graph);
  for (auto [i, j] : graph.edges()) {
    const double diff = u[j] - u[i];
    out[i] += diff;
    out[j] -= diff;
  }
  for (std::size_t i = 0; i < u.size(); ++i) {
    out[i] -= graph.ghost_degree(static_cast<Graph::Id>(i)) * u[i];
  }
  return out;
}

Field p_laplacian(const Graph& graph, const Field& u, double p) {
  require_exponent(p, 1.0, true, "p_laplacian");
  Field out(graph);
  for (auto [i, j] : graph.edges()) {
    const double flux = signed_pow(u[j] - u[i], p);
    out[i] += flux;
    out[j] -= flux;
  }
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (const int g = graph.ghost_degree(static_cast<Graph::Id>(i))) {
      out[i] += g * signed_pow(-u[i], p);
    }
  }
  return out;
}

double nls_energy(const Graph& graph, std::span<const double> u, double p) {
  require_exponent(p, 2.0, true, "nls_energy");
  return 0.5 * dirichlet_energy(graph, u, 2.0) - power_sum(u, p) / p;
}

Field translate(const Field& u, const Vertex& shift) {
  const Graph& graph = u.graph();
  Field out(graph);
  for (std::size_t i = 0; i < graph.size(); ++i) {
    out[i] = u.at(graph.vertex(static_cast<Graph::Id>(i)) + shift);
  }
  return out;
}

EnergyReport energy_report(const Graph& graph, const Field& u, double p,
                           std::span<const double> q_list,
                           std::optional<double> nls_exponent) {
  EnergyReport report;
  report.p = p;
  report.dirichlet_p = dirichlet_energy(graph, u, p);
  for (double q : q_list) report.lq_norms[q] = lp_norm(u, q);
  if (nls_exponent) report.phi = nls_energy(graph, u, *nls_exponent);
  return report;
}

double dirichlet_energy_gradient(const Graph& graph, std::span<const double> u,
                                 double p, std::span<double> grad, double smoothing) {
  require_exponent(p, 1.0, false, "dirichlet_energy_gradient");
  std::fill(grad.begin(), grad.end(), 0.0);
  const bool smooth = (p == 1.0 && smoothing > 0.0);
  const double eps2 = smoothing * smoothing;
  double energy = 0.0;
  auto term = [&](double t, double& slope) {
    if (smooth) {
      const double r = std::sqrt(t * t + eps2);
      slope = t / r;
      return r;
    }
    if (p == 1.0) {
      slope = (t > 0.0) - (t < 0.0);
      return std::abs(t);
    }
    slope = p * signed_pow(t, p);
    return abs_pow(t, p);
  };
  for (auto [i, j] : graph.edges()) {
    double slope = 0.0;
    energy += term(u[i] - u[j], slope);
    grad[i] += slope;
    grad[j] -= slope;
  }
  if (graph.boundary() == BoundaryMode::dirichlet) {
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (const int g = graph.ghost_degree(static_cast<Graph::Id>(i))) {
        double slope = 0.0;
        energy += g * term(u[i], slope);
        grad[i] += g * slope;
      }
    }
  }
  return energy;
}

double nls_energy_gradient(const Graph& graph, std::span<const double> u, double p,
                           std::span<double> grad) {
  require_exponent(p, 2.0, true, "nls_energy_gradient");
  const double kinetic = dirichlet_energy_gradient(graph, u, 2.0, grad);
  double potential = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    grad[i] *= 0.5;
    const double a = std::abs(u[i]);
    const double ap = (p == 4.0) ? a * a * a * a : std::pow(a, p);
    potential += ap;
    grad[i] -= (a == 0.0) ? 0.0 : ap / u[i];
  }
  return 0.5 * kinetic - potential / p;
}

}  // namespace varopt
