#pragma once

#include <limits>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "varopt/lattice_graph.hpp"

namespace varopt {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Real function on the vertices of a graph, zero outside it.
///
/// Holds a non-owning reference to its graph; the graph must outlive the
/// field. Values are aligned with the graph's canonical vertex order.
class Field {
 public:
  explicit Field(const Graph& graph)
      : graph_(&graph), values_(graph.size(), 0.0) {}
  Field(const Graph& graph, std::vector<double> values);

  /// scale * delta_x. Throws OutOfBox if x is not a vertex.
  static Field delta(const Graph& graph, const Vertex& x, double scale = 1.0);

  const Graph& graph() const { return *graph_; }
  std::size_t size() const { return values_.size(); }

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  /// Value at x, or 0 if x lies outside the graph.
  double at(const Vertex& x) const;

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double s);

 private:
  const Graph* graph_;
  std::vector<double> values_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);

/// sum_x |u(x)|^p for finite p >= 1 (no root).
double power_sum(std::span<const double> u, double p);

/// (sum_x |u(x)|^p)^(1/p), or sup|u| when p is infinite. Throws
/// InvalidExponent if p < 1.
double lp_norm(std::span<const double> u, double p);
inline double lp_norm(const Field& u, double p) { return lp_norm(u.values(), p); }

/// Sum over undirected edges, each counted once, of |u(x) - u(y)|^p. In
/// dirichlet mode the ghost edges add ghost(x) * |u(x)|^p.
double dirichlet_energy(const Graph& graph, std::span<const double> u, double p);
inline double dirichlet_energy(const Graph& graph, const Field& u, double p) {
  return dirichlet_energy(graph, u.values(), p);
}

/// Delta u(x) = sum_{y~x} (u(y) - u(x)), ghosts contributing -u(x).
Field laplacian(const Graph& graph, const Field& u);

/// Delta_p u(x) = sum_{y~x} |u(y)-u(x)|^(p-2) (u(y)-u(x)). Requires p > 1.
Field p_laplacian(const Graph& graph, const Field& u, double p);

/// Phi(u) = 1/2 * dirichlet_energy(u, 2) - (1/p) * sum |u|^p. The gradient's
/// own factor 1/2 cancels the double count, so the edge sum enters with 1/2.
/// Requires p > 2.
double nls_energy(const Graph& graph, std::span<const double> u, double p);
inline double nls_energy(const Graph& graph, const Field& u, double p) {
  return nls_energy(graph, u.values(), p);
}

/// v(x) = u(x + shift); mass shifted outside the box is lost.
Field translate(const Field& u, const Vertex& shift);

struct EnergyReport {
  double p = 2.0;
  double dirichlet_p = 0.0;
  std::map<double, double> lq_norms;
  std::optional<double> phi;
};

/// Collects dirichlet_energy(u, p), the requested l^q norms and, when
/// `nls_exponent` is set, Phi(u) with that exponent.
EnergyReport energy_report(const Graph& graph, const Field& u, double p,
                           std::span<const double> q_list,
                           std::optional<double> nls_exponent = std::nullopt);

/// Gradient of dirichlet_energy(., p) written into `grad`, returning the
/// energy. For p == 1 and smoothing > 0 both the value and the gradient use
/// |t|_eps = sqrt(t^2 + eps^2).
double dirichlet_energy_gradient(const Graph& graph, std::span<const double> u,
                                 double p, std::span<double> grad,
                                 double smoothing = 0.0);

/// Gradient of nls_energy(., p) written into `grad`, returning the energy.
double nls_energy_gradient(const Graph& graph, std::span<const double> u,
                           double p, std::span<double> grad);

}  // namespace varopt
