#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace varopt {

/// A point of Z^d, stored by its integer coordinates.
struct Vertex {
  std::vector<int> coords;

  Vertex() = default;
  explicit Vertex(std::vector<int> c) : coords(std::move(c)) {}
  Vertex(std::initializer_list<int> c) : coords(c) {}

  std::size_t dim() const { return coords.size(); }
  int operator[](std::size_t k) const { return coords[k]; }

  /// Sup-norm |x|_inf.
  int sup_norm() const;

  static Vertex origin(std::size_t d) { return Vertex(std::vector<int>(d, 0)); }
  /// The unit vertex s*e_k.
  static Vertex unit(std::size_t d, std::size_t k, int s = 1);

  friend auto operator<=>(const Vertex&, const Vertex&) = default;
  friend bool operator==(const Vertex&, const Vertex&) = default;
};

Vertex operator+(const Vertex& a, const Vertex& b);
Vertex operator-(const Vertex& a, const Vertex& b);

/// True iff x lies in the sup-norm ball B_R = {|x|_inf < R}.
inline bool in_ball(const Vertex& x, int R) { return x.sup_norm() < R; }

/// True iff x and y are at l1-distance one (a base edge of Z^d).
bool is_lattice_adjacent(const Vertex& x, const Vertex& y);

/// Undirected edge with the lexicographically smaller endpoint first.
class Edge {
 public:
  /// Canonicalizes the pair; throws InvalidSpec on a self-loop or a
  /// dimension mismatch.
  Edge(Vertex a, Vertex b);

  const Vertex& first() const { return first_; }
  const Vertex& second() const { return second_; }

  friend auto operator<=>(const Edge&, const Edge&) = default;
  friend bool operator==(const Edge&, const Edge&) = default;

 private:
  Vertex first_;
  Vertex second_;
};

/// How fields are extended past the truncation box B_L.
///
/// `drop` discards lattice edges leaving B_L. `dirichlet` keeps them as
/// edges to a zero-valued exterior, so every vertex on the outer ring carries
/// one "ghost" edge per missing lattice neighbour.
enum class BoundaryMode { drop, dirichlet };

std::string_view to_string(BoundaryMode mode);
BoundaryMode boundary_mode_from_string(std::string_view name);

struct GraphSpec {
  int d = 1;
  int L = 2;
  /// Perturbation radius; every perturbed edge lies in B_R.
  std::optional<int> R;
  std::set<Edge> deletions;
  std::set<Edge> additions;
  BoundaryMode boundary = BoundaryMode::dirichlet;
  /// Name of the construction that produced this spec; informational.
  std::string construction = "lattice";

  friend bool operator==(const GraphSpec&, const GraphSpec&) = default;
};

/// Throws InvalidSpec if any GraphSpec invariant fails.
void validate(const GraphSpec& spec);

/// Finite graph on a vertex set sorted lexicographically.
///
/// Immutable after construction. Lattice truncations are built by
/// build_graph(); small free-form graphs (oracle fixtures) by
/// make_path_graph().
class Graph {
 public:
  using Id = std::uint32_t;

  const GraphSpec& spec() const { return spec_; }
  int dim() const { return spec_.d; }
  int box_radius() const { return spec_.L; }
  BoundaryMode boundary() const { return spec_.boundary; }
  bool is_lattice() const { return lattice_; }

  std::size_t size() const { return vertices_.size(); }
  const Vertex& vertex(Id id) const { return vertices_[id]; }
  std::span<const Vertex> vertices() const { return vertices_; }

  /// Dense id of x, or nullopt if x is not a vertex.
  std::optional<Id> index_of(const Vertex& x) const;

  std::span<const Id> neighbors(Id id) const {
    return {adjacency_.data() + offsets_[id], adjacency_.data() + offsets_[id + 1]};
  }
  std::size_t degree(Id id) const { return offsets_[id + 1] - offsets_[id]; }

  /// Number of zero-valued exterior neighbours (always 0 in drop mode).
  int ghost_degree(Id id) const { return ghosts_[id]; }

  /// Each undirected edge exactly once, (i, j) with i < j.
  std::span<const std::pair<Id, Id>> edges() const { return edges_; }

 private:
  friend Graph build_graph(const GraphSpec& spec);
  friend Graph make_path_graph(int n, BoundaryMode boundary);

  Graph(GraphSpec spec, std::vector<Vertex> vertices,
        std::vector<std::pair<Id, Id>> edges, std::vector<int> ghosts,
        bool lattice);

  GraphSpec spec_;
  bool lattice_ = true;
  std::vector<Vertex> vertices_;
  std::vector<std::pair<Id, Id>> edges_;
  std::vector<std::size_t> offsets_;
  std::vector<Id> adjacency_;
  std::vector<int> ghosts_;
};

/// Builds the truncation of the perturbed lattice described by `spec`.
/// Edge set: (base edges inside B_L minus deletions) plus additions.
Graph build_graph(const GraphSpec& spec);

/// Path 0 - 1 - ... - (n-1) embedded in Z^1. In dirichlet mode both ends
/// carry one ghost edge. Not a lattice truncation; used for oracle checks.
Graph make_path_graph(int n, BoundaryMode boundary = BoundaryMode::drop);

/// Unperturbed truncation of Z^d.
GraphSpec lattice_spec(int d, int L, BoundaryMode boundary = BoundaryMode::dirichlet);

/// Edges (y, z) of Z^d with y in B_R and z outside B_R.
std::vector<Edge> ball_boundary_edges(int d, int R);

/// Deletes every edge of the ball boundary except `kept` (default
/// ((R-1,0,...,0),(R,0,...,0))). Throws InvalidSpec if R >= L or if `kept`
/// is not a boundary edge. The recorded perturbation radius is R + 1 since
/// the outer endpoints sit on the sphere |z|_inf = R.
GraphSpec sphere_deletion_spec(int d, int R, int L,
                               std::optional<Edge> kept = std::nullopt,
                               BoundaryMode boundary = BoundaryMode::dirichlet);

/// Joins 0 and every +-e_k to all of B_R (skipping base edges and
/// self-pairs). Throws InvalidSpec unless 2 <= R < L.
GraphSpec star_addition_spec(int d, int R, int L,
                             BoundaryMode boundary = BoundaryMode::dirichlet);

/// Neighbours of x in canonical (lexicographic) order. Throws OutOfBox if x
/// is not a vertex of the graph.
std::vector<Vertex> neighbors(const Graph& graph, const Vertex& x);

bool is_connected(const Graph& graph);

}  // namespace varopt
