#include "varopt/lattice_graph.hpp"

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <stdexcept>

#include "varopt/error.hpp"

namespace varopt {

namespace {

std::string describe(const Vertex& x) {
  std::string out = "(";
  for (std::size_t k = 0; k < x.dim(); ++k) {
    if (k) out += ",";
    out += std::to_string(x[k]);
  }
  return out + ")";
}

std::string describe(const Edge& e) {
  return "{" + describe(e.first()) + "," + describe(e.second()) + "}";
}

// Visits B_R in lexicographic order.
template <class Fn>
void for_each_in_ball(int d, int R, Fn&& fn) {
  if (R <= 0) return;
  Vertex x(std::vector<int>(static_cast<std::size_t>(d), -(R - 1)));
  while (true) {
    fn(static_cast<const Vertex&>(x));
    int k = d - 1;
    while (k >= 0 && x.coords[k] == R - 1) {
      x.coords[k] = -(R - 1);
      --k;
    }
    if (k < 0) return;
    ++x.coords[k];
  }
}

std::size_t ipow(std::size_t base, int exp) {
  std::size_t out = 1;
  for (int i = 0; i < exp; ++i) out *= base;
  return out;
}

}  // namespace

int Vertex::sup_norm() const {
  int m = 0;
  for (int c : coords) m = std::max(m, std::abs(c));
  return m;
}

Vertex Vertex::unit(std::size_t d, std::size_t k, int s) {
  Vertex v = origin(d);
  v.coords[k] = s;
  return v;
}

Vertex operator+(const Vertex& a, const Vertex& b) {
  Vertex out = a;
  for (std::size_t k = 0; k < a.dim(); ++k) out.coords[k] += b[k];
  return out;
}

Vertex operator-(const Vertex& a, const Vertex& b) {
  Vertex out = a;
  for (std::size_t k = 0; k < a.dim(); ++k) out.coords[k] -= b[k];
  return out;
}

bool is_lattice_adjacent(const Vertex& x, const Vertex& y) {
  if (x.dim() != y.dim()) return false;
  int l1 = 0;
  for (std::size_t k = 0; k < x.dim(); ++k) l1 += std::abs(x[k] - y[k]);
  return l1 == 1;
}

Edge::Edge(Vertex a, Vertex b) {
  if (a.dim() != b.dim()) raise(ErrorKind::InvalidSpec, "edge endpoints differ in dimension");
  if (a == b) raise(ErrorKind::InvalidSpec, "self-loop at " + describe(a));
  if (b < a) std::swap(a, b);
  first_ = std::move(a);
  second_ = std::move(b);
}

std::string_view to_string(BoundaryMode mode) {
  return mode == BoundaryMode::drop ? "drop" : "dirichlet";
}

BoundaryMode boundary_mode_from_string(std::string_view name) {
  if (name == "drop") return BoundaryMode::drop;
  if (name == "dirichlet") return BoundaryMode::dirichlet;
  raise(ErrorKind::InvalidSpec, "unknown boundary mode '" + std::string(name) + "'");
}

void validate(const GraphSpec& spec) {
  if (spec.d < 1) raise(ErrorKind::InvalidSpec, "dimension must be >= 1");
  if (spec.L < 2) raise(ErrorKind::InvalidSpec, "truncation radius L must be >= 2");
  const int R = spec.R.value_or(spec.L);
  if (R < 1 || R > spec.L) {
    raise(ErrorKind::InvalidSpec, "perturbation radius must satisfy 1 <= R <= L");
  }
  if (!spec.deletions.empty() && !spec.additions.empty()) {
    raise(ErrorKind::InvalidSpec, "deletions and additions cannot both be present");
  }
  auto check_dim = [&](const Edge& e) {
    if (e.first().dim() != static_cast<std::size_t>(spec.d)) {
      raise(ErrorKind::InvalidSpec, "edge " + describe(e) + " has wrong dimension");
    }
  };
  for (const Edge& e : spec.deletions) {
    check_dim(e);
    if (!is_lattice_adjacent(e.first(), e.second())) {
      raise(ErrorKind::InvalidSpec, "deletion " + describe(e) + " is not a lattice edge");
    }
    if (!in_ball(e.first(), R) || !in_ball(e.second(), R)) {
      raise(ErrorKind::InvalidSpec, "deletion " + describe(e) + " leaves B_R");
    }
  }
  for (const Edge& e : spec.additions) {
    check_dim(e);
    if (is_lattice_adjacent(e.first(), e.second())) {
      raise(ErrorKind::InvalidSpec, "addition " + describe(e) + " is already a lattice edge");
    }
    if (!in_ball(e.first(), R) || !in_ball(e.second(), R)) {
      raise(ErrorKind::InvalidSpec, "addition " + describe(e) + " leaves B_R");
    }
    if (spec.deletions.contains(e)) {
      raise(ErrorKind::InvalidSpec, "edge " + describe(e) + " both added and deleted");
    }
  }
}

Graph::Graph(GraphSpec spec, std::vector<Vertex> vertices,
             std::vector<std::pair<Id, Id>> edges, std::vector<int> ghosts,
             bool lattice)
    : spec_(std::move(spec)),
      lattice_(lattice),
      vertices_(std::move(vertices)),
      edges_(std::move(edges)),
      ghosts_(std::move(ghosts)) {
  std::sort(edges_.begin(), edges_.end());
  const std::size_t n = vertices_.size();
  offsets_.assign(n + 1, 0);
  for (auto [i, j] : edges_) {
    ++offsets_[i + 1];
    ++offsets_[j + 1];
  }
  for (std::size_t i = 0; i < n; ++i) offsets_[i + 1] += offsets_[i];
  adjacency_.resize(offsets_[n]);
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (auto [i, j] : edges_) {
    adjacency_[fill[i]++] = j;
    adjacency_[fill[j]++] = i;
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::sort(adjacency_.begin() + offsets_[i], adjacency_.begin() + offsets_[i + 1]);
  }
}

std::optional<Graph::Id> Graph::index_of(const Vertex& x) const {
  if (x.dim() != static_cast<std::size_t>(spec_.d)) return std::nullopt;
  if (lattice_) {
    const int L = spec_.L;
    if (!in_ball(x, L)) return std::nullopt;
    std::size_t id = 0;
    for (int c : x.coords) id = id * static_cast<std::size_t>(2 * L - 1) + (c + L - 1);
    return static_cast<Id>(id);
  }
  auto it = std::lower_bound(vertices_.begin(), vertices_.end(), x);
  if (it == vertices_.end() || *it != x) return std::nullopt;
  return static_cast<Id>(it - vertices_.begin());
}

GraphSpec lattice_spec(int d, int L, BoundaryMode boundary) {
  GraphSpec spec;
  spec.d = d;
  spec.L = L;
  spec.boundary = boundary;
  spec.construction = "lattice";
  return spec;
}

Graph build_graph(const GraphSpec& spec) {
  validate(spec);
  const int d = spec.d;
  const int L = spec.L;
  const std::size_t side = static_cast<std::size_t>(2 * L - 1);
  const std::size_t n = ipow(side, d);
  if (n > std::size_t{1} << 31) raise(ErrorKind::InvalidSpec, "truncation too large");

  std::vector<Vertex> vertices;
  vertices.reserve(n);
  for_each_in_ball(d, L, [&](const Vertex& x) { vertices.push_back(x); });

  // stride of coordinate k in the row-major (lexicographic) numbering
  std::vector<std::size_t> stride(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) stride[k] = ipow(side, d - 1 - k);

  std::vector<std::pair<Graph::Id, Graph::Id>> edges;
  edges.reserve(n * static_cast<std::size_t>(d) + spec.additions.size());
  std::vector<int> ghosts(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const Vertex& x = vertices[i];
    for (int k = 0; k < d; ++k) {
      if (x[k] + 1 <= L - 1) {
        const std::size_t j = i + stride[k];
        if (spec.deletions.empty() || !spec.deletions.contains(Edge(x, vertices[j]))) {
          edges.emplace_back(static_cast<Graph::Id>(i), static_cast<Graph::Id>(j));
        }
      } else if (spec.boundary == BoundaryMode::dirichlet) {
        ++ghosts[i];
      }
      if (x[k] - 1 < -(L - 1) && spec.boundary == BoundaryMode::dirichlet) ++ghosts[i];
    }
  }

  auto lattice_index = [&](const Vertex& x) {
    std::size_t id = 0;
    for (int c : x.coords) id = id * side + static_cast<std::size_t>(c + L - 1);
    return static_cast<Graph::Id>(id);
  };
  for (const Edge& e : spec.additions) {
    edges.emplace_back(lattice_index(e.first()), lattice_index(e.second()));
  }
  Graph graph(spec, std::move(vertices), std::move(edges), std::move(ghosts), true);

  if (!spec.deletions.empty() && !is_connected(graph)) {
    raise(ErrorKind::DisconnectedGraph, "edge deletions disconnect the truncation");
  }
  return graph;
}

Graph make_path_graph(int n, BoundaryMode boundary) {
  if (n < 1) raise(ErrorKind::InvalidSpec, "path needs at least one vertex");
  GraphSpec spec;
  spec.d = 1;
  spec.L = n;
  spec.boundary = boundary;
  spec.construction = "path";
  std::vector<Vertex> vertices;
  std::vector<std::pair<Graph::Id, Graph::Id>> edges;
  std::vector<int> ghosts(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) vertices.push_back(Vertex{i});
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  if (boundary == BoundaryMode::dirichlet) {
    ++ghosts.front();
    ++ghosts.back();
  }
  return Graph(std::move(spec), std::move(vertices), std::move(edges), std::move(ghosts), false);
}

std::vector<Edge> ball_boundary_edges(int d, int R) {
  std::vector<Edge> out;
  for_each_in_ball(d, R, [&](const Vertex& y) {
    for (int k = 0; k < d; ++k) {
      for (int s : {-1, 1}) {
        Vertex z = y;
        z.coords[k] += s;
        if (!in_ball(z, R)) out.emplace_back(y, z);
      }
    }
  });
  std::sort(out.begin(), out.end());
  return out;
}

GraphSpec sphere_deletion_spec(int d, int R, int L, std::optional<Edge> kept,
                               BoundaryMode boundary) {
  if (d < 1 || R < 1) raise(ErrorKind::InvalidSpec, "sphere deletion needs d >= 1, R >= 1");
  if (R >= L) raise(ErrorKind::InvalidSpec, "sphere deletion needs R < L");
  if (!kept) {
    Vertex inner = Vertex::unit(d, 0, R - 1);
    Vertex outer = Vertex::unit(d, 0, R);
    kept.emplace(std::move(inner), std::move(outer));
  }
  GraphSpec spec = lattice_spec(d, L, boundary);
  spec.construction = "sphere_deletion";
  spec.R = R + 1;
  bool found = false;
  for (Edge& e : ball_boundary_edges(d, R)) {
    if (e == *kept) {
      found = true;
      continue;
    }
    spec.deletions.insert(std::move(e));
  }
  if (!found) raise(ErrorKind::InvalidSpec, "kept edge " + describe(*kept) + " is not on the sphere");
  return spec;
}

GraphSpec star_addition_spec(int d, int R, int L, BoundaryMode boundary) {
  if (d < 1) raise(ErrorKind::InvalidSpec, "star addition needs d >= 1");
  if (R >= L) raise(ErrorKind::InvalidSpec, "star addition needs R < L");
  if (R < 2) raise(ErrorKind::InvalidSpec, "star addition needs R >= 2");
  GraphSpec spec = lattice_spec(d, L, boundary);
  spec.construction = "star_addition";
  spec.R = R;
  std::vector<Vertex> hubs{Vertex::origin(d)};
  for (int k = 0; k < d; ++k) {
    hubs.push_back(Vertex::unit(d, k, 1));
    hubs.push_back(Vertex::unit(d, k, -1));
  }
  for (const Vertex& hub : hubs) {
    for_each_in_ball(d, R, [&](const Vertex& y) {
      if (y == hub || is_lattice_adjacent(hub, y)) return;
      spec.additions.emplace(hub, y);
    });
  }
  return spec;
}

std::vector<Vertex> neighbors(const Graph& graph, const Vertex& x) {
  const auto id = graph.index_of(x);
  if (!id) raise(ErrorKind::OutOfBox, "vertex " + describe(x) + " is outside the truncation");
  std::vector<Vertex> out;
  for (Graph::Id j : graph.neighbors(*id)) out.push_back(graph.vertex(j));
  return out;
}

bool is_connected(const Graph& graph) {
  const std::size_t n = graph.size();
  if (n == 0) return true;
  std::vector<char> seen(n, 0);
  std::deque<Graph::Id> queue{0};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!queue.empty()) {
    const Graph::Id i = queue.front();
    queue.pop_front();
    for (Graph::Id j : graph.neighbors(i)) {
      if (!seen[j]) {
        seen[j] = 1;
        ++reached;
        queue.push_back(j);
      }
    }
  }
  return reached == n;
}

}  // namespace varopt
