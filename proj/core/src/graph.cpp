#include "rescon/graph.hpp"

#include <algorithm>
#include <complex>
#include <string>

#include <Eigen/Eigenvalues>

#include "rescon/errors.hpp"

namespace rescon {

namespace {

void check_node(const DiGraph& g, int i, const char* what) {
  if (i < 0 || i >= g.size()) {
    throw ConfigError(std::string(what) + " index out of range: " +
                      std::to_string(i));
  }
}

// Forward-reachable set of `start` along edge direction (tail -> head).
std::vector<bool> reachable_from(const DiGraph& g, int start) {
  const int n = g.size();
  std::vector<bool> seen(n, false);
  std::vector<int> stack{start};
  seen[start] = true;
  while (!stack.empty()) {
    const int j = stack.back();
    stack.pop_back();
    for (int i = 0; i < n; ++i) {
      if (!seen[i] && g.weights()(i, j) > 0.0) {
        seen[i] = true;
        stack.push_back(i);
      }
    }
  }
  return seen;
}

}  // namespace

DiGraph::DiGraph(int n) {
  if (n < 1) throw ConfigError("graph needs at least one node");
  weights_ = Eigen::MatrixXd::Zero(n, n);
}

DiGraph::DiGraph(int n, const std::vector<Edge>& edges) : DiGraph(n) {
  for (const Edge& e : edges) {
    if (e.tail < 0 || e.tail >= n || e.head < 0 || e.head >= n) {
      throw ConfigError("edge endpoint out of range");
    }
    if (e.tail == e.head) throw ConfigError("self loops are not allowed");
    if (!(e.weight > 0.0)) throw ConfigError("edge weight must be positive");
    if (weights_(e.head, e.tail) != 0.0) {
      throw ConfigError("duplicate edge " + std::to_string(e.tail) + "->" +
                        std::to_string(e.head));
    }
    weights_(e.head, e.tail) = e.weight;
  }
}

DiGraph DiGraph::from_weights(const Eigen::MatrixXd& weights) {
  if (weights.rows() != weights.cols() || weights.rows() < 1) {
    throw ConfigError("adjacency matrix must be square and nonempty");
  }
  DiGraph g(static_cast<int>(weights.rows()));
  for (int i = 0; i < g.size(); ++i) {
    for (int j = 0; j < g.size(); ++j) {
      const double w = weights(i, j);
      if (w < 0.0) throw ConfigError("adjacency weights must be nonnegative");
      if (i == j && w != 0.0) throw ConfigError("self loops are not allowed");
    }
  }
  g.weights_ = weights;
  return g;
}

std::vector<int> DiGraph::in_neighbors(int i) const {
  check_node(*this, i, "node");
  std::vector<int> out;
  for (int j = 0; j < size(); ++j) {
    if (weights_(i, j) > 0.0) out.push_back(j);
  }
  return out;
}

std::vector<int> DiGraph::out_neighbors(int j) const {
  check_node(*this, j, "node");
  std::vector<int> out;
  for (int i = 0; i < size(); ++i) {
    if (weights_(i, j) > 0.0) out.push_back(i);
  }
  return out;
}

Eigen::MatrixXd laplacian(const DiGraph& g) {
  const int n = g.size();
  Eigen::MatrixXd L = -g.weights();
  for (int i = 0; i < n; ++i) L(i, i) = g.weights().row(i).sum();
  return L;
}

bool has_spanning_tree(const DiGraph& g) {
  const int n = g.size();
  for (int r = 0; r < n; ++r) {
    const auto seen = reachable_from(g, r);
    if (std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) {
      return true;
    }
  }
  return false;
}

std::vector<int> root_nodes(const DiGraph& g) {
  const int n = g.size();
  std::vector<int> roots;
  for (int r = 0; r < n; ++r) {
    const auto seen = reachable_from(g, r);
    if (std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) {
      roots.push_back(r);
    }
  }
  return roots;
}

LaplacianPartition root_partition(const DiGraph& g) {
  LaplacianPartition part;
  part.root_nodes = root_nodes(g);
  if (part.root_nodes.empty()) {
    throw NoSpanningTree("root partition requires a spanning tree");
  }
  const int n = g.size();
  std::vector<bool> is_root(n, false);
  for (int r : part.root_nodes) is_root[r] = true;
  for (int i = 0; i < n; ++i) {
    if (!is_root[i]) part.nonroot_nodes.push_back(i);
  }

  std::vector<int> order = part.root_nodes;
  order.insert(order.end(), part.nonroot_nodes.begin(),
               part.nonroot_nodes.end());
  const Eigen::MatrixXd L = laplacian(g);
  Eigen::MatrixXd P(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) P(a, b) = L(order[a], order[b]);
  }
  const int nr = static_cast<int>(part.root_nodes.size());
  const int nn = n - nr;
  part.L_rr = P.topLeftCorner(nr, nr);
  part.L_r_nr = P.topRightCorner(nr, nn);
  part.L_nr_r = P.bottomLeftCorner(nn, nr);
  part.L_nr_nr = P.bottomRightCorner(nn, nn);
  return part;
}

Eigen::VectorXd left_zero_eigenvector(const DiGraph& g) {
  if (!has_spanning_tree(g)) {
    throw NoSpanningTree("left zero eigenvector requires a spanning tree");
  }
  const int n = g.size();
  const Eigen::MatrixXd L = laplacian(g);

  // Null space of L^T. With a spanning tree the zero eigenvalue is simple,
  // so the kernel is one-dimensional and carries one sign.
  Eigen::FullPivLU<Eigen::MatrixXd> lu(L.transpose());
  lu.setThreshold(1e-10);
  Eigen::MatrixXd kernel = lu.kernel();
  Eigen::VectorXd p = kernel.col(0);

  const double total = p.sum();
  if (total == 0.0) {
    throw Error("degenerate null space in left eigenvector computation");
  }
  p /= total;
  for (int i = 0; i < n; ++i) {
    if (p[i] < 0.0 && p[i] > -1e-9) p[i] = 0.0;
  }
  const double renorm = p.sum();
  p /= renorm;

  const double residual = (p.transpose() * L).cwiseAbs().maxCoeff();
  if (!(residual < 1e-10)) {
    throw Error("left zero eigenvector residual too large");
  }
  return p;
}

bool is_r_reachable(const DiGraph& g, const std::vector<int>& subset, int r) {
  if (subset.empty()) throw EmptySubset("r-reachability of the empty set");
  if (r < 0) throw ConfigError("r must be nonnegative");
  const int n = g.size();
  std::vector<bool> in_subset(n, false);
  for (int v : subset) {
    check_node(g, v, "subset node");
    in_subset[v] = true;
  }
  for (int v : subset) {
    int outside = 0;
    for (int j = 0; j < n; ++j) {
      if (g.weights()(v, j) > 0.0 && !in_subset[j]) ++outside;
    }
    if (outside >= r) return true;
  }
  return false;
}

bool is_r_robust(const DiGraph& g, int r, int enumeration_cap) {
  const int n = g.size();
  if (n < 2) throw ConfigError("r-robustness needs at least two nodes");
  if (n > enumeration_cap) {
    throw TooLarge("r-robustness enumeration capped at n = " +
                   std::to_string(enumeration_cap));
  }
  // Assign each node to S1, S2, or neither; 3^n assignments cover every
  // ordered pair of disjoint subsets.
  long long total = 1;
  for (int i = 0; i < n; ++i) total *= 3;
  std::vector<int> assign(n, 0);
  for (long long code = 0; code < total; ++code) {
    long long c = code;
    bool any1 = false, any2 = false;
    for (int i = 0; i < n; ++i) {
      assign[i] = static_cast<int>(c % 3);
      c /= 3;
      any1 |= assign[i] == 1;
      any2 |= assign[i] == 2;
    }
    if (!any1 || !any2) continue;
    std::vector<int> s1, s2;
    for (int i = 0; i < n; ++i) {
      if (assign[i] == 1) s1.push_back(i);
      if (assign[i] == 2) s2.push_back(i);
    }
    if (!is_r_reachable(g, s1, r) && !is_r_reachable(g, s2, r)) return false;
  }
  return true;
}

int laplacian_zero_multiplicity(const DiGraph& g) {
  const Eigen::MatrixXd L = laplacian(g);
  const double tol = 1e-8 * (1.0 + L.norm());
  Eigen::EigenSolver<Eigen::MatrixXd> es(L, /*computeEigenvectors=*/false);
  int count = 0;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    if (std::abs(es.eigenvalues()[k]) < tol) ++count;
  }
  return count;
}

DiGraph induced_subgraph(const DiGraph& g, const std::vector<int>& nodes) {
  if (nodes.empty()) throw EmptySubset("induced subgraph of nothing");
  std::vector<int> inverse(g.size(), -1);
  for (int k = 0; k < static_cast<int>(nodes.size()); ++k) {
    const int v = nodes[k];
    if (v < 0 || v >= g.size()) throw ConfigError("subgraph node out of range");
    if (inverse[v] != -1) throw ConfigError("subgraph node repeated");
    inverse[v] = k;
  }
  std::vector<Edge> edges;
  for (int head = 0; head < g.size(); ++head) {
    if (inverse[head] == -1) continue;
    for (const int tail : g.in_neighbors(head)) {
      if (inverse[tail] == -1) continue;
      edges.push_back({inverse[tail], inverse[head], g.weight(head, tail)});
    }
  }
  return DiGraph(static_cast<int>(nodes.size()), edges);
}

DiGraph canonical_five_agent_graph() {
  // 0-indexed edges of the 1-indexed list 1->2, 2->3, 3->4, 3->5, 5->4.
  return DiGraph(5, {{0, 1, 1.0},
                     {1, 2, 1.0},
                     {2, 3, 1.0},
                     {2, 4, 1.0},
                     {4, 3, 1.0}});
}

}  // namespace rescon
