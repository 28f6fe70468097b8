#pragma once

#include <vector>

#include <Eigen/Dense>

namespace rescon {

/// Directed edge: information flows tail -> head with positive weight,
/// i.e. the head receives the tail's state.
struct Edge {
  int tail = 0;
  int head = 0;
  double weight = 1.0;
};

/// Weighted digraph on n nodes.
///
/// The adjacency matrix is stored with the receiving convention
/// a(i, j) = weight of edge j -> i, so row i lists what node i hears.
/// No self loops; all weights nonnegative, with a(i, j) > 0 exactly when
/// the edge j -> i exists.
class DiGraph {
 public:
  /// Graph with n nodes and no edges.
  explicit DiGraph(int n);

  /// Graph from an explicit edge list (0-indexed nodes).
  DiGraph(int n, const std::vector<Edge>& edges);

  /// Graph from a full adjacency matrix in the receiving convention.
  static DiGraph from_weights(const Eigen::MatrixXd& weights);

  int size() const { return static_cast<int>(weights_.rows()); }
  const Eigen::MatrixXd& weights() const { return weights_; }
  double weight(int head, int tail) const { return weights_(head, tail); }

  /// Nodes j with an edge j -> i, ascending.
  std::vector<int> in_neighbors(int i) const;

  /// Nodes i with an edge j -> i, ascending.
  std::vector<int> out_neighbors(int j) const;

  /// Weighted in-degree of node i.
  double in_degree(int i) const { return weights_.row(i).sum(); }

 private:
  Eigen::MatrixXd weights_;
};

/// Root/non-root split of a digraph Laplacian.
///
/// Permuting roots first block-triangularizes L: the upper-right block is
/// exactly zero because an edge from a non-root into a root would make
/// that non-root a root as well.
struct LaplacianPartition {
  std::vector<int> root_nodes;     // original indices, ascending
  std::vector<int> nonroot_nodes;  // original indices, ascending
  Eigen::MatrixXd L_rr;            // roots x roots
  Eigen::MatrixXd L_r_nr;          // roots x nonroots, identically zero
  Eigen::MatrixXd L_nr_r;          // nonroots x roots
  Eigen::MatrixXd L_nr_nr;         // nonroots x nonroots
};

/// Graph Laplacian L = D - A with D the diagonal of weighted in-degrees.
/// Row sums are zero by construction.
Eigen::MatrixXd laplacian(const DiGraph& g);

/// True iff some node reaches every other node along directed edges.
bool has_spanning_tree(const DiGraph& g);

/// Nodes whose forward-reachable set is the whole vertex set, ascending.
std::vector<int> root_nodes(const DiGraph& g);

/// Splits the Laplacian into root/non-root blocks.
/// Throws NoSpanningTree when the graph has none.
LaplacianPartition root_partition(const DiGraph& g);

/// Left eigenvector p of L for eigenvalue zero, normalized so that
/// sum(p) = 1, entries nonnegative and supported on the root nodes.
/// Throws NoSpanningTree when the graph has none.
Eigen::VectorXd left_zero_eigenvector(const DiGraph& g);

/// True iff some member of subset has at least r in-neighbors outside it.
/// Throws EmptySubset when subset is empty; ConfigError on invalid nodes.
bool is_r_reachable(const DiGraph& g, const std::vector<int>& subset, int r);

/// True iff for every pair of disjoint nonempty node subsets, at least one
/// of the two is r-reachable. Exhaustive enumeration; throws TooLarge when
/// n exceeds enumeration_cap.
bool is_r_robust(const DiGraph& g, int r, int enumeration_cap = 12);

/// Multiplicity of the zero eigenvalue of the Laplacian, counted with a
/// tolerance relative to the matrix norm. A spanning tree exists iff this
/// is exactly one.
int laplacian_zero_multiplicity(const DiGraph& g);

/// Subgraph induced by `nodes` (ascending, deduplicated by the caller);
/// node k of the result is nodes[k]. Throws ConfigError on invalid or
/// repeated nodes, EmptySubset when nodes is empty.
DiGraph induced_subgraph(const DiGraph& g, const std::vector<int>& nodes);

/// The five-node demonstration topology used by the bundled scenarios:
/// edges 1->2, 2->3, 3->4, 3->5, 5->4 (1-indexed), unit weights.
/// Node 1 is the only root; node 5 reaches only node 4.
DiGraph canonical_five_agent_graph();

}  // namespace rescon
