#pragma once

#include <vector>

#include "corrgan/correlation.hpp"

namespace corrgan::canon {

/// d_ij = sqrt(2 (1 - rho_ij)), zero diagonal, entries in [0, 2].
Eigen::MatrixXd correlation_distance(const CorrelationMatrix& m);

/// One agglomeration step. Ids below leaf_count are leaves; merge k creates
/// cluster leaf_count + k.
struct Merge {
  Index left = 0;
  Index right = 0;
  double height = 0.0;
  Index size = 0;
};

struct Dendrogram {
  Index leaf_count = 0;
  std::vector<Merge> merges;
  /// True when an equal-distance choice could not be decided from values and
  /// fell back to leaf indices.
  bool index_tie_break = false;
};

/// Single-linkage agglomeration over a symmetric distance matrix.
///
/// Edges are processed in increasing distance. Among candidate merges at the
/// same distance the cluster pair with the lexicographically smallest sorted
/// member-distance profiles merges first; the rule depends on values only, so
/// relabelling the leaves relabels the dendrogram and nothing else.
Dendrogram single_linkage(const Eigen::MatrixXd& distances);

/// Cophenetic (ultrametric) distance between every pair of leaves.
Eigen::MatrixXd cophenetic_distances(const Dendrogram& tree);

struct LeafOrder {
  Permutation order;
  /// Set when two sibling subtrees were indistinguishable by value and were
  /// ordered by leaf index instead (exchangeable blocks, exact ties).
  bool ambiguous = false;
};

/// Leaf order of the single-linkage dendrogram of m. At every internal node
/// the child with the larger mean correlation to all assets comes first;
/// equal means fall back to the larger sorted internal-correlation multiset.
LeafOrder hierarchical_permutation(const CorrelationMatrix& m);

/// permute(m, hierarchical_permutation(m).order).
CorrelationMatrix canonicalize(const CorrelationMatrix& m);

struct CanonicalForm {
  CorrelationMatrix matrix;
  LeafOrder permutation;
};
CanonicalForm canonicalize_with_order(const CorrelationMatrix& m);

}  // namespace corrgan::canon
