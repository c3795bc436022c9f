#include "corrgan/canonicalize.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "corrgan/errors.hpp"

namespace corrgan::canon {
namespace {

using Profile = std::vector<double>;

struct Edge {
  double distance;
  Index i;
  Index j;
};

// Sum of values in sorted order, so that the result does not depend on the
// order in which the values happen to be stored.
double ordered_sum(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return std::accumulate(values.begin(), values.end(), 0.0);
}

class Agglomeration {
 public:
  explicit Agglomeration(const Eigen::MatrixXd& d) : d_(d), n_(d.rows()) {
    cluster_of_.resize(static_cast<std::size_t>(n_));
    std::iota(cluster_of_.begin(), cluster_of_.end(), Index{0});
    members_.resize(static_cast<std::size_t>(n_));
    for (Index i = 0; i < n_; ++i) members_[static_cast<std::size_t>(i)] = {i};
    tree_.leaf_count = n_;
  }

  Dendrogram run() {
    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(n_ * (n_ - 1) / 2));
    for (Index i = 0; i < n_; ++i) {
      for (Index j = i + 1; j < n_; ++j) edges.push_back({d_(i, j), i, j});
    }
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) { return a.distance < b.distance; });

    std::size_t start = 0;
    while (start < edges.size() && static_cast<Index>(tree_.merges.size()) < n_ - 1) {
      std::size_t stop = start;
      while (stop < edges.size() && edges[stop].distance == edges[start].distance) ++stop;
      merge_group(std::span<const Edge>(edges.data() + start, stop - start));
      start = stop;
    }
    return std::move(tree_);
  }

 private:
  void merge_group(std::span<const Edge> group) {
    const double height = group.front().distance;
    for (;;) {
      std::vector<std::pair<Index, Index>> candidates;
      for (const Edge& e : group) {
        Index a = cluster_of_[static_cast<std::size_t>(e.i)];
        Index b = cluster_of_[static_cast<std::size_t>(e.j)];
        if (a == b) continue;
        if (a > b) std::swap(a, b);
        candidates.emplace_back(a, b);
      }
      if (candidates.empty()) return;
      std::sort(candidates.begin(), candidates.end());
      candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
      const auto [a, b] = candidates.size() == 1 ? candidates.front() : pick(candidates);
      merge(a, b, height);
    }
  }

  const Profile& leaf_profile(Index leaf) {
    if (leaf_profiles_.empty()) {
      leaf_profiles_.resize(static_cast<std::size_t>(n_));
      for (Index i = 0; i < n_; ++i) {
        Profile p;
        p.reserve(static_cast<std::size_t>(n_));
        for (Index j = 0; j < n_; ++j) p.push_back(d_(i, j));
        std::sort(p.begin(), p.end());
        leaf_profiles_[static_cast<std::size_t>(i)] = std::move(p);
      }
    }
    return leaf_profiles_[static_cast<std::size_t>(leaf)];
  }

  std::vector<Profile> cluster_profile(Index cluster) {
    std::vector<Profile> out;
    for (const Index leaf : members_[static_cast<std::size_t>(cluster)]) out.push_back(leaf_profile(leaf));
    std::sort(out.begin(), out.end());
    return out;
  }

  Index min_leaf(Index cluster) const {
    const auto& m = members_[static_cast<std::size_t>(cluster)];
    return *std::min_element(m.begin(), m.end());
  }

  std::pair<Index, Index> pick(const std::vector<std::pair<Index, Index>>& candidates) {
    using Key = std::pair<std::vector<Profile>, std::vector<Profile>>;
    std::vector<Key> keys;
    keys.reserve(candidates.size());
    for (const auto& [a, b] : candidates) {
      auto pa = cluster_profile(a);
      auto pb = cluster_profile(b);
      if (pb < pa) std::swap(pa, pb);
      keys.emplace_back(std::move(pa), std::move(pb));
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < keys.size(); ++k) {
      if (keys[k] < keys[best]) best = k;
    }
    std::vector<std::size_t> tied;
    for (std::size_t k = 0; k < keys.size(); ++k) {
      if (!(keys[best] < keys[k])) tied.push_back(k);
    }
    if (tied.size() > 1) {
      tree_.index_tie_break = true;
      const auto leaf_key = [&](std::size_t c) {
        const Index x = min_leaf(candidates[c].first);
        const Index y = min_leaf(candidates[c].second);
        return std::make_pair(std::min(x, y), std::max(x, y));
      };
      best = *std::min_element(tied.begin(), tied.end(),
                               [&](std::size_t x, std::size_t y) { return leaf_key(x) < leaf_key(y); });
    }
    return candidates[best];
  }

  void merge(Index a, Index b, double height) {
    const Index id = n_ + static_cast<Index>(tree_.merges.size());
    auto& ma = members_[static_cast<std::size_t>(a)];
    auto& mb = members_[static_cast<std::size_t>(b)];
    std::vector<Index> joined;
    joined.reserve(ma.size() + mb.size());
    joined.insert(joined.end(), ma.begin(), ma.end());
    joined.insert(joined.end(), mb.begin(), mb.end());
    for (const Index leaf : joined) cluster_of_[static_cast<std::size_t>(leaf)] = id;
    tree_.merges.push_back({a, b, height, static_cast<Index>(joined.size())});
    members_.push_back(std::move(joined));
  }

  const Eigen::MatrixXd& d_;
  Index n_;
  std::vector<Index> cluster_of_;
  std::vector<std::vector<Index>> members_;
  std::vector<Profile> leaf_profiles_;
  Dendrogram tree_;
};

std::vector<std::vector<Index>> subtree_leaves(const Dendrogram& tree) {
  const Index n = tree.leaf_count;
  std::vector<std::vector<Index>> leaves(static_cast<std::size_t>(n) + tree.merges.size());
  for (Index i = 0; i < n; ++i) leaves[static_cast<std::size_t>(i)] = {i};
  for (std::size_t k = 0; k < tree.merges.size(); ++k) {
    auto& out = leaves[static_cast<std::size_t>(n) + k];
    const auto& l = leaves[static_cast<std::size_t>(tree.merges[k].left)];
    const auto& r = leaves[static_cast<std::size_t>(tree.merges[k].right)];
    out.insert(out.end(), l.begin(), l.end());
    out.insert(out.end(), r.begin(), r.end());
  }
  return leaves;
}

}  // namespace

Eigen::MatrixXd correlation_distance(const CorrelationMatrix& m) {
  const Index n = m.n();
  Eigen::MatrixXd d(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      d(i, j) = i == j ? 0.0 : std::sqrt(2.0 * std::max(0.0, 1.0 - m(i, j)));
    }
  }
  return d;
}

Dendrogram single_linkage(const Eigen::MatrixXd& distances) {
  if (distances.rows() != distances.cols() || distances.rows() == 0) {
    throw StructuralError("single_linkage: distance matrix must be square and non-empty");
  }
  if (!distances.allFinite()) throw StructuralError("single_linkage: non-finite distance");
  return Agglomeration(distances).run();
}

Eigen::MatrixXd cophenetic_distances(const Dendrogram& tree) {
  const Index n = tree.leaf_count;
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
  const auto leaves = subtree_leaves(tree);
  for (const Merge& m : tree.merges) {
    for (const Index i : leaves[static_cast<std::size_t>(m.left)]) {
      for (const Index j : leaves[static_cast<std::size_t>(m.right)]) c(i, j) = c(j, i) = m.height;
    }
  }
  return c;
}

LeafOrder hierarchical_permutation(const CorrelationMatrix& m) {
  const Index n = m.n();
  const Dendrogram tree = single_linkage(correlation_distance(m));
  const auto leaves = subtree_leaves(tree);

  std::vector<double> leaf_score(static_cast<std::size_t>(n), 0.0);
  if (n > 1) {
    for (Index i = 0; i < n; ++i) {
      std::vector<double> row;
      for (Index j = 0; j < n; ++j) {
        if (j != i) row.push_back(m(i, j));
      }
      leaf_score[static_cast<std::size_t>(i)] = ordered_sum(std::move(row)) / static_cast<double>(n - 1);
    }
  }
  const auto node_score = [&](Index node) {
    std::vector<double> scores;
    for (const Index leaf : leaves[static_cast<std::size_t>(node)]) scores.push_back(leaf_score[static_cast<std::size_t>(leaf)]);
    const double size = static_cast<double>(scores.size());
    return ordered_sum(std::move(scores)) / size;
  };
  const auto internal_multiset = [&](Index node) {
    const auto& ls = leaves[static_cast<std::size_t>(node)];
    std::vector<double> values;
    for (std::size_t a = 0; a < ls.size(); ++a) {
      for (std::size_t b = a + 1; b < ls.size(); ++b) values.push_back(m(ls[a], ls[b]));
    }
    std::sort(values.begin(), values.end());
    return values;
  };
  const auto min_leaf = [&](Index node) {
    const auto& ls = leaves[static_cast<std::size_t>(node)];
    return *std::min_element(ls.begin(), ls.end());
  };

  LeafOrder result;
  result.order.reserve(static_cast<std::size_t>(n));
  std::function<void(Index)> emit = [&](Index node) {
    if (node < n) {
      result.order.push_back(node);
      return;
    }
    const Merge& mg = tree.merges[static_cast<std::size_t>(node - n)];
    Index first = mg.left;
    Index second = mg.right;
    const double s_left = node_score(mg.left);
    const double s_right = node_score(mg.right);
    bool swap = false;
    if (s_left != s_right) {
      swap = s_right > s_left;
    } else {
      const auto il = internal_multiset(mg.left);
      const auto ir = internal_multiset(mg.right);
      if (il != ir) {
        swap = il < ir;
      } else {
        result.ambiguous = true;
        swap = min_leaf(mg.right) < min_leaf(mg.left);
      }
    }
    if (swap) std::swap(first, second);
    emit(first);
    emit(second);
  };
  emit(n + static_cast<Index>(tree.merges.size()) - 1);
  if (tree.index_tie_break) result.ambiguous = true;
  return result;
}

CanonicalForm canonicalize_with_order(const CorrelationMatrix& m) {
  LeafOrder order = hierarchical_permutation(m);
  CorrelationMatrix r = permute(m, order.order);
  return {std::move(r), std::move(order)};
}

CorrelationMatrix canonicalize(const CorrelationMatrix& m) { return canonicalize_with_order(m).matrix; }

}  // namespace corrgan::canon
