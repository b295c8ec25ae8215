#pragma once
// Non-causal baseline: one CART tree (Gini) per label over predicted concept
// probabilities, and probability-ranked concept explanations.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "causalcbm/common.hpp"
#include "causalcbm/dataset.hpp"
#include "causalcbm/explain.hpp"

namespace causalcbm {

struct TreeHyper {
  int max_depth = 6;
  std::size_t min_samples_leaf = 20;

  void validate() const {
    if (max_depth < 1) throw UsageError("max_depth must be >= 1");
    if (min_samples_leaf < 1) throw UsageError("min_samples_leaf must be >= 1");
  }
};

// Internal nodes send x[feature] <= threshold to the left child.
struct TreeNode {
  int feature = -1;  // -1 for a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double positive_fraction = 0.0;
  std::size_t sample_count = 0;

  bool is_leaf() const noexcept { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // preorder, root at 0

  std::size_t leaf_index(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
      const auto& n = nodes[i];
      i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                         : n.right);
    }
    return i;
  }

  double predict(std::span<const double> x) const { return nodes[leaf_index(x)].positive_fraction; }

  int depth() const { return depth_from(0); }

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  int depth_from(std::size_t i) const {
    if (nodes[i].is_leaf()) return 0;
    return 1 + std::max(depth_from(static_cast<std::size_t>(nodes[i].left)),
                        depth_from(static_cast<std::size_t>(nodes[i].right)));
  }
};

namespace detail {

// Unnormalized weighted Gini: n * (1 - p^2 - (1-p)^2) = 2 * pos * neg / n.
inline double gini_mass(double pos, double n) { return n > 0.0 ? 2.0 * pos * (n - pos) / n : 0.0; }

// Below this (in sample-count units) a split does not count as an improvement.
inline constexpr double kMinGain = 1e-10;

class TreeBuilder {
 public:
  TreeBuilder(const Grid<double>& x, std::span<const std::uint8_t> y, const TreeHyper& h)
      : x_(x), y_(y), hyper_(h), goes_left_(x.rows(), 0) {}

  DecisionTree build() {
    const std::size_t F = x_.cols(), N = x_.rows();
    std::vector<std::vector<std::uint32_t>> sorted(F, std::vector<std::uint32_t>(N));
    for (std::size_t f = 0; f < F; ++f) {
      auto& s = sorted[f];
      std::iota(s.begin(), s.end(), 0u);
      std::sort(s.begin(), s.end(), [&](std::uint32_t a, std::uint32_t b) {
        return x_(a, f) < x_(b, f) || (x_(a, f) == x_(b, f) && a < b);
      });
    }
    grow(std::move(sorted), 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<std::vector<std::uint32_t>> sorted, int depth) {
    const auto& any = sorted[0];
    const std::size_t n = any.size();
    std::size_t pos = 0;
    for (auto i : any) pos += y_[i];

    const int id = static_cast<int>(tree_.nodes.size());
    TreeNode node;
    node.sample_count = n;
    node.positive_fraction = n ? static_cast<double>(pos) / static_cast<double>(n) : 0.0;
    tree_.nodes.push_back(node);

    if (depth >= hyper_.max_depth || pos == 0 || pos == n || n < 2 * hyper_.min_samples_leaf)
      return id;

    const double parent = gini_mass(static_cast<double>(pos), static_cast<double>(n));
    double best_gain = kMinGain;
    int best_f = -1;
    double best_t = 0.0;
    for (std::size_t f = 0; f < sorted.size(); ++f) {
      const auto& s = sorted[f];
      std::size_t left_pos = 0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_pos += y_[s[i]];
        const double v = x_(s[i], f), v_next = x_(s[i + 1], f);
        if (!(v < v_next)) continue;
        const std::size_t nl = i + 1, nr = n - nl;
        if (nl < hyper_.min_samples_leaf || nr < hyper_.min_samples_leaf) continue;
        const double child = gini_mass(double(left_pos), double(nl)) +
                             gini_mass(double(pos - left_pos), double(nr));
        const double gain = parent - child;
        if (gain > best_gain) {
          best_gain = gain;
          best_f = static_cast<int>(f);
          double t = 0.5 * (v + v_next);
          if (!(t < v_next)) t = v;
          best_t = t;
        }
      }
    }
    if (best_f < 0) return id;

    const auto bf = static_cast<std::size_t>(best_f);
    for (auto i : any) goes_left_[i] = x_(i, bf) <= best_t;
    std::vector<std::vector<std::uint32_t>> left(sorted.size()), right(sorted.size());
    for (std::size_t f = 0; f < sorted.size(); ++f) {
      for (auto i : sorted[f]) (goes_left_[i] ? left[f] : right[f]).push_back(i);
    }
    sorted.clear();
    sorted.shrink_to_fit();

    tree_.nodes[static_cast<std::size_t>(id)].feature = best_f;
    tree_.nodes[static_cast<std::size_t>(id)].threshold = best_t;
    const int l = grow(std::move(left), depth + 1);
    tree_.nodes[static_cast<std::size_t>(id)].left = l;
    const int r = grow(std::move(right), depth + 1);
    tree_.nodes[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  const Grid<double>& x_;
  std::span<const std::uint8_t> y_;
  TreeHyper hyper_;
  std::vector<std::uint8_t> goes_left_;
  DecisionTree tree_;
};

}  // namespace detail

// Greedy Gini CART. Candidate thresholds are midpoints of adjacent distinct
// feature values; ties go to the lowest feature index, then the lowest threshold.
inline DecisionTree fit_tree(const Grid<double>& features, std::span<const std::uint8_t> labels,
                             const TreeHyper& hyper) {
  hyper.validate();
  if (features.rows() == 0) throw UsageError("fit_tree on an empty dataset");
  if (features.rows() != labels.size()) throw UsageError("fit_tree: features/labels mismatch");
  if (features.cols() == 0) throw UsageError("fit_tree: no features");
  return detail::TreeBuilder(features, labels, hyper).build();
}

struct TreeBaseline {
  Vocabulary vocab;
  TreeHyper hyper;
  std::vector<DecisionTree> trees;  // one per label: pathologies then NRF
};

inline Grid<double> concept_prob_matrix(const Dataset& d) {
  Grid<double> x(d.size(), d.vocab.num_concepts());
  for (std::size_t i = 0; i < d.size(); ++i)
    std::copy(d.cases[i].concept_prob.begin(), d.cases[i].concept_prob.end(), x.row(i).begin());
  return x;
}

inline TreeBaseline tree_fit(const Dataset& d, const TreeHyper& hyper) {
  if (d.empty()) throw UsageError("tree_fit on an empty dataset");
  hyper.validate();
  TreeBaseline b{d.vocab, hyper, {}};
  const auto x = concept_prob_matrix(d);
  std::vector<std::uint8_t> y(d.size());
  for (std::size_t label = 0; label < d.vocab.num_labels(); ++label) {
    for (std::size_t i = 0; i < d.size(); ++i) y[i] = d.cases[i].labels[label];
    b.trees.push_back(fit_tree(x, y, hyper));
  }
  return b;
}

inline std::vector<double> tree_predict(const TreeBaseline& b, std::span<const double> p) {
  if (p.size() != b.vocab.num_concepts())
    throw UsageError("tree_predict: expected " + std::to_string(b.vocab.num_concepts()) +
                     " concept probabilities");
  std::vector<double> out;
  out.reserve(b.trees.size());
  for (const auto& t : b.trees) out.push_back(t.predict(p));
  return out;
}

// Concepts ranked by predicted probability, index order among ties.
inline std::vector<std::size_t> baseline_explanation(std::span<const double> p, std::size_t k) {
  if (k < 1) throw UsageError("baseline explanation needs k >= 1");
  auto order = rank_descending(p);
  order.resize(std::min(k, order.size()));
  return order;
}

}  // namespace causalcbm
