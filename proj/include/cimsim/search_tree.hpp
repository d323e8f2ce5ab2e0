#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cimsim/errors.hpp"
#include "cimsim/rng.hpp"

namespace cimsim {

/// Probability mass over output codes 0..2^b-1.
struct MavDistribution {
  std::vector<double> probabilities;

  std::uint32_t bits() const {
    std::uint32_t b = 0;
    while ((1u << b) < probabilities.size()) ++b;
    return b;
  }

  void validate() const {
    if (probabilities.empty() || (probabilities.size() & (probabilities.size() - 1)))
      throw ShapeError("distribution: length must be a power of two");
    double s = 0.0;
    for (double p : probabilities) {
      if (p < 0.0) throw RangeError("distribution: negative mass");
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-9)
      throw RangeError("distribution: mass sums to " + std::to_string(s));
  }
};

/// Code distribution of a column-count sum k ~ Binomial(N, p_discharge),
/// with all mass at or above the top code accumulated there to mirror the
/// controller's saturation rule.
inline MavDistribution mav_distribution_binomial(std::uint32_t n_cols,
                                                 double p_discharge,
                                                 std::uint32_t bits) {
  if (p_discharge < 0.0 || p_discharge > 1.0)
    throw RangeError("binomial: p_discharge must be in [0,1]");
  const std::uint32_t n_codes = 1u << bits;
  if (n_codes > n_cols)
    throw RangeError("binomial: 2^bits exceeds column count");

  // pmf by the stable log-gamma route; n_cols is small so this is plenty.
  std::vector<double> pmf(n_cols + 1);
  for (std::uint32_t k = 0; k <= n_cols; ++k) {
    if (p_discharge == 0.0) { pmf[k] = (k == 0) ? 1.0 : 0.0; continue; }
    if (p_discharge == 1.0) { pmf[k] = (k == n_cols) ? 1.0 : 0.0; continue; }
    const double log_c = std::lgamma(n_cols + 1.0) - std::lgamma(k + 1.0) -
                         std::lgamma(n_cols - k + 1.0);
    pmf[k] = std::exp(log_c + k * std::log(p_discharge) +
                      (n_cols - k) * std::log(1.0 - p_discharge));
  }

  MavDistribution dist;
  dist.probabilities.assign(n_codes, 0.0);
  for (std::uint32_t k = 0; k <= n_cols; ++k) {
    const std::uint32_t code = k < n_codes - 1 ? k : n_codes - 1;
    dist.probabilities[code] += pmf[k];
  }
  // renormalize away pmf rounding dust
  double s = 0.0;
  for (double p : dist.probabilities) s += p;
  for (double& p : dist.probabilities) p /= s;
  return dist;
}

inline MavDistribution mav_distribution_uniform(std::uint32_t bits) {
  MavDistribution dist;
  dist.probabilities.assign(1u << bits, 1.0 / static_cast<double>(1u << bits));
  return dist;
}

/// Laplace-smoothed relative frequencies of observed codes (+1 per bin), so
/// unseen codes keep nonzero mass and the optimal tree still assigns them a
/// finite, tested depth.
inline MavDistribution empirical_distribution(std::span<const std::uint32_t> samples,
                                              std::uint32_t bits) {
  if (samples.empty()) throw ArgumentError("empirical_distribution: no samples");
  const std::uint32_t n_codes = 1u << bits;
  std::vector<double> count(n_codes, 1.0);
  for (std::uint32_t s : samples) {
    if (s >= n_codes)
      throw RangeError("empirical_distribution: code " + std::to_string(s) +
                       " out of range");
    count[s] += 1.0;
  }
  const double total = static_cast<double>(samples.size()) + n_codes;
  MavDistribution dist;
  dist.probabilities.resize(n_codes);
  for (std::uint32_t c = 0; c < n_codes; ++c)
    dist.probabilities[c] = count[c] / total;
  return dist;
}

/// Alphabetic binary decision tree over codes 0..2^b-1. Internal nodes hold a
/// threshold t; "code < t" descends left. Leaves hold output codes, and an
/// in-order walk of the leaves yields 0..2^b-1 exactly once.
struct SearchTree {
  struct Node {
    std::int32_t threshold = -1;  // >= 0 on internal nodes
    std::int32_t leaf_code = -1;  // >= 0 on leaves
    std::int32_t left = -1;
    std::int32_t right = -1;
    bool is_leaf() const { return leaf_code >= 0; }
  };

  std::vector<Node> nodes;
  std::int32_t root = -1;
  std::uint32_t bits = 0;

  std::uint32_t n_codes() const { return 1u << bits; }

  /// Classic midpoint tree: every leaf at depth b. Equivalent to the plain
  /// successive-approximation search order.
  static SearchTree balanced(std::uint32_t bits) {
    SearchTree t;
    t.bits = bits;
    t.root = t.build_balanced(0, (1u << bits) - 1);
    return t;
  }

  std::uint32_t leaf_depth(std::uint32_t code) const {
    std::int32_t node = root;
    std::uint32_t depth = 0;
    while (node >= 0 && !nodes[node].is_leaf()) {
      const Node& n = nodes[node];
      node = code < static_cast<std::uint32_t>(n.threshold) ? n.left : n.right;
      ++depth;
    }
    if (node < 0 || nodes[node].leaf_code != static_cast<std::int32_t>(code))
      throw StructureError("tree does not resolve code " + std::to_string(code));
    return depth;
  }

  /// Checks the alphabetic property: leaves cover [0, 2^b) in order and each
  /// threshold splits its interval strictly between the subtrees.
  void validate() const {
    if (root < 0 || root >= static_cast<std::int32_t>(nodes.size()))
      throw StructureError("tree: bad root");
    std::uint32_t next = 0;
    check(root, 0, n_codes(), next);
    if (next != n_codes())
      throw StructureError("tree: leaves do not cover the code space");
  }

 private:
  std::int32_t build_balanced(std::uint32_t lo, std::uint32_t hi) {
    if (lo == hi) {
      nodes.push_back(Node{-1, static_cast<std::int32_t>(lo), -1, -1});
      return static_cast<std::int32_t>(nodes.size() - 1);
    }
    const std::uint32_t mid = (lo + hi + 1) / 2;  // first code of the right half
    const std::int32_t l = build_balanced(lo, mid - 1);
    const std::int32_t r = build_balanced(mid, hi);
    nodes.push_back(Node{static_cast<std::int32_t>(mid), -1, l, r});
    return static_cast<std::int32_t>(nodes.size() - 1);
  }

  void check(std::int32_t idx, std::uint32_t lo, std::uint32_t hi,
             std::uint32_t& next) const {
    if (idx < 0 || idx >= static_cast<std::int32_t>(nodes.size()))
      throw StructureError("tree: dangling child");
    const Node& n = nodes[idx];
    if (n.is_leaf()) {
      if (hi - lo != 1 || static_cast<std::uint32_t>(n.leaf_code) != lo)
        throw StructureError("tree: leaf out of alphabetic order");
      if (static_cast<std::uint32_t>(n.leaf_code) != next)
        throw StructureError("tree: leaf sequence broken");
      ++next;
      return;
    }
    const auto t = static_cast<std::uint32_t>(n.threshold);
    if (t <= lo || t >= hi)
      throw StructureError("tree: threshold " + std::to_string(t) +
                           " outside (" + std::to_string(lo) + "," +
                           std::to_string(hi) + ")");
    check(n.left, lo, t, next);
    check(n.right, t, hi, next);
  }
};

/// Exact interval dynamic program for the expected-comparison-optimal
/// alphabetic tree. O(n^3) over n = 2^b codes; ties pick the smaller root
/// threshold so construction is canonical.
inline SearchTree build_optimal_tree(const MavDistribution& dist) {
  dist.validate();
  const std::uint32_t n = static_cast<std::uint32_t>(dist.probabilities.size());

  // prefix[i] = mass of codes < i
  std::vector<double> prefix(n + 1, 0.0);
  for (std::uint32_t i = 0; i < n; ++i)
    prefix[i + 1] = prefix[i] + dist.probabilities[i];
  const auto weight = [&](std::uint32_t i, std::uint32_t j) {
    return prefix[j + 1] - prefix[i];
  };

  // cost[i][j]: optimal expected comparisons restricted to codes i..j,
  // counting one comparison at every internal node along the way.
  std::vector<std::vector<double>> cost(n, std::vector<double>(n, 0.0));
  std::vector<std::vector<std::uint32_t>> split(n, std::vector<std::uint32_t>(n, 0));
  for (std::uint32_t len = 2; len <= n; ++len) {
    for (std::uint32_t i = 0; i + len - 1 < n; ++i) {
      const std::uint32_t j = i + len - 1;
      double best = std::numeric_limits<double>::infinity();
      std::uint32_t best_s = i + 1;
      for (std::uint32_t s = i + 1; s <= j; ++s) {
        const double c = cost[i][s - 1] + cost[s][j];
        if (c < best) {
          best = c;
          best_s = s;
        }
      }
      cost[i][j] = best + weight(i, j);
      split[i][j] = best_s;
    }
  }

  SearchTree tree;
  tree.bits = dist.bits();
  // materialize the split table recursively
  struct Builder {
    const std::vector<std::vector<std::uint32_t>>& split;
    SearchTree& tree;
    std::int32_t run(std::uint32_t i, std::uint32_t j) {
      if (i == j) {
        tree.nodes.push_back({-1, static_cast<std::int32_t>(i), -1, -1});
        return static_cast<std::int32_t>(tree.nodes.size() - 1);
      }
      const std::uint32_t s = split[i][j];
      const std::int32_t l = run(i, s - 1);
      const std::int32_t r = run(s, j);
      tree.nodes.push_back({static_cast<std::int32_t>(s), -1, l, r});
      return static_cast<std::int32_t>(tree.nodes.size() - 1);
    }
  } builder{split, tree};
  tree.root = builder.run(0, n - 1);
  return tree;
}

/// Average comparisons to resolve a code drawn from `dist` with `tree`.
inline double expected_comparisons(const SearchTree& tree,
                                   const MavDistribution& dist) {
  dist.validate();
  if (dist.probabilities.size() != tree.n_codes())
    throw StructureError("expected_comparisons: code-space mismatch");
  tree.validate();
  double e = 0.0;
  for (std::uint32_t c = 0; c < tree.n_codes(); ++c)
    e += dist.probabilities[c] * tree.leaf_depth(c);
  return e;
}

/// Shannon entropy in bits; lower bound on any decision tree's expected depth.
inline double distribution_entropy_bits(const MavDistribution& dist) {
  double h = 0.0;
  for (double p : dist.probabilities)
    if (p > 0.0) h -= p * std::log2(p);
  return h;
}

// ---------------------------------------------------------------------------
// Plain-text tree serialization.
//
//   tree   := node
//   node   := leaf-code | "(" threshold " " node " " node ")"
//
// Canonical form uses single spaces, so serialize/parse round-trips
// byte-exactly.

inline std::string serialize_tree(const SearchTree& tree) {
  tree.validate();
  std::string out;
  const auto walk = [&](auto&& self, std::int32_t idx) -> void {
    const SearchTree::Node& n = tree.nodes[idx];
    if (n.is_leaf()) {
      out += std::to_string(n.leaf_code);
      return;
    }
    out += '(';
    out += std::to_string(n.threshold);
    out += ' ';
    self(self, n.left);
    out += ' ';
    self(self, n.right);
    out += ')';
  };
  walk(walk, tree.root);
  return out;
}

namespace detail {

inline void skip_ws(std::string_view s, std::size_t& pos) {
  while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\n' || s[pos] == '\t' ||
                            s[pos] == '\r'))
    ++pos;
}

inline std::int32_t parse_tree_int(std::string_view s, std::size_t& pos) {
  std::size_t start = pos;
  while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
  if (pos == start) throw StructureError("tree parse: expected integer");
  return static_cast<std::int32_t>(
      std::stol(std::string(s.substr(start, pos - start))));
}

inline std::int32_t parse_tree_node(std::string_view s, std::size_t& pos,
                                    SearchTree& tree) {
  skip_ws(s, pos);
  if (pos >= s.size()) throw StructureError("tree parse: truncated input");
  if (s[pos] == '(') {
    ++pos;
    const std::int32_t t = parse_tree_int(s, pos);
    const std::int32_t l = parse_tree_node(s, pos, tree);
    const std::int32_t r = parse_tree_node(s, pos, tree);
    skip_ws(s, pos);
    if (pos >= s.size() || s[pos] != ')')
      throw StructureError("tree parse: missing ')'");
    ++pos;
    tree.nodes.push_back({t, -1, l, r});
  } else {
    const std::int32_t code = parse_tree_int(s, pos);
    tree.nodes.push_back({-1, code, -1, -1});
  }
  return static_cast<std::int32_t>(tree.nodes.size() - 1);
}

}  // namespace detail

inline SearchTree parse_tree(std::string_view text) {
  SearchTree tree;
  std::size_t pos = 0;
  tree.root = detail::parse_tree_node(text, pos, tree);
  detail::skip_ws(text, pos);
  if (pos != text.size()) throw StructureError("tree parse: trailing input");
  std::uint32_t leaves = 0;
  for (const auto& n : tree.nodes)
    if (n.is_leaf()) ++leaves;
  std::uint32_t b = 0;
  while ((1u << b) < leaves) ++b;
  if ((1u << b) != leaves)
    throw StructureError("tree parse: leaf count is not a power of two");
  tree.bits = b;
  tree.validate();
  return tree;
}

}  // namespace cimsim
