#pragma once

// Shared fixtures for the unit and acceptance suites.

#include <cstdint>
#include <vector>

#include "froglab/tree_model.hpp"

namespace froglab::testutil {

// Every vertex (root included) has exactly `arity` children.
inline WeightedTree k_ary_tree(unsigned arity, unsigned depth, double resistance = 1.0) {
  WeightedTree::Builder b;
  b.add_root(0);
  std::vector<std::pair<VertexIndex, unsigned>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [v, d] = stack.back();
    stack.pop_back();
    if (d >= depth) continue;
    for (unsigned i = 0; i < arity; ++i)
      stack.push_back({b.add_child(v, b.nodes.size(), resistance), d + 1});
  }
  b.mark_cutoff_leaves_at_max_depth();
  return b.finish();
}

inline WeightedTree regular_tree(unsigned d, unsigned depth, double r = 1.0) {
  TreeSpec spec;
  spec.kind = TreeSpec::Kind::Regular;
  spec.degree = d;
  spec.depth = depth;
  spec.resistance = ResistanceRule::constant(r);
  return build_tree(spec);
}

// Binary tree except that the two subtrees hang off the root via resistances
// r_left and r_right; used wherever an asymmetric weighted junction is needed.
inline WeightedTree two_branch_binary(double r_left, double r_right, unsigned depth) {
  WeightedTree::Builder b;
  b.add_root(0);
  std::vector<std::pair<VertexIndex, unsigned>> stack;
  stack.push_back({b.add_child(0, 1, r_left), 1});
  stack.push_back({b.add_child(0, 2, r_right), 1});
  while (!stack.empty()) {
    auto [v, d] = stack.back();
    stack.pop_back();
    if (d >= depth) continue;
    for (unsigned i = 0; i < 2; ++i)
      stack.push_back({b.add_child(v, b.nodes.size(), 1.0), d + 1});
  }
  b.mark_cutoff_leaves_at_max_depth();
  return b.finish();
}

// Mixed-degree, mixed-resistance fixture: deterministic, passes the bounded
// class check, depth-uniform enough nowhere (exercises the general code
// paths).
inline WeightedTree weighted_fixture(unsigned depth, std::uint64_t seed = 12345) {
  return random_bounded_tree(3, 4, 2, depth, seed);
}

inline std::vector<std::uint32_t> level_sizes(const WeightedTree& t) {
  std::vector<std::uint32_t> sizes(t.depth_cutoff() + 1, 0);
  for (std::uint32_t v = 0; v < t.vertex_count(); ++v) sizes[t.depth(v)]++;
  return sizes;
}

}  // namespace froglab::testutil
