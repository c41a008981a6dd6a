#pragma once

// Weighted rooted trees with ordered children, per-edge resistances and an
// explicit finite-depth boundary. Leaves at the cutoff carry a mode flag:
// ContinuesToInfinity marks a truncation of an infinite tree, TrueLeaf marks
// a genuine end of the tree. Vertices are stored in DFS preorder so that a
// subtree is a contiguous index range.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "froglab/common.hpp"

namespace froglab {

enum class LeafMode : std::uint8_t { ContinuesToInfinity = 0, TrueLeaf = 1 };

class WeightedTree;
namespace testing {
void corrupt_edge_resistance(WeightedTree& tree, VertexIndex child, double value);
}

struct TreeMeta {
  unsigned min_interior_degree = 0;  // over non-leaf vertices (root counts its children)
  unsigned max_interior_degree = 0;
  unsigned min_nonroot_interior_degree = 0;  // continuation profile used for resistance caps
  double max_resistance = 0.0;
  bool all_resistances_integer = true;
};

struct ResistanceRule {
  // Constant value, or a per-edge table cycled over edges in preorder.
  std::vector<double> values{1.0};
  double at(std::uint64_t edge_ordinal) const { return values[edge_ordinal % values.size()]; }
  static ResistanceRule constant(double r) { return ResistanceRule{{r}}; }
  static ResistanceRule cycle(std::vector<double> v) { return ResistanceRule{std::move(v)}; }
};

struct TreeSpec {
  enum class Kind { Regular, Increasing, Joined, FromFile, PipeDecorated };

  Kind kind = Kind::Regular;
  unsigned degree = 3;   // Regular(d) / Joined(d)
  unsigned depth = 1;    // generations to materialize (Joined: per joined subtree)
  std::string path;      // FromFile
  std::shared_ptr<TreeSpec> base;  // PipeDecorated
  unsigned pipe_length = 2;        // PipeDecorated: edges per pipe
  ResistanceRule resistance;
  std::uint64_t vertex_budget = 10'000'000;

  // Grammar: regular(d) | increasing | joined(d) | file(path) | piped(<spec>,len)
  static TreeSpec parse(const std::string& text);
  std::string to_string() const;
};

class WeightedTree {
 public:
  // Construction happens through build_tree / parse_tree / editing helpers.
  std::uint32_t vertex_count() const { return static_cast<std::uint32_t>(parent_.size()); }
  std::uint32_t depth_cutoff() const { return depth_cutoff_; }
  VertexIndex root() const { return 0; }

  VertexIndex parent(VertexIndex v) const { return parent_[v]; }
  double resistance_to_parent(VertexIndex v) const { return resistance_[v]; }
  std::uint32_t depth(VertexIndex v) const { return depth_[v]; }
  std::uint32_t subtree_size(VertexIndex v) const { return subtree_size_[v]; }
  bool in_subtree(VertexIndex v, VertexIndex ancestor) const {
    return v >= ancestor && v < ancestor + subtree_size_[ancestor];
  }

  std::uint32_t child_count(VertexIndex v) const { return child_offset_[v + 1] - child_offset_[v]; }
  VertexIndex child(VertexIndex v, std::uint32_t i) const { return child_list_[child_offset_[v] + i]; }
  const VertexIndex* children_begin(VertexIndex v) const { return child_list_.data() + child_offset_[v]; }
  const VertexIndex* children_end(VertexIndex v) const { return child_list_.data() + child_offset_[v + 1]; }

  bool is_leaf(VertexIndex v) const { return child_count(v) == 0; }
  LeafMode leaf_mode(VertexIndex v) const { return leaf_mode_[v]; }
  bool is_cutoff_leaf(VertexIndex v) const {
    return is_leaf(v) && leaf_mode_[v] == LeafMode::ContinuesToInfinity;
  }
  bool is_true_leaf(VertexIndex v) const { return is_leaf(v) && leaf_mode_[v] == LeafMode::TrueLeaf; }

  // Total graph degree (parent edge plus children).
  std::uint32_t degree(VertexIndex v) const { return child_count(v) + (v == 0 ? 0u : 1u); }

  VertexId external_id(VertexIndex v) const { return ext_id_[v]; }
  std::optional<VertexIndex> find(VertexId id) const;

  const TreeMeta& meta() const { return meta_; }

  // Stable content hash (structure, resistances, leaf modes); used to match
  // reports produced from the same tree.
  std::uint64_t tag() const { return tag_; }

  std::string serialize() const;

  struct Builder;

 private:
  friend struct Builder;
  friend void testing::corrupt_edge_resistance(WeightedTree&, VertexIndex, double);
  std::vector<VertexIndex> parent_;
  std::vector<double> resistance_;  // edge to parent; resistance_[0] unused
  std::vector<std::uint32_t> depth_;
  std::vector<std::uint32_t> subtree_size_;
  std::vector<std::uint32_t> child_offset_;
  std::vector<VertexIndex> child_list_;
  std::vector<LeafMode> leaf_mode_;
  std::vector<VertexId> ext_id_;
  std::unordered_map<VertexId, VertexIndex> id_index_;
  std::uint32_t depth_cutoff_ = 0;
  TreeMeta meta_;
  std::uint64_t tag_ = 0;
};

// Incremental builder in parent-before-child order; finish() normalizes to
// preorder and computes metadata.
struct WeightedTree::Builder {
  VertexIndex add_root(VertexId id);
  VertexIndex add_child(VertexIndex parent, VertexId id, double resistance);
  void set_leaf_mode(VertexIndex v, LeafMode mode);
  void mark_cutoff_leaves_at_max_depth();  // generator convention
  WeightedTree finish(std::uint64_t vertex_budget = 10'000'000);

  struct Node {
    VertexId id;
    VertexIndex parent;
    double resistance;
    std::vector<VertexIndex> children;
    LeafMode mode = LeafMode::TrueLeaf;
    std::uint32_t depth = 0;
  };
  std::vector<Node> nodes;
};

WeightedTree build_tree(const TreeSpec& spec);

// Text format, one directive per line:
//   root <id>
//   edge <parent-id> <child-id> <resistance>
//   leafmode <id> {inf|leaf}
// Leaves default to `leaf` when no leafmode directive is present.
WeightedTree parse_tree(std::istream& in, const std::string& name = "<stream>");
WeightedTree load_tree(const std::string& path);
void save_tree(const WeightedTree& tree, const std::string& path);

// ---- structural analysis ----

struct TreeClassReport {
  bool passed = false;
  unsigned min_degree = 0;      // observed over interior vertices
  unsigned max_degree = 0;
  double max_resistance = 0.0;  // observed; integer-valued when passed
  std::vector<std::string> violations;
};

// Checks the leafless bounded-degree convention used throughout: every
// interior vertex has total degree >= 3 and every edge resistance is an
// integer >= 1. Violations are return values, never exceptions.
TreeClassReport validate_bounded_class(const WeightedTree& tree);

struct BackboneReport {
  std::vector<std::uint8_t> in_backbone;  // by vertex index
  bool backbone_empty = false;
  std::uint64_t max_offbackbone_component = 0;
  std::vector<VertexIndex> witness_component;  // component attaining the max, incl. its backbone anchor
  std::uint64_t max_degree2_run = 0;           // vertices in the longest backbone-degree-2 path
  std::vector<VertexIndex> witness_run;
  std::uint64_t tree_tag = 0;
  // The backbone of an infinite tree is approximated from the finite
  // realization: a vertex is kept iff its subtree reaches a leaf marked
  // ContinuesToInfinity.
  bool finite_proxy = true;
};

BackboneReport compute_backbone(const WeightedTree& tree);

// Both non-amenability conditions with the same constant M.
bool classify_nonamenable(const BackboneReport& report, std::uint64_t M);

// Smallest M for which classify_nonamenable holds; 0 when the backbone is empty.
std::uint64_t certified_L(const BackboneReport& report);

// Replaces every maximal run of degree-2 vertices by a single edge whose
// resistance is the sum over the run (the pipe length on unit-resistance
// input). Rejects trees containing true leaves.
WeightedTree contract_pipes(const WeightedTree& tree);

// ---- editing helpers used to assemble test instances ----

// Hangs a path of `size` unit-resistance vertices (TrueLeaf end) below `at`.
WeightedTree attach_bush(const WeightedTree& tree, VertexId at, unsigned size);
// Subdivides the edge above `child` into `length` unit edges.
WeightedTree splice_pipe(const WeightedTree& tree, VertexId child, unsigned length);
// Random tree with interior degrees in [min_degree, max_degree] and integer
// resistances in [1, max_resistance].
WeightedTree random_bounded_tree(unsigned min_degree, unsigned max_degree, unsigned max_resistance,
                                 unsigned depth, std::uint64_t seed,
                                 std::uint64_t vertex_budget = 10'000'000);

namespace testing {
// Bypasses construction-time validation; used only by the fault-injection
// path of the invariant suite.
void corrupt_edge_resistance(WeightedTree& tree, VertexIndex child, double value);
}  // namespace testing

}  // namespace froglab
