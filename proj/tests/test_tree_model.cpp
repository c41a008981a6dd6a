#include <sstream>

#include "doctest.h"
#include "froglab/tree_model.hpp"
#include "test_util.hpp"

using namespace froglab;
using testutil::k_ary_tree;
using testutil::level_sizes;
using testutil::regular_tree;

TEST_SUITE_BEGIN("tree");

TEST_CASE("regular generator: root has d children, inner vertices d-1") {
  WeightedTree t = regular_tree(3, 2);
  CHECK(t.vertex_count() == 10);  // 1 + 3 + 6
  CHECK(t.child_count(t.root()) == 3);
  for (std::uint32_t v = 1; v < t.vertex_count(); ++v)
    if (!t.is_leaf(v)) CHECK(t.child_count(v) == 2);
  auto sizes = level_sizes(t);
  CHECK(sizes == std::vector<std::uint32_t>{1, 3, 6});
  for (std::uint32_t v = 0; v < t.vertex_count(); ++v)
    if (t.is_leaf(v)) CHECK(t.is_cutoff_leaf(v));
}

TEST_CASE("increasing generator: vertices at depth n have n+2 children") {
  WeightedTree t = build_tree(TreeSpec::parse("increasing"));  // depth defaults to 1
  TreeSpec spec = TreeSpec::parse("increasing");
  spec.depth = 3;
  t = build_tree(spec);
  // Independent count: level k has prod_{j<k} (j+2) vertices.
  std::vector<std::uint32_t> expected{1};
  for (unsigned k = 1; k <= 3; ++k) expected.push_back(expected.back() * (k + 1));
  CHECK(level_sizes(t) == expected);
  CHECK(expected == std::vector<std::uint32_t>{1, 2, 6, 24});
}

TEST_CASE("joined generator: binary and d-ary subtrees under a fresh root") {
  TreeSpec spec = TreeSpec::parse("joined(4)");
  spec.depth = 2;
  WeightedTree t = build_tree(spec);
  CHECK(t.child_count(t.root()) == 2);
  // Level sizes counted per subtree level: 2^k + 4^k.
  auto sizes = level_sizes(t);
  REQUIRE(sizes.size() == 4);
  CHECK(sizes[1] == 2);
  CHECK(sizes[2] == 2 + 4);
  CHECK(sizes[3] == 4 + 16);
}

TEST_CASE("generator guards") {
  CHECK_THROWS_AS(build_tree(TreeSpec::parse("regular(1)")), Error);
  TreeSpec spec = TreeSpec::parse("increasing");
  spec.depth = 12;
  spec.vertex_budget = 100000;
  CHECK_THROWS_AS(build_tree(spec), Error);  // factorial level growth
  try {
    build_tree(spec);
  } catch (const Error& e) {
    CHECK(e.code() == Status::BudgetExceeded);
  }
}

TEST_CASE("bounded-class validation") {
  SUBCASE("regular(3) with unit resistances is tight at (3,3,1)") {
    TreeClassReport rep = validate_bounded_class(regular_tree(3, 4));
    CHECK(rep.passed);
    CHECK(rep.min_degree == 3);
    CHECK(rep.max_degree == 3);
    CHECK(rep.max_resistance == 1.0);
  }
  SUBCASE("non-integer resistance is a violation, not an exception") {
    WeightedTree t = regular_tree(3, 4);
    testing::corrupt_edge_resistance(t, 3, 2.5);
    TreeClassReport rep = validate_bounded_class(t);
    CHECK_FALSE(rep.passed);
    bool mentioned = false;
    for (const auto& v : rep.violations)
      if (v.find("non-integer resistance") != std::string::npos) mentioned = true;
    CHECK(mentioned);
  }
  SUBCASE("increasing tree reports monotone degree growth") {
    TreeSpec spec = TreeSpec::parse("increasing");
    spec.depth = 5;
    TreeClassReport rep = validate_bounded_class(build_tree(spec));
    CHECK_FALSE(rep.passed);
    bool growth = false;
    for (const auto& v : rep.violations)
      if (v.find("unbounded degree growth") != std::string::npos) growth = true;
    CHECK(growth);
    // Depth-4 vertices have 6 children plus the parent edge.
    CHECK(rep.max_degree == 7);
    CHECK(rep.min_degree == 2);  // the root has two children
  }
}

TEST_CASE("backbone extraction") {
  SUBCASE("fully infinite-marked regular tree") {
    BackboneReport rep = compute_backbone(regular_tree(3, 4));
    CHECK_FALSE(rep.backbone_empty);
    for (std::uint32_t v = 0; v < rep.in_backbone.size(); ++v) CHECK(rep.in_backbone[v] == 1);
    CHECK(rep.max_offbackbone_component == 1);
    CHECK(rep.max_degree2_run == 0);
  }
  SUBCASE("finite bush is off the backbone; component includes its anchor") {
    WeightedTree t = attach_bush(k_ary_tree(2, 6), 3, 5);
    BackboneReport rep = compute_backbone(t);
    CHECK(rep.max_offbackbone_component == 6);  // bush plus the anchor vertex
    auto anchor = t.find(3);
    REQUIRE(anchor);
    CHECK(rep.in_backbone[*anchor] == 1);
    std::uint64_t off = 0;
    for (std::uint32_t v = 0; v < t.vertex_count(); ++v)
      if (!rep.in_backbone[v]) ++off;
    CHECK(off == 5);
  }
  SUBCASE("spliced pipe produces a degree-2 run") {
    WeightedTree t = splice_pipe(k_ary_tree(2, 6), 3, 5);  // 4 intermediate vertices
    BackboneReport rep = compute_backbone(t);
    CHECK(rep.max_degree2_run == 4);
    CHECK(rep.witness_run.size() == 4);
  }
  SUBCASE("all true leaves: empty backbone reported explicitly") {
    WeightedTree::Builder b;
    b.add_root(0);
    b.add_child(0, 1, 1.0);
    b.add_child(0, 2, 1.0);
    WeightedTree t = b.finish();  // leaves default to TrueLeaf
    BackboneReport rep = compute_backbone(t);
    CHECK(rep.backbone_empty);
    CHECK(rep.max_offbackbone_component == t.vertex_count());
  }
}

TEST_CASE("non-amenability classification") {
  BackboneReport reg = compute_backbone(regular_tree(3, 4));
  CHECK(classify_nonamenable(reg, 1));
  WeightedTree bush = attach_bush(k_ary_tree(2, 6), 3, 5);
  BackboneReport rep = compute_backbone(bush);
  CHECK_FALSE(classify_nonamenable(rep, 5));  // component of size 6
  CHECK(classify_nonamenable(rep, 6));
  CHECK(certified_L(rep) == 6);
  SUBCASE("a degree-2 run of length M fails at every M' <= M") {
    WeightedTree t = splice_pipe(k_ary_tree(2, 6), 3, 4);  // run of 3
    BackboneReport r = compute_backbone(t);
    REQUIRE(r.max_degree2_run == 3);
    for (std::uint64_t M = 1; M <= 3; ++M) CHECK_FALSE(classify_nonamenable(r, M));
    CHECK(classify_nonamenable(r, 4));
  }
}

TEST_CASE("pipe contraction") {
  SUBCASE("pipe of three intermediate vertices becomes one edge of resistance 4") {
    WeightedTree t = splice_pipe(regular_tree(3, 3), 4, 4);  // 3 intermediates, 4 edges
    WeightedTree c = contract_pipes(t);
    CHECK(c.vertex_count() == regular_tree(3, 3).vertex_count());
    auto child = c.find(4);
    REQUIRE(child);
    CHECK(c.resistance_to_parent(*child) == 4.0);
  }
  SUBCASE("tree without degree-2 vertices is unchanged") {
    WeightedTree t = regular_tree(3, 4);
    WeightedTree c = contract_pipes(t);
    CHECK(c.serialize() == t.serialize());
  }
  SUBCASE("uniformly subdivided binary backbone becomes binary with resistance 2") {
    TreeSpec spec = TreeSpec::parse("piped(regular(3),2)");
    spec.depth = 4;
    WeightedTree c = contract_pipes(build_tree(spec));
    CHECK(c.vertex_count() == regular_tree(3, 4).vertex_count());
    for (std::uint32_t v = 1; v < c.vertex_count(); ++v) CHECK(c.resistance_to_parent(v) == 2.0);
  }
  SUBCASE("true leaves are rejected") {
    WeightedTree t = attach_bush(regular_tree(3, 3), 2, 2);
    CHECK_THROWS_AS(contract_pipes(t), Error);
  }
  SUBCASE("resistance sums between branch points are preserved") {
    WeightedTree t = splice_pipe(splice_pipe(testutil::weighted_fixture(4, 7), 2, 3), 5, 2);
    WeightedTree c = contract_pipes(t);
    // Every branch-point-to-branch-point distance agrees; spot check by id.
    for (std::uint32_t v = 1; v < c.vertex_count(); ++v) {
      const VertexId id = c.external_id(v);
      const VertexId pid = c.external_id(c.parent(v));
      // Walk the original tree upward from id to pid summing resistances.
      auto ov = t.find(id);
      REQUIRE(ov);
      double sum = 0.0;
      VertexIndex x = *ov;
      while (t.external_id(x) != pid) {
        sum += t.resistance_to_parent(x);
        x = t.parent(x);
      }
      CHECK(c.resistance_to_parent(v) == doctest::Approx(sum).epsilon(1e-12));
    }
  }
}

TEST_CASE("serialization round-trip preserves structure, order and flags") {
  for (const char* text : {"regular(3)", "joined(3)", "piped(regular(4),3)"}) {
    TreeSpec spec = TreeSpec::parse(text);
    spec.depth = 4;
    spec.resistance = ResistanceRule::cycle({1.0, 2.0});
    WeightedTree t = build_tree(spec);
    std::istringstream in(t.serialize());
    WeightedTree back = parse_tree(in);
    CHECK(back.serialize() == t.serialize());
    CHECK(back.tag() == t.tag());
    CHECK(back.depth_cutoff() == t.depth_cutoff());
  }
}

TEST_CASE("tree file parser reports line numbers") {
  std::istringstream bad("root 0\nedge 0 1 1\nfrobnicate 1 2\n");
  try {
    parse_tree(bad, "test.tree");
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.code() == Status::ParseError);
    CHECK(std::string(e.what()).find("test.tree:3") != std::string::npos);
    CHECK(std::string(e.what()).find("frobnicate") != std::string::npos);
  }
  std::istringstream neg("root 0\nedge 0 1 -2\n");
  CHECK_THROWS_AS(parse_tree(neg), Error);
  std::istringstream orphan("root 0\nedge 5 6 1\n");
  CHECK_THROWS_AS(parse_tree(orphan), Error);
}

TEST_CASE("leafmode directives control the boundary") {
  std::istringstream in("root 0\nedge 0 1 1\nedge 0 2 1\nleafmode 1 inf\n");
  WeightedTree t = parse_tree(in);
  auto a = t.find(1), b = t.find(2);
  REQUIRE(a);
  REQUIRE(b);
  CHECK(t.is_cutoff_leaf(*a));
  CHECK(t.is_true_leaf(*b));
}

TEST_CASE("backbone is idempotent") {
  WeightedTree t = attach_bush(attach_bush(regular_tree(3, 5), 4, 3), 9, 2);
  BackboneReport first = compute_backbone(t);
  // Rebuild the backbone as a standalone tree and recompute.
  WeightedTree::Builder b;
  std::vector<VertexIndex> mapped(t.vertex_count(), kNoVertex);
  b.add_root(t.external_id(0));
  mapped[0] = 0;
  for (std::uint32_t v = 1; v < t.vertex_count(); ++v) {
    if (!first.in_backbone[v]) continue;
    mapped[v] = b.add_child(mapped[t.parent(v)], t.external_id(v), t.resistance_to_parent(v));
    if (t.is_leaf(v)) b.set_leaf_mode(mapped[v], t.leaf_mode(v));
  }
  WeightedTree bb = b.finish();
  BackboneReport second = compute_backbone(bb);
  for (std::uint32_t v = 0; v < bb.vertex_count(); ++v) CHECK(second.in_backbone[v] == 1);
  CHECK(second.max_degree2_run == first.max_degree2_run);
}

TEST_SUITE_END();
