#include <cmath>

#include "doctest.h"
#include "froglab/potential_theory.hpp"
#include "froglab/walks.hpp"
#include "test_util.hpp"

using namespace froglab;
using namespace froglab::potential;
using testutil::k_ary_tree;
using testutil::regular_tree;
using testutil::two_branch_binary;

TEST_SUITE_BEGIN("potential");

TEST_CASE("branch resistance brackets contain the closed forms") {
  struct Case {
    unsigned degree;  // every vertex, root included in the homogeneous view
    double r;
    double expected;
  };
  // For the tree where every vertex has degree d and resistance r, a single
  // retained branch has resistance r(d-1)/(d-2).
  const Case cases[] = {{3, 1.0, 2.0}, {3, 2.0, 4.0}, {4, 1.0, 1.5}};
  for (const Case& c : cases) {
    ResistanceBracket b = radial_branch_resistance(c.degree - 1, c.r, 30);
    CHECK(b.lower <= c.expected);
    CHECK(c.expected <= b.upper);
    CHECK(b.upper - b.lower < 1e-6);
  }
}

TEST_CASE("radial and materialized evaluations agree") {
  for (unsigned d : {3u, 4u}) {
    WeightedTree t = regular_tree(d, 9);
    // Retain one child of the first child of the root: a fully interior edge.
    const VertexIndex v = t.child(t.root(), 0);
    const VertexIndex u = t.child(v, 0);
    ResistanceBracket full = resistance_to_infinity(t, t.external_id(v), t.external_id(u));
    ResistanceBracket radial = radial_branch_resistance(d - 1, 1.0, 8);  // u sits 8 levels above cutoff
    CHECK(full.lower == doctest::Approx(radial.lower).epsilon(1e-12));
    CHECK(full.upper == doctest::Approx(radial.upper).epsilon(1e-12));
  }
}

TEST_CASE("resistance with no escape route reports an infinite upper end") {
  WeightedTree::Builder b;
  b.add_root(0);
  VertexIndex a = b.add_child(0, 1, 1.0);
  b.add_child(a, 2, 1.0);
  b.add_child(a, 3, 1.0);
  WeightedTree t = b.finish();  // all leaves true leaves
  ResistanceBracket r = resistance_to_infinity(t, 1);
  CHECK(std::isinf(r.upper));
  CHECK_FALSE(r.escape_certain);
}

TEST_CASE("hitting probabilities on the binary tree") {
  WeightedTree t = k_ary_tree(2, 20);
  const VertexIndex child = t.child(t.root(), 0);
  Bracket p = hitting_probability(t, t.external_id(child), 0);

  // Independent oracle: distance-to-root chain of the binary tree with the
  // cutoff absorbing toward infinity. p_k = (1/3) p_{k-1} + (2/3) p_{k+1},
  // p_0 = 1, p_20 = 0 has the explicit solution p_k = A + B 2^{-k}.
  const double B = 1.0 / (1.0 - std::pow(2.0, -20.0));
  const double A = 1.0 - B;
  const double oracle_p1 = A + B / 2.0;
  CHECK(p.lo == doctest::Approx(oracle_p1).epsilon(1e-9));
  CHECK(p.lo <= 0.5);
  CHECK(0.5 <= p.hi + 1e-12);

  SUBCASE("depth-k vertex reaches the root with probability 2^-k") {
    VertexIndex v = t.root();
    for (int k = 0; k < 5; ++k) v = t.child(v, 1);
    Bracket pk = hitting_probability(t, t.external_id(v), 0);
    CHECK(pk.lo <= std::pow(0.5, 5));
    CHECK(std::pow(0.5, 5) <= pk.hi + 1e-12);
    CHECK(pk.hi - pk.lo < 1e-4);
  }
}

TEST_CASE("hitting a neighbor is forced when the rest of the tree is gone") {
  WeightedTree::Builder b;
  b.add_root(0);
  b.add_child(0, 1, 1.0);
  WeightedTree t = b.finish();  // two vertices, true leaf
  Bracket p = hitting_probability(t, 1, 0);
  CHECK(p.lo == doctest::Approx(1.0));
  CHECK(p.hi == doctest::Approx(1.0));
}

TEST_CASE("hitting probability rejects bad arguments") {
  WeightedTree t = regular_tree(3, 4);
  CHECK_THROWS_AS(hitting_probability(t, 0, 0), Error);
  CHECK_THROWS_AS(hitting_probability(t, 0, 999999), Error);
}

TEST_CASE("harmonic measure is uniform on the binary tree") {
  WeightedTree t = k_ary_tree(2, 16);
  HarmonicMeasure hm = harmonic_measure(t, 0, 3);
  REQUIRE(hm.vertices.size() == 8);
  for (double m : hm.mass) CHECK(m == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(std::fabs(hm.residual) < 1e-12);
  CHECK(hm.boundary_certified);
}

TEST_CASE("harmonic measure on the regular tree root splits evenly") {
  WeightedTree t = regular_tree(3, 12);
  HarmonicMeasure hm = harmonic_measure(t, 0, 1);
  REQUIRE(hm.vertices.size() == 3);
  for (double m : hm.mass) CHECK(m == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("asymmetric junction weights level mass by branch conductance") {
  WeightedTree t = two_branch_binary(1.0, 2.0, 14);
  HarmonicMeasure hm1 = harmonic_measure(t, 0, 1);
  REQUIRE(hm1.vertices.size() == 2);
  // Branch conductances are 1/(1+1) and 1/(2+1): masses 3/5 and 2/5.
  CHECK(hm1.mass[0] == doctest::Approx(0.6).epsilon(1e-9));
  CHECK(hm1.mass[1] == doctest::Approx(0.4).epsilon(1e-9));
  HarmonicMeasure hm3 = harmonic_measure(t, 0, 3);
  double total = 0.0;
  for (std::size_t i = 0; i < hm3.vertices.size(); ++i) {
    total += hm3.mass[i];
    // Within a branch the subtree is symmetric: each of the 4 level-3
    // vertices carries a quarter of its branch mass.
    const bool left = t.in_subtree(hm3.vertices[i], t.child(t.root(), 0));
    CHECK(hm3.mass[i] == doctest::Approx((left ? 0.6 : 0.4) / 4.0).epsilon(1e-9));
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("harmonic measure guards its margin") {
  WeightedTree t = k_ary_tree(2, 12);
  CHECK_THROWS_AS(harmonic_measure(t, 0, 5, 10), Error);
  try {
    harmonic_measure(t, 0, 5, 10);
  } catch (const Error& e) {
    CHECK(e.code() == Status::DepthExceeded);
  }
}

TEST_CASE("level measure pushed one step forward matches the next level") {
  WeightedTree t = testutil::weighted_fixture(12, 31);
  HarmonicMeasure hm2 = harmonic_measure(t, 0, 2, 6);
  HarmonicMeasure hm3 = harmonic_measure(t, 0, 3, 6);
  Tables tables(t, t.root(), BoundaryOptions::for_tree(t));
  std::vector<double> pushed(t.vertex_count(), 0.0);
  for (std::size_t i = 0; i < hm2.vertices.size(); ++i) {
    const VertexIndex w = hm2.vertices[i];
    walks::StepLaw law = walks::lerw_next_step(t, tables, w, t.parent(w));
    for (std::size_t j = 0; j < law.neighbors.size(); ++j)
      if (t.depth(law.neighbors[j]) == t.depth(w) + 1) pushed[law.neighbors[j]] += hm2.mass[i] * law.mass[j];
  }
  for (std::size_t i = 0; i < hm3.vertices.size(); ++i)
    CHECK(pushed[hm3.vertices[i]] == doctest::Approx(hm3.mass[i]).epsilon(1e-9));
}

TEST_CASE("return probabilities on the regular tree") {
  WeightedTree t = regular_tree(3, 12);
  SpectralEstimate est = return_probability_sequence(t, 200);
  CHECK(est.radial);
  CHECK(est.p2n[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  const double rho_true = 2.0 * std::sqrt(2.0) / 3.0;
  CHECK(std::fabs(est.rho_extrapolated - rho_true) < 0.005);
  CHECK(est.rho_max_root <= rho_true + 1e-9);  // certified lower bound
  CHECK(est.rho_max_root > 0.9);

  SUBCASE("odd-step root mass vanishes") {
    auto probs = root_visit_probabilities(t, 31);
    for (std::size_t i = 0; i < probs.size(); i += 2) CHECK(probs[i] == 0.0);  // steps 1,3,5,...
  }
}

TEST_CASE("vertex-chain return probabilities match dense matrix powering") {
  WeightedTree t = testutil::weighted_fixture(6, 17);
  const std::uint32_t n = t.vertex_count();
  // Dense transition matrix of the finite conductance-weighted walk.
  std::vector<double> P(static_cast<std::size_t>(n) * n, 0.0);
  for (std::uint32_t v = 0; v < n; ++v) {
    double total = 0.0;
    if (v != 0) total += 1.0 / t.resistance_to_parent(v);
    for (const VertexIndex* c = t.children_begin(v); c != t.children_end(v); ++c)
      total += 1.0 / t.resistance_to_parent(*c);
    if (v != 0) P[static_cast<std::size_t>(v) * n + t.parent(v)] = (1.0 / t.resistance_to_parent(v)) / total;
    for (const VertexIndex* c = t.children_begin(v); c != t.children_end(v); ++c)
      P[static_cast<std::size_t>(v) * n + *c] = (1.0 / t.resistance_to_parent(*c)) / total;
  }
  std::vector<double> mass(n, 0.0), next(n, 0.0);
  mass[0] = 1.0;
  std::vector<double> oracle;
  for (int step = 1; step <= 10; ++step) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::uint32_t v = 0; v < n; ++v) {
      if (mass[v] == 0.0) continue;
      for (std::uint32_t u = 0; u < n; ++u) next[u] += mass[v] * P[static_cast<std::size_t>(v) * n + u];
    }
    mass.swap(next);
    if (step % 2 == 0) oracle.push_back(mass[0]);
  }
  SpectralEstimate est = return_probability_sequence(t, 5);
  CHECK_FALSE(est.radial);
  for (int k = 0; k < 5; ++k) CHECK(est.p2n[k] == doctest::Approx(oracle[k]).epsilon(1e-12));
}

TEST_CASE("vertex-chain return probabilities need enough depth") {
  WeightedTree t = testutil::weighted_fixture(6, 5);
  CHECK_THROWS_AS(return_probability_sequence(t, 50), Error);
  SpectralEstimate est = return_probability_sequence(t, 5);
  CHECK_FALSE(est.radial);
  CHECK(est.p2n.size() == 5);
  for (double p : est.p2n) CHECK(p > 0.0);
}

TEST_CASE("regular(4) spectral radius") {
  WeightedTree t = regular_tree(4, 10);
  SpectralEstimate est = return_probability_sequence(t, 200);
  const double rho_true = std::sqrt(3.0) / 2.0;
  CHECK(std::fabs(est.rho_extrapolated - rho_true) < 0.005);
}

TEST_CASE("bracket nesting and monotonicity") {
  ResistanceBracket prev{0.0, kInf, 0, false};
  for (unsigned depth : {6u, 9u, 12u}) {
    WeightedTree t = regular_tree(3, depth);
    ResistanceBracket b = resistance_to_infinity(t, 0);
    CHECK(b.lower >= prev.lower - 1e-12);
    CHECK(b.upper <= prev.upper + 1e-12);
    prev = b;
  }
  SUBCASE("raising one resistance cannot lower the resistance bound") {
    WeightedTree t = testutil::weighted_fixture(7, 21);
    const double before = resistance_to_infinity(t, 0).lower;
    testing::corrupt_edge_resistance(t, 4, t.resistance_to_parent(4) + 1.0);
    CHECK(resistance_to_infinity(t, 0).lower >= before - 1e-12);
  }
}

TEST_CASE("harmonic measure against return comparison") {
  SUBCASE("symmetric tree: ratio constant across the level") {
    WeightedTree t = regular_tree(3, 14);
    VertexIndex v = t.child(t.child(t.root(), 0), 0);
    HarmReturnReport rep = verify_harm_return_comparison(t, t.external_id(v), 4);
    CHECK(rep.certified);
    CHECK(rep.root_escape_factor == doctest::Approx(1.0 / 36.0));
    CHECK(rep.empirical_min_mid == doctest::Approx(rep.empirical_max_mid).epsilon(1e-9));
    CHECK(rep.empirical_min_lo >= rep.floor);
  }
  SUBCASE("perturbed resistance keeps the ratio above the recomputed floor") {
    WeightedTree t = regular_tree(3, 14);
    testing::corrupt_edge_resistance(t, 8, 3.0);
    VertexIndex v = t.child(t.child(t.root(), 0), 0);
    HarmReturnReport rep = verify_harm_return_comparison(t, t.external_id(v), 4);
    CHECK(rep.root_escape_factor == doctest::Approx(1.0 / (4.0 * 9.0 * 27.0)));
    CHECK(rep.certified);
  }
}

TEST_SUITE_END();
