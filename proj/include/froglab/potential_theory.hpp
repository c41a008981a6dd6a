#pragma once

// Electrical-network quantities on weighted trees. Infinite-tree values are
// bracketed by evaluating the finite realization under two boundary rules:
// resistance 0 beyond every cutoff leaf (short, lower bound) and the largest
// resistance any continuation in the tree's degree/resistance class can have
// (upper bound; +inf when no class is certified). True leaves are exact dead
// ends under both rules.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "froglab/common.hpp"
#include "froglab/tree_model.hpp"

namespace froglab::potential {

struct Bracket {
  double lo = 0.0;
  double hi = kInf;
  double mid() const { return lo == hi ? lo : 0.5 * (lo + hi); }
  double width() const { return hi - lo; }
  bool contains(double x) const { return lo <= x && x <= hi; }
};

struct BoundaryOptions {
  double cutoff_lo = 0.0;
  double cutoff_hi = kInf;
  // cutoff_hi from the observed continuation profile: with every continuation
  // vertex of degree >= d (d >= 3) and resistances <= r, the subtree
  // resistance below any cutoff leaf is at most r/(d-2).
  static BoundaryOptions for_tree(const WeightedTree& tree);
};

// down[v]: resistance from v to infinity through v's children only.
// up[v]:   resistance from v to infinity through its parent edge.
// Exact values for one fixed boundary resistance; a bracket is two of these.
struct ScalarTables {
  std::vector<double> down;
  std::vector<double> up;
  VertexIndex anchor = 0;
  double boundary = 0.0;
};

ScalarTables compute_scalar_tables(const WeightedTree& tree, VertexIndex anchor, double boundary_resistance);

// Resistance from v to infinity in the component of v obtained by deleting
// neighbor `exclude` (kNoVertex: keep all neighbors).
double away_from(const WeightedTree& tree, const ScalarTables& t, VertexIndex v, VertexIndex exclude);

class Tables {
 public:
  Tables(const WeightedTree& tree, VertexIndex anchor, BoundaryOptions opts);
  const ScalarTables& lo() const { return lo_; }
  const ScalarTables& hi() const { return hi_; }
  Bracket down(VertexIndex v) const { return {lo_.down[v], hi_.down[v]}; }
  Bracket up(VertexIndex v) const { return {lo_.up[v], hi_.up[v]}; }
  Bracket away(const WeightedTree& tree, VertexIndex v, VertexIndex exclude) const {
    return {away_from(tree, lo_, v, exclude), away_from(tree, hi_, v, exclude)};
  }
  bool certified() const { return certified_; }

 private:
  ScalarTables lo_, hi_;
  bool certified_;
};

struct ResistanceBracket {
  double lower = 0.0;
  double upper = kInf;
  std::uint32_t depth = 0;
  bool escape_certain = false;  // upper finite
};

// Effective resistance between v and infinity. With `retained`, only the edge
// from v toward that neighbor is kept (the component of v avoiding all other
// neighbors).
ResistanceBracket resistance_to_infinity(const WeightedTree& tree, VertexId v,
                                         std::optional<VertexId> retained = std::nullopt);

// Probability that random walk started at `from` (conductance-weighted by the
// edge resistances) ever hits `to`.
Bracket hitting_probability(const WeightedTree& tree, VertexId from, VertexId to);

// Bracket for the resistance between v and infinity through a single retained
// edge in the homogeneous tree where every onward vertex has
// `children_per_vertex` children and all edges carry resistance r, truncated
// `depth` levels below v. Radially collapsed evaluation of the same recursion
// the table computation runs, for depths whose full tree exceeds any vertex
// budget; agrees with resistance_to_infinity on materializable depths.
ResistanceBracket radial_branch_resistance(unsigned children_per_vertex, double r, std::uint32_t depth);

struct HarmonicMeasure {
  VertexIndex base = 0;
  std::uint32_t level = 0;
  std::vector<VertexIndex> vertices;
  std::vector<double> mass;         // mean of the two exact boundary networks
  std::vector<double> uncertainty;  // half-gap between them
  double residual = 0.0;            // 1 - sum(mass)
  bool boundary_certified = false;
};

// Exit law over level n of the subtree T(v): the law of the loop-erased walk
// from v at the first time it reaches level n. Requires T(v) leafless to
// depth n and `margin` further levels of materialized tree below level n.
HarmonicMeasure harmonic_measure(const WeightedTree& tree, VertexId v, std::uint32_t n,
                                 std::uint32_t margin = 10);

struct SpectralEstimate {
  std::vector<double> p2n;         // P[walk returns to root at step 2n], n = 1..N
  double rho_max_root = 0.0;       // max_n p2n^(1/2n); certified lower bound for rho
  double rho_extrapolated = 0.0;   // tail fit of log p = a + b log n + 2n log rho
  double fit_residual_rms = 0.0;
  bool radial = false;             // solved on the homogeneous radial chain
  std::uint64_t tree_tag = 0;
};

// Even-step return probabilities of the conductance-weighted walk started at
// the root. Homogeneous trees (equal resistances, equal interior child
// counts) are solved on the exact radial chain of the infinite continuation;
// otherwise the materialized tree must have depth >= N+1.
SpectralEstimate return_probability_sequence(const WeightedTree& tree, std::uint32_t N);

// P[walk is at the root at step t], t = 1..horizon, for walk on the finite
// realization absorbed at cutoff leaves — the chain the simulators run.
std::vector<double> root_visit_probabilities(const WeightedTree& tree, std::uint32_t horizon);

struct HarmReturnReport {
  double empirical_min_lo = 0.0;
  double empirical_min_mid = 0.0;
  double empirical_max_mid = 0.0;
  double floor = 0.0;                // constructive constant from the ratio chain
  double root_escape_factor = 0.0;   // the 1/(4*Delta^2*r^3) factor inside it
  bool certified = false;            // min ratio lower end above the floor
  bool uncertain = false;            // brackets too wide to decide
  VertexId argmin = 0;
};

// Compares the probability that loop-erased walk from u reaches the root
// against the harmonic measure of u in T(v), over u in level n of T(v);
// v must sit at depth 2 of a tree passing validate_bounded_class.
HarmReturnReport verify_harm_return_comparison(const WeightedTree& tree, VertexId v, std::uint32_t n,
                                               std::uint32_t margin = 8);

void emit_resistance_csv(const WeightedTree& tree, const std::string& path, const std::string& header);
void emit_harm_csv(const WeightedTree& tree, const HarmonicMeasure& hm, const std::string& path,
                   const std::string& header);
void emit_rho_csv(const SpectralEstimate& est, const std::string& path, const std::string& header);

}  // namespace froglab::potential
