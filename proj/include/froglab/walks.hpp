#pragma once

// Simple random walk and loop-erased random walk on weighted trees. The
// loop-erased walk is available two ways: by erasing loops from a sampled
// trajectory, and as a Markov chain whose transitions are branch-conductance
// ratios; the two agree in law on the finite realization, which the tests
// exercise directly.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "froglab/common.hpp"
#include "froglab/potential_theory.hpp"
#include "froglab/rng.hpp"
#include "froglab/tree_model.hpp"

namespace froglab::walks {

enum class PathKind : std::uint8_t { Raw, LoopErased };
enum class TerminalReason : std::uint8_t { HitAbsorber, Escaped, HorizonReached };

struct WalkPath {
  std::vector<VertexIndex> vertices;
  PathKind kind = PathKind::Raw;
  TerminalReason reason = TerminalReason::HorizonReached;
  std::string to_string(const WeightedTree& tree) const;
};

// Conductance-weighted nearest-neighbour walk. Stops on landing on an
// absorber, on escaping through a cutoff leaf, or at the horizon. True
// leaves reflect.
WalkPath srw_path(const WeightedTree& tree, VertexIndex start, const std::vector<VertexIndex>& absorbers,
                  std::uint64_t horizon, RngStream& rng);

// Chronological loop erasure; on a tree the result is the last-exit path to
// the terminal vertex.
WalkPath loop_erase(const WeightedTree& tree, const WalkPath& path);

// One-step law of the loop-erased walk, with the truncation uncertainty of
// the underlying resistance brackets attached per neighbor.
struct StepLaw {
  std::vector<VertexIndex> neighbors;
  std::vector<double> mass;  // midpoints, normalized to sum 1
  std::vector<double> lo, hi;
  double total_uncertainty = 0.0;
};

StepLaw lerw_first_step(const WeightedTree& tree, const potential::Tables& tables, VertexIndex v);
// Conditional law of the next step given the chain reached v from came_from;
// v must not be the root (the chain terminates there).
StepLaw lerw_next_step(const WeightedTree& tree, const potential::Tables& tables, VertexIndex v,
                       VertexIndex came_from);

// Samples the loop-erased walk as a Markov chain using the exact shorted
// network (cutoff leaves connected straight to infinity), which is the law of
// loop-erasing a raw walk on the same finite realization. Absorbed at the
// root, escaped at cutoff leaves.
class LerwSampler {
 public:
  explicit LerwSampler(const WeightedTree& tree);
  VertexIndex first_step(VertexIndex v, RngStream& rng) const;
  VertexIndex next_step(VertexIndex v, VertexIndex came_from, RngStream& rng) const;
  WalkPath sample(VertexIndex start, std::uint64_t horizon, RngStream& rng) const;
  double branch_weight(VertexIndex v, std::uint32_t neighbor_slot) const {
    return weight_[offset_[v] + neighbor_slot];
  }

 private:
  const WeightedTree& tree_;
  std::vector<std::uint32_t> offset_;
  std::vector<VertexIndex> neighbor_;  // parent (if any) first, then children
  std::vector<double> weight_;         // branch conductances
  std::vector<double> total_;
};

class SrwSampler {
 public:
  explicit SrwSampler(const WeightedTree& tree);
  VertexIndex step(VertexIndex v, RngStream& rng) const;

 private:
  const WeightedTree& tree_;
  std::vector<std::uint32_t> offset_;
  std::vector<VertexIndex> neighbor_;
  std::vector<double> cumulative_;
};

struct TransitionBoundReport {
  double first_step_lower = 0.0;   // 1/(2*Delta*r)
  double first_step_upper = 0.0;   // r/(r+delta-2)
  double next_step_lower = 0.0;    // 1/(2*Delta*r^2)
  std::uint64_t first_step_checked = 0;
  std::uint64_t next_step_checked = 0;
  std::vector<std::string> violations;  // bracket entirely outside a bound
  std::vector<std::string> uncertain;   // bracket straddles a bound
  double extremal_first_min = 1.0, extremal_first_max = 0.0;
  double extremal_next_min = 1.0;
};

// Enumerates every first-step mass and every conditional next-step mass for
// interior vertices with depth <= depth_limit and checks them against the
// class bounds derived from the observed (delta, Delta, r). Bounds are
// checked at the conservative bracket endpoint.
TransitionBoundReport verify_transition_bounds(const WeightedTree& tree, std::uint32_t depth_limit);

}  // namespace froglab::walks
