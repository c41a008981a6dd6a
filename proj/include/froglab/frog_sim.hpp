#pragma once

// The frog model and its truncated variant on weighted rooted trees.
//
// Standard model: one awake particle at the root, Poisson(lambda) sleepers at
// non-root vertices; awake particles perform synchronized conductance-
// weighted random walk and wake every sleeper they land on; the root is not
// absorbing and every landing on it counts as a return.
//
// Truncated model: particles perform loop-erased walk and terminate at the
// root; a particle stepping away from the root onto an already-visited vertex
// is removed, and simultaneous first arrivals at a vertex are thinned to the
// single particle carrying the largest uniform mark for that step.

#include <cstdint>
#include <optional>
#include <vector>

#include "froglab/common.hpp"
#include "froglab/potential_theory.hpp"
#include "froglab/rng.hpp"
#include "froglab/stats.hpp"
#include "froglab/tree_model.hpp"
#include "froglab/walks.hpp"

namespace froglab::frog {

enum class Model : std::uint8_t { Standard, Truncated };
enum class Placement : std::uint8_t { AllNonRoot, BranchPointsOnly };

struct FrogConfig {
  double lambda = 1.0;
  // Sleeper mean; defaults to lambda for the standard model and to
  // 2 * Delta * r * lambda for the truncated model.
  std::optional<double> lambda_override;
  Model model = Model::Standard;
  std::uint64_t horizon = 64;
  std::uint64_t trials = 1;
  std::uint64_t seed = 1;
  Placement placement = Placement::AllNonRoot;
  bool particle_log = false;

  double sleeper_mean(const WeightedTree& tree) const;
};

enum class EventCode : std::uint8_t {
  Activated = 0,
  Landed = 1,
  Eliminated = 2,
  AbsorbedAtRoot = 3,
  Escaped = 4,
};

struct LogRecord {
  std::uint32_t step;
  std::uint64_t particle;  // (origin index << 32) | per-origin particle number
  std::uint64_t vertex;    // external id
  std::uint8_t code;
};

inline std::uint64_t particle_id(VertexIndex origin, std::uint32_t number) {
  return (static_cast<std::uint64_t>(origin) << 32) | number;
}

struct SimOutcome {
  std::uint64_t trial = 0;
  std::uint64_t returns_to_root = 0;
  std::vector<std::int32_t> activation_time;  // per vertex; -1 = never, root = 0
  std::uint64_t ever_active = 0;
  std::uint64_t eliminated = 0;
  std::uint64_t absorbed_at_root = 0;
  std::uint64_t escaped = 0;
  std::uint64_t live_at_horizon = 0;
  std::uint32_t activated_count = 0;
  std::uint32_t max_activation_depth = 0;
  bool log_enabled = false;
  std::vector<LogRecord> log;

  std::vector<unsigned char> serialize() const;
};

SimOutcome run_standard_frog(const WeightedTree& tree, const FrogConfig& config, std::uint64_t trial);
SimOutcome run_truncated_frog(const WeightedTree& tree, const FrogConfig& config, std::uint64_t trial);

// All trials, parallelized over FROGLAB_THREADS workers; outcomes indexed by
// trial, independent of scheduling.
std::vector<SimOutcome> run_trials(const WeightedTree& tree, const FrogConfig& config);

struct ConditionalActivationEstimate {
  double p_hat = 0.0;
  stats::Interval ci;
  std::uint64_t conditioned = 0;  // trials with the parent activated
  std::uint64_t hits = 0;         // of those, trials with u activated
  std::uint64_t raw_trials = 0;
  bool inconclusive = false;
};

// Monte Carlo estimate of P(u activated | parent(u) activated) under the
// truncated model, conditioning by rejection. Runs raw trials until
// `conditioned_target` conditioning events (capped at 20x raw trials).
ConditionalActivationEstimate estimate_conditional_activation(const WeightedTree& tree,
                                                              const FrogConfig& config, VertexId u,
                                                              std::uint64_t conditioned_target);

// Harmonic mass of the activated part of level n of T(v) in one trial.
double measure_level_mass(const SimOutcome& outcome, const WeightedTree& tree,
                          const potential::HarmonicMeasure& level_measure);

// Per-level activated harmonic mass for j = 0..n below v_star.
std::vector<double> ancestor_closed_mass(const SimOutcome& outcome, const WeightedTree& tree,
                                         VertexId v_star, std::uint32_t n, std::uint32_t margin = 10);

// Number of distinct particles originating inside T(v) that ever land on
// parent(v); requires the particle log.
std::uint64_t count_V(const SimOutcome& outcome, const WeightedTree& tree, VertexId v);

enum class Verdict : std::uint8_t { Pass, Fail, Inconclusive };

struct DominanceResult {
  Verdict verdict = Verdict::Inconclusive;
  double sup_difference = 0.0;  // sup_t(F_standard - F_truncated), positive = dominance deficit
  double band = 0.0;
};

// One-sided empirical-CDF check that standard-model returns stochastically
// dominate truncated-model returns.
DominanceResult dominance_test(const std::vector<std::uint64_t>& standard_returns,
                               const std::vector<std::uint64_t>& truncated_returns, double alpha = 0.01);

struct RecurrenceDiagnostics {
  double alpha = 0.0;
  double beta = 0.0;       // (delta-2)/(2r+delta-2)
  std::uint64_t n_choice;  // floor(exp(alpha/4))
};

RecurrenceDiagnostics recurrence_diagnostics(unsigned delta, double r, double alpha);

}  // namespace froglab::frog
