#pragma once

// Batch experiment orchestration: declarative configs, grid execution with
// deterministic CSV artifacts, the invariant suite, and sweep aggregation.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "froglab/common.hpp"
#include "froglab/tree_model.hpp"

namespace froglab::lab {

struct ExperimentConfig {
  std::string tree_spec = "regular(3)";
  ResistanceRule resistance = ResistanceRule::constant(1.0);
  std::string model = "standard";  // standard | truncated | brw
  std::vector<double> lambda_grid{1.0};
  std::vector<std::uint32_t> depth_grid{8};
  std::vector<std::uint64_t> horizon_grid{64};
  std::uint64_t trials = 100;
  std::uint64_t seed = 1;
  std::string outputs = "out";
  std::vector<std::string> observables{"returns"};
  std::string placement = "all";  // all | branchpoints
  std::optional<double> lambda_o; // empty: 2*Delta*r*lambda for truncated runs
  std::uint32_t level_mass_level = 3;
  bool particle_log = false;

  std::uint64_t config_hash = 0;
  std::string raw_text;

  static ExperimentConfig parse(const std::string& text, const std::string& name = "<config>");
  static ExperimentConfig parse_file(const std::string& path);
};

struct PhaseCell {
  double lambda = 0.0;
  std::uint32_t depth = 0;
  std::uint64_t horizon = 0;
  double mean_returns = 0.0;
  double median_returns = 0.0;
  std::uint64_t trials = 0;
};

struct PhaseVerdict {
  double lambda = 0.0;
  double slope = 0.0, ci_lo = 0.0, ci_hi = 0.0;
  std::string verdict;  // Transient-leaning | Recurrent-leaning | Inconclusive
  std::string rule;
};

struct PhaseReport {
  std::vector<PhaseCell> cells;
  std::vector<PhaseVerdict> verdicts;
  std::vector<std::string> cell_errors;
  std::string output_dir;
};

// Runs the full (lambda, depth, horizon) grid, writing one CSV per requested
// observable plus a manifest; data rows are a pure function of (config, seed).
PhaseReport run_experiment(const ExperimentConfig& config);

struct InvariantResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Executes the per-module invariant checks; `scope` filters by comma-
// separated name prefixes ("tree,walks"), `inject_fault` flips a known fault
// on ("negative-resistance") to exercise the failure path.
std::vector<InvariantResult> run_invariant_suite(const std::string& scope = "",
                                                 const std::string& inject_fault = "");

// Merges every run manifest found under `dir` into dir/sweep.csv (long
// format) plus per-lambda two-column .dat views. Refuses to merge runs made
// from different tree specs.
void sweep_report(const std::string& dir);

}  // namespace froglab::lab
