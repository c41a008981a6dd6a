#pragma once

// Edge expansion by exact enumeration of connected subsets, the analytic
// expansion floor for trees with bounded decorations, the transience
// threshold it implies, and the branching random walk used as the comparison
// system.

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "froglab/common.hpp"
#include "froglab/potential_theory.hpp"
#include "froglab/rng.hpp"
#include "froglab/tree_model.hpp"

namespace froglab::amen {

struct ExpansionReport {
  double phi_enumerated = 1.0;  // min |boundary| / degree-sum over enumerated K
  std::vector<VertexId> certificate;
  std::uint32_t max_subset_size = 0;
  std::uint64_t subsets_enumerated = 0;
  bool budget_hit = false;
  // 1/(9 L^2) whenever L = certified_L(backbone) >= 1.
  double phi_lower_analytic = 0.0;
  std::uint64_t L = 0;
  std::uint64_t tree_tag = 0;
};

// Exact minimum of |∂K| / |K|_D over connected subsets K with |K| <= k that
// avoid cutoff leaves; edges toward beyond-cutoff territory count toward the
// boundary. Aborts into a partial report when the enumeration budget is hit.
ExpansionReport enumerate_edge_expansion(const WeightedTree& tree, std::uint32_t k,
                                         std::uint64_t subset_budget = 100'000'000);

// 1/(9 L^2): expansion floor for trees whose off-backbone components and
// backbone degree-2 runs are bounded by L.
double tree_iso_bound(std::uint64_t L);

// phi^2 / (2 - phi^2): sleeper mean below which the frog model is transient
// on a graph with edge expansion at least phi.
double transience_threshold(double phi);

// 1/(162 L^4), the threshold evaluated at the analytic floor (rounded down).
double corollary_bound(std::uint64_t L);

struct Rational {
  long long num = 0;
  long long den = 1;
  Rational() = default;
  Rational(long long n, long long d);
  Rational operator*(const Rational& o) const;
  Rational operator-(const Rational& o) const;
  bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
  bool operator<=(const Rational& o) const;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

Rational transience_threshold_exact(const Rational& phi);
Rational tree_iso_bound_exact(std::uint64_t L);
Rational corollary_bound_exact(std::uint64_t L);

struct BrwStats {
  std::vector<std::uint64_t> root_visits;       // per trial
  std::vector<std::uint64_t> arrivals_by_step;  // root arrivals summed over trials
  std::uint64_t aborted_trials = 0;             // population guard hit
  std::uint64_t peak_population = 0;
};

// Branching random walk: one walker starts at the root; every landing on a
// non-root vertex spawns a fresh Poisson(mean) batch of walkers there.
// Walkers escape at cutoff leaves.
BrwStats run_brw(const WeightedTree& tree, double offspring_mean, std::uint64_t horizon,
                 std::uint64_t trials, std::uint64_t seed, std::uint64_t population_guard = 10'000'000);

struct DecayFit {
  double ratio = 1.0;  // fitted per-step multiplier of expected root arrivals
  double ci_lo = 1.0, ci_hi = 1.0;
  std::uint32_t buckets_used = 0;
  bool ok = false;
};

// Geometric-decay fit of root arrivals over time, bucketed to keep counts in
// the Poisson-comfortable range.
DecayFit fit_arrival_decay(const std::vector<std::uint64_t>& arrivals_by_step,
                           std::uint32_t bucket_width = 20);

enum class SandwichVerdict : std::uint8_t { Pass, Fail, Inconclusive };

struct SandwichReport {
  SandwichVerdict verdict = SandwichVerdict::Inconclusive;
  bool lower_ok = false;  // phi_analytic^2/2 <= 1 - rho_lower_bound
  bool upper_ok = false;  // 1 - rho_lower_bound <= phi_enumerated + tolerance
  double one_minus_rho = 0.0;
  double phi_sq_half = 0.0;
  double phi_enumerated = 0.0;
  double tolerance = 0.0;
};

// Two-sided expansion/spectral-radius consistency check. The max-root
// estimate is a certified lower bound for rho, so the first inequality is
// certified outright; the second absorbs the estimate gap into a tolerance
// taken from the extrapolation spread.
SandwichReport check_isoperimetric_sandwich(const ExpansionReport& expansion,
                                            const potential::SpectralEstimate& spectral);

}  // namespace froglab::amen
