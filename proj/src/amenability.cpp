#include "froglab/amenability.hpp"

#include <algorithm>
#include <cmath>

#include "froglab/parallel.hpp"
#include "froglab/stats.hpp"
#include "froglab/walks.hpp"

namespace froglab::amen {

namespace {

// Connected-subset enumeration with canonical extensions: subsets containing
// anchor a use only vertices >= a, and each subset is generated exactly once
// by the include/exclude branching over the frontier.
struct Enumerator {
  const WeightedTree& tree;
  std::uint32_t max_size;
  std::uint64_t budget;

  std::vector<std::uint8_t> in_set, banned, allowed;
  std::vector<VertexIndex> members;
  std::uint64_t degree_sum = 0;
  std::uint64_t count = 0;
  bool hit_budget = false;

  double best_ratio = 2.0;
  std::vector<VertexIndex> best_set;

  explicit Enumerator(const WeightedTree& t, std::uint32_t k, std::uint64_t b)
      : tree(t), max_size(k), budget(b) {
    in_set.assign(t.vertex_count(), 0);
    banned.assign(t.vertex_count(), 0);
    allowed.assign(t.vertex_count(), 0);
    for (std::uint32_t v = 0; v < t.vertex_count(); ++v) allowed[v] = !t.is_cutoff_leaf(v);
  }

  void consider() {
    ++count;
    if (count > budget) hit_budget = true;
    // On a tree |∂K| = |K|_D - 2(|K| - 1).
    const double boundary = static_cast<double>(degree_sum) - 2.0 * (members.size() - 1);
    const double ratio = boundary / static_cast<double>(degree_sum);
    if (ratio < best_ratio) {
      best_ratio = ratio;
      best_set = members;
    }
  }

  void neighbors(VertexIndex v, std::vector<VertexIndex>& out) const {
    if (v != tree.root()) out.push_back(tree.parent(v));
    out.insert(out.end(), tree.children_begin(v), tree.children_end(v));
  }

  // Include/exclude branching over the frontier. On a tree no vertex can be
  // adjacent to the growing set twice, so frontier entries are unique along a
  // recursion path. The exclude branch is the loop continuation; bans taken
  // at this level are undone on exit.
  void grow(VertexIndex anchor, std::vector<VertexIndex> frontier) {
    std::vector<VertexIndex> banned_here;
    std::vector<VertexIndex> nbr;
    while (!frontier.empty() && !hit_budget) {
      VertexIndex u = frontier.back();
      frontier.pop_back();
      in_set[u] = 1;
      members.push_back(u);
      degree_sum += tree.degree(u);
      consider();
      if (members.size() < max_size && !hit_budget) {
        std::vector<VertexIndex> next = frontier;
        nbr.clear();
        neighbors(u, nbr);
        for (VertexIndex w : nbr)
          if (w > anchor && allowed[w] && !in_set[w] && !banned[w]) next.push_back(w);
        grow(anchor, std::move(next));
      }
      in_set[u] = 0;
      members.pop_back();
      degree_sum -= tree.degree(u);
      banned[u] = 1;
      banned_here.push_back(u);
    }
    for (VertexIndex u : banned_here) banned[u] = 0;
  }
};

}  // namespace

ExpansionReport enumerate_edge_expansion(const WeightedTree& tree, std::uint32_t k,
                                         std::uint64_t subset_budget) {
  if (k < 1) fail(Status::InvalidArgument, "enumerate_edge_expansion: k must be >= 1");
  ExpansionReport rep;
  rep.max_subset_size = k;
  rep.tree_tag = tree.tag();

  Enumerator e(tree, k, subset_budget);
  for (std::uint32_t a = 0; a < tree.vertex_count() && !e.hit_budget; ++a) {
    if (!e.allowed[a]) continue;
    e.in_set[a] = 1;
    e.members.push_back(a);
    e.degree_sum += tree.degree(a);
    e.consider();
    if (k > 1) {
      std::vector<VertexIndex> frontier, nbr;
      e.neighbors(a, nbr);
      for (VertexIndex w : nbr)
        if (w > a && e.allowed[w]) frontier.push_back(w);
      e.grow(a, std::move(frontier));
    }
    e.in_set[a] = 0;
    e.members.pop_back();
    e.degree_sum -= tree.degree(a);
  }
  rep.phi_enumerated = e.best_ratio;
  rep.subsets_enumerated = e.count;
  rep.budget_hit = e.hit_budget;
  for (VertexIndex v : e.best_set) rep.certificate.push_back(tree.external_id(v));

  BackboneReport backbone = compute_backbone(tree);
  rep.L = certified_L(backbone);
  if (rep.L >= 1) rep.phi_lower_analytic = tree_iso_bound(rep.L);
  return rep;
}

double tree_iso_bound(std::uint64_t L) {
  if (L < 1) fail(Status::InvalidArgument, "tree_iso_bound: L must be >= 1");
  return 1.0 / (9.0 * static_cast<double>(L) * static_cast<double>(L));
}

double transience_threshold(double phi) {
  if (!(phi > 0.0) || phi > 1.0) fail(Status::InvalidArgument, "transience_threshold: phi must be in (0,1]");
  return phi * phi / (2.0 - phi * phi);
}

double corollary_bound(std::uint64_t L) {
  if (L < 1) fail(Status::InvalidArgument, "corollary_bound: L must be >= 1");
  const double l = static_cast<double>(L);
  return 1.0 / (162.0 * l * l * l * l);
}

Rational::Rational(long long n, long long d) : num(n), den(d) {
  if (den == 0) fail(Status::InvalidArgument, "rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const long long g = std::gcd(num < 0 ? -num : num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
}

Rational Rational::operator*(const Rational& o) const { return Rational(num * o.num, den * o.den); }
Rational Rational::operator-(const Rational& o) const {
  return Rational(num * o.den - o.num * den, den * o.den);
}
bool Rational::operator<=(const Rational& o) const {
  return static_cast<long long>(num) * o.den <= static_cast<long long>(o.num) * den;
}

Rational transience_threshold_exact(const Rational& phi) {
  const Rational phi2 = phi * phi;
  const Rational denom = Rational(2, 1) - phi2;
  return Rational(phi2.num * denom.den, phi2.den * denom.num);
}

Rational tree_iso_bound_exact(std::uint64_t L) {
  const long long l = static_cast<long long>(L);
  return Rational(1, 9 * l * l);
}

Rational corollary_bound_exact(std::uint64_t L) {
  const long long l = static_cast<long long>(L);
  return Rational(1, 162 * l * l * l * l);
}

BrwStats run_brw(const WeightedTree& tree, double offspring_mean, std::uint64_t horizon,
                 std::uint64_t trials, std::uint64_t seed, std::uint64_t population_guard) {
  if (horizon < 1) fail(Status::InvalidArgument, "run_brw: horizon must be >= 1");
  if (offspring_mean < 0) fail(Status::InvalidArgument, "run_brw: offspring mean must be >= 0");
  walks::SrwSampler srw(tree);

  BrwStats out;
  out.root_visits.assign(trials, 0);
  std::vector<std::vector<std::uint64_t>> arrivals(trials);
  std::vector<std::uint64_t> peaks(trials, 0);
  std::vector<std::uint8_t> aborted(trials, 0);

  parallel_for(trials, [&](std::uint64_t trial) {
    struct Walker {
      VertexIndex pos;
      RngStream rng;
    };
    arrivals[trial].assign(horizon, 0);
    std::uint64_t walker_seq = 0;
    auto make_walker = [&](VertexIndex pos) {
      Walker w;
      w.pos = pos;
      w.rng = RngStream::derive(seed, {trial, static_cast<std::uint64_t>(StreamRole::Walk), walker_seq++});
      return w;
    };
    RngStream offspring =
        RngStream::derive(seed, {trial, static_cast<std::uint64_t>(StreamRole::Offspring)});
    std::vector<Walker> live{make_walker(tree.root())};
    std::vector<Walker> born;
    for (std::uint64_t t = 0; t < horizon && !live.empty(); ++t) {
      born.clear();
      for (std::size_t i = 0; i < live.size(); ++i) {
        Walker& w = live[i];
        w.pos = srw.step(w.pos, w.rng);
        if (w.pos == tree.root()) {
          ++out.root_visits[trial];
          ++arrivals[trial][t];
          continue;
        }
        // Fresh offspring sample at every landing.
        const std::uint64_t kids = offspring.poisson(offspring_mean);
        for (std::uint64_t c = 0; c < kids; ++c) born.push_back(make_walker(w.pos));
      }
      live.erase(std::remove_if(live.begin(), live.end(),
                                [&](const Walker& w) { return tree.is_cutoff_leaf(w.pos); }),
                 live.end());
      live.insert(live.end(), born.begin(), born.end());
      peaks[trial] = std::max<std::uint64_t>(peaks[trial], live.size());
      if (live.size() > population_guard) {
        aborted[trial] = 1;
        break;
      }
    }
  });

  out.arrivals_by_step.assign(horizon, 0);
  for (std::uint64_t trial = 0; trial < trials; ++trial) {
    out.aborted_trials += aborted[trial];
    out.peak_population = std::max(out.peak_population, peaks[trial]);
    for (std::uint64_t t = 0; t < horizon; ++t) out.arrivals_by_step[t] += arrivals[trial][t];
  }
  return out;
}

DecayFit fit_arrival_decay(const std::vector<std::uint64_t>& arrivals_by_step, std::uint32_t bucket_width) {
  DecayFit fit;
  if (bucket_width < 1 || arrivals_by_step.size() < 2 * bucket_width) return fit;
  std::vector<double> x, y, w;
  for (std::size_t b = 0; (b + 1) * bucket_width <= arrivals_by_step.size(); ++b) {
    std::uint64_t total = 0;
    for (std::uint32_t i = 0; i < bucket_width; ++i) total += arrivals_by_step[b * bucket_width + i];
    if (total < 16) continue;  // keep the log-Poisson approximation honest
    x.push_back((b + 0.5) * bucket_width);
    y.push_back(std::log(static_cast<double>(total)));
    w.push_back(static_cast<double>(total));
  }
  if (x.size() < 3) return fit;
  stats::SlopeFit slope = stats::fit_slope(x, y, w);
  fit.ratio = std::exp(slope.slope);
  fit.ci_lo = std::exp(slope.ci_lo);
  fit.ci_hi = std::exp(slope.ci_hi);
  fit.buckets_used = static_cast<std::uint32_t>(x.size());
  fit.ok = true;
  return fit;
}

SandwichReport check_isoperimetric_sandwich(const ExpansionReport& expansion,
                                            const potential::SpectralEstimate& spectral) {
  if (expansion.tree_tag != spectral.tree_tag)
    fail(Status::InvalidArgument, "sandwich check: reports come from different trees");
  SandwichReport rep;
  rep.one_minus_rho = 1.0 - spectral.rho_max_root;
  rep.phi_enumerated = expansion.phi_enumerated;
  const double gap = std::max(0.0, spectral.rho_extrapolated - spectral.rho_max_root);
  rep.tolerance = gap + 0.01;
  if (gap > 0.2 || expansion.phi_lower_analytic <= 0.0) {
    rep.verdict = SandwichVerdict::Inconclusive;
    return rep;
  }
  rep.phi_sq_half = expansion.phi_lower_analytic * expansion.phi_lower_analytic / 2.0;
  rep.lower_ok = rep.phi_sq_half <= rep.one_minus_rho + 1e-12;
  rep.upper_ok = rep.one_minus_rho <= rep.phi_enumerated + rep.tolerance;
  rep.verdict = rep.lower_ok && rep.upper_ok ? SandwichVerdict::Pass : SandwichVerdict::Fail;
  return rep;
}

}  // namespace froglab::amen
