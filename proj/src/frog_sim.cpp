#include "froglab/frog_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "froglab/parallel.hpp"

namespace froglab::frog {

double FrogConfig::sleeper_mean(const WeightedTree& tree) const {
  if (lambda_override) return *lambda_override;
  if (model == Model::Standard) return lambda;
  const TreeMeta& m = tree.meta();
  const double Delta = m.max_interior_degree;
  const double r = std::max(1.0, m.max_resistance);
  return 2.0 * Delta * r * lambda;
}

namespace {

struct Particle {
  VertexIndex origin;
  std::uint32_t number;
  VertexIndex pos;
  VertexIndex came_from;  // kNoVertex until the first move
  RngStream walk;
  bool dead = false;
};

struct Engine {
  const WeightedTree& tree;
  const FrogConfig& config;
  std::uint64_t trial;
  double mean;
  std::uint64_t horizon;
  const walks::SrwSampler* srw = nullptr;
  const walks::LerwSampler* lerw = nullptr;
  std::optional<VertexIndex> stop_vertex;

  SimOutcome out;
  std::vector<Particle> live;
  std::vector<std::pair<VertexIndex, std::uint32_t>> pending_first_arrivals;  // (target, live index)

  explicit Engine(const WeightedTree& t, const FrogConfig& c, std::uint64_t tr)
      : tree(t), config(c), trial(tr), mean(c.sleeper_mean(t)), horizon(c.horizon) {
    out.trial = tr;
    out.log_enabled = c.particle_log;
    out.activation_time.assign(tree.vertex_count(), -1);
  }

  bool placed(VertexIndex v) const {
    if (v == tree.root()) return false;
    return config.placement == Placement::AllNonRoot || tree.child_count(v) >= 2;
  }

  void log(std::uint32_t step, std::uint64_t particle, VertexIndex vertex, EventCode code) {
    if (out.log_enabled)
      out.log.push_back(LogRecord{step, particle, tree.external_id(vertex), static_cast<std::uint8_t>(code)});
  }

  void spawn(VertexIndex v, std::uint32_t n) {
    for (std::uint32_t k = 0; k < n; ++k) {
      Particle p;
      p.origin = v;
      p.number = k;
      p.pos = v;
      p.came_from = kNoVertex;
      p.walk = RngStream::derive(config.seed, {trial, static_cast<std::uint64_t>(StreamRole::Walk), v, k});
      live.push_back(p);
    }
    out.ever_active += n;
  }

  void activate(VertexIndex v, std::uint32_t step, std::uint64_t lander) {
    out.activation_time[v] = static_cast<std::int32_t>(step);
    ++out.activated_count;
    out.max_activation_depth = std::max(out.max_activation_depth, tree.depth(v));
    log(step, lander, v, EventCode::Activated);
    if (placed(v)) {
      RngStream s = RngStream::derive(config.seed,
                                      {trial, static_cast<std::uint64_t>(StreamRole::SleeperCounts), v});
      spawn(v, static_cast<std::uint32_t>(s.poisson(mean)));
    }
  }

  double mark(const Particle& p, std::uint32_t step) const {
    RngStream s = RngStream::derive(
        config.seed, {trial, static_cast<std::uint64_t>(StreamRole::TieBreakMark), p.origin, p.number});
    return s.uniform01_at(step);
  }

  bool visited(VertexIndex v) const { return out.activation_time[v] >= 0; }

  void run() {
    activate(tree.root(), 0, particle_id(0, 0));  // no sleepers at the root
    spawn(tree.root(), 0);
    {
      Particle p;
      p.origin = tree.root();
      p.number = 0;
      p.pos = tree.root();
      p.came_from = kNoVertex;
      p.walk = RngStream::derive(config.seed,
                                 {trial, static_cast<std::uint64_t>(StreamRole::Walk), std::uint64_t(0), 0});
      live.push_back(p);
      out.ever_active += 1;
    }
    const bool truncated = config.model == Model::Truncated;
    std::vector<VertexIndex> next_pos;
    for (std::uint32_t step = 1; step <= horizon && !live.empty(); ++step) {
      // Phase 1: every live particle picks its move; simultaneity is resolved
      // against the visited set from the end of the previous step.
      next_pos.assign(live.size(), kNoVertex);
      for (std::size_t i = 0; i < live.size(); ++i) {
        Particle& p = live[i];
        next_pos[i] = truncated ? (p.came_from == kNoVertex ? lerw->first_step(p.pos, p.walk)
                                                            : lerw->next_step(p.pos, p.came_from, p.walk))
                                : srw->step(p.pos, p.walk);
      }
      // Phase 2: resolve landings.
      pending_first_arrivals.clear();
      for (std::size_t i = 0; i < live.size(); ++i) {
        Particle& p = live[i];
        const VertexIndex w = next_pos[i];
        const std::uint64_t pid = particle_id(p.origin, p.number);
        if (truncated && w == tree.root()) {
          ++out.returns_to_root;
          ++out.absorbed_at_root;
          log(step, pid, w, EventCode::AbsorbedAtRoot);
          p.dead = true;
          continue;
        }
        if (!truncated && w == tree.root()) ++out.returns_to_root;
        if (!visited(w)) {
          pending_first_arrivals.emplace_back(w, static_cast<std::uint32_t>(i));
          continue;
        }
        log(step, pid, w, EventCode::Landed);
        if (truncated && tree.depth(w) > tree.depth(p.pos)) {
          // Step away from the root onto an already-visited vertex.
          ++out.eliminated;
          log(step, pid, w, EventCode::Eliminated);
          p.dead = true;
          continue;
        }
        p.came_from = p.pos;
        p.pos = w;
        if (tree.is_cutoff_leaf(w)) {
          ++out.escaped;
          log(step, pid, w, EventCode::Escaped);
          p.dead = true;
        }
      }
      // First arrivals: all landings count (they wake sleepers either way);
      // in the truncated model only the largest mark survives.
      std::sort(pending_first_arrivals.begin(), pending_first_arrivals.end());
      for (std::size_t g = 0; g < pending_first_arrivals.size();) {
        const VertexIndex w = pending_first_arrivals[g].first;
        std::size_t h = g;
        while (h < pending_first_arrivals.size() && pending_first_arrivals[h].first == w) ++h;
        std::size_t winner = g;
        if (truncated && h - g > 1) {
          double best = -1.0;
          for (std::size_t a = g; a < h; ++a) {
            const double m = mark(live[pending_first_arrivals[a].second], step);
            if (m > best) {
              best = m;
              winner = a;
            }
          }
        }
        for (std::size_t a = g; a < h; ++a) {
          Particle& p = live[pending_first_arrivals[a].second];
          const std::uint64_t pid = particle_id(p.origin, p.number);
          log(step, pid, w, EventCode::Landed);
          if (truncated && a != winner) {
            ++out.eliminated;
            log(step, pid, w, EventCode::Eliminated);
            p.dead = true;
            continue;
          }
          p.came_from = p.pos;
          p.pos = w;
          if (tree.is_cutoff_leaf(w)) {
            ++out.escaped;
            log(step, pid, w, EventCode::Escaped);
            p.dead = true;
          }
        }
        activate(w, step, particle_id(live[pending_first_arrivals[winner].second].origin,
                                      live[pending_first_arrivals[winner].second].number));
        g = h;
      }
      live.erase(std::remove_if(live.begin(), live.end(), [](const Particle& p) { return p.dead; }),
                 live.end());
      if (stop_vertex && visited(*stop_vertex)) break;
    }
    out.live_at_horizon = live.size();
  }
};

SimOutcome run_one(const WeightedTree& tree, const FrogConfig& config, std::uint64_t trial,
                   const walks::SrwSampler* srw, const walks::LerwSampler* lerw,
                   std::optional<VertexIndex> stop = std::nullopt) {
  if (config.horizon < 1) fail(Status::InvalidArgument, "horizon must be >= 1");
  Engine e(tree, config, trial);
  e.srw = srw;
  e.lerw = lerw;
  e.stop_vertex = stop;
  e.run();
  return std::move(e.out);
}

}  // namespace

SimOutcome run_standard_frog(const WeightedTree& tree, const FrogConfig& config, std::uint64_t trial) {
  if (config.model != Model::Standard) fail(Status::InvalidArgument, "config.model must be Standard");
  walks::SrwSampler srw(tree);
  return run_one(tree, config, trial, &srw, nullptr);
}

SimOutcome run_truncated_frog(const WeightedTree& tree, const FrogConfig& config, std::uint64_t trial) {
  if (config.model != Model::Truncated) fail(Status::InvalidArgument, "config.model must be Truncated");
  walks::LerwSampler lerw(tree);
  return run_one(tree, config, trial, nullptr, &lerw);
}

std::vector<SimOutcome> run_trials(const WeightedTree& tree, const FrogConfig& config) {
  std::vector<SimOutcome> outcomes(config.trials);
  const bool truncated = config.model == Model::Truncated;
  std::optional<walks::SrwSampler> srw;
  std::optional<walks::LerwSampler> lerw;
  if (truncated)
    lerw.emplace(tree);
  else
    srw.emplace(tree);
  parallel_for(config.trials, [&](std::uint64_t t) {
    outcomes[t] = run_one(tree, config, t, srw ? &*srw : nullptr, lerw ? &*lerw : nullptr);
  });
  return outcomes;
}

std::vector<unsigned char> SimOutcome::serialize() const {
  std::vector<unsigned char> bytes;
  auto put64 = [&](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
  };
  put64(trial);
  put64(returns_to_root);
  put64(ever_active);
  put64(eliminated);
  put64(absorbed_at_root);
  put64(escaped);
  put64(live_at_horizon);
  put64(activated_count);
  put64(max_activation_depth);
  put64(activation_time.size());
  for (std::int32_t t : activation_time) put64(static_cast<std::uint64_t>(static_cast<std::int64_t>(t)));
  put64(log.size());
  for (const LogRecord& r : log) {
    put64(r.step);
    put64(r.particle);
    put64(r.vertex);
    bytes.push_back(r.code);
  }
  return bytes;
}

ConditionalActivationEstimate estimate_conditional_activation(const WeightedTree& tree,
                                                              const FrogConfig& config, VertexId u_ext,
                                                              std::uint64_t conditioned_target) {
  if (config.model != Model::Truncated)
    fail(Status::InvalidArgument, "conditional activation is a truncated-model observable");
  auto ui = tree.find(u_ext);
  if (!ui) fail(Status::InvalidArgument, "no vertex " + std::to_string(u_ext));
  const VertexIndex u = *ui;
  if (tree.depth(u) < 2) fail(Status::InvalidArgument, "u must be at depth >= 2");
  const VertexIndex parent = tree.parent(u);
  walks::LerwSampler lerw(tree);

  ConditionalActivationEstimate est;
  const std::uint64_t max_raw = conditioned_target * 20;
  // Fixed batch size keeps the sampled trial set independent of the worker
  // count.
  const std::uint64_t chunk = 4096;
  std::uint64_t next_trial = 0;
  while (est.conditioned < conditioned_target && next_trial < max_raw) {
    const std::uint64_t batch = std::min<std::uint64_t>(chunk, max_raw - next_trial);
    std::vector<std::uint8_t> parent_hit(batch, 0), u_hit(batch, 0);
    parallel_for(batch, [&](std::uint64_t i) {
      SimOutcome out = run_one(tree, config, next_trial + i, nullptr, &lerw, u);
      parent_hit[i] = out.activation_time[parent] >= 0;
      u_hit[i] = out.activation_time[u] >= 0;
    });
    for (std::uint64_t i = 0; i < batch; ++i) {
      if (!parent_hit[i]) continue;
      ++est.conditioned;
      est.hits += u_hit[i];
      if (est.conditioned == conditioned_target) break;
    }
    next_trial += batch;
  }
  est.raw_trials = next_trial;
  if (est.conditioned == 0) {
    est.inconclusive = true;
    return est;
  }
  est.p_hat = static_cast<double>(est.hits) / static_cast<double>(est.conditioned);
  est.ci = stats::wilson_interval(est.hits, est.conditioned);
  return est;
}

double measure_level_mass(const SimOutcome& outcome, const WeightedTree& tree,
                          const potential::HarmonicMeasure& level_measure) {
  if (outcome.activation_time.size() != tree.vertex_count())
    fail(Status::InvalidArgument, "outcome does not match tree");
  double mass = 0.0;
  for (std::size_t i = 0; i < level_measure.vertices.size(); ++i)
    if (outcome.activation_time[level_measure.vertices[i]] >= 0) mass += level_measure.mass[i];
  return mass;
}

std::vector<double> ancestor_closed_mass(const SimOutcome& outcome, const WeightedTree& tree,
                                         VertexId v_star, std::uint32_t n, std::uint32_t margin) {
  auto vi = tree.find(v_star);
  if (!vi) fail(Status::InvalidArgument, "no vertex " + std::to_string(v_star));
  if (outcome.activation_time[*vi] < 0)
    fail(Status::InvalidArgument, "ancestor_closed_mass: v_star is not activated");
  std::vector<double> per_level;
  per_level.push_back(1.0);  // level 0: the activated v_star carries full mass
  for (std::uint32_t j = 1; j <= n; ++j) {
    potential::HarmonicMeasure hm = potential::harmonic_measure(tree, v_star, j, margin);
    per_level.push_back(measure_level_mass(outcome, tree, hm));
  }
  return per_level;
}

std::uint64_t count_V(const SimOutcome& outcome, const WeightedTree& tree, VertexId v_ext) {
  if (!outcome.log_enabled) fail(Status::InvalidArgument, "count_V requires the particle log");
  auto vi = tree.find(v_ext);
  if (!vi || *vi == tree.root()) fail(Status::InvalidArgument, "count_V: need a non-root vertex");
  const VertexIndex v = *vi;
  const VertexId parent_ext = tree.external_id(tree.parent(v));
  std::vector<std::uint64_t> seen;
  for (const LogRecord& r : outcome.log) {
    if (r.vertex != parent_ext) continue;
    if (r.code != static_cast<std::uint8_t>(EventCode::Landed) &&
        r.code != static_cast<std::uint8_t>(EventCode::AbsorbedAtRoot))
      continue;
    const VertexIndex origin = static_cast<VertexIndex>(r.particle >> 32);
    if (!tree.in_subtree(origin, v)) continue;
    seen.push_back(r.particle);
  }
  std::sort(seen.begin(), seen.end());
  seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
  return seen.size();
}

DominanceResult dominance_test(const std::vector<std::uint64_t>& standard_returns,
                               const std::vector<std::uint64_t>& truncated_returns, double alpha) {
  if (standard_returns.size() != truncated_returns.size())
    fail(Status::InvalidArgument, "dominance_test: trial counts must match");
  if (standard_returns.empty()) fail(Status::InvalidArgument, "dominance_test: empty samples");
  std::vector<double> a(standard_returns.begin(), standard_returns.end());
  std::vector<double> b(truncated_returns.begin(), truncated_returns.end());
  DominanceResult res;
  res.band = stats::dkw_two_sample_band(a.size(), b.size(), alpha);
  res.sup_difference = stats::ecdf_sup_difference(a, b);
  if (res.band >= 0.25)
    res.verdict = Verdict::Inconclusive;
  else
    res.verdict = res.sup_difference <= res.band ? Verdict::Pass : Verdict::Fail;
  return res;
}

RecurrenceDiagnostics recurrence_diagnostics(unsigned delta, double r, double alpha) {
  if (delta < 3 || r < 1.0) fail(Status::InvalidArgument, "need delta >= 3 and r >= 1");
  RecurrenceDiagnostics d;
  d.alpha = alpha;
  d.beta = (delta - 2.0) / (2.0 * r + delta - 2.0);
  d.n_choice = static_cast<std::uint64_t>(std::floor(std::exp(alpha / 4.0)));
  return d;
}

}  // namespace froglab::frog
