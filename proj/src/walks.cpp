#include "froglab/walks.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace froglab::walks {

namespace {

bool contains(const std::vector<VertexIndex>& xs, VertexIndex v) {
  return std::find(xs.begin(), xs.end(), v) != xs.end();
}

}  // namespace

std::string WalkPath::to_string(const WeightedTree& tree) const {
  std::ostringstream out;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    if (i) out << ' ';
    out << tree.external_id(vertices[i]);
  }
  return out.str();
}

WalkPath srw_path(const WeightedTree& tree, VertexIndex start, const std::vector<VertexIndex>& absorbers,
                  std::uint64_t horizon, RngStream& rng) {
  if (start >= tree.vertex_count()) fail(Status::InvalidArgument, "srw_path: bad start vertex");
  if (horizon < 1) fail(Status::InvalidArgument, "srw_path: horizon must be >= 1");
  WalkPath path;
  path.kind = PathKind::Raw;
  path.vertices.push_back(start);
  if (contains(absorbers, start)) {
    path.reason = TerminalReason::HitAbsorber;
    return path;
  }
  SrwSampler sampler(tree);
  VertexIndex pos = start;
  for (std::uint64_t t = 0; t < horizon; ++t) {
    pos = sampler.step(pos, rng);
    path.vertices.push_back(pos);
    if (contains(absorbers, pos)) {
      path.reason = TerminalReason::HitAbsorber;
      return path;
    }
    if (tree.is_cutoff_leaf(pos)) {
      path.reason = TerminalReason::Escaped;
      return path;
    }
  }
  path.reason = TerminalReason::HorizonReached;
  return path;
}

WalkPath loop_erase(const WeightedTree& tree, const WalkPath& path) {
  if (path.kind != PathKind::Raw) fail(Status::InvalidArgument, "loop_erase expects a raw path");
  if (path.vertices.empty()) fail(Status::InvalidArgument, "loop_erase: empty path");
  std::vector<std::int32_t> at(tree.vertex_count(), -1);
  WalkPath out;
  out.kind = PathKind::LoopErased;
  out.reason = path.reason;
  for (VertexIndex v : path.vertices) {
    if (at[v] >= 0) {
      while (static_cast<std::int32_t>(out.vertices.size()) > at[v] + 1) {
        at[out.vertices.back()] = -1;
        out.vertices.pop_back();
      }
    } else {
      at[v] = static_cast<std::int32_t>(out.vertices.size());
      out.vertices.push_back(v);
    }
  }
  return out;
}

// ---- reported one-step laws (bracketed) ----

namespace {

struct NeighborView {
  std::vector<VertexIndex> ids;
  std::vector<double> edge_r;
};

NeighborView neighbors_of(const WeightedTree& tree, VertexIndex v) {
  NeighborView nb;
  if (v != tree.root()) {
    nb.ids.push_back(tree.parent(v));
    nb.edge_r.push_back(tree.resistance_to_parent(v));
  }
  for (const VertexIndex* c = tree.children_begin(v); c != tree.children_end(v); ++c) {
    nb.ids.push_back(*c);
    nb.edge_r.push_back(tree.resistance_to_parent(*c));
  }
  return nb;
}

// Conductance of the branch from v toward neighbor u: 1/(r_edge + S) where S
// is the resistance from u onward avoiding v. Low endpoint uses the high
// resistance table.
void branch_conductances(const WeightedTree& tree, const potential::Tables& tables, VertexIndex v,
                         const NeighborView& nb, std::vector<double>& clo, std::vector<double>& chi) {
  clo.resize(nb.ids.size());
  chi.resize(nb.ids.size());
  for (std::size_t i = 0; i < nb.ids.size(); ++i) {
    const double s_lo = potential::away_from(tree, tables.lo(), nb.ids[i], v);
    const double s_hi = potential::away_from(tree, tables.hi(), nb.ids[i], v);
    clo[i] = std::isinf(s_hi) ? 0.0 : 1.0 / (nb.edge_r[i] + s_hi);
    chi[i] = std::isinf(s_lo) ? 0.0 : 1.0 / (nb.edge_r[i] + s_lo);
  }
}

}  // namespace

StepLaw lerw_first_step(const WeightedTree& tree, const potential::Tables& tables, VertexIndex v) {
  NeighborView nb = neighbors_of(tree, v);
  std::vector<double> clo, chi;
  branch_conductances(tree, tables, v, nb, clo, chi);
  StepLaw law;
  law.neighbors = nb.ids;
  const std::size_t n = nb.ids.size();
  law.mass.resize(n);
  law.lo.resize(n);
  law.hi.resize(n);
  double sum_lo = 0, sum_hi = 0, sum_mid = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sum_lo += clo[i];
    sum_hi += chi[i];
  }
  if (sum_hi <= 0.0) fail(Status::InvalidArgument, "lerw_first_step: no escape route from vertex");
  for (std::size_t i = 0; i < n; ++i) {
    const double other_lo = sum_lo - clo[i];
    const double other_hi = sum_hi - chi[i];
    law.lo[i] = clo[i] <= 0.0 ? 0.0 : clo[i] / (clo[i] + other_hi);
    law.hi[i] = chi[i] <= 0.0 ? 0.0 : chi[i] / (chi[i] + other_lo);
    law.mass[i] = 0.5 * (clo[i] + chi[i]);
    sum_mid += law.mass[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    law.mass[i] /= sum_mid;
    law.total_uncertainty = std::max(law.total_uncertainty, law.hi[i] - law.lo[i]);
  }
  return law;
}

StepLaw lerw_next_step(const WeightedTree& tree, const potential::Tables& tables, VertexIndex v,
                       VertexIndex came_from) {
  if (v == tree.root())
    fail(Status::InvalidArgument, "lerw_next_step: the chain is absorbed at the root");
  NeighborView nb = neighbors_of(tree, v);
  std::size_t from_slot = nb.ids.size();
  for (std::size_t i = 0; i < nb.ids.size(); ++i)
    if (nb.ids[i] == came_from) from_slot = i;
  if (from_slot == nb.ids.size()) fail(Status::InvalidArgument, "lerw_next_step: came_from is not a neighbor");
  std::vector<double> clo, chi;
  branch_conductances(tree, tables, v, nb, clo, chi);

  // Denominator (1 - p(v, came_from)) * (1/r_from + sum_{j != from} c_j); the
  // escape probability uses the resistance from v avoiding came_from.
  const double r_from = nb.edge_r[from_slot];
  const double s_avoid_lo = potential::away_from(tree, tables.lo(), v, came_from);
  const double s_avoid_hi = potential::away_from(tree, tables.hi(), v, came_from);
  const double one_minus_p_lo = std::isinf(s_avoid_hi) ? 0.0 : r_from / (r_from + s_avoid_hi);
  const double one_minus_p_hi = std::isinf(s_avoid_lo) ? 1.0 : r_from / (r_from + s_avoid_lo);
  double other_lo = 0, other_hi = 0;
  for (std::size_t i = 0; i < nb.ids.size(); ++i) {
    if (i == from_slot) continue;
    other_lo += clo[i];
    other_hi += chi[i];
  }
  const double den_lo = one_minus_p_lo * (1.0 / r_from + other_lo);
  const double den_hi = one_minus_p_hi * (1.0 / r_from + other_hi);

  StepLaw law;
  double sum_mid = 0;
  for (std::size_t i = 0; i < nb.ids.size(); ++i) {
    if (i == from_slot) continue;
    law.neighbors.push_back(nb.ids[i]);
    law.lo.push_back(den_hi <= 0.0 ? 0.0 : std::min(1.0, clo[i] / den_hi));
    law.hi.push_back(den_lo <= 0.0 ? 1.0 : std::min(1.0, chi[i] / den_lo));
    const double mid = 0.5 * (clo[i] + chi[i]);
    law.mass.push_back(mid);
    sum_mid += mid;
  }
  if (sum_mid <= 0.0) fail(Status::InvalidArgument, "lerw_next_step: no allowed continuation");
  for (std::size_t i = 0; i < law.mass.size(); ++i) {
    law.mass[i] /= sum_mid;
    law.total_uncertainty = std::max(law.total_uncertainty, law.hi[i] - law.lo[i]);
  }
  return law;
}

// ---- samplers ----

LerwSampler::LerwSampler(const WeightedTree& tree) : tree_(tree) {
  const std::uint32_t n = tree.vertex_count();
  potential::ScalarTables t = potential::compute_scalar_tables(tree, tree.root(), 0.0);
  offset_.assign(n + 1, 0);
  for (std::uint32_t v = 0; v < n; ++v) offset_[v + 1] = offset_[v] + tree.degree(v);
  neighbor_.resize(offset_[n]);
  weight_.resize(offset_[n]);
  total_.assign(n, 0.0);
  for (std::uint32_t v = 0; v < n; ++v) {
    std::uint32_t slot = offset_[v];
    NeighborView nb = neighbors_of(tree, v);
    for (std::size_t i = 0; i < nb.ids.size(); ++i, ++slot) {
      neighbor_[slot] = nb.ids[i];
      const double s = potential::away_from(tree, t, nb.ids[i], v);
      weight_[slot] = std::isinf(s) ? 0.0 : 1.0 / (nb.edge_r[i] + s);
      total_[v] += weight_[slot];
    }
  }
}

VertexIndex LerwSampler::first_step(VertexIndex v, RngStream& rng) const {
  const double total = total_[v];
  if (total <= 0.0) fail(Status::InvalidArgument, "lerw sampler: stuck vertex");
  double x = rng.uniform01() * total;
  for (std::uint32_t s = offset_[v]; s < offset_[v + 1]; ++s) {
    x -= weight_[s];
    if (x <= 0.0) return neighbor_[s];
  }
  return neighbor_[offset_[v + 1] - 1];
}

VertexIndex LerwSampler::next_step(VertexIndex v, VertexIndex came_from, RngStream& rng) const {
  // Conditional law is proportional to the branch conductances without the
  // incoming branch; rejection from the unconditional law realizes it.
  for (int attempt = 0; attempt < 64; ++attempt) {
    VertexIndex u = first_step(v, rng);
    if (u != came_from) return u;
  }
  double total = 0.0;
  for (std::uint32_t s = offset_[v]; s < offset_[v + 1]; ++s)
    if (neighbor_[s] != came_from) total += weight_[s];
  if (total <= 0.0) fail(Status::InvalidArgument, "lerw sampler: no allowed continuation");
  double x = rng.uniform01() * total;
  VertexIndex last = came_from;
  for (std::uint32_t s = offset_[v]; s < offset_[v + 1]; ++s) {
    if (neighbor_[s] == came_from) continue;
    last = neighbor_[s];
    x -= weight_[s];
    if (x <= 0.0) return last;
  }
  return last;
}

WalkPath LerwSampler::sample(VertexIndex start, std::uint64_t horizon, RngStream& rng) const {
  WalkPath path;
  path.kind = PathKind::LoopErased;
  path.vertices.push_back(start);
  if (start == tree_.root()) {
    path.reason = TerminalReason::HitAbsorber;
    return path;
  }
  if (tree_.is_cutoff_leaf(start)) {
    path.reason = TerminalReason::Escaped;
    return path;
  }
  VertexIndex pos = start, prev = kNoVertex;
  for (std::uint64_t t = 0; t < horizon; ++t) {
    VertexIndex nxt = prev == kNoVertex ? first_step(pos, rng) : next_step(pos, prev, rng);
    path.vertices.push_back(nxt);
    if (nxt == tree_.root()) {
      path.reason = TerminalReason::HitAbsorber;
      return path;
    }
    if (tree_.is_cutoff_leaf(nxt)) {
      path.reason = TerminalReason::Escaped;
      return path;
    }
    prev = pos;
    pos = nxt;
  }
  path.reason = TerminalReason::HorizonReached;
  return path;
}

SrwSampler::SrwSampler(const WeightedTree& tree) : tree_(tree) {
  const std::uint32_t n = tree.vertex_count();
  offset_.assign(n + 1, 0);
  for (std::uint32_t v = 0; v < n; ++v) offset_[v + 1] = offset_[v] + tree.degree(v);
  neighbor_.resize(offset_[n]);
  cumulative_.resize(offset_[n]);
  for (std::uint32_t v = 0; v < n; ++v) {
    std::uint32_t slot = offset_[v];
    double acc = 0.0;
    if (v != tree.root()) {
      acc += 1.0 / tree.resistance_to_parent(v);
      neighbor_[slot] = tree.parent(v);
      cumulative_[slot] = acc;
      ++slot;
    }
    for (const VertexIndex* c = tree.children_begin(v); c != tree.children_end(v); ++c, ++slot) {
      acc += 1.0 / tree.resistance_to_parent(*c);
      neighbor_[slot] = *c;
      cumulative_[slot] = acc;
    }
  }
}

VertexIndex SrwSampler::step(VertexIndex v, RngStream& rng) const {
  const std::uint32_t begin = offset_[v], end = offset_[v + 1];
  if (begin == end) fail(Status::InvalidArgument, "srw sampler: isolated vertex");
  const double x = rng.uniform01() * cumulative_[end - 1];
  for (std::uint32_t s = begin; s < end; ++s)
    if (x <= cumulative_[s]) return neighbor_[s];
  return neighbor_[end - 1];
}

// ---- bound verification ----

TransitionBoundReport verify_transition_bounds(const WeightedTree& tree, std::uint32_t depth_limit) {
  TreeClassReport cls = validate_bounded_class(tree);
  if (!cls.passed)
    fail(Status::InvalidArgument, "verify_transition_bounds: tree fails the bounded-class check");
  const double delta = cls.min_degree, Delta = cls.max_degree, r = cls.max_resistance;
  TransitionBoundReport rep;
  rep.first_step_lower = 1.0 / (2.0 * Delta * r);
  rep.first_step_upper = r / (r + delta - 2.0);
  rep.next_step_lower = 1.0 / (2.0 * Delta * r * r);
  const double tol = 1e-12;

  potential::Tables tables(tree, tree.root(), potential::BoundaryOptions::for_tree(tree));
  for (std::uint32_t v = 0; v < tree.vertex_count(); ++v) {
    if (tree.is_leaf(v) || tree.depth(v) > depth_limit) continue;
    StepLaw first = lerw_first_step(tree, tables, v);
    for (std::size_t i = 0; i < first.neighbors.size(); ++i) {
      ++rep.first_step_checked;
      rep.extremal_first_min = std::min(rep.extremal_first_min, first.mass[i]);
      rep.extremal_first_max = std::max(rep.extremal_first_max, first.mass[i]);
      const bool below = first.hi[i] < rep.first_step_lower - tol;
      const bool above = first.lo[i] > rep.first_step_upper + tol;
      const bool certified =
          first.lo[i] >= rep.first_step_lower - tol && first.hi[i] <= rep.first_step_upper + tol;
      std::ostringstream what;
      what << "first-step mass at vertex " << tree.external_id(v) << " -> "
           << tree.external_id(first.neighbors[i]) << " in [" << first.lo[i] << ", " << first.hi[i] << "]";
      if (below || above)
        rep.violations.push_back(what.str());
      else if (!certified)
        rep.uncertain.push_back(what.str());
    }
    if (v == tree.root()) continue;
    NeighborView nb = neighbors_of(tree, v);
    for (VertexIndex from : nb.ids) {
      StepLaw next = lerw_next_step(tree, tables, v, from);
      for (std::size_t i = 0; i < next.neighbors.size(); ++i) {
        ++rep.next_step_checked;
        rep.extremal_next_min = std::min(rep.extremal_next_min, next.mass[i]);
        std::ostringstream what;
        what << "next-step mass at vertex " << tree.external_id(v) << " (from "
             << tree.external_id(from) << ") -> " << tree.external_id(next.neighbors[i]) << " in ["
             << next.lo[i] << ", " << next.hi[i] << "]";
        if (next.hi[i] < rep.next_step_lower - tol)
          rep.violations.push_back(what.str());
        else if (next.lo[i] < rep.next_step_lower - tol)
          rep.uncertain.push_back(what.str());
      }
    }
  }
  return rep;
}

}  // namespace froglab::walks
