#include "froglab/potential_theory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "froglab/stats.hpp"

namespace froglab::potential {

namespace {

// p = P(from x, hit the neighbor across an edge of resistance r before
// escaping through the rest of x's component, which has resistance S to
// infinity). Written to stay exact at S = 0 and S = +inf.
double step_probability(double S, double r) {
  if (std::isinf(S)) return 1.0;
  return S / (S + r);
}

double parallel(double conductance_sum) { return conductance_sum == 0.0 ? kInf : 1.0 / conductance_sum; }

double conductance(double r, double onward) {
  return std::isinf(onward) ? 0.0 : 1.0 / (r + onward);
}

}  // namespace

BoundaryOptions BoundaryOptions::for_tree(const WeightedTree& tree) {
  BoundaryOptions opts;
  const TreeMeta& m = tree.meta();
  if (m.min_nonroot_interior_degree >= 3 && m.max_resistance >= 1.0)
    opts.cutoff_hi = m.max_resistance / (m.min_nonroot_interior_degree - 2);
  return opts;
}

ScalarTables compute_scalar_tables(const WeightedTree& tree, VertexIndex anchor, double boundary_resistance) {
  ScalarTables t;
  t.anchor = anchor;
  t.boundary = boundary_resistance;
  const std::uint32_t n = tree.vertex_count();
  t.down.assign(n, kInf);
  t.up.assign(n, kInf);
  const std::uint32_t lo = anchor, hix = anchor + tree.subtree_size(anchor);
  // Preorder puts children after parents: sweep backwards for down.
  for (std::uint32_t v = hix; v-- > lo;) {
    if (tree.is_leaf(v)) {
      t.down[v] = tree.is_cutoff_leaf(v) ? boundary_resistance : kInf;
      continue;
    }
    double cs = 0.0;
    for (const VertexIndex* c = tree.children_begin(v); c != tree.children_end(v); ++c)
      cs += conductance(tree.resistance_to_parent(*c), t.down[*c]);
    t.down[v] = parallel(cs);
  }
  // And forwards for up; up[anchor] stays +inf (no parent branch in view).
  for (std::uint32_t v = lo + 1; v < hix; ++v) {
    const VertexIndex p = tree.parent(v);
    double cs = std::isinf(t.up[p]) ? 0.0 : 1.0 / t.up[p];
    for (const VertexIndex* c = tree.children_begin(p); c != tree.children_end(p); ++c)
      if (*c != v) cs += conductance(tree.resistance_to_parent(*c), t.down[*c]);
    t.up[v] = tree.resistance_to_parent(v) + parallel(cs);
  }
  return t;
}

double away_from(const WeightedTree& tree, const ScalarTables& t, VertexIndex v, VertexIndex exclude) {
  if (exclude != kNoVertex && exclude == tree.parent(v) && v != t.anchor) return t.down[v];
  double cs = 0.0;
  if (v != t.anchor && !std::isinf(t.up[v])) cs += 1.0 / t.up[v];
  for (const VertexIndex* c = tree.children_begin(v); c != tree.children_end(v); ++c)
    if (*c != exclude) cs += conductance(tree.resistance_to_parent(*c), t.down[*c]);
  return parallel(cs);
}

Tables::Tables(const WeightedTree& tree, VertexIndex anchor, BoundaryOptions opts)
    : lo_(compute_scalar_tables(tree, anchor, opts.cutoff_lo)),
      hi_(compute_scalar_tables(tree, anchor, opts.cutoff_hi)),
      certified_(std::isfinite(opts.cutoff_hi)) {}

ResistanceBracket resistance_to_infinity(const WeightedTree& tree, VertexId v_ext,
                                         std::optional<VertexId> retained) {
  auto vi = tree.find(v_ext);
  if (!vi) fail(Status::InvalidArgument, "no vertex " + std::to_string(v_ext));
  const VertexIndex v = *vi;
  if (tree.is_cutoff_leaf(v))
    fail(Status::InvalidArgument, "vertex " + std::to_string(v_ext) + " is a cutoff leaf");
  Tables tables(tree, tree.root(), BoundaryOptions::for_tree(tree));
  ResistanceBracket out;
  out.depth = tree.depth_cutoff();
  Bracket r;
  if (retained) {
    auto ui = tree.find(*retained);
    if (!ui) fail(Status::InvalidArgument, "no vertex " + std::to_string(*retained));
    const VertexIndex u = *ui;
    const bool u_parent = v != tree.root() && tree.parent(v) == u;
    const bool u_child = tree.parent(u) == v;
    if (!u_parent && !u_child)
      fail(Status::InvalidArgument, "retained vertex is not a neighbor of " + std::to_string(v_ext));
    const double edge_r = u_parent ? tree.resistance_to_parent(v) : tree.resistance_to_parent(u);
    r = {edge_r + away_from(tree, tables.lo(), u, v), edge_r + away_from(tree, tables.hi(), u, v)};
  } else {
    r = tables.away(tree, v, kNoVertex);
  }
  out.lower = r.lo;
  out.upper = r.hi;
  out.escape_certain = std::isfinite(r.hi);
  return out;
}

namespace {

std::vector<VertexIndex> path_between(const WeightedTree& tree, VertexIndex a, VertexIndex b) {
  std::vector<VertexIndex> up_a{a}, up_b{b};
  VertexIndex x = a, y = b;
  while (x != y) {
    if (tree.depth(x) >= tree.depth(y)) {
      x = tree.parent(x);
      up_a.push_back(x);
    } else {
      y = tree.parent(y);
      up_b.push_back(y);
    }
  }
  up_a.insert(up_a.end(), up_b.rbegin(), up_b.rend() - 1);
  return up_a;
}

}  // namespace

Bracket hitting_probability(const WeightedTree& tree, VertexId from_ext, VertexId to_ext) {
  auto fi = tree.find(from_ext), ti = tree.find(to_ext);
  if (!fi || !ti) fail(Status::InvalidArgument, "hitting_probability: unknown vertex");
  if (*fi == *ti) fail(Status::InvalidArgument, "hitting_probability: from == to");
  Tables tables(tree, tree.root(), BoundaryOptions::for_tree(tree));
  const auto path = path_between(tree, *fi, *ti);
  Bracket p{1.0, 1.0};
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const VertexIndex x = path[i], y = path[i + 1];
    const double r = tree.parent(x) == y ? tree.resistance_to_parent(x) : tree.resistance_to_parent(y);
    p.lo *= step_probability(away_from(tree, tables.lo(), x, y), r);
    p.hi *= step_probability(away_from(tree, tables.hi(), x, y), r);
  }
  return p;
}

ResistanceBracket radial_branch_resistance(unsigned children_per_vertex, double r, std::uint32_t depth) {
  if (children_per_vertex < 2) fail(Status::InvalidArgument, "need at least two onward children");
  if (!(r > 0.0)) fail(Status::InvalidArgument, "resistance must be positive");
  if (depth < 1) fail(Status::InvalidArgument, "depth must be >= 1");
  const double m = children_per_vertex;
  const double cap = r / (m - 1.0);  // subtree resistance of the exact continuation
  double lo = 0.0, hi = cap;
  // down_k = (r + down_{k+1}) / m, applied from the cutoff to one level below v.
  for (std::uint32_t k = 0; k + 1 < depth; ++k) {
    lo = (r + lo) / m;
    hi = (r + hi) / m;
  }
  ResistanceBracket out;
  out.lower = r + lo;
  out.upper = r + hi;
  out.depth = depth;
  out.escape_certain = true;
  return out;
}

// ---- harmonic measure ----

namespace {

struct HarmPass {
  std::vector<VertexIndex> vertices;
  std::vector<double> mass;
  bool degenerate = false;
};

// Exact exit law over level n of T(base) for one boundary network.
HarmPass harm_exact(const WeightedTree& tree, VertexIndex base, std::uint32_t n, double boundary) {
  HarmPass pass;
  if (std::isinf(boundary)) {
    // No escape route at all: the measure is not defined on this network.
    pass.degenerate = true;
    return pass;
  }
  ScalarTables t = compute_scalar_tables(tree, base, boundary);
  const std::uint32_t target = tree.depth(base) + n;
  const std::uint32_t end = base + tree.subtree_size(base);
  // prob_to[v] = P(walk from base hits v), filled along the preorder sweep.
  std::vector<double> prob_to(end - base, 0.0);
  prob_to[0] = 1.0;
  for (std::uint32_t v = base; v < end; ++v) {
    if (tree.depth(v) >= target) {
      if (tree.depth(v) == target) {
        const double cd = std::isinf(t.down[v]) ? 0.0 : 1.0 / t.down[v];
        const double cu = std::isinf(t.up[v]) ? 0.0 : 1.0 / t.up[v];
        const double escape_below = (cd + cu) == 0.0 ? 0.0 : cd / (cd + cu);
        pass.vertices.push_back(v);
        pass.mass.push_back(prob_to[v - base] * escape_below);
      }
      continue;
    }
    for (const VertexIndex* c = tree.children_begin(v); c != tree.children_end(v); ++c) {
      const double S = away_from(tree, t, v, *c);
      prob_to[*c - base] = prob_to[v - base] * step_probability(S, tree.resistance_to_parent(*c));
    }
  }
  return pass;
}

}  // namespace

HarmonicMeasure harmonic_measure(const WeightedTree& tree, VertexId v_ext, std::uint32_t n,
                                 std::uint32_t margin) {
  auto vi = tree.find(v_ext);
  if (!vi) fail(Status::InvalidArgument, "no vertex " + std::to_string(v_ext));
  const VertexIndex base = *vi;
  if (n < 1) fail(Status::InvalidArgument, "harmonic_measure: level must be >= 1");
  const std::uint32_t available = tree.depth_cutoff() - tree.depth(base);
  if (n + margin > available)
    fail(Status::DepthExceeded, "harmonic_measure: level " + std::to_string(n) + " + margin " +
                                    std::to_string(margin) + " exceeds available depth " +
                                    std::to_string(available));
  const std::uint32_t end = base + tree.subtree_size(base);
  for (std::uint32_t v = base; v < end; ++v)
    if (tree.is_true_leaf(v) && tree.depth(v) < tree.depth(base) + n)
      fail(Status::InvalidArgument, "harmonic_measure: subtree has a true leaf above level " + std::to_string(n));

  BoundaryOptions opts = BoundaryOptions::for_tree(tree);
  HarmPass lo = harm_exact(tree, base, n, opts.cutoff_lo);
  HarmPass hi = harm_exact(tree, base, n, opts.cutoff_hi);

  HarmonicMeasure hm;
  hm.base = base;
  hm.level = n;
  hm.vertices = lo.vertices;
  hm.boundary_certified = !hi.degenerate;
  hm.mass.resize(lo.mass.size());
  hm.uncertainty.resize(lo.mass.size());
  double total = 0.0;
  for (std::size_t i = 0; i < lo.mass.size(); ++i) {
    const double a = lo.mass[i];
    const double b = hi.degenerate ? lo.mass[i] : hi.mass[i];
    hm.mass[i] = 0.5 * (a + b);
    hm.uncertainty[i] = 0.5 * std::fabs(a - b);
    total += hm.mass[i];
  }
  hm.residual = 1.0 - total;
  return hm;
}

// ---- return probabilities ----

namespace {

struct RadialProfile {
  bool ok = false;
  std::uint32_t inner_children = 0;
};

RadialProfile radial_profile(const WeightedTree& tree) {
  RadialProfile prof;
  double r = -1.0;
  std::uint32_t inner = 0;
  for (std::uint32_t v = 0; v < tree.vertex_count(); ++v) {
    if (v > 0) {
      if (r < 0)
        r = tree.resistance_to_parent(v);
      else if (tree.resistance_to_parent(v) != r)
        return prof;
    }
    if (v == 0 || tree.is_leaf(v)) continue;
    if (inner == 0)
      inner = tree.child_count(v);
    else if (tree.child_count(v) != inner)
      return prof;
  }
  if (inner == 0) return prof;  // nothing below depth 1; no continuation profile
  if (tree.is_true_leaf(0) || tree.child_count(0) == 0) return prof;
  for (std::uint32_t v = 0; v < tree.vertex_count(); ++v)
    if (tree.is_true_leaf(v)) return prof;
  prof.ok = true;
  prof.inner_children = inner;
  return prof;
}

std::vector<double> radial_step_distribution(std::uint32_t inner_children, std::uint32_t steps,
                                             std::vector<double>& at_root_by_step) {
  // Distance-from-root chain of the homogeneous infinite tree. Mass further
  // than `steps` from the root cannot return within the horizon, so the state
  // space is truncated there exactly.
  const std::uint32_t cap = steps + 1;
  std::vector<double> mass(cap + 1, 0.0), next(cap + 1, 0.0);
  mass[0] = 1.0;
  const double up = 1.0 / (inner_children + 1.0);
  at_root_by_step.assign(steps, 0.0);
  for (std::uint32_t t = 0; t < steps; ++t) {
    std::fill(next.begin(), next.end(), 0.0);
    next[1] += mass[0];
    for (std::uint32_t k = 1; k <= cap; ++k) {
      if (mass[k] == 0.0) continue;
      next[k - 1] += mass[k] * up;
      if (k + 1 <= cap) next[k + 1] += mass[k] * (1.0 - up);
    }
    mass.swap(next);
    at_root_by_step[t] = mass[0];
  }
  return mass;
}

std::vector<double> vertex_chain_root_mass(const WeightedTree& tree, std::uint32_t steps,
                                           bool absorb_at_cutoff, std::uint32_t drop_beyond_depth) {
  const std::uint32_t n = tree.vertex_count();
  std::vector<double> mass(n, 0.0), next(n, 0.0);
  std::vector<double> csum(n, 0.0);
  for (std::uint32_t v = 0; v < n; ++v) {
    if (v > 0) csum[v] += 1.0 / tree.resistance_to_parent(v);
    for (const VertexIndex* c = tree.children_begin(v); c != tree.children_end(v); ++c)
      csum[v] += 1.0 / tree.resistance_to_parent(*c);
  }
  mass[0] = 1.0;
  std::vector<double> at_root(steps, 0.0);
  for (std::uint32_t t = 0; t < steps; ++t) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::uint32_t v = 0; v < n; ++v) {
      const double m = mass[v];
      if (m == 0.0) continue;
      if (absorb_at_cutoff && tree.is_cutoff_leaf(v)) continue;
      if (tree.depth(v) > drop_beyond_depth) continue;
      for (const VertexIndex* c = tree.children_begin(v); c != tree.children_end(v); ++c)
        next[*c] += m * (1.0 / tree.resistance_to_parent(*c)) / csum[v];
      if (v != 0) next[tree.parent(v)] += m * (1.0 / tree.resistance_to_parent(v)) / csum[v];
    }
    mass.swap(next);
    at_root[t] = mass[0];
  }
  return at_root;
}

}  // namespace

SpectralEstimate return_probability_sequence(const WeightedTree& tree, std::uint32_t N) {
  if (N < 1) fail(Status::InvalidArgument, "return_probability_sequence: N must be >= 1");
  SpectralEstimate est;
  est.tree_tag = tree.tag();
  RadialProfile prof = radial_profile(tree);
  std::vector<double> at_root;
  if (prof.ok) {
    est.radial = true;
    radial_step_distribution(prof.inner_children, 2 * N, at_root);
  } else {
    if (tree.depth_cutoff() < N + 1)
      fail(Status::DepthExceeded, "return_probability_sequence: need depth >= N+1 on non-homogeneous trees");
    at_root = vertex_chain_root_mass(tree, 2 * N, false, N + 1);
  }
  est.p2n.resize(N);
  for (std::uint32_t k = 1; k <= N; ++k) est.p2n[k - 1] = at_root[2 * k - 1];
  est.rho_max_root = 0.0;
  for (std::uint32_t k = 1; k <= N; ++k)
    if (est.p2n[k - 1] > 0.0)
      est.rho_max_root = std::max(est.rho_max_root, std::pow(est.p2n[k - 1], 1.0 / (2.0 * k)));
  // Tail fit log p_{2n} = a + b log n + (2n) log rho.
  std::vector<double> u, t, y;
  for (std::uint32_t k = std::max<std::uint32_t>(4, N / 2); k <= N; ++k) {
    if (est.p2n[k - 1] <= 0.0) continue;
    u.push_back(std::log(static_cast<double>(k)));
    t.push_back(2.0 * k);
    y.push_back(std::log(est.p2n[k - 1]));
  }
  auto fit = stats::fit_three_param(u, t, y);
  if (fit.ok) {
    est.rho_extrapolated = std::exp(fit.s);
    est.fit_residual_rms = fit.residual_rms;
  } else {
    est.rho_extrapolated = est.rho_max_root;
  }
  return est;
}

std::vector<double> root_visit_probabilities(const WeightedTree& tree, std::uint32_t horizon) {
  if (horizon < 1) fail(Status::InvalidArgument, "horizon must be >= 1");
  return vertex_chain_root_mass(tree, horizon, true, tree.depth_cutoff());
}

// ---- harmonic measure vs return probability ----

HarmReturnReport verify_harm_return_comparison(const WeightedTree& tree, VertexId v_ext, std::uint32_t n,
                                               std::uint32_t margin) {
  auto vi = tree.find(v_ext);
  if (!vi) fail(Status::InvalidArgument, "no vertex " + std::to_string(v_ext));
  const VertexIndex v = *vi;
  if (tree.depth(v) != 2) fail(Status::InvalidArgument, "verify_harm_return_comparison: v must be at depth 2");
  TreeClassReport cls = validate_bounded_class(tree);
  if (!cls.passed) fail(Status::InvalidArgument, "tree fails the bounded-class check");
  const double Delta = cls.max_degree;
  const double r = cls.max_resistance;

  HarmonicMeasure hm = harmonic_measure(tree, v_ext, n, margin);
  Tables tables(tree, tree.root(), BoundaryOptions::for_tree(tree));

  // Escape from v through a root child other than v's ancestor branch.
  const VertexIndex ancestor_child = [&] {
    VertexIndex x = v;
    while (tree.parent(x) != tree.root()) x = tree.parent(x);
    return x;
  }();
  Bracket reach_root = hitting_probability(tree, v_ext, tree.external_id(tree.root()));
  double other_lo = 0.0, other_hi = 0.0, anc_lo = 0.0, anc_hi = 0.0;
  for (const VertexIndex* c = tree.children_begin(tree.root()); c != tree.children_end(tree.root()); ++c) {
    const double cl = conductance(tree.resistance_to_parent(*c), tables.lo().down[*c]);
    const double ch = conductance(tree.resistance_to_parent(*c), tables.hi().down[*c]);
    if (*c == ancestor_child) {
      anc_lo = cl;
      anc_hi = ch;
    } else {
      // Larger onward resistance means smaller conductance.
      other_lo += ch;
      other_hi += cl;
    }
  }
  Bracket root_other{other_lo == 0.0 ? 0.0 : other_lo / (other_lo + anc_hi),
                     other_hi == 0.0 ? 0.0 : other_hi / (other_hi + anc_lo)};
  Bracket p_away{reach_root.lo * root_other.lo, reach_root.hi * root_other.hi};

  HarmReturnReport rep;
  rep.root_escape_factor = 1.0 / (4.0 * Delta * Delta * r * r * r);
  // Chain floor: ratio >= conductance(v to infinity in T(v)) / (sum of edge
  // conductances at u) * root escape factor; edge conductances are at most 1
  // and there are at most Delta of them.
  const double Rv_hi = tables.hi().down[v];
  rep.floor = (1.0 / Rv_hi) * (1.0 / Delta) * rep.root_escape_factor;

  double min_lo = kInf, min_mid = kInf, max_mid = 0.0;
  VertexIndex argmin = v;
  for (std::size_t i = 0; i < hm.vertices.size(); ++i) {
    const VertexIndex u = hm.vertices[i];
    Bracket hit_v = hitting_probability(tree, tree.external_id(u), v_ext);
    Bracket p0{hit_v.lo * p_away.lo, hit_v.hi * p_away.hi};
    const double m_hi = hm.mass[i] + hm.uncertainty[i];
    const double ratio_lo = m_hi <= 0.0 ? 0.0 : p0.lo / m_hi;
    const double ratio_mid = hm.mass[i] <= 0.0 ? kInf : 0.5 * (p0.lo + p0.hi) / hm.mass[i];
    if (ratio_mid < min_mid) {
      min_mid = ratio_mid;
      argmin = u;
    }
    max_mid = std::max(max_mid, ratio_mid);
    min_lo = std::min(min_lo, ratio_lo);
  }
  rep.empirical_min_lo = min_lo;
  rep.empirical_min_mid = min_mid;
  rep.empirical_max_mid = max_mid;
  rep.argmin = tree.external_id(argmin);
  rep.certified = min_lo >= rep.floor;
  rep.uncertain = !rep.certified && min_mid >= rep.floor;
  return rep;
}

// ---- csv ----

void emit_resistance_csv(const WeightedTree& tree, const std::string& path, const std::string& header) {
  std::ofstream out(path);
  if (!out) fail(Status::IoError, "cannot write " + path);
  out << header << "vertex,lower,upper,depth\n";
  Tables tables(tree, tree.root(), BoundaryOptions::for_tree(tree));
  for (std::uint32_t v = 0; v < tree.vertex_count(); ++v) {
    if (tree.is_cutoff_leaf(v)) continue;
    Bracket b = tables.away(tree, v, kNoVertex);
    out << tree.external_id(v) << "," << b.lo << "," << b.hi << "," << tree.depth(v) << "\n";
  }
}

void emit_harm_csv(const WeightedTree& tree, const HarmonicMeasure& hm, const std::string& path,
                   const std::string& header) {
  std::ofstream out(path);
  if (!out) fail(Status::IoError, "cannot write " + path);
  out << header << "vertex,mass\n";
  for (std::size_t i = 0; i < hm.vertices.size(); ++i)
    out << tree.external_id(hm.vertices[i]) << "," << hm.mass[i] << "\n";
}

void emit_rho_csv(const SpectralEstimate& est, const std::string& path, const std::string& header) {
  std::ofstream out(path);
  if (!out) fail(Status::IoError, "cannot write " + path);
  out << header << "n,p2n,root_estimate\n";
  for (std::size_t k = 1; k <= est.p2n.size(); ++k) {
    const double p = est.p2n[k - 1];
    out << k << "," << p << "," << (p > 0 ? std::pow(p, 1.0 / (2.0 * k)) : 0.0) << "\n";
  }
}

}  // namespace froglab::potential
