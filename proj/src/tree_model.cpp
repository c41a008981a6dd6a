#include "froglab/tree_model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <sstream>

#include "froglab/rng.hpp"

namespace froglab {

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, p);
}

std::uint64_t fnv1a(std::uint64_t h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (i * 8)) & 0xffu;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t double_bits(double d) {
  std::uint64_t u;
  static_assert(sizeof u == sizeof d);
  std::memcpy(&u, &d, sizeof u);
  return u;
}

}  // namespace

VertexIndex WeightedTree::Builder::add_root(VertexId id) {
  if (!nodes.empty()) fail(Status::InvalidArgument, "tree already has a root");
  nodes.push_back(Node{id, kNoVertex, 0.0, {}, LeafMode::TrueLeaf, 0});
  return 0;
}

VertexIndex WeightedTree::Builder::add_child(VertexIndex parent, VertexId id, double resistance) {
  if (parent >= nodes.size()) fail(Status::InvalidArgument, "add_child: no such parent");
  if (!(resistance > 0.0)) fail(Status::InvalidArgument, "edge resistance must be positive");
  auto v = static_cast<VertexIndex>(nodes.size());
  nodes.push_back(Node{id, parent, resistance, {}, LeafMode::TrueLeaf, nodes[parent].depth + 1});
  nodes[parent].children.push_back(v);
  return v;
}

void WeightedTree::Builder::set_leaf_mode(VertexIndex v, LeafMode mode) {
  if (v >= nodes.size()) fail(Status::InvalidArgument, "set_leaf_mode: no such vertex");
  nodes[v].mode = mode;
}

void WeightedTree::Builder::mark_cutoff_leaves_at_max_depth() {
  std::uint32_t max_depth = 0;
  for (const Node& n : nodes) max_depth = std::max(max_depth, n.depth);
  for (Node& n : nodes)
    if (n.children.empty() && n.depth == max_depth) n.mode = LeafMode::ContinuesToInfinity;
}

WeightedTree WeightedTree::Builder::finish(std::uint64_t vertex_budget) {
  if (nodes.empty()) fail(Status::InvalidArgument, "empty tree");
  if (nodes.size() > vertex_budget)
    fail(Status::BudgetExceeded,
         "tree has " + std::to_string(nodes.size()) + " vertices, budget " + std::to_string(vertex_budget));

  const auto n = static_cast<std::uint32_t>(nodes.size());
  // Normalize to preorder, children in insertion order.
  std::vector<VertexIndex> order;
  order.reserve(n);
  std::vector<VertexIndex> stack{0};
  while (!stack.empty()) {
    VertexIndex v = stack.back();
    stack.pop_back();
    order.push_back(v);
    const auto& ch = nodes[v].children;
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
  if (order.size() != n) fail(Status::ParseError, "tree is not connected");

  std::vector<VertexIndex> pos(n);
  for (std::uint32_t i = 0; i < n; ++i) pos[order[i]] = i;

  WeightedTree t;
  t.parent_.resize(n);
  t.resistance_.resize(n, 0.0);
  t.depth_.resize(n);
  t.subtree_size_.assign(n, 1);
  t.leaf_mode_.resize(n);
  t.ext_id_.resize(n);
  t.child_offset_.assign(n + 1, 0);
  t.child_list_.resize(n - 1);

  for (std::uint32_t i = 0; i < n; ++i) {
    const Node& src = nodes[order[i]];
    t.parent_[i] = src.parent == kNoVertex ? kNoVertex : pos[src.parent];
    t.resistance_[i] = src.resistance;
    t.depth_[i] = src.depth;
    t.leaf_mode_[i] = src.children.empty() ? src.mode : LeafMode::TrueLeaf;
    t.ext_id_[i] = src.id;
    t.child_offset_[i + 1] = static_cast<std::uint32_t>(src.children.size());
  }
  for (std::uint32_t i = 0; i < n; ++i) t.child_offset_[i + 1] += t.child_offset_[i];
  {
    std::vector<std::uint32_t> fill(t.child_offset_.begin(), t.child_offset_.end() - 1);
    for (std::uint32_t i = 0; i < n; ++i) {
      const Node& src = nodes[order[i]];
      for (VertexIndex c : src.children) t.child_list_[fill[i]++] = pos[c];
    }
  }
  for (std::uint32_t i = n; i-- > 1;) t.subtree_size_[t.parent_[i]] += t.subtree_size_[i];

  t.depth_cutoff_ = 0;
  for (std::uint32_t i = 0; i < n; ++i) t.depth_cutoff_ = std::max(t.depth_cutoff_, t.depth_[i]);

  t.id_index_.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!t.id_index_.emplace(t.ext_id_[i], i).second)
      fail(Status::ParseError, "duplicate vertex id " + std::to_string(t.ext_id_[i]));
  }

  TreeMeta& m = t.meta_;
  m.min_interior_degree = 0;
  m.min_nonroot_interior_degree = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (i > 0) {
      m.max_resistance = std::max(m.max_resistance, t.resistance_[i]);
      if (t.resistance_[i] != std::floor(t.resistance_[i])) m.all_resistances_integer = false;
    }
    if (t.child_offset_[i + 1] == t.child_offset_[i]) continue;  // leaf
    unsigned deg = t.degree(i);
    m.max_interior_degree = std::max(m.max_interior_degree, deg);
    m.min_interior_degree = m.min_interior_degree == 0 ? deg : std::min(m.min_interior_degree, deg);
    if (i > 0)
      m.min_nonroot_interior_degree =
          m.min_nonroot_interior_degree == 0 ? deg : std::min(m.min_nonroot_interior_degree, deg);
  }

  std::uint64_t h = 1469598103934665603ULL;
  for (std::uint32_t i = 0; i < n; ++i) {
    h = fnv1a(h, t.ext_id_[i]);
    h = fnv1a(h, t.parent_[i] == kNoVertex ? ~0ULL : t.ext_id_[t.parent_[i]]);
    h = fnv1a(h, double_bits(t.resistance_[i]));
    h = fnv1a(h, t.is_leaf(i) ? static_cast<std::uint64_t>(t.leaf_mode_[i]) + 1 : 0);
  }
  t.tag_ = h;
  return t;
}

std::optional<VertexIndex> WeightedTree::find(VertexId id) const {
  auto it = id_index_.find(id);
  if (it == id_index_.end()) return std::nullopt;
  return it->second;
}

std::string WeightedTree::serialize() const {
  std::ostringstream out;
  out << "root " << ext_id_[0] << "\n";
  for (std::uint32_t v = 0; v < vertex_count(); ++v) {
    for (const VertexIndex* c = children_begin(v); c != children_end(v); ++c)
      out << "edge " << ext_id_[v] << " " << ext_id_[*c] << " " << format_double(resistance_[*c]) << "\n";
  }
  for (std::uint32_t v = 0; v < vertex_count(); ++v)
    if (is_cutoff_leaf(v)) out << "leafmode " << ext_id_[v] << " inf\n";
  return out.str();
}

// ---- generators ----

namespace {

struct GenFrame {
  VertexIndex vertex;
  std::uint32_t depth;
};

void generate_uniform_children(WeightedTree::Builder& b, VertexIndex subroot, unsigned subroot_children,
                               unsigned inner_children, unsigned levels, const ResistanceRule& rule,
                               std::uint64_t& edge_ordinal, std::uint64_t budget) {
  // levels = edges below subroot to materialize
  std::vector<GenFrame> stack{{subroot, 0}};
  while (!stack.empty()) {
    GenFrame f = stack.back();
    stack.pop_back();
    if (f.depth >= levels) continue;
    unsigned k = f.depth == 0 ? subroot_children : inner_children;
    for (unsigned i = 0; i < k; ++i) {
      if (b.nodes.size() >= budget)
        fail(Status::BudgetExceeded, "vertex budget exceeded while generating tree");
      VertexIndex c = b.add_child(f.vertex, b.nodes.size(), rule.at(edge_ordinal++));
      stack.push_back({c, f.depth + 1});
    }
  }
}

WeightedTree build_regular(unsigned d, unsigned depth, const ResistanceRule& rule, std::uint64_t budget) {
  // Root has d children, every other vertex d-1: the unrooted d-regular tree
  // seen from one vertex.
  if (d < 2) fail(Status::InvalidArgument, "regular tree needs degree >= 2");
  if (depth < 1) fail(Status::InvalidArgument, "depth must be >= 1");
  WeightedTree::Builder b;
  b.add_root(0);
  std::uint64_t ord = 0;
  generate_uniform_children(b, 0, d, d - 1, depth, rule, ord, budget);
  b.mark_cutoff_leaves_at_max_depth();
  return b.finish(budget);
}

WeightedTree build_increasing(unsigned depth, const ResistanceRule& rule, std::uint64_t budget) {
  // Every vertex at depth n has n+2 children.
  if (depth < 1) fail(Status::InvalidArgument, "depth must be >= 1");
  WeightedTree::Builder b;
  b.add_root(0);
  std::uint64_t ord = 0;
  std::vector<GenFrame> stack{{0, 0}};
  while (!stack.empty()) {
    GenFrame f = stack.back();
    stack.pop_back();
    if (f.depth >= depth) continue;
    for (unsigned i = 0; i < f.depth + 2; ++i) {
      if (b.nodes.size() >= budget)
        fail(Status::BudgetExceeded, "vertex budget exceeded while generating tree");
      VertexIndex c = b.add_child(f.vertex, b.nodes.size(), rule.at(ord++));
      stack.push_back({c, f.depth + 1});
    }
  }
  b.mark_cutoff_leaves_at_max_depth();
  return b.finish(budget);
}

WeightedTree build_joined(unsigned d, unsigned depth, const ResistanceRule& rule, std::uint64_t budget) {
  // A fresh root joined by one edge each to the root of a binary tree and the
  // root of a d-ary tree; `depth` counts levels inside each joined subtree.
  if (d < 2) fail(Status::InvalidArgument, "joined tree needs degree >= 2");
  if (depth < 1) fail(Status::InvalidArgument, "depth must be >= 1");
  WeightedTree::Builder b;
  b.add_root(0);
  std::uint64_t ord = 0;
  VertexIndex left = b.add_child(0, 1, rule.at(ord++));
  generate_uniform_children(b, left, 2, 2, depth, rule, ord, budget);
  VertexIndex right = b.add_child(0, b.nodes.size(), rule.at(ord++));
  generate_uniform_children(b, right, d, d, depth, rule, ord, budget);
  b.mark_cutoff_leaves_at_max_depth();
  return b.finish(budget);
}

WeightedTree build_pipe_decorated(const TreeSpec& spec) {
  if (!spec.base) fail(Status::InvalidArgument, "piped spec needs a base tree");
  if (spec.pipe_length < 1) fail(Status::InvalidArgument, "pipe length must be >= 1");
  WeightedTree base = build_tree(*spec.base);
  WeightedTree::Builder b;
  b.add_root(base.external_id(0));
  std::vector<VertexIndex> mapped(base.vertex_count(), kNoVertex);
  mapped[0] = 0;
  VertexId next_id = 0;
  for (std::uint32_t v = 0; v < base.vertex_count(); ++v) next_id = std::max(next_id, base.external_id(v));
  ++next_id;
  for (std::uint32_t v = 1; v < base.vertex_count(); ++v) {
    VertexIndex attach = mapped[base.parent(v)];
    double r = base.resistance_to_parent(v);
    for (unsigned i = 1; i < spec.pipe_length; ++i) {
      if (b.nodes.size() >= spec.vertex_budget) fail(Status::BudgetExceeded, "vertex budget exceeded");
      attach = b.add_child(attach, next_id++, r);
    }
    mapped[v] = b.add_child(attach, base.external_id(v), r);
    if (base.is_leaf(v)) b.set_leaf_mode(mapped[v], base.leaf_mode(v));
  }
  return b.finish(spec.vertex_budget);
}

}  // namespace

WeightedTree build_tree(const TreeSpec& spec) {
  switch (spec.kind) {
    case TreeSpec::Kind::Regular:
      return build_regular(spec.degree, spec.depth, spec.resistance, spec.vertex_budget);
    case TreeSpec::Kind::Increasing:
      return build_increasing(spec.depth, spec.resistance, spec.vertex_budget);
    case TreeSpec::Kind::Joined:
      return build_joined(spec.degree, spec.depth, spec.resistance, spec.vertex_budget);
    case TreeSpec::Kind::FromFile:
      return load_tree(spec.path);
    case TreeSpec::Kind::PipeDecorated:
      return build_pipe_decorated(spec);
  }
  fail(Status::InvalidArgument, "unknown tree spec kind");
}

// ---- spec grammar ----

namespace {

std::string strip(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

}  // namespace

TreeSpec TreeSpec::parse(const std::string& text) {
  std::string s = strip(text);
  auto open = s.find('(');
  std::string head = open == std::string::npos ? s : strip(s.substr(0, open));
  std::string args;
  if (open != std::string::npos) {
    if (s.back() != ')') fail(Status::ParseError, "tree spec: missing ')': " + text);
    args = s.substr(open + 1, s.size() - open - 2);
  }
  TreeSpec spec;
  auto parse_unsigned = [&](const std::string& a) -> unsigned {
    unsigned v = 0;
    auto t = strip(a);
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size())
      fail(Status::ParseError, "tree spec: bad integer '" + a + "'");
    return v;
  };
  if (head == "regular") {
    spec.kind = Kind::Regular;
    spec.degree = parse_unsigned(args);
  } else if (head == "increasing") {
    spec.kind = Kind::Increasing;
  } else if (head == "joined") {
    spec.kind = Kind::Joined;
    spec.degree = parse_unsigned(args);
  } else if (head == "file") {
    spec.kind = Kind::FromFile;
    spec.path = strip(args);
    if (spec.path.empty()) fail(Status::ParseError, "tree spec: file() needs a path");
  } else if (head == "piped") {
    // piped(<spec>,len) — the base spec may itself contain parentheses.
    auto comma = args.rfind(',');
    if (comma == std::string::npos) fail(Status::ParseError, "tree spec: piped(<spec>,len)");
    spec.kind = Kind::PipeDecorated;
    spec.base = std::make_shared<TreeSpec>(TreeSpec::parse(args.substr(0, comma)));
    spec.pipe_length = parse_unsigned(args.substr(comma + 1));
  } else {
    fail(Status::ParseError, "unknown tree spec '" + text + "'");
  }
  return spec;
}

std::string TreeSpec::to_string() const {
  switch (kind) {
    case Kind::Regular:
      return "regular(" + std::to_string(degree) + ")";
    case Kind::Increasing:
      return "increasing";
    case Kind::Joined:
      return "joined(" + std::to_string(degree) + ")";
    case Kind::FromFile:
      return "file(" + path + ")";
    case Kind::PipeDecorated:
      return "piped(" + (base ? base->to_string() : "?") + "," + std::to_string(pipe_length) + ")";
  }
  return "?";
}

// ---- text format ----

WeightedTree parse_tree(std::istream& in, const std::string& name) {
  WeightedTree::Builder b;
  std::unordered_map<VertexId, VertexIndex> index;
  std::vector<std::pair<VertexId, LeafMode>> modes;
  std::string line;
  int lineno = 0;
  bool have_root = false;
  auto err = [&](const std::string& msg) {
    fail(Status::ParseError, name + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = strip(line);
    if (t.empty() || t[0] == '#') continue;
    std::istringstream ls(t);
    std::string directive;
    ls >> directive;
    if (directive == "root") {
      VertexId id;
      if (!(ls >> id)) err("root: expected id");
      if (have_root) err("duplicate root directive");
      have_root = true;
      index.emplace(id, b.add_root(id));
    } else if (directive == "edge") {
      VertexId pid, cid;
      double r;
      if (!(ls >> pid >> cid >> r)) err("edge: expected <parent> <child> <resistance>");
      if (!have_root) err("edge before root");
      auto pit = index.find(pid);
      if (pit == index.end()) err("edge: unknown parent " + std::to_string(pid));
      if (index.count(cid)) err("edge: vertex " + std::to_string(cid) + " already has a parent");
      if (!(r > 0.0)) err("edge: resistance must be positive");
      index.emplace(cid, b.add_child(pit->second, cid, r));
    } else if (directive == "leafmode") {
      VertexId id;
      std::string mode;
      if (!(ls >> id >> mode)) err("leafmode: expected <id> {inf|leaf}");
      if (mode != "inf" && mode != "leaf") err("leafmode: expected 'inf' or 'leaf'");
      modes.emplace_back(id, mode == "inf" ? LeafMode::ContinuesToInfinity : LeafMode::TrueLeaf);
    } else {
      err("unknown directive '" + directive + "'");
    }
    std::string rest;
    if (ls >> rest) err("trailing tokens after directive");
  }
  if (!have_root) fail(Status::ParseError, name + ": no root directive");
  for (auto& [id, mode] : modes) {
    auto it = index.find(id);
    if (it == index.end())
      fail(Status::ParseError, name + ": leafmode for unknown vertex " + std::to_string(id));
    b.set_leaf_mode(it->second, mode);
  }
  return b.finish();
}

WeightedTree load_tree(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Status::IoError, "cannot open tree file: " + path);
  return parse_tree(in, path);
}

void save_tree(const WeightedTree& tree, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(Status::IoError, "cannot write tree file: " + path);
  out << tree.serialize();
  if (!out) fail(Status::IoError, "write failed: " + path);
}

// ---- class validation ----

TreeClassReport validate_bounded_class(const WeightedTree& tree) {
  TreeClassReport rep;
  unsigned mind = 0, maxd = 0;
  for (std::uint32_t v = 0; v < tree.vertex_count(); ++v) {
    if (tree.is_leaf(v)) {
      if (tree.is_true_leaf(v))
        rep.violations.push_back("vertex " + std::to_string(tree.external_id(v)) +
                                 " is a true leaf (tree must be leafless)");
      continue;
    }
    unsigned deg = tree.degree(v);
    mind = mind == 0 ? deg : std::min(mind, deg);
    maxd = std::max(maxd, deg);
    if (deg < 3)
      rep.violations.push_back("vertex " + std::to_string(tree.external_id(v)) + " has degree " +
                               std::to_string(deg) + " < 3");
  }
  for (std::uint32_t v = 1; v < tree.vertex_count(); ++v) {
    double r = tree.resistance_to_parent(v);
    if (r != std::floor(r))
      rep.violations.push_back("non-integer resistance " + format_double(r) + " on edge to vertex " +
                               std::to_string(tree.external_id(v)));
    else if (r < 1.0)
      rep.violations.push_back("resistance < 1 on edge to vertex " + std::to_string(tree.external_id(v)));
    rep.max_resistance = std::max(rep.max_resistance, r);
  }
  // Strictly growing per-level maximum child count is flagged: bounds derived
  // from (min degree, max degree, max resistance) would not survive deeper
  // materializations of such a tree.
  {
    std::vector<unsigned> level_max(tree.depth_cutoff() + 1, 0);
    for (std::uint32_t v = 0; v < tree.vertex_count(); ++v)
      if (!tree.is_leaf(v)) level_max[tree.depth(v)] = std::max(level_max[tree.depth(v)], tree.child_count(v));
    unsigned levels = 0;
    while (levels < level_max.size() && level_max[levels] > 0) ++levels;
    bool growing = levels >= 3;
    for (unsigned k = 1; k < levels && growing; ++k) growing = level_max[k] > level_max[k - 1];
    if (growing)
      rep.violations.push_back("unbounded degree growth: per-level max child count increases monotonically " +
                               std::string("(observed max degree ") + std::to_string(maxd) + ")");
  }
  rep.min_degree = mind;
  rep.max_degree = maxd;
  rep.passed = rep.violations.empty();
  return rep;
}

// ---- backbone ----

BackboneReport compute_backbone(const WeightedTree& tree) {
  const std::uint32_t n = tree.vertex_count();
  BackboneReport rep;
  rep.tree_tag = tree.tag();
  rep.in_backbone.assign(n, 0);
  // A vertex survives iff its subtree contains a ContinuesToInfinity leaf.
  for (std::uint32_t v = n; v-- > 0;) {
    if (tree.is_cutoff_leaf(v)) {
      rep.in_backbone[v] = 1;
    } else {
      for (const VertexIndex* c = tree.children_begin(v); c != tree.children_end(v); ++c)
        if (rep.in_backbone[*c]) {
          rep.in_backbone[v] = 1;
          break;
        }
    }
  }
  rep.backbone_empty = rep.in_backbone[0] == 0;
  if (rep.backbone_empty) {
    rep.max_offbackbone_component = n;  // the whole tree together with any v
    rep.max_degree2_run = 0;
    return rep;
  }

  // Largest component of (T \ T_r) ∪ {v}. For backbone v this is v plus all
  // off-backbone subtrees hanging from it; an off-backbone vertex lies in one
  // of those subtrees, so the maximum is attained at a backbone vertex.
  std::vector<std::uint64_t> off_weight(n, 0);  // off-backbone subtree sizes hanging at v
  for (std::uint32_t v = 0; v < n; ++v) {
    if (!rep.in_backbone[v]) continue;
    std::uint64_t total = 1;
    for (const VertexIndex* c = tree.children_begin(v); c != tree.children_end(v); ++c)
      if (!rep.in_backbone[*c]) total += tree.subtree_size(*c);
    off_weight[v] = total;
  }
  VertexIndex best = 0;
  for (std::uint32_t v = 0; v < n; ++v)
    if (off_weight[v] > off_weight[best]) best = v;
  rep.max_offbackbone_component = off_weight[best];
  rep.witness_component.push_back(best);
  for (const VertexIndex* c = tree.children_begin(best); c != tree.children_end(best); ++c)
    if (!rep.in_backbone[*c])
      for (std::uint32_t u = *c; u < *c + tree.subtree_size(*c); ++u) rep.witness_component.push_back(u);

  // Longest chain of backbone vertices with backbone-degree exactly 2.
  std::vector<std::uint32_t> bdeg(n, 0);
  for (std::uint32_t v = 1; v < n; ++v)
    if (rep.in_backbone[v] && rep.in_backbone[tree.parent(v)]) {
      ++bdeg[v];
      ++bdeg[tree.parent(v)];
    }
  std::vector<std::uint32_t> run(n, 0);  // run length ending at v walking rootward
  std::uint64_t best_run = 0;
  VertexIndex best_run_end = kNoVertex;
  for (std::uint32_t v = 0; v < n; ++v) {
    if (!rep.in_backbone[v] || bdeg[v] != 2) continue;
    VertexIndex p = tree.parent(v);
    bool chain = v != 0 && p != kNoVertex && rep.in_backbone[p] && bdeg[p] == 2;
    run[v] = chain ? run[p] + 1 : 1;
    if (run[v] > best_run) {
      best_run = run[v];
      best_run_end = v;
    }
  }
  rep.max_degree2_run = best_run;
  for (VertexIndex v = best_run_end; best_run > 0; --best_run) {
    rep.witness_run.push_back(v);
    v = tree.parent(v);
  }
  std::reverse(rep.witness_run.begin(), rep.witness_run.end());
  return rep;
}

bool classify_nonamenable(const BackboneReport& report, std::uint64_t M) {
  if (M < 1) fail(Status::InvalidArgument, "M must be >= 1");
  if (report.backbone_empty) return false;
  return report.max_offbackbone_component <= M && report.max_degree2_run < M;
}

std::uint64_t certified_L(const BackboneReport& report) {
  if (report.backbone_empty) return 0;
  return std::max<std::uint64_t>(report.max_offbackbone_component, report.max_degree2_run + 1);
}

// ---- pipe contraction ----

WeightedTree contract_pipes(const WeightedTree& tree) {
  for (std::uint32_t v = 0; v < tree.vertex_count(); ++v)
    if (tree.is_true_leaf(v))
      fail(Status::InvalidArgument,
           "contract_pipes expects a leafless tree; true leaf at vertex " +
               std::to_string(tree.external_id(v)));

  WeightedTree::Builder b;
  b.add_root(tree.external_id(0));
  // (kept-vertex-in-new-tree, child-in-old-tree); children pushed in reverse
  // so pops preserve child order.
  std::vector<std::pair<VertexIndex, VertexIndex>> stack;
  auto push_children = [&](VertexIndex attach, VertexIndex v) {
    const VertexIndex* begin = tree.children_begin(v);
    for (const VertexIndex* c = tree.children_end(v); c != begin;) stack.emplace_back(attach, *--c);
  };
  push_children(0, 0);
  while (!stack.empty()) {
    auto [attach, v] = stack.back();
    stack.pop_back();
    double r = tree.resistance_to_parent(v);
    while (tree.child_count(v) == 1) {
      v = tree.child(v, 0);
      r += tree.resistance_to_parent(v);
    }
    VertexIndex nv = b.add_child(attach, tree.external_id(v), r);
    if (tree.is_leaf(v)) b.set_leaf_mode(nv, tree.leaf_mode(v));
    push_children(nv, v);
  }
  return b.finish();
}

// ---- editing helpers ----

namespace {

struct CopyPlan {
  WeightedTree::Builder b;
  std::vector<VertexIndex> mapped;
  VertexId next_free_id;
};

CopyPlan begin_copy(const WeightedTree& tree) {
  CopyPlan plan;
  plan.mapped.assign(tree.vertex_count(), kNoVertex);
  plan.b.add_root(tree.external_id(0));
  plan.mapped[0] = 0;
  plan.next_free_id = 0;
  for (std::uint32_t v = 0; v < tree.vertex_count(); ++v)
    plan.next_free_id = std::max(plan.next_free_id, tree.external_id(v));
  ++plan.next_free_id;
  return plan;
}

}  // namespace

WeightedTree attach_bush(const WeightedTree& tree, VertexId at, unsigned size) {
  auto anchor = tree.find(at);
  if (!anchor) fail(Status::InvalidArgument, "attach_bush: no vertex " + std::to_string(at));
  if (size == 0) fail(Status::InvalidArgument, "attach_bush: size must be >= 1");
  CopyPlan plan = begin_copy(tree);
  for (std::uint32_t v = 1; v < tree.vertex_count(); ++v) {
    plan.mapped[v] = plan.b.add_child(plan.mapped[tree.parent(v)], tree.external_id(v),
                                      tree.resistance_to_parent(v));
    if (tree.is_leaf(v)) plan.b.set_leaf_mode(plan.mapped[v], tree.leaf_mode(v));
  }
  VertexIndex tip = plan.mapped[*anchor];
  for (unsigned i = 0; i < size; ++i) tip = plan.b.add_child(tip, plan.next_free_id++, 1.0);
  plan.b.set_leaf_mode(tip, LeafMode::TrueLeaf);
  return plan.b.finish();
}

WeightedTree splice_pipe(const WeightedTree& tree, VertexId child, unsigned length) {
  auto cv = tree.find(child);
  if (!cv || *cv == 0) fail(Status::InvalidArgument, "splice_pipe: need a non-root vertex");
  if (length < 2) fail(Status::InvalidArgument, "splice_pipe: length must be >= 2");
  CopyPlan plan = begin_copy(tree);
  for (std::uint32_t v = 1; v < tree.vertex_count(); ++v) {
    VertexIndex attach = plan.mapped[tree.parent(v)];
    if (v == *cv)
      for (unsigned i = 1; i < length; ++i) attach = plan.b.add_child(attach, plan.next_free_id++, 1.0);
    plan.mapped[v] = plan.b.add_child(attach, tree.external_id(v), tree.resistance_to_parent(v));
    if (tree.is_leaf(v)) plan.b.set_leaf_mode(plan.mapped[v], tree.leaf_mode(v));
  }
  return plan.b.finish();
}

WeightedTree random_bounded_tree(unsigned min_degree, unsigned max_degree, unsigned max_resistance,
                                 unsigned depth, std::uint64_t seed, std::uint64_t vertex_budget) {
  if (min_degree < 3 || max_degree < min_degree)
    fail(Status::InvalidArgument, "need 3 <= min_degree <= max_degree");
  if (max_resistance < 1) fail(Status::InvalidArgument, "max_resistance must be >= 1");
  RngStream rng = RngStream::derive(seed, {static_cast<std::uint64_t>(StreamRole::TreeGen)});
  WeightedTree::Builder b;
  b.add_root(0);
  std::vector<GenFrame> stack{{0, 0}};
  while (!stack.empty()) {
    GenFrame f = stack.back();
    stack.pop_back();
    if (f.depth >= depth) continue;
    unsigned lo = f.vertex == 0 ? min_degree : min_degree - 1;
    unsigned hi = f.vertex == 0 ? max_degree : max_degree - 1;
    unsigned k = lo + static_cast<unsigned>(rng.below(hi - lo + 1));
    for (unsigned i = 0; i < k; ++i) {
      if (b.nodes.size() >= vertex_budget) fail(Status::BudgetExceeded, "vertex budget exceeded");
      double r = 1.0 + static_cast<double>(rng.below(max_resistance));
      stack.push_back({b.add_child(f.vertex, b.nodes.size(), r), f.depth + 1});
    }
  }
  b.mark_cutoff_leaves_at_max_depth();
  return b.finish(vertex_budget);
}

namespace testing {
void corrupt_edge_resistance(WeightedTree& tree, VertexIndex child, double value) {
  tree.resistance_[child] = value;
}
}  // namespace testing

}  // namespace froglab
