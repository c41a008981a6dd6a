#include "froglab/explab.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "froglab/amenability.hpp"
#include "froglab/frog_sim.hpp"
#include "froglab/parallel.hpp"
#include "froglab/potential_theory.hpp"
#include "froglab/rng.hpp"
#include "froglab/stats.hpp"
#include "froglab/walks.hpp"

namespace fs = std::filesystem;

namespace froglab::lab {

namespace {

std::string strip(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(strip(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(strip(cur));
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(Status::ParseError, where + ": bad number '" + s + "'");
  }
}

std::uint64_t parse_u64(const std::string& s, const std::string& where) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    fail(Status::ParseError, where + ": bad integer '" + s + "'");
  return v;
}

std::uint64_t text_hash(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

const std::set<std::string> kKnownObservables = {
    "returns", "activation", "level_mass", "v_counts", "conditional_activation",
    "resistance", "harm", "rho"};

}  // namespace

ExperimentConfig ExperimentConfig::parse(const std::string& text, const std::string& name) {
  ExperimentConfig cfg;
  cfg.raw_text = text;
  cfg.config_hash = text_hash(text);
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto err = [&](const std::string& msg) {
    fail(Status::ParseError, name + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    line = strip(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) err("expected key = value");
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    if (value.empty()) err("empty value for '" + key + "'");
    const std::string where = name + ":" + std::to_string(lineno);
    if (key == "tree") {
      cfg.tree_spec = value;
      TreeSpec::parse(value);  // validate early
    } else if (key == "resistance") {
      if (value.rfind("cycle:", 0) == 0) {
        std::vector<double> vals;
        for (const std::string& tok : split_list(value.substr(6))) vals.push_back(parse_double(tok, where));
        cfg.resistance = ResistanceRule::cycle(vals);
      } else {
        cfg.resistance = ResistanceRule::constant(parse_double(value, where));
      }
    } else if (key == "model") {
      if (value != "standard" && value != "truncated" && value != "brw")
        err("model must be standard|truncated|brw");
      cfg.model = value;
    } else if (key == "lambda_grid" || key == "lambda") {
      cfg.lambda_grid.clear();
      for (const std::string& tok : split_list(value)) cfg.lambda_grid.push_back(parse_double(tok, where));
    } else if (key == "depth_grid" || key == "depth") {
      cfg.depth_grid.clear();
      for (const std::string& tok : split_list(value))
        cfg.depth_grid.push_back(static_cast<std::uint32_t>(parse_u64(tok, where)));
    } else if (key == "horizon_grid" || key == "horizon") {
      cfg.horizon_grid.clear();
      for (const std::string& tok : split_list(value)) cfg.horizon_grid.push_back(parse_u64(tok, where));
    } else if (key == "trials") {
      cfg.trials = parse_u64(value, where);
    } else if (key == "seed") {
      cfg.seed = parse_u64(value, where);
    } else if (key == "outputs") {
      cfg.outputs = value;
    } else if (key == "observables") {
      cfg.observables = split_list(value);
      for (const std::string& o : cfg.observables)
        if (!kKnownObservables.count(o)) err("unknown observable '" + o + "'");
    } else if (key == "placement") {
      if (value != "all" && value != "branchpoints") err("placement must be all|branchpoints");
      cfg.placement = value;
    } else if (key == "lambda_o") {
      if (value == "auto")
        cfg.lambda_o.reset();
      else
        cfg.lambda_o = parse_double(value, where);
    } else if (key == "level_mass_level") {
      cfg.level_mass_level = static_cast<std::uint32_t>(parse_u64(value, where));
    } else if (key == "particle_log") {
      if (value == "on" || value == "true")
        cfg.particle_log = true;
      else if (value == "off" || value == "false")
        cfg.particle_log = false;
      else
        err("particle_log must be on|off");
    } else {
      err("unknown key '" + key + "'");
    }
  }
  if (cfg.lambda_grid.empty() || cfg.depth_grid.empty() || cfg.horizon_grid.empty())
    fail(Status::ParseError, name + ": empty grid");
  if (cfg.trials < 1) fail(Status::ParseError, name + ": trials must be >= 1");
  return cfg;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Status::IoError, "cannot open config: " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str(), path);
}

// ---- experiment runner ----

namespace {

struct CsvFile {
  std::ofstream out;
  CsvFile(const fs::path& path, const std::string& header_block, const std::string& columns) {
    out.open(path);
    if (!out) fail(Status::IoError, "cannot write " + path.string());
    out << header_block << columns << "\n";
  }
};

std::uint64_t double_key(double d) {
  std::uint64_t u;
  std::memcpy(&u, &d, sizeof u);
  return u;
}

std::string format_lambda(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

}  // namespace

PhaseReport run_experiment(const ExperimentConfig& cfg) {
  const auto t_begin = std::chrono::steady_clock::now();
  fs::create_directories(cfg.outputs);
  const std::string header = std::string("# froglab ") + version_string() + "\n# config_hash=" +
                             hex(cfg.config_hash) + " seed=" + std::to_string(cfg.seed) + "\n";

  PhaseReport report;
  report.output_dir = cfg.outputs;

  auto has = [&](const char* obs) {
    return std::find(cfg.observables.begin(), cfg.observables.end(), obs) != cfg.observables.end();
  };

  CsvFile returns_csv(fs::path(cfg.outputs) / "returns.csv", header,
                      "lambda,depth,horizon,trial,returns,activated_count,max_activation_depth");
  std::optional<CsvFile> activation_csv, level_mass_csv, v_counts_csv, conditional_csv;
  if (has("activation"))
    activation_csv.emplace(fs::path(cfg.outputs) / "activation.csv", header,
                           "lambda,depth,horizon,level,mean_activated_fraction");
  if (has("level_mass"))
    level_mass_csv.emplace(fs::path(cfg.outputs) / "level_mass.csv", header,
                           "lambda,depth,horizon,trial,level_mass");
  if (has("v_counts"))
    v_counts_csv.emplace(fs::path(cfg.outputs) / "v_counts.csv", header,
                         "lambda,depth,horizon,trial,v_count");
  if (has("conditional_activation"))
    conditional_csv.emplace(fs::path(cfg.outputs) / "conditional_activation.csv", header,
                            "lambda,depth,horizon,estimate,ci_lo,ci_hi,conditioned");

  std::map<std::uint32_t, std::uint64_t> tree_tags;

  for (std::uint32_t depth : cfg.depth_grid) {
    TreeSpec spec = TreeSpec::parse(cfg.tree_spec);
    spec.depth = depth;
    spec.resistance = cfg.resistance;
    if (spec.base) {
      spec.base->depth = depth;
      spec.base->resistance = cfg.resistance;
    }
    WeightedTree tree;
    try {
      tree = build_tree(spec);
    } catch (const Error& e) {
      report.cell_errors.push_back("depth=" + std::to_string(depth) + ": " + e.what());
      continue;
    }
    tree_tags[depth] = tree.tag();

    if (has("resistance"))
      potential::emit_resistance_csv(
          tree, (fs::path(cfg.outputs) / ("resistance_d" + std::to_string(depth) + ".csv")).string(),
          header);
    if (has("harm")) {
      try {
        const std::uint32_t margin = std::min<std::uint32_t>(10, depth > cfg.level_mass_level
                                                                     ? depth - cfg.level_mass_level
                                                                     : 0);
        auto hm = potential::harmonic_measure(tree, tree.external_id(tree.root()), cfg.level_mass_level,
                                              margin);
        potential::emit_harm_csv(tree, hm,
                                 (fs::path(cfg.outputs) / ("harm_d" + std::to_string(depth) + ".csv")).string(),
                                 header);
      } catch (const Error& e) {
        report.cell_errors.push_back("harm depth=" + std::to_string(depth) + ": " + e.what());
      }
    }
    if (has("rho")) {
      try {
        auto est = potential::return_probability_sequence(tree, 100);
        potential::emit_rho_csv(est,
                                (fs::path(cfg.outputs) / ("rho_d" + std::to_string(depth) + ".csv")).string(),
                                header);
      } catch (const Error& e) {
        report.cell_errors.push_back("rho depth=" + std::to_string(depth) + ": " + e.what());
      }
    }

    for (double lambda : cfg.lambda_grid) {
      for (std::uint64_t horizon : cfg.horizon_grid) {
        const std::uint64_t cell_seed =
            RngStream::derive(cfg.seed, {double_key(lambda), depth, horizon}).key();
        try {
          std::vector<std::uint64_t> cell_returns;
          std::vector<frog::SimOutcome> outcomes;
          if (cfg.model == "brw") {
            amen::BrwStats stats = amen::run_brw(tree, lambda, horizon, cfg.trials, cell_seed);
            cell_returns = stats.root_visits;
            for (std::uint64_t t = 0; t < cfg.trials; ++t)
              returns_csv.out << format_lambda(lambda) << "," << depth << "," << horizon << "," << t << ","
                              << stats.root_visits[t] << ",0,0\n";
          } else {
            frog::FrogConfig fc;
            fc.lambda = lambda;
            fc.lambda_override = cfg.lambda_o;
            fc.model = cfg.model == "truncated" ? frog::Model::Truncated : frog::Model::Standard;
            fc.horizon = horizon;
            fc.trials = cfg.trials;
            fc.seed = cell_seed;
            fc.placement = cfg.placement == "branchpoints" ? frog::Placement::BranchPointsOnly
                                                           : frog::Placement::AllNonRoot;
            fc.particle_log = cfg.particle_log || has("v_counts");
            outcomes = frog::run_trials(tree, fc);
            cell_returns.reserve(outcomes.size());
            for (const auto& o : outcomes) {
              cell_returns.push_back(o.returns_to_root);
              returns_csv.out << format_lambda(lambda) << "," << depth << "," << horizon << "," << o.trial
                              << "," << o.returns_to_root << "," << o.activated_count << ","
                              << o.max_activation_depth << "\n";
            }
            if (activation_csv) {
              std::vector<std::uint64_t> level_total(depth + 1, 0), level_active(depth + 1, 0);
              for (std::uint32_t v = 0; v < tree.vertex_count(); ++v) level_total[tree.depth(v)]++;
              for (const auto& o : outcomes)
                for (std::uint32_t v = 0; v < tree.vertex_count(); ++v)
                  if (o.activation_time[v] >= 0) level_active[tree.depth(v)]++;
              for (std::uint32_t lv = 0; lv <= depth; ++lv)
                activation_csv->out << format_lambda(lambda) << "," << depth << "," << horizon << "," << lv
                                    << ","
                                    << static_cast<double>(level_active[lv]) /
                                           (static_cast<double>(level_total[lv]) * cfg.trials)
                                    << "\n";
            }
            if (level_mass_csv) {
              const VertexIndex anchor = tree.child_count(tree.root()) > 0 ? tree.child(tree.root(), 0)
                                                                           : tree.root();
              const std::uint32_t lvl = cfg.level_mass_level;
              const std::uint32_t avail = depth > 1 ? depth - 1 : 0;
              if (lvl + 2 <= avail) {
                auto hm = potential::harmonic_measure(tree, tree.external_id(anchor), lvl,
                                                      std::min<std::uint32_t>(6, avail - lvl));
                for (const auto& o : outcomes)
                  level_mass_csv->out << format_lambda(lambda) << "," << depth << "," << horizon << ","
                                      << o.trial << "," << frog::measure_level_mass(o, tree, hm) << "\n";
              }
            }
            if (v_counts_csv && fc.model == frog::Model::Truncated) {
              const VertexIndex anchor = tree.child_count(tree.root()) > 0 ? tree.child(tree.root(), 0)
                                                                           : tree.root();
              for (const auto& o : outcomes)
                v_counts_csv->out << format_lambda(lambda) << "," << depth << "," << horizon << ","
                                  << o.trial << "," << frog::count_V(o, tree, tree.external_id(anchor))
                                  << "\n";
            }
            if (conditional_csv && fc.model == frog::Model::Truncated) {
              VertexIndex u = kNoVertex;
              for (std::uint32_t v = 0; v < tree.vertex_count(); ++v)
                if (tree.depth(v) == 2) {
                  u = v;
                  break;
                }
              if (u != kNoVertex) {
                auto est = frog::estimate_conditional_activation(tree, fc, tree.external_id(u), cfg.trials);
                conditional_csv->out << format_lambda(lambda) << "," << depth << "," << horizon << ","
                                     << est.p_hat << "," << est.ci.lo << "," << est.ci.hi << ","
                                     << est.conditioned << "\n";
              }
            }
          }
          PhaseCell cell;
          cell.lambda = lambda;
          cell.depth = depth;
          cell.horizon = horizon;
          cell.trials = cell_returns.size();
          double sum = 0;
          for (auto r : cell_returns) sum += static_cast<double>(r);
          cell.mean_returns = cell_returns.empty() ? 0.0 : sum / static_cast<double>(cell_returns.size());
          std::sort(cell_returns.begin(), cell_returns.end());
          cell.median_returns =
              cell_returns.empty() ? 0.0 : static_cast<double>(cell_returns[cell_returns.size() / 2]);
          report.cells.push_back(cell);
        } catch (const Error& e) {
          report.cell_errors.push_back("lambda=" + format_lambda(lambda) + " depth=" +
                                       std::to_string(depth) + " horizon=" + std::to_string(horizon) +
                                       ": " + e.what());
        }
      }
    }
  }

  // Phase summary and slope verdicts.
  {
    CsvFile phase(fs::path(cfg.outputs) / "phase.csv", header,
                  "lambda,depth,horizon,mean_returns,median_returns,trials");
    for (const PhaseCell& c : report.cells)
      phase.out << format_lambda(c.lambda) << "," << c.depth << "," << c.horizon << "," << c.mean_returns
                << "," << c.median_returns << "," << c.trials << "\n";
  }
  {
    const std::string rule = "log-mean-returns-vs-depth slope, 95% CI sign";
    CsvFile verdicts(fs::path(cfg.outputs) / "verdicts.csv", header,
                     "lambda,slope,ci_lo,ci_hi,verdict,rule");
    for (double lambda : cfg.lambda_grid) {
      std::vector<double> xs, ys;
      for (const PhaseCell& c : report.cells) {
        if (c.lambda != lambda) continue;
        xs.push_back(c.depth);
        ys.push_back(std::log(std::max(c.mean_returns, 1e-6)));
      }
      if (xs.size() < 3) continue;
      stats::SlopeFit fit = stats::fit_slope(xs, ys);
      PhaseVerdict v;
      v.lambda = lambda;
      v.slope = fit.slope;
      v.ci_lo = fit.ci_lo;
      v.ci_hi = fit.ci_hi;
      v.rule = rule;
      v.verdict = fit.ci_lo > 0 ? "Recurrent-leaning" : (fit.ci_hi < 0 ? "Transient-leaning" : "Inconclusive");
      report.verdicts.push_back(v);
      verdicts.out << format_lambda(lambda) << "," << fit.slope << "," << fit.ci_lo << "," << fit.ci_hi
                   << "," << v.verdict << "," << v.rule << "\n";
    }
  }

  const auto wall_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t_begin)
          .count();
  std::ofstream manifest(fs::path(cfg.outputs) / "manifest.txt");
  if (!manifest) fail(Status::IoError, "cannot write manifest");
  manifest << "froglab_version " << version_string() << "\n";
  manifest << "config_hash " << hex(cfg.config_hash) << "\n";
  manifest << "seed " << cfg.seed << "\n";
  manifest << "tree_spec " << cfg.tree_spec << "\n";
  for (auto& [d, tag] : tree_tags) manifest << "tree_tag " << d << " " << hex(tag) << "\n";
  manifest << "cells " << report.cells.size() << "\n";
  for (const std::string& e : report.cell_errors) manifest << "cell_error " << e << "\n";
  manifest << "wall_time_ms " << wall_ms << "\n";
  manifest << "config_begin\n" << cfg.raw_text;
  if (!cfg.raw_text.empty() && cfg.raw_text.back() != '\n') manifest << "\n";
  manifest << "config_end\n";
  return report;
}

// ---- sweep aggregation ----

void sweep_report(const std::string& dir) {
  if (!fs::is_directory(dir)) fail(Status::IoError, "sweep_report: no such directory: " + dir);
  struct Run {
    std::string tree_spec;
    fs::path root;
  };
  std::vector<Run> runs;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().filename() != "manifest.txt") continue;
    std::ifstream in(entry.path());
    std::string line, spec;
    while (std::getline(in, line)) {
      if (line.rfind("tree_spec ", 0) == 0) spec = line.substr(10);
      if (line == "config_begin") break;
    }
    runs.push_back(Run{spec, entry.path().parent_path()});
  }
  if (runs.empty()) fail(Status::InvalidArgument, "sweep_report: no manifests under " + dir);
  for (const Run& r : runs)
    if (r.tree_spec != runs.front().tree_spec)
      fail(Status::InvalidArgument, "sweep_report: mixed tree tags: '" + runs.front().tree_spec +
                                        "' vs '" + r.tree_spec + "'");

  struct Row {
    double lambda;
    std::uint64_t depth, horizon;
    std::string metric;
    double value;
    bool operator<(const Row& o) const {
      return std::tie(lambda, depth, horizon, metric) < std::tie(o.lambda, o.depth, o.horizon, o.metric);
    }
  };
  std::vector<Row> rows;
  for (const Run& r : runs) {
    std::ifstream in(r.root / "phase.csv");
    if (!in) fail(Status::IoError, "sweep_report: missing phase.csv in " + r.root.string());
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#' || line.rfind("lambda,", 0) == 0) continue;
      auto cols = split_list(line);
      if (cols.size() < 6) continue;
      Row row;
      row.lambda = parse_double(cols[0], "phase.csv");
      row.depth = parse_u64(cols[1], "phase.csv");
      row.horizon = parse_u64(cols[2], "phase.csv");
      row.metric = "mean_returns";
      row.value = parse_double(cols[3], "phase.csv");
      rows.push_back(row);
      row.metric = "median_returns";
      row.value = parse_double(cols[4], "phase.csv");
      rows.push_back(row);
    }
  }
  std::sort(rows.begin(), rows.end());

  std::ofstream out(fs::path(dir) / "sweep.csv");
  if (!out) fail(Status::IoError, "sweep_report: cannot write sweep.csv");
  out << "# froglab " << version_string() << "\n";
  out << "# tree_spec=" << runs.front().tree_spec << " runs=" << runs.size() << "\n";
  out << "lambda,depth,horizon,metric,value\n";
  for (const Row& r : rows)
    out << format_lambda(r.lambda) << "," << r.depth << "," << r.horizon << "," << r.metric << ","
        << r.value << "\n";

  // Two-column views per lambda: depth vs mean returns, sorted.
  std::set<double> lambdas;
  for (const Row& r : rows) lambdas.insert(r.lambda);
  std::uint32_t view_index = 0;
  for (double lambda : lambdas) {
    std::ofstream view(fs::path(dir) / ("view_lambda_" + std::to_string(view_index++) + ".dat"));
    view << "# lambda = " << format_lambda(lambda) << "; columns: depth mean_returns\n";
    for (const Row& r : rows)
      if (r.lambda == lambda && r.metric == "mean_returns") view << r.depth << " " << r.value << "\n";
  }
}

// ---- invariant suite ----

namespace {

using CheckFn = std::function<std::optional<std::string>()>;  // nullopt = pass

struct Check {
  std::string name;
  CheckFn fn;
};

std::optional<std::string> expect(bool ok, const std::string& detail) {
  if (ok) return std::nullopt;
  return detail;
}

WeightedTree regular_tree(unsigned d, unsigned depth, double r = 1.0) {
  TreeSpec spec;
  spec.kind = TreeSpec::Kind::Regular;
  spec.degree = d;
  spec.depth = depth;
  spec.resistance = ResistanceRule::constant(r);
  return build_tree(spec);
}

WeightedTree backbone_subtree(const WeightedTree& tree, const BackboneReport& rep) {
  WeightedTree::Builder b;
  std::vector<VertexIndex> mapped(tree.vertex_count(), kNoVertex);
  b.add_root(tree.external_id(0));
  mapped[0] = 0;
  for (std::uint32_t v = 1; v < tree.vertex_count(); ++v) {
    if (!rep.in_backbone[v] || !rep.in_backbone[tree.parent(v)]) continue;
    mapped[v] = b.add_child(mapped[tree.parent(v)], tree.external_id(v), tree.resistance_to_parent(v));
    if (tree.is_leaf(v)) b.set_leaf_mode(mapped[v], tree.leaf_mode(v));
  }
  return b.finish();
}

std::vector<Check> build_checks(const std::string& inject_fault) {
  std::vector<Check> checks;
  const bool fault_negative_resistance = inject_fault == "negative-resistance";

  checks.push_back({"tree.serialization_roundtrip", []() -> std::optional<std::string> {
    for (const char* spec_text : {"regular(3)", "joined(4)", "piped(regular(3),2)"}) {
      TreeSpec spec = TreeSpec::parse(spec_text);
      spec.depth = 4;
      WeightedTree t = build_tree(spec);
      std::istringstream in(t.serialize());
      WeightedTree back = parse_tree(in);
      if (back.serialize() != t.serialize() || back.tag() != t.tag())
        return std::string("round-trip mismatch for ") + spec_text;
    }
    return std::nullopt;
  }});

  checks.push_back({"tree.contraction_pathsums", []() -> std::optional<std::string> {
    TreeSpec spec = TreeSpec::parse("piped(regular(3),3)");
    spec.depth = 4;
    WeightedTree piped = build_tree(spec);
    WeightedTree contracted = contract_pipes(piped);
    WeightedTree base = regular_tree(3, 4);
    if (contracted.vertex_count() != base.vertex_count())
      return "branch point count changed under contraction";
    for (std::uint32_t v = 1; v < contracted.vertex_count(); ++v)
      if (contracted.resistance_to_parent(v) != 3.0)
        return "contracted edge resistance != pipe length";
    return std::nullopt;
  }});

  checks.push_back({"tree.backbone_idempotent", []() -> std::optional<std::string> {
    WeightedTree t = attach_bush(attach_bush(regular_tree(3, 5), 4, 3), 7, 2);
    BackboneReport r1 = compute_backbone(t);
    WeightedTree bb = backbone_subtree(t, r1);
    BackboneReport r2 = compute_backbone(bb);
    for (std::uint32_t v = 0; v < bb.vertex_count(); ++v)
      if (!r2.in_backbone[v]) return "backbone of backbone lost a vertex";
    return std::nullopt;
  }});

  checks.push_back({"tree.classify_regular", []() -> std::optional<std::string> {
    for (unsigned d = 3; d <= 5; ++d) {
      BackboneReport rep = compute_backbone(regular_tree(d, 5));
      if (!classify_nonamenable(rep, 1)) return "regular tree not accepted at M=1";
    }
    return std::nullopt;
  }});

  checks.push_back({"tree.degree2_runs", []() -> std::optional<std::string> {
    WeightedTree t = splice_pipe(regular_tree(3, 5), 4, 5);  // run of 4 degree-2 vertices
    BackboneReport rep = compute_backbone(t);
    if (rep.max_degree2_run != 4) return "expected run of 4, got " + std::to_string(rep.max_degree2_run);
    for (std::uint64_t M = 1; M <= 4; ++M)
      if (classify_nonamenable(rep, M)) return "classification must fail at M <= run length";
    if (!classify_nonamenable(rep, 5)) return "classification must pass at M = run + 1";
    return std::nullopt;
  }});

  checks.push_back({"tree.validation", [fault_negative_resistance]() -> std::optional<std::string> {
    WeightedTree t = regular_tree(3, 4);
    if (fault_negative_resistance) testing::corrupt_edge_resistance(t, 2, -1.0);
    TreeClassReport rep = validate_bounded_class(t);
    if (!rep.passed) {
      std::string all;
      for (const auto& v : rep.violations) all += v + "; ";
      return "validation violations: " + all;
    }
    return std::nullopt;
  }});

  checks.push_back({"potential.bracket_nesting", []() -> std::optional<std::string> {
    potential::ResistanceBracket prev{0.0, kInf, 0, false};
    for (unsigned depth : {6u, 9u, 12u}) {
      WeightedTree t = regular_tree(3, depth);
      auto b = potential::resistance_to_infinity(t, 0);
      if (b.lower < prev.lower - 1e-12 || b.upper > prev.upper + 1e-12)
        return "brackets not nested with increasing depth";
      prev = b;
    }
    return std::nullopt;
  }});

  checks.push_back({"potential.rayleigh_monotonicity", []() -> std::optional<std::string> {
    WeightedTree t = random_bounded_tree(3, 5, 2, 6, 99);
    const double before = potential::resistance_to_infinity(t, 0).lower;
    testing::corrupt_edge_resistance(t, 5, t.resistance_to_parent(5) + 1.0);
    const double after = potential::resistance_to_infinity(t, 0).lower;
    return expect(after >= before - 1e-12, "raising an edge resistance lowered the resistance bound");
  }});

  checks.push_back({"potential.harm_consistency", []() -> std::optional<std::string> {
    WeightedTree t = regular_tree(3, 14);
    auto hm3 = potential::harmonic_measure(t, 0, 3);
    auto hm4 = potential::harmonic_measure(t, 0, 4);
    if (std::fabs(hm3.residual) > 1e-12) return "level mass does not sum to 1";
    potential::Tables tables(t, t.root(), potential::BoundaryOptions::for_tree(t));
    std::vector<double> pushed(t.vertex_count(), 0.0);
    for (std::size_t i = 0; i < hm3.vertices.size(); ++i) {
      const VertexIndex w = hm3.vertices[i];
      auto law = walks::lerw_next_step(t, tables, w, t.parent(w));
      for (std::size_t j = 0; j < law.neighbors.size(); ++j)
        if (t.depth(law.neighbors[j]) == t.depth(w) + 1) pushed[law.neighbors[j]] += hm3.mass[i] * law.mass[j];
    }
    for (std::size_t i = 0; i < hm4.vertices.size(); ++i)
      if (std::fabs(pushed[hm4.vertices[i]] - hm4.mass[i]) > 1e-9)
        return "one-step pushforward mismatch at level 4";
    return std::nullopt;
  }});

  checks.push_back({"potential.harm_antichain_monotone", []() -> std::optional<std::string> {
    WeightedTree t = regular_tree(3, 12);
    RngStream rng = RngStream::derive(7, {1});
    // Random ancestor-closed set below the first child of the root.
    const VertexIndex base = t.child(t.root(), 0);
    std::vector<std::uint8_t> active(t.vertex_count(), 0);
    active[base] = 1;
    std::vector<VertexIndex> pool{base};
    for (int i = 0; i < 200; ++i) {
      VertexIndex v = pool[rng.below(pool.size())];
      if (t.is_leaf(v)) continue;
      VertexIndex c = t.child(v, static_cast<std::uint32_t>(rng.below(t.child_count(v))));
      if (!active[c]) {
        active[c] = 1;
        pool.push_back(c);
      }
    }
    double prev = 1.0;
    for (std::uint32_t j = 1; j <= 4; ++j) {
      auto hm = potential::harmonic_measure(t, t.external_id(base), j, 6);
      double mass = 0.0;
      for (std::size_t i = 0; i < hm.vertices.size(); ++i)
        if (active[hm.vertices[i]]) mass += hm.mass[i];
      if (mass > prev + 1e-12) return "ancestor-closed level mass increased";
      prev = mass;
    }
    return std::nullopt;
  }});

  checks.push_back({"walks.nonbacktracking", []() -> std::optional<std::string> {
    WeightedTree t = random_bounded_tree(3, 5, 3, 8, 11);
    walks::LerwSampler sampler(t);
    RngStream rng = RngStream::derive(3, {9});
    for (int i = 0; i < 500; ++i) {
      auto path = sampler.sample(t.child(t.root(), 0), 64, rng);
      std::set<VertexIndex> seen(path.vertices.begin(), path.vertices.end());
      if (seen.size() != path.vertices.size()) return "loop-erased path revisited a vertex";
    }
    return std::nullopt;
  }});

  checks.push_back({"walks.bound_suite", []() -> std::optional<std::string> {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      WeightedTree t = random_bounded_tree(3, 6, 3, 7, 1000 + seed);
      auto rep = walks::verify_transition_bounds(t, 3);
      if (!rep.violations.empty()) return "bound violation: " + rep.violations.front();
      if (!rep.uncertain.empty()) return "bound uncertain: " + rep.uncertain.front();
    }
    return std::nullopt;
  }});

  checks.push_back({"walks.reproducibility", []() -> std::optional<std::string> {
    WeightedTree t = regular_tree(3, 8);
    walks::LerwSampler sampler(t);
    RngStream a = RngStream::derive(5, {1, 2});
    RngStream b = RngStream::derive(5, {1, 2});
    RngStream c = RngStream::derive(5, {1, 3});
    auto pa = sampler.sample(t.child(t.root(), 0), 64, a);
    auto pb = sampler.sample(t.child(t.root(), 0), 64, b);
    auto pc = sampler.sample(t.child(t.root(), 0), 64, c);
    if (pa.vertices != pb.vertices) return "identical streams produced different paths";
    if (pa.vertices == pc.vertices) return "distinct streams produced identical paths (suspicious)";
    return std::nullopt;
  }});

  checks.push_back({"walks.two_route_identity", []() -> std::optional<std::string> {
    WeightedTree t = random_bounded_tree(3, 5, 2, 7, 42);
    // Degenerate boundary: lo == hi makes the bracket evaluation exact, so
    // the literal-formula endpoints must coincide with the conductance-ratio
    // masses.
    potential::BoundaryOptions opts;
    opts.cutoff_lo = opts.cutoff_hi = 1.0;
    potential::Tables tables(t, t.root(), opts);
    const VertexIndex v = t.child(t.child(t.root(), 0), 0);
    auto law = walks::lerw_next_step(t, tables, v, t.parent(v));
    for (std::size_t i = 0; i < law.mass.size(); ++i)
      if (std::fabs(law.lo[i] - law.mass[i]) > 1e-9 || std::fabs(law.hi[i] - law.mass[i]) > 1e-9)
        return "conditional transition formula and conductance ratio disagree";
    return std::nullopt;
  }});

  checks.push_back({"frog.conservation_and_tiebreak", []() -> std::optional<std::string> {
    WeightedTree t = regular_tree(3, 7);
    frog::FrogConfig fc;
    fc.lambda = 1.0;
    fc.model = frog::Model::Truncated;
    fc.horizon = 40;
    fc.trials = 200;
    fc.seed = 21;
    fc.particle_log = true;
    auto outcomes = frog::run_trials(t, fc);
    const double mean = fc.sleeper_mean(t);
    for (const auto& o : outcomes) {
      std::uint64_t sleepers = 0;
      for (std::uint32_t v = 1; v < t.vertex_count(); ++v) {
        if (o.activation_time[v] < 0) continue;
        RngStream s = RngStream::derive(fc.seed,
                                        {o.trial, static_cast<std::uint64_t>(StreamRole::SleeperCounts), v});
        sleepers += s.poisson(mean);
      }
      if (1 + sleepers != o.eliminated + o.absorbed_at_root + o.escaped + o.live_at_horizon)
        return "particle conservation violated in trial " + std::to_string(o.trial);
      // Exactly one survivor per first landing.
      std::map<std::pair<std::uint64_t, std::uint64_t>, std::int64_t> survivors;
      for (const auto& rec : o.log) {
        if (rec.code == static_cast<std::uint8_t>(frog::EventCode::Activated))
          survivors[{rec.step, rec.vertex}] += 0;
      }
      for (const auto& rec : o.log) {
        const std::pair<std::uint64_t, std::uint64_t> key{rec.step, rec.vertex};
        if (!survivors.count(key)) continue;
        if (rec.code == static_cast<std::uint8_t>(frog::EventCode::Landed)) survivors[key]++;
        if (rec.code == static_cast<std::uint8_t>(frog::EventCode::Eliminated)) survivors[key]--;
      }
      for (auto& [key, count] : survivors)
        if (key.second != t.external_id(t.root()) && count != 1)
          return "tie-break survivor count != 1 at a first landing";
    }
    return std::nullopt;
  }});

  checks.push_back({"frog.activation_connectivity", []() -> std::optional<std::string> {
    WeightedTree t = regular_tree(3, 7);
    frog::FrogConfig fc;
    fc.lambda = 1.5;
    fc.model = frog::Model::Standard;
    fc.horizon = 32;
    fc.trials = 100;
    fc.seed = 22;
    auto outcomes = frog::run_trials(t, fc);
    for (const auto& o : outcomes)
      for (std::uint32_t v = 1; v < t.vertex_count(); ++v) {
        if (o.activation_time[v] < 0) continue;
        bool ok = false;
        if (o.activation_time[t.parent(v)] >= 0 && o.activation_time[t.parent(v)] < o.activation_time[v])
          ok = true;
        for (const VertexIndex* c = t.children_begin(v); !ok && c != t.children_end(v); ++c)
          if (o.activation_time[*c] >= 0 && o.activation_time[*c] < o.activation_time[v]) ok = true;
        if (!ok) return "activated vertex with no earlier-activated neighbor";
      }
    return std::nullopt;
  }});

  checks.push_back({"frog.determinism", []() -> std::optional<std::string> {
    WeightedTree t = regular_tree(3, 6);
    frog::FrogConfig fc;
    fc.lambda = 1.0;
    fc.model = frog::Model::Truncated;
    fc.horizon = 32;
    fc.trials = 20;
    fc.seed = 23;
    fc.particle_log = true;
    auto a = frog::run_trials(t, fc);
    auto b = frog::run_trials(t, fc);
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i].serialize() != b[i].serialize()) return "replay produced different outcome bytes";
    return std::nullopt;
  }});

  checks.push_back({"frog.conditional_floor", []() -> std::optional<std::string> {
    WeightedTree t = regular_tree(3, 6);
    frog::FrogConfig fc;
    fc.lambda = 1.0;
    fc.model = frog::Model::Truncated;
    fc.horizon = 48;
    fc.seed = 24;
    VertexIndex u = t.child(t.child(t.root(), 0), 0);
    auto est = frog::estimate_conditional_activation(t, fc, t.external_id(u), 2500);
    if (est.inconclusive) return "no conditioning events";
    const double floor = 1.0 - std::exp(-fc.lambda);
    const double sigma = std::sqrt(std::max(est.p_hat * (1 - est.p_hat), 1e-9) /
                                   static_cast<double>(est.conditioned));
    return expect(est.p_hat >= floor - 3 * sigma, "conditional activation below the thinning floor");
  }});

  checks.push_back({"amen.phi_monotone_in_k", []() -> std::optional<std::string> {
    WeightedTree t = regular_tree(3, 5);
    double prev = 2.0;
    for (std::uint32_t k = 1; k <= 8; ++k) {
      auto rep = amen::enumerate_edge_expansion(t, k);
      if (rep.phi_enumerated > prev + 1e-12) return "enumerated expansion increased with k";
      prev = rep.phi_enumerated;
    }
    return std::nullopt;
  }});

  checks.push_back({"amen.iso_bound_instances", []() -> std::optional<std::string> {
    for (std::uint64_t L : {1ull, 2ull}) {
      WeightedTree t = regular_tree(3, 5);
      if (L > 1) t = attach_bush(t, 4, static_cast<unsigned>(L - 1));
      auto rep = amen::enumerate_edge_expansion(t, 10);
      if (rep.L != L) return "certified L mismatch";
      if (rep.phi_enumerated + 1e-12 < amen::tree_iso_bound(L)) return "expansion below analytic floor";
    }
    return std::nullopt;
  }});

  checks.push_back({"amen.threshold_identity", []() -> std::optional<std::string> {
    double prev = 0.0;
    for (int i = 1; i <= 10; ++i) {
      amen::Rational phi(i, 10);
      amen::Rational direct = amen::transience_threshold_exact(phi);
      // phi^2/2 * 1/(1 - phi^2/2) must agree exactly.
      amen::Rational phi2 = phi * phi;
      amen::Rational half(phi2.num, 2 * phi2.den);
      amen::Rational denom = amen::Rational(1, 1) - half;
      amen::Rational alt(half.num * denom.den, half.den * denom.num);
      if (!(direct == alt)) return "threshold identity failed at phi=" + std::to_string(i) + "/10";
      if (direct.value() <= prev) return "threshold not strictly increasing";
      prev = direct.value();
    }
    return std::nullopt;
  }});

  checks.push_back({"amen.corollary_consistency", []() -> std::optional<std::string> {
    for (std::uint64_t L = 1; L <= 10; ++L) {
      auto cor = amen::corollary_bound_exact(L);
      auto thr = amen::transience_threshold_exact(amen::tree_iso_bound_exact(L));
      if (!(cor <= thr)) return "corollary bound exceeds threshold at L=" + std::to_string(L);
    }
    return std::nullopt;
  }});

  checks.push_back({"explab.output_determinism", []() -> std::optional<std::string> {
    const std::string cfg_text =
        "tree = regular(3)\ndepth_grid = 4,5\nlambda_grid = 0.5\nhorizon = 16\ntrials = 8\nseed = 5\n"
        "outputs = OUT\n";
    auto read = [](const fs::path& p) {
      std::ifstream in(p);
      std::ostringstream s;
      s << in.rdbuf();
      return s.str();
    };
    fs::path tmp = fs::temp_directory_path() / "froglab_invariant_explab";
    fs::remove_all(tmp);
    std::string text1 = cfg_text, text2 = cfg_text;
    text1.replace(text1.find("OUT"), 3, (tmp / "a").string());
    text2.replace(text2.find("OUT"), 3, (tmp / "b").string());
    run_experiment(ExperimentConfig::parse(text1));
    run_experiment(ExperimentConfig::parse(text2));
    std::string a = read(tmp / "a" / "returns.csv");
    std::string b = read(tmp / "b" / "returns.csv");
    if (a.empty() || a.find("# config_hash=") == std::string::npos)
      return "returns.csv missing header block";
    // The two configs differ only in the output path, which changes the
    // config hash line; the data rows must agree.
    auto body = [](const std::string& s) { return s.substr(s.find("lambda,")); };
    if (body(a) != body(b)) return "identical seed produced different data rows";
    return std::nullopt;
  }});

  checks.push_back({"explab.sweep_idempotent", []() -> std::optional<std::string> {
    fs::path tmp = fs::temp_directory_path() / "froglab_invariant_sweep";
    fs::remove_all(tmp);
    std::string cfg_text =
        "tree = regular(3)\ndepth_grid = 4,5\nlambda_grid = 0.5\nhorizon = 16\ntrials = 4\nseed = 6\n"
        "outputs = " + (tmp / "run").string() + "\n";
    run_experiment(ExperimentConfig::parse(cfg_text));
    sweep_report(tmp.string());
    std::ifstream first(tmp / "sweep.csv");
    std::ostringstream s1;
    s1 << first.rdbuf();
    sweep_report(tmp.string());
    std::ifstream second(tmp / "sweep.csv");
    std::ostringstream s2;
    s2 << second.rdbuf();
    return expect(s1.str() == s2.str(), "sweep.csv changed across identical reruns");
  }});

  return checks;
}

}  // namespace

std::vector<InvariantResult> run_invariant_suite(const std::string& scope, const std::string& inject_fault) {
  std::vector<std::string> prefixes;
  if (!scope.empty())
    for (const std::string& p : split_list(scope))
      if (!p.empty()) prefixes.push_back(p);
  std::vector<InvariantResult> results;
  for (const Check& check : build_checks(inject_fault)) {
    if (!prefixes.empty()) {
      bool match = false;
      for (const std::string& p : prefixes)
        if (check.name.rfind(p, 0) == 0) match = true;
      if (!match) continue;
    }
    InvariantResult res;
    res.name = check.name;
    try {
      auto failure = check.fn();
      res.passed = !failure.has_value();
      if (failure) res.detail = *failure;
    } catch (const std::exception& e) {
      res.passed = false;
      res.detail = std::string("exception: ") + e.what();
    }
    results.push_back(std::move(res));
  }
  return results;
}

}  // namespace froglab::lab
