// C ABI wrapper over the froglab core: opaque handles, status codes, and a
// thread-local error message.

#include "froglab.h"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "froglab/amenability.hpp"
#include "froglab/common.hpp"
#include "froglab/explab.hpp"
#include "froglab/frog_sim.hpp"
#include "froglab/potential_theory.hpp"
#include "froglab/stats.hpp"
#include "froglab/tree_model.hpp"
#include "froglab/walks.hpp"

using namespace froglab;

struct froglab_tree {
  WeightedTree tree;
};

namespace {

thread_local std::string g_last_error;

froglab_status to_status(Status s) {
  switch (s) {
    case Status::Ok: return FROGLAB_OK;
    case Status::InvalidArgument: return FROGLAB_EINVAL;
    case Status::ParseError: return FROGLAB_EPARSE;
    case Status::BudgetExceeded: return FROGLAB_EBUDGET;
    case Status::DepthExceeded: return FROGLAB_EDEPTH;
    case Status::IoError: return FROGLAB_EIO;
    case Status::InvariantFailure: return FROGLAB_EINVARIANT;
  }
  return FROGLAB_EINVAL;
}

template <typename Fn>
froglab_status guarded(Fn&& fn) {
  try {
    fn();
    return FROGLAB_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return FROGLAB_EINVAL;
  }
}

void copy_out(const std::string& text, char* buf, size_t len) {
  if (!buf || len == 0) return;
  const size_t n = std::min(text.size(), len - 1);
  std::memcpy(buf, text.data(), n);
  buf[n] = '\0';
}

ResistanceRule parse_resistance_rule(const char* rule) {
  if (!rule || !*rule) return ResistanceRule::constant(1.0);
  std::string s(rule);
  if (s.rfind("cycle:", 0) == 0) {
    std::vector<double> values;
    std::string cur;
    for (char c : s.substr(6)) {
      if (c == ',') {
        values.push_back(std::stod(cur));
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    if (!cur.empty()) values.push_back(std::stod(cur));
    if (values.empty()) fail(Status::ParseError, "empty resistance cycle");
    return ResistanceRule::cycle(values);
  }
  return ResistanceRule::constant(std::stod(s));
}

}  // namespace

extern "C" {

const char* froglab_version(void) { return version_string(); }
const char* froglab_last_error(void) { return g_last_error.c_str(); }

froglab_status froglab_tree_build(const char* spec, uint32_t depth, const char* resistance_rule,
                                  froglab_tree** out) {
  return guarded([&] {
    if (!spec || !out) fail(Status::InvalidArgument, "null argument");
    TreeSpec parsed = TreeSpec::parse(spec);
    parsed.depth = depth;
    parsed.resistance = parse_resistance_rule(resistance_rule);
    if (parsed.base) {
      parsed.base->depth = depth;
      parsed.base->resistance = parsed.resistance;
    }
    *out = new froglab_tree{build_tree(parsed)};
  });
}

froglab_status froglab_tree_load(const char* path, froglab_tree** out) {
  return guarded([&] {
    if (!path || !out) fail(Status::InvalidArgument, "null argument");
    *out = new froglab_tree{load_tree(path)};
  });
}

froglab_status froglab_tree_save(const froglab_tree* tree, const char* path) {
  return guarded([&] {
    if (!tree || !path) fail(Status::InvalidArgument, "null argument");
    save_tree(tree->tree, path);
  });
}

void froglab_tree_free(froglab_tree* tree) { delete tree; }

uint64_t froglab_tree_vertex_count(const froglab_tree* tree) {
  return tree ? tree->tree.vertex_count() : 0;
}

uint32_t froglab_tree_depth(const froglab_tree* tree) { return tree ? tree->tree.depth_cutoff() : 0; }

froglab_status froglab_tree_validate(const froglab_tree* tree, int* ok, uint32_t* min_degree,
                                     uint32_t* max_degree, double* max_resistance, char* violations,
                                     size_t violations_len) {
  return guarded([&] {
    if (!tree || !ok) fail(Status::InvalidArgument, "null argument");
    TreeClassReport rep = validate_bounded_class(tree->tree);
    *ok = rep.passed ? 1 : 0;
    if (min_degree) *min_degree = rep.min_degree;
    if (max_degree) *max_degree = rep.max_degree;
    if (max_resistance) *max_resistance = rep.max_resistance;
    std::string all;
    for (const std::string& v : rep.violations) {
      if (!all.empty()) all += "; ";
      all += v;
    }
    copy_out(all, violations, violations_len);
  });
}

froglab_status froglab_tree_backbone(const froglab_tree* tree, uint64_t* max_component,
                                     uint64_t* max_degree2_run, int* backbone_empty) {
  return guarded([&] {
    if (!tree) fail(Status::InvalidArgument, "null tree");
    BackboneReport rep = compute_backbone(tree->tree);
    if (max_component) *max_component = rep.max_offbackbone_component;
    if (max_degree2_run) *max_degree2_run = rep.max_degree2_run;
    if (backbone_empty) *backbone_empty = rep.backbone_empty ? 1 : 0;
  });
}

froglab_status froglab_tree_classify_nonamenable(const froglab_tree* tree, uint64_t M, int* nonamenable) {
  return guarded([&] {
    if (!tree || !nonamenable) fail(Status::InvalidArgument, "null argument");
    *nonamenable = classify_nonamenable(compute_backbone(tree->tree), M) ? 1 : 0;
  });
}

froglab_status froglab_tree_certified_L(const froglab_tree* tree, uint64_t* L) {
  return guarded([&] {
    if (!tree || !L) fail(Status::InvalidArgument, "null argument");
    *L = certified_L(compute_backbone(tree->tree));
  });
}

froglab_status froglab_tree_contract_pipes(const froglab_tree* tree, froglab_tree** out) {
  return guarded([&] {
    if (!tree || !out) fail(Status::InvalidArgument, "null argument");
    *out = new froglab_tree{contract_pipes(tree->tree)};
  });
}

froglab_status froglab_resistance_to_infinity(const froglab_tree* tree, uint64_t vertex,
                                              const uint64_t* retained_neighbor, double* lower,
                                              double* upper) {
  return guarded([&] {
    if (!tree || !lower || !upper) fail(Status::InvalidArgument, "null argument");
    std::optional<VertexId> retained;
    if (retained_neighbor) retained = *retained_neighbor;
    potential::ResistanceBracket b = potential::resistance_to_infinity(tree->tree, vertex, retained);
    *lower = b.lower;
    *upper = b.upper;
  });
}

froglab_status froglab_hitting_probability(const froglab_tree* tree, uint64_t from, uint64_t to,
                                           double* lower, double* upper) {
  return guarded([&] {
    if (!tree || !lower || !upper) fail(Status::InvalidArgument, "null argument");
    potential::Bracket b = potential::hitting_probability(tree->tree, from, to);
    *lower = b.lo;
    *upper = b.hi;
  });
}

froglab_status froglab_harmonic_measure_csv(const froglab_tree* tree, uint64_t vertex, uint32_t level,
                                            const char* csv_path) {
  return guarded([&] {
    if (!tree || !csv_path) fail(Status::InvalidArgument, "null argument");
    potential::HarmonicMeasure hm = potential::harmonic_measure(tree->tree, vertex, level);
    potential::emit_harm_csv(tree->tree, hm, csv_path,
                             std::string("# froglab ") + version_string() + "\n");
  });
}

froglab_status froglab_rho_csv(const froglab_tree* tree, uint32_t n_max, const char* csv_path,
                               double* rho_lower_bound, double* rho_extrapolated) {
  return guarded([&] {
    if (!tree) fail(Status::InvalidArgument, "null tree");
    potential::SpectralEstimate est = potential::return_probability_sequence(tree->tree, n_max);
    if (csv_path)
      potential::emit_rho_csv(est, csv_path, std::string("# froglab ") + version_string() + "\n");
    if (rho_lower_bound) *rho_lower_bound = est.rho_max_root;
    if (rho_extrapolated) *rho_extrapolated = est.rho_extrapolated;
  });
}

froglab_status froglab_expansion(const froglab_tree* tree, uint32_t max_subset_size,
                                 const char* csv_path_or_null, double* phi_enumerated,
                                 double* phi_lower_analytic, uint64_t* certificate_size) {
  return guarded([&] {
    if (!tree) fail(Status::InvalidArgument, "null tree");
    amen::ExpansionReport rep = amen::enumerate_edge_expansion(tree->tree, max_subset_size);
    if (phi_enumerated) *phi_enumerated = rep.phi_enumerated;
    if (phi_lower_analytic) *phi_lower_analytic = rep.phi_lower_analytic;
    if (certificate_size) *certificate_size = rep.certificate.size();
    if (csv_path_or_null) {
      std::ofstream out(csv_path_or_null);
      if (!out) fail(Status::IoError, std::string("cannot write ") + csv_path_or_null);
      out << "# froglab " << version_string() << "\n";
      out << "k,phi,certificate_size,phi_lower_analytic,L,subsets,budget_hit\n";
      out << rep.max_subset_size << "," << rep.phi_enumerated << "," << rep.certificate.size() << ","
          << rep.phi_lower_analytic << "," << rep.L << "," << rep.subsets_enumerated << ","
          << (rep.budget_hit ? 1 : 0) << "\n";
    }
    if (rep.budget_hit) fail(Status::BudgetExceeded, "subset enumeration budget reached (partial report)");
  });
}

froglab_status froglab_transience_threshold(double phi, double* lambda0) {
  return guarded([&] {
    if (!lambda0) fail(Status::InvalidArgument, "null output");
    *lambda0 = amen::transience_threshold(phi);
  });
}

froglab_status froglab_lerw_crossvalidate(const froglab_tree* tree, uint64_t start, uint32_t prefix_len,
                                          uint64_t samples, uint64_t seed, double* tv, double* band) {
  return guarded([&] {
    if (!tree || !tv || !band) fail(Status::InvalidArgument, "null argument");
    if (prefix_len < 1 || prefix_len > 8) fail(Status::InvalidArgument, "prefix_len must be in [1,8]");
    const WeightedTree& t = tree->tree;
    auto si = t.find(start);
    if (!si) fail(Status::InvalidArgument, "no vertex " + std::to_string(start));
    walks::LerwSampler markov(t);
    walks::SrwSampler srw(t);

    // Key a prefix by folding vertex indices; prefixes are at most 8 steps.
    auto key_of = [&](const std::vector<VertexIndex>& path) {
      std::uint64_t key = 1469598103934665603ULL;
      const std::size_t n = std::min<std::size_t>(path.size(), prefix_len + 1);
      for (std::size_t i = 0; i < n; ++i) {
        key ^= path[i] + 1;
        key *= 1099511628211ULL;
      }
      return key;
    };
    std::map<std::uint64_t, std::pair<std::uint64_t, std::uint64_t>> counts;
    const std::uint64_t horizon = 4 * (t.depth_cutoff() + prefix_len) + 64;
    RngStream rng_m = RngStream::derive(seed, {1});
    RngStream rng_r = RngStream::derive(seed, {2});
    for (std::uint64_t i = 0; i < samples; ++i) {
      walks::WalkPath markov_path = markov.sample(*si, horizon, rng_m);
      counts[key_of(markov_path.vertices)].first++;
      walks::WalkPath raw = walks::srw_path(t, *si, {}, horizon, rng_r);
      walks::WalkPath erased = walks::loop_erase(t, raw);
      // Truncate at the root: the chain the Markov sampler runs stops there.
      std::vector<VertexIndex> chain;
      for (VertexIndex v : erased.vertices) {
        chain.push_back(v);
        if (v == t.root()) break;
      }
      counts[key_of(chain)].second++;
    }
    std::vector<std::uint64_t> c1, c2;
    for (const auto& [key, pair] : counts) {
      c1.push_back(pair.first);
      c2.push_back(pair.second);
    }
    stats::TvResult res = stats::tv_distance(c1, c2);
    *tv = res.tv;
    *band = res.band(3.0);
  });
}

froglab_status froglab_run_experiment(const char* config_path) {
  return guarded([&] {
    if (!config_path) fail(Status::InvalidArgument, "null config path");
    lab::run_experiment(lab::ExperimentConfig::parse_file(config_path));
  });
}

froglab_status froglab_sweep_report(const char* directory) {
  return guarded([&] {
    if (!directory) fail(Status::InvalidArgument, "null directory");
    lab::sweep_report(directory);
  });
}

froglab_status froglab_run_invariant_suite(const char* scope, const char* inject_fault, char* report_buf,
                                           size_t report_len, uint32_t* failures) {
  uint32_t failed = 0;
  froglab_status st = guarded([&] {
    auto results = lab::run_invariant_suite(scope ? scope : "", inject_fault ? inject_fault : "");
    std::string report;
    for (const auto& r : results) {
      report += (r.passed ? "[PASS] " : "[FAIL] ") + r.name;
      if (!r.detail.empty()) report += ": " + r.detail;
      report += "\n";
      if (!r.passed) ++failed;
    }
    copy_out(report, report_buf, report_len);
  });
  if (failures) *failures = failed;
  if (st == FROGLAB_OK && failed > 0) {
    g_last_error = std::to_string(failed) + " invariant check(s) failed";
    return FROGLAB_EINVARIANT;
  }
  return st;
}

}  // extern "C"
