// froglab command line: batch frog-model experiments and tree diagnostics.
// All functionality goes through the shared-library C API.

#include <cinttypes>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "froglab.h"

namespace {

int exit_code(froglab_status st) {
  switch (st) {
    case FROGLAB_OK: return 0;
    case FROGLAB_EINVARIANT: return 2;
    case FROGLAB_EBUDGET: return 3;
    default: return 1;
  }
}

int finish(froglab_status st) {
  if (st != FROGLAB_OK) std::fprintf(stderr, "froglab: %s\n", froglab_last_error());
  return exit_code(st);
}

struct TreeHandle {
  froglab_tree* tree = nullptr;
  ~TreeHandle() { froglab_tree_free(tree); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"froglab: frog model simulation on weighted trees"};
  app.set_version_flag("--version", std::string(froglab_version()));
  app.require_subcommand(1);

  // gen-tree
  std::string gen_spec, gen_out, gen_resistance = "1";
  std::uint32_t gen_depth = 8;
  auto* gen = app.add_subcommand("gen-tree", "materialize a tree spec into a tree file");
  gen->add_option("spec", gen_spec, "regular(d) | increasing | joined(d) | file(path) | piped(<spec>,len)")
      ->required();
  gen->add_option("-o,--output", gen_out, "output tree file")->required();
  gen->add_option("-d,--depth", gen_depth, "generations to materialize");
  gen->add_option("-r,--resistance", gen_resistance, "constant or cycle:r1,r2,...");

  // simulate
  std::string sim_config;
  auto* sim = app.add_subcommand("simulate", "run the experiment grid described by a config file");
  sim->add_option("-c,--config", sim_config, "experiment config")->required();

  // sweep
  std::string sweep_config, sweep_dir;
  auto* sweep = app.add_subcommand("sweep", "aggregate run outputs into a sweep report");
  sweep->add_option("-c,--config", sweep_config, "config whose outputs directory is aggregated");
  sweep->add_option("-d,--dir", sweep_dir, "directory containing run outputs");

  // expansion
  std::string exp_tree, exp_csv;
  std::uint32_t exp_k = 10;
  auto* exp = app.add_subcommand("expansion", "enumerate the edge-expansion minimum of a tree file");
  exp->add_option("tree", exp_tree, "tree file")->required();
  exp->add_option("-k,--max-subset", exp_k, "largest connected-subset size");
  exp->add_option("-o,--output", exp_csv, "write an expansion CSV");

  // check
  std::string check_scope, check_fault;
  auto* check = app.add_subcommand("check", "run the invariant suite");
  check->add_option("--scope", check_scope, "comma-separated name prefixes (e.g. tree,walks)");
  check->add_option("--inject-fault", check_fault, "flip a known fault on (negative-resistance)");

  // lerw-xval
  std::string xval_tree;
  std::uint64_t xval_samples = 100000, xval_seed = 1, xval_start = 0;
  std::uint32_t xval_prefix = 4;
  bool xval_start_set = false;
  auto* xval = app.add_subcommand("lerw-xval",
                                  "cross-validate the loop-erased walk sampler against erased raw walks");
  xval->add_option("tree", xval_tree, "tree file")->required();
  xval->add_option("-n,--samples", xval_samples, "samples per sampler");
  xval->add_option("-p,--prefix", xval_prefix, "path prefix length compared");
  xval->add_option("-s,--seed", xval_seed, "random seed");
  xval->add_option("--start", xval_start, "start vertex id (default: first child of the root)")
      ->each([&](const std::string&) { xval_start_set = true; });

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    TreeHandle h;
    froglab_status st = froglab_tree_build(gen_spec.c_str(), gen_depth, gen_resistance.c_str(), &h.tree);
    if (st == FROGLAB_OK) st = froglab_tree_save(h.tree, gen_out.c_str());
    if (st == FROGLAB_OK)
      std::printf("wrote %s (%" PRIu64 " vertices, depth %u)\n", gen_out.c_str(),
                  froglab_tree_vertex_count(h.tree), froglab_tree_depth(h.tree));
    return finish(st);
  }

  if (sim->parsed()) return finish(froglab_run_experiment(sim_config.c_str()));

  if (sweep->parsed()) {
    std::string dir = sweep_dir;
    if (dir.empty()) {
      if (sweep_config.empty()) {
        std::fprintf(stderr, "froglab: sweep needs --config or --dir\n");
        return 1;
      }
      // The config names the outputs directory; aggregate everything under it.
      FILE* f = std::fopen(sweep_config.c_str(), "r");
      if (!f) {
        std::fprintf(stderr, "froglab: cannot open %s\n", sweep_config.c_str());
        return 1;
      }
      char line[4096];
      while (std::fgets(line, sizeof line, f)) {
        std::string s(line);
        auto eq = s.find('=');
        if (eq == std::string::npos) continue;
        std::string key = s.substr(0, eq);
        key.erase(key.find_last_not_of(" \t") + 1);
        key.erase(0, key.find_first_not_of(" \t"));
        if (key == "outputs") {
          std::string value = s.substr(eq + 1);
          value.erase(0, value.find_first_not_of(" \t"));
          value.erase(value.find_last_not_of(" \t\r\n") + 1);
          dir = value;
        }
      }
      std::fclose(f);
      if (dir.empty()) {
        std::fprintf(stderr, "froglab: config has no outputs directory\n");
        return 1;
      }
    }
    froglab_status st = froglab_sweep_report(dir.c_str());
    if (st == FROGLAB_OK) std::printf("sweep written under %s\n", dir.c_str());
    return finish(st);
  }

  if (exp->parsed()) {
    TreeHandle h;
    froglab_status st = froglab_tree_load(exp_tree.c_str(), &h.tree);
    if (st != FROGLAB_OK) return finish(st);
    double phi = 0, analytic = 0;
    uint64_t cert = 0;
    st = froglab_expansion(h.tree, exp_k, exp_csv.empty() ? nullptr : exp_csv.c_str(), &phi, &analytic,
                           &cert);
    if (st == FROGLAB_OK || st == FROGLAB_EBUDGET) {
      double lambda0 = 0;
      froglab_transience_threshold(phi, &lambda0);
      std::printf("phi_enumerated %.9g (certificate size %" PRIu64 ", k <= %u)\n", phi, cert, exp_k);
      if (analytic > 0) std::printf("phi_lower_analytic %.9g\n", analytic);
      std::printf("transience_threshold %.9g\n", lambda0);
    }
    return finish(st);
  }

  if (check->parsed()) {
    std::vector<char> report(1 << 16);
    uint32_t failures = 0;
    froglab_status st =
        froglab_run_invariant_suite(check_scope.empty() ? nullptr : check_scope.c_str(),
                                    check_fault.empty() ? nullptr : check_fault.c_str(), report.data(),
                                    report.size(), &failures);
    std::fputs(report.data(), stdout);
    std::printf("%u failure(s)\n", failures);
    return finish(st);
  }

  if (xval->parsed()) {
    TreeHandle h;
    froglab_status st = froglab_tree_load(xval_tree.c_str(), &h.tree);
    if (st != FROGLAB_OK) return finish(st);
    if (!xval_start_set) xval_start = 1;  // generated trees number the first child 1
    double tv = 0, band = 0;
    st = froglab_lerw_crossvalidate(h.tree, xval_start, xval_prefix, xval_samples, xval_seed, &tv, &band);
    if (st == FROGLAB_OK) {
      std::printf("tv %.6g band(3sigma) %.6g verdict %s\n", tv, band, tv <= band ? "PASS" : "FAIL");
      if (tv > band) return 2;
    }
    return finish(st);
  }

  return 0;
}
