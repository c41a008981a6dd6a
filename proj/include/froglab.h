/*
 * froglab C API: frog-model simulation and tree potential theory behind a
 * stable shared-library boundary. Handles are opaque; every function returns
 * a froglab_status, and froglab_last_error() describes the most recent
 * failure on the calling thread.
 */

#ifndef FROGLAB_H
#define FROGLAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define FROGLAB_API __declspec(dllexport)
#else
#define FROGLAB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct froglab_tree froglab_tree;

typedef enum froglab_status {
  FROGLAB_OK = 0,
  FROGLAB_EINVAL = 1,
  FROGLAB_EPARSE = 2,
  FROGLAB_EBUDGET = 3,
  FROGLAB_EDEPTH = 4,
  FROGLAB_EIO = 5,
  FROGLAB_EINVARIANT = 6,
} froglab_status;

FROGLAB_API const char* froglab_version(void);
FROGLAB_API const char* froglab_last_error(void);

/* ---- trees ---- */

/* spec: regular(d) | increasing | joined(d) | file(path) | piped(<spec>,len).
 * resistance_rule: decimal constant, or "cycle:r1,r2,..." applied per edge in
 * preorder. */
FROGLAB_API froglab_status froglab_tree_build(const char* spec, uint32_t depth,
                                              const char* resistance_rule, froglab_tree** out);
FROGLAB_API froglab_status froglab_tree_load(const char* path, froglab_tree** out);
FROGLAB_API froglab_status froglab_tree_save(const froglab_tree* tree, const char* path);
FROGLAB_API void froglab_tree_free(froglab_tree* tree);

FROGLAB_API uint64_t froglab_tree_vertex_count(const froglab_tree* tree);
FROGLAB_API uint32_t froglab_tree_depth(const froglab_tree* tree);

/* Leafless bounded-degree class check. On return *ok is 1/0; observed
 * minimum/maximum interior degree and maximum resistance are filled, and up
 * to violations_len bytes of semicolon-separated violations are written. */
FROGLAB_API froglab_status froglab_tree_validate(const froglab_tree* tree, int* ok, uint32_t* min_degree,
                                                 uint32_t* max_degree, double* max_resistance,
                                                 char* violations, size_t violations_len);

/* Backbone summary of the finite realization: largest off-backbone component
 * (anchored at its attachment vertex) and the longest run of backbone
 * vertices of backbone-degree 2. */
FROGLAB_API froglab_status froglab_tree_backbone(const froglab_tree* tree, uint64_t* max_component,
                                                 uint64_t* max_degree2_run, int* backbone_empty);
FROGLAB_API froglab_status froglab_tree_classify_nonamenable(const froglab_tree* tree, uint64_t M,
                                                             int* nonamenable);
FROGLAB_API froglab_status froglab_tree_certified_L(const froglab_tree* tree, uint64_t* L);
FROGLAB_API froglab_status froglab_tree_contract_pipes(const froglab_tree* tree, froglab_tree** out);

/* ---- potential theory ---- */

FROGLAB_API froglab_status froglab_resistance_to_infinity(const froglab_tree* tree, uint64_t vertex,
                                                          const uint64_t* retained_neighbor,
                                                          double* lower, double* upper);
FROGLAB_API froglab_status froglab_hitting_probability(const froglab_tree* tree, uint64_t from,
                                                       uint64_t to, double* lower, double* upper);
FROGLAB_API froglab_status froglab_harmonic_measure_csv(const froglab_tree* tree, uint64_t vertex,
                                                        uint32_t level, const char* csv_path);
FROGLAB_API froglab_status froglab_rho_csv(const froglab_tree* tree, uint32_t n_max, const char* csv_path,
                                           double* rho_lower_bound, double* rho_extrapolated);

/* ---- expansion ---- */

FROGLAB_API froglab_status froglab_expansion(const froglab_tree* tree, uint32_t max_subset_size,
                                             const char* csv_path_or_null, double* phi_enumerated,
                                             double* phi_lower_analytic, uint64_t* certificate_size);
FROGLAB_API froglab_status froglab_transience_threshold(double phi, double* lambda0);

/* ---- loop-erased walk cross-validation ---- */

/* Total-variation distance between the Markov-chain sampler and loop-erased
 * raw walks over `prefix_len`-step path prefixes from `start`, plus the
 * 3-sigma null band for `samples` draws per sampler. */
FROGLAB_API froglab_status froglab_lerw_crossvalidate(const froglab_tree* tree, uint64_t start,
                                                      uint32_t prefix_len, uint64_t samples,
                                                      uint64_t seed, double* tv, double* band);

/* ---- orchestration ---- */

FROGLAB_API froglab_status froglab_run_experiment(const char* config_path);
FROGLAB_API froglab_status froglab_sweep_report(const char* directory);

/* Runs the invariant suite; writes a line-per-check report into report_buf
 * (truncated to report_len) and the number of failed checks into *failures.
 * Returns FROGLAB_EINVARIANT when failures > 0. scope: comma-separated name
 * prefixes or NULL; inject_fault: NULL or "negative-resistance". */
FROGLAB_API froglab_status froglab_run_invariant_suite(const char* scope, const char* inject_fault,
                                                       char* report_buf, size_t report_len,
                                                       uint32_t* failures);

#ifdef __cplusplus
}
#endif

#endif /* FROGLAB_H */
