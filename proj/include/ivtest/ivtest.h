/* ivtest — nonparametric bootstrap test of instrument validity for
 * heterogeneous causal effect models (ordered, unordered, binary, and
 * covariate-conditional treatments), plus a warp-speed simulation lab.
 *
 * C API over opaque handles. Functions return ivt_status; on failure a
 * thread-local message is available via ivt_last_error(). Strings returned
 * through char** are owned by the caller and released with ivt_string_free().
 */
#ifndef IVTEST_H
#define IVTEST_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct ivt_dataset ivt_dataset;
typedef struct ivt_config ivt_config;
typedef struct ivt_result ivt_result;

typedef enum ivt_status {
    IVT_OK = 0,
    IVT_ERR_DATA = 2,     /* malformed or inconsistent input data */
    IVT_ERR_CONFIG = 3,   /* invalid configuration */
    IVT_ERR_INTERNAL = 4, /* unexpected internal failure */
    IVT_ERR_ARG = 5       /* null pointer or out-of-range argument */
} ivt_status;

const char* ivt_version(void);
const char* ivt_last_error(void);
void ivt_string_free(char* s);

/* ---- datasets ---------------------------------------------------------- */

/* Loads a CSV with a header row. x_cols may be NULL or a comma-separated
 * list of covariate columns (their values combine into one covariate cell).
 */
ivt_status ivt_dataset_read_csv(const char* path, const char* y_col, const char* d_col,
                                const char* z_col, const char* x_cols, ivt_dataset** out);

/* Builds a dataset from label arrays; x may be NULL. */
ivt_status ivt_dataset_from_rows(int64_t n, const double* y, const char* const* d,
                                 const char* const* z, const char* const* x, ivt_dataset** out);

void ivt_dataset_free(ivt_dataset* data);
int64_t ivt_dataset_n(const ivt_dataset* data);
/* column: 'd', 'z' or 'x'. Returns 0 for a missing covariate column. */
int64_t ivt_dataset_levels(const ivt_dataset* data, char column);

/* ---- configuration ----------------------------------------------------- */

ivt_config* ivt_config_new(void);
void ivt_config_free(ivt_config* config);

/* mode: ordered | unordered | binary | ordered-with-covariates |
 *       unordered-with-covariates */
ivt_status ivt_config_set_mode(ivt_config* config, const char* mode);
ivt_status ivt_config_set_tau(ivt_config* config, double tau); /* INFINITY allowed */
ivt_status ivt_config_set_xi0(ivt_config* config, double xi0);
ivt_status ivt_config_set_eta(ivt_config* config, double eta);
ivt_status ivt_config_set_alpha(ivt_config* config, double alpha);
ivt_status ivt_config_set_bootstrap(ivt_config* config, int64_t n_bootstrap);
ivt_status ivt_config_set_seed(ivt_config* config, uint64_t seed);
ivt_status ivt_config_set_threads(ivt_config* config, int threads);

/* Dirac measure at one xi. */
ivt_status ivt_config_set_nu_dirac(ivt_config* config, double xi);
/* Discrete measure on m ascending points; weights NULL means equal weights
 * summing to one. */
ivt_status ivt_config_set_nu_grid(ivt_config* config, const double* xis, const double* weights,
                                  int64_t m);
/* name: "standard" (0.07..0.30, 1) or "small" (0.01..0.10). */
ivt_status ivt_config_set_nu_named(ivt_config* config, const char* name);

ivt_status ivt_config_add_c_triple(ivt_config* config, const char* d, const char* z,
                                   const char* z_prime);
ivt_status ivt_config_set_instrument_order(ivt_config* config, const char* const* labels,
                                           int64_t k);

/* ---- running the test --------------------------------------------------- */

ivt_status ivt_run_test(const ivt_dataset* data, const ivt_config* config, ivt_result** out);
void ivt_result_free(ivt_result* result);

double ivt_result_ts(const ivt_result* result);
double ivt_result_critical_value(const ivt_result* result);
double ivt_result_p_value(const ivt_result* result);
int ivt_result_reject(const ivt_result* result);
double ivt_result_lambda_hat(const ivt_result* result);
double ivt_result_t_n(const ivt_result* result);
uint64_t ivt_result_contact_set_size(const ivt_result* result);
int64_t ivt_result_n_xi(const ivt_result* result);
double ivt_result_xi(const ivt_result* result, int64_t i);
double ivt_result_sup(const ivt_result* result, int64_t i);

/* Full JSON report. Identical configs and seeds give byte-identical reports
 * unless include_timing is set. */
ivt_status ivt_result_report_json(const ivt_result* result, int include_timing, char** out);
ivt_status ivt_result_report_text(const ivt_result* result, char** out);

/* ---- simulation lab ----------------------------------------------------- */

/* JSON array of design names / table ids. */
ivt_status ivt_dgp_names(char** out);
ivt_status ivt_table_names(char** out);

/* Warp-speed rejection rate for one design. r < 0 uses the design default
 * instrument share; config supplies tau, nu (empty: design default grid),
 * alpha, eta, xi0, seed and threads. Returns a JSON object. */
ivt_status ivt_simulate_dgp(const char* dgp, int64_t n, double r, const ivt_config* config,
                            int64_t n_mc, char** out);

/* Reproduces one rejection-rate table at the requested scale. n_override = 0
 * keeps the design sample sizes. as_text selects an aligned-text rendering
 * instead of JSON. */
ivt_status ivt_simulate_table(const char* table_id, int64_t n_mc, int64_t n_override,
                              uint64_t seed, int threads, int as_text, char** out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* IVTEST_H */
