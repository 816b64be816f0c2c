/*
 * C API for the traffic assignment decomposition toolkit.
 *
 * All objects are opaque handles created and destroyed through this
 * interface. Functions return DSTAP_OK on success; on failure they return a
 * status code and leave a message retrievable with dstap_last_error() (the
 * message is thread-local and valid until the next failing call on the same
 * thread). Output buffers are caller-allocated unless noted.
 */
#ifndef DSTAP_H
#define DSTAP_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dstap_status {
    DSTAP_OK = 0,
    DSTAP_ERR_ARGUMENT = 1,    /* invalid values or structural mismatch */
    DSTAP_ERR_PARSE = 2,       /* malformed input file */
    DSTAP_ERR_IO = 3,          /* filesystem failure */
    DSTAP_ERR_INFEASIBLE = 4,  /* disconnected OD pair or centroid */
    DSTAP_ERR_NUMERICAL = 5,   /* degenerate or non-finite computation */
    DSTAP_ERR_UNSUPPORTED = 6, /* request outside the implemented scope */
    DSTAP_ERR_INTERNAL = 7
} dstap_status;

typedef struct dstap_network dstap_network;
typedef struct dstap_od dstap_od;
typedef struct dstap_partition dstap_partition;
typedef struct dstap_run dstap_run;

const char* dstap_version(void);
const char* dstap_last_error(void);

/* ---- instances ---------------------------------------------------- */

dstap_status dstap_network_read(const char* net_path, dstap_network** out);
void dstap_network_free(dstap_network* net);
int32_t dstap_network_nodes(const dstap_network* net);
int32_t dstap_network_links(const dstap_network* net);
int32_t dstap_network_zones(const dstap_network* net);

dstap_status dstap_od_read(const char* trips_path, const dstap_network* net, dstap_od** out);
void dstap_od_free(dstap_od* od);
dstap_status dstap_od_scale(dstap_od* od, double factor);
double dstap_od_total_demand(const dstap_od* od);
size_t dstap_od_pairs(const dstap_od* od);

/* reads a (tail, head, flow, cost) file into a flow vector of length
 * dstap_network_links(net) */
dstap_status dstap_flows_read(const dstap_network* net, const char* path, double* flows,
                              size_t len);

/* ---- partitions ---------------------------------------------------- */

dstap_status dstap_partition_read(const char* path, const dstap_network* net,
                                  dstap_partition** out);
dstap_status dstap_partition_write(const dstap_partition* partition, const char* path);
void dstap_partition_free(dstap_partition* partition);
int32_t dstap_partition_subnets(const dstap_partition* partition);

/* method: "sdda", "spectral" (flow-weighted; ref_flows required) or
 * "spectral-unit" (unit weights). Centroids and, for flow-weighted methods,
 * zero-flow links are pruned before partitioning and reattached after. */
dstap_status dstap_partition_compute(const dstap_network* net, const dstap_od* od,
                                     const char* method, const double* ref_flows, uint64_t seed,
                                     dstap_partition** out);

dstap_status dstap_partition_refine(const dstap_network* net, const dstap_od* od,
                                    const double* ref_flows, int32_t max_moves,
                                    dstap_partition* partition, int32_t* moves_made);

typedef struct dstap_psi_report {
    double interflow;
    double interdemand;
    double psi;
    int32_t n1, n2;
    int32_t m1, m2;
    int32_t boundary_nodes;
    int32_t cut_links;
} dstap_psi_report;

dstap_status dstap_partition_psi(const dstap_network* net, const dstap_od* od,
                                 const double* ref_flows, const dstap_partition* partition,
                                 dstap_psi_report* out);

/* ---- solvers -------------------------------------------------------- */

typedef struct dstap_options {
    double gap;                  /* target relative gap (default 1e-6) */
    int32_t max_iterations;      /* solver iteration cap (default 10000) */
    double per_level_gap;        /* heuristic master/subnet gap (default 0.05) */
    int32_t outer_iterations;    /* heuristic outer loop cap (default 10) */
    int32_t heuristic_iterations; /* warmstart phase-1 passes (default 1) */
    int32_t workers;             /* subnetwork solver pool size (default 1) */
    int32_t skip_full_gap;       /* heuristic: run fixed iterations, no gap */
    double newton_scale;         /* flow shift damping in (0,1] (default 1) */
} dstap_options;

void dstap_options_init(dstap_options* options);

dstap_status dstap_solve(const dstap_network* net, const dstap_od* od,
                         const dstap_options* options, dstap_run** out);
dstap_status dstap_heuristic(const dstap_network* net, const dstap_od* od,
                             const dstap_partition* partition, const dstap_options* options,
                             dstap_run** out);
dstap_status dstap_warmstart(const dstap_network* net, const dstap_od* od,
                             const dstap_partition* partition, const dstap_options* options,
                             dstap_run** out);
void dstap_run_free(dstap_run* run);

/* ---- results -------------------------------------------------------- */

double dstap_run_relative_gap(const dstap_run* run);
double dstap_run_tstt(const dstap_run* run);
int32_t dstap_run_best_iteration(const dstap_run* run);
dstap_status dstap_run_link_flows(const dstap_run* run, double* flows, size_t len);
dstap_status dstap_run_link_costs(const dstap_run* run, const dstap_network* net, double* costs,
                                  size_t len);

size_t dstap_run_trace_rows(const dstap_run* run);
typedef struct dstap_trace_row {
    const char* phase; /* owned by the run handle */
    int32_t iteration;
    double elapsed_seconds;
    double relative_gap;
    double tstt;
} dstap_trace_row;
dstap_status dstap_run_trace_get(const dstap_run* run, size_t index, dstap_trace_row* out);

typedef struct dstap_timing {
    double master_seconds;
    double subnet_seconds;
    double mapping_seconds;
    double full_gap_seconds;
    double total_seconds;
} dstap_timing;
dstap_status dstap_run_timing(const dstap_run* run, dstap_timing* out);

/* decomposition size summary of a heuristic/warmstart run; empty string for
 * centralized runs. Returns required length (excluding NUL) and copies up to
 * len-1 bytes. */
size_t dstap_run_summary(const dstap_run* run, char* buffer, size_t len);

/* ---- file outputs ---------------------------------------------------- */

dstap_status dstap_run_write_flows(const dstap_run* run, const dstap_network* net,
                                   const char* path);
dstap_status dstap_run_write_trace(const dstap_run* run, const char* path);
dstap_status dstap_run_write_timing(const dstap_run* run, const char* path);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* DSTAP_H */
