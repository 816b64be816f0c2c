#include "dstap.h"

#include <cstring>
#include <string>

#include "dstap/heuristic.hpp"
#include "dstap/tntp.hpp"

using namespace dstap;

struct dstap_network {
    Network net;
};
struct dstap_od {
    ODMatrix od;
};
struct dstap_partition {
    Partition partition;
};
struct dstap_run {
    RunResult result;
};

namespace {

thread_local std::string g_last_error;

dstap_status status_of(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return DSTAP_ERR_ARGUMENT;
        case ErrorKind::Parse: return DSTAP_ERR_PARSE;
        case ErrorKind::Io: return DSTAP_ERR_IO;
        case ErrorKind::Infeasible: return DSTAP_ERR_INFEASIBLE;
        case ErrorKind::Numerical: return DSTAP_ERR_NUMERICAL;
        case ErrorKind::Unsupported: return DSTAP_ERR_UNSUPPORTED;
        case ErrorKind::Internal: return DSTAP_ERR_INTERNAL;
    }
    return DSTAP_ERR_INTERNAL;
}

template <typename Fn>
dstap_status guarded(Fn&& fn) {
    try {
        fn();
        return DSTAP_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return status_of(e.kind());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return DSTAP_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return DSTAP_ERR_INTERNAL;
    }
}

dstap_status fail_argument(const char* message) {
    g_last_error = message;
    return DSTAP_ERR_ARGUMENT;
}

HeuristicConfig config_from(const dstap_options* options) {
    dstap_options defaults;
    dstap_options_init(&defaults);
    const dstap_options& o = options != nullptr ? *options : defaults;
    HeuristicConfig config;
    config.solver.target_rg = o.gap;
    config.solver.max_iterations = o.max_iterations;
    config.solver.newton_scale = o.newton_scale;
    config.per_level_gap = o.per_level_gap;
    config.outer_max_iterations = o.outer_iterations;
    config.heuristic_iterations = o.heuristic_iterations;
    config.worker_count = o.workers;
    config.skip_full_gap = o.skip_full_gap != 0;
    config.full_gap_threshold = o.gap;
    return config;
}

}  // namespace

extern "C" {

const char* dstap_version(void) { return version(); }

const char* dstap_last_error(void) { return g_last_error.c_str(); }

dstap_status dstap_network_read(const char* net_path, dstap_network** out) {
    if (net_path == nullptr || out == nullptr) return fail_argument("null argument");
    return guarded([&] { *out = new dstap_network{parse_network(net_path)}; });
}

void dstap_network_free(dstap_network* net) { delete net; }

int32_t dstap_network_nodes(const dstap_network* net) {
    return net != nullptr ? net->net.num_nodes() : 0;
}
int32_t dstap_network_links(const dstap_network* net) {
    return net != nullptr ? net->net.num_links() : 0;
}
int32_t dstap_network_zones(const dstap_network* net) {
    return net != nullptr ? net->net.num_zones() : 0;
}

dstap_status dstap_od_read(const char* trips_path, const dstap_network* net, dstap_od** out) {
    if (trips_path == nullptr || net == nullptr || out == nullptr) {
        return fail_argument("null argument");
    }
    return guarded([&] { *out = new dstap_od{parse_trips(trips_path, &net->net)}; });
}

void dstap_od_free(dstap_od* od) { delete od; }

dstap_status dstap_od_scale(dstap_od* od, double factor) {
    if (od == nullptr) return fail_argument("null argument");
    return guarded([&] { od->od.scale(factor); });
}

double dstap_od_total_demand(const dstap_od* od) {
    return od != nullptr ? od->od.total_demand() : 0.0;
}

size_t dstap_od_pairs(const dstap_od* od) { return od != nullptr ? od->od.size() : 0; }

dstap_status dstap_flows_read(const dstap_network* net, const char* path, double* flows,
                              size_t len) {
    if (net == nullptr || path == nullptr || flows == nullptr) return fail_argument("null argument");
    if (len != static_cast<size_t>(net->net.num_links())) {
        return fail_argument("flow buffer length must equal the link count");
    }
    return guarded([&] {
        std::vector<double> f = read_flows(net->net, path);
        std::memcpy(flows, f.data(), f.size() * sizeof(double));
    });
}

dstap_status dstap_partition_read(const char* path, const dstap_network* net,
                                  dstap_partition** out) {
    if (path == nullptr || net == nullptr || out == nullptr) return fail_argument("null argument");
    return guarded([&] {
        std::vector<std::int32_t> assignment =
            read_partition_assignment(path, net->net.num_nodes());
        *out = new dstap_partition{Partition::from_assignment(std::move(assignment))};
    });
}

dstap_status dstap_partition_write(const dstap_partition* partition, const char* path) {
    if (partition == nullptr || path == nullptr) return fail_argument("null argument");
    return guarded([&] { write_partition_assignment(partition->partition.subnet_of, path); });
}

void dstap_partition_free(dstap_partition* partition) { delete partition; }

int32_t dstap_partition_subnets(const dstap_partition* partition) {
    return partition != nullptr ? partition->partition.num_subnets : 0;
}

dstap_status dstap_partition_compute(const dstap_network* net, const dstap_od* od,
                                     const char* method, const double* ref_flows, uint64_t seed,
                                     dstap_partition** out) {
    if (net == nullptr || od == nullptr || method == nullptr || out == nullptr) {
        return fail_argument("null argument");
    }
    return guarded([&] {
        std::string name(method);
        std::span<const double> flows;
        if (ref_flows != nullptr) {
            flows = std::span<const double>(ref_flows, static_cast<size_t>(net->net.num_links()));
        }
        std::span<const double> prune_flows;
        Partition raw;
        PrunedGraph pruned;
        if (name == "sdda") {
            pruned = prune_for_partitioning(net->net);
            raw = sdda_partition(pruned.graph, seed);
        } else if (name == "spectral") {
            if (ref_flows == nullptr) {
                throw Error(ErrorKind::InvalidArgument,
                            "flow-weighted spectral partitioning needs reference flows");
            }
            pruned = prune_for_partitioning(net->net, flows);
            std::vector<double> mapped(pruned.to_full_link.size());
            for (std::size_t i = 0; i < mapped.size(); ++i) {
                mapped[i] = flows[static_cast<std::size_t>(pruned.to_full_link[i])];
            }
            raw = spectral_partition(pruned.graph, mapped);
        } else if (name == "spectral-unit") {
            pruned = prune_for_partitioning(net->net);
            raw = spectral_partition(pruned.graph, {});
        } else {
            throw Error(ErrorKind::InvalidArgument, "unknown partitioner '" + name + "'");
        }
        ReattachResult reattached = prune_and_reattach(net->net, od->od, pruned, raw);
        *out = new dstap_partition{std::move(reattached.partition)};
    });
}

dstap_status dstap_partition_refine(const dstap_network* net, const dstap_od* od,
                                    const double* ref_flows, int32_t max_moves,
                                    dstap_partition* partition, int32_t* moves_made) {
    if (net == nullptr || od == nullptr || ref_flows == nullptr || partition == nullptr) {
        return fail_argument("null argument");
    }
    return guarded([&] {
        std::span<const double> flows(ref_flows, static_cast<size_t>(net->net.num_links()));
        std::vector<FmMove> moves;
        partition->partition =
            fm_refine(net->net, od->od, flows, partition->partition, max_moves, &moves);
        if (moves_made != nullptr) *moves_made = static_cast<int32_t>(moves.size());
    });
}

dstap_status dstap_partition_psi(const dstap_network* net, const dstap_od* od,
                                 const double* ref_flows, const dstap_partition* partition,
                                 dstap_psi_report* out) {
    if (net == nullptr || od == nullptr || ref_flows == nullptr || partition == nullptr ||
        out == nullptr) {
        return fail_argument("null argument");
    }
    return guarded([&] {
        std::span<const double> flows(ref_flows, static_cast<size_t>(net->net.num_links()));
        PsiReport report = psi(net->net, od->od, flows, partition->partition);
        *out = {report.interflow, report.interdemand, report.psi, report.n1,
                report.n2,       report.m1,          report.m2,  report.boundary_nodes,
                report.cut_links};
    });
}

void dstap_options_init(dstap_options* options) {
    if (options == nullptr) return;
    options->gap = 1e-6;
    options->max_iterations = 10000;
    options->per_level_gap = 0.05;
    options->outer_iterations = 10;
    options->heuristic_iterations = 1;
    options->workers = 1;
    options->skip_full_gap = 0;
    options->newton_scale = 1.0;
}

dstap_status dstap_solve(const dstap_network* net, const dstap_od* od,
                         const dstap_options* options, dstap_run** out) {
    if (net == nullptr || od == nullptr || out == nullptr) return fail_argument("null argument");
    return guarded([&] {
        HeuristicConfig config = config_from(options);
        *out = new dstap_run{run_centralized(net->net, od->od, config.solver)};
    });
}

dstap_status dstap_heuristic(const dstap_network* net, const dstap_od* od,
                             const dstap_partition* partition, const dstap_options* options,
                             dstap_run** out) {
    if (net == nullptr || od == nullptr || partition == nullptr || out == nullptr) {
        return fail_argument("null argument");
    }
    return guarded([&] {
        *out = new dstap_run{
            run_heuristic(net->net, od->od, partition->partition, config_from(options))};
    });
}

dstap_status dstap_warmstart(const dstap_network* net, const dstap_od* od,
                             const dstap_partition* partition, const dstap_options* options,
                             dstap_run** out) {
    if (net == nullptr || od == nullptr || partition == nullptr || out == nullptr) {
        return fail_argument("null argument");
    }
    return guarded([&] {
        *out = new dstap_run{
            run_warmstart(net->net, od->od, partition->partition, config_from(options))};
    });
}

void dstap_run_free(dstap_run* run) { delete run; }

double dstap_run_relative_gap(const dstap_run* run) {
    return run != nullptr ? run->result.final_rg : 0.0;
}

double dstap_run_tstt(const dstap_run* run) { return run != nullptr ? run->result.tstt : 0.0; }

int32_t dstap_run_best_iteration(const dstap_run* run) {
    return run != nullptr ? run->result.best_iteration : 0;
}

dstap_status dstap_run_link_flows(const dstap_run* run, double* flows, size_t len) {
    if (run == nullptr || flows == nullptr) return fail_argument("null argument");
    if (len != run->result.solution.link_flows.size()) {
        return fail_argument("flow buffer length must equal the link count");
    }
    std::memcpy(flows, run->result.solution.link_flows.data(), len * sizeof(double));
    return DSTAP_OK;
}

dstap_status dstap_run_link_costs(const dstap_run* run, const dstap_network* net, double* costs,
                                  size_t len) {
    if (run == nullptr || net == nullptr || costs == nullptr) return fail_argument("null argument");
    if (len != run->result.solution.link_flows.size() ||
        len != static_cast<size_t>(net->net.num_links())) {
        return fail_argument("cost buffer length must equal the link count");
    }
    return guarded([&] {
        std::vector<double> t = travel_times(net->net, run->result.solution.link_flows);
        std::memcpy(costs, t.data(), t.size() * sizeof(double));
    });
}

size_t dstap_run_trace_rows(const dstap_run* run) {
    return run != nullptr ? run->result.trace.size() : 0;
}

dstap_status dstap_run_trace_get(const dstap_run* run, size_t index, dstap_trace_row* out) {
    if (run == nullptr || out == nullptr) return fail_argument("null argument");
    if (index >= run->result.trace.size()) return fail_argument("trace row index out of range");
    const TraceRow& r = run->result.trace[index];
    out->phase = r.phase.c_str();
    out->iteration = r.iteration;
    out->elapsed_seconds = r.elapsed_seconds;
    out->relative_gap = r.relative_gap;
    out->tstt = r.tstt;
    return DSTAP_OK;
}

dstap_status dstap_run_timing(const dstap_run* run, dstap_timing* out) {
    if (run == nullptr || out == nullptr) return fail_argument("null argument");
    const TimingSplit& t = run->result.timing;
    *out = {t.master_seconds, t.subnet_seconds, t.mapping_seconds, t.full_gap_seconds,
            t.total_seconds};
    return DSTAP_OK;
}

size_t dstap_run_summary(const dstap_run* run, char* buffer, size_t len) {
    if (run == nullptr) return 0;
    const std::string& s = run->result.decomposition_summary;
    if (buffer != nullptr && len > 0) {
        size_t n = std::min(len - 1, s.size());
        std::memcpy(buffer, s.data(), n);
        buffer[n] = '\0';
    }
    return s.size();
}

dstap_status dstap_run_write_flows(const dstap_run* run, const dstap_network* net,
                                   const char* path) {
    if (run == nullptr || net == nullptr || path == nullptr) return fail_argument("null argument");
    return guarded([&] {
        std::vector<double> costs = travel_times(net->net, run->result.solution.link_flows);
        write_flows(net->net, run->result.solution.link_flows, costs, path);
    });
}

dstap_status dstap_run_write_trace(const dstap_run* run, const char* path) {
    if (run == nullptr || path == nullptr) return fail_argument("null argument");
    return guarded([&] { write_trace(run->result.trace, path); });
}

dstap_status dstap_run_write_timing(const dstap_run* run, const char* path) {
    if (run == nullptr || path == nullptr) return fail_argument("null argument");
    return guarded([&] { write_text_file(path, run->result.timing.csv()); });
}

}  // extern "C"
