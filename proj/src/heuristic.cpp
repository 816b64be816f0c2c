#include "dstap/heuristic.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace dstap {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void validate(const HeuristicConfig& config) {
    if (config.worker_count < 1) {
        throw Error(ErrorKind::InvalidArgument, "worker count must be at least 1");
    }
    if (config.per_level_gap <= 0.0) {
        throw Error(ErrorKind::InvalidArgument, "per-level gap must be positive");
    }
    if (config.outer_max_iterations < 1) {
        throw Error(ErrorKind::InvalidArgument, "outer iteration limit must be at least 1");
    }
}

/// Runs fn(i) for i in [0, count) on up to `workers` threads. Results land in
/// per-index slots, so scheduling cannot change the outcome.
template <typename Fn>
void parallel_for_index(std::int32_t count, std::int32_t workers, Fn&& fn) {
    if (count <= 0) return;
    std::int32_t used = std::min(workers, count);
    if (used <= 1) {
        for (std::int32_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::int32_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto body = [&] {
        while (true) {
            std::int32_t i = next.fetch_add(1);
            if (i >= count) break;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(used));
    for (std::int32_t t = 0; t < used; ++t) pool.emplace_back(body);
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

std::string TimingSplit::csv() const {
    auto fraction = [&](double s) { return total_seconds > 0.0 ? s / total_seconds : 0.0; };
    char buf[128];
    std::ostringstream out;
    out << "category,seconds,fraction\n";
    auto row = [&](const char* name, double s) {
        std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f\n", name, s, fraction(s));
        out << buf;
    };
    row("master_solve", master_seconds);
    row("subnet_solves", subnet_seconds);
    row("flow_mapping", mapping_seconds);
    row("full_gap", full_gap_seconds);
    std::snprintf(buf, sizeof(buf), "total,%.6f,1.000000\n", total_seconds);
    out << buf;
    return out.str();
}

RunResult run_centralized(const Network& network, const ODMatrix& od, const SolverConfig& config) {
    auto t0 = Clock::now();
    SolveResult solved = solve(network, od, config);
    RunResult result;
    result.trace.reserve(solved.trace.size());
    for (const ConvergenceRow& r : solved.trace) {
        result.trace.push_back({"centralized", r.iteration, r.elapsed_seconds, r.relative_gap, r.tstt});
    }
    result.final_rg = solved.final_rg;
    result.tstt = solved.trace.empty() ? 0.0 : solved.trace.back().tstt;
    result.solution = std::move(solved.solution);
    result.timing.total_seconds = seconds_since(t0);
    return result;
}

namespace {

struct HeuristicState {
    Decomposition decomposition;
    std::unique_ptr<SpRoutine> master_routine;
    PathFlowSolution master_solution;
    std::vector<PathFlowSolution> subnet_solutions;
    bool have_master = false;
    std::vector<char> have_subnet;
};

// One outer pass of the decomposition loop; fills trace/timing and returns
// the mapped full-network solution.
PathFlowSolution heuristic_iteration(HeuristicState& state, const Network& network,
                                     const ODMatrix& od, const HeuristicConfig& config,
                                     TimingSplit& timing) {
    Decomposition& d = state.decomposition;
    SolverConfig level = config.solver;
    level.target_rg = config.per_level_gap;

    auto t_master = Clock::now();
    if (!d.master_od().empty()) {
        SolveResult master = solve(d.master().net, d.master_od(), level, *state.master_routine,
                                   state.have_master ? &state.master_solution : nullptr);
        state.master_solution = std::move(master.solution);
        state.have_master = true;
        d.update_subnet_demand(state.master_solution);
    }
    timing.master_seconds += seconds_since(t_master);

    auto t_subnet = Clock::now();
    std::int32_t k = d.num_subnets();
    if (state.subnet_solutions.empty()) {
        state.subnet_solutions.resize(static_cast<std::size_t>(k));
        state.have_subnet.assign(static_cast<std::size_t>(k), 0);
    }
    parallel_for_index(k, config.worker_count, [&](std::int32_t s) {
        ODMatrix demand = d.subnet_demand(s);
        const Network& net = d.subnets()[static_cast<std::size_t>(s)].net;
        if (demand.empty()) {
            PathFlowSolution empty;
            empty.link_flows.assign(static_cast<std::size_t>(net.num_links()), 0.0);
            state.subnet_solutions[static_cast<std::size_t>(s)] = std::move(empty);
            state.have_subnet[static_cast<std::size_t>(s)] = 1;
            return;
        }
        const PathFlowSolution* init = state.have_subnet[static_cast<std::size_t>(s)]
                                           ? &state.subnet_solutions[static_cast<std::size_t>(s)]
                                           : nullptr;
        SolveResult solved = solve(net, demand, level, init);
        state.subnet_solutions[static_cast<std::size_t>(s)] = std::move(solved.solution);
        state.have_subnet[static_cast<std::size_t>(s)] = 1;
    });
    timing.subnet_seconds += seconds_since(t_subnet);

    d.update_artificial_params(state.subnet_solutions);

    auto t_map = Clock::now();
    PathFlowSolution mapped =
        d.map_to_full(network, od, state.master_solution, state.subnet_solutions);
    timing.mapping_seconds += seconds_since(t_map);
    return mapped;
}

RunResult run_heuristic_phase(const Network& network, const ODMatrix& od,
                              const Partition& partition, const HeuristicConfig& config,
                              std::int32_t outer_iterations) {
    validate(config);
    auto t0 = Clock::now();

    HeuristicState state{Decomposition::build(network, od, partition), nullptr, {}, {}, false, {}};
    state.master_routine = state.decomposition.make_master_routine();

    RunResult result;
    result.decomposition_summary = state.decomposition.summary();
    result.final_rg = std::numeric_limits<double>::infinity();

    for (std::int32_t iter = 1; iter <= outer_iterations; ++iter) {
        PathFlowSolution mapped = heuristic_iteration(state, network, od, config, result.timing);

        double rg = std::numeric_limits<double>::quiet_NaN();
        if (!config.skip_full_gap) {
            auto t_gap = Clock::now();
            rg = state.decomposition.full_gap(network, od, mapped);
            result.timing.full_gap_seconds += seconds_since(t_gap);
        }
        double tstt = total_system_travel_time(network, mapped.link_flows);
        result.trace.push_back({"heuristic", iter, seconds_since(t0), rg, tstt});

        bool adopt;
        if (config.skip_full_gap) {
            adopt = true;  // no gap information: keep the latest iterate
        } else if (result.best_iteration == 0) {
            adopt = true;
        } else if (config.track_best) {
            adopt = rg < result.final_rg;
        } else {
            adopt = true;
        }
        if (adopt) {
            result.solution = std::move(mapped);
            result.final_rg = rg;
            result.tstt = tstt;
            result.best_iteration = iter;
        }
        if (!config.skip_full_gap && rg <= config.full_gap_threshold) break;
    }

    result.timing.total_seconds = seconds_since(t0);
    return result;
}

}  // namespace

RunResult run_heuristic(const Network& network, const ODMatrix& od, const Partition& partition,
                        const HeuristicConfig& config) {
    return run_heuristic_phase(network, od, partition, config, config.outer_max_iterations);
}

RunResult run_warmstart(const Network& network, const ODMatrix& od, const Partition& partition,
                        const HeuristicConfig& config) {
    validate(config);
    auto t0 = Clock::now();
    RunResult phase1 = run_heuristic_phase(network, od, partition, config,
                                           config.heuristic_iterations);

    RunResult result;
    result.decomposition_summary = phase1.decomposition_summary;
    result.timing = phase1.timing;
    result.trace = std::move(phase1.trace);

    PathFlowSolution warm = warmstart_from(network, phase1.solution, od);
    SolveResult solved = solve(network, od, config.solver, &warm);

    double phase1_elapsed = seconds_since(t0);
    for (const ConvergenceRow& r : solved.trace) {
        result.trace.push_back(
            {"centralized", r.iteration, phase1_elapsed + r.elapsed_seconds, r.relative_gap, r.tstt});
    }
    result.final_rg = solved.final_rg;
    result.tstt = solved.trace.empty() ? 0.0 : solved.trace.back().tstt;
    result.solution = std::move(solved.solution);
    result.best_iteration = solved.iterations;
    result.timing.total_seconds = seconds_since(t0);
    return result;
}

}  // namespace dstap
