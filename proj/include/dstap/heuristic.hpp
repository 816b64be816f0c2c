#pragma once

#include "dstap/decomposition.hpp"
#include "dstap/equilibrium.hpp"
#include "dstap/partition.hpp"
#include "dstap/tntp.hpp"

namespace dstap {

struct HeuristicConfig {
    std::int32_t outer_max_iterations = 10;
    double full_gap_threshold = 1e-4;  // outer loop guard
    double per_level_gap = 0.05;       // master and subnetwork target gap per pass
    std::int32_t worker_count = 1;
    bool track_best = true;
    bool skip_full_gap = false;  // fixed-iteration mode, no full-network gap checks
    std::int32_t heuristic_iterations = 1;  // warmstart phase length
    SolverConfig solver;  // newton/drop settings and the final centralized target
};

struct TimingSplit {
    double master_seconds = 0.0;
    double subnet_seconds = 0.0;
    double mapping_seconds = 0.0;
    double full_gap_seconds = 0.0;
    double total_seconds = 0.0;

    std::string csv() const;  // category, seconds, fraction rows
};

struct RunResult {
    PathFlowSolution solution;
    std::vector<TraceRow> trace;
    TimingSplit timing;
    double final_rg = 0.0;   // gap of the returned solution
    double tstt = 0.0;
    std::int32_t best_iteration = 0;
    std::string decomposition_summary;  // empty for centralized runs
};

/// Plain gradient projection on the full network, trace captured.
RunResult run_centralized(const Network& network, const ODMatrix& od, const SolverConfig& config);

/// The decomposition loop: solve master under path constraints, push
/// artificial-link flows into subnetwork demand, solve subnetworks in
/// parallel, refit artificial parameters, map to the full network and measure
/// the full gap. Returns the best mapped solution seen.
RunResult run_heuristic(const Network& network, const ODMatrix& od, const Partition& partition,
                        const HeuristicConfig& config);

/// One (configurable) heuristic pass, then gradient projection on the full
/// network warmstarted from the mapped path flows, solved to
/// config.solver.target_rg. Trace rows carry a "heuristic" / "centralized"
/// phase marker.
RunResult run_warmstart(const Network& network, const ODMatrix& od, const Partition& partition,
                        const HeuristicConfig& config);

}  // namespace dstap
