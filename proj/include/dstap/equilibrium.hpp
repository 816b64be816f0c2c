#pragma once

#include <functional>
#include <memory>

#include "dstap/network.hpp"
#include "dstap/shortest_path.hpp"
#include "dstap/tntp.hpp"

namespace dstap {

struct SolverConfig {
    double target_rg = 1e-6;
    std::int32_t max_iterations = 10000;
    double newton_scale = 1.0;        // in (0, 1]
    double path_cost_epsilon = 1e-10; // minutes; slack when comparing path costs
    double drop_threshold = 1e-10;    // vehicles/hour; paths below are folded back
};

/// One-to-all shortest paths for the solver. The default routine runs plain
/// label setting; master networks substitute the constrained routines here so
/// both column generation and the gap check respect the path constraint.
class SpRoutine {
public:
    struct Result {
        std::vector<double> cost;                // per destination queried, same order
        std::vector<std::vector<LinkId>> paths;  // filled only when need_paths
    };

    virtual ~SpRoutine() = default;
    virtual Result solve(NodeId origin, std::span<const double> link_costs,
                         std::span<const NodeId> destinations, bool need_paths) = 0;
};

class DijkstraRoutine final : public SpRoutine {
public:
    explicit DijkstraRoutine(const Network& network) : network_(network) {}
    Result solve(NodeId origin, std::span<const double> link_costs,
                 std::span<const NodeId> destinations, bool need_paths) override;

private:
    const Network& network_;
};

struct SolveResult {
    PathFlowSolution solution;
    std::vector<ConvergenceRow> trace;
    std::int32_t iterations = 0;
    double final_rg = 0.0;
};

/// Path-based gradient projection: per OD pair, flow shifts from each
/// non-shortest used path toward the shortest one by a Newton step over the
/// symmetric-difference links. ODs are visited in fixed origin order; the gap
/// is checked every iteration.
SolveResult solve(const Network& network, const ODMatrix& od, const SolverConfig& config,
                  SpRoutine& sp, const PathFlowSolution* initial = nullptr);
SolveResult solve(const Network& network, const ODMatrix& od, const SolverConfig& config,
                  const PathFlowSolution* initial = nullptr);

/// One Newton equilibration pass inside a single OD's used-path set.
/// `link_flows` is updated in place; dropped paths return their flow to the
/// current shortest path.
void equilibrate_od(const Network& network, OdPathSet& od, std::vector<double>& link_flows,
                    const SolverConfig& config);

/// Rescales a prior solution's per-OD path flows to the target demands
/// (proportionally); ODs absent from the prior solution are loaded onto the
/// shortest path at the costs induced by the rescaled flows (found with `sp`
/// when given, plain label setting otherwise).
PathFlowSolution warmstart_from(const Network& network, const PathFlowSolution& prior,
                                const ODMatrix& target, SpRoutine* sp = nullptr);

}  // namespace dstap
