#pragma once

#include <optional>
#include <vector>

#include "dstap/network.hpp"
#include "dstap/shortest_path.hpp"

namespace dstap::testing {

struct MsaResult {
    std::vector<double> link_flows;
    double relative_gap = 0.0;
    double tstt = 0.0;
    std::int32_t iterations = 0;
};

/// Method of successive averages with all-or-nothing loading and step 1/k;
/// slow but entirely independent of the path-based solver.
MsaResult msa_solve(const Network& network, const ODMatrix& od, double target_rg,
                    std::int64_t max_iterations);

/// Beckmann value of flows induced by fixed path sets and path flows.
double beckmann_of_paths(const Network& network,
                         const std::vector<std::vector<LinkId>>& paths,
                         const std::vector<double>& path_flows);

/// Minimizes the Beckmann objective over (h1, h2) with h3 = demand - h1 - h2
/// by nested ternary search; for three fixed paths of one OD pair.
std::vector<double> ternary_simplex_ue(const Network& network,
                                       const std::vector<std::vector<LinkId>>& paths,
                                       double demand, double tolerance);

struct OracleOd {
    NodeId origin;
    NodeId destination;
    double demand;
    std::vector<std::vector<LinkId>> paths;  // every simple path, enumerated
};

/// Certified equilibrium over enumerated paths: a support is refined with a
/// damped Newton solve of the equal-cost system, then the Wardrop conditions
/// are verified directly (equal costs on used paths, no cheaper unused path).
/// Returns link flows with KKT residual below `tolerance`.
std::optional<std::vector<double>> certified_ue(const Network& network,
                                                std::vector<OracleOd> ods, double tolerance);

/// All simple paths for an OD pair respecting the through-node rule; plain
/// wrapper used to build OracleOd path sets.
std::vector<std::vector<LinkId>> all_simple_paths(const Network& network, NodeId origin,
                                                  NodeId destination, std::int32_t max_links);

}  // namespace dstap::testing
