#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dstap/network.hpp"

namespace dstap {

struct Partition {
    std::vector<std::int32_t> subnet_of;
    std::int32_t num_subnets = 0;

    // Validates that subnet ids are 0-based contiguous and every node assigned.
    static Partition from_assignment(std::vector<std::int32_t> assignment);
};

struct PartitionStats {
    std::vector<std::int32_t> nodes_per_subnet;
    std::vector<std::int32_t> links_per_subnet;  // links internal to a subnet
    std::vector<LinkId> cut_links;
    std::vector<NodeId> boundary_nodes;
};

PartitionStats partition_stats(const Network& network, const Partition& partition);

struct PsiReport {
    double interflow = 0.0;
    double interdemand = 0.0;
    double psi = 0.0;
    std::int32_t n1 = 0, n2 = 0;  // node split (two-subnet reports)
    std::int32_t m1 = 0, m2 = 0;  // internal link split
    std::int32_t boundary_nodes = 0;
    std::int32_t cut_links = 0;

    std::string table() const;  // one formatted report block
};

/// psi = interflow - interdemand: equilibrium flow crossing the cut minus the
/// demand that has to cross it. Zero means no equilibrium path leaves a
/// subnetwork and comes back.
PsiReport psi(const Network& network, const ODMatrix& od, std::span<const double> reference_flows,
              const Partition& partition);

struct FmMove {
    NodeId node = kNoNode;
    std::int32_t from_subnet = 0;
    double delta_psi = 0.0;
    double psi_after = 0.0;
};

/// Local refinement for two-subnet partitions: repeatedly moves the boundary
/// node with the largest psi reduction, rejecting moves that disconnect or
/// empty a side. Nodes move at most once per pass.
Partition fm_refine(const Network& network, const ODMatrix& od,
                    std::span<const double> reference_flows, const Partition& partition,
                    std::int32_t max_moves, std::vector<FmMove>* moves = nullptr);

/// Seed-growth bisection: two seeds found by a double sweep over free-flow
/// times, regions grown alternately by nearest shortest-path distance.
Partition sdda_partition(const Network& network, std::uint64_t seed = 0);

/// Sign split of the Fiedler vector of the flow-weighted graph Laplacian
/// (deflated power iteration). Pass an empty span for unit weights, which
/// approximates a minimal-cut-count objective.
Partition spectral_partition(const Network& network, std::span<const double> reference_flows);

struct PrunedGraph {
    Network graph;                      // no centroids, optionally no zero-flow links
    std::vector<NodeId> to_full_node;   // pruned node -> full node
    std::vector<NodeId> from_full_node; // full node -> pruned node or kNoNode
    std::vector<LinkId> to_full_link;
    std::vector<NodeId> dropped_nodes;  // outside the largest surviving component
};

/// Removes restricted centroid nodes and their connectors; with reference
/// flows, also drops zero-flow links and keeps the largest remaining
/// component. Partitioners run on the result.
PrunedGraph prune_for_partitioning(const Network& network,
                                   std::span<const double> reference_flows = {});

struct ReattachResult {
    Partition partition;                       // over the full node set
    std::vector<NodeId> multi_attached_zones;  // centroids touching several subnets
    std::vector<NodeId> dropped_nodes;         // carried along with an adjacent subnet
};

/// Lifts a partition of the pruned graph back to the full network: centroids
/// follow their connectors, dropped components follow their strongest
/// attachment.
ReattachResult prune_and_reattach(const Network& network, const ODMatrix& od,
                                  const PrunedGraph& pruned, const Partition& raw);

/// For each zone, the set of subnets it can serve directly: its own subnet for
/// through-capable zones, the subnets of its connector endpoints for
/// restricted centroids (several for boundary-straddling centroids).
std::vector<std::vector<std::int32_t>> zone_attachments(const Network& network,
                                                        const Partition& partition);

bool subnets_connected(const Network& network, const Partition& partition);

}  // namespace dstap
