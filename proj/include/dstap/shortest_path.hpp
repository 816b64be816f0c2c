#pragma once

#include <span>
#include <vector>

#include "dstap/network.hpp"

namespace dstap {

struct LabelSet {
    NodeId origin = kNoNode;
    std::vector<double> cost;      // infinity when unreached
    std::vector<LinkId> back_link; // kNoLink at origin and unreached nodes

    bool reached(NodeId node) const;
    std::vector<LinkId> trace_links(const Network& network, NodeId destination) const;
    std::vector<NodeId> trace_nodes(const Network& network, NodeId destination) const;
};

/// One-to-all label setting with a binary heap and lazy deletion. Never relaxes
/// out of a node below first_thru_node unless it is the origin or listed in
/// `through_exempt`. Ties resolve toward the lower node id.
LabelSet dijkstra(const Network& network, NodeId origin, std::span<const double> link_costs,
                  std::span<const NodeId> through_exempt = {});

enum class ZoneRole : std::uint8_t { None, Origin, Destination, Both };

inline bool has_origin_role(ZoneRole r) { return r == ZoneRole::Origin || r == ZoneRole::Both; }
inline bool has_destination_role(ZoneRole r) {
    return r == ZoneRole::Destination || r == ZoneRole::Both;
}

/// Master network view: physical links are cut links of the partition,
/// artificial links approximate within-subnetwork connections. Valid master
/// paths never carry two consecutive artificial links.
struct MasterNetwork {
    Network net;
    std::int32_t num_subnets = 0;
    std::vector<std::int32_t> subnet_of;  // per node
    std::vector<ZoneRole> role_of;        // per node
    std::vector<char> is_boundary;        // per node

    // True when the three-stage routine is exact for this topology: two
    // subnetworks and no node that can relay an incoming artificial link onto
    // an outgoing physical link mid-path.
    bool three_stage_applicable() const;
};

/// Node-splitting transformation: each zone grows children z_p / z_a so that a
/// standard label-setting run enforces the no-consecutive-artificial-links
/// rule. Children with no remaining non-connector link are removed.
struct TransformedMaster {
    Network net;
    std::vector<NodeId> parent_node;  // transformed node -> master node
    std::vector<LinkId> parent_link;  // transformed link -> master link, kNoLink for connectors
    std::vector<NodeId> sp_origin;    // per master node: start node for SP, kNoNode if not an origin
    std::vector<NodeId> sp_destination;  // per master node: label node for arrivals, kNoNode if not a destination
    std::vector<std::vector<NodeId>> family;  // per master node: itself + its aliases/children

    std::vector<double> lift_costs(std::span<const double> master_link_costs) const;
    // Appendix-style collapse: child/alias nodes back to parents, duplicates merged.
    std::vector<LinkId> project_path(std::span<const LinkId> transformed_links) const;
};

TransformedMaster transform_master(const MasterNetwork& master);

/// Result of the three-stage constrained search from one origin: final costs
/// and, for destinations in the opposite subnetwork, explicit paths (back
/// labels are not sufficient once the Bellman property fails).
struct ConstrainedLabels {
    NodeId origin = kNoNode;
    std::vector<double> cost;
    std::vector<std::vector<LinkId>> path;  // per node; filled for reachable destinations

    bool reached(NodeId node) const;
};

/// Stage 1 relaxes the origin's outgoing artificial links, stage 2 runs
/// label setting over physical links seeded with the origin-side boundary
/// nodes, stage 3 relaxes incoming artificial links of the opposite side's
/// destinations (interior first, then boundary destinations in increasing
/// order of their stage-2 labels). Requires exactly two subnetworks.
ConstrainedLabels three_stage_spp(const MasterNetwork& master, NodeId origin,
                                  std::span<const double> link_costs);

struct EnumeratedPath {
    std::vector<NodeId> nodes;
    std::vector<LinkId> links;
    double cost = 0.0;
};

/// Test oracle: all simple paths origin->destination with no two consecutive
/// artificial links and no restricted intermediate node, up to max_links.
std::vector<EnumeratedPath> enumerate_constrained_paths(const Network& network, NodeId origin,
                                                        NodeId destination,
                                                        std::span<const double> link_costs,
                                                        std::int32_t max_links,
                                                        std::span<const NodeId> through_exempt = {});

}  // namespace dstap
