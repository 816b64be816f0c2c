#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dstap/common.hpp"

namespace dstap {

using NodeId = std::int32_t;
using LinkId = std::int32_t;

inline constexpr NodeId kNoNode = -1;
inline constexpr LinkId kNoLink = -1;

enum class LinkKind : std::uint8_t {
    Physical,    // BPR travel time t0 * (1 + alpha * (x/u)^beta)
    Artificial,  // affine travel time t0 + slope * x
};

struct Link {
    NodeId tail = kNoNode;
    NodeId head = kNoNode;
    double free_flow_time = 0.0;  // minutes; intercept c0 for artificial links
    double capacity = 1.0;        // vehicles/hour
    double alpha = 0.15;
    double beta = 4.0;
    LinkKind kind = LinkKind::Physical;
    double slope = 0.0;  // minutes per (vehicles/hour); artificial links only

    // Carried through from instance files, unused by the solvers.
    double length = 0.0;
    double speed = 0.0;
    double toll = 0.0;
    std::int32_t type = 1;
};

double link_travel_time(const Link& link, double flow);
double link_travel_time_derivative(const Link& link, double flow);
// Integral of the travel-time function from 0 to flow, in closed form.
double link_travel_time_integral(const Link& link, double flow);

/// Directed graph with per-node adjacency, a zone (centroid) prefix, and the
/// first-through-node rule: nodes below `first_thru_node` may appear on a path
/// only as its endpoints.
class Network {
public:
    Network() = default;
    Network(std::int32_t num_nodes, std::int32_t num_zones, NodeId first_thru_node);

    LinkId add_link(Link link);

    std::int32_t num_nodes() const { return num_nodes_; }
    std::int32_t num_links() const { return static_cast<std::int32_t>(links_.size()); }
    std::int32_t num_zones() const { return num_zones_; }
    NodeId first_thru_node() const { return first_thru_node_; }

    const Link& link(LinkId id) const { return links_[static_cast<std::size_t>(id)]; }
    Link& link_mutable(LinkId id) { return links_[static_cast<std::size_t>(id)]; }
    std::span<const Link> links() const { return links_; }

    const std::vector<LinkId>& out_links(NodeId node) const {
        return out_links_[static_cast<std::size_t>(node)];
    }
    const std::vector<LinkId>& in_links(NodeId node) const {
        return in_links_[static_cast<std::size_t>(node)];
    }

    bool is_zone(NodeId node) const { return node < num_zones_; }
    bool is_through(NodeId node) const {
        if (!through_flags_.empty()) return through_flags_[static_cast<std::size_t>(node)] != 0;
        return node >= first_thru_node_;
    }
    // Overrides the id-threshold rule; used by derived (master/transformed)
    // networks whose node order does not put restricted nodes first.
    void set_through_flags(std::vector<char> flags);

    // Linear scan over out_links(tail); first match. Parallel links possible
    // in master networks, so callers needing all matches scan themselves.
    std::optional<LinkId> find_link(NodeId tail, NodeId head) const;

private:
    std::int32_t num_nodes_ = 0;
    std::int32_t num_zones_ = 0;
    NodeId first_thru_node_ = 0;
    std::vector<Link> links_;
    std::vector<std::vector<LinkId>> out_links_;
    std::vector<std::vector<LinkId>> in_links_;
    std::vector<char> through_flags_;
};

struct OdEntry {
    NodeId origin = kNoNode;
    NodeId destination = kNoNode;
    double demand = 0.0;
};

/// Demand table keyed by (origin zone, destination zone), stored sorted for
/// deterministic iteration and grouped by origin.
class ODMatrix {
public:
    void add(NodeId origin, NodeId destination, double demand);
    void finalize();  // sort, merge duplicates, drop zero-demand entries

    std::span<const OdEntry> entries() const;
    std::span<const OdEntry> for_origin(NodeId origin) const;
    const std::vector<NodeId>& origins() const;
    double total_demand() const;
    double demand(NodeId origin, NodeId destination) const;
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    void scale(double factor);

private:
    void require_finalized() const;

    bool finalized_ = false;
    std::vector<OdEntry> entries_;
    std::vector<NodeId> origins_;
    std::vector<std::pair<std::size_t, std::size_t>> origin_ranges_;
};

struct Path {
    std::vector<LinkId> links;
    double flow = 0.0;
};

struct OdPathSet {
    NodeId origin = kNoNode;
    NodeId destination = kNoNode;
    double demand = 0.0;
    std::vector<Path> paths;
};

struct PathFlowSolution {
    std::vector<OdPathSet> ods;
    std::vector<double> link_flows;
};

// Aggregates path flows onto links; validates that each path is a contiguous
// link chain from its OD's origin to its destination.
std::vector<double> link_flows_from_paths(const Network& network, const PathFlowSolution& solution);

std::vector<double> travel_times(const Network& network, std::span<const double> link_flows);

double total_system_travel_time(const Network& network, std::span<const double> link_flows);
double shortest_path_travel_time(const Network& network, const ODMatrix& od,
                                 std::span<const double> link_flows);
double relative_gap(const Network& network, const ODMatrix& od, std::span<const double> link_flows);
double beckmann_objective(const Network& network, std::span<const double> link_flows);

}  // namespace dstap
