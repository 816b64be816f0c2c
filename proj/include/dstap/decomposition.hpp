#pragma once

#include <memory>
#include <optional>
#include <string>
#include <unordered_map>

#include "dstap/equilibrium.hpp"
#include "dstap/network.hpp"
#include "dstap/partition.hpp"
#include "dstap/shortest_path.hpp"

namespace dstap {

enum class ArtificialDirection : std::uint8_t { OriginToBoundary, BoundaryToDestination };

struct ArtificialInfo {
    LinkId master_link = kNoLink;
    std::int32_t owner_subnet = -1;
    ArtificialDirection direction = ArtificialDirection::OriginToBoundary;
    NodeId sub_tail = kNoNode;  // subnetwork-local endpoints
    NodeId sub_head = kNoNode;
    double flow = 0.0;          // from the latest master solution
    std::int32_t zero_streak = 0;
    bool frozen = false;        // parameters held after repeated zero flow
};

struct Subnetwork {
    Network net;
    std::vector<NodeId> to_full_node;   // local -> full (copies map to their zone)
    std::vector<LinkId> to_full_link;   // local link -> full link
    ODMatrix native_od;                 // intra-subnet demand, local ids
    std::int32_t physical_links = 0;
};

/// Per-OD routing: intra-subnet pairs are handed to one subnetwork, pairs with
/// no common subnetwork go through the master.
struct OdRoute {
    bool via_master = false;
    std::int32_t subnet = -1;   // target subnet for intra pairs
    NodeId a = kNoNode, b = kNoNode;  // master or subnet local endpoints
};

/// The decomposed system: a master network of centroids, boundary nodes, cut
/// links and affine artificial links, plus subnetworks carrying no artificial
/// links at all.
class Decomposition {
public:
    static Decomposition build(const Network& full, const ODMatrix& od, const Partition& partition);

    const MasterNetwork& master() const { return master_; }
    const ODMatrix& master_od() const { return master_od_; }
    std::span<const Subnetwork> subnets() const { return subnets_; }
    std::int32_t num_subnets() const { return static_cast<std::int32_t>(subnets_.size()); }
    std::span<const ArtificialInfo> artificial_links() const { return artificial_; }
    bool uses_three_stage() const { return use_three_stage_; }
    std::span<const std::string> warnings() const { return warnings_; }

    /// Shortest-path routine for the master network; enforces the
    /// no-consecutive-artificial-links rule via the staged search when exact
    /// for this topology, node splitting otherwise.
    std::unique_ptr<SpRoutine> make_master_routine() const;

    /// Copies master artificial-link flows out of a master solution and
    /// updates zero-flow streaks.
    void update_subnet_demand(const PathFlowSolution& master_solution);

    /// Demand a subnetwork must currently carry: native pairs plus artificial
    /// pairs with positive flow.
    ODMatrix subnet_demand(std::int32_t subnet) const;

    /// Refits the affine parameters of each artificial link against its
    /// owner's current solution: cost anchored to the congested shortest path,
    /// slope to the path's travel-time derivatives.
    void update_artificial_params(std::span<const PathFlowSolution> subnet_solutions);

    /// Assembles a full-network path-flow solution: intra paths copied, master
    /// paths expanded by substituting each artificial link with its
    /// subnetwork's used paths, split proportionally to their flows.
    PathFlowSolution map_to_full(const Network& full, const ODMatrix& od,
                                 const PathFlowSolution& master_solution,
                                 std::span<const PathFlowSolution> subnet_solutions) const;

    double full_gap(const Network& full, const ODMatrix& od,
                    const PathFlowSolution& mapped) const;

    /// Component sizes as (nodes, physical links, artificial links) tuples.
    std::string summary() const;

private:
    MasterNetwork master_;
    std::optional<TransformedMaster> transformed_;
    bool use_three_stage_ = false;
    ODMatrix master_od_;
    std::vector<Subnetwork> subnets_;
    std::vector<ArtificialInfo> artificial_;
    std::vector<LinkId> artificial_of_master_link_;  // master link -> index or -1
    std::vector<LinkId> full_link_of_master_;        // master physical link -> full link
    std::vector<NodeId> master_node_of_full_;        // full node -> master node or kNoNode
    std::vector<std::vector<NodeId>> local_of_full_; // per subnet: full node -> local or kNoNode
    std::vector<OdRoute> od_routes_;                 // aligned with the build-time OD entries
    std::size_t od_size_ = 0;
    std::vector<std::string> warnings_;
    // cached per-subnet reverse graphs and free-flow labels for updates
    std::vector<Network> reversed_subnets_;

    friend class MasterSpRoutine;
};

}  // namespace dstap
