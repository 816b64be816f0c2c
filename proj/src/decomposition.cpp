#include "dstap/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace dstap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<char> through_flags_of(const Network& net) {
    std::vector<char> flags(static_cast<std::size_t>(net.num_nodes()));
    for (NodeId v = 0; v < net.num_nodes(); ++v) {
        flags[static_cast<std::size_t>(v)] = net.is_through(v) ? 1 : 0;
    }
    return flags;
}

Network reverse_network(const Network& net) {
    Network rev(net.num_nodes(), 0, 0);
    for (const Link& l : net.links()) {
        Link r = l;
        std::swap(r.tail, r.head);
        rev.add_link(r);  // link ids stay aligned with the forward network
    }
    rev.set_through_flags(through_flags_of(net));
    return rev;
}

class MasterSpRoutine final : public SpRoutine {
public:
    MasterSpRoutine(const MasterNetwork& master, const TransformedMaster* transformed,
                    bool three_stage)
        : master_(master), transformed_(transformed), three_stage_(three_stage) {}

    Result solve(NodeId origin, std::span<const double> link_costs,
                 std::span<const NodeId> destinations, bool need_paths) override {
        Result result;
        result.cost.reserve(destinations.size());
        if (need_paths) result.paths.reserve(destinations.size());
        if (three_stage_) {
            ConstrainedLabels labels = three_stage_spp(master_, origin, link_costs);
            for (NodeId d : destinations) {
                result.cost.push_back(labels.cost[static_cast<std::size_t>(d)]);
                if (need_paths) result.paths.push_back(labels.path[static_cast<std::size_t>(d)]);
            }
        } else {
            if (transformed_ == nullptr) {
                throw Error(ErrorKind::Internal, "master routine missing its transformation");
            }
            NodeId torigin = transformed_->sp_origin[static_cast<std::size_t>(origin)];
            if (torigin == kNoNode) {
                throw Error(ErrorKind::Internal, "master origin without origin role");
            }
            std::vector<double> lifted = transformed_->lift_costs(link_costs);
            LabelSet labels = dijkstra(transformed_->net, torigin, lifted,
                                       transformed_->family[static_cast<std::size_t>(origin)]);
            for (NodeId d : destinations) {
                NodeId td = transformed_->sp_destination[static_cast<std::size_t>(d)];
                if (td == kNoNode) {
                    throw Error(ErrorKind::Internal, "master destination without destination role");
                }
                result.cost.push_back(labels.cost[static_cast<std::size_t>(td)]);
                if (need_paths) {
                    result.paths.push_back(
                        labels.reached(td)
                            ? transformed_->project_path(labels.trace_links(transformed_->net, td))
                            : std::vector<LinkId>());
                }
            }
        }
        return result;
    }

private:
    const MasterNetwork& master_;
    const TransformedMaster* transformed_;
    bool three_stage_;
};

std::vector<std::int32_t> intersect_sorted(const std::vector<std::int32_t>& a,
                                           const std::vector<std::int32_t>& b) {
    std::vector<std::int32_t> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

struct OdKeyHash {
    std::size_t operator()(const std::pair<NodeId, NodeId>& k) const {
        return std::hash<std::int64_t>()((static_cast<std::int64_t>(k.first) << 32) ^
                                         static_cast<std::uint32_t>(k.second));
    }
};

using OdIndex = std::unordered_map<std::pair<NodeId, NodeId>, const OdPathSet*, OdKeyHash>;

OdIndex index_solution(const PathFlowSolution& sol) {
    OdIndex index;
    index.reserve(sol.ods.size());
    for (const OdPathSet& set : sol.ods) index[{set.origin, set.destination}] = &set;
    return index;
}

}  // namespace

Decomposition Decomposition::build(const Network& full, const ODMatrix& od,
                                   const Partition& partition) {
    if (static_cast<std::int32_t>(partition.subnet_of.size()) != full.num_nodes()) {
        throw Error(ErrorKind::InvalidArgument, "partition covers a different node universe");
    }
    if (!subnets_connected(full, partition)) {
        throw Error(ErrorKind::Infeasible, "partition leaves a subnetwork disconnected");
    }

    Decomposition d;
    std::int32_t n = full.num_nodes();
    std::int32_t k = partition.num_subnets;
    std::vector<std::vector<std::int32_t>> attachments = zone_attachments(full, partition);

    // zone roles from the demand table
    std::vector<char> is_origin(static_cast<std::size_t>(n), 0), is_dest(static_cast<std::size_t>(n), 0);
    for (const OdEntry& e : od.entries()) {
        is_origin[static_cast<std::size_t>(e.origin)] = 1;
        is_dest[static_cast<std::size_t>(e.destination)] = 1;
    }

    // master node universe: every zone, plus boundary nodes of through-through
    // cut links (cut connectors are realized through zone copies instead)
    PartitionStats stats = partition_stats(full, partition);
    std::vector<char> master_boundary(static_cast<std::size_t>(n), 0);
    std::vector<LinkId> master_cut_links;
    for (LinkId l : stats.cut_links) {
        const Link& link = full.link(l);
        if (full.is_through(link.tail) && full.is_through(link.head)) {
            master_boundary[static_cast<std::size_t>(link.tail)] = 1;
            master_boundary[static_cast<std::size_t>(link.head)] = 1;
            master_cut_links.push_back(l);
        }
    }

    d.master_node_of_full_.assign(static_cast<std::size_t>(n), kNoNode);
    std::vector<NodeId> full_of_master;
    for (NodeId z = 0; z < full.num_zones(); ++z) {
        d.master_node_of_full_[static_cast<std::size_t>(z)] =
            static_cast<NodeId>(full_of_master.size());
        full_of_master.push_back(z);
    }
    for (NodeId v = 0; v < n; ++v) {
        if (master_boundary[static_cast<std::size_t>(v)] &&
            d.master_node_of_full_[static_cast<std::size_t>(v)] == kNoNode) {
            d.master_node_of_full_[static_cast<std::size_t>(v)] =
                static_cast<NodeId>(full_of_master.size());
            full_of_master.push_back(v);
        }
    }

    std::int32_t mn = static_cast<std::int32_t>(full_of_master.size());
    d.master_.net = Network(mn, 0, 0);
    d.master_.num_subnets = k;
    d.master_.subnet_of.resize(static_cast<std::size_t>(mn));
    d.master_.role_of.assign(static_cast<std::size_t>(mn), ZoneRole::None);
    d.master_.is_boundary.assign(static_cast<std::size_t>(mn), 0);
    std::vector<char> master_through(static_cast<std::size_t>(mn), 1);
    for (NodeId m = 0; m < mn; ++m) {
        NodeId v = full_of_master[static_cast<std::size_t>(m)];
        d.master_.subnet_of[static_cast<std::size_t>(m)] =
            partition.subnet_of[static_cast<std::size_t>(v)];
        d.master_.is_boundary[static_cast<std::size_t>(m)] =
            master_boundary[static_cast<std::size_t>(v)];
        master_through[static_cast<std::size_t>(m)] = full.is_through(v) ? 1 : 0;
        if (full.is_zone(v)) {
            bool o = is_origin[static_cast<std::size_t>(v)];
            bool t = is_dest[static_cast<std::size_t>(v)];
            d.master_.role_of[static_cast<std::size_t>(m)] =
                o && t ? ZoneRole::Both
                       : (o ? ZoneRole::Origin : (t ? ZoneRole::Destination : ZoneRole::None));
        }
    }
    d.master_.net.set_through_flags(master_through);

    // subnetworks: primary members in node order, then copies of zones that
    // straddle the boundary (one copy per additional attached subnet)
    d.subnets_.resize(static_cast<std::size_t>(k));
    d.local_of_full_.assign(static_cast<std::size_t>(k),
                            std::vector<NodeId>(static_cast<std::size_t>(n), kNoNode));
    for (std::int32_t s = 0; s < k; ++s) {
        std::vector<NodeId> to_full;
        for (NodeId v = 0; v < n; ++v) {
            if (partition.subnet_of[static_cast<std::size_t>(v)] == s) {
                d.local_of_full_[static_cast<std::size_t>(s)][static_cast<std::size_t>(v)] =
                    static_cast<NodeId>(to_full.size());
                to_full.push_back(v);
            }
        }
        for (NodeId z = 0; z < full.num_zones(); ++z) {
            if (partition.subnet_of[static_cast<std::size_t>(z)] == s) continue;
            const std::vector<std::int32_t>& att = attachments[static_cast<std::size_t>(z)];
            if (std::find(att.begin(), att.end(), s) == att.end()) continue;
            d.local_of_full_[static_cast<std::size_t>(s)][static_cast<std::size_t>(z)] =
                static_cast<NodeId>(to_full.size());
            to_full.push_back(z);
        }
        Subnetwork& sub = d.subnets_[static_cast<std::size_t>(s)];
        sub.net = Network(static_cast<std::int32_t>(to_full.size()), 0, 0);
        sub.to_full_node = std::move(to_full);
        std::vector<char> flags(sub.to_full_node.size());
        for (std::size_t i = 0; i < sub.to_full_node.size(); ++i) {
            flags[i] = full.is_through(sub.to_full_node[i]) ? 1 : 0;
        }
        sub.net.set_through_flags(std::move(flags));
    }
    for (LinkId l = 0; l < full.num_links(); ++l) {
        const Link& link = full.link(l);
        NodeId u = link.tail, v = link.head;
        bool tu = full.is_through(u), tv = full.is_through(v);
        std::int32_t target;
        if (tu && tv) {
            if (partition.subnet_of[static_cast<std::size_t>(u)] !=
                partition.subnet_of[static_cast<std::size_t>(v)]) {
                continue;  // cut link, lives in the master
            }
            target = partition.subnet_of[static_cast<std::size_t>(u)];
        } else if (tu != tv) {
            target = partition.subnet_of[static_cast<std::size_t>(tu ? u : v)];
        } else {
            if (partition.subnet_of[static_cast<std::size_t>(u)] !=
                partition.subnet_of[static_cast<std::size_t>(v)]) {
                continue;
            }
            target = partition.subnet_of[static_cast<std::size_t>(u)];
        }
        Subnetwork& sub = d.subnets_[static_cast<std::size_t>(target)];
        NodeId lu = d.local_of_full_[static_cast<std::size_t>(target)][static_cast<std::size_t>(u)];
        NodeId lv = d.local_of_full_[static_cast<std::size_t>(target)][static_cast<std::size_t>(v)];
        if (lu == kNoNode || lv == kNoNode) {
            throw Error(ErrorKind::Internal, "subnetwork link endpoint missing a local node");
        }
        Link copy = link;
        copy.tail = lu;
        copy.head = lv;
        sub.net.add_link(copy);
        sub.to_full_link.push_back(l);
        ++sub.physical_links;
    }

    for (std::int32_t s = 0; s < k; ++s) {
        d.reversed_subnets_.push_back(reverse_network(d.subnets_[static_cast<std::size_t>(s)].net));
    }

    // master physical links = through-through cut links
    for (LinkId l : master_cut_links) {
        const Link& link = full.link(l);
        Link copy = link;
        copy.tail = d.master_node_of_full_[static_cast<std::size_t>(link.tail)];
        copy.head = d.master_node_of_full_[static_cast<std::size_t>(link.head)];
        d.master_.net.add_link(copy);
        d.full_link_of_master_.push_back(l);
        d.artificial_of_master_link_.push_back(-1);
    }

    // per-subnet boundary nodes in full-id order
    std::vector<std::vector<NodeId>> boundary_of_subnet(static_cast<std::size_t>(k));
    for (NodeId v = 0; v < n; ++v) {
        if (master_boundary[static_cast<std::size_t>(v)]) {
            boundary_of_subnet[static_cast<std::size_t>(
                                   partition.subnet_of[static_cast<std::size_t>(v)])]
                .push_back(v);
        }
    }

    // artificial links at free flow: one per connected (origin zone, boundary)
    // and (boundary, destination zone) pair inside each subnetwork
    auto add_artificial = [&](NodeId m_tail, NodeId m_head, double c0, std::int32_t owner,
                              ArtificialDirection dir, NodeId sub_tail, NodeId sub_head) {
        Link l;
        l.tail = m_tail;
        l.head = m_head;
        l.kind = LinkKind::Artificial;
        l.free_flow_time = c0;
        l.slope = 0.0;
        LinkId id = d.master_.net.add_link(l);
        d.full_link_of_master_.push_back(kNoLink);
        d.artificial_of_master_link_.push_back(static_cast<LinkId>(d.artificial_.size()));
        d.artificial_.push_back({id, owner, dir, sub_tail, sub_head, 0.0, 0, false});
    };

    std::vector<std::vector<double>> freeflow_costs(static_cast<std::size_t>(k));
    for (std::int32_t s = 0; s < k; ++s) {
        const Network& net = d.subnets_[static_cast<std::size_t>(s)].net;
        std::vector<double> zeros(static_cast<std::size_t>(net.num_links()), 0.0);
        freeflow_costs[static_cast<std::size_t>(s)] = travel_times(net, zeros);
    }

    for (NodeId z = 0; z < full.num_zones(); ++z) {
        if (!is_origin[static_cast<std::size_t>(z)]) continue;
        for (std::int32_t s : attachments[static_cast<std::size_t>(z)]) {
            NodeId local = d.local_of_full_[static_cast<std::size_t>(s)][static_cast<std::size_t>(z)];
            if (local == kNoNode) continue;
            LabelSet labels = dijkstra(d.subnets_[static_cast<std::size_t>(s)].net, local,
                                       freeflow_costs[static_cast<std::size_t>(s)]);
            for (NodeId b : boundary_of_subnet[static_cast<std::size_t>(s)]) {
                if (b == z) continue;
                NodeId lb = d.local_of_full_[static_cast<std::size_t>(s)][static_cast<std::size_t>(b)];
                if (lb == kNoNode || !labels.reached(lb)) continue;  // unreachable pair omitted
                add_artificial(d.master_node_of_full_[static_cast<std::size_t>(z)],
                               d.master_node_of_full_[static_cast<std::size_t>(b)],
                               labels.cost[static_cast<std::size_t>(lb)], s,
                               ArtificialDirection::OriginToBoundary, local, lb);
            }
        }
    }
    for (NodeId z = 0; z < full.num_zones(); ++z) {
        if (!is_dest[static_cast<std::size_t>(z)]) continue;
        for (std::int32_t s : attachments[static_cast<std::size_t>(z)]) {
            NodeId local = d.local_of_full_[static_cast<std::size_t>(s)][static_cast<std::size_t>(z)];
            if (local == kNoNode) continue;
            LabelSet labels = dijkstra(d.reversed_subnets_[static_cast<std::size_t>(s)], local,
                                       freeflow_costs[static_cast<std::size_t>(s)]);
            for (NodeId b : boundary_of_subnet[static_cast<std::size_t>(s)]) {
                if (b == z) continue;
                NodeId lb = d.local_of_full_[static_cast<std::size_t>(s)][static_cast<std::size_t>(b)];
                if (lb == kNoNode || !labels.reached(lb)) continue;
                add_artificial(d.master_node_of_full_[static_cast<std::size_t>(b)],
                               d.master_node_of_full_[static_cast<std::size_t>(z)],
                               labels.cost[static_cast<std::size_t>(lb)], s,
                               ArtificialDirection::BoundaryToDestination, lb, local);
            }
        }
    }

    // route demand: common attached subnet -> that subnetwork, else master
    d.od_size_ = od.entries().size();
    d.od_routes_.reserve(d.od_size_);
    for (const OdEntry& e : od.entries()) {
        std::vector<std::int32_t> common =
            intersect_sorted(attachments[static_cast<std::size_t>(e.origin)],
                             attachments[static_cast<std::size_t>(e.destination)]);
        OdRoute route;
        if (!common.empty()) {
            route.via_master = false;
            route.subnet = common.front();
            route.a = d.local_of_full_[static_cast<std::size_t>(route.subnet)]
                                      [static_cast<std::size_t>(e.origin)];
            route.b = d.local_of_full_[static_cast<std::size_t>(route.subnet)]
                                      [static_cast<std::size_t>(e.destination)];
            d.subnets_[static_cast<std::size_t>(route.subnet)].native_od.add(route.a, route.b,
                                                                             e.demand);
        } else {
            route.via_master = true;
            route.a = d.master_node_of_full_[static_cast<std::size_t>(e.origin)];
            route.b = d.master_node_of_full_[static_cast<std::size_t>(e.destination)];
            d.master_od_.add(route.a, route.b, e.demand);
        }
        d.od_routes_.push_back(route);
    }
    for (Subnetwork& sub : d.subnets_) sub.native_od.finalize();
    d.master_od_.finalize();

    d.use_three_stage_ = d.master_.three_stage_applicable();
    if (!d.use_three_stage_ && d.master_.net.num_links() > 0) {
        d.transformed_ = transform_master(d.master_);
    }

    // every master OD pair must have at least one feasible master path
    if (!d.master_od_.empty()) {
        std::unique_ptr<SpRoutine> routine = d.make_master_routine();
        std::vector<double> zeros(static_cast<std::size_t>(d.master_.net.num_links()), 0.0);
        std::vector<double> costs = travel_times(d.master_.net, zeros);
        for (NodeId origin : d.master_od_.origins()) {
            std::span<const OdEntry> entries = d.master_od_.for_origin(origin);
            std::vector<NodeId> dests;
            for (const OdEntry& e : entries) dests.push_back(e.destination);
            SpRoutine::Result r = routine->solve(origin, costs, dests, false);
            for (std::size_t i = 0; i < entries.size(); ++i) {
                if (r.cost[i] >= kInf) {
                    NodeId fo = full_of_master[static_cast<std::size_t>(origin)];
                    NodeId fd = full_of_master[static_cast<std::size_t>(entries[i].destination)];
                    throw Error(ErrorKind::Infeasible,
                                "OD pair has no master path: " + std::to_string(fo + 1) + " -> " +
                                    std::to_string(fd + 1));
                }
            }
        }
    }
    return d;
}

std::unique_ptr<SpRoutine> Decomposition::make_master_routine() const {
    return std::make_unique<MasterSpRoutine>(
        master_, transformed_.has_value() ? &*transformed_ : nullptr, use_three_stage_);
}

void Decomposition::update_subnet_demand(const PathFlowSolution& master_solution) {
    if (static_cast<std::int32_t>(master_solution.link_flows.size()) != master_.net.num_links()) {
        throw Error(ErrorKind::InvalidArgument, "master solution does not match the master network");
    }
    for (ArtificialInfo& info : artificial_) {
        double flow = master_solution.link_flows[static_cast<std::size_t>(info.master_link)];
        info.flow = flow;
        if (flow <= 0.0) {
            info.zero_streak = std::min(info.zero_streak + 1, 1000);
            info.frozen = info.zero_streak >= 3;
        } else {
            info.zero_streak = 0;
            info.frozen = false;
        }
    }
}

ODMatrix Decomposition::subnet_demand(std::int32_t subnet) const {
    if (subnet < 0 || subnet >= num_subnets()) {
        throw Error(ErrorKind::InvalidArgument, "subnet index out of range");
    }
    ODMatrix od;
    for (const OdEntry& e : subnets_[static_cast<std::size_t>(subnet)].native_od.entries()) {
        od.add(e.origin, e.destination, e.demand);
    }
    for (const ArtificialInfo& info : artificial_) {
        if (info.owner_subnet == subnet && info.flow > 0.0) {
            od.add(info.sub_tail, info.sub_head, info.flow);
        }
    }
    od.finalize();
    return od;
}

void Decomposition::update_artificial_params(std::span<const PathFlowSolution> subnet_solutions) {
    if (static_cast<std::int32_t>(subnet_solutions.size()) != num_subnets()) {
        throw Error(ErrorKind::InvalidArgument, "one solution per subnetwork required");
    }
    std::vector<std::vector<double>> congested(subnet_solutions.size());
    std::vector<std::vector<double>> freeflow(subnet_solutions.size());
    for (std::size_t s = 0; s < subnet_solutions.size(); ++s) {
        const Network& net = subnets_[s].net;
        congested[s] = travel_times(net, subnet_solutions[s].link_flows);
        std::vector<double> zeros(static_cast<std::size_t>(net.num_links()), 0.0);
        freeflow[s] = travel_times(net, zeros);
    }

    // one label set per distinct search root; forward for origin-side links,
    // reverse for destination-side links
    struct RootKey {
        std::int32_t subnet;
        NodeId root;
        bool reverse;
        bool operator<(const RootKey& o) const {
            return std::tie(subnet, root, reverse) < std::tie(o.subnet, o.root, o.reverse);
        }
    };
    std::map<RootKey, std::pair<LabelSet, LabelSet>> cache;  // congested, free-flow

    auto labels_for = [&](std::int32_t s, NodeId root, bool reverse)
        -> const std::pair<LabelSet, LabelSet>& {
        RootKey key{s, root, reverse};
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        const Network& net = reverse ? reversed_subnets_[static_cast<std::size_t>(s)]
                                     : subnets_[static_cast<std::size_t>(s)].net;
        LabelSet c = dijkstra(net, root, congested[static_cast<std::size_t>(s)]);
        LabelSet f = dijkstra(net, root, freeflow[static_cast<std::size_t>(s)]);
        return cache.emplace(key, std::make_pair(std::move(c), std::move(f))).first->second;
    };

    for (ArtificialInfo& info : artificial_) {
        if (info.frozen) continue;
        bool reverse = info.direction == ArtificialDirection::BoundaryToDestination;
        NodeId root = reverse ? info.sub_head : info.sub_tail;
        NodeId target = reverse ? info.sub_tail : info.sub_head;
        std::int32_t s = info.owner_subnet;
        const auto& [cong, free] = labels_for(s, root, reverse);
        if (!cong.reached(target)) {
            warnings_.push_back("artificial link for subnet " + std::to_string(s) +
                                " lost connectivity; parameters retained");
            continue;
        }
        const Network& net = reverse ? reversed_subnets_[static_cast<std::size_t>(s)]
                                     : subnets_[static_cast<std::size_t>(s)].net;
        double travel = cong.cost[static_cast<std::size_t>(target)];
        // slope from the relevant path's derivatives at current flows: the
        // congested path when the link carries flow, the free-flow path when
        // it does not
        const LabelSet& path_labels = info.flow > 0.0 ? cong : free;
        double slope = 0.0;
        if (path_labels.reached(target)) {
            for (LinkId l : path_labels.trace_links(net, target)) {
                slope += link_travel_time_derivative(
                    net.link(l),
                    subnet_solutions[static_cast<std::size_t>(s)]
                        .link_flows[static_cast<std::size_t>(l)]);
            }
        }
        if (slope < 0.0) slope = 0.0;
        double intercept;
        if (info.flow > 0.0) {
            // keep the affine model exact at the current flow and nonnegative
            // at zero by flattening the slope when needed
            if (slope * info.flow > travel) slope = travel / info.flow;
            intercept = travel - slope * info.flow;
            if (intercept < 0.0) intercept = 0.0;
        } else {
            intercept = travel;
        }
        Link& master_link = master_.net.link_mutable(info.master_link);
        master_link.free_flow_time = intercept;
        master_link.slope = slope;
    }
}

PathFlowSolution Decomposition::map_to_full(const Network& full, const ODMatrix& od,
                                            const PathFlowSolution& master_solution,
                                            std::span<const PathFlowSolution> subnet_solutions) const {
    if (od.entries().size() != od_size_) {
        throw Error(ErrorKind::InvalidArgument, "OD matrix does not match the decomposition");
    }
    if (static_cast<std::int32_t>(subnet_solutions.size()) != num_subnets()) {
        throw Error(ErrorKind::InvalidArgument, "one solution per subnetwork required");
    }

    std::vector<OdIndex> subnet_index;
    subnet_index.reserve(subnet_solutions.size());
    for (const PathFlowSolution& sol : subnet_solutions) subnet_index.push_back(index_solution(sol));
    OdIndex master_index = index_solution(master_solution);

    // expansion of one subnet pair: full-network link sequences and fractions
    struct Expansion {
        std::vector<std::vector<LinkId>> links;
        std::vector<double> fraction;
    };
    auto expand_pair = [&](std::int32_t s, NodeId a, NodeId b) -> Expansion {
        Expansion out;
        auto it = subnet_index[static_cast<std::size_t>(s)].find({a, b});
        if (it == subnet_index[static_cast<std::size_t>(s)].end()) return out;
        const OdPathSet& set = *it->second;
        KahanSum total;
        for (const Path& p : set.paths) total.add(p.flow);
        if (total.value() <= 0.0) return out;
        const Subnetwork& sub = subnets_[static_cast<std::size_t>(s)];
        for (const Path& p : set.paths) {
            if (p.flow <= 0.0) continue;
            std::vector<LinkId> mapped;
            mapped.reserve(p.links.size());
            for (LinkId l : p.links) {
                mapped.push_back(sub.to_full_link[static_cast<std::size_t>(l)]);
            }
            out.links.push_back(std::move(mapped));
            out.fraction.push_back(p.flow / total.value());
        }
        return out;
    };

    PathFlowSolution out;
    out.ods.reserve(od_size_);
    std::span<const OdEntry> entries = od.entries();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const OdEntry& e = entries[i];
        const OdRoute& route = od_routes_[i];
        OdPathSet set;
        set.origin = e.origin;
        set.destination = e.destination;
        set.demand = e.demand;

        if (!route.via_master) {
            Expansion exp = expand_pair(route.subnet, route.a, route.b);
            if (exp.links.empty()) {
                throw Error(ErrorKind::Internal,
                            "subnetwork solution missing paths for OD " +
                                std::to_string(e.origin + 1) + " -> " +
                                std::to_string(e.destination + 1));
            }
            for (std::size_t j = 0; j < exp.links.size(); ++j) {
                set.paths.push_back({std::move(exp.links[j]), exp.fraction[j] * e.demand});
            }
        } else {
            auto it = master_index.find({route.a, route.b});
            if (it == master_index.end()) {
                throw Error(ErrorKind::Internal, "master solution missing paths for OD " +
                                                     std::to_string(e.origin + 1) + " -> " +
                                                     std::to_string(e.destination + 1));
            }
            for (const Path& mp : it->second->paths) {
                if (mp.flow <= 0.0) continue;
                // cartesian substitution of each artificial link by its
                // subnetwork's used paths
                std::vector<std::pair<std::vector<LinkId>, double>> partial;
                partial.push_back({{}, 1.0});
                for (LinkId ml : mp.links) {
                    LinkId art = artificial_of_master_link_[static_cast<std::size_t>(ml)];
                    if (art < 0) {
                        LinkId fl = full_link_of_master_[static_cast<std::size_t>(ml)];
                        for (auto& [links, w] : partial) links.push_back(fl);
                        continue;
                    }
                    const ArtificialInfo& info = artificial_[static_cast<std::size_t>(art)];
                    Expansion exp = expand_pair(info.owner_subnet, info.sub_tail, info.sub_head);
                    if (exp.links.empty()) {
                        throw Error(ErrorKind::Internal,
                                    "artificial link carries flow but its subnetwork pair has no "
                                    "assigned paths (driver sequencing bug)");
                    }
                    std::vector<std::pair<std::vector<LinkId>, double>> next;
                    next.reserve(partial.size() * exp.links.size());
                    for (const auto& [links, w] : partial) {
                        for (std::size_t j = 0; j < exp.links.size(); ++j) {
                            std::vector<LinkId> grown = links;
                            grown.insert(grown.end(), exp.links[j].begin(), exp.links[j].end());
                            next.push_back({std::move(grown), w * exp.fraction[j]});
                        }
                    }
                    partial = std::move(next);
                }
                for (auto& [links, w] : partial) {
                    set.paths.push_back({std::move(links), w * mp.flow});
                }
            }
            if (set.paths.empty() && e.demand > 0.0) {
                throw Error(ErrorKind::Internal, "master solution missing paths for OD " +
                                                     std::to_string(e.origin + 1) + " -> " +
                                                     std::to_string(e.destination + 1));
            }
        }

        // merge duplicate link sequences, then restore exact conservation
        std::sort(set.paths.begin(), set.paths.end(),
                  [](const Path& a, const Path& b) { return a.links < b.links; });
        std::vector<Path> merged;
        for (Path& p : set.paths) {
            if (!merged.empty() && merged.back().links == p.links) {
                merged.back().flow += p.flow;
            } else {
                merged.push_back(std::move(p));
            }
        }
        set.paths = std::move(merged);
        KahanSum total;
        for (const Path& p : set.paths) total.add(p.flow);
        if (total.value() > 0.0) {
            double factor = e.demand / total.value();
            for (Path& p : set.paths) p.flow *= factor;
        }
        out.ods.push_back(std::move(set));
    }

    out.link_flows = link_flows_from_paths(full, out);
    return out;
}

double Decomposition::full_gap(const Network& full, const ODMatrix& od,
                               const PathFlowSolution& mapped) const {
    return relative_gap(full, od, mapped.link_flows);
}

std::string Decomposition::summary() const {
    std::ostringstream out;
    std::int32_t phys = 0;
    for (LinkId f : full_link_of_master_) phys += f != kNoLink ? 1 : 0;
    out << "Masternet- (" << master_.net.num_nodes() << ", " << phys << ", "
        << artificial_.size() << ")\n";
    for (std::size_t s = 0; s < subnets_.size(); ++s) {
        out << "Subnetwork " << s + 1 << "- (" << subnets_[s].net.num_nodes() << ", "
            << subnets_[s].physical_links << ", 0)\n";
    }
    return out.str();
}

}  // namespace dstap
