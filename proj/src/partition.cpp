#include "dstap/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <sstream>

namespace dstap {

namespace {

constexpr double kImprovementEps = 1e-9;

std::vector<std::vector<NodeId>> undirected_adjacency(const Network& net) {
    std::vector<std::vector<NodeId>> adj(static_cast<std::size_t>(net.num_nodes()));
    for (const Link& l : net.links()) {
        adj[static_cast<std::size_t>(l.tail)].push_back(l.head);
        adj[static_cast<std::size_t>(l.head)].push_back(l.tail);
    }
    for (auto& v : adj) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    return adj;
}

void check_sizes(const Network& net, const Partition& p) {
    if (static_cast<std::int32_t>(p.subnet_of.size()) != net.num_nodes()) {
        throw Error(ErrorKind::InvalidArgument, "partition covers a different node universe");
    }
}

}  // namespace

Partition Partition::from_assignment(std::vector<std::int32_t> assignment) {
    if (assignment.empty()) {
        throw Error(ErrorKind::InvalidArgument, "empty partition assignment");
    }
    std::int32_t max_id = -1;
    for (std::int32_t s : assignment) {
        if (s < 0) throw Error(ErrorKind::InvalidArgument, "negative subnet id");
        max_id = std::max(max_id, s);
    }
    std::vector<char> present(static_cast<std::size_t>(max_id + 1), 0);
    for (std::int32_t s : assignment) present[static_cast<std::size_t>(s)] = 1;
    for (std::size_t s = 0; s < present.size(); ++s) {
        if (!present[s]) {
            throw Error(ErrorKind::InvalidArgument,
                        "subnet ids not contiguous: missing id " + std::to_string(s));
        }
    }
    Partition p;
    p.subnet_of = std::move(assignment);
    p.num_subnets = max_id + 1;
    return p;
}

PartitionStats partition_stats(const Network& network, const Partition& partition) {
    check_sizes(network, partition);
    PartitionStats stats;
    stats.nodes_per_subnet.assign(static_cast<std::size_t>(partition.num_subnets), 0);
    stats.links_per_subnet.assign(static_cast<std::size_t>(partition.num_subnets), 0);
    for (NodeId v = 0; v < network.num_nodes(); ++v) {
        ++stats.nodes_per_subnet[static_cast<std::size_t>(
            partition.subnet_of[static_cast<std::size_t>(v)])];
    }
    std::vector<char> boundary(static_cast<std::size_t>(network.num_nodes()), 0);
    for (LinkId l = 0; l < network.num_links(); ++l) {
        const Link& link = network.link(l);
        std::int32_t st = partition.subnet_of[static_cast<std::size_t>(link.tail)];
        std::int32_t sh = partition.subnet_of[static_cast<std::size_t>(link.head)];
        if (st == sh) {
            ++stats.links_per_subnet[static_cast<std::size_t>(st)];
        } else {
            stats.cut_links.push_back(l);
            boundary[static_cast<std::size_t>(link.tail)] = 1;
            boundary[static_cast<std::size_t>(link.head)] = 1;
        }
    }
    for (NodeId v = 0; v < network.num_nodes(); ++v) {
        if (boundary[static_cast<std::size_t>(v)]) stats.boundary_nodes.push_back(v);
    }
    return stats;
}

std::string PsiReport::table() const {
    std::ostringstream out;
    out << "n1:n2             " << n1 << " : " << n2 << "\n";
    out << "m1:m2             " << m1 << " : " << m2 << "\n";
    out << "# boundary nodes  " << boundary_nodes << "\n";
    out << "# cut links       " << cut_links << "\n";
    out << "interflow         " << interflow << "\n";
    out << "interdemand       " << interdemand << "\n";
    out << "psi               " << psi << "\n";
    return out.str();
}

PsiReport psi(const Network& network, const ODMatrix& od, std::span<const double> reference_flows,
              const Partition& partition) {
    check_sizes(network, partition);
    if (static_cast<std::int32_t>(reference_flows.size()) != network.num_links()) {
        throw Error(ErrorKind::InvalidArgument, "reference flow vector length mismatch");
    }
    PartitionStats stats = partition_stats(network, partition);

    KahanSum interflow;
    for (LinkId l : stats.cut_links) interflow.add(reference_flows[static_cast<std::size_t>(l)]);

    KahanSum interdemand;
    for (const OdEntry& e : od.entries()) {
        if (partition.subnet_of[static_cast<std::size_t>(e.origin)] !=
            partition.subnet_of[static_cast<std::size_t>(e.destination)]) {
            interdemand.add(e.demand);
        }
    }

    PsiReport report;
    report.interflow = interflow.value();
    report.interdemand = interdemand.value();
    report.psi = report.interflow - report.interdemand;
    report.boundary_nodes = static_cast<std::int32_t>(stats.boundary_nodes.size());
    report.cut_links = static_cast<std::int32_t>(stats.cut_links.size());
    report.n1 = stats.nodes_per_subnet[0];
    report.m1 = stats.links_per_subnet[0];
    for (std::size_t s = 1; s < stats.nodes_per_subnet.size(); ++s) {
        report.n2 += stats.nodes_per_subnet[s];
        report.m2 += stats.links_per_subnet[s];
    }
    return report;
}

namespace {

// Restricted centroids attached to exactly one through node move with it.
std::vector<std::vector<NodeId>> exclusive_satellites(
    const Network& net, const std::vector<std::vector<NodeId>>& adj) {
    std::vector<std::vector<NodeId>> sat(static_cast<std::size_t>(net.num_nodes()));
    for (NodeId c = 0; c < net.num_nodes(); ++c) {
        if (net.is_through(c)) continue;
        NodeId anchor = kNoNode;
        bool single = true;
        for (NodeId w : adj[static_cast<std::size_t>(c)]) {
            if (!net.is_through(w)) continue;
            if (anchor == kNoNode) {
                anchor = w;
            } else if (anchor != w) {
                single = false;
                break;
            }
        }
        if (single && anchor != kNoNode) sat[static_cast<std::size_t>(anchor)].push_back(c);
    }
    return sat;
}

// Connectivity of side `a` minus node `v`, restricted to through-capable
// nodes. The side was connected before, so it stays connected exactly when
// all through-neighbors of v inside `a` can still reach each other.
bool through_side_survives(const Network& net, const std::vector<std::vector<NodeId>>& adj,
                           const std::vector<std::int32_t>& side, std::int32_t a, NodeId v) {
    std::vector<NodeId> targets;
    for (NodeId w : adj[static_cast<std::size_t>(v)]) {
        if (net.is_through(w) && side[static_cast<std::size_t>(w)] == a) targets.push_back(w);
    }
    if (targets.size() <= 1) return true;
    std::vector<char> want(static_cast<std::size_t>(net.num_nodes()), 0);
    for (NodeId t : targets) want[static_cast<std::size_t>(t)] = 1;
    std::size_t found = 1;
    std::vector<char> seen(static_cast<std::size_t>(net.num_nodes()), 0);
    std::queue<NodeId> queue;
    queue.push(targets[0]);
    seen[static_cast<std::size_t>(targets[0])] = 1;
    want[static_cast<std::size_t>(targets[0])] = 0;
    while (!queue.empty() && found < targets.size()) {
        NodeId u = queue.front();
        queue.pop();
        for (NodeId w : adj[static_cast<std::size_t>(u)]) {
            if (w == v || seen[static_cast<std::size_t>(w)]) continue;
            if (!net.is_through(w) || side[static_cast<std::size_t>(w)] != a) continue;
            seen[static_cast<std::size_t>(w)] = 1;
            if (want[static_cast<std::size_t>(w)]) {
                want[static_cast<std::size_t>(w)] = 0;
                ++found;
            }
            queue.push(w);
        }
    }
    return found == targets.size();
}

}  // namespace

bool subnets_connected(const Network& network, const Partition& partition) {
    check_sizes(network, partition);
    std::vector<std::vector<NodeId>> adj = undirected_adjacency(network);
    for (std::int32_t s = 0; s < partition.num_subnets; ++s) {
        NodeId root = kNoNode;
        std::int32_t through_total = 0;
        for (NodeId v = 0; v < network.num_nodes(); ++v) {
            if (partition.subnet_of[static_cast<std::size_t>(v)] != s) continue;
            if (!network.is_through(v)) continue;
            ++through_total;
            if (root == kNoNode) root = v;
        }
        if (through_total == 0) {
            // a subnet of centroids only cannot host any path
            std::int32_t members = 0;
            for (std::int32_t x : partition.subnet_of) members += x == s ? 1 : 0;
            if (members > 0) return false;
            continue;
        }
        std::vector<char> seen(static_cast<std::size_t>(network.num_nodes()), 0);
        std::queue<NodeId> queue;
        queue.push(root);
        seen[static_cast<std::size_t>(root)] = 1;
        std::int32_t reached = 1;
        while (!queue.empty()) {
            NodeId u = queue.front();
            queue.pop();
            for (NodeId w : adj[static_cast<std::size_t>(u)]) {
                if (seen[static_cast<std::size_t>(w)]) continue;
                if (!network.is_through(w)) continue;
                if (partition.subnet_of[static_cast<std::size_t>(w)] != s) continue;
                seen[static_cast<std::size_t>(w)] = 1;
                ++reached;
                queue.push(w);
            }
        }
        if (reached != through_total) return false;
        // every restricted node needs a same-subnet through neighbor
        for (NodeId v = 0; v < network.num_nodes(); ++v) {
            if (partition.subnet_of[static_cast<std::size_t>(v)] != s) continue;
            if (network.is_through(v)) continue;
            bool anchored = false;
            for (NodeId w : adj[static_cast<std::size_t>(v)]) {
                if (network.is_through(w) && partition.subnet_of[static_cast<std::size_t>(w)] == s) {
                    anchored = true;
                    break;
                }
            }
            if (!anchored) return false;
        }
    }
    return true;
}

Partition fm_refine(const Network& network, const ODMatrix& od,
                    std::span<const double> reference_flows, const Partition& partition,
                    std::int32_t max_moves, std::vector<FmMove>* moves) {
    check_sizes(network, partition);
    if (partition.num_subnets != 2) {
        throw Error(ErrorKind::Unsupported, "psi refinement supports exactly two subnetworks");
    }
    if (static_cast<std::int32_t>(reference_flows.size()) != network.num_links()) {
        throw Error(ErrorKind::InvalidArgument, "reference flow vector length mismatch");
    }

    std::vector<std::int32_t> side = partition.subnet_of;
    std::vector<std::vector<NodeId>> adj = undirected_adjacency(network);
    std::vector<std::vector<NodeId>> satellites = exclusive_satellites(network, adj);

    // demand incident to each zone, against every other zone
    std::vector<std::vector<std::pair<NodeId, double>>> zone_demand(
        static_cast<std::size_t>(network.num_nodes()));
    for (const OdEntry& e : od.entries()) {
        if (e.origin == e.destination) continue;
        zone_demand[static_cast<std::size_t>(e.origin)].push_back({e.destination, e.demand});
        zone_demand[static_cast<std::size_t>(e.destination)].push_back({e.origin, e.demand});
    }

    double psi_value = psi(network, od, reference_flows, partition).psi;

    std::array<std::int32_t, 2> through_count{0, 0};
    for (NodeId v = 0; v < network.num_nodes(); ++v) {
        if (network.is_through(v)) ++through_count[static_cast<std::size_t>(side[static_cast<std::size_t>(v)])];
    }

    std::vector<char> in_unit(static_cast<std::size_t>(network.num_nodes()), 0);
    auto unit_of = [&](NodeId v) {
        std::vector<NodeId> unit{v};
        for (NodeId c : satellites[static_cast<std::size_t>(v)]) {
            if (side[static_cast<std::size_t>(c)] == side[static_cast<std::size_t>(v)]) {
                unit.push_back(c);
            }
        }
        return unit;
    };

    auto delta_psi_for = [&](NodeId v) {
        std::int32_t a = side[static_cast<std::size_t>(v)];
        std::vector<NodeId> unit = unit_of(v);
        for (NodeId u : unit) in_unit[static_cast<std::size_t>(u)] = 1;
        double d_flow = 0.0;
        for (NodeId u : unit) {
            for (LinkId l : network.out_links(u)) {
                NodeId w = network.link(l).head;
                if (in_unit[static_cast<std::size_t>(w)]) continue;
                double f = reference_flows[static_cast<std::size_t>(l)];
                d_flow += side[static_cast<std::size_t>(w)] == a ? f : -f;
            }
            for (LinkId l : network.in_links(u)) {
                NodeId w = network.link(l).tail;
                if (in_unit[static_cast<std::size_t>(w)]) continue;
                double f = reference_flows[static_cast<std::size_t>(l)];
                d_flow += side[static_cast<std::size_t>(w)] == a ? f : -f;
            }
        }
        double d_demand = 0.0;
        for (NodeId u : unit) {
            for (const auto& [s, dem] : zone_demand[static_cast<std::size_t>(u)]) {
                if (in_unit[static_cast<std::size_t>(s)]) continue;
                d_demand += side[static_cast<std::size_t>(s)] == a ? dem : -dem;
            }
        }
        for (NodeId u : unit) in_unit[static_cast<std::size_t>(u)] = 0;
        return d_flow - d_demand;
    };

    auto feasible = [&](NodeId v) {
        std::int32_t a = side[static_cast<std::size_t>(v)];
        std::int32_t b = 1 - a;
        if (through_count[static_cast<std::size_t>(a)] <= 1) return false;
        bool b_anchor = false;
        for (NodeId w : adj[static_cast<std::size_t>(v)]) {
            if (network.is_through(w) && side[static_cast<std::size_t>(w)] == b) {
                b_anchor = true;
                break;
            }
        }
        if (!b_anchor) return false;
        // multi-anchored centroids next to v must keep an anchor on side a
        for (NodeId c : adj[static_cast<std::size_t>(v)]) {
            if (network.is_through(c) || side[static_cast<std::size_t>(c)] != a) continue;
            bool exclusive = false;
            for (NodeId s : satellites[static_cast<std::size_t>(v)]) {
                if (s == c) {
                    exclusive = true;
                    break;
                }
            }
            if (exclusive) continue;  // moves along with v
            bool keeps_anchor = false;
            for (NodeId w : adj[static_cast<std::size_t>(c)]) {
                if (w != v && network.is_through(w) && side[static_cast<std::size_t>(w)] == a) {
                    keeps_anchor = true;
                    break;
                }
            }
            if (!keeps_anchor) return false;
        }
        return through_side_survives(network, adj, side, a, v);
    };

    std::vector<char> locked(static_cast<std::size_t>(network.num_nodes()), 0);
    std::int32_t total_moves = 0;
    std::int32_t since_full_check = 0;

    bool pass_moved = true;
    while (pass_moved && total_moves < max_moves) {
        pass_moved = false;
        bool step_moved = true;
        while (step_moved && total_moves < max_moves) {
            step_moved = false;
            // candidate boundary nodes, best strictly-improving feasible move
            std::vector<char> boundary(static_cast<std::size_t>(network.num_nodes()), 0);
            for (const Link& l : network.links()) {
                if (side[static_cast<std::size_t>(l.tail)] != side[static_cast<std::size_t>(l.head)]) {
                    boundary[static_cast<std::size_t>(l.tail)] = 1;
                    boundary[static_cast<std::size_t>(l.head)] = 1;
                }
            }
            std::vector<std::pair<double, NodeId>> candidates;
            for (NodeId v = 0; v < network.num_nodes(); ++v) {
                if (!boundary[static_cast<std::size_t>(v)] || locked[static_cast<std::size_t>(v)]) continue;
                if (!network.is_through(v)) continue;
                double d = delta_psi_for(v);
                if (d < -kImprovementEps) candidates.push_back({d, v});
            }
            std::sort(candidates.begin(), candidates.end());
            for (const auto& [d, v] : candidates) {
                if (!feasible(v)) continue;
                std::int32_t a = side[static_cast<std::size_t>(v)];
                for (NodeId u : unit_of(v)) side[static_cast<std::size_t>(u)] = 1 - a;
                --through_count[static_cast<std::size_t>(a)];
                ++through_count[static_cast<std::size_t>(1 - a)];
                locked[static_cast<std::size_t>(v)] = 1;
                psi_value += d;
                ++total_moves;
                if (moves != nullptr) moves->push_back({v, a, d, psi_value});
                step_moved = true;
                pass_moved = true;
                if (++since_full_check >= 32) {
                    since_full_check = 0;
                    Partition check;
                    check.subnet_of = side;
                    check.num_subnets = 2;
                    if (!subnets_connected(network, check)) {
                        throw Error(ErrorKind::Internal,
                                    "refinement produced a disconnected subnet");
                    }
                }
                break;
            }
        }
        std::fill(locked.begin(), locked.end(), 0);
    }

    Partition out;
    out.subnet_of = std::move(side);
    out.num_subnets = 2;
    return out;
}

namespace {

struct UndirectedEdge {
    NodeId other;
    double cost;
};

std::vector<std::vector<UndirectedEdge>> undirected_cost_adjacency(const Network& net) {
    std::vector<std::vector<UndirectedEdge>> adj(static_cast<std::size_t>(net.num_nodes()));
    for (const Link& l : net.links()) {
        adj[static_cast<std::size_t>(l.tail)].push_back({l.head, l.free_flow_time});
        adj[static_cast<std::size_t>(l.head)].push_back({l.tail, l.free_flow_time});
    }
    return adj;
}

std::vector<double> undirected_sp(const std::vector<std::vector<UndirectedEdge>>& adj, NodeId from) {
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(adj.size(), kInf);
    dist[static_cast<std::size_t>(from)] = 0.0;
    using Entry = std::pair<double, NodeId>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap;
    heap.push({0.0, from});
    while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        if (d > dist[static_cast<std::size_t>(u)]) continue;
        for (const UndirectedEdge& e : adj[static_cast<std::size_t>(u)]) {
            double nd = d + e.cost;
            if (nd < dist[static_cast<std::size_t>(e.other)]) {
                dist[static_cast<std::size_t>(e.other)] = nd;
                heap.push({nd, e.other});
            }
        }
    }
    return dist;
}

NodeId farthest_node(std::span<const double> dist) {
    NodeId best = 0;
    double best_d = -1.0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        if (std::isfinite(dist[i]) && dist[i] > best_d) {
            best_d = dist[i];
            best = static_cast<NodeId>(i);
        }
    }
    return best;
}

}  // namespace

Partition sdda_partition(const Network& network, std::uint64_t seed) {
    std::int32_t n = network.num_nodes();
    if (n < 2) throw Error(ErrorKind::InvalidArgument, "cannot bisect a network below 2 nodes");
    std::vector<std::vector<UndirectedEdge>> adj = undirected_cost_adjacency(network);

    NodeId start = static_cast<NodeId>(seed % static_cast<std::uint64_t>(n));
    std::vector<double> d0 = undirected_sp(adj, start);
    for (double d : d0) {
        if (!std::isfinite(d)) {
            throw Error(ErrorKind::InvalidArgument, "seed growth requires a connected network");
        }
    }
    NodeId u = farthest_node(d0);
    std::vector<double> du = undirected_sp(adj, u);
    NodeId v = farthest_node(du);
    if (u == v) v = (u + 1) % n;

    std::array<NodeId, 2> seeds{std::min(u, v), std::max(u, v)};
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::array<std::vector<double>, 2> dist{std::vector<double>(static_cast<std::size_t>(n), kInf),
                                            std::vector<double>(static_cast<std::size_t>(n), kInf)};
    using Entry = std::pair<double, NodeId>;
    std::array<std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>>, 2> heaps;
    std::vector<std::int32_t> assigned(static_cast<std::size_t>(n), -1);
    std::array<std::int32_t, 2> counts{0, 0};

    for (int r = 0; r < 2; ++r) {
        dist[static_cast<std::size_t>(r)][static_cast<std::size_t>(seeds[static_cast<std::size_t>(r)])] = 0.0;
        heaps[static_cast<std::size_t>(r)].push({0.0, seeds[static_cast<std::size_t>(r)]});
    }

    auto grow = [&](int r) -> bool {
        auto& heap = heaps[static_cast<std::size_t>(r)];
        auto& d = dist[static_cast<std::size_t>(r)];
        while (!heap.empty()) {
            auto [w, node] = heap.top();
            if (assigned[static_cast<std::size_t>(node)] != -1 ||
                w > d[static_cast<std::size_t>(node)]) {
                heap.pop();
                continue;
            }
            heap.pop();
            assigned[static_cast<std::size_t>(node)] = r;
            ++counts[static_cast<std::size_t>(r)];
            for (const UndirectedEdge& e : adj[static_cast<std::size_t>(node)]) {
                if (assigned[static_cast<std::size_t>(e.other)] != -1) continue;
                double nd = w + e.cost;
                if (nd < d[static_cast<std::size_t>(e.other)]) {
                    d[static_cast<std::size_t>(e.other)] = nd;
                    heap.push({nd, e.other});
                }
            }
            return true;
        }
        return false;
    };

    std::int32_t remaining = n;
    while (remaining > 0) {
        int preferred = counts[0] <= counts[1] ? 0 : 1;
        if (grow(preferred) || grow(1 - preferred)) {
            --remaining;
        } else {
            throw Error(ErrorKind::Internal, "seed growth stalled on a connected network");
        }
    }

    Partition p;
    p.subnet_of = std::move(assigned);
    p.num_subnets = 2;
    return p;
}

namespace {

std::vector<std::int32_t> connected_components(const std::vector<std::vector<NodeId>>& adj,
                                               std::span<const char> active) {
    std::vector<std::int32_t> comp(adj.size(), -1);
    std::int32_t count = 0;
    for (std::size_t i = 0; i < adj.size(); ++i) {
        if (!active[i] || comp[i] != -1) continue;
        std::queue<NodeId> queue;
        queue.push(static_cast<NodeId>(i));
        comp[i] = count;
        while (!queue.empty()) {
            NodeId x = queue.front();
            queue.pop();
            for (NodeId w : adj[static_cast<std::size_t>(x)]) {
                if (active[static_cast<std::size_t>(w)] && comp[static_cast<std::size_t>(w)] == -1) {
                    comp[static_cast<std::size_t>(w)] = count;
                    queue.push(w);
                }
            }
        }
        ++count;
    }
    return comp;
}

}  // namespace

Partition spectral_partition(const Network& network, std::span<const double> reference_flows) {
    std::int32_t n = network.num_nodes();
    if (n < 2) throw Error(ErrorKind::InvalidArgument, "cannot bisect a network below 2 nodes");
    bool flow_weighted = !reference_flows.empty();
    if (flow_weighted && static_cast<std::int32_t>(reference_flows.size()) != network.num_links()) {
        throw Error(ErrorKind::InvalidArgument, "reference flow vector length mismatch");
    }

    // symmetrized edge weights: sum of directed flows, or 1 per node pair
    std::map<std::pair<NodeId, NodeId>, double> weight;
    for (LinkId l = 0; l < network.num_links(); ++l) {
        const Link& link = network.link(l);
        auto key = std::minmax(link.tail, link.head);
        double w = flow_weighted ? reference_flows[static_cast<std::size_t>(l)] : 1.0;
        if (flow_weighted) {
            weight[{key.first, key.second}] += w;
        } else {
            weight[{key.first, key.second}] = 1.0;
        }
    }
    std::vector<std::vector<std::pair<NodeId, double>>> wadj(static_cast<std::size_t>(n));
    std::vector<double> degree(static_cast<std::size_t>(n), 0.0);
    for (const auto& [key, w] : weight) {
        if (w <= 0.0) continue;
        wadj[static_cast<std::size_t>(key.first)].push_back({key.second, w});
        wadj[static_cast<std::size_t>(key.second)].push_back({key.first, w});
        degree[static_cast<std::size_t>(key.first)] += w;
        degree[static_cast<std::size_t>(key.second)] += w;
    }

    {
        std::vector<std::vector<NodeId>> plain(static_cast<std::size_t>(n));
        for (std::size_t i = 0; i < wadj.size(); ++i) {
            for (const auto& [j, w] : wadj[i]) plain[i].push_back(j);
        }
        std::vector<char> active(static_cast<std::size_t>(n), 1);
        std::vector<std::int32_t> comp = connected_components(plain, active);
        for (std::int32_t c : comp) {
            if (c != 0) {
                throw Error(ErrorKind::Numerical,
                            "spectral bisection needs a connected positive-weight graph; "
                            "prune zero-flow links and keep the largest component first");
            }
        }
    }

    double max_degree = 0.0;
    for (double d : degree) max_degree = std::max(max_degree, d);
    double sigma = 2.0 * max_degree + 1.0;

    std::vector<double> v(static_cast<std::size_t>(n));
    std::uint64_t state = 0x9E3779B97F4A7C15ull;
    for (double& x : v) {
        state = state * 6364136223846793005ull + 1442695040888963407ull;
        x = static_cast<double>((state >> 11) & 0xFFFFFFFFull) / 4294967295.0 - 0.5;
    }

    double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
    auto deflate = [&](std::vector<double>& x) {
        double dot = 0.0;
        for (double xi : x) dot += xi * inv_sqrt_n;
        for (double& xi : x) xi -= dot * inv_sqrt_n;
    };
    auto normalize = [&](std::vector<double>& x) {
        double norm = 0.0;
        for (double xi : x) norm += xi * xi;
        norm = std::sqrt(norm);
        if (norm <= 0.0) throw Error(ErrorKind::Numerical, "degenerate spectral iteration");
        for (double& xi : x) xi /= norm;
        return norm;
    };
    auto apply_laplacian = [&](const std::vector<double>& x, std::vector<double>& out) {
        for (std::int32_t i = 0; i < n; ++i) {
            double acc = degree[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
            for (const auto& [j, w] : wadj[static_cast<std::size_t>(i)]) {
                acc -= w * x[static_cast<std::size_t>(j)];
            }
            out[static_cast<std::size_t>(i)] = acc;
        }
    };

    deflate(v);
    normalize(v);
    std::vector<double> lv(static_cast<std::size_t>(n)), next(static_cast<std::size_t>(n));
    const double tol = 1e-8 * sigma;
    bool converged = false;
    for (std::int32_t it = 0; it < 200000; ++it) {
        apply_laplacian(v, lv);
        double lambda = 0.0;
        for (std::int32_t i = 0; i < n; ++i) {
            lambda += v[static_cast<std::size_t>(i)] * lv[static_cast<std::size_t>(i)];
        }
        double residual = 0.0;
        for (std::int32_t i = 0; i < n; ++i) {
            double r = lv[static_cast<std::size_t>(i)] - lambda * v[static_cast<std::size_t>(i)];
            residual += r * r;
        }
        if (std::sqrt(residual) <= tol) {
            converged = true;
            break;
        }
        for (std::int32_t i = 0; i < n; ++i) {
            next[static_cast<std::size_t>(i)] =
                sigma * v[static_cast<std::size_t>(i)] - lv[static_cast<std::size_t>(i)];
        }
        deflate(next);
        normalize(next);
        v.swap(next);
    }
    if (!converged) {
        throw Error(ErrorKind::Numerical, "spectral iteration did not reach the residual target");
    }

    // orient so the lowest-id decided node lands in subnet 0
    for (double x : v) {
        if (std::abs(x) > 1e-12) {
            if (x > 0.0) {
                for (double& y : v) y = -y;
            }
            break;
        }
    }
    std::vector<std::int32_t> assignment(static_cast<std::size_t>(n), 0);
    for (std::int32_t i = 0; i < n; ++i) {
        assignment[static_cast<std::size_t>(i)] = v[static_cast<std::size_t>(i)] > 1e-12 ? 1 : 0;
    }

    // repair stray components created by near-zero entries
    std::vector<std::vector<NodeId>> adj = undirected_adjacency(network);
    for (std::int32_t guard = 0; guard < 64; ++guard) {
        bool changed = false;
        for (std::int32_t s = 0; s < 2 && !changed; ++s) {
            std::vector<char> active(static_cast<std::size_t>(n), 0);
            std::int32_t members = 0;
            for (std::int32_t i = 0; i < n; ++i) {
                if (assignment[static_cast<std::size_t>(i)] == s) {
                    active[static_cast<std::size_t>(i)] = 1;
                    ++members;
                }
            }
            if (members == 0) {
                throw Error(ErrorKind::Numerical, "spectral bisection emptied a side");
            }
            std::vector<std::int32_t> comp = connected_components(adj, active);
            std::int32_t num_comp = 0;
            for (std::int32_t i = 0; i < n; ++i) {
                if (active[static_cast<std::size_t>(i)]) {
                    num_comp = std::max(num_comp, comp[static_cast<std::size_t>(i)] + 1);
                }
            }
            if (num_comp <= 1) continue;
            std::vector<std::int32_t> comp_size(static_cast<std::size_t>(num_comp), 0);
            for (std::int32_t i = 0; i < n; ++i) {
                if (active[static_cast<std::size_t>(i)]) {
                    ++comp_size[static_cast<std::size_t>(comp[static_cast<std::size_t>(i)])];
                }
            }
            std::int32_t keep = 0;
            for (std::int32_t c = 1; c < num_comp; ++c) {
                if (comp_size[static_cast<std::size_t>(c)] > comp_size[static_cast<std::size_t>(keep)]) {
                    keep = c;
                }
            }
            for (std::int32_t i = 0; i < n; ++i) {
                if (active[static_cast<std::size_t>(i)] && comp[static_cast<std::size_t>(i)] != keep) {
                    assignment[static_cast<std::size_t>(i)] = 1 - s;
                    changed = true;
                }
            }
        }
        if (!changed) break;
    }

    Partition p = Partition::from_assignment(std::move(assignment));
    if (p.num_subnets != 2 || !subnets_connected(network, p)) {
        throw Error(ErrorKind::Numerical, "spectral bisection could not produce two connected sides");
    }
    return p;
}

PrunedGraph prune_for_partitioning(const Network& network, std::span<const double> reference_flows) {
    bool drop_zero_flow = !reference_flows.empty();
    if (drop_zero_flow &&
        static_cast<std::int32_t>(reference_flows.size()) != network.num_links()) {
        throw Error(ErrorKind::InvalidArgument, "reference flow vector length mismatch");
    }

    std::int32_t n = network.num_nodes();
    std::vector<char> node_kept(static_cast<std::size_t>(n), 0);
    for (NodeId v = 0; v < n; ++v) node_kept[static_cast<std::size_t>(v)] = network.is_through(v);

    auto link_kept = [&](LinkId l) {
        const Link& link = network.link(l);
        if (!node_kept[static_cast<std::size_t>(link.tail)] ||
            !node_kept[static_cast<std::size_t>(link.head)]) {
            return false;
        }
        return !drop_zero_flow || reference_flows[static_cast<std::size_t>(l)] > 0.0;
    };

    std::vector<std::vector<NodeId>> adj(static_cast<std::size_t>(n));
    for (LinkId l = 0; l < network.num_links(); ++l) {
        if (!link_kept(l)) continue;
        const Link& link = network.link(l);
        adj[static_cast<std::size_t>(link.tail)].push_back(link.head);
        adj[static_cast<std::size_t>(link.head)].push_back(link.tail);
    }

    std::vector<std::int32_t> comp = connected_components(adj, node_kept);
    std::int32_t num_comp = 0;
    for (NodeId v = 0; v < n; ++v) {
        if (node_kept[static_cast<std::size_t>(v)]) {
            num_comp = std::max(num_comp, comp[static_cast<std::size_t>(v)] + 1);
        }
    }
    if (num_comp == 0) {
        throw Error(ErrorKind::InvalidArgument, "nothing left to partition after pruning");
    }
    std::vector<std::int32_t> comp_size(static_cast<std::size_t>(num_comp), 0);
    for (NodeId v = 0; v < n; ++v) {
        if (node_kept[static_cast<std::size_t>(v)]) {
            ++comp_size[static_cast<std::size_t>(comp[static_cast<std::size_t>(v)])];
        }
    }
    std::int32_t keep = 0;
    for (std::int32_t c = 1; c < num_comp; ++c) {
        if (comp_size[static_cast<std::size_t>(c)] > comp_size[static_cast<std::size_t>(keep)]) keep = c;
    }

    PrunedGraph out;
    out.from_full_node.assign(static_cast<std::size_t>(n), kNoNode);
    for (NodeId v = 0; v < n; ++v) {
        if (!node_kept[static_cast<std::size_t>(v)]) continue;
        if (comp[static_cast<std::size_t>(v)] == keep) {
            out.from_full_node[static_cast<std::size_t>(v)] =
                static_cast<NodeId>(out.to_full_node.size());
            out.to_full_node.push_back(v);
        } else {
            out.dropped_nodes.push_back(v);
        }
    }
    out.graph = Network(static_cast<std::int32_t>(out.to_full_node.size()), 0, 0);
    for (LinkId l = 0; l < network.num_links(); ++l) {
        if (!link_kept(l)) continue;
        const Link& link = network.link(l);
        NodeId pt = out.from_full_node[static_cast<std::size_t>(link.tail)];
        NodeId ph = out.from_full_node[static_cast<std::size_t>(link.head)];
        if (pt == kNoNode || ph == kNoNode) continue;
        Link copy = link;
        copy.tail = pt;
        copy.head = ph;
        out.graph.add_link(copy);
        out.to_full_link.push_back(l);
    }
    return out;
}

ReattachResult prune_and_reattach(const Network& network, const ODMatrix& od,
                                  const PrunedGraph& pruned, const Partition& raw) {
    if (static_cast<std::int32_t>(raw.subnet_of.size()) != pruned.graph.num_nodes()) {
        throw Error(ErrorKind::InvalidArgument, "raw partition does not cover the pruned graph");
    }
    std::int32_t n = network.num_nodes();
    std::vector<std::int32_t> assignment(static_cast<std::size_t>(n), -1);
    for (NodeId pv = 0; pv < pruned.graph.num_nodes(); ++pv) {
        assignment[static_cast<std::size_t>(pruned.to_full_node[static_cast<std::size_t>(pv)])] =
            raw.subnet_of[static_cast<std::size_t>(pv)];
    }

    std::vector<std::vector<NodeId>> adj = undirected_adjacency(network);
    std::vector<char> zone_has_demand(static_cast<std::size_t>(n), 0);
    for (const OdEntry& e : od.entries()) {
        zone_has_demand[static_cast<std::size_t>(e.origin)] = 1;
        zone_has_demand[static_cast<std::size_t>(e.destination)] = 1;
    }

    ReattachResult result;

    // group the unassigned remainder (centroids, dropped road appendices) into
    // components and attach each to the subnet it touches the most
    std::vector<char> unassigned(static_cast<std::size_t>(n), 0);
    for (NodeId v = 0; v < n; ++v) {
        unassigned[static_cast<std::size_t>(v)] = assignment[static_cast<std::size_t>(v)] == -1;
    }
    std::vector<std::int32_t> comp = connected_components(adj, unassigned);
    std::int32_t num_comp = 0;
    for (NodeId v = 0; v < n; ++v) {
        if (unassigned[static_cast<std::size_t>(v)]) {
            num_comp = std::max(num_comp, comp[static_cast<std::size_t>(v)] + 1);
        }
    }
    std::vector<std::vector<std::int32_t>> contact(
        static_cast<std::size_t>(num_comp),
        std::vector<std::int32_t>(static_cast<std::size_t>(raw.num_subnets), 0));
    for (const Link& l : network.links()) {
        NodeId a = l.tail, b = l.head;
        bool ua = unassigned[static_cast<std::size_t>(a)];
        bool ub = unassigned[static_cast<std::size_t>(b)];
        if (ua == ub) continue;
        NodeId inside = ua ? a : b;
        NodeId outside = ua ? b : a;
        ++contact[static_cast<std::size_t>(comp[static_cast<std::size_t>(inside)])]
                 [static_cast<std::size_t>(assignment[static_cast<std::size_t>(outside)])];
    }
    std::vector<std::int32_t> comp_target(static_cast<std::size_t>(num_comp), -1);
    for (std::int32_t c = 0; c < num_comp; ++c) {
        std::int32_t best = -1;
        std::int32_t best_count = 0;
        for (std::int32_t s = 0; s < raw.num_subnets; ++s) {
            if (contact[static_cast<std::size_t>(c)][static_cast<std::size_t>(s)] > best_count) {
                best_count = contact[static_cast<std::size_t>(c)][static_cast<std::size_t>(s)];
                best = s;
            }
        }
        comp_target[static_cast<std::size_t>(c)] = best;
    }
    for (NodeId v = 0; v < n; ++v) {
        if (!unassigned[static_cast<std::size_t>(v)]) continue;
        std::int32_t target = comp_target[static_cast<std::size_t>(comp[static_cast<std::size_t>(v)])];
        if (target < 0) {
            if (network.is_zone(v) && zone_has_demand[static_cast<std::size_t>(v)]) {
                throw Error(ErrorKind::Infeasible,
                            "centroid " + std::to_string(v + 1) +
                                " has no surviving connector to any subnetwork");
            }
            target = 0;  // isolated, demand-free remainder
        }
        assignment[static_cast<std::size_t>(v)] = target;
        if (!network.is_through(v)) {
            // restricted centroid carried along; not itself a dropped road node
        } else {
            result.dropped_nodes.push_back(v);
        }
    }

    result.partition = Partition::from_assignment(std::move(assignment));
    for (NodeId d : pruned.dropped_nodes) {
        if (std::find(result.dropped_nodes.begin(), result.dropped_nodes.end(), d) ==
            result.dropped_nodes.end()) {
            result.dropped_nodes.push_back(d);
        }
    }
    std::sort(result.dropped_nodes.begin(), result.dropped_nodes.end());

    std::vector<std::vector<std::int32_t>> attachments = zone_attachments(network, result.partition);
    for (NodeId z = 0; z < network.num_zones(); ++z) {
        if (attachments[static_cast<std::size_t>(z)].size() > 1) {
            result.multi_attached_zones.push_back(z);
        }
    }
    return result;
}

std::vector<std::vector<std::int32_t>> zone_attachments(const Network& network,
                                                        const Partition& partition) {
    check_sizes(network, partition);
    std::vector<std::vector<std::int32_t>> attachments(
        static_cast<std::size_t>(network.num_zones()));
    std::vector<std::vector<NodeId>> adj = undirected_adjacency(network);
    for (NodeId z = 0; z < network.num_zones(); ++z) {
        std::vector<std::int32_t>& sides = attachments[static_cast<std::size_t>(z)];
        if (network.is_through(z)) {
            sides.push_back(partition.subnet_of[static_cast<std::size_t>(z)]);
            continue;
        }
        for (NodeId w : adj[static_cast<std::size_t>(z)]) {
            sides.push_back(partition.subnet_of[static_cast<std::size_t>(w)]);
        }
        std::sort(sides.begin(), sides.end());
        sides.erase(std::unique(sides.begin(), sides.end()), sides.end());
        if (sides.empty()) {
            sides.push_back(partition.subnet_of[static_cast<std::size_t>(z)]);
        }
    }
    return attachments;
}

}  // namespace dstap
