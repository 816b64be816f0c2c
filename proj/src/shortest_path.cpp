#include "dstap/shortest_path.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace dstap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using HeapEntry = std::pair<double, NodeId>;
using MinHeap = std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<HeapEntry>>;

std::vector<char> build_flag_set(std::int32_t num_nodes, std::span<const NodeId> nodes) {
    std::vector<char> flags(static_cast<std::size_t>(num_nodes), 0);
    for (NodeId n : nodes) {
        if (n >= 0 && n < num_nodes) flags[static_cast<std::size_t>(n)] = 1;
    }
    return flags;
}

}  // namespace

bool LabelSet::reached(NodeId node) const {
    return cost[static_cast<std::size_t>(node)] < kInf;
}

std::vector<LinkId> LabelSet::trace_links(const Network& network, NodeId destination) const {
    if (!reached(destination)) {
        throw Error(ErrorKind::Infeasible, "destination unreachable from origin " +
                                               std::to_string(origin + 1) + ": node " +
                                               std::to_string(destination + 1));
    }
    std::vector<LinkId> links;
    NodeId at = destination;
    std::int32_t guard = 0;
    while (at != origin) {
        LinkId l = back_link[static_cast<std::size_t>(at)];
        if (l == kNoLink || ++guard > network.num_nodes()) {
            throw Error(ErrorKind::Internal, "broken back-label chain");
        }
        links.push_back(l);
        at = network.link(l).tail;
    }
    std::reverse(links.begin(), links.end());
    return links;
}

std::vector<NodeId> LabelSet::trace_nodes(const Network& network, NodeId destination) const {
    std::vector<LinkId> links = trace_links(network, destination);
    std::vector<NodeId> nodes;
    nodes.reserve(links.size() + 1);
    nodes.push_back(origin);
    for (LinkId l : links) nodes.push_back(network.link(l).head);
    return nodes;
}

LabelSet dijkstra(const Network& network, NodeId origin, std::span<const double> link_costs,
                  std::span<const NodeId> through_exempt) {
    if (origin < 0 || origin >= network.num_nodes()) {
        throw Error(ErrorKind::InvalidArgument, "origin out of range");
    }
    if (static_cast<std::int32_t>(link_costs.size()) != network.num_links()) {
        throw Error(ErrorKind::InvalidArgument, "cost vector length mismatch");
    }

    LabelSet labels;
    labels.origin = origin;
    labels.cost.assign(static_cast<std::size_t>(network.num_nodes()), kInf);
    labels.back_link.assign(static_cast<std::size_t>(network.num_nodes()), kNoLink);
    labels.cost[static_cast<std::size_t>(origin)] = 0.0;

    std::vector<char> exempt;
    if (!through_exempt.empty()) exempt = build_flag_set(network.num_nodes(), through_exempt);

    MinHeap heap;
    heap.push({0.0, origin});
    while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        if (d > labels.cost[static_cast<std::size_t>(u)]) continue;  // stale entry
        if (u != origin && !network.is_through(u) &&
            (exempt.empty() || !exempt[static_cast<std::size_t>(u)])) {
            continue;  // label kept, never relax out of a restricted node
        }
        for (LinkId l : network.out_links(u)) {
            double w = link_costs[static_cast<std::size_t>(l)];
            if (w < 0.0 || std::isnan(w)) {
                throw Error(ErrorKind::InvalidArgument, "negative link cost in shortest path");
            }
            NodeId v = network.link(l).head;
            double nd = d + w;
            if (nd < labels.cost[static_cast<std::size_t>(v)]) {
                labels.cost[static_cast<std::size_t>(v)] = nd;
                labels.back_link[static_cast<std::size_t>(v)] = l;
                heap.push({nd, v});
            }
        }
    }
    return labels;
}

bool MasterNetwork::three_stage_applicable() const {
    if (num_subnets != 2) return false;
    std::size_t n = static_cast<std::size_t>(net.num_nodes());
    std::vector<char> phys_in(n, 0), phys_out(n, 0);
    for (LinkId l = 0; l < net.num_links(); ++l) {
        const Link& link = net.link(l);
        if (link.kind == LinkKind::Artificial) {
            if (subnet_of[static_cast<std::size_t>(link.tail)] !=
                subnet_of[static_cast<std::size_t>(link.head)]) {
                return false;  // artificial links must stay inside one subnetwork
            }
        } else {
            phys_in[static_cast<std::size_t>(link.head)] = 1;
            phys_out[static_cast<std::size_t>(link.tail)] = 1;
        }
    }
    // The staged search covers paths whose artificial links come first or
    // last. An artificial link can sit mid-path only if its tail is
    // physically enterable and its head physically continuable; such a master
    // needs the transformation instead.
    for (LinkId l = 0; l < net.num_links(); ++l) {
        const Link& link = net.link(l);
        if (link.kind != LinkKind::Artificial) continue;
        std::size_t x = static_cast<std::size_t>(link.tail);
        std::size_t y = static_cast<std::size_t>(link.head);
        bool tail_mid_enterable = phys_in[x] && net.is_through(link.tail);
        bool head_continuable = phys_out[y] && net.is_through(link.head);
        if (tail_mid_enterable && head_continuable) return false;
    }
    return true;
}

TransformedMaster transform_master(const MasterNetwork& master) {
    const Network& src = master.net;
    std::int32_t n = src.num_nodes();
    if (static_cast<std::int32_t>(master.role_of.size()) != n ||
        static_cast<std::int32_t>(master.subnet_of.size()) != n) {
        throw Error(ErrorKind::InvalidArgument, "master metadata size mismatch");
    }

    // Which children survive the final pruning step: a child is kept only if
    // it would carry at least one non-connector link.
    std::size_t nn = static_cast<std::size_t>(n);
    std::vector<char> phys_in(nn, 0), art_in(nn, 0), phys_out(nn, 0), art_out(nn, 0);
    for (const Link& link : src.links()) {
        if (link.kind == LinkKind::Physical) {
            phys_in[static_cast<std::size_t>(link.head)] = 1;
            phys_out[static_cast<std::size_t>(link.tail)] = 1;
        } else {
            art_in[static_cast<std::size_t>(link.head)] = 1;
            art_out[static_cast<std::size_t>(link.tail)] = 1;
        }
    }

    // a restricted zone incident to physical links would make its children
    // relay paths the original network forbids
    for (NodeId z = 0; z < n; ++z) {
        std::size_t zi = static_cast<std::size_t>(z);
        if (master.role_of[zi] == ZoneRole::None || src.is_through(z)) continue;
        if (phys_in[zi] || phys_out[zi]) {
            throw Error(ErrorKind::Unsupported,
                        "transformation requires restricted zones to carry no physical links");
        }
    }

    std::vector<NodeId> child_p(nn, kNoNode), child_a(nn, kNoNode);
    std::vector<NodeId> alias_o(nn, kNoNode), alias_d(nn, kNoNode);
    std::vector<NodeId> parent;
    parent.reserve(nn * 2);
    for (NodeId v = 0; v < n; ++v) parent.push_back(v);

    std::vector<char> is_child(nn, 0);  // grows alongside parent; children marked below
    is_child.reserve(nn * 2);

    auto new_node = [&](NodeId of) {
        NodeId id = static_cast<NodeId>(parent.size());
        parent.push_back(of);
        is_child.push_back(1);
        return id;
    };

    for (NodeId z = 0; z < n; ++z) {
        std::size_t zi = static_cast<std::size_t>(z);
        ZoneRole role = master.role_of[zi];
        if (role == ZoneRole::None) continue;
        bool keep_p = phys_in[zi] || phys_out[zi] || art_out[zi];
        bool keep_a = art_in[zi] || phys_out[zi];
        if (keep_p) child_p[zi] = new_node(z);
        if (keep_a) child_a[zi] = new_node(z);
        if (role == ZoneRole::Both) {
            alias_o[zi] = new_node(z);
            alias_d[zi] = new_node(z);
        }
    }

    TransformedMaster out;
    std::int32_t tn = static_cast<std::int32_t>(parent.size());
    out.net = Network(tn, 0, 0);
    out.parent_node = parent;

    // children and aliases stay passable so connector chains work; the guard
    // above keeps restricted zones structurally non-relayable anyway
    std::vector<char> through(static_cast<std::size_t>(tn), 1);
    for (NodeId v = 0; v < tn; ++v) {
        if (is_child[static_cast<std::size_t>(v)]) continue;
        through[static_cast<std::size_t>(v)] =
            src.is_through(out.parent_node[static_cast<std::size_t>(v)]) ? 1 : 0;
    }

    auto add_link = [&](NodeId tail, NodeId head, LinkId parent_link, LinkKind kind) {
        Link l;
        l.tail = tail;
        l.head = head;
        l.kind = kind;
        if (parent_link != kNoLink) {
            const Link& p = src.link(parent_link);
            l.free_flow_time = p.free_flow_time;
            l.capacity = p.capacity;
            l.alpha = p.alpha;
            l.beta = p.beta;
            l.slope = p.slope;
        } else {
            // zero-cost connector; kept physical so the artificial/physical
            // alternation of real links is undisturbed
            l.kind = LinkKind::Physical;
            l.free_flow_time = 0.0;
            l.capacity = 1.0;
        }
        out.net.add_link(l);
        out.parent_link.push_back(parent_link);
    };

    // Zero-cost connector links per zone role.
    for (NodeId z = 0; z < n; ++z) {
        std::size_t zi = static_cast<std::size_t>(z);
        ZoneRole role = master.role_of[zi];
        if (role == ZoneRole::None) continue;
        if (role == ZoneRole::Origin) {
            if (child_p[zi] != kNoNode) add_link(z, child_p[zi], kNoLink, LinkKind::Physical);
            if (child_a[zi] != kNoNode) add_link(z, child_a[zi], kNoLink, LinkKind::Physical);
        } else if (role == ZoneRole::Destination) {
            if (child_p[zi] != kNoNode) add_link(child_p[zi], z, kNoLink, LinkKind::Physical);
            if (child_a[zi] != kNoNode) add_link(child_a[zi], z, kNoLink, LinkKind::Physical);
        } else {
            if (child_p[zi] != kNoNode) {
                add_link(alias_o[zi], child_p[zi], kNoLink, LinkKind::Physical);
                add_link(child_p[zi], alias_d[zi], kNoLink, LinkKind::Physical);
            }
            if (child_a[zi] != kNoNode) {
                add_link(alias_o[zi], child_a[zi], kNoLink, LinkKind::Physical);
                add_link(child_a[zi], alias_d[zi], kNoLink, LinkKind::Physical);
            }
        }
    }

    // Re-home every master link: incoming links of a zone land on the child
    // matching their kind; outgoing physical links are copied onto both
    // children, outgoing artificial links only onto the physical-side child.
    for (LinkId l = 0; l < src.num_links(); ++l) {
        const Link& link = src.link(l);
        std::size_t ti = static_cast<std::size_t>(link.tail);
        std::size_t hi = static_cast<std::size_t>(link.head);
        bool tail_zone = master.role_of[ti] != ZoneRole::None;
        bool head_zone = master.role_of[hi] != ZoneRole::None;

        std::vector<NodeId> tails;
        if (!tail_zone) {
            tails.push_back(link.tail);
        } else if (link.kind == LinkKind::Physical) {
            if (child_p[ti] != kNoNode) tails.push_back(child_p[ti]);
            if (child_a[ti] != kNoNode) tails.push_back(child_a[ti]);
        } else {
            if (child_p[ti] != kNoNode) tails.push_back(child_p[ti]);
        }

        NodeId head;
        if (!head_zone) {
            head = link.head;
        } else if (link.kind == LinkKind::Physical) {
            head = child_p[hi];
        } else {
            head = child_a[hi];
        }
        if (head == kNoNode) {
            throw Error(ErrorKind::Internal, "pruned child still referenced by a link");
        }
        for (NodeId tail : tails) add_link(tail, head, l, link.kind);
    }

    out.net.set_through_flags(std::move(through));

    out.sp_origin.assign(nn, kNoNode);
    out.sp_destination.assign(nn, kNoNode);
    out.family.resize(nn);
    for (NodeId z = 0; z < n; ++z) {
        std::size_t zi = static_cast<std::size_t>(z);
        ZoneRole role = master.role_of[zi];
        out.family[zi].push_back(z);
        if (child_p[zi] != kNoNode) out.family[zi].push_back(child_p[zi]);
        if (child_a[zi] != kNoNode) out.family[zi].push_back(child_a[zi]);
        if (alias_o[zi] != kNoNode) out.family[zi].push_back(alias_o[zi]);
        if (alias_d[zi] != kNoNode) out.family[zi].push_back(alias_d[zi]);
        if (has_origin_role(role)) {
            out.sp_origin[zi] = role == ZoneRole::Both ? alias_o[zi] : z;
        }
        if (has_destination_role(role)) {
            out.sp_destination[zi] = role == ZoneRole::Both ? alias_d[zi] : z;
        }
    }
    return out;
}

std::vector<double> TransformedMaster::lift_costs(std::span<const double> master_link_costs) const {
    std::vector<double> costs(parent_link.size(), 0.0);
    for (std::size_t i = 0; i < parent_link.size(); ++i) {
        if (parent_link[i] != kNoLink) {
            costs[i] = master_link_costs[static_cast<std::size_t>(parent_link[i])];
        }
    }
    return costs;
}

std::vector<LinkId> TransformedMaster::project_path(std::span<const LinkId> transformed_links) const {
    std::vector<LinkId> projected;
    projected.reserve(transformed_links.size());
    for (LinkId l : transformed_links) {
        LinkId p = parent_link[static_cast<std::size_t>(l)];
        if (p != kNoLink) projected.push_back(p);
    }
    return projected;
}

bool ConstrainedLabels::reached(NodeId node) const {
    return cost[static_cast<std::size_t>(node)] < kInf;
}

ConstrainedLabels three_stage_spp(const MasterNetwork& master, NodeId origin,
                                  std::span<const double> link_costs) {
    if (master.num_subnets != 2) {
        throw Error(ErrorKind::Unsupported,
                    "three-stage search requires exactly two subnetworks; "
                    "use transform_master for general masters");
    }
    const Network& net = master.net;
    if (origin < 0 || origin >= net.num_nodes()) {
        throw Error(ErrorKind::InvalidArgument, "origin out of range");
    }
    if (static_cast<std::int32_t>(link_costs.size()) != net.num_links()) {
        throw Error(ErrorKind::InvalidArgument, "cost vector length mismatch");
    }
    std::size_t nn = static_cast<std::size_t>(net.num_nodes());
    std::int32_t origin_side = master.subnet_of[static_cast<std::size_t>(origin)];

    std::vector<double> cost(nn, kInf);
    std::vector<LinkId> back(nn, kNoLink);
    cost[static_cast<std::size_t>(origin)] = 0.0;

    // Stage 1: scan the origin's outgoing artificial links only. This labels
    // the boundary nodes of the origin's subnetwork.
    for (LinkId l : net.out_links(origin)) {
        if (net.link(l).kind != LinkKind::Artificial) continue;
        double w = link_costs[static_cast<std::size_t>(l)];
        if (w < 0.0) throw Error(ErrorKind::InvalidArgument, "negative link cost in shortest path");
        NodeId v = net.link(l).head;
        if (w < cost[static_cast<std::size_t>(v)]) {
            cost[static_cast<std::size_t>(v)] = w;
            back[static_cast<std::size_t>(v)] = l;
        }
    }

    // Stage 2: label setting over physical links, seeded with every finitely
    // labelled node. Labels of origin-side boundary nodes may still improve
    // here through alternate physical routes.
    MinHeap heap;
    for (std::size_t v = 0; v < nn; ++v) {
        if (cost[v] < kInf) heap.push({cost[v], static_cast<NodeId>(v)});
    }
    while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        if (d > cost[static_cast<std::size_t>(u)]) continue;
        if (u != origin && !net.is_through(u)) continue;
        for (LinkId l : net.out_links(u)) {
            if (net.link(l).kind != LinkKind::Physical) continue;
            double w = link_costs[static_cast<std::size_t>(l)];
            if (w < 0.0) throw Error(ErrorKind::InvalidArgument, "negative link cost in shortest path");
            NodeId v = net.link(l).head;
            double nd = d + w;
            if (nd < cost[static_cast<std::size_t>(v)]) {
                cost[static_cast<std::size_t>(v)] = nd;
                back[static_cast<std::size_t>(v)] = l;
                heap.push({nd, v});
            }
        }
    }

    // Freeze the stage-2 state. Stage 3 relaxations must start from labels
    // whose paths end in a physical link; labels revised during stage 3 end
    // in an artificial link and may not be extended by another one.
    std::vector<double> frozen = cost;
    LabelSet stage2;
    stage2.origin = origin;
    stage2.cost = frozen;
    stage2.back_link = back;

    ConstrainedLabels out;
    out.origin = origin;
    out.cost = std::move(cost);
    out.path.resize(nn);

    auto finish_destination = [&](NodeId d) {
        std::size_t di = static_cast<std::size_t>(d);
        double best = frozen[di];
        LinkId best_in = kNoLink;
        for (LinkId l : net.in_links(d)) {
            if (net.link(l).kind != LinkKind::Artificial) continue;
            NodeId i = net.link(l).tail;
            double base = frozen[static_cast<std::size_t>(i)];
            if (base >= kInf) continue;
            double cand = base + link_costs[static_cast<std::size_t>(l)];
            if (cand < best) {
                best = cand;
                best_in = l;
            }
        }
        if (best >= kInf) return;
        out.cost[di] = best;
        if (best_in == kNoLink) {
            out.path[di] = stage2.trace_links(net, d);
        } else {
            std::vector<LinkId> p = stage2.trace_links(net, net.link(best_in).tail);
            p.push_back(best_in);
            out.path[di] = std::move(p);
        }
    };

    // Stage 3a: interior destinations of the opposite subnetwork.
    std::vector<NodeId> boundary_dests;
    for (NodeId v = 0; v < net.num_nodes(); ++v) {
        std::size_t vi = static_cast<std::size_t>(v);
        if (!has_destination_role(master.role_of[vi])) continue;
        if (master.subnet_of[vi] == origin_side) continue;
        if (master.is_boundary[vi]) {
            boundary_dests.push_back(v);
        } else {
            finish_destination(v);
        }
    }

    // Stage 3b: boundary destinations, scanned in increasing order of their
    // stage-2 labels; the scan order is fixed before any update applies.
    std::sort(boundary_dests.begin(), boundary_dests.end(), [&](NodeId a, NodeId b) {
        double ca = frozen[static_cast<std::size_t>(a)];
        double cb = frozen[static_cast<std::size_t>(b)];
        return std::tie(ca, a) < std::tie(cb, b);
    });
    for (NodeId d : boundary_dests) finish_destination(d);

    return out;
}

std::vector<EnumeratedPath> enumerate_constrained_paths(const Network& network, NodeId origin,
                                                        NodeId destination,
                                                        std::span<const double> link_costs,
                                                        std::int32_t max_links,
                                                        std::span<const NodeId> through_exempt) {
    if (static_cast<std::int32_t>(link_costs.size()) != network.num_links()) {
        throw Error(ErrorKind::InvalidArgument, "cost vector length mismatch");
    }
    std::vector<EnumeratedPath> found;
    std::vector<char> visited(static_cast<std::size_t>(network.num_nodes()), 0);
    std::vector<char> exempt;
    if (!through_exempt.empty()) exempt = build_flag_set(network.num_nodes(), through_exempt);
    std::vector<NodeId> nodes{origin};
    std::vector<LinkId> links;

    // depth-first over simple paths; prev_art tracks the consecutive-artificial ban
    auto rec = [&](auto&& self, NodeId u, bool prev_art, double cost) -> void {
        if (u == destination && !links.empty()) {
            found.push_back({nodes, links, cost});
            return;
        }
        if (static_cast<std::int32_t>(links.size()) >= max_links) return;
        if (u != origin && !network.is_through(u) &&
            (exempt.empty() || !exempt[static_cast<std::size_t>(u)])) {
            return;
        }
        for (LinkId l : network.out_links(u)) {
            const Link& link = network.link(l);
            bool art = link.kind == LinkKind::Artificial;
            if (prev_art && art) continue;
            if (visited[static_cast<std::size_t>(link.head)]) continue;
            visited[static_cast<std::size_t>(link.head)] = 1;
            nodes.push_back(link.head);
            links.push_back(l);
            self(self, link.head, art, cost + link_costs[static_cast<std::size_t>(l)]);
            links.pop_back();
            nodes.pop_back();
            visited[static_cast<std::size_t>(link.head)] = 0;
        }
    };
    visited[static_cast<std::size_t>(origin)] = 1;
    rec(rec, origin, false, 0.0);
    return found;
}

}  // namespace dstap
