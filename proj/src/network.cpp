#include "dstap/network.hpp"

#include <algorithm>
#include <cmath>

namespace dstap {

namespace {

// powers with small integer exponents dominate BPR evaluation
double pow_smart(double base, double exponent) {
    if (exponent == std::floor(exponent) && exponent >= 0.0 && exponent <= 8.0) {
        double r = 1.0;
        double b = base;
        int e = static_cast<int>(exponent);
        while (e > 0) {
            if (e & 1) r *= b;
            b *= b;
            e >>= 1;
        }
        return r;
    }
    return std::pow(base, exponent);
}

}  // namespace

double link_travel_time(const Link& link, double flow) {
    if (flow < 0.0) throw Error(ErrorKind::InvalidArgument, "negative flow in travel time evaluation");
    if (link.kind == LinkKind::Artificial) {
        return link.free_flow_time + link.slope * flow;
    }
    return link.free_flow_time * (1.0 + link.alpha * pow_smart(flow / link.capacity, link.beta));
}

double link_travel_time_derivative(const Link& link, double flow) {
    if (flow < 0.0) throw Error(ErrorKind::InvalidArgument, "negative flow in travel time derivative");
    if (link.kind == LinkKind::Artificial) {
        return link.slope;
    }
    if (link.beta == 1.0) {
        return link.free_flow_time * link.alpha / link.capacity;
    }
    return link.free_flow_time * link.alpha * link.beta *
           pow_smart(flow / link.capacity, link.beta - 1.0) / link.capacity;
}

double link_travel_time_integral(const Link& link, double flow) {
    if (flow < 0.0) throw Error(ErrorKind::InvalidArgument, "negative flow in travel time integral");
    if (link.kind == LinkKind::Artificial) {
        return link.free_flow_time * flow + 0.5 * link.slope * flow * flow;
    }
    return link.free_flow_time * flow +
           link.free_flow_time * link.alpha * pow_smart(flow / link.capacity, link.beta) * flow /
               (link.beta + 1.0);
}

Network::Network(std::int32_t num_nodes, std::int32_t num_zones, NodeId first_thru_node)
    : num_nodes_(num_nodes), num_zones_(num_zones), first_thru_node_(first_thru_node) {
    if (num_nodes < 0 || num_zones < 0 || num_zones > num_nodes) {
        throw Error(ErrorKind::InvalidArgument, "inconsistent node/zone counts");
    }
    if (first_thru_node < 0 || first_thru_node > num_nodes) {
        throw Error(ErrorKind::InvalidArgument, "first through node out of range");
    }
    out_links_.resize(static_cast<std::size_t>(num_nodes));
    in_links_.resize(static_cast<std::size_t>(num_nodes));
}

LinkId Network::add_link(Link link) {
    if (link.tail < 0 || link.tail >= num_nodes_ || link.head < 0 || link.head >= num_nodes_) {
        throw Error(ErrorKind::InvalidArgument, "link endpoint out of range");
    }
    if (link.tail == link.head) {
        throw Error(ErrorKind::InvalidArgument, "self-loop link rejected");
    }
    if (link.kind == LinkKind::Physical && link.capacity <= 0.0) {
        throw Error(ErrorKind::InvalidArgument, "link capacity must be positive");
    }
    if (link.free_flow_time < 0.0) {
        throw Error(ErrorKind::InvalidArgument, "negative free-flow time rejected");
    }
    if (link.kind == LinkKind::Artificial && link.slope < 0.0) {
        throw Error(ErrorKind::InvalidArgument, "negative artificial link slope rejected");
    }
    LinkId id = static_cast<LinkId>(links_.size());
    out_links_[static_cast<std::size_t>(link.tail)].push_back(id);
    in_links_[static_cast<std::size_t>(link.head)].push_back(id);
    links_.push_back(link);
    return id;
}

void Network::set_through_flags(std::vector<char> flags) {
    if (static_cast<std::int32_t>(flags.size()) != num_nodes_) {
        throw Error(ErrorKind::InvalidArgument, "through flag vector size mismatch");
    }
    through_flags_ = std::move(flags);
}

std::optional<LinkId> Network::find_link(NodeId tail, NodeId head) const {
    if (tail < 0 || tail >= num_nodes_) return std::nullopt;
    for (LinkId id : out_links_[static_cast<std::size_t>(tail)]) {
        if (links_[static_cast<std::size_t>(id)].head == head) return id;
    }
    return std::nullopt;
}

void ODMatrix::add(NodeId origin, NodeId destination, double demand) {
    if (demand < 0.0) throw Error(ErrorKind::InvalidArgument, "negative demand rejected");
    entries_.push_back({origin, destination, demand});
    finalized_ = false;
}

void ODMatrix::finalize() {
    std::sort(entries_.begin(), entries_.end(), [](const OdEntry& a, const OdEntry& b) {
        return std::tie(a.origin, a.destination) < std::tie(b.origin, b.destination);
    });
    std::vector<OdEntry> merged;
    merged.reserve(entries_.size());
    for (const OdEntry& e : entries_) {
        if (!merged.empty() && merged.back().origin == e.origin &&
            merged.back().destination == e.destination) {
            merged.back().demand += e.demand;
        } else {
            merged.push_back(e);
        }
    }
    std::erase_if(merged, [](const OdEntry& e) { return e.demand <= 0.0; });
    entries_ = std::move(merged);

    origins_.clear();
    origin_ranges_.clear();
    std::size_t i = 0;
    while (i < entries_.size()) {
        std::size_t j = i;
        while (j < entries_.size() && entries_[j].origin == entries_[i].origin) ++j;
        origins_.push_back(entries_[i].origin);
        origin_ranges_.emplace_back(i, j);
        i = j;
    }
    finalized_ = true;
}

void ODMatrix::require_finalized() const {
    if (!finalized_) throw Error(ErrorKind::Internal, "ODMatrix used before finalize()");
}

std::span<const OdEntry> ODMatrix::entries() const {
    require_finalized();
    return entries_;
}

std::span<const OdEntry> ODMatrix::for_origin(NodeId origin) const {
    require_finalized();
    auto it = std::lower_bound(origins_.begin(), origins_.end(), origin);
    if (it == origins_.end() || *it != origin) return {};
    auto [b, e] = origin_ranges_[static_cast<std::size_t>(it - origins_.begin())];
    return std::span<const OdEntry>(entries_).subspan(b, e - b);
}

const std::vector<NodeId>& ODMatrix::origins() const {
    require_finalized();
    return origins_;
}

double ODMatrix::total_demand() const {
    require_finalized();
    KahanSum sum;
    for (const OdEntry& e : entries_) sum.add(e.demand);
    return sum.value();
}

double ODMatrix::demand(NodeId origin, NodeId destination) const {
    for (const OdEntry& e : for_origin(origin)) {
        if (e.destination == destination) return e.demand;
    }
    return 0.0;
}

void ODMatrix::scale(double factor) {
    if (factor < 0.0) throw Error(ErrorKind::InvalidArgument, "negative demand scale");
    for (OdEntry& e : entries_) e.demand *= factor;
    if (finalized_) finalize();
}

std::vector<double> link_flows_from_paths(const Network& network, const PathFlowSolution& solution) {
    std::vector<double> flows(static_cast<std::size_t>(network.num_links()), 0.0);
    for (const OdPathSet& od : solution.ods) {
        for (const Path& path : od.paths) {
            NodeId at = od.origin;
            for (LinkId id : path.links) {
                if (id < 0 || id >= network.num_links()) {
                    throw Error(ErrorKind::InvalidArgument, "path references missing link");
                }
                const Link& link = network.link(id);
                if (link.tail != at) {
                    throw Error(ErrorKind::InvalidArgument, "path links are not contiguous");
                }
                at = link.head;
                flows[static_cast<std::size_t>(id)] += path.flow;
            }
            if (!path.links.empty() && at != od.destination) {
                throw Error(ErrorKind::InvalidArgument, "path does not end at its destination");
            }
        }
    }
    return flows;
}

std::vector<double> travel_times(const Network& network, std::span<const double> link_flows) {
    if (static_cast<std::int32_t>(link_flows.size()) != network.num_links()) {
        throw Error(ErrorKind::InvalidArgument, "flow vector length mismatch");
    }
    std::vector<double> times(link_flows.size());
    for (std::size_t i = 0; i < link_flows.size(); ++i) {
        times[i] = link_travel_time(network.link(static_cast<LinkId>(i)), link_flows[i]);
    }
    return times;
}

double total_system_travel_time(const Network& network, std::span<const double> link_flows) {
    if (static_cast<std::int32_t>(link_flows.size()) != network.num_links()) {
        throw Error(ErrorKind::InvalidArgument, "flow vector length mismatch");
    }
    KahanSum sum;
    for (std::size_t i = 0; i < link_flows.size(); ++i) {
        sum.add(link_travel_time(network.link(static_cast<LinkId>(i)), link_flows[i]) * link_flows[i]);
    }
    return sum.value();
}

double beckmann_objective(const Network& network, std::span<const double> link_flows) {
    if (static_cast<std::int32_t>(link_flows.size()) != network.num_links()) {
        throw Error(ErrorKind::InvalidArgument, "flow vector length mismatch");
    }
    KahanSum sum;
    for (std::size_t i = 0; i < link_flows.size(); ++i) {
        sum.add(link_travel_time_integral(network.link(static_cast<LinkId>(i)), link_flows[i]));
    }
    return sum.value();
}

}  // namespace dstap
