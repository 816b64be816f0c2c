#include "dstap/equilibrium.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace dstap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double path_cost(const Network& net, std::span<const double> flows, const Path& path) {
    double c = 0.0;
    for (LinkId l : path.links) {
        c += link_travel_time(net.link(l), flows[static_cast<std::size_t>(l)]);
    }
    return c;
}

void validate_config(const SolverConfig& config) {
    if (config.target_rg <= 0.0) throw Error(ErrorKind::InvalidArgument, "target gap must be positive");
    if (config.newton_scale <= 0.0 || config.newton_scale > 1.0) {
        throw Error(ErrorKind::InvalidArgument, "newton scale must lie in (0, 1]");
    }
    if (config.max_iterations < 1) {
        throw Error(ErrorKind::InvalidArgument, "max iterations must be at least 1");
    }
}

struct OdKeyHash {
    std::size_t operator()(const std::pair<NodeId, NodeId>& k) const {
        return std::hash<std::int64_t>()((static_cast<std::int64_t>(k.first) << 32) ^
                                         static_cast<std::uint32_t>(k.second));
    }
};

}  // namespace

SpRoutine::Result DijkstraRoutine::solve(NodeId origin, std::span<const double> link_costs,
                                         std::span<const NodeId> destinations, bool need_paths) {
    LabelSet labels = dijkstra(network_, origin, link_costs);
    Result result;
    result.cost.reserve(destinations.size());
    if (need_paths) result.paths.reserve(destinations.size());
    for (NodeId d : destinations) {
        result.cost.push_back(labels.cost[static_cast<std::size_t>(d)]);
        if (need_paths) {
            result.paths.push_back(labels.reached(d) ? labels.trace_links(network_, d)
                                                     : std::vector<LinkId>());
        }
    }
    return result;
}

void equilibrate_od(const Network& network, OdPathSet& od, std::vector<double>& link_flows,
                    const SolverConfig& config) {
    if (od.paths.size() < 2) return;

    // scratch marks for symmetric-difference detection, reused across calls
    thread_local std::vector<std::int64_t> mark;
    thread_local std::int64_t stamp = 0;
    if (mark.size() < static_cast<std::size_t>(network.num_links())) {
        mark.assign(static_cast<std::size_t>(network.num_links()), 0);
    }

    std::size_t best = 0;
    double best_cost = kInf;
    for (std::size_t i = 0; i < od.paths.size(); ++i) {
        double c = path_cost(network, link_flows, od.paths[i]);
        if (c < best_cost) {
            best_cost = c;
            best = i;
        }
    }

    for (std::size_t i = 0; i < od.paths.size(); ++i) {
        if (i == best) continue;
        Path& from = od.paths[i];
        Path& to = od.paths[best];
        double c_from = path_cost(network, link_flows, from);
        double c_to = path_cost(network, link_flows, to);
        double cdiff = c_from - c_to;
        if (cdiff <= config.path_cost_epsilon) continue;
        if (from.flow <= 0.0) continue;

        ++stamp;
        for (LinkId l : to.links) mark[static_cast<std::size_t>(l)] = stamp;
        double denom = 0.0;
        for (LinkId l : from.links) {
            if (mark[static_cast<std::size_t>(l)] == stamp) {
                mark[static_cast<std::size_t>(l)] = -stamp;  // shared link
            } else {
                denom += link_travel_time_derivative(network.link(l),
                                                     link_flows[static_cast<std::size_t>(l)]);
            }
        }
        for (LinkId l : to.links) {
            if (mark[static_cast<std::size_t>(l)] == stamp) {
                denom += link_travel_time_derivative(network.link(l),
                                                     link_flows[static_cast<std::size_t>(l)]);
            }
        }

        double shift;
        if (denom > 0.0) {
            shift = std::min(from.flow, config.newton_scale * cdiff / denom);
        } else {
            shift = from.flow;  // zero curvature: move everything to the cheaper path
        }
        if (shift <= 0.0) continue;

        from.flow -= shift;
        to.flow += shift;
        for (LinkId l : from.links) {
            if (mark[static_cast<std::size_t>(l)] != -stamp) {
                link_flows[static_cast<std::size_t>(l)] -= shift;
                if (link_flows[static_cast<std::size_t>(l)] < 0.0) {
                    link_flows[static_cast<std::size_t>(l)] = 0.0;
                }
            }
        }
        for (LinkId l : to.links) {
            if (mark[static_cast<std::size_t>(l)] != -stamp) {
                link_flows[static_cast<std::size_t>(l)] += shift;
            }
        }
    }

    // fold vanishing paths back onto the shortest one
    Path& keep = od.paths[best];
    std::vector<Path> survivors;
    survivors.reserve(od.paths.size());
    for (std::size_t i = 0; i < od.paths.size(); ++i) {
        Path& p = od.paths[i];
        if (i != best && p.flow < config.drop_threshold) {
            if (p.flow > 0.0) {
                keep.flow += p.flow;
                for (LinkId l : p.links) link_flows[static_cast<std::size_t>(l)] -= p.flow;
                for (LinkId l : keep.links) link_flows[static_cast<std::size_t>(l)] += p.flow;
            }
            continue;
        }
        survivors.push_back(std::move(p));
    }
    od.paths = std::move(survivors);
}

namespace {

// Insert the path if the ordered link sequence is new; returns its index.
std::size_t insert_path(OdPathSet& od, std::vector<LinkId> links) {
    for (std::size_t i = 0; i < od.paths.size(); ++i) {
        if (od.paths[i].links == links) return i;
    }
    od.paths.push_back({std::move(links), 0.0});
    return od.paths.size() - 1;
}

std::vector<double> rebuild_flows(const Network& net, std::vector<OdPathSet>& ods) {
    // exact per-OD conservation first, then a fresh aggregation
    for (OdPathSet& od : ods) {
        KahanSum sum;
        for (const Path& p : od.paths) sum.add(p.flow);
        double total = sum.value();
        if (total > 0.0 && total != od.demand) {
            double factor = od.demand / total;
            for (Path& p : od.paths) p.flow *= factor;
        }
    }
    PathFlowSolution tmp;
    tmp.ods = std::move(ods);
    std::vector<double> flows = link_flows_from_paths(net, tmp);
    ods = std::move(tmp.ods);
    return flows;
}

}  // namespace

SolveResult solve(const Network& network, const ODMatrix& od, const SolverConfig& config,
                  SpRoutine& sp, const PathFlowSolution* initial) {
    validate_config(config);
    auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    std::vector<OdPathSet> ods;
    std::vector<double> flows(static_cast<std::size_t>(network.num_links()), 0.0);

    if (initial != nullptr) {
        PathFlowSolution aligned = warmstart_from(network, *initial, od, &sp);
        ods = std::move(aligned.ods);
        flows = std::move(aligned.link_flows);
    } else {
        // all-or-nothing load at free-flow costs
        ods.reserve(od.size());
        std::vector<double> costs = travel_times(network, flows);
        for (NodeId origin : od.origins()) {
            std::span<const OdEntry> entries = od.for_origin(origin);
            std::vector<NodeId> dests;
            dests.reserve(entries.size());
            for (const OdEntry& e : entries) dests.push_back(e.destination);
            SpRoutine::Result r = sp.solve(origin, costs, dests, true);
            for (std::size_t i = 0; i < entries.size(); ++i) {
                if (r.cost[i] >= kInf) {
                    throw Error(ErrorKind::Infeasible,
                                "OD pair disconnected: " + std::to_string(entries[i].origin + 1) +
                                    " -> " + std::to_string(entries[i].destination + 1));
                }
                OdPathSet set;
                set.origin = entries[i].origin;
                set.destination = entries[i].destination;
                set.demand = entries[i].demand;
                set.paths.push_back({std::move(r.paths[i]), entries[i].demand});
                ods.push_back(std::move(set));
            }
        }
        flows = rebuild_flows(network, ods);
    }

    // origin -> [begin, end) into ods, which is sorted by (origin, destination)
    std::vector<std::pair<std::size_t, std::size_t>> origin_ranges;
    std::vector<NodeId> origin_list;
    {
        std::size_t i = 0;
        while (i < ods.size()) {
            std::size_t j = i;
            while (j < ods.size() && ods[j].origin == ods[i].origin) ++j;
            origin_list.push_back(ods[i].origin);
            origin_ranges.emplace_back(i, j);
            i = j;
        }
    }

    SolveResult result;
    auto record = [&](std::int32_t iteration) {
        double tstt = total_system_travel_time(network, flows);
        std::vector<double> costs = travel_times(network, flows);
        KahanSum sptt;
        for (std::size_t oi = 0; oi < origin_list.size(); ++oi) {
            auto [b, e] = origin_ranges[oi];
            std::vector<NodeId> dests;
            dests.reserve(e - b);
            for (std::size_t k = b; k < e; ++k) dests.push_back(ods[k].destination);
            SpRoutine::Result r = sp.solve(origin_list[oi], costs, dests, false);
            for (std::size_t k = b; k < e; ++k) {
                if (r.cost[k - b] >= kInf) {
                    throw Error(ErrorKind::Infeasible,
                                "OD pair disconnected: " + std::to_string(ods[k].origin + 1) +
                                    " -> " + std::to_string(ods[k].destination + 1));
                }
                sptt.add(r.cost[k - b] * ods[k].demand);
            }
        }
        double rg;
        if (sptt.value() <= 0.0) {
            rg = 0.0;
        } else {
            rg = tstt / sptt.value() - 1.0;
        }
        if (!std::isfinite(rg) || !std::isfinite(tstt)) {
            throw Error(ErrorKind::Numerical,
                        "non-finite cost at iteration " + std::to_string(iteration));
        }
        result.trace.push_back({iteration, elapsed(), rg, tstt});
        return rg;
    };

    if (ods.empty()) {
        result.trace.push_back({0, elapsed(), 0.0, 0.0});
        result.solution.link_flows = std::move(flows);
        return result;
    }

    double rg = record(0);
    std::int32_t iteration = 0;
    while (rg > config.target_rg && iteration < config.max_iterations) {
        ++iteration;
        for (std::size_t oi = 0; oi < origin_list.size(); ++oi) {
            auto [b, e] = origin_ranges[oi];
            std::vector<double> costs = travel_times(network, flows);
            std::vector<NodeId> dests;
            dests.reserve(e - b);
            for (std::size_t k = b; k < e; ++k) dests.push_back(ods[k].destination);
            SpRoutine::Result r = sp.solve(origin_list[oi], costs, dests, true);
            for (std::size_t k = b; k < e; ++k) {
                if (r.cost[k - b] < kInf && !r.paths[k - b].empty()) {
                    insert_path(ods[k], std::move(r.paths[k - b]));
                }
                equilibrate_od(network, ods[k], flows, config);
            }
        }
        flows = rebuild_flows(network, ods);
        rg = record(iteration);
    }

    result.iterations = iteration;
    result.final_rg = rg;
    result.solution.ods = std::move(ods);
    result.solution.link_flows = std::move(flows);
    return result;
}

SolveResult solve(const Network& network, const ODMatrix& od, const SolverConfig& config,
                  const PathFlowSolution* initial) {
    DijkstraRoutine sp(network);
    return solve(network, od, config, sp, initial);
}

PathFlowSolution warmstart_from(const Network& network, const PathFlowSolution& prior,
                                const ODMatrix& target, SpRoutine* sp) {
    std::unordered_map<std::pair<NodeId, NodeId>, const OdPathSet*, OdKeyHash> by_key;
    by_key.reserve(prior.ods.size());
    for (const OdPathSet& set : prior.ods) {
        by_key[{set.origin, set.destination}] = &set;
    }

    PathFlowSolution out;
    out.ods.reserve(target.size());
    std::vector<std::size_t> missing;
    for (const OdEntry& e : target.entries()) {
        auto it = by_key.find({e.origin, e.destination});
        OdPathSet set;
        set.origin = e.origin;
        set.destination = e.destination;
        set.demand = e.demand;
        if (it != by_key.end()) {
            KahanSum prior_total;
            for (const Path& p : it->second->paths) prior_total.add(p.flow);
            if (prior_total.value() > 0.0) {
                double factor = e.demand / prior_total.value();
                for (const Path& p : it->second->paths) {
                    if (p.flow <= 0.0) continue;
                    set.paths.push_back({p.links, p.flow * factor});
                }
            }
        }
        if (set.paths.empty()) missing.push_back(out.ods.size());
        out.ods.push_back(std::move(set));
    }

    // validates link references and path contiguity of the adopted paths
    out.link_flows = link_flows_from_paths(network, out);

    if (!missing.empty()) {
        DijkstraRoutine fallback(network);
        SpRoutine& routine = sp != nullptr ? *sp : static_cast<SpRoutine&>(fallback);
        std::vector<double> costs = travel_times(network, out.link_flows);
        for (std::size_t idx : missing) {
            OdPathSet& set = out.ods[idx];
            std::array<NodeId, 1> dest{set.destination};
            SpRoutine::Result r = routine.solve(set.origin, costs, dest, true);
            if (r.cost[0] >= kInf || r.paths[0].empty()) {
                throw Error(ErrorKind::Infeasible,
                            "OD pair disconnected: " + std::to_string(set.origin + 1) + " -> " +
                                std::to_string(set.destination + 1));
            }
            set.paths.push_back({std::move(r.paths[0]), set.demand});
        }
        out.link_flows = link_flows_from_paths(network, out);
    }
    return out;
}

}  // namespace dstap
