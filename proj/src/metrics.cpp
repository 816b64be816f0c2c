#include "dstap/network.hpp"
#include "dstap/shortest_path.hpp"

namespace dstap {

double shortest_path_travel_time(const Network& network, const ODMatrix& od,
                                 std::span<const double> link_flows) {
    std::vector<double> costs = travel_times(network, link_flows);
    KahanSum sum;
    for (NodeId origin : od.origins()) {
        LabelSet labels = dijkstra(network, origin, costs);
        for (const OdEntry& e : od.for_origin(origin)) {
            if (!labels.reached(e.destination)) {
                throw Error(ErrorKind::Infeasible,
                            "OD pair disconnected: " + std::to_string(e.origin + 1) + " -> " +
                                std::to_string(e.destination + 1));
            }
            sum.add(labels.cost[static_cast<std::size_t>(e.destination)] * e.demand);
        }
    }
    return sum.value();
}

double relative_gap(const Network& network, const ODMatrix& od, std::span<const double> link_flows) {
    double tstt = total_system_travel_time(network, link_flows);
    double sptt = shortest_path_travel_time(network, od, link_flows);
    if (sptt <= 0.0) {
        if (tstt > 0.0) {
            throw Error(ErrorKind::Numerical, "relative gap undefined: SPTT is zero with positive TSTT");
        }
        return 0.0;
    }
    return tstt / sptt - 1.0;
}

}  // namespace dstap
