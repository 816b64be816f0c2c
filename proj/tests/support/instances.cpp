#include "support/instances.hpp"

#include <algorithm>
#include <cmath>

namespace dstap::testing {

ODMatrix make_od(const std::vector<OdEntry>& entries) {
    ODMatrix od;
    for (const OdEntry& e : entries) od.add(e.origin, e.destination, e.demand);
    od.finalize();
    return od;
}

Link bpr_link(NodeId tail, NodeId head, double free_flow_time, double capacity, double alpha,
              double beta) {
    Link l;
    l.tail = tail;
    l.head = head;
    l.free_flow_time = free_flow_time;
    l.capacity = capacity;
    l.alpha = alpha;
    l.beta = beta;
    return l;
}

Link affine_link(NodeId tail, NodeId head, double intercept, double slope) {
    Link l;
    l.tail = tail;
    l.head = head;
    l.kind = LinkKind::Artificial;
    l.free_flow_time = intercept;
    l.slope = slope;
    return l;
}

Network two_link_affine() {
    Network net(2, 2, 0);
    net.add_link(affine_link(0, 1, 0.0, 1.0));
    net.add_link(affine_link(0, 1, 2.0, 1.0));
    return net;
}

Network braess() {
    Network net(4, 4, 0);
    net.add_link(affine_link(0, 1, 0.0, 10.0));  // o -> a
    net.add_link(affine_link(0, 2, 50.0, 1.0));  // o -> b
    net.add_link(affine_link(1, 3, 50.0, 1.0));  // a -> d
    net.add_link(affine_link(2, 3, 0.0, 10.0));  // b -> d
    net.add_link(affine_link(1, 2, 10.0, 1.0));  // a -> b bridge
    return net;
}

std::vector<std::vector<LinkId>> braess_paths(const Network&) {
    return {{0, 2}, {1, 3}, {0, 4, 3}};
}

Network grid_network(std::int32_t rows, std::int32_t cols, double capacity,
                     double free_flow_time) {
    Network net(rows * cols, 0, 0);
    auto id = [&](std::int32_t r, std::int32_t c) { return static_cast<NodeId>(r * cols + c); };
    for (std::int32_t r = 0; r < rows; ++r) {
        for (std::int32_t c = 0; c < cols; ++c) {
            if (c + 1 < cols) {
                net.add_link(bpr_link(id(r, c), id(r, c + 1), free_flow_time, capacity));
                net.add_link(bpr_link(id(r, c + 1), id(r, c), free_flow_time, capacity));
            }
            if (r + 1 < rows) {
                net.add_link(bpr_link(id(r, c), id(r + 1, c), free_flow_time, capacity));
                net.add_link(bpr_link(id(r + 1, c), id(r, c), free_flow_time, capacity));
            }
        }
    }
    return net;
}

ZonedGrid zoned_grid(std::int32_t rows, std::int32_t cols, std::int32_t num_zones,
                     std::int32_t num_od_pairs, double demand_scale, std::uint64_t seed) {
    std::int32_t grid_nodes = rows * cols;
    Network net(num_zones + grid_nodes, num_zones, num_zones);
    auto gid = [&](std::int32_t r, std::int32_t c) {
        return static_cast<NodeId>(num_zones + r * cols + c);
    };
    for (std::int32_t r = 0; r < rows; ++r) {
        for (std::int32_t c = 0; c < cols; ++c) {
            if (c + 1 < cols) {
                net.add_link(bpr_link(gid(r, c), gid(r, c + 1), 2.0, 1800.0));
                net.add_link(bpr_link(gid(r, c + 1), gid(r, c), 2.0, 1800.0));
            }
            if (r + 1 < rows) {
                net.add_link(bpr_link(gid(r, c), gid(r + 1, c), 2.0, 1800.0));
                net.add_link(bpr_link(gid(r + 1, c), gid(r, c), 2.0, 1800.0));
            }
        }
    }
    // spread centroids over the grid deterministically
    std::mt19937_64 rng(seed);
    std::vector<std::int32_t> anchors;
    {
        std::vector<std::int32_t> cells(static_cast<std::size_t>(grid_nodes));
        for (std::int32_t i = 0; i < grid_nodes; ++i) cells[static_cast<std::size_t>(i)] = i;
        std::shuffle(cells.begin(), cells.end(), rng);
        anchors.assign(cells.begin(), cells.begin() + num_zones);
        std::sort(anchors.begin(), anchors.end());
    }
    for (std::int32_t z = 0; z < num_zones; ++z) {
        NodeId anchor = static_cast<NodeId>(num_zones + anchors[static_cast<std::size_t>(z)]);
        net.add_link(bpr_link(z, anchor, 0.5, 1e5));
        net.add_link(bpr_link(anchor, z, 0.5, 1e5));
    }

    ODMatrix od;
    std::uniform_int_distribution<std::int32_t> zone_pick(0, num_zones - 1);
    std::uniform_real_distribution<double> demand_pick(50.0, 600.0);
    std::int32_t added = 0;
    while (added < num_od_pairs) {
        std::int32_t r = zone_pick(rng);
        std::int32_t s = zone_pick(rng);
        double demand = demand_pick(rng) * demand_scale;
        if (r == s) continue;
        od.add(r, s, demand);
        ++added;
    }
    od.finalize();
    return {std::move(net), std::move(od)};
}

TwoClusterInstance two_cluster_instance(std::int32_t cluster_rows, std::int32_t cluster_cols,
                                        double cross_demand) {
    std::int32_t cluster = cluster_rows * cluster_cols;
    std::int32_t num_zones = 4;  // two per cluster
    Network net(num_zones + 2 * cluster, num_zones, num_zones);
    auto gid = [&](std::int32_t side, std::int32_t r, std::int32_t c) {
        return static_cast<NodeId>(num_zones + side * cluster + r * cluster_cols + c);
    };
    for (std::int32_t side = 0; side < 2; ++side) {
        for (std::int32_t r = 0; r < cluster_rows; ++r) {
            for (std::int32_t c = 0; c < cluster_cols; ++c) {
                if (c + 1 < cluster_cols) {
                    net.add_link(bpr_link(gid(side, r, c), gid(side, r, c + 1), 3.0, 900.0));
                    net.add_link(bpr_link(gid(side, r, c + 1), gid(side, r, c), 3.0, 900.0));
                }
                if (r + 1 < cluster_rows) {
                    net.add_link(bpr_link(gid(side, r, c), gid(side, r + 1, c), 3.0, 900.0));
                    net.add_link(bpr_link(gid(side, r + 1, c), gid(side, r, c), 3.0, 900.0));
                }
            }
        }
    }
    // a single two-way bridge between the clusters
    NodeId left_gate = gid(0, cluster_rows - 1, cluster_cols - 1);
    NodeId right_gate = gid(1, 0, 0);
    net.add_link(bpr_link(left_gate, right_gate, 5.0, 2000.0));
    net.add_link(bpr_link(right_gate, left_gate, 5.0, 2000.0));

    // zones 0,1 in the left cluster; zones 2,3 in the right
    net.add_link(bpr_link(0, gid(0, 0, 0), 0.5, 1e5));
    net.add_link(bpr_link(gid(0, 0, 0), 0, 0.5, 1e5));
    net.add_link(bpr_link(1, gid(0, cluster_rows - 1, 0), 0.5, 1e5));
    net.add_link(bpr_link(gid(0, cluster_rows - 1, 0), 1, 0.5, 1e5));
    net.add_link(bpr_link(2, gid(1, 0, cluster_cols - 1), 0.5, 1e5));
    net.add_link(bpr_link(gid(1, 0, cluster_cols - 1), 2, 0.5, 1e5));
    net.add_link(bpr_link(3, gid(1, cluster_rows - 1, cluster_cols - 1), 0.5, 1e5));
    net.add_link(bpr_link(gid(1, cluster_rows - 1, cluster_cols - 1), 3, 0.5, 1e5));

    ODMatrix od;
    od.add(0, 1, 400.0);
    od.add(1, 0, 300.0);
    od.add(2, 3, 350.0);
    od.add(3, 2, 250.0);
    od.add(0, 2, cross_demand);
    od.add(0, 3, cross_demand * 0.5);
    od.add(1, 3, cross_demand * 0.75);
    od.add(2, 0, cross_demand * 0.6);
    od.add(3, 1, cross_demand * 0.4);
    od.finalize();

    TwoClusterInstance out{std::move(net), std::move(od), {}};
    out.natural_split.assign(static_cast<std::size_t>(out.net.num_nodes()), 0);
    for (NodeId v = 0; v < out.net.num_nodes(); ++v) {
        bool right = (v >= num_zones && v >= num_zones + cluster) || v == 2 || v == 3;
        out.natural_split[static_cast<std::size_t>(v)] = right ? 1 : 0;
    }
    return out;
}

Network random_connected_network(std::int32_t num_nodes, std::int32_t extra_links,
                                 std::mt19937_64& rng) {
    Network net(num_nodes, 0, 0);
    std::uniform_real_distribution<double> fft(1.0, 10.0);
    std::uniform_real_distribution<double> cap(100.0, 1000.0);
    auto add_pair = [&](NodeId a, NodeId b) {
        if (net.find_link(a, b).has_value()) return;
        net.add_link(bpr_link(a, b, fft(rng), cap(rng)));
        net.add_link(bpr_link(b, a, fft(rng), cap(rng)));
    };
    for (NodeId v = 1; v < num_nodes; ++v) {
        std::uniform_int_distribution<NodeId> pick(0, v - 1);
        add_pair(v, pick(rng));
    }
    std::uniform_int_distribution<NodeId> any(0, num_nodes - 1);
    for (std::int32_t i = 0; i < extra_links; ++i) {
        NodeId a = any(rng);
        NodeId b = any(rng);
        if (a != b) add_pair(a, b);
    }
    return net;
}

}  // namespace dstap::testing
