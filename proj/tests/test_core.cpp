#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "dstap/network.hpp"
#include "dstap/shortest_path.hpp"
#include "dstap/tntp.hpp"
#include "support/instances.hpp"

using namespace dstap;
using namespace dstap::testing;

namespace {

Link test_link() { return bpr_link(0, 1, 10.0, 100.0); }

std::filesystem::path temp_file(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "dstap_core_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("bpr travel time evaluation") {
    Link l = test_link();
    CHECK(link_travel_time(l, 0.0) == doctest::Approx(10.0));
    CHECK(link_travel_time(l, 100.0) == doctest::Approx(11.5));
    CHECK(link_travel_time(l, 200.0) == doctest::Approx(34.0));
    CHECK_THROWS_AS(link_travel_time(l, -1.0), Error);
}

TEST_CASE("bpr derivative evaluation") {
    Link l = test_link();
    CHECK(link_travel_time_derivative(l, 0.0) == doctest::Approx(0.0));
    CHECK(link_travel_time_derivative(l, 100.0) == doctest::Approx(0.06));
    CHECK_THROWS_AS(link_travel_time_derivative(l, -0.5), Error);

    double x = 137.0, h = 1e-3;
    double fd = (link_travel_time(l, x + h) - link_travel_time(l, x - h)) / (2.0 * h);
    double exact = link_travel_time_derivative(l, x);
    CHECK(std::abs(fd - exact) / exact < 1e-6);
}

TEST_CASE("bpr derivative matches central differences on random samples") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> fft(1.0, 30.0), cap(50.0, 5000.0), alpha(0.05, 0.6),
        beta(1.5, 6.0), flow(1.0, 4000.0);
    for (int i = 0; i < 200; ++i) {
        Link l = bpr_link(0, 1, fft(rng), cap(rng), alpha(rng), beta(rng));
        double x = flow(rng);
        double h = std::max(1e-4, x * 1e-5);
        double fd = (link_travel_time(l, x + h) - link_travel_time(l, x - h)) / (2.0 * h);
        double exact = link_travel_time_derivative(l, x);
        CHECK(std::abs(fd - exact) <= 1e-6 * std::max(1.0, std::abs(exact)) + 1e-9);
    }
}

TEST_CASE("bpr time is nondecreasing and convex in flow") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> fft(1.0, 30.0), cap(50.0, 5000.0), alpha(0.05, 0.6),
        beta(1.0, 6.0), flow(0.0, 4000.0);
    for (int i = 0; i < 200; ++i) {
        Link l = bpr_link(0, 1, fft(rng), cap(rng), alpha(rng), beta(rng));
        double x1 = flow(rng), x2 = flow(rng), x3 = flow(rng);
        if (x1 > x2) std::swap(x1, x2);
        if (x2 > x3) std::swap(x2, x3);
        if (x1 > x2) std::swap(x1, x2);
        CHECK(link_travel_time(l, x1) <= link_travel_time(l, x2) + 1e-12);
        CHECK(link_travel_time(l, x2) <= link_travel_time(l, x3) + 1e-12);
        if (x3 > x1 + 1e-9) {
            double w = (x2 - x1) / (x3 - x1);
            double chord = (1.0 - w) * link_travel_time(l, x1) + w * link_travel_time(l, x3);
            CHECK(link_travel_time(l, x2) <= chord + 1e-9 * std::max(1.0, chord));
        }
    }
}

TEST_CASE("network construction rejects bad links") {
    Network net(3, 1, 0);
    CHECK_THROWS_AS(net.add_link(bpr_link(0, 0, 1.0, 100.0)), Error);
    CHECK_THROWS_AS(net.add_link(bpr_link(0, 5, 1.0, 100.0)), Error);
    Link zero_cap = bpr_link(0, 1, 1.0, 100.0);
    zero_cap.capacity = 0.0;
    CHECK_THROWS_AS(net.add_link(zero_cap), Error);
}

TEST_CASE("tstt basics") {
    Network net(2, 2, 0);
    net.add_link(test_link());
    std::vector<double> zero{0.0};
    CHECK(total_system_travel_time(net, zero) == 0.0);
    std::vector<double> loaded{100.0};
    CHECK(total_system_travel_time(net, loaded) == doctest::Approx(1150.0));

    Network two(2, 2, 0);
    two.add_link(test_link());
    two.add_link(test_link());
    std::vector<double> both{100.0, 100.0};
    CHECK(total_system_travel_time(two, both) ==
          doctest::Approx(2.0 * total_system_travel_time(net, loaded)));

    std::vector<double> wrong{1.0, 2.0, 3.0};
    CHECK_THROWS_AS(total_system_travel_time(net, wrong), Error);
}

TEST_CASE("sptt on a three-path parallel network matches enumeration") {
    Network net(2, 2, 0);
    net.add_link(bpr_link(0, 1, 4.0, 100.0));
    net.add_link(bpr_link(0, 1, 7.0, 100.0));
    net.add_link(bpr_link(0, 1, 3.0, 50.0));
    ODMatrix od = make_od({{0, 1, 12.0}});

    std::vector<double> flows{10.0, 0.0, 80.0};
    std::vector<double> costs = travel_times(net, flows);
    double best = std::min({costs[0], costs[1], costs[2]});
    CHECK(shortest_path_travel_time(net, od, flows) == doctest::Approx(best * 12.0));

    ODMatrix empty = make_od({});
    CHECK(shortest_path_travel_time(net, empty, flows) == 0.0);
}

TEST_CASE("sptt reports the disconnected pair") {
    Network net(3, 3, 0);
    net.add_link(bpr_link(0, 1, 1.0, 100.0));
    ODMatrix od = make_od({{0, 2, 5.0}});
    std::vector<double> flows{0.0};
    CHECK_THROWS_WITH_AS(shortest_path_travel_time(net, od, flows) == 0,
                         doctest::Contains("1 -> 3"), Error);
}

TEST_CASE("relative gap") {
    // single path: always at equilibrium
    Network net(2, 2, 0);
    net.add_link(test_link());
    ODMatrix od = make_od({{0, 1, 100.0}});
    std::vector<double> flows{100.0};
    CHECK(relative_gap(net, od, flows) == doctest::Approx(0.0));

    // all demand on a path that costs twice the shortest
    Network two(2, 2, 0);
    two.add_link(affine_link(0, 1, 10.0, 0.0));
    two.add_link(affine_link(0, 1, 20.0, 0.0));
    ODMatrix od2 = make_od({{0, 1, 50.0}});
    std::vector<double> misrouted{0.0, 50.0};
    CHECK(relative_gap(two, od2, misrouted) == doctest::Approx(1.0));

    // scaling all costs cancels in the ratio
    Network scaled(2, 2, 0);
    scaled.add_link(affine_link(0, 1, 30.0, 0.0));
    scaled.add_link(affine_link(0, 1, 60.0, 0.0));
    CHECK(relative_gap(scaled, od2, misrouted) == doctest::Approx(1.0));
}

TEST_CASE("tstt dominates sptt on random feasible flows") {
    std::mt19937_64 rng(23);
    Network net = random_connected_network(12, 10, rng);
    ODMatrix od = make_od({{0, 5, 40.0}, {3, 9, 25.0}, {7, 1, 60.0}});
    SUBCASE("random path-loaded flows") {
        std::vector<double> zeros(static_cast<std::size_t>(net.num_links()), 0.0);
        for (int trial = 0; trial < 20; ++trial) {
            PathFlowSolution sol;
            for (const OdEntry& e : od.entries()) {
                // random walk assignment over a shortest path tree with jitter
                std::vector<double> costs(zeros.size());
                std::uniform_real_distribution<double> jitter(0.5, 2.0);
                for (std::size_t i = 0; i < costs.size(); ++i) {
                    costs[i] = link_travel_time(net.link(static_cast<LinkId>(i)), 0.0) * jitter(rng);
                }
                LabelSet labels = dijkstra(net, e.origin, costs);
                OdPathSet set;
                set.origin = e.origin;
                set.destination = e.destination;
                set.demand = e.demand;
                set.paths.push_back({labels.trace_links(net, e.destination), e.demand});
                sol.ods.push_back(std::move(set));
            }
            std::vector<double> flows = link_flows_from_paths(net, sol);
            double tstt = total_system_travel_time(net, flows);
            double sptt = shortest_path_travel_time(net, od, flows);
            CHECK(tstt >= sptt - 1e-9 * std::max(1.0, sptt));
            CHECK(relative_gap(net, od, flows) >= -1e-12);
        }
    }
}

TEST_CASE("link flow aggregation from paths") {
    Network net(4, 4, 0);
    LinkId a = net.add_link(bpr_link(0, 1, 1.0, 10.0));
    LinkId b = net.add_link(bpr_link(1, 2, 1.0, 10.0));
    LinkId c = net.add_link(bpr_link(1, 3, 1.0, 10.0));

    PathFlowSolution empty;
    CHECK(link_flows_from_paths(net, empty) == std::vector<double>{0.0, 0.0, 0.0});

    PathFlowSolution sol;
    sol.ods.push_back({0, 2, 3.0, {{{a, b}, 3.0}}});
    sol.ods.push_back({0, 3, 4.0, {{{a, c}, 4.0}}});
    std::vector<double> flows = link_flows_from_paths(net, sol);
    CHECK(flows[static_cast<std::size_t>(a)] == doctest::Approx(7.0));
    CHECK(flows[static_cast<std::size_t>(b)] == doctest::Approx(3.0));
    CHECK(flows[static_cast<std::size_t>(c)] == doctest::Approx(4.0));

    PathFlowSolution broken;
    broken.ods.push_back({0, 3, 1.0, {{{a, b}, 1.0}}});  // ends at 2, not 3
    CHECK_THROWS_AS(link_flows_from_paths(net, broken), Error);

    PathFlowSolution missing;
    missing.ods.push_back({0, 2, 1.0, {{{a, static_cast<LinkId>(9)}, 1.0}}});
    CHECK_THROWS_AS(link_flows_from_paths(net, missing), Error);
}

TEST_CASE("five random paths re-aggregate to hand summation") {
    std::mt19937_64 rng(31);
    Network net = random_connected_network(8, 8, rng);
    std::vector<double> zeros(static_cast<std::size_t>(net.num_links()), 0.0);
    PathFlowSolution sol;
    std::vector<double> manual(zeros.size(), 0.0);
    std::uniform_int_distribution<NodeId> node(0, 7);
    std::uniform_real_distribution<double> flow(1.0, 9.0);
    int built = 0;
    while (built < 5) {
        NodeId o = node(rng), d = node(rng);
        if (o == d) continue;
        LabelSet labels = dijkstra(net, o, zeros.size() ? travel_times(net, zeros) : zeros);
        if (!labels.reached(d)) continue;
        double h = flow(rng);
        std::vector<LinkId> links = labels.trace_links(net, d);
        for (LinkId l : links) manual[static_cast<std::size_t>(l)] += h;
        sol.ods.push_back({o, d, h, {{links, h}}});
        ++built;
    }
    std::vector<double> flows = link_flows_from_paths(net, sol);
    for (std::size_t i = 0; i < flows.size(); ++i) {
        CHECK(flows[i] == doctest::Approx(manual[i]).epsilon(1e-12));
    }
}

TEST_CASE("od matrix bookkeeping") {
    ODMatrix od;
    od.add(2, 3, 10.0);
    od.add(0, 1, 5.0);
    od.add(2, 3, 2.5);
    od.add(4, 5, 0.0);
    od.finalize();
    CHECK(od.size() == 2);
    CHECK(od.demand(2, 3) == doctest::Approx(12.5));
    CHECK(od.total_demand() == doctest::Approx(17.5));
    CHECK(od.origins() == std::vector<NodeId>{0, 2});
    od.scale(2.0);
    CHECK(od.total_demand() == doctest::Approx(35.0));
    CHECK_THROWS_AS(od.add(0, 0, -1.0), Error);
}

TEST_CASE("minimal network file parses") {
    auto path = temp_file("minimal.net");
    std::ofstream out(path);
    out << "<NUMBER OF ZONES> 2\n<NUMBER OF NODES> 2\n<FIRST THRU NODE> 1\n"
        << "<NUMBER OF LINKS> 1\n<END OF METADATA>\n"
        << "~ comment line\n"
        << "1 2 1000 1.5 3.5 0.15 4 60 0 1 ;\n";
    out.close();
    Network net = parse_network(path.string());
    CHECK(net.num_nodes() == 2);
    CHECK(net.num_links() == 1);
    CHECK(net.num_zones() == 2);
    CHECK(net.first_thru_node() == 0);
    CHECK(net.link(0).free_flow_time == doctest::Approx(3.5));
    CHECK(net.link(0).length == doctest::Approx(1.5));
}

TEST_CASE("network parser rejects malformed files") {
    SUBCASE("link count mismatch") {
        auto path = temp_file("mismatch.net");
        std::ofstream out(path);
        out << "<NUMBER OF ZONES> 2\n<NUMBER OF NODES> 2\n<FIRST THRU NODE> 1\n"
            << "<NUMBER OF LINKS> 2\n<END OF METADATA>\n"
            << "1 2 1000 1 3 0.15 4 0 0 1 ;\n";
        out.close();
        CHECK_THROWS_WITH_AS(parse_network(path.string()), doctest::Contains("declares 2 links"),
                             Error);
    }
    SUBCASE("duplicate link") {
        auto path = temp_file("dup.net");
        std::ofstream out(path);
        out << "<NUMBER OF ZONES> 2\n<NUMBER OF NODES> 2\n<FIRST THRU NODE> 1\n"
            << "<NUMBER OF LINKS> 2\n<END OF METADATA>\n"
            << "1 2 1000 1 3 0.15 4 0 0 1 ;\n"
            << "1 2 900 1 3 0.15 4 0 0 1 ;\n";
        out.close();
        CHECK_THROWS_WITH_AS(parse_network(path.string()), doctest::Contains("duplicate"), Error);
    }
    SUBCASE("missing header") {
        auto path = temp_file("nohdr.net");
        std::ofstream out(path);
        out << "<NUMBER OF ZONES> 2\n<NUMBER OF NODES> 2\n<NUMBER OF LINKS> 1\n"
            << "<END OF METADATA>\n1 2 1000 1 3 0.15 4 0 0 1 ;\n";
        out.close();
        CHECK_THROWS_WITH_AS(parse_network(path.string()),
                             doctest::Contains("FIRST THRU NODE"), Error);
    }
    SUBCASE("nonpositive capacity") {
        auto path = temp_file("cap.net");
        std::ofstream out(path);
        out << "<NUMBER OF ZONES> 2\n<NUMBER OF NODES> 2\n<FIRST THRU NODE> 1\n"
            << "<NUMBER OF LINKS> 1\n<END OF METADATA>\n"
            << "1 2 0 1 3 0.15 4 0 0 1 ;\n";
        out.close();
        CHECK_THROWS_WITH_AS(parse_network(path.string()), doctest::Contains("capacity"), Error);
    }
}

TEST_CASE("network write/parse round trip") {
    std::mt19937_64 rng(5);
    Network net = random_connected_network(9, 6, rng);
    auto path = temp_file("roundtrip.net");
    write_network(net, path.string());
    Network back = parse_network(path.string());
    REQUIRE(back.num_nodes() == net.num_nodes());
    REQUIRE(back.num_links() == net.num_links());
    CHECK(back.num_zones() == net.num_zones());
    CHECK(back.first_thru_node() == net.first_thru_node());
    for (LinkId l = 0; l < net.num_links(); ++l) {
        CHECK(back.link(l).tail == net.link(l).tail);
        CHECK(back.link(l).head == net.link(l).head);
        CHECK(back.link(l).free_flow_time == net.link(l).free_flow_time);
        CHECK(back.link(l).capacity == net.link(l).capacity);
        CHECK(back.link(l).alpha == net.link(l).alpha);
        CHECK(back.link(l).beta == net.link(l).beta);
    }
}

TEST_CASE("trips parser") {
    SUBCASE("empty body") {
        auto path = temp_file("empty.trips");
        std::ofstream out(path);
        out << "<NUMBER OF ZONES> 4\n<END OF METADATA>\n";
        out.close();
        CHECK(parse_trips(path.string()).empty());
    }
    SUBCASE("single entry") {
        auto path = temp_file("one.trips");
        std::ofstream out(path);
        out << "<NUMBER OF ZONES> 2\n<END OF METADATA>\n"
            << "Origin 1\n  2 : 100.0;\n";
        out.close();
        ODMatrix od = parse_trips(path.string());
        CHECK(od.size() == 1);
        CHECK(od.demand(0, 1) == doctest::Approx(100.0));
    }
    SUBCASE("random file total equals line-sum oracle") {
        std::mt19937_64 rng(17);
        std::uniform_real_distribution<double> demand(0.0, 300.0);
        auto path = temp_file("random.trips");
        std::ofstream out(path);
        out.precision(17);
        out << "<NUMBER OF ZONES> 6\n<END OF METADATA>\n";
        double manual = 0.0;
        for (int o = 1; o <= 6; ++o) {
            out << "Origin " << o << "\n";
            for (int d = 1; d <= 6; ++d) {
                double v = demand(rng);
                if (o == d) v = 0.0;
                manual += v;
                out << "  " << d << " : " << v << "; ";
            }
            out << "\n";
        }
        out.close();
        ODMatrix od = parse_trips(path.string());
        CHECK(od.total_demand() == doctest::Approx(manual).epsilon(1e-12));
    }
    SUBCASE("negative demand rejected") {
        auto path = temp_file("neg.trips");
        std::ofstream out(path);
        out << "<NUMBER OF ZONES> 2\n<END OF METADATA>\nOrigin 1\n 2 : -5;\n";
        out.close();
        CHECK_THROWS_AS(parse_trips(path.string()), Error);
    }
    SUBCASE("zone bound checked against the network") {
        auto path = temp_file("zonebound.trips");
        std::ofstream out(path);
        out << "<NUMBER OF ZONES> 2\n<END OF METADATA>\nOrigin 1\n 9 : 5;\n";
        out.close();
        Network net(3, 2, 2);
        net.add_link(bpr_link(0, 2, 1.0, 10.0));
        CHECK_THROWS_AS(parse_trips(path.string(), &net), Error);
    }
}

TEST_CASE("flows file round trip") {
    std::mt19937_64 rng(13);
    Network net = random_connected_network(7, 5, rng);
    std::vector<double> flows(static_cast<std::size_t>(net.num_links()));
    std::uniform_real_distribution<double> f(0.0, 500.0);
    for (double& x : flows) x = f(rng);
    std::vector<double> costs = travel_times(net, flows);
    auto path = temp_file("flows.tsv");
    write_flows(net, flows, costs, path.string());
    std::vector<double> back = read_flows(net, path.string());
    for (std::size_t i = 0; i < flows.size(); ++i) CHECK(back[i] == flows[i]);
}

TEST_CASE("partition file round trip and contiguity") {
    auto path = temp_file("p.txt");
    std::vector<std::int32_t> assignment{0, 1, 1, 0, 1};
    write_partition_assignment(assignment, path.string());
    CHECK(read_partition_assignment(path.string(), 5) == assignment);

    auto bad = temp_file("bad.txt");
    std::vector<std::int32_t> gapped{0, 2, 2, 0, 2};
    write_partition_assignment(gapped, bad.string());
    CHECK_THROWS_WITH_AS(read_partition_assignment(bad.string(), 5),
                         doctest::Contains("not contiguous"), Error);
}

TEST_CASE("convergence log round trip at full precision") {
    std::vector<ConvergenceRow> rows{{1, 0.123456789012345, 1e-3, 7480225.671234567},
                                     {2, 1.0 / 3.0, 9.87654321e-7, 1234.5678901234567}};
    auto path = temp_file("conv.csv");
    write_convergence_log(rows, path.string());
    std::vector<ConvergenceRow> back = read_convergence_log(path.string());
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(back[i].iteration == rows[i].iteration);
        CHECK(std::abs(back[i].elapsed_seconds - rows[i].elapsed_seconds) <= 1e-12);
        CHECK(std::abs(back[i].relative_gap - rows[i].relative_gap) <= 1e-12);
        CHECK(std::abs(back[i].tstt - rows[i].tstt) <= 1e-12 * rows[i].tstt);
    }
}

TEST_CASE("bundled instance loads with expected shape") {
    Network net = parse_network(std::string(DSTAP_DATA_DIR) + "/siouxfalls_net.tntp");
    CHECK(net.num_nodes() == 24);
    CHECK(net.num_links() == 76);
    CHECK(net.num_zones() == 24);
    CHECK(net.first_thru_node() == 0);
    ODMatrix od = parse_trips(std::string(DSTAP_DATA_DIR) + "/siouxfalls_trips.tntp", &net);
    CHECK(od.total_demand() == doctest::Approx(360600.0));
}
