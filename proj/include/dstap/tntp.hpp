#pragma once

#include <string>
#include <vector>

#include "dstap/network.hpp"

namespace dstap {

struct ConvergenceRow {
    std::int32_t iteration = 0;
    double elapsed_seconds = 0.0;
    double relative_gap = 0.0;
    double tstt = 0.0;
};

struct TraceRow {
    std::string phase;
    std::int32_t iteration = 0;
    double elapsed_seconds = 0.0;
    double relative_gap = 0.0;
    double tstt = 0.0;
};

// Instance files use the metadata-header format of the public transportation
// network repository: <NUMBER OF ZONES>, <NUMBER OF NODES>, <FIRST THRU NODE>,
// <NUMBER OF LINKS>, then one record per link. Node ids are 1-based in files
// and dense 0-based in memory. Comment lines start with '~'.
Network parse_network(const std::string& path);
void write_network(const Network& network, const std::string& path);

ODMatrix parse_trips(const std::string& path, const Network* network = nullptr);
void write_trips(const ODMatrix& od, std::int32_t num_zones, const std::string& path);

// Tab-separated (tail, head, flow, cost) rows, 1-based node ids, one row per
// link in link order. The same layout serves as reference-flow input.
void write_flows(const Network& network, std::span<const double> link_flows,
                 std::span<const double> link_costs, const std::string& path);
std::vector<double> read_flows(const Network& network, const std::string& path);

// One line per node: "node_id subnet_id" with 1-based node ids and 0-based
// contiguous subnet ids.
std::vector<std::int32_t> read_partition_assignment(const std::string& path,
                                                    std::int32_t num_nodes);
void write_partition_assignment(std::span<const std::int32_t> assignment, const std::string& path);

void write_convergence_log(std::span<const ConvergenceRow> rows, const std::string& path);
std::vector<ConvergenceRow> read_convergence_log(const std::string& path);

void write_trace(std::span<const TraceRow> rows, const std::string& path);
std::vector<TraceRow> read_trace(const std::string& path);

// Writes to a temporary file and renames on success, so failed runs leave no
// partial outputs behind.
void write_text_file(const std::string& path, const std::string& contents);

}  // namespace dstap
