#include "dstap/tntp.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace dstap {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

[[noreturn]] void parse_fail(const std::string& path, std::size_t line, const std::string& what) {
    throw Error(ErrorKind::Parse, path + ":" + std::to_string(line) + ": " + what);
}

struct LineReader {
    std::ifstream in;
    std::string path;
    std::size_t line_no = 0;

    explicit LineReader(const std::string& p) : in(p), path(p) {
        if (!in) throw Error(ErrorKind::Io, "cannot open " + p);
    }

    bool next(std::string& out) {
        while (std::getline(in, out)) {
            ++line_no;
            // strip trailing CR from files written on other platforms
            if (!out.empty() && out.back() == '\r') out.pop_back();
            std::size_t i = out.find_first_not_of(" \t");
            if (i == std::string::npos) continue;
            if (out[i] == '~') continue;  // comment
            return true;
        }
        return false;
    }
};

bool parse_metadata_line(const std::string& line, std::string& key, std::string& value) {
    std::size_t open = line.find('<');
    if (open == std::string::npos) return false;
    std::size_t close = line.find('>', open);
    if (close == std::string::npos) return false;
    key = line.substr(open + 1, close - open - 1);
    value = line.substr(close + 1);
    std::size_t b = value.find_first_not_of(" \t");
    value = b == std::string::npos ? "" : value.substr(b);
    std::size_t e = value.find_last_not_of(" \t;");
    if (e != std::string::npos) value = value.substr(0, e + 1);
    return true;
}

std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> tokens;
    std::istringstream iss(line);
    std::string tok;
    while (iss >> tok) {
        if (tok == ";") continue;
        if (!tok.empty() && tok.back() == ';') tok.pop_back();
        if (!tok.empty()) tokens.push_back(tok);
    }
    return tokens;
}

double to_double(const std::string& tok, const std::string& path, std::size_t line) {
    try {
        std::size_t used = 0;
        double v = std::stod(tok, &used);
        if (used != tok.size()) parse_fail(path, line, "malformed number '" + tok + "'");
        return v;
    } catch (const std::exception&) {
        parse_fail(path, line, "malformed number '" + tok + "'");
    }
}

std::int64_t to_int(const std::string& tok, const std::string& path, std::size_t line) {
    double v = to_double(tok, path, line);
    if (v != std::floor(v)) parse_fail(path, line, "expected integer, got '" + tok + "'");
    return static_cast<std::int64_t>(v);
}

}  // namespace

Network parse_network(const std::string& path) {
    LineReader reader(path);
    std::string line;

    std::int64_t num_zones = -1, num_nodes = -1, first_thru = -1, num_links = -1;
    while (reader.next(line)) {
        std::string key, value;
        if (!parse_metadata_line(line, key, value)) {
            parse_fail(path, reader.line_no, "expected metadata header, got '" + line + "'");
        }
        if (key == "END OF METADATA") break;
        if (key == "NUMBER OF ZONES") num_zones = to_int(value, path, reader.line_no);
        else if (key == "NUMBER OF NODES") num_nodes = to_int(value, path, reader.line_no);
        else if (key == "FIRST THRU NODE") first_thru = to_int(value, path, reader.line_no);
        else if (key == "NUMBER OF LINKS") num_links = to_int(value, path, reader.line_no);
        // other metadata keys are tolerated and ignored
    }
    if (num_zones < 0) parse_fail(path, reader.line_no, "missing <NUMBER OF ZONES> header");
    if (num_nodes < 0) parse_fail(path, reader.line_no, "missing <NUMBER OF NODES> header");
    if (first_thru < 0) parse_fail(path, reader.line_no, "missing <FIRST THRU NODE> header");
    if (num_links < 0) parse_fail(path, reader.line_no, "missing <NUMBER OF LINKS> header");
    if (num_zones > num_nodes) parse_fail(path, reader.line_no, "zone count exceeds node count");

    Network net(static_cast<std::int32_t>(num_nodes), static_cast<std::int32_t>(num_zones),
                static_cast<NodeId>(first_thru - 1));

    std::set<std::pair<NodeId, NodeId>> seen;
    std::int64_t records = 0;
    while (reader.next(line)) {
        std::vector<std::string> tok = tokenize(line);
        if (tok.empty()) continue;
        if (tok.size() < 5) parse_fail(path, reader.line_no, "link record needs at least 5 fields");
        Link l;
        std::int64_t tail = to_int(tok[0], path, reader.line_no);
        std::int64_t head = to_int(tok[1], path, reader.line_no);
        if (tail < 1 || tail > num_nodes || head < 1 || head > num_nodes) {
            parse_fail(path, reader.line_no, "link endpoint out of range");
        }
        l.tail = static_cast<NodeId>(tail - 1);
        l.head = static_cast<NodeId>(head - 1);
        l.capacity = to_double(tok[2], path, reader.line_no);
        l.length = to_double(tok[3], path, reader.line_no);
        l.free_flow_time = to_double(tok[4], path, reader.line_no);
        l.alpha = tok.size() > 5 ? to_double(tok[5], path, reader.line_no) : 0.15;
        l.beta = tok.size() > 6 ? to_double(tok[6], path, reader.line_no) : 4.0;
        l.speed = tok.size() > 7 ? to_double(tok[7], path, reader.line_no) : 0.0;
        l.toll = tok.size() > 8 ? to_double(tok[8], path, reader.line_no) : 0.0;
        l.type = tok.size() > 9 ? static_cast<std::int32_t>(to_int(tok[9], path, reader.line_no)) : 1;
        if (l.capacity <= 0.0) parse_fail(path, reader.line_no, "link capacity must be positive");
        if (l.free_flow_time < 0.0) parse_fail(path, reader.line_no, "negative free-flow time");
        if (l.alpha < 0.0) parse_fail(path, reader.line_no, "negative BPR alpha");
        if (l.beta < 1.0) parse_fail(path, reader.line_no, "BPR beta below 1");
        if (!seen.insert({l.tail, l.head}).second) {
            parse_fail(path, reader.line_no,
                       "duplicate link " + std::to_string(tail) + " -> " + std::to_string(head));
        }
        try {
            net.add_link(l);
        } catch (const Error& e) {
            parse_fail(path, reader.line_no, e.what());
        }
        ++records;
    }
    if (records != num_links) {
        throw Error(ErrorKind::Parse, path + ": header declares " + std::to_string(num_links) +
                                          " links but file has " + std::to_string(records) +
                                          " records");
    }
    return net;
}

void write_network(const Network& network, const std::string& path) {
    std::ostringstream out;
    out << "<NUMBER OF ZONES> " << network.num_zones() << "\n";
    out << "<NUMBER OF NODES> " << network.num_nodes() << "\n";
    out << "<FIRST THRU NODE> " << network.first_thru_node() + 1 << "\n";
    out << "<NUMBER OF LINKS> " << network.num_links() << "\n";
    out << "<END OF METADATA>\n\n";
    out << "~\tinit node\tterm node\tcapacity\tlength\tfree flow time\tb\tpower\tspeed\ttoll\ttype\t;\n";
    for (const Link& l : network.links()) {
        out << '\t' << l.tail + 1 << '\t' << l.head + 1 << '\t' << fmt(l.capacity) << '\t'
            << fmt(l.length) << '\t' << fmt(l.free_flow_time) << '\t' << fmt(l.alpha) << '\t'
            << fmt(l.beta) << '\t' << fmt(l.speed) << '\t' << fmt(l.toll) << '\t' << l.type
            << "\t;\n";
    }
    write_text_file(path, out.str());
}

ODMatrix parse_trips(const std::string& path, const Network* network) {
    LineReader reader(path);
    std::string line;
    while (reader.next(line)) {
        std::string key, value;
        if (!parse_metadata_line(line, key, value)) {
            parse_fail(path, reader.line_no, "expected metadata header, got '" + line + "'");
        }
        if (key == "END OF METADATA") break;
    }

    ODMatrix od;
    NodeId origin = kNoNode;
    auto check_zone = [&](std::int64_t id_1based) {
        if (id_1based < 1) parse_fail(path, reader.line_no, "zone id below 1");
        if (network != nullptr) {
            if (id_1based > network->num_nodes()) {
                parse_fail(path, reader.line_no,
                           "zone " + std::to_string(id_1based) + " exceeds node count");
            }
            if (id_1based > network->num_zones()) {
                parse_fail(path, reader.line_no,
                           "zone " + std::to_string(id_1based) + " is not a centroid");
            }
        }
        return static_cast<NodeId>(id_1based - 1);
    };

    auto trim = [](std::string s) {
        std::size_t b = s.find_first_not_of(" \t");
        if (b == std::string::npos) return std::string();
        std::size_t e = s.find_last_not_of(" \t");
        return s.substr(b, e - b + 1);
    };

    while (reader.next(line)) {
        std::string body = trim(line);
        if (body.rfind("Origin", 0) == 0 || body.rfind("ORIGIN", 0) == 0) {
            std::vector<std::string> tok = tokenize(body.substr(6));
            if (tok.empty()) parse_fail(path, reader.line_no, "Origin line without a zone id");
            origin = check_zone(to_int(tok[0], path, reader.line_no));
            continue;
        }
        // entries look like "dest : demand;" with arbitrary spacing
        std::istringstream entries(body);
        std::string entry;
        while (std::getline(entries, entry, ';')) {
            entry = trim(entry);
            if (entry.empty()) continue;
            if (origin == kNoNode) parse_fail(path, reader.line_no, "demand entry before any Origin");
            std::size_t colon = entry.find(':');
            if (colon == std::string::npos) {
                parse_fail(path, reader.line_no, "demand entry without ':' separator");
            }
            std::string dest_tok = trim(entry.substr(0, colon));
            std::string demand_tok = trim(entry.substr(colon + 1));
            if (dest_tok.empty() || demand_tok.empty()) {
                parse_fail(path, reader.line_no, "incomplete demand entry");
            }
            NodeId dest = check_zone(to_int(dest_tok, path, reader.line_no));
            double demand = to_double(demand_tok, path, reader.line_no);
            if (demand < 0.0) parse_fail(path, reader.line_no, "negative demand");
            if (demand > 0.0) od.add(origin, dest, demand);
        }
    }
    od.finalize();
    return od;
}

void write_trips(const ODMatrix& od, std::int32_t num_zones, const std::string& path) {
    std::ostringstream out;
    out << "<NUMBER OF ZONES> " << num_zones << "\n";
    out << "<TOTAL OD FLOW> " << fmt(od.total_demand()) << "\n";
    out << "<END OF METADATA>\n\n";
    for (NodeId origin : od.origins()) {
        out << "Origin " << origin + 1 << "\n";
        std::size_t col = 0;
        for (const OdEntry& e : od.for_origin(origin)) {
            out << "    " << e.destination + 1 << " : " << fmt(e.demand) << ";";
            if (++col % 5 == 0) out << "\n";
        }
        if (col % 5 != 0) out << "\n";
        out << "\n";
    }
    write_text_file(path, out.str());
}

void write_flows(const Network& network, std::span<const double> link_flows,
                 std::span<const double> link_costs, const std::string& path) {
    if (static_cast<std::int32_t>(link_flows.size()) != network.num_links() ||
        static_cast<std::int32_t>(link_costs.size()) != network.num_links()) {
        throw Error(ErrorKind::InvalidArgument, "flow/cost vector length mismatch");
    }
    std::ostringstream out;
    for (LinkId l = 0; l < network.num_links(); ++l) {
        const Link& link = network.link(l);
        out << link.tail + 1 << '\t' << link.head + 1 << '\t'
            << fmt(link_flows[static_cast<std::size_t>(l)]) << '\t'
            << fmt(link_costs[static_cast<std::size_t>(l)]) << '\n';
    }
    write_text_file(path, out.str());
}

std::vector<double> read_flows(const Network& network, const std::string& path) {
    LineReader reader(path);
    std::string line;
    std::vector<double> flows(static_cast<std::size_t>(network.num_links()), 0.0);
    std::vector<char> filled(flows.size(), 0);
    while (reader.next(line)) {
        std::vector<std::string> tok = tokenize(line);
        if (tok.empty()) continue;
        if (tok.size() < 3) parse_fail(path, reader.line_no, "flow record needs tail, head, flow");
        std::int64_t tail = to_int(tok[0], path, reader.line_no);
        std::int64_t head = to_int(tok[1], path, reader.line_no);
        double flow = to_double(tok[2], path, reader.line_no);
        if (flow < 0.0) parse_fail(path, reader.line_no, "negative flow");
        auto link = network.find_link(static_cast<NodeId>(tail - 1), static_cast<NodeId>(head - 1));
        if (!link) {
            parse_fail(path, reader.line_no, "flow record for unknown link " + std::to_string(tail) +
                                                 " -> " + std::to_string(head));
        }
        if (filled[static_cast<std::size_t>(*link)]) {
            parse_fail(path, reader.line_no, "duplicate flow record for link " +
                                                 std::to_string(tail) + " -> " + std::to_string(head));
        }
        filled[static_cast<std::size_t>(*link)] = 1;
        flows[static_cast<std::size_t>(*link)] = flow;
    }
    for (std::size_t i = 0; i < filled.size(); ++i) {
        if (!filled[i]) {
            const Link& l = network.link(static_cast<LinkId>(i));
            throw Error(ErrorKind::Parse, path + ": missing flow record for link " +
                                              std::to_string(l.tail + 1) + " -> " +
                                              std::to_string(l.head + 1));
        }
    }
    return flows;
}

std::vector<std::int32_t> read_partition_assignment(const std::string& path,
                                                    std::int32_t num_nodes) {
    LineReader reader(path);
    std::string line;
    std::vector<std::int32_t> assignment(static_cast<std::size_t>(num_nodes), -1);
    while (reader.next(line)) {
        std::vector<std::string> tok = tokenize(line);
        if (tok.empty()) continue;
        if (tok.size() != 2) parse_fail(path, reader.line_no, "expected 'node_id subnet_id'");
        std::int64_t node = to_int(tok[0], path, reader.line_no);
        std::int64_t subnet = to_int(tok[1], path, reader.line_no);
        if (node < 1 || node > num_nodes) parse_fail(path, reader.line_no, "node id out of range");
        if (subnet < 0) parse_fail(path, reader.line_no, "negative subnet id");
        if (assignment[static_cast<std::size_t>(node - 1)] != -1) {
            parse_fail(path, reader.line_no, "node " + std::to_string(node) + " assigned twice");
        }
        assignment[static_cast<std::size_t>(node - 1)] = static_cast<std::int32_t>(subnet);
    }
    std::int32_t max_id = -1;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        if (assignment[i] < 0) {
            throw Error(ErrorKind::Parse,
                        path + ": node " + std::to_string(i + 1) + " has no subnet assignment");
        }
        max_id = std::max(max_id, assignment[i]);
    }
    std::vector<char> present(static_cast<std::size_t>(max_id + 1), 0);
    for (std::int32_t s : assignment) present[static_cast<std::size_t>(s)] = 1;
    for (std::size_t s = 0; s < present.size(); ++s) {
        if (!present[s]) {
            throw Error(ErrorKind::Parse, path + ": subnet ids not contiguous, missing id " +
                                              std::to_string(s));
        }
    }
    return assignment;
}

void write_partition_assignment(std::span<const std::int32_t> assignment, const std::string& path) {
    std::ostringstream out;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        out << i + 1 << ' ' << assignment[i] << '\n';
    }
    write_text_file(path, out.str());
}

void write_convergence_log(std::span<const ConvergenceRow> rows, const std::string& path) {
    std::ostringstream out;
    out << "iteration,elapsed_seconds,relative_gap,tstt\n";
    for (const ConvergenceRow& r : rows) {
        out << r.iteration << ',' << fmt(r.elapsed_seconds) << ',' << fmt(r.relative_gap) << ','
            << fmt(r.tstt) << '\n';
    }
    write_text_file(path, out.str());
}

std::vector<ConvergenceRow> read_convergence_log(const std::string& path) {
    LineReader reader(path);
    std::string line;
    std::vector<ConvergenceRow> rows;
    bool header = true;
    while (reader.next(line)) {
        if (line.rfind("#", 0) == 0) continue;
        if (header) {
            header = false;
            continue;
        }
        std::istringstream iss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(iss, field, ',')) fields.push_back(field);
        if (fields.size() != 4) parse_fail(path, reader.line_no, "expected 4 CSV fields");
        ConvergenceRow r;
        r.iteration = static_cast<std::int32_t>(to_int(fields[0], path, reader.line_no));
        r.elapsed_seconds = to_double(fields[1], path, reader.line_no);
        r.relative_gap = to_double(fields[2], path, reader.line_no);
        r.tstt = to_double(fields[3], path, reader.line_no);
        rows.push_back(r);
    }
    return rows;
}

void write_trace(std::span<const TraceRow> rows, const std::string& path) {
    std::ostringstream out;
    out << "phase,iteration,elapsed_seconds,relative_gap,tstt\n";
    for (const TraceRow& r : rows) {
        out << r.phase << ',' << r.iteration << ',' << fmt(r.elapsed_seconds) << ','
            << fmt(r.relative_gap) << ',' << fmt(r.tstt) << '\n';
    }
    write_text_file(path, out.str());
}

std::vector<TraceRow> read_trace(const std::string& path) {
    LineReader reader(path);
    std::string line;
    std::vector<TraceRow> rows;
    bool header = true;
    while (reader.next(line)) {
        if (line.rfind("#", 0) == 0) continue;
        if (header) {
            header = false;
            continue;
        }
        std::istringstream iss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(iss, field, ',')) fields.push_back(field);
        if (fields.size() != 5) parse_fail(path, reader.line_no, "expected 5 CSV fields");
        TraceRow r;
        r.phase = fields[0];
        r.iteration = static_cast<std::int32_t>(to_int(fields[1], path, reader.line_no));
        r.elapsed_seconds = to_double(fields[2], path, reader.line_no);
        r.relative_gap = to_double(fields[3], path, reader.line_no);
        r.tstt = to_double(fields[4], path, reader.line_no);
        rows.push_back(r);
    }
    return rows;
}

void write_text_file(const std::string& path, const std::string& contents) {
    namespace fs = std::filesystem;
    fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
        out << contents;
        if (!out.good()) throw Error(ErrorKind::Io, "write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw Error(ErrorKind::Io, "cannot move " + tmp.string() + " to " + path);
    }
}

}  // namespace dstap
