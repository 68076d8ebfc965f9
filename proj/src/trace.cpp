#include "racsim/trace.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace racsim {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

const char* policy_name(PolicyTag tag) {
    return tag == PolicyTag::Dnn ? "dnn" : "rac";
}

PolicyTag policy_from_name(const std::string& name) {
    if (name == "dnn") return PolicyTag::Dnn;
    return PolicyTag::Rac;
}

const char* event_name(StepEvent ev) {
    switch (ev) {
        case StepEvent::Switch: return "switch";
        case StepEvent::Shutdown: return "shutdown";
        default: return "";
    }
}

StepEvent event_from_name(const std::string& name) {
    if (name == "switch") return StepEvent::Switch;
    if (name == "shutdown") return StepEvent::Shutdown;
    return StepEvent::None;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_double(const std::string& s) {
    return std::strtod(s.c_str(), nullptr);
}

}  // namespace

double Trace::shutdown_time() const {
    return shutdown() ? rows.back().t : std::numeric_limits<double>::quiet_NaN();
}

bool Trace::switched() const {
    for (const auto& ev : events) {
        if (ev.kind == EventKind::Switch) return true;
    }
    return false;
}

double Trace::switch_time() const {
    for (const auto& ev : events) {
        if (ev.kind == EventKind::Switch) return ev.t;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

void Trace::write_csv(std::ostream& out) const {
    out << "t";
    for (int i = 0; i < state_dim; ++i) out << ",x" << (i + 1);
    if (chain_count <= 1) {
        out << ",u_raw,u_sat";
    } else {
        for (int c = 0; c < chain_count; ++c) out << ",u_raw" << (c + 1);
        for (int c = 0; c < chain_count; ++c) out << ",u_sat" << (c + 1);
    }
    for (int i = 0; i < state_dim; ++i) out << ",e" << (i + 1);
    out << ",envelope,policy,event\n";

    for (const auto& row : rows) {
        out << format_double(row.t);
        for (int i = 0; i < state_dim; ++i) out << ',' << format_double(row.x[i]);
        for (int c = 0; c < chain_count; ++c) out << ',' << format_double(row.u_raw[c]);
        for (int c = 0; c < chain_count; ++c) out << ',' << format_double(row.u_sat[c]);
        for (int i = 0; i < state_dim; ++i) out << ',' << format_double(row.e[i]);
        out << ',' << format_double(row.envelope);
        out << ',' << policy_name(row.policy);
        out << ',' << event_name(row.event);
        out << '\n';
    }
}

void Trace::write_csv_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("trace.out", "cannot open '" + path + "' for writing");
    write_csv(out);
}

Trace Trace::read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ConfigError("trace.csv", "empty file");
    }
    const auto header = split_csv_line(line);

    Trace trace;
    int n_states = 0;
    int n_chains = 0;
    for (const auto& col : header) {
        if (col.size() > 1 && col[0] == 'x') ++n_states;
        if (col.rfind("u_raw", 0) == 0) ++n_chains;
    }
    if (n_states == 0 || n_chains == 0) {
        throw ConfigError("trace.csv", "header does not look like a trace");
    }
    trace.state_dim = n_states;
    trace.chain_count = n_chains;
    if (n_states < 2) trace.secondary_error_idx.clear();

    const std::size_t expected = 1 + 2 * static_cast<std::size_t>(n_states) +
                                 2 * static_cast<std::size_t>(n_chains) + 3;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != expected) {
            throw ConfigError("trace.csv", "row has " + std::to_string(cells.size()) +
                                               " cells, expected " + std::to_string(expected));
        }
        TraceRow row;
        std::size_t at = 0;
        row.t = parse_double(cells[at++]);
        row.x.resize(n_states);
        for (int i = 0; i < n_states; ++i) row.x[i] = parse_double(cells[at++]);
        row.u_raw.resize(n_chains);
        row.u_sat.resize(n_chains);
        for (int c = 0; c < n_chains; ++c) row.u_raw[c] = parse_double(cells[at++]);
        for (int c = 0; c < n_chains; ++c) row.u_sat[c] = parse_double(cells[at++]);
        row.e.resize(n_states);
        for (int i = 0; i < n_states; ++i) row.e[i] = parse_double(cells[at++]);
        row.envelope = parse_double(cells[at++]);
        row.policy = policy_from_name(cells[at++]);
        row.event = event_from_name(cells[at++]);
        if (row.event == StepEvent::Switch) trace.events.push_back({row.t, EventKind::Switch});
        if (row.event == StepEvent::Shutdown) trace.events.push_back({row.t, EventKind::Shutdown});
        trace.rows.push_back(std::move(row));
    }
    if (trace.rows.size() >= 2) {
        trace.step_s = trace.rows[1].t - trace.rows[0].t;
    }
    return trace;
}

Trace Trace::read_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("trace.csv", "cannot open '" + path + "'");
    return read_csv(in);
}

}  // namespace racsim
