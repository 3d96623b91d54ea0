#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ictm/errors.hpp"
#include "ictm/grid.hpp"
#include "ictm/indicator.hpp"
#include "ictm/solver.hpp"
#include "ictm/verify.hpp"

namespace ictm::io {

/// Text for a double at 17 significant digits.
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_trace_csv(std::ostream& out, const EnergyTrace& trace) {
    out << "iter,phi,u_changes,theta_delta\n";
    for (const auto& r : trace.records) {
        out << r.iter << ',' << format_double(r.phi) << ',' << r.u_changes << ',' << format_double(r.theta_delta)
            << '\n';
    }
}

inline void write_trace_csv(const std::string& path, const EnergyTrace& trace) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    write_trace_csv(out, trace);
    if (!out) throw IoError("write failed for '" + path + "'");
}

/// Parses the four-column CSV back; phi_half is not stored and is set to phi.
inline EnergyTrace read_trace_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "iter,phi,u_changes,theta_delta") throw IoError("bad trace header");
    EnergyTrace trace;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        TraceRecord r;
        char c1 = 0, c2 = 0, c3 = 0;
        if (!(row >> r.iter >> c1 >> r.phi >> c2 >> r.u_changes >> c3 >> r.theta_delta) || c1 != ',' || c2 != ',' ||
            c3 != ',') {
            throw IoError("bad trace row '" + line + "'");
        }
        r.phi_half = r.phi;
        trace.records.push_back(r);
    }
    return trace;
}

inline nlohmann::json to_json(const PhaseField& u) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < u.phases(); ++i) {
        const auto r = u.row(i);
        rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    return rows;
}

inline nlohmann::json to_json(const CertificateReport& report) {
    nlohmann::json j;
    j["claim"] = report.claim;
    j["instance"] = report.instance;
    j["pass"] = report.passed();
    j["status"] = to_string(report.status);
    j["trials"] = report.trials;
    if (report.witness) {
        nlohmann::json w;
        w["fields"] = nlohmann::json::array();
        for (const auto& f : report.witness->fields) w["fields"].push_back(to_json(f));
        w["t"] = report.witness->t ? nlohmann::json(*report.witness->t) : nlohmann::json(nullptr);
        w["values"] = report.witness->values;
        w["note"] = report.witness->note;
        j["witness"] = std::move(w);
    } else {
        j["witness"] = nullptr;
    }
    return j;
}

/// One compact JSON object per line.
inline void write_report_line(std::ostream& out, const CertificateReport& report) {
    out << to_json(report).dump() << '\n';
}

/// Raw little-endian float64 values plus a JSON sidecar {dims, sizes, extent}.
inline void write_volume(const std::string& raw_path, const std::string& sidecar_path, const Grid& grid,
                         const std::vector<double>& values) {
    if (values.size() != grid.points()) throw ConfigError("volume does not match the grid");
    std::ofstream raw(raw_path, std::ios::binary);
    if (!raw) throw IoError("cannot write '" + raw_path + "'");
    raw.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!raw) throw IoError("write failed for '" + raw_path + "'");
    nlohmann::json meta;
    meta["dims"] = grid.dim();
    meta["sizes"] = grid.sizes();
    meta["extent"] = grid.extent();
    meta["dtype"] = "float64";
    meta["order"] = "row-major, last axis fastest";
    std::ofstream side(sidecar_path);
    if (!side) throw IoError("cannot write '" + sidecar_path + "'");
    side << meta.dump(2) << '\n';
}

inline std::vector<double> read_volume(const std::string& raw_path, const std::string& sidecar_path, Grid& grid) {
    std::ifstream side(sidecar_path);
    if (!side) throw IoError("cannot open '" + sidecar_path + "'");
    nlohmann::json meta;
    try {
        side >> meta;
        grid = build_grid(meta.at("dims").get<std::size_t>(), meta.at("sizes").get<std::vector<std::size_t>>(),
                          meta.at("extent").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad sidecar '" + sidecar_path + "': " + e.what());
    }
    std::vector<double> values(grid.points());
    std::ifstream raw(raw_path, std::ios::binary);
    if (!raw) throw IoError("cannot open '" + raw_path + "'");
    raw.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!raw) throw IoError("'" + raw_path + "' is shorter than its sidecar says");
    return values;
}

}  // namespace ictm::io
