#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ictm/errors.hpp"
#include "ictm/reconstruct.hpp"

namespace ictm::io {

/// Whitespace-separated coordinates, one point per line; `#` starts a comment.
inline PointCloud parse_cloud(std::istream& in, const std::string& source = "<stream>") {
    PointCloud cloud;
    cloud.dim = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        std::vector<double> coords;
        std::string token;
        while (fields >> token) {
            double v = 0.0;
            const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
            if (ec != std::errc{} || end != token.data() + token.size() || !std::isfinite(v)) {
                throw IoError(source + ":" + std::to_string(line_no) + ": bad coordinate '" + token + "'");
            }
            coords.push_back(v);
        }
        if (coords.empty()) continue;
        if (coords.size() != 2 && coords.size() != 3) {
            throw IoError(source + ":" + std::to_string(line_no) + ": expected 2 or 3 columns");
        }
        if (cloud.dim == 0) cloud.dim = coords.size();
        if (coords.size() != cloud.dim) {
            throw IoError(source + ":" + std::to_string(line_no) + ": column count changed");
        }
        cloud.points.push_back({coords[0], coords[1], coords.size() == 3 ? coords[2] : 0.0});
    }
    if (cloud.points.empty()) throw IoError(source + ": no points");
    return cloud;
}

inline PointCloud read_cloud(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open point cloud '" + path + "'");
    return parse_cloud(in, path);
}

inline void write_cloud(const std::string& path, const PointCloud& cloud) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out.precision(17);
    for (const auto& x : cloud.points) {
        out << x[0] << ' ' << x[1];
        if (cloud.dim == 3) out << ' ' << x[2];
        out << '\n';
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace ictm::io
