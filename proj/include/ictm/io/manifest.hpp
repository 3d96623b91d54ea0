#pragma once

#include <fstream>
#include <string>

#include "json.hpp"

#include "ictm/errors.hpp"
#include "ictm/version.hpp"

namespace ictm::io {

/// Everything needed to repeat a run, written next to its outputs.
struct RunManifest {
    std::string subcommand;
    nlohmann::json parameters = nlohmann::json::object();
    nlohmann::json inputs = nlohmann::json::object();
    nlohmann::json outputs = nlohmann::json::object();
    std::uint64_t seed = 0;
    std::string status = "running";
    nlohmann::json result = nlohmann::json::object();

    [[nodiscard]] nlohmann::json to_json() const {
        return {{"subcommand", subcommand}, {"parameters", parameters}, {"inputs", inputs},  {"outputs", outputs},
                {"seed", seed},             {"status", status},         {"result", result}, {"version", version}};
    }

    void write(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw IoError("cannot write manifest '" + path + "'");
        out << to_json().dump(2) << '\n';
        if (!out) throw IoError("write failed for '" + path + "'");
    }
};

inline nlohmann::json read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad manifest '" + path + "': " + e.what());
    }
}

}  // namespace ictm::io
