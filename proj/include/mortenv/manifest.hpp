#pragma once

// Run manifests: content hashes of every input and output, the config
// echo, and version info, written next to each subcommand's artifacts so a
// run can be audited and reproduced.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "mortenv/config.hpp"
#include "mortenv/errors.hpp"
#include "mortenv/rng.hpp"

namespace mortenv {

constexpr const char* kVersion = "0.1.0";

inline std::string hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot hash missing file " + path);
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buffer[1 << 15];
    while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buffer[i]);
            h *= 0x100000001b3ull;
        }
        if (!in) break;
    }
    char hex[32];
    std::snprintf(hex, sizeof(hex), "fnv1a64:%016llx",
                  static_cast<unsigned long long>(h));
    return hex;
}

inline void write_manifest(const std::string& out_dir, const std::string& subcommand,
                           const RunConfig& config,
                           const std::vector<std::string>& inputs,
                           const std::vector<std::string>& outputs) {
    nlohmann::json manifest;
    manifest["subcommand"] = subcommand;
    manifest["version"] = kVersion;
    manifest["config_file"] = config.source_path();
    nlohmann::json echo = nlohmann::json::object();
    for (const auto& [key, value] : config.entries()) echo[key] = value;
    manifest["config"] = echo;
    nlohmann::json in_hashes = nlohmann::json::object();
    for (const auto& path : inputs) in_hashes[path] = hash_file(path);
    manifest["inputs"] = in_hashes;
    nlohmann::json out_hashes = nlohmann::json::object();
    for (const auto& path : outputs) out_hashes[path] = hash_file(path);
    manifest["outputs"] = out_hashes;

    std::filesystem::create_directories(out_dir);
    std::ofstream out(out_dir + "/manifest_" + subcommand + ".json");
    out << manifest.dump(2) << "\n";
}

}  // namespace mortenv
