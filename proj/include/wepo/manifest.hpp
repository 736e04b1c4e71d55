#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace wepo {

inline constexpr const char* kToolVersion = "0.1.0";

// Provenance record written beside every CLI output file; re-running the
// recorded command with the same inputs reproduces the output digests.
struct RunManifest {
    std::string command;
    std::map<std::string, std::string> config;   // flag -> rendered value
    std::uint64_t global_seed = 0;
    std::map<std::string, std::string> inputs;   // path -> content digest
    std::map<std::string, std::string> outputs;  // path -> content digest
};

// FNV-1a 64 hex digest of the file's bytes.
std::string file_digest(const std::string& path);

std::string manifest_path_for(const std::string& output_path);

std::string manifest_to_json(const RunManifest& manifest);

// Writes <output_path>.manifest.json.
void write_manifest(const RunManifest& manifest, const std::string& output_path);

}  // namespace wepo
