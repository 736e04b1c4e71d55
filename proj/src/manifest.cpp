#include "wepo/manifest.hpp"

#include <fstream>
#include <iterator>

#include <json.hpp>

#include "wepo/error.hpp"
#include "wepo/hash.hpp"

namespace wepo {

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("file_digest: cannot open " + path);
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return digest_hex(data);
}

std::string manifest_path_for(const std::string& output_path) {
    return output_path + ".manifest.json";
}

std::string manifest_to_json(const RunManifest& manifest) {
    nlohmann::json config = nlohmann::json::object();
    for (const auto& [flag, value] : manifest.config) config[flag] = value;
    nlohmann::json inputs = nlohmann::json::object();
    for (const auto& [path, digest] : manifest.inputs) inputs[path] = digest;
    nlohmann::json outputs = nlohmann::json::object();
    for (const auto& [path, digest] : manifest.outputs) outputs[path] = digest;

    nlohmann::json doc = {
        {"tool_version", kToolVersion},
        {"command", manifest.command},
        {"config", config},
        {"global_seed", manifest.global_seed},
        {"inputs", inputs},
        {"outputs", outputs},
    };
    return doc.dump(2);
}

void write_manifest(const RunManifest& manifest, const std::string& output_path) {
    std::string path = manifest_path_for(output_path);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_manifest: cannot open " + path);
    out << manifest_to_json(manifest) << "\n";
    if (!out) throw IoError("write_manifest: write failed for " + path);
}

}  // namespace wepo
