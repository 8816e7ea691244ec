#pragma once

#include <json.hpp>

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace adoptkit {

// A required upstream artifact is absent; surfaces as exit code 3.
struct MissingDependency : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An upstream artifact no longer matches its recorded hash; exit code 3.
struct StaleInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::string& path); // streaming; throws on open failure

// Per-stage provenance record. Deliberately carries no timestamps or thread
// counts so byte-identical runs produce byte-identical manifests.
struct Manifest {
    std::string stage;
    int version = 1;
    nlohmann::json parameters;
    std::map<std::string, std::string> inputs;  // path or label -> sha256
    std::map<std::string, std::string> outputs; // stage-relative file -> sha256

    nlohmann::json to_json() const;
    static Manifest from_json(const nlohmann::json& j);
};

// Hashes `output_files` (paths relative to `dir`) and writes dir/manifest.json.
Manifest write_stage_manifest(const std::string& dir, const std::string& stage,
                              const nlohmann::json& parameters,
                              const std::map<std::string, std::string>& inputs,
                              const std::vector<std::string>& output_files);

// Loads dir/manifest.json and checks the stage name. Throws MissingDependency
// when the file is absent or names a different stage.
Manifest read_stage_manifest(const std::string& dir, const std::string& stage);

// Re-hashes every declared output under `dir`; throws StaleInput on the first
// missing or modified file.
void verify_stage_outputs(const std::string& dir, const Manifest& m);

} // namespace adoptkit
