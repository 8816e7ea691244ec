#pragma once

#include "adoptkit/synthgen.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace adoptkit {

// One JSON document drives every stage. The master seed is the only seed:
// each seeded stage derives its own stream from it, so a run is a pure
// function of (input files, config).
struct RunConfig {
    std::string input_dir;        // empty: consume <out_dir>/synth/data
    std::string out_dir = "out";
    std::uint64_t seed = 42;
    bool strict = false;
    int threads = 1;              // 0 = all hardware threads; never changes outputs
    std::vector<std::string> stages; // subset run by cmd_all; empty = all six

    SynthConfig synth;

    double split_cutoff = 0.8;
    std::int32_t rf_trees = 25;
    std::int32_t gbt_stages = 25;
    double gbt_learning_rate = 0.1;
    std::int32_t gbt_depth = 3;
    std::size_t attendee_cap = 500;

    std::size_t shap_sample = 2000;
    std::string shap_partition = "test"; // "test" or "train"

    static RunConfig from_json(const nlohmann::json& j); // rejects unknown keys
    nlohmann::json to_json() const;
    void validate() const; // throws ValidationError
};

// Stage drivers. Each resets <out_dir>/<stage>/, writes its artifacts plus a
// manifest.json, and returns a process exit code: 0 on success, 2 when the
// input data fails validation, 4 when --strict escalates degenerate
// statistics. Missing or stale upstream artifacts throw MissingDependency /
// StaleInput (exit code 3 at the CLI boundary).
int cmd_synth(const RunConfig& cfg);
int cmd_validate(const RunConfig& cfg);
int cmd_features(const RunConfig& cfg);
int cmd_diagnose(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg);
int cmd_explain(const RunConfig& cfg);
int cmd_all(const RunConfig& cfg);

// Dispatch by stage name ("all" included). Throws ValidationError on an
// unknown name.
int run_stage(const RunConfig& cfg, const std::string& name);

// run_stage with the documented exit-code mapping: thrown validation
// problems become 2, dependency problems 3, anything else 1. The error
// message lands in error_out.
int run_stage_catching(const RunConfig& cfg, const std::string& name, std::string& error_out);

} // namespace adoptkit
