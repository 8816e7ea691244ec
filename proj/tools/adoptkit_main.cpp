#include "adoptkit/csv.hpp"
#include "adoptkit/dataset.hpp"
#include "adoptkit/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <string>

using namespace adoptkit;

int main(int argc, char** argv) {
    CLI::App app{"adoptkit: diagnose and predict practice adoption from mediated "
                 "video-screening event logs"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 42;
    int threads = 1;
    bool strict = false;
    auto* copt = app.add_option("--config", config_path, "JSON run configuration");
    auto* sopt = app.add_option("--seed", seed, "master seed; overrides the config");
    auto* topt =
        app.add_option("--threads", threads, "worker threads, 0 = all cores; never changes outputs");
    app.add_flag("--strict", strict,
                 "fail on lenient-mode drops and on degenerate statistics (exit 4)");

    struct StageDesc { const char* name; const char* help; };
    const StageDesc stages[] = {
        {"synth", "generate the seeded synthetic event log"},
        {"validate", "load and validate the input tables"},
        {"features", "build the per-attendance feature matrix"},
        {"diagnose", "run the statistical test batteries and descriptive bundle"},
        {"train", "fit and evaluate the three classifiers"},
        {"explain", "attribute forest predictions and fit dependency slopes"},
        {"all", "run every stage in order"},
    };
    for (const auto& s : stages) app.add_subcommand(s.name, s.help)->fallthrough();

    std::string run_stage_name;
    auto* runsub = app.add_subcommand("run", "run one stage selected by --stage");
    runsub->add_option("--stage", run_stage_name, "stage name (synth..explain, all)")->required();
    runsub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    std::string chosen;
    for (const auto* sub : app.get_subcommands()) chosen = sub->get_name();
    if (chosen == "run") chosen = run_stage_name;

    RunConfig cfg;
    if (*copt) {
        try {
            cfg = RunConfig::from_json(nlohmann::json::parse(read_file(config_path)));
        } catch (const std::exception& e) {
            std::fprintf(stderr, "error: config %s: %s\n", config_path.c_str(), e.what());
            return 2;
        }
    }
    if (*sopt) cfg.seed = seed;
    if (*topt) cfg.threads = threads;
    if (strict) cfg.strict = true;

    std::string err;
    const int rc = run_stage_catching(cfg, chosen, err);
    if (!err.empty()) {
        std::fprintf(stderr, "error: %s\n", err.c_str());
    } else if (rc == 2) {
        std::fprintf(stderr, "validation failed; see %s/validate/report.json\n",
                     cfg.out_dir.c_str());
    } else if (rc == 4) {
        std::fprintf(stderr, "degenerate statistics escalated under --strict; see %s/diagnose/\n",
                     cfg.out_dir.c_str());
    } else if (rc == 0) {
        std::printf("ok: %s -> %s/\n", chosen.c_str(), cfg.out_dir.c_str());
    }
    return rc;
}
