#include <doctest.h>

#include "adoptkit/csv.hpp"
#include "adoptkit/manifest.hpp"
#include "adoptkit/pipeline.hpp"
#include "fixtures.hpp"

#include <json.hpp>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

using namespace adoptkit;
namespace fs = std::filesystem;

namespace {

std::string scratch(const std::string& name) {
    const std::string dir = std::string(fs::temp_directory_path()) + "/adoptkit_cli_" + name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Small enough to run every stage in well under a second.
RunConfig tiny_config(const std::string& out_dir, std::uint64_t seed = 7) {
    RunConfig cfg;
    cfg.out_dir = out_dir;
    cfg.seed = seed;
    cfg.synth.states = 2;
    cfg.synth.districts = 4;
    cfg.synth.blocks = 6;
    cfg.synth.villages = 8;
    cfg.synth.groups = 30;
    cfg.synth.farmers = 300;
    cfg.synth.mediators = 6;
    cfg.synth.videos = 15;
    cfg.synth.screenings = 150;
    cfg.synth.languages = 3;
    cfg.synth.date_start = fixtures::day("2017-01-01");
    cfg.synth.date_end = fixtures::day("2018-12-31");
    return cfg;
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

bool is_sha256_hex(const std::string& s) {
    if (s.size() != 64) return false;
    for (char c : s)
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
    return true;
}

std::map<std::string, std::string> snapshot(const std::string& root) {
    std::map<std::string, std::string> hashes;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        const std::string rel = fs::path(e.path()).lexically_relative(root).generic_string();
        hashes[rel] = sha256_hex(read_file(e.path().string()));
    }
    return hashes;
}

// A dataset whose differential battery is computable but degenerate: one
// village means village_size (and group_size) cannot vary across quartiles.
Dataset& degenerate_world(fixtures::World& w) {
    std::vector<Idx> vids;
    for (int f = 0; f < 8; ++f) {
        const int viewed = f + 1;
        while (vids.size() < static_cast<std::size_t>(viewed))
            vids.push_back(w.add_video("Topic number " + std::to_string(vids.size() + 1)));
        const Date base = fixtures::day("2017-05-01") + 30 * f;
        for (int k = 0; k < viewed; ++k)
            w.screen(0, vids[k], base + k, {static_cast<Idx>(f)});
        w.adopt(static_cast<Idx>(f), vids[0], base + 2);
    }
    return w.done();
}

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

CliResult run_cli(const std::string& args, const std::string& dir) {
    const std::string out_path = dir + "/stdout.txt";
    const std::string err_path = dir + "/stderr.txt";
    const std::string cmd = std::string(ADOPTKIT_CLI_PATH) + " " + args + " >\"" + out_path +
                            "\" 2>\"" + err_path + "\"";
    const int raw = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = read_file(out_path);
    r.err = read_file(err_path);
    return r;
}

std::string write_config(const RunConfig& cfg, const std::string& dir) {
    const std::string path = dir + "/config.json";
    write_file(path, cfg.to_json().dump(2) + "\n");
    return path;
}

} // namespace

TEST_CASE("run config round-trips and rejects bad documents") {
    const RunConfig cfg = tiny_config("somewhere/out", 9);
    const nlohmann::json j = cfg.to_json();
    const RunConfig back = RunConfig::from_json(j);
    CHECK(back.to_json() == j);

    auto rejects = [&](auto mutate) {
        nlohmann::json bad = j;
        mutate(bad);
        CHECK_THROWS_AS(RunConfig::from_json(bad), ValidationError);
    };
    rejects([](nlohmann::json& b) { b["typo_key"] = 1; });
    rejects([](nlohmann::json& b) { b["threads"] = "three"; });
    rejects([](nlohmann::json& b) { b["threads"] = -1; });
    rejects([](nlohmann::json& b) { b["out_dir"] = ""; });
    rejects([](nlohmann::json& b) { b["split_cutoff"] = 1.5; });
    rejects([](nlohmann::json& b) { b["split_cutoff"] = 0.0; });
    rejects([](nlohmann::json& b) { b["rf_trees"] = 0; });
    rejects([](nlohmann::json& b) { b["gbt_stages"] = 0; });
    rejects([](nlohmann::json& b) { b["gbt_learning_rate"] = 0.0; });
    rejects([](nlohmann::json& b) { b["gbt_depth"] = 0; });
    rejects([](nlohmann::json& b) { b["attendee_cap"] = 1; });
    rejects([](nlohmann::json& b) { b["shap_sample"] = 0; });
    rejects([](nlohmann::json& b) { b["shap_partition"] = "dev"; });
    rejects([](nlohmann::json& b) { b["stages"] = {"synth", "bogus"}; });
    rejects([](nlohmann::json& b) { b["synth"]["farmers"] = 0; });
    rejects([](nlohmann::json& b) { b["synth"]["no_such_knob"] = 1; });
}

TEST_CASE("the full pipeline runs in order and records provenance") {
    const std::string dir = scratch("flow");
    const RunConfig cfg = tiny_config(dir + "/out");
    CHECK(cmd_all(cfg) == 0);

    const char* expected[] = {
        "synth/latents.csv",
        "synth/data/geography.csv",
        "synth/data/mediators.csv",
        "synth/data/videos.csv",
        "synth/data/farmers.csv",
        "synth/data/screenings.csv",
        "synth/data/attendance.csv",
        "synth/data/adoptions.csv",
        "validate/report.json",
        "features/matrix.csv",
        "features/header.json",
        "diagnose/report.json",
        "diagnose/group_size_cdf.csv",
        "diagnose/ar_cdf.csv",
        "diagnose/village_overlap.csv",
        "diagnose/state_video_sets.csv",
        "diagnose/monthly_events.csv",
        "diagnose/video_scatter.csv",
        "train/logistic.json",
        "train/forest.json",
        "train/gbt.json",
        "train/eval.json",
        "explain/shap.json",
        "explain/summary_points.csv",
        "explain/dependency_points.csv",
    };
    for (const char* f : expected) {
        CAPTURE(f);
        CHECK(fs::exists(cfg.out_dir + "/" + f));
    }

    for (const char* stage : {"synth", "validate", "features", "diagnose", "train", "explain"}) {
        CAPTURE(stage);
        const std::string sdir = cfg.out_dir + "/" + stage;
        const Manifest m = read_stage_manifest(sdir, stage);
        CHECK(m.stage == stage);
        CHECK(m.version == 1);
        CHECK_NOTHROW(verify_stage_outputs(sdir, m));
        for (const auto& [path, hash] : m.outputs) {
            CAPTURE(path);
            CHECK(is_sha256_hex(hash));
        }
    }

    const nlohmann::json vreport =
        nlohmann::json::parse(read_file(cfg.out_dir + "/validate/report.json"));
    CHECK(vreport["status"] == "ok");
    CHECK(vreport["total_dropped"] == 0);

    const nlohmann::json eval = nlohmann::json::parse(read_file(cfg.out_dir + "/train/eval.json"));
    for (const char* model : {"logistic", "random_forest", "gbt"}) {
        CAPTURE(model);
        const double f1 = eval["models"][model]["eval"]["macro_f1"].get<double>();
        CHECK(f1 >= 0.0);
        CHECK(f1 <= 1.0);
    }
    // Prior plus one entry per boosting stage.
    CHECK(eval["models"]["gbt"]["stagewise_train_loss"].size() ==
          static_cast<std::size_t>(cfg.gbt_stages) + 1);
    CHECK(eval["split"]["train_rows"].get<std::size_t>() > 0);
    CHECK(eval["split"]["test_rows"].get<std::size_t>() > 0);

    const nlohmann::json shap = nlohmann::json::parse(read_file(cfg.out_dir + "/explain/shap.json"));
    CHECK(shap.contains("base_value"));
    CHECK(shap["partition"] == "test");
    CHECK(shap["ranking"].size() > 0);

    const nlohmann::json dreport =
        nlohmann::json::parse(read_file(cfg.out_dir + "/diagnose/report.json"));
    CHECK(dreport["any_degenerate"].is_boolean());
    CHECK(dreport["differential"]["states"].size() == 2);
}

TEST_CASE("stages refuse to run ahead of their dependencies") {
    const std::string dir = scratch("deps");
    const RunConfig cfg = tiny_config(dir + "/out");
    std::string err;

    CHECK(run_stage_catching(cfg, "features", err) == 3);
    CHECK(contains(err, "validate"));
    CHECK(run_stage_catching(cfg, "diagnose", err) == 3);
    CHECK(run_stage_catching(cfg, "train", err) == 3);
    CHECK(contains(err, "features"));
    CHECK(run_stage_catching(cfg, "explain", err) == 3);

    CHECK(cmd_synth(cfg) == 0);
    CHECK(run_stage_catching(cfg, "features", err) == 3); // validate still missing
    CHECK(cmd_validate(cfg) == 0);
    CHECK(run_stage_catching(cfg, "features", err) == 0);
    CHECK(run_stage_catching(cfg, "explain", err) == 3); // train still missing
    CHECK(contains(err, "train"));

    err.clear();
    CHECK(run_stage_catching(cfg, "bogus", err) == 2);
    CHECK(contains(err, "unknown stage"));

    RunConfig bad = cfg;
    bad.attendee_cap = 1; // invalid settings are caught before any stage runs
    err.clear();
    CHECK(run_stage_catching(bad, "synth", err) == 2);
    CHECK(contains(err, "attendee_cap"));
}

TEST_CASE("tampered upstream artifacts are detected") {
    const std::string dir = scratch("stale");
    const RunConfig cfg = tiny_config(dir + "/out");
    REQUIRE(cmd_all(cfg) == 0);
    std::string err;

    const std::string farmers = cfg.out_dir + "/synth/data/farmers.csv";
    const std::string orig = read_file(farmers);
    write_file(farmers, orig + "x");
    CHECK(run_stage_catching(cfg, "features", err) == 3);
    CHECK(contains(err, "changed since the validate stage"));
    write_file(farmers, orig);
    CHECK(run_stage_catching(cfg, "features", err) == 0);

    const std::string matrix = cfg.out_dir + "/features/matrix.csv";
    const std::string morig = read_file(matrix);
    write_file(matrix, morig + "x");
    CHECK(run_stage_catching(cfg, "train", err) == 3);
    CHECK(contains(err, "stale input"));
    write_file(matrix, morig);

    fs::remove(cfg.out_dir + "/train/manifest.json");
    CHECK(run_stage_catching(cfg, "explain", err) == 3);
    CHECK(contains(err, "missing manifest"));
}

TEST_CASE("external input directories skip the synth stage") {
    const std::string dir = scratch("extinput");
    fixtures::World w = fixtures::make_world(1, 1, 1, 4);
    const Idx va = w.add_video("Paddy weeding");
    const Idx vb = w.add_video("Drip irrigation");
    w.screen(0, va, "2017-02-01", {0, 1, 2});
    w.screen(0, vb, "2017-02-10", {0, 3});
    w.adopt(0, va, "2017-02-05");
    Dataset& ds = w.done();
    const std::string input = dir + "/input";
    fs::create_directories(input);
    save_dataset(ds, input);

    RunConfig cfg = tiny_config(dir + "/out");
    cfg.input_dir = input;
    CHECK(cmd_validate(cfg) == 0);
    CHECK(cmd_features(cfg) == 0);
    CHECK_FALSE(fs::exists(cfg.out_dir + "/synth"));

    // One matrix row per attendance event: 3 + 2.
    const std::string matrix = read_file(cfg.out_dir + "/features/matrix.csv");
    std::size_t lines = 0;
    for (char c : matrix)
        if (c == '\n') ++lines;
    CHECK(lines == 6); // header plus five events

    const Manifest fman = read_stage_manifest(cfg.out_dir + "/features", "features");
    CHECK(fman.inputs.count("farmers.csv") == 1);
    CHECK(fman.inputs.count("validate/manifest.json") == 1);
}

TEST_CASE("subset stage lists run in canonical order") {
    const std::string dir = scratch("subset");
    RunConfig cfg = tiny_config(dir + "/out");
    cfg.stages = {"validate", "synth"}; // listed backwards on purpose
    CHECK(cmd_all(cfg) == 0);
    CHECK(fs::exists(cfg.out_dir + "/synth/manifest.json"));
    CHECK(fs::exists(cfg.out_dir + "/validate/manifest.json"));
    CHECK_FALSE(fs::exists(cfg.out_dir + "/features"));
    // validate consumed the synth tables, so it must have run second.
    const Manifest vman = read_stage_manifest(cfg.out_dir + "/validate", "validate");
    CHECK(vman.inputs.size() == 7);
}

TEST_CASE("reruns are byte-identical across thread counts") {
    const std::string dir = scratch("determinism");
    RunConfig cfg = tiny_config(dir + "/out");
    REQUIRE(cmd_all(cfg) == 0);
    const auto first = snapshot(cfg.out_dir);
    REQUIRE_FALSE(first.empty());

    cfg.threads = 3;
    REQUIRE(cmd_all(cfg) == 0);
    const auto second = snapshot(cfg.out_dir);

    REQUIRE(first.size() == second.size());
    for (const auto& [rel, hash] : first) {
        CAPTURE(rel);
        REQUIRE(second.count(rel) == 1);
        CHECK(second.at(rel) == hash);
    }
}

TEST_CASE("strict mode escalates degenerate statistics to exit 4") {
    const std::string dir = scratch("strict");
    fixtures::World w = fixtures::make_world(1, 1, 1, 8);
    Dataset& ds = degenerate_world(w);
    const std::string input = dir + "/input";
    fs::create_directories(input);
    save_dataset(ds, input);

    RunConfig cfg = tiny_config(dir + "/out");
    cfg.input_dir = input;
    CHECK(cmd_validate(cfg) == 0);
    CHECK(cmd_diagnose(cfg) == 0); // lenient: reported, not escalated

    cfg.strict = true;
    CHECK(cmd_validate(cfg) == 0);
    CHECK(cmd_diagnose(cfg) == 4);
    // The report and manifest are still written for inspection.
    const nlohmann::json report =
        nlohmann::json::parse(read_file(cfg.out_dir + "/diagnose/report.json"));
    CHECK(report["any_degenerate"] == true);
    CHECK_NOTHROW(read_stage_manifest(cfg.out_dir + "/diagnose", "diagnose"));
}

TEST_CASE("cli: stage subcommands succeed and print ok lines") {
    const std::string dir = scratch("cli_ok");
    const RunConfig cfg = tiny_config(dir + "/out");
    const std::string cfgpath = write_config(cfg, dir);

    const CliResult synth = run_cli("synth --config " + cfgpath, dir);
    CHECK(synth.code == 0);
    CHECK(synth.out == "ok: synth -> " + cfg.out_dir + "/\n");
    CHECK(synth.err.empty());

    CHECK(run_cli("validate --config " + cfgpath, dir).code == 0);

    const CliResult features = run_cli("run --stage features --config " + cfgpath, dir);
    CHECK(features.code == 0);
    CHECK(features.out == "ok: features -> " + cfg.out_dir + "/\n");

    for (const char* stage : {"diagnose", "train", "explain"}) {
        CAPTURE(stage);
        const CliResult r = run_cli(std::string(stage) + " --config " + cfgpath, dir);
        CHECK(r.code == 0);
        CHECK(contains(r.out, std::string("ok: ") + stage));
    }

    const CliResult all = run_cli("all --config " + cfgpath, dir);
    CHECK(all.code == 0);
    CHECK(all.out == "ok: all -> " + cfg.out_dir + "/\n");

    const CliResult help = run_cli("--help", dir);
    CHECK(help.code == 0);
    CHECK(contains(help.out, "adoptkit"));
}

TEST_CASE("cli: failures map to the documented exit codes") {
    const std::string dir = scratch("cli_fail");
    const RunConfig cfg = tiny_config(dir + "/out");
    const std::string cfgpath = write_config(cfg, dir);

    // Unparseable and invalid configs: exit 2 before any stage runs.
    const std::string broken = dir + "/broken.json";
    write_file(broken, "{ not json\n");
    CliResult r = run_cli("synth --config " + broken, dir);
    CHECK(r.code == 2);
    CHECK(contains(r.err, "error: config"));

    const std::string unknown = dir + "/unknown.json";
    write_file(unknown, "{\"bogus\": 1}\n");
    r = run_cli("synth --config " + unknown, dir);
    CHECK(r.code == 2);
    CHECK(contains(r.err, "unknown config key"));

    // Missing upstream artifacts: exit 3 with the manifest named.
    r = run_cli("train --config " + cfgpath, dir);
    CHECK(r.code == 3);
    CHECK(contains(r.err, "manifest"));

    r = run_cli("run --stage bogus --config " + cfgpath, dir);
    CHECK(r.code == 2);
    CHECK(contains(r.err, "unknown stage"));

    // A corrupt input table fails validation: exit 2 plus a report.
    fixtures::World w = fixtures::make_world(1, 1, 1, 3);
    const Idx va = w.add_video("Seed treatment");
    w.screen(0, va, "2017-02-01", {0, 1});
    w.adopt(0, va, "2017-02-03");
    const std::string input = dir + "/input";
    fs::create_directories(input);
    save_dataset(w.done(), input);
    write_file(input + "/attendance.csv", read_file(input + "/attendance.csv") + "justonefield\n");

    RunConfig bad = tiny_config(dir + "/out2");
    bad.input_dir = input;
    const std::string badpath = dir + "/bad.json";
    write_file(badpath, bad.to_json().dump(2) + "\n");
    r = run_cli("validate --config " + badpath, dir);
    CHECK(r.code == 2);
    CHECK(contains(r.err, "validation failed"));
    const nlohmann::json report =
        nlohmann::json::parse(read_file(bad.out_dir + "/validate/report.json"));
    CHECK(report["status"] == "rows_dropped");
    CHECK(report["total_dropped"].get<int>() >= 1);

    // No subcommand at all is a usage error.
    CHECK(run_cli("", dir).code != 0);
}

TEST_CASE("cli: seed and strict flags reach the pipeline") {
    const std::string dir = scratch("cli_flags");

    std::string paths[3];
    for (int i = 0; i < 3; ++i) {
        RunConfig cfg = tiny_config(dir + "/out" + std::to_string(i));
        const std::string p = dir + "/cfg" + std::to_string(i) + ".json";
        write_file(p, cfg.to_json().dump(2) + "\n");
        paths[i] = p;
    }
    CHECK(run_cli("synth --config " + paths[0] + " --seed 1", dir).code == 0);
    CHECK(run_cli("synth --config " + paths[1] + " --seed 2", dir).code == 0);
    CHECK(run_cli("synth --config " + paths[2] + " --seed 1", dir).code == 0);
    const std::string a = read_file(dir + "/out0/synth/data/farmers.csv");
    const std::string b = read_file(dir + "/out1/synth/data/farmers.csv");
    const std::string c = read_file(dir + "/out2/synth/data/farmers.csv");
    CHECK(a != b);
    CHECK(a == c);

    // --strict escalates a degenerate diagnose run to exit 4.
    fixtures::World w = fixtures::make_world(1, 1, 1, 8);
    Dataset& ds = degenerate_world(w);
    const std::string input = dir + "/input";
    fs::create_directories(input);
    save_dataset(ds, input);
    RunConfig cfg = tiny_config(dir + "/out_strict");
    cfg.input_dir = input;
    const std::string cfgpath = dir + "/strict.json";
    write_file(cfgpath, cfg.to_json().dump(2) + "\n");

    CHECK(run_cli("validate --config " + cfgpath, dir).code == 0);
    CHECK(run_cli("diagnose --config " + cfgpath, dir).code == 0);
    const CliResult strict = run_cli("diagnose --config " + cfgpath + " --strict", dir);
    CHECK(strict.code == 4);
    CHECK(contains(strict.err, "degenerate statistics escalated"));
}
