#include "adoptkit/pipeline.hpp"

#include "adoptkit/csv.hpp"
#include "adoptkit/diagnostics.hpp"
#include "adoptkit/explain.hpp"
#include "adoptkit/features.hpp"
#include "adoptkit/learner.hpp"
#include "adoptkit/manifest.hpp"
#include "adoptkit/rng.hpp"

#include <algorithm>
#include <filesystem>
#include <set>
#include <thread>

namespace adoptkit {

namespace {

namespace fs = std::filesystem;

const std::vector<std::string> kStageOrder = {"synth",    "validate", "features",
                                              "diagnose", "train",    "explain"};

const std::vector<std::string> kTables = {"geography.csv",  "mediators.csv", "videos.csv",
                                          "farmers.csv",    "screenings.csv", "attendance.csv",
                                          "adoptions.csv"};

std::string stage_dir(const RunConfig& cfg, const std::string& stage) {
    return cfg.out_dir + "/" + stage;
}

void reset_dir(const std::string& dir) {
    fs::remove_all(dir);
    fs::create_directories(dir);
}

std::string effective_input(const RunConfig& cfg) {
    return cfg.input_dir.empty() ? stage_dir(cfg, "synth") + "/data" : cfg.input_dir;
}

int resolve_threads(int threads) {
    if (threads > 0) return threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

void write_json(const std::string& path, const nlohmann::json& j) {
    write_file(path, j.dump(2) + "\n");
}

// When the pipeline consumes its own synthetic data, the synth stage must
// exist and be intact; an external input directory is taken as-is.
void require_synth_if_internal(const RunConfig& cfg) {
    if (!cfg.input_dir.empty()) return;
    const std::string dir = stage_dir(cfg, "synth");
    verify_stage_outputs(dir, read_stage_manifest(dir, "synth"));
}

// Stages downstream of validate re-check that the data files still carry
// the hashes the validate stage approved.
Manifest require_validated_input(const RunConfig& cfg) {
    const std::string vdir = stage_dir(cfg, "validate");
    Manifest vman = read_stage_manifest(vdir, "validate");
    verify_stage_outputs(vdir, vman);
    const std::string input = effective_input(cfg);
    for (const auto& [table, recorded] : vman.inputs) {
        const std::string path = input + "/" + table;
        if (!fs::exists(path)) throw StaleInput("validated input table missing: " + path);
        const std::string actual = sha256_file(path);
        if (actual != recorded)
            throw StaleInput("stale input: " + path + " changed since the validate stage");
    }
    return vman;
}

Dataset load_validated(const RunConfig& cfg) {
    LoadResult lr =
        load_dataset(effective_input(cfg), cfg.strict ? Strictness::Strict : Strictness::Lenient);
    if (lr.report.total_dropped() > 0)
        throw ValidationError("input no longer loads cleanly: " +
                              std::to_string(lr.report.total_dropped()) + " rows dropped");
    return std::move(lr.dataset);
}

nlohmann::json drop_counts_json(const DropCounts& d) {
    nlohmann::json j;
    j["malformed"] = d.malformed;
    j["duplicate_key"] = d.duplicate_key;
    j["dangling_reference"] = d.dangling_reference;
    j["bad_value"] = d.bad_value;
    j["village_mismatch"] = d.village_mismatch;
    j["empty_screening"] = d.empty_screening;
    j["adoption_without_attendance"] = d.adoption_without_attendance;
    j["total"] = d.total();
    return j;
}

// Shared by train and explain: the matrix as the features stage wrote it.
FeatureMatrix read_features_matrix(const RunConfig& cfg) {
    const std::string fdir = stage_dir(cfg, "features");
    Manifest fman = read_stage_manifest(fdir, "features");
    verify_stage_outputs(fdir, fman);
    return read_matrix_csv(read_file(fdir + "/matrix.csv"),
                           nlohmann::json::parse(read_file(fdir + "/header.json")));
}

std::map<std::string, std::string> upstream_inputs(const RunConfig& cfg, const std::string& stage,
                                                   const std::vector<std::string>& files) {
    std::map<std::string, std::string> inputs;
    const std::string dir = stage_dir(cfg, stage);
    for (const auto& f : files) inputs[stage + "/" + f] = sha256_file(dir + "/" + f);
    return inputs;
}

} // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    static const std::set<std::string> known = {
        "input_dir", "out_dir",    "seed",        "strict",
        "threads",   "stages",     "synth",       "split_cutoff",
        "rf_trees",  "gbt_stages", "gbt_learning_rate", "gbt_depth",
        "attendee_cap", "shap_sample", "shap_partition"};
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw ValidationError("unknown config key: " + key);
    RunConfig cfg;
    try {
        if (j.contains("input_dir")) cfg.input_dir = j.at("input_dir").get<std::string>();
        if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("strict")) cfg.strict = j.at("strict").get<bool>();
        if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
        if (j.contains("stages")) cfg.stages = j.at("stages").get<std::vector<std::string>>();
        if (j.contains("synth")) cfg.synth = SynthConfig::from_json(j.at("synth"));
        if (j.contains("split_cutoff")) cfg.split_cutoff = j.at("split_cutoff").get<double>();
        if (j.contains("rf_trees")) cfg.rf_trees = j.at("rf_trees").get<std::int32_t>();
        if (j.contains("gbt_stages")) cfg.gbt_stages = j.at("gbt_stages").get<std::int32_t>();
        if (j.contains("gbt_learning_rate"))
            cfg.gbt_learning_rate = j.at("gbt_learning_rate").get<double>();
        if (j.contains("gbt_depth")) cfg.gbt_depth = j.at("gbt_depth").get<std::int32_t>();
        if (j.contains("attendee_cap")) cfg.attendee_cap = j.at("attendee_cap").get<std::size_t>();
        if (j.contains("shap_sample")) cfg.shap_sample = j.at("shap_sample").get<std::size_t>();
        if (j.contains("shap_partition"))
            cfg.shap_partition = j.at("shap_partition").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ValidationError(std::string("malformed config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j;
    j["input_dir"] = input_dir;
    j["out_dir"] = out_dir;
    j["seed"] = seed;
    j["strict"] = strict;
    j["threads"] = threads;
    j["stages"] = stages;
    j["synth"] = synth.to_json();
    j["split_cutoff"] = split_cutoff;
    j["rf_trees"] = rf_trees;
    j["gbt_stages"] = gbt_stages;
    j["gbt_learning_rate"] = gbt_learning_rate;
    j["gbt_depth"] = gbt_depth;
    j["attendee_cap"] = attendee_cap;
    j["shap_sample"] = shap_sample;
    j["shap_partition"] = shap_partition;
    return j;
}

void RunConfig::validate() const {
    if (out_dir.empty()) throw ValidationError("out_dir must not be empty");
    if (!(split_cutoff > 0.0 && split_cutoff < 1.0))
        throw ValidationError("split_cutoff must lie in (0, 1)");
    if (rf_trees < 1) throw ValidationError("rf_trees must be >= 1");
    if (gbt_stages < 1) throw ValidationError("gbt_stages must be >= 1");
    if (!(gbt_learning_rate > 0.0)) throw ValidationError("gbt_learning_rate must be > 0");
    if (gbt_depth < 1) throw ValidationError("gbt_depth must be >= 1");
    if (attendee_cap < 2) throw ValidationError("attendee_cap must be >= 2");
    if (shap_sample < 1) throw ValidationError("shap_sample must be >= 1");
    if (shap_partition != "test" && shap_partition != "train")
        throw ValidationError("shap_partition must be 'test' or 'train'");
    if (threads < 0) throw ValidationError("threads must be >= 0");
    for (const auto& s : stages)
        if (std::find(kStageOrder.begin(), kStageOrder.end(), s) == kStageOrder.end())
            throw ValidationError("unknown stage in config: " + s);
    try {
        SynthConfig sc = synth;
        sc.seed = seed;
        sc.validate();
    } catch (const std::invalid_argument& e) {
        throw ValidationError(std::string("synth config: ") + e.what());
    }
}

int cmd_synth(const RunConfig& cfg) {
    const std::string dir = stage_dir(cfg, "synth");
    reset_dir(dir);
    fs::create_directories(dir + "/data");

    SynthConfig sc = cfg.synth;
    sc.seed = cfg.seed;
    SynthResult result = generate_synthetic(sc);
    save_dataset(result.dataset, dir + "/data");
    write_file(dir + "/latents.csv", latents_to_csv(result.dataset, result.latents));

    std::vector<std::string> outputs = {"latents.csv"};
    for (const auto& t : kTables) outputs.push_back("data/" + t);
    write_stage_manifest(dir, "synth", sc.to_json(), {}, outputs);
    return 0;
}

int cmd_validate(const RunConfig& cfg) {
    const std::string dir = stage_dir(cfg, "validate");
    reset_dir(dir);
    require_synth_if_internal(cfg);
    const std::string input = effective_input(cfg);

    nlohmann::json report;
    report["input_dir"] = input;
    report["strictness"] = cfg.strict ? "strict" : "lenient";
    try {
        LoadResult lr =
            load_dataset(input, cfg.strict ? Strictness::Strict : Strictness::Lenient);
        report["status"] = lr.report.total_dropped() == 0 ? "ok" : "rows_dropped";
        report["kept"] = lr.report.kept;
        nlohmann::json dropped;
        for (const auto& [table, counts] : lr.report.dropped)
            dropped[table] = drop_counts_json(counts);
        report["dropped"] = std::move(dropped);
        report["messages"] = lr.report.messages;
        report["total_dropped"] = lr.report.total_dropped();
        write_json(dir + "/report.json", report);
        if (lr.report.total_dropped() > 0) return 2; // no manifest: not a usable input
    } catch (const ValidationError& e) {
        report["status"] = "failed";
        report["error"] = e.what();
        write_json(dir + "/report.json", report);
        return 2;
    } catch (const CsvError& e) { // missing or unreadable table
        report["status"] = "failed";
        report["error"] = e.what();
        write_json(dir + "/report.json", report);
        return 2;
    }

    std::map<std::string, std::string> inputs;
    for (const auto& t : kTables) inputs[t] = sha256_file(input + "/" + t);
    nlohmann::json params;
    params["input_dir"] = input;
    params["strictness"] = cfg.strict ? "strict" : "lenient";
    write_stage_manifest(dir, "validate", params, inputs, {"report.json"});
    return 0;
}

int cmd_features(const RunConfig& cfg) {
    const std::string dir = stage_dir(cfg, "features");
    reset_dir(dir);
    Manifest vman = require_validated_input(cfg);
    const Dataset ds = load_validated(cfg);

    const FeatureMatrix m = build_matrix(ds, resolve_threads(cfg.threads), cfg.attendee_cap);
    write_matrix_csv(dir + "/matrix.csv", ds, m);
    write_json(dir + "/header.json", matrix_header(ds, m));

    std::map<std::string, std::string> inputs = vman.inputs;
    auto vm = upstream_inputs(cfg, "validate", {"manifest.json"});
    inputs.insert(vm.begin(), vm.end());
    nlohmann::json params;
    params["input_dir"] = effective_input(cfg);
    params["attendee_cap"] = cfg.attendee_cap;
    write_stage_manifest(dir, "features", params, inputs, {"matrix.csv", "header.json"});
    return 0;
}

int cmd_diagnose(const RunConfig& cfg) {
    const std::string dir = stage_dir(cfg, "diagnose");
    reset_dir(dir);
    Manifest vman = require_validated_input(cfg);
    const Dataset ds = load_validated(cfg);
    const int threads = resolve_threads(cfg.threads);

    const DifferentialReport diff = differential_battery(ds, threads);
    const GenderReport gender = gender_battery(ds, threads);
    const DescriptiveSuite suite = descriptive_suite(ds);

    nlohmann::json report;
    report["differential"] = diff.to_json();
    report["gender"] = gender.to_json();
    report["descriptive"] = suite.to_json();
    const bool degenerate = diff.any_degenerate || gender.any_degenerate;
    report["any_degenerate"] = degenerate;
    write_json(dir + "/report.json", report);

    std::vector<std::string> outputs = {"report.json"};
    for (const auto& [name, body] : suite.files) {
        write_file(dir + "/" + name, body);
        outputs.push_back(name);
    }

    std::map<std::string, std::string> inputs = vman.inputs;
    auto vm = upstream_inputs(cfg, "validate", {"manifest.json"});
    inputs.insert(vm.begin(), vm.end());
    nlohmann::json params;
    params["input_dir"] = effective_input(cfg);
    params["alpha"] = diff.alpha;
    params["measures"] = diff.measures;
    write_stage_manifest(dir, "diagnose", params, inputs, outputs);

    return cfg.strict && degenerate ? 4 : 0;
}

int cmd_train(const RunConfig& cfg) {
    const std::string dir = stage_dir(cfg, "train");
    reset_dir(dir);
    const FeatureMatrix m = read_features_matrix(cfg);
    const int threads = resolve_threads(cfg.threads);

    const Split split = temporal_split(m, cfg.split_cutoff);
    const std::vector<std::size_t> balanced =
        downsample_majority(m, split.train, derive_seed(cfg.seed, 10));
    const LabeledData train = gather(m, balanced);
    const LabeledData test = gather(m, split.test);

    const LogisticModel logit = train_logistic(train, m.names);
    const ForestModel forest = train_random_forest(train, m.names, cfg.rf_trees,
                                                   derive_seed(cfg.seed, 11), threads);
    const GbtModel gbt =
        train_gbt(train, m.names, cfg.gbt_stages, cfg.gbt_learning_rate, cfg.gbt_depth);

    write_json(dir + "/logistic.json", model_to_json(logit));
    write_json(dir + "/forest.json", model_to_json(forest));
    write_json(dir + "/gbt.json", model_to_json(gbt));

    nlohmann::json eval;
    eval["split"] = {{"boundary_date", format_date(split.boundary)},
                     {"train_rows", split.train.size()},
                     {"train_rows_balanced", balanced.size()},
                     {"test_rows", split.test.size()}};
    nlohmann::json lj;
    lj["eval"] = evaluate(predict(logit, test, threads), test.y).to_json();
    lj["converged"] = logit.converged;
    lj["grad_norm"] = logit.grad_norm;
    lj["iterations"] = logit.iterations;
    eval["models"]["logistic"] = std::move(lj);
    eval["models"]["random_forest"]["eval"] =
        evaluate(predict(forest, test, threads), test.y).to_json();
    nlohmann::json gj;
    gj["eval"] = evaluate(predict(gbt, test, threads), test.y).to_json();
    gj["stagewise_train_loss"] = gbt_stagewise_loss(gbt, train);
    eval["models"]["gbt"] = std::move(gj);
    write_json(dir + "/eval.json", eval);

    nlohmann::json params;
    params["split_cutoff"] = cfg.split_cutoff;
    params["rf_trees"] = cfg.rf_trees;
    params["gbt_stages"] = cfg.gbt_stages;
    params["gbt_learning_rate"] = cfg.gbt_learning_rate;
    params["gbt_depth"] = cfg.gbt_depth;
    params["seed"] = cfg.seed;
    write_stage_manifest(dir, "train", params,
                         upstream_inputs(cfg, "features",
                                         {"matrix.csv", "header.json", "manifest.json"}),
                         {"logistic.json", "forest.json", "gbt.json", "eval.json"});
    return 0;
}

int cmd_explain(const RunConfig& cfg) {
    const std::string dir = stage_dir(cfg, "explain");
    reset_dir(dir);
    const FeatureMatrix m = read_features_matrix(cfg);
    const std::string tdir = stage_dir(cfg, "train");
    Manifest tman = read_stage_manifest(tdir, "train");
    verify_stage_outputs(tdir, tman);
    const int threads = resolve_threads(cfg.threads);

    const AnyModel any = model_from_json(nlohmann::json::parse(read_file(tdir + "/forest.json")));
    const auto* forest = std::get_if<ForestModel>(&any);
    if (!forest) throw ValidationError("train stage forest.json does not hold a random forest");
    check_features(any, m.names);

    const Split split = temporal_split(m, cfg.split_cutoff);
    const auto& candidates = cfg.shap_partition == "train" ? split.train : split.test;
    const ShapSample sample =
        explain_sample(*forest, m, candidates, cfg.shap_sample, derive_seed(cfg.seed, 12), threads);
    const SummaryRanking rank = shap_ranking(sample);

    std::vector<DependencySeries> deps;
    std::vector<std::string> constant;
    for (std::size_t c = 0; c < m.cols; ++c) {
        try {
            deps.push_back(dependency(sample, c, m.names));
        } catch (const std::invalid_argument&) {
            constant.push_back(m.names[c]);
        }
    }

    nlohmann::json report = shap_report_json(sample, rank, deps, m.names);
    report["partition"] = cfg.shap_partition;
    report["sample_cap"] = cfg.shap_sample;
    report["constant_features"] = constant;
    write_json(dir + "/shap.json", report);
    write_file(dir + "/summary_points.csv", summary_points_csv(sample, m.names));

    std::string depcsv;
    {
        CsvWriter w(depcsv);
        w.row({"feature", "value", "attribution"});
        for (const auto& d : deps)
            for (const auto& [x, y] : d.points)
                w.row({d.feature, format_double(x), format_double(y)});
    }
    write_file(dir + "/dependency_points.csv", depcsv);

    nlohmann::json params;
    params["split_cutoff"] = cfg.split_cutoff;
    params["shap_partition"] = cfg.shap_partition;
    params["shap_sample"] = cfg.shap_sample;
    params["seed"] = cfg.seed;
    write_stage_manifest(
        dir, "explain", params,
        [&] {
            auto in = upstream_inputs(cfg, "features", {"matrix.csv", "header.json"});
            auto tm = upstream_inputs(cfg, "train", {"forest.json", "manifest.json"});
            in.insert(tm.begin(), tm.end());
            return in;
        }(),
        {"shap.json", "summary_points.csv", "dependency_points.csv"});
    return 0;
}

int cmd_all(const RunConfig& cfg) {
    std::vector<std::string> stages = cfg.stages.empty() ? kStageOrder : cfg.stages;
    // Run in canonical order regardless of the config's listing order.
    std::vector<std::string> ordered;
    for (const auto& s : kStageOrder)
        if (std::find(stages.begin(), stages.end(), s) != stages.end()) ordered.push_back(s);
    for (const auto& s : ordered) {
        const int rc = run_stage(cfg, s);
        if (rc != 0) return rc;
    }
    return 0;
}

int run_stage(const RunConfig& cfg, const std::string& name) {
    if (name == "synth") return cmd_synth(cfg);
    if (name == "validate") return cmd_validate(cfg);
    if (name == "features") return cmd_features(cfg);
    if (name == "diagnose") return cmd_diagnose(cfg);
    if (name == "train") return cmd_train(cfg);
    if (name == "explain") return cmd_explain(cfg);
    if (name == "all") return cmd_all(cfg);
    throw ValidationError("unknown stage: " + name);
}

int run_stage_catching(const RunConfig& cfg, const std::string& name, std::string& error_out) {
    try {
        cfg.validate();
        return run_stage(cfg, name);
    } catch (const MissingDependency& e) {
        error_out = e.what();
        return 3;
    } catch (const StaleInput& e) {
        error_out = e.what();
        return 3;
    } catch (const ValidationError& e) {
        error_out = e.what();
        return 2;
    } catch (const CsvError& e) {
        error_out = e.what();
        return 2;
    } catch (const std::invalid_argument& e) {
        error_out = e.what();
        return 2;
    } catch (const std::exception& e) {
        error_out = e.what();
        return 1;
    }
}

} // namespace adoptkit
