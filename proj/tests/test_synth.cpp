#include "adoptkit/csv.hpp"
#include "adoptkit/features.hpp"
#include "adoptkit/stats.hpp"
#include "adoptkit/synthgen.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>
#include <string>
#include <vector>

using namespace adoptkit;
namespace fs = std::filesystem;

namespace {

SynthConfig small_config() {
    SynthConfig c;
    c.seed = 7;
    c.states = 2;
    c.districts = 4;
    c.blocks = 6;
    c.villages = 8;
    c.groups = 30;
    c.farmers = 300;
    c.mediators = 6;
    c.videos = 15;
    c.screenings = 150;
    c.languages = 3;
    c.date_start = fixtures::day("2017-01-01");
    c.date_end = fixtures::day("2018-12-31");
    return c;
}

std::string scratch(const std::string& name) {
    const std::string dir = std::string(fs::temp_directory_path()) + "/adoptkit_synth_" + name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("entity counts are exact and the output reloads strictly") {
    const SynthConfig cfg = small_config();
    const SynthResult r = generate_synthetic(cfg);
    const Dataset& ds = r.dataset;

    CHECK(ds.states.size() == std::size_t(cfg.states));
    CHECK(ds.districts.size() == std::size_t(cfg.districts));
    CHECK(ds.blocks.size() == std::size_t(cfg.blocks));
    CHECK(ds.villages.size() == std::size_t(cfg.villages));
    CHECK(ds.groups.size() == std::size_t(cfg.groups));
    CHECK(ds.farmers.size() == std::size_t(cfg.farmers));
    CHECK(ds.mediators.size() == std::size_t(cfg.mediators));
    CHECK(ds.videos.size() == std::size_t(cfg.videos));
    CHECK(ds.screenings.size() == std::size_t(cfg.screenings));
    CHECK(ds.languages.size() <= std::size_t(cfg.languages));
    CHECK(!ds.languages.empty());

    std::size_t farmers_in_groups = 0;
    for (const auto& g : ds.groups) {
        CHECK(g.farmers.size() >= std::size_t(cfg.group_size_min));
        farmers_in_groups += g.farmers.size();
    }
    CHECK(farmers_in_groups == std::size_t(cfg.farmers));

    std::size_t events = 0;
    for (const auto& s : ds.screenings) {
        CHECK(!s.attendees.empty());
        CHECK(s.date >= cfg.date_start);
        CHECK(s.date <= cfg.date_end);
        events += s.attendees.size();
    }
    CHECK(r.latents.size() == events);

    // a strict reload accepts every generated row
    const std::string dir = scratch("reload");
    save_dataset(ds, dir);
    const LoadResult lr = load_dataset(dir, Strictness::Strict);
    CHECK(lr.report.total_dropped() == 0);
    CHECK(lr.dataset.adoptions.size() == ds.adoptions.size());
}

TEST_CASE("one seed, one byte stream; new seed, new data") {
    const SynthConfig cfg = small_config();
    const SynthResult a = generate_synthetic(cfg);
    const SynthResult b = generate_synthetic(cfg);
    CHECK(latents_to_csv(a.dataset, a.latents) == latents_to_csv(b.dataset, b.latents));

    const std::string da = scratch("det_a");
    const std::string db = scratch("det_b");
    save_dataset(a.dataset, da);
    save_dataset(b.dataset, db);
    for (const char* t : {"geography", "mediators", "videos", "farmers", "screenings",
                          "attendance", "adoptions"}) {
        CAPTURE(t);
        CHECK(read_file(da + "/" + t + ".csv") == read_file(db + "/" + t + ".csv"));
    }

    SynthConfig other = cfg;
    other.seed = cfg.seed + 1;
    const SynthResult c = generate_synthetic(other);
    CHECK(latents_to_csv(a.dataset, a.latents) != latents_to_csv(c.dataset, c.latents));
}

TEST_CASE("zero-effect configuration adopts at one half") {
    SynthConfig cfg = small_config();
    cfg.seed = 99;
    cfg.farmers = 2000;
    cfg.groups = 160;
    cfg.villages = 20;
    cfg.blocks = 10;
    cfg.districts = 5;
    cfg.states = 3;
    cfg.videos = 50;
    cfg.screenings = 2500;
    cfg.mediators = 20;
    cfg.beta_pai_village = 0.0;
    cfg.beta_pai_group = 0.0;
    cfg.beta_ma = 0.0;
    cfg.beta_duration = 0.0;
    cfg.beta_cs = 0.0;
    cfg.beta_ta = 0.0;
    cfg.beta_gender_gap = 0.0;
    cfg.beta_village_size = 0.0;
    cfg.beta_group_size = 0.0;
    cfg.intercept = 0.0;
    cfg.noise_scale = 0.5;

    const SynthResult r = generate_synthetic(cfg);
    REQUIRE(r.latents.size() > 10000);
    double rate = 0.0;
    for (const auto& l : r.latents) {
        rate += l.adopted;
        CHECK(l.logit == l.noise);
    }
    rate /= double(r.latents.size());
    CHECK(rate > 0.47);
    CHECK(rate < 0.53);
}

TEST_CASE("predicted probabilities calibrate against realized outcomes") {
    SynthConfig cfg = small_config();
    cfg.seed = 3;
    cfg.farmers = 1500;
    cfg.groups = 120;
    cfg.villages = 15;
    cfg.screenings = 2000;
    cfg.videos = 40;

    const SynthResult r = generate_synthetic(cfg);
    std::vector<std::size_t> order(r.latents.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return r.latents[i].prob < r.latents[j].prob;
    });
    const std::size_t bins = 10;
    for (std::size_t b = 0; b < bins; ++b) {
        const std::size_t lo = b * order.size() / bins;
        const std::size_t hi = (b + 1) * order.size() / bins;
        double p = 0.0, y = 0.0;
        for (std::size_t k = lo; k < hi; ++k) {
            p += r.latents[order[k]].prob;
            y += r.latents[order[k]].adopted;
        }
        p /= double(hi - lo);
        y /= double(hi - lo);
        CAPTURE(b);
        CHECK(std::abs(p - y) < 0.06);
    }
    for (const auto& l : r.latents) {
        CHECK(l.prob > 0.0);
        CHECK(l.prob < 1.0);
    }
}

TEST_CASE("latent quantities re-derive from the emitted event log") {
    SynthConfig cfg = small_config();
    cfg.seed = 11;
    cfg.farmers = 800;
    cfg.groups = 60;
    cfg.villages = 10;
    cfg.screenings = 800;
    cfg.videos = 30;
    cfg.mediators = 10;

    const SynthResult r = generate_synthetic(cfg);
    const Dataset& ds = r.dataset;
    const FeatureMatrix m = build_matrix(ds, 2);
    REQUIRE(m.rows == r.latents.size());

    const std::size_t c_ma = m.col("ma");
    const std::size_t c_pg = m.col("pai_group");
    const std::size_t c_pv = m.col("pai_village");
    const std::size_t c_cs = m.col("cs_village");
    const std::size_t c_ta = m.col("ta");
    const std::size_t c_dur = m.col("duration_minutes");
    const std::size_t c_gs = m.col("group_size");
    const std::size_t c_vs = m.col("village_size");

    for (std::size_t i = 0; i < m.rows; ++i) {
        CAPTURE(i);
        const LatentRow& l = r.latents[i];
        REQUIRE(m.screening[i] == l.screening);
        REQUIRE(m.farmer[i] == l.farmer);
        CHECK(m.video[i] == l.video);
        CHECK(m.date[i] == l.date);

        CHECK(m.at(i, c_pg) == double(l.pai_group));
        CHECK(m.at(i, c_pv) == double(l.pai_village));
        CHECK(m.at(i, c_ma) == doctest::Approx(l.ma).epsilon(1e-12));
        CHECK(m.at(i, c_cs) == doctest::Approx(l.cs_village).epsilon(1e-12));
        CHECK(m.at(i, c_ta) == doctest::Approx(l.ta).epsilon(1e-12));
        CHECK(m.at(i, c_dur) == l.duration);
        CHECK(m.at(i, c_gs) == l.group_size);
        CHECK(m.at(i, c_vs) == l.village_size);
        CHECK((ds.farmers[l.farmer].gender == Gender::Woman ? 1 : 0) == l.woman);

        // the logged logit is exactly the configured linear form
        const double z = cfg.intercept + cfg.beta_pai_village * std::sqrt(double(l.pai_village)) +
                         cfg.beta_pai_group * std::sqrt(double(l.pai_group)) + cfg.beta_ma * l.ma +
                         cfg.beta_duration * l.duration + cfg.beta_cs * l.cs_village +
                         cfg.beta_ta * std::log1p(l.ta) + cfg.beta_gender_gap * l.woman +
                         cfg.beta_village_size * l.village_size +
                         cfg.beta_group_size * l.group_size + l.noise;
        CHECK(l.logit == doctest::Approx(z).epsilon(1e-12));
        CHECK(l.prob == doctest::Approx(logistic(l.logit)).epsilon(1e-12));
    }
}

TEST_CASE("adoptions are first successes verified 10 to 20 days later") {
    const SynthConfig cfg = small_config();
    const SynthResult r = generate_synthetic(cfg);
    const Dataset& ds = r.dataset;

    std::map<std::pair<Idx, Idx>, Date> first_success;
    for (const auto& l : r.latents)
        if (l.adopted) first_success.try_emplace({l.farmer, l.video}, l.date);

    CHECK(ds.adoptions.size() == first_success.size());
    for (const auto& a : ds.adoptions) {
        const auto it = first_success.find({a.farmer, a.video});
        REQUIRE(it != first_success.end());
        CHECK(a.verified >= it->second + 10);
        CHECK(a.verified <= it->second + 20);
    }
}

TEST_CASE("config json round-trips and rejects nonsense") {
    const SynthConfig cfg = small_config();
    const SynthConfig back = SynthConfig::from_json(cfg.to_json());
    CHECK(back.to_json() == cfg.to_json());

    nlohmann::json j = cfg.to_json();
    j["banana"] = 1;
    CHECK_THROWS_AS(SynthConfig::from_json(j), std::invalid_argument);

    SynthConfig bad = cfg;
    bad.farmers = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.date_end = bad.date_start - 1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.groups = bad.farmers; // cannot give every group two members
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
