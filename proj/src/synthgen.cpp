#include "adoptkit/synthgen.hpp"
#include "adoptkit/csv.hpp"
#include "adoptkit/rng.hpp"
#include "adoptkit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace adoptkit {

namespace {

constexpr const char* kWordPool[] = {
    "paddy", "wheat", "maize", "millet", "sorghum", "barley", "mustard", "groundnut", "soybean",
    "cotton", "sugarcane", "turmeric", "ginger", "chilli", "tomato", "brinjal", "okra", "onion",
    "potato", "cabbage", "cauliflower", "spinach", "banana", "mango", "guava", "papaya", "lentil",
    "chickpea", "pigeonpea", "sesame", "sunflower", "castor", "jute", "nursery", "seedling",
    "transplanting", "sowing", "weeding", "mulching", "composting", "vermicompost", "manure",
    "fertilizer", "urea", "biopesticide", "neem", "trap", "pheromone", "irrigation", "drip",
    "sprinkler", "bund", "trench", "drainage", "harvest", "threshing", "storage", "drying",
    "grading", "marketing", "intercropping", "rotation", "greengram", "blackgram", "fodder",
    "poultry", "goat", "dairy", "fishery", "azolla", "mushroom", "apiary", "silage", "spacing",
    "pruning", "grafting", "budding", "seed", "treatment", "germination", "spraying", "dosage",
    "pest", "blight", "wilt", "borer", "aphid", "weevil", "nutrient", "zinc", "boron",
};
constexpr std::size_t kWordPoolSize = sizeof(kWordPool) / sizeof(kWordPool[0]);

std::string make_id(const char* prefix, int width, std::int64_t n) {
    std::string num = std::to_string(n);
    std::string out(prefix);
    for (int i = static_cast<int>(num.size()); i < width; ++i) out.push_back('0');
    out += num;
    return out;
}

// Calibrated mixture: 14% small groups {2..9}, 4% large {30..45}, the rest
// 10 + floor(|N(0, 3.4)|) capped at 29. Mean 12.3, sd 6.1, about 82% of
// mass in [10, 30]; non-default (mean, sd) shift and rescale the base draw.
std::int32_t draw_group_size(Rng& rng, const SynthConfig& cfg) {
    double u = rng.uniform();
    double base;
    if (u < 0.14) {
        base = static_cast<double>(rng.uniform_int(2, 9));
    } else if (u >= 0.96) {
        base = static_cast<double>(rng.uniform_int(30, 45));
    } else {
        double h = std::floor(std::abs(rng.normal(0.0, 3.4)));
        base = std::min(10.0 + h, 29.0);
    }
    double scaled = (base - 12.24) * (cfg.group_size_sd / 6.05) + cfg.group_size_mean;
    auto v = static_cast<std::int32_t>(std::lround(scaled));
    return std::max(cfg.group_size_min, v);
}

struct PendingAdoption {
    Date verified;
    std::uint64_t seq;
    Idx farmer, video, village;
    bool operator>(const PendingAdoption& o) const {
        if (verified != o.verified) return verified > o.verified;
        return seq > o.seq;
    }
};

} // namespace

void SynthConfig::validate() const {
    auto need = [](bool ok, const char* msg) {
        if (!ok) throw std::invalid_argument(std::string("synth config: ") + msg);
    };
    need(states >= 1, "states must be >= 1");
    need(districts >= states, "districts must be >= states");
    need(blocks >= districts, "blocks must be >= districts");
    need(villages >= blocks, "villages must be >= blocks");
    need(groups >= villages, "groups must be >= villages");
    need(farmers >= groups * group_size_min, "farmers must cover groups * group_size_min");
    need(mediators >= 1, "mediators must be >= 1");
    need(videos >= states, "videos must be >= states");
    need(screenings >= 0, "screenings must be >= 0");
    need(languages >= 1, "languages must be >= 1");
    need(date_end > date_start, "date_end must be after date_start");
    need(group_size_min >= 1, "group_size_min must be >= 1");
    need(group_size_sd > 0.0, "group_size_sd must be positive");
    need(woman_fraction >= 0.0 && woman_fraction <= 1.0, "woman_fraction in [0,1]");
    need(mediator_woman_fraction >= 0.0 && mediator_woman_fraction <= 1.0,
         "mediator_woman_fraction in [0,1]");
    need(attendance_rate > 0.0 && attendance_rate <= 1.0, "attendance_rate in (0,1]");
    need(noise_scale >= 0.0, "noise_scale must be >= 0");
}

SynthConfig SynthConfig::from_json(const nlohmann::json& j) {
    static const std::unordered_set<std::string> known = {
        "seed", "states", "districts", "blocks", "villages", "groups", "farmers", "mediators",
        "videos", "screenings", "languages", "date_start", "date_end", "group_size_mean",
        "group_size_sd", "group_size_min", "woman_fraction", "mediator_woman_fraction",
        "attendance_rate", "beta_pai_village", "beta_pai_group", "beta_ma", "beta_duration",
        "beta_cs", "beta_ta", "beta_gender_gap", "beta_village_size", "beta_group_size",
        "intercept", "noise_scale"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            throw std::invalid_argument("synth config: unknown key \"" + it.key() + "\"");

    SynthConfig c;
    auto geti = [&](const char* k, std::int32_t cur) { return j.value(k, cur); };
    auto getd = [&](const char* k, double cur) { return j.value(k, cur); };
    c.seed = j.value("seed", c.seed);
    c.states = geti("states", c.states);
    c.districts = geti("districts", c.districts);
    c.blocks = geti("blocks", c.blocks);
    c.villages = geti("villages", c.villages);
    c.groups = geti("groups", c.groups);
    c.farmers = geti("farmers", c.farmers);
    c.mediators = geti("mediators", c.mediators);
    c.videos = geti("videos", c.videos);
    c.screenings = geti("screenings", c.screenings);
    c.languages = geti("languages", c.languages);
    if (j.contains("date_start")) {
        auto d = parse_date(j.at("date_start").get<std::string>());
        if (!d) throw std::invalid_argument("synth config: bad date_start");
        c.date_start = *d;
    }
    if (j.contains("date_end")) {
        auto d = parse_date(j.at("date_end").get<std::string>());
        if (!d) throw std::invalid_argument("synth config: bad date_end");
        c.date_end = *d;
    }
    c.group_size_mean = getd("group_size_mean", c.group_size_mean);
    c.group_size_sd = getd("group_size_sd", c.group_size_sd);
    c.group_size_min = geti("group_size_min", c.group_size_min);
    c.woman_fraction = getd("woman_fraction", c.woman_fraction);
    c.mediator_woman_fraction = getd("mediator_woman_fraction", c.mediator_woman_fraction);
    c.attendance_rate = getd("attendance_rate", c.attendance_rate);
    c.beta_pai_village = getd("beta_pai_village", c.beta_pai_village);
    c.beta_pai_group = getd("beta_pai_group", c.beta_pai_group);
    c.beta_ma = getd("beta_ma", c.beta_ma);
    c.beta_duration = getd("beta_duration", c.beta_duration);
    c.beta_cs = getd("beta_cs", c.beta_cs);
    c.beta_ta = getd("beta_ta", c.beta_ta);
    c.beta_gender_gap = getd("beta_gender_gap", c.beta_gender_gap);
    c.beta_village_size = getd("beta_village_size", c.beta_village_size);
    c.beta_group_size = getd("beta_group_size", c.beta_group_size);
    c.intercept = getd("intercept", c.intercept);
    c.noise_scale = getd("noise_scale", c.noise_scale);
    c.validate();
    return c;
}

nlohmann::json SynthConfig::to_json() const {
    nlohmann::json j;
    j["seed"] = seed;
    j["states"] = states;
    j["districts"] = districts;
    j["blocks"] = blocks;
    j["villages"] = villages;
    j["groups"] = groups;
    j["farmers"] = farmers;
    j["mediators"] = mediators;
    j["videos"] = videos;
    j["screenings"] = screenings;
    j["languages"] = languages;
    j["date_start"] = format_date(date_start);
    j["date_end"] = format_date(date_end);
    j["group_size_mean"] = group_size_mean;
    j["group_size_sd"] = group_size_sd;
    j["group_size_min"] = group_size_min;
    j["woman_fraction"] = woman_fraction;
    j["mediator_woman_fraction"] = mediator_woman_fraction;
    j["attendance_rate"] = attendance_rate;
    j["beta_pai_village"] = beta_pai_village;
    j["beta_pai_group"] = beta_pai_group;
    j["beta_ma"] = beta_ma;
    j["beta_duration"] = beta_duration;
    j["beta_cs"] = beta_cs;
    j["beta_ta"] = beta_ta;
    j["beta_gender_gap"] = beta_gender_gap;
    j["beta_village_size"] = beta_village_size;
    j["beta_group_size"] = beta_group_size;
    j["intercept"] = intercept;
    j["noise_scale"] = noise_scale;
    return j;
}

SynthResult generate_synthetic(const SynthConfig& cfg) {
    cfg.validate();
    SynthResult out;
    Dataset& ds = out.dataset;

    Rng structure(derive_seed(cfg.seed, 0));
    Rng video_rng(derive_seed(cfg.seed, 1));
    Rng schedule(derive_seed(cfg.seed, 2));
    Rng sim(derive_seed(cfg.seed, 3));

    // ---- geography ----
    for (std::int32_t i = 0; i < cfg.states; ++i)
        ds.states.push_back({make_id("ST", 2, i + 1), 0});
    for (std::int32_t i = 0; i < cfg.districts; ++i)
        ds.districts.push_back({make_id("DT", 3, i + 1),
                                static_cast<Idx>(static_cast<std::int64_t>(i) * cfg.states / cfg.districts), 0});
    for (std::int32_t i = 0; i < cfg.blocks; ++i)
        ds.blocks.push_back({make_id("BL", 4, i + 1),
                             static_cast<Idx>(static_cast<std::int64_t>(i) * cfg.districts / cfg.blocks), 0});
    for (std::int32_t i = 0; i < cfg.villages; ++i) {
        VillageRec v;
        v.id = make_id("VL", 5, i + 1);
        v.block = static_cast<Idx>(static_cast<std::int64_t>(i) * cfg.blocks / cfg.villages);
        v.district = ds.blocks[v.block].district;
        v.state = ds.districts[v.district].state;
        ds.villages.push_back(std::move(v));
    }

    // ---- groups and farmers ----
    // one group per village first, the rest land by sticky weights so village
    // sizes spread out
    std::vector<Idx> group_village(cfg.groups);
    {
        std::vector<double> wcum(cfg.villages);
        double acc = 0.0;
        for (std::int32_t v = 0; v < cfg.villages; ++v) {
            acc += 0.35 + structure.uniform();
            wcum[v] = acc;
        }
        for (std::int32_t g = 0; g < cfg.groups; ++g) {
            if (g < cfg.villages) {
                group_village[g] = g;
            } else {
                double u = structure.uniform() * acc;
                auto it = std::lower_bound(wcum.begin(), wcum.end(), u);
                group_village[g] = static_cast<Idx>(it - wcum.begin());
            }
        }
    }
    std::vector<std::int32_t> group_size(cfg.groups);
    std::int64_t total = 0;
    for (auto& s : group_size) {
        s = draw_group_size(structure, cfg);
        total += s;
    }
    while (total < cfg.farmers) {
        group_size[structure.uniform_u64(static_cast<std::uint64_t>(cfg.groups))] += 1;
        ++total;
    }
    while (total > cfg.farmers) {
        auto g = structure.uniform_u64(static_cast<std::uint64_t>(cfg.groups));
        if (group_size[g] > cfg.group_size_min) {
            group_size[g] -= 1;
            --total;
        }
    }
    for (std::int32_t g = 0; g < cfg.groups; ++g)
        ds.groups.push_back({make_id("GR", 6, g + 1), group_village[g], {}});

    std::int64_t next_farmer = 0;
    for (std::int32_t g = 0; g < cfg.groups; ++g) {
        for (std::int32_t k = 0; k < group_size[g]; ++k) {
            FarmerRec f;
            f.id = make_id("FA", 7, ++next_farmer);
            f.group = g;
            f.village = group_village[g];
            f.gender = structure.bernoulli(cfg.woman_fraction) ? Gender::Woman : Gender::Man;
            f.registered = cfg.date_start - 1 - static_cast<Date>(structure.uniform_int(0, 730));
            ds.farmers.push_back(std::move(f));
        }
    }

    // ---- mediators ----
    for (std::int32_t m = 0; m < cfg.mediators; ++m)
        ds.mediators.push_back({make_id("MD", 4, m + 1),
                                structure.bernoulli(cfg.mediator_woman_fraction) ? Gender::Woman
                                                                                 : Gender::Man});

    // ---- videos ----
    ZipfSampler word_zipf(kWordPoolSize, 1.05);
    ZipfSampler lang_zipf(static_cast<std::size_t>(cfg.languages), 0.8);
    std::vector<Idx> video_state(cfg.videos);
    for (std::int32_t i = 0; i < cfg.videos; ++i) {
        VideoRec v;
        v.id = make_id("VD", 5, i + 1);
        std::int64_t nwords = video_rng.uniform_int(2, 5);
        std::vector<std::size_t> chosen;
        while (static_cast<std::int64_t>(chosen.size()) < nwords) {
            std::size_t w = word_zipf.sample(video_rng);
            if (std::find(chosen.begin(), chosen.end(), w) == chosen.end()) chosen.push_back(w);
        }
        for (std::size_t k = 0; k < chosen.size(); ++k) {
            if (k) v.title.push_back(' ');
            v.title += kWordPool[chosen[k]];
        }
        double dur = std::exp(video_rng.normal(std::log(9.0), 0.45));
        dur = std::min(30.0, std::max(2.0, dur));
        v.duration_minutes = std::round(dur * 10.0) / 10.0;
        v.language = make_id("LG", 2, static_cast<std::int64_t>(lang_zipf.sample(video_rng)) + 1);
        v.title_words = tokenize_title(v.title);
        video_state[i] = static_cast<Idx>(static_cast<std::int64_t>(i) * cfg.states / cfg.videos);
        ds.videos.push_back(std::move(v));
    }

    // ---- per-village video pools (mostly home-state content) ----
    std::vector<std::vector<Idx>> state_videos(cfg.states);
    for (std::int32_t i = 0; i < cfg.videos; ++i) state_videos[video_state[i]].push_back(i);
    std::vector<std::vector<Idx>> village_pool(cfg.villages);
    for (std::int32_t v = 0; v < cfg.villages; ++v) {
        auto home = state_videos[ds.villages[v].state];
        schedule.shuffle(home);
        std::size_t take = std::min(home.size(),
                                    static_cast<std::size_t>(12 + schedule.uniform_int(0, 12)));
        village_pool[v].assign(home.begin(), home.begin() + static_cast<std::ptrdiff_t>(take));
        if (cfg.states > 1 && schedule.uniform() < 0.35) {
            // a little cross-state content so state video sets overlap
            Idx other = static_cast<Idx>(schedule.uniform_u64(static_cast<std::uint64_t>(cfg.states)));
            if (other == ds.villages[v].state) other = (other + 1) % cfg.states;
            const auto& ov = state_videos[other];
            if (!ov.empty())
                village_pool[v].push_back(ov[schedule.uniform_u64(ov.size())]);
        }
        std::sort(village_pool[v].begin(), village_pool[v].end());
        village_pool[v].erase(std::unique(village_pool[v].begin(), village_pool[v].end()),
                              village_pool[v].end());
    }

    // mediator pools per village
    std::vector<std::vector<Idx>> village_mediators(cfg.villages);
    for (std::int32_t m = 0; m < cfg.mediators; ++m)
        village_mediators[m % cfg.villages].push_back(m);
    for (std::int32_t v = 0; v < cfg.villages; ++v)
        if (village_mediators[v].empty())
            village_mediators[v].push_back(v % cfg.mediators);

    // ---- screening schedule: quotas by village size, a few per visit day ----
    std::vector<std::vector<Idx>> village_groups(cfg.villages);
    for (std::int32_t g = 0; g < cfg.groups; ++g) village_groups[group_village[g]].push_back(g);
    std::vector<std::int64_t> quota(cfg.villages, 0);
    {
        std::vector<std::pair<double, Idx>> rema(cfg.villages);
        std::int64_t assigned = 0;
        std::vector<std::int64_t> vsize(cfg.villages, 0);
        for (std::int32_t g = 0; g < cfg.groups; ++g) vsize[group_village[g]] += group_size[g];
        for (std::int32_t v = 0; v < cfg.villages; ++v) {
            double exact = static_cast<double>(cfg.screenings) * static_cast<double>(vsize[v]) /
                           static_cast<double>(cfg.farmers);
            quota[v] = static_cast<std::int64_t>(exact);
            assigned += quota[v];
            rema[v] = {exact - static_cast<double>(quota[v]), v};
        }
        std::sort(rema.begin(), rema.end(), [](auto& a, auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        for (std::int64_t i = 0; assigned < cfg.screenings; ++i, ++assigned)
            quota[rema[static_cast<std::size_t>(i) % rema.size()].second] += 1;
    }

    struct RawScreening {
        Date date;
        Idx village, group, video, mediator;
        MinuteOfDay start;
        std::int64_t seq;
    };
    std::vector<RawScreening> raw;
    raw.reserve(static_cast<std::size_t>(cfg.screenings));
    for (std::int32_t v = 0; v < cfg.villages; ++v) {
        std::int64_t left = quota[v];
        std::size_t rotor = 0;
        ZipfSampler pool_zipf(std::max<std::size_t>(village_pool[v].size(), 1), 0.9);
        std::int64_t seq = 0;
        while (left > 0) {
            Date day = cfg.date_start + static_cast<Date>(schedule.uniform_int(0, cfg.date_end - cfg.date_start));
            std::int64_t burst = std::min<std::int64_t>(left, 1 + schedule.uniform_int(0, 3));
            for (std::int64_t b = 0; b < burst; ++b) {
                RawScreening s;
                s.date = day;
                s.village = v;
                s.group = village_groups[v][rotor++ % village_groups[v].size()];
                s.video = village_pool[v].empty()
                              ? 0
                              : village_pool[v][pool_zipf.sample(schedule)];
                s.mediator = village_mediators[v][schedule.uniform_u64(village_mediators[v].size())];
                s.start = static_cast<MinuteOfDay>(schedule.uniform_int(0, 1439));
                s.seq = seq++;
                raw.push_back(s);
            }
            left -= burst;
        }
    }
    std::sort(raw.begin(), raw.end(), [](const RawScreening& a, const RawScreening& b) {
        if (a.date != b.date) return a.date < b.date;
        if (a.village != b.village) return a.village < b.village;
        return a.seq < b.seq;
    });

    // farmer idx ranges per group are contiguous by construction
    std::vector<Idx> group_first(cfg.groups + 1, 0);
    for (std::int32_t g = 0; g < cfg.groups; ++g)
        group_first[g + 1] = group_first[g] + group_size[g];

    std::int64_t next_screening = 0;
    for (auto& s : raw) {
        ScreeningRec rec;
        rec.id = make_id("SC", 7, ++next_screening);
        rec.video = s.video;
        rec.mediator = s.mediator;
        rec.village = s.village;
        rec.date = s.date;
        rec.start = s.start;
        for (Idx f = group_first[s.group]; f < group_first[s.group + 1]; ++f)
            if (schedule.bernoulli(cfg.attendance_rate)) rec.attendees.push_back(f);
        if (rec.attendees.empty()) {
            Idx f = group_first[s.group] +
                    static_cast<Idx>(schedule.uniform_u64(static_cast<std::uint64_t>(
                        group_first[s.group + 1] - group_first[s.group])));
            rec.attendees.push_back(f);
        }
        ds.screenings.push_back(std::move(rec));
    }

    // ---- simulate adoption in event-date order ----
    // visibility ledgers hold only events dated strictly before the date
    // group being processed
    std::vector<std::vector<Idx>> farmer_adopted(ds.farmers.size());
    std::vector<std::unordered_set<Idx>> coadopt_neighbors(ds.farmers.size());
    std::unordered_map<std::uint64_t, std::vector<Idx>> committed_adopters; // (village,video)
    std::unordered_map<std::uint64_t, std::int64_t> state_screen_count;     // (state,video)
    std::unordered_map<std::string, std::int64_t> word_adoptions_by_state;  // state|word
    std::vector<std::unordered_set<Idx>> village_seen_videos(cfg.villages);
    std::priority_queue<PendingAdoption, std::vector<PendingAdoption>, std::greater<>> pending;
    std::uint64_t pending_seq = 0;

    auto vv_key = [](Idx village, Idx video) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(village)) << 32) |
               static_cast<std::uint32_t>(video);
    };
    auto has_adopted = [&](Idx f, Idx video) {
        const auto& a = farmer_adopted[f];
        return std::find(a.begin(), a.end(), video) != a.end();
    };

    std::vector<std::int64_t> village_size_of(cfg.villages, 0);
    for (const auto& f : ds.farmers) village_size_of[f.village] += 1;

    out.latents.reserve(static_cast<std::size_t>(
        static_cast<double>(cfg.screenings) * cfg.group_size_mean * cfg.attendance_rate * 1.15));

    std::size_t i = 0;
    while (i < ds.screenings.size()) {
        const Date d = ds.screenings[i].date;
        // make adoptions verified strictly before d visible
        while (!pending.empty() && pending.top().verified < d) {
            auto p = pending.top();
            pending.pop();
            auto& lst = committed_adopters[vv_key(p.village, p.video)];
            for (Idx g : lst) {
                coadopt_neighbors[p.farmer].insert(g);
                coadopt_neighbors[g].insert(p.farmer);
            }
            lst.push_back(p.farmer);
            for (const auto& w : ds.videos[p.video].title_words)
                word_adoptions_by_state[ds.states[ds.villages[p.village].state].id + "|" + w] += 1;
        }

        std::size_t j = i;
        while (j < ds.screenings.size() && ds.screenings[j].date == d) ++j;

        for (std::size_t k = i; k < j; ++k) {
            const auto& s = ds.screenings[k];
            const Idx st = ds.villages[s.village].state;
            const auto& video = ds.videos[s.video];

            double ta = 0.0;
            auto scit = state_screen_count.find(vv_key(st, s.video));
            if (scit != state_screen_count.end() && scit->second > 0) {
                std::int64_t a_sum = 0;
                for (const auto& w : video.title_words) {
                    auto wit = word_adoptions_by_state.find(ds.states[st].id + "|" + w);
                    if (wit != word_adoptions_by_state.end()) a_sum += wit->second;
                }
                ta = static_cast<double>(a_sum) / static_cast<double>(scit->second);
            }
            std::size_t seen = village_seen_videos[s.village].size();
            double cs = seen == 0 ? 0.0
                                  : 1.0 / (static_cast<double>(seen) *
                                           static_cast<double>(village_size_of[s.village]));
            double ma = 1.0 / static_cast<double>(s.attendees.size());

            const auto* committed = [&]() -> const std::vector<Idx>* {
                auto it = committed_adopters.find(vv_key(s.village, s.video));
                return it == committed_adopters.end() ? nullptr : &it->second;
            }();

            for (Idx f : s.attendees) {
                const auto& fr = ds.farmers[f];
                std::int32_t paiv = 0, paig = 0;
                if (committed) {
                    for (Idx g : *committed) {
                        if (g == f || !coadopt_neighbors[f].count(g)) continue;
                        ++paiv;
                        if (ds.farmers[g].group == fr.group) ++paig;
                    }
                }
                LatentRow row;
                row.screening = static_cast<Idx>(k);
                row.farmer = f;
                row.video = s.video;
                row.date = d;
                row.pai_village = paiv;
                row.pai_group = paig;
                row.ma = ma;
                row.duration = video.duration_minutes;
                row.cs_village = cs;
                row.ta = ta;
                row.woman = fr.gender == Gender::Woman ? 1 : 0;
                row.village_size = static_cast<double>(village_size_of[s.village]);
                row.group_size = static_cast<double>(group_first[fr.group + 1] - group_first[fr.group]);
                row.noise = cfg.noise_scale > 0.0 ? sim.normal(0.0, cfg.noise_scale) : 0.0;
                row.logit = cfg.intercept
                          + cfg.beta_pai_village * std::sqrt(static_cast<double>(row.pai_village))
                          + cfg.beta_pai_group * std::sqrt(static_cast<double>(row.pai_group))
                          + cfg.beta_ma * row.ma
                          + cfg.beta_duration * row.duration
                          + cfg.beta_cs * row.cs_village
                          + cfg.beta_ta * std::log1p(row.ta)
                          + cfg.beta_gender_gap * static_cast<double>(row.woman)
                          + cfg.beta_village_size * row.village_size
                          + cfg.beta_group_size * row.group_size
                          + row.noise;
                row.prob = logistic(row.logit);
                row.adopted = sim.bernoulli(row.prob) ? 1 : 0;
                if (row.adopted && !has_adopted(f, s.video)) {
                    farmer_adopted[f].push_back(s.video);
                    Date verified = d + static_cast<Date>(sim.uniform_int(10, 20));
                    ds.adoptions.push_back({f, s.video, verified});
                    pending.push({verified, pending_seq++, f, s.video, s.village});
                }
                out.latents.push_back(row);
            }
        }

        // date group processed: its screenings become history
        for (std::size_t k = i; k < j; ++k) {
            const auto& s = ds.screenings[k];
            state_screen_count[vv_key(ds.villages[s.village].state, s.video)] += 1;
            village_seen_videos[s.village].insert(s.video);
        }
        i = j;
    }

    std::sort(ds.adoptions.begin(), ds.adoptions.end(), [](const AdoptionRec& a, const AdoptionRec& b) {
        if (a.farmer != b.farmer) return a.farmer < b.farmer;
        return a.video < b.video;
    });
    ds.finalize();
    return out;
}

std::string latents_to_csv(const Dataset& ds, const std::vector<LatentRow>& rows) {
    std::string out;
    CsvWriter w(out);
    w.row({"date", "screening_id", "farmer_id", "video_id", "pai_village", "pai_group", "ma",
           "duration_minutes", "cs_village", "ta", "woman", "village_size", "group_size", "noise",
           "logit", "prob", "adopted"});
    for (const auto& r : rows) {
        w.row({format_date(r.date), ds.screenings[r.screening].id, ds.farmers[r.farmer].id,
               ds.videos[r.video].id, format_int(r.pai_village), format_int(r.pai_group),
               format_double(r.ma), format_double(r.duration), format_double(r.cs_village),
               format_double(r.ta), format_int(r.woman), format_double(r.village_size),
               format_double(r.group_size), format_double(r.noise), format_double(r.logit),
               format_double(r.prob), format_int(r.adopted)});
    }
    return out;
}

} // namespace adoptkit
