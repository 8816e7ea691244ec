#include "adoptkit/dataset.hpp"
#include "adoptkit/csv.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <unordered_set>

namespace adoptkit {

std::vector<std::string> tokenize_title(std::string_view title) {
    std::vector<std::string> words;
    std::string cur;
    auto flush = [&] {
        if (cur.size() >= 2) words.push_back(cur);
        cur.clear();
    };
    for (unsigned char c : title) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
        }
    }
    flush();
    std::sort(words.begin(), words.end());
    words.erase(std::unique(words.begin(), words.end()), words.end());
    return words;
}

const char* gender_name(Gender g) {
    switch (g) {
    case Gender::Woman: return "woman";
    case Gender::Man: return "man";
    default: return "unspecified";
    }
}

static bool parse_gender(std::string_view s, Gender& out) {
    if (s == "woman") { out = Gender::Woman; return true; }
    if (s == "man") { out = Gender::Man; return true; }
    if (s == "unspecified") { out = Gender::Unspecified; return true; }
    return false;
}

Idx Dataset::language_index(std::string_view lang) const {
    auto it = std::lower_bound(languages.begin(), languages.end(), lang);
    if (it == languages.end() || *it != lang) return -1;
    return static_cast<Idx>(it - languages.begin());
}

namespace {

struct Loader {
    Strictness strictness;
    LoadReport report;

    // Returns true when the caller should drop the row and continue.
    bool reject(const std::string& table, std::size_t line, std::uint64_t DropCounts::* slot,
                const std::string& why) {
        std::string msg = table + ".csv:" + std::to_string(line) + ": " + why;
        if (strictness == Strictness::Strict) throw ValidationError(msg);
        report.dropped[table].*slot += 1;
        if (report.messages.size() < 20) report.messages.push_back(msg);
        return true;
    }

    CsvReader open(const std::string& dir, const std::string& table,
                   const std::vector<std::string>& expected_header) {
        CsvReader r(read_file(dir + "/" + table + ".csv"));
        std::vector<std::string> header;
        if (!r.next(header))
            throw ValidationError(table + ".csv: empty file, header row required");
        if (header != expected_header) {
            std::string want;
            for (auto& h : expected_header) want += (want.empty() ? "" : ",") + h;
            throw ValidationError(table + ".csv: unexpected header, want \"" + want + "\"");
        }
        return r;
    }
};

std::uint64_t pair_key(Idx a, Idx b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
}

template <typename Rec>
void sort_by_id(std::vector<Rec>& v) {
    std::sort(v.begin(), v.end(), [](const Rec& a, const Rec& b) { return a.id < b.id; });
}

template <typename Rec>
std::unordered_map<std::string, Idx> index_by_id(const std::vector<Rec>& v) {
    std::unordered_map<std::string, Idx> m;
    m.reserve(v.size() * 2);
    for (std::size_t i = 0; i < v.size(); ++i) m.emplace(v[i].id, static_cast<Idx>(i));
    return m;
}

} // namespace

LoadResult load_dataset(const std::string& dir, Strictness strictness) {
    Loader L{strictness, {}, };
    Dataset ds;
    std::vector<std::string> row;

    // geography: one row per village, hierarchy must be consistent.
    {
        auto r = L.open(dir, "geography", {"village_id", "block_id", "district_id", "state_id"});
        std::unordered_map<std::string, std::string> block_district, district_state;
        std::unordered_set<std::string> seen;
        struct RawVillage { std::string id, block, district, state; };
        std::vector<RawVillage> raw;
        while (r.next(row)) {
            std::size_t line = r.record_line();
            if (row.size() != 4 || row[0].empty() || row[1].empty() || row[2].empty() || row[3].empty()) {
                L.reject("geography", line, &DropCounts::malformed, "expected 4 non-empty fields");
                continue;
            }
            if (!seen.insert(row[0]).second) {
                L.reject("geography", line, &DropCounts::duplicate_key, "duplicate village_id " + row[0]);
                continue;
            }
            auto [bit, bnew] = block_district.emplace(row[1], row[2]);
            if (!bnew && bit->second != row[2]) {
                seen.erase(row[0]);
                L.reject("geography", line, &DropCounts::bad_value,
                         "block " + row[1] + " listed under two districts");
                continue;
            }
            auto [dit, dnew] = district_state.emplace(row[2], row[3]);
            if (!dnew && dit->second != row[3]) {
                seen.erase(row[0]);
                L.reject("geography", line, &DropCounts::bad_value,
                         "district " + row[2] + " listed under two states");
                continue;
            }
            raw.push_back({row[0], row[1], row[2], row[3]});
        }
        std::sort(raw.begin(), raw.end(), [](auto& a, auto& b) { return a.id < b.id; });
        std::vector<std::string> state_ids, district_ids, block_ids;
        for (auto& v : raw) {
            state_ids.push_back(v.state);
            district_ids.push_back(v.district);
            block_ids.push_back(v.block);
        }
        auto uniq = [](std::vector<std::string>& v) {
            std::sort(v.begin(), v.end());
            v.erase(std::unique(v.begin(), v.end()), v.end());
        };
        uniq(state_ids); uniq(district_ids); uniq(block_ids);
        std::unordered_map<std::string, Idx> smap, dmap, bmap;
        for (auto& s : state_ids) { smap.emplace(s, static_cast<Idx>(ds.states.size())); ds.states.push_back({s, 0}); }
        for (auto& d : district_ids) {
            Idx st = smap.at(district_state.at(d));
            dmap.emplace(d, static_cast<Idx>(ds.districts.size()));
            ds.districts.push_back({d, st, 0});
        }
        for (auto& b : block_ids) {
            Idx di = dmap.at(block_district.at(b));
            bmap.emplace(b, static_cast<Idx>(ds.blocks.size()));
            ds.blocks.push_back({b, di, 0});
        }
        for (auto& v : raw) {
            VillageRec rec;
            rec.id = v.id;
            rec.block = bmap.at(v.block);
            rec.district = dmap.at(v.district);
            rec.state = smap.at(v.state);
            ds.villages.push_back(std::move(rec));
        }
        L.report.kept["geography"] = ds.villages.size();
    }
    ds.village_by_id = index_by_id(ds.villages);

    // mediators
    {
        auto r = L.open(dir, "mediators", {"mediator_id", "gender"});
        std::unordered_set<std::string> seen;
        while (r.next(row)) {
            std::size_t line = r.record_line();
            if (row.size() != 2 || row[0].empty()) {
                L.reject("mediators", line, &DropCounts::malformed, "expected 2 fields with mediator_id");
                continue;
            }
            Gender g;
            if (!parse_gender(row[1], g)) {
                L.reject("mediators", line, &DropCounts::bad_value, "unknown gender \"" + row[1] + "\"");
                continue;
            }
            if (!seen.insert(row[0]).second) {
                L.reject("mediators", line, &DropCounts::duplicate_key, "duplicate mediator_id " + row[0]);
                continue;
            }
            ds.mediators.push_back({row[0], g});
        }
        sort_by_id(ds.mediators);
        L.report.kept["mediators"] = ds.mediators.size();
    }
    ds.mediator_by_id = index_by_id(ds.mediators);

    // videos
    {
        auto r = L.open(dir, "videos", {"video_id", "title", "duration_minutes", "language_id"});
        std::unordered_set<std::string> seen;
        while (r.next(row)) {
            std::size_t line = r.record_line();
            if (row.size() != 4 || row[0].empty()) {
                L.reject("videos", line, &DropCounts::malformed, "expected 4 fields with video_id");
                continue;
            }
            double dur;
            if (!parse_double(row[2], dur)) {
                L.reject("videos", line, &DropCounts::malformed, "bad duration \"" + row[2] + "\"");
                continue;
            }
            if (!(dur > 0.0)) {
                L.reject("videos", line, &DropCounts::bad_value, "duration must be positive");
                continue;
            }
            if (row[3].empty()) {
                L.reject("videos", line, &DropCounts::bad_value, "empty language_id");
                continue;
            }
            auto words = tokenize_title(row[1]);
            if (words.empty()) {
                L.reject("videos", line, &DropCounts::bad_value, "title has no usable words");
                continue;
            }
            if (!seen.insert(row[0]).second) {
                L.reject("videos", line, &DropCounts::duplicate_key, "duplicate video_id " + row[0]);
                continue;
            }
            ds.videos.push_back({row[0], row[1], dur, row[3], std::move(words)});
        }
        sort_by_id(ds.videos);
        L.report.kept["videos"] = ds.videos.size();
    }
    ds.video_by_id = index_by_id(ds.videos);

    // farmers; groups are implied by this table and must stay inside one village
    {
        auto r = L.open(dir, "farmers",
                        {"farmer_id", "group_id", "village_id", "gender", "registration_date"});
        std::unordered_set<std::string> seen;
        std::unordered_map<std::string, std::string> group_village;
        struct RawFarmer { std::string id, group; Idx village; Gender g; Date reg; };
        std::vector<RawFarmer> raw;
        while (r.next(row)) {
            std::size_t line = r.record_line();
            if (row.size() != 5 || row[0].empty() || row[1].empty()) {
                L.reject("farmers", line, &DropCounts::malformed, "expected 5 fields with ids");
                continue;
            }
            auto vit = ds.village_by_id.find(row[2]);
            if (vit == ds.village_by_id.end()) {
                L.reject("farmers", line, &DropCounts::dangling_reference, "unknown village_id " + row[2]);
                continue;
            }
            Gender g;
            if (!parse_gender(row[3], g)) {
                L.reject("farmers", line, &DropCounts::bad_value, "unknown gender \"" + row[3] + "\"");
                continue;
            }
            auto reg = parse_date(row[4]);
            if (!reg) {
                L.reject("farmers", line, &DropCounts::malformed, "bad registration_date \"" + row[4] + "\"");
                continue;
            }
            auto [git, gnew] = group_village.emplace(row[1], row[2]);
            if (!gnew && git->second != row[2]) {
                L.reject("farmers", line, &DropCounts::bad_value,
                         "group " + row[1] + " spans villages " + git->second + " and " + row[2]);
                continue;
            }
            if (!seen.insert(row[0]).second) {
                L.reject("farmers", line, &DropCounts::duplicate_key, "duplicate farmer_id " + row[0]);
                continue;
            }
            raw.push_back({row[0], row[1], vit->second, g, *reg});
        }
        std::sort(raw.begin(), raw.end(), [](auto& a, auto& b) { return a.id < b.id; });
        std::vector<std::string> group_ids;
        for (auto& f : raw) group_ids.push_back(f.group);
        std::sort(group_ids.begin(), group_ids.end());
        group_ids.erase(std::unique(group_ids.begin(), group_ids.end()), group_ids.end());
        std::unordered_map<std::string, Idx> gmap;
        for (auto& gid : group_ids) {
            gmap.emplace(gid, static_cast<Idx>(ds.groups.size()));
            ds.groups.push_back({gid, ds.village_by_id.at(group_village.at(gid)), {}});
        }
        for (auto& f : raw)
            ds.farmers.push_back({f.id, gmap.at(f.group), f.village, f.g, f.reg});
        L.report.kept["farmers"] = ds.farmers.size();
    }
    ds.farmer_by_id = index_by_id(ds.farmers);
    ds.group_by_id = index_by_id(ds.groups);

    // screenings
    {
        auto r = L.open(dir, "screenings",
                        {"screening_id", "video_id", "mediator_id", "village_id", "date", "start_time"});
        std::unordered_set<std::string> seen;
        while (r.next(row)) {
            std::size_t line = r.record_line();
            if (row.size() != 6 || row[0].empty()) {
                L.reject("screenings", line, &DropCounts::malformed, "expected 6 fields with screening_id");
                continue;
            }
            auto vit = ds.video_by_id.find(row[1]);
            auto mit = ds.mediator_by_id.find(row[2]);
            auto vilit = ds.village_by_id.find(row[3]);
            if (vit == ds.video_by_id.end() || mit == ds.mediator_by_id.end() ||
                vilit == ds.village_by_id.end()) {
                L.reject("screenings", line, &DropCounts::dangling_reference,
                         "unresolved reference in screening " + row[0]);
                continue;
            }
            auto date = parse_date(row[4]);
            auto start = parse_time(row[5]);
            if (!date || !start) {
                L.reject("screenings", line, &DropCounts::malformed,
                         "bad date/time \"" + row[4] + "\" \"" + row[5] + "\"");
                continue;
            }
            if (!seen.insert(row[0]).second) {
                L.reject("screenings", line, &DropCounts::duplicate_key, "duplicate screening_id " + row[0]);
                continue;
            }
            ScreeningRec rec;
            rec.id = row[0];
            rec.video = vit->second;
            rec.mediator = mit->second;
            rec.village = vilit->second;
            rec.date = *date;
            rec.start = *start;
            ds.screenings.push_back(std::move(rec));
        }
        sort_by_id(ds.screenings);
        L.report.kept["screenings"] = ds.screenings.size();
    }
    ds.screening_by_id = index_by_id(ds.screenings);

    // attendance; attendees must live in the screening's village
    {
        auto r = L.open(dir, "attendance", {"screening_id", "farmer_id"});
        std::unordered_set<std::uint64_t> seen;
        std::uint64_t kept = 0;
        while (r.next(row)) {
            std::size_t line = r.record_line();
            if (row.size() != 2) {
                L.reject("attendance", line, &DropCounts::malformed, "expected 2 fields");
                continue;
            }
            auto sit = ds.screening_by_id.find(row[0]);
            auto fit = ds.farmer_by_id.find(row[1]);
            if (sit == ds.screening_by_id.end() || fit == ds.farmer_by_id.end()) {
                L.reject("attendance", line, &DropCounts::dangling_reference,
                         "unresolved attendance (" + row[0] + ", " + row[1] + ")");
                continue;
            }
            if (ds.farmers[fit->second].village != ds.screenings[sit->second].village) {
                L.reject("attendance", line, &DropCounts::village_mismatch,
                         "farmer " + row[1] + " outside village of screening " + row[0]);
                continue;
            }
            if (!seen.insert(pair_key(sit->second, fit->second)).second) {
                L.reject("attendance", line, &DropCounts::duplicate_key,
                         "duplicate attendance (" + row[0] + ", " + row[1] + ")");
                continue;
            }
            ds.screenings[sit->second].attendees.push_back(fit->second);
            ++kept;
        }
        for (auto& s : ds.screenings) std::sort(s.attendees.begin(), s.attendees.end());
        L.report.kept["attendance"] = kept;
    }

    // screenings without attendees are rejected (strict) or pruned (lenient)
    {
        std::vector<ScreeningRec> kept;
        kept.reserve(ds.screenings.size());
        for (auto& s : ds.screenings) {
            if (s.attendees.empty()) {
                L.reject("screenings", 0, &DropCounts::empty_screening,
                         "screening " + s.id + " has no attendees");
                L.report.kept["screenings"] -= 1;
                continue;
            }
            kept.push_back(std::move(s));
        }
        ds.screenings = std::move(kept);
        ds.screening_by_id = index_by_id(ds.screenings);
    }

    // adoptions; each needs a supporting attendance dated on or before it
    {
        // (farmer, video) -> earliest attendance date
        std::unordered_map<std::uint64_t, Date> first_watch;
        first_watch.reserve(ds.screenings.size() * 8);
        for (const auto& s : ds.screenings) {
            for (Idx f : s.attendees) {
                auto [it, inserted] = first_watch.emplace(pair_key(f, s.video), s.date);
                if (!inserted && s.date < it->second) it->second = s.date;
            }
        }
        auto r = L.open(dir, "adoptions", {"farmer_id", "video_id", "verification_date"});
        std::unordered_set<std::uint64_t> seen;
        while (r.next(row)) {
            std::size_t line = r.record_line();
            if (row.size() != 3) {
                L.reject("adoptions", line, &DropCounts::malformed, "expected 3 fields");
                continue;
            }
            auto fit = ds.farmer_by_id.find(row[0]);
            auto vit = ds.video_by_id.find(row[1]);
            if (fit == ds.farmer_by_id.end() || vit == ds.video_by_id.end()) {
                L.reject("adoptions", line, &DropCounts::dangling_reference,
                         "unresolved adoption (" + row[0] + ", " + row[1] + ")");
                continue;
            }
            auto date = parse_date(row[2]);
            if (!date) {
                L.reject("adoptions", line, &DropCounts::malformed,
                         "bad verification_date \"" + row[2] + "\"");
                continue;
            }
            std::uint64_t key = pair_key(fit->second, vit->second);
            auto wit = first_watch.find(key);
            if (wit == first_watch.end() || wit->second > *date) {
                L.reject("adoptions", line, &DropCounts::adoption_without_attendance,
                         "adoption (" + row[0] + ", " + row[1] + ") precedes any attendance");
                continue;
            }
            if (!seen.insert(key).second) {
                L.reject("adoptions", line, &DropCounts::duplicate_key,
                         "duplicate adoption (" + row[0] + ", " + row[1] + ")");
                continue;
            }
            ds.adoptions.push_back({fit->second, vit->second, *date});
        }
        std::sort(ds.adoptions.begin(), ds.adoptions.end(), [](const AdoptionRec& a, const AdoptionRec& b) {
            if (a.farmer != b.farmer) return a.farmer < b.farmer;
            return a.video < b.video;
        });
        L.report.kept["adoptions"] = ds.adoptions.size();
    }

    ds.finalize();
    return {std::move(ds), std::move(L.report)};
}

void Dataset::finalize() {
    for (auto& v : villages) v.farmers.clear();
    for (auto& g : groups) g.farmers.clear();
    for (auto& s : states) s.population = 0;
    for (auto& d : districts) d.population = 0;
    for (auto& b : blocks) b.population = 0;
    for (std::size_t i = 0; i < farmers.size(); ++i) {
        const auto& f = farmers[i];
        villages[f.village].farmers.push_back(static_cast<Idx>(i));
        groups[f.group].farmers.push_back(static_cast<Idx>(i));
        const auto& v = villages[f.village];
        blocks[v.block].population += 1;
        districts[v.district].population += 1;
        states[v.state].population += 1;
    }

    languages.clear();
    for (const auto& v : videos) languages.push_back(v.language);
    std::sort(languages.begin(), languages.end());
    languages.erase(std::unique(languages.begin(), languages.end()), languages.end());

    auto by_date_then_id = [&](Idx a, Idx b) {
        if (screenings[a].date != screenings[b].date) return screenings[a].date < screenings[b].date;
        return a < b;
    };
    farmer_attendance.assign(farmers.size(), {});
    village_screenings.assign(villages.size(), {});
    state_screenings.assign(states.size(), {});
    for (std::size_t i = 0; i < screenings.size(); ++i) {
        const auto& s = screenings[i];
        village_screenings[s.village].push_back(static_cast<Idx>(i));
        state_screenings[villages[s.village].state].push_back(static_cast<Idx>(i));
        for (Idx f : s.attendees) farmer_attendance[f].push_back(static_cast<Idx>(i));
    }
    for (auto& v : village_screenings) std::sort(v.begin(), v.end(), by_date_then_id);
    for (auto& v : state_screenings) std::sort(v.begin(), v.end(), by_date_then_id);
    for (auto& v : farmer_attendance) std::sort(v.begin(), v.end(), by_date_then_id);

    farmer_adoptions.assign(farmers.size(), {});
    video_adoptions.assign(videos.size(), {});
    for (std::size_t i = 0; i < adoptions.size(); ++i) {
        farmer_adoptions[adoptions[i].farmer].push_back(static_cast<Idx>(i));
        video_adoptions[adoptions[i].video].push_back(static_cast<Idx>(i));
    }
    for (auto& v : video_adoptions) {
        std::sort(v.begin(), v.end(), [&](Idx a, Idx b) {
            if (adoptions[a].verified != adoptions[b].verified)
                return adoptions[a].verified < adoptions[b].verified;
            return adoptions[a].farmer < adoptions[b].farmer;
        });
    }

    first_event = kDateNone;
    last_event = kDateNone;
    auto see = [&](Date d) {
        if (first_event == kDateNone || d < first_event) first_event = d;
        if (last_event == kDateNone || d > last_event) last_event = d;
    };
    for (const auto& s : screenings) see(s.date);
    for (const auto& a : adoptions) see(a.verified);
}

void save_dataset(const Dataset& ds, const std::string& dir) {
    std::filesystem::create_directories(dir);
    std::string out;

    out.clear();
    {
        CsvWriter w(out);
        w.row({"village_id", "block_id", "district_id", "state_id"});
        for (const auto& v : ds.villages)
            w.row({v.id, ds.blocks[v.block].id, ds.districts[v.district].id, ds.states[v.state].id});
    }
    write_file(dir + "/geography.csv", out);

    out.clear();
    {
        CsvWriter w(out);
        w.row({"mediator_id", "gender"});
        for (const auto& m : ds.mediators) w.row({m.id, gender_name(m.gender)});
    }
    write_file(dir + "/mediators.csv", out);

    out.clear();
    {
        CsvWriter w(out);
        w.row({"video_id", "title", "duration_minutes", "language_id"});
        for (const auto& v : ds.videos)
            w.row({v.id, v.title, format_double(v.duration_minutes), v.language});
    }
    write_file(dir + "/videos.csv", out);

    out.clear();
    {
        CsvWriter w(out);
        w.row({"farmer_id", "group_id", "village_id", "gender", "registration_date"});
        for (const auto& f : ds.farmers)
            w.row({f.id, ds.groups[f.group].id, ds.villages[f.village].id, gender_name(f.gender),
                   format_date(f.registered)});
    }
    write_file(dir + "/farmers.csv", out);

    out.clear();
    {
        CsvWriter w(out);
        w.row({"screening_id", "video_id", "mediator_id", "village_id", "date", "start_time"});
        for (const auto& s : ds.screenings)
            w.row({s.id, ds.videos[s.video].id, ds.mediators[s.mediator].id,
                   ds.villages[s.village].id, format_date(s.date), format_time(s.start)});
    }
    write_file(dir + "/screenings.csv", out);

    out.clear();
    {
        CsvWriter w(out);
        w.row({"screening_id", "farmer_id"});
        for (const auto& s : ds.screenings)
            for (Idx f : s.attendees) w.row({s.id, ds.farmers[f].id});
    }
    write_file(dir + "/attendance.csv", out);

    out.clear();
    {
        CsvWriter w(out);
        w.row({"farmer_id", "video_id", "verification_date"});
        for (const auto& a : ds.adoptions)
            w.row({ds.farmers[a.farmer].id, ds.videos[a.video].id, format_date(a.verified)});
    }
    write_file(dir + "/adoptions.csv", out);
}

std::vector<TimelineEvent> event_timeline(const Dataset& ds) {
    std::vector<TimelineEvent> ev;
    ev.reserve(ds.screenings.size() + ds.adoptions.size());
    for (std::size_t i = 0; i < ds.screenings.size(); ++i)
        ev.push_back({ds.screenings[i].date, EventKind::Screening, static_cast<Idx>(i)});
    for (std::size_t i = 0; i < ds.adoptions.size(); ++i)
        ev.push_back({ds.adoptions[i].verified, EventKind::Adoption, static_cast<Idx>(i)});
    // idx order coincides with id-lexicographic order for both kinds
    std::sort(ev.begin(), ev.end(), [](const TimelineEvent& a, const TimelineEvent& b) {
        if (a.date != b.date) return a.date < b.date;
        if (a.kind != b.kind) return a.kind < b.kind;
        return a.index < b.index;
    });
    return ev;
}

} // namespace adoptkit
