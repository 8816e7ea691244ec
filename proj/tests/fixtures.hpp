#pragma once

#include "adoptkit/dataset.hpp"
#include "adoptkit/features.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

// Hand-built datasets for unit tests. The builder keeps the loader's
// invariants (attendees inside the screening village, adoptions preceded by
// attendance) the caller's responsibility.
namespace fixtures {

using namespace adoptkit;

inline Date day(const char* iso) {
    auto p = parse_date(iso);
    if (!p) throw std::runtime_error(std::string("bad fixture date: ") + iso);
    return *p;
}

inline std::string seq_id(const char* prefix, int width, std::size_t n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, n);
    return buf;
}

struct World {
    Dataset ds;

    Idx add_video(const std::string& title, double duration = 10.0,
                  const std::string& lang = "hindi") {
        VideoRec v;
        v.id = seq_id("VD", 5, ds.videos.size() + 1);
        v.title = title;
        v.duration_minutes = duration;
        v.language = lang;
        v.title_words = tokenize_title(title);
        ds.videos.push_back(std::move(v));
        return static_cast<Idx>(ds.videos.size() - 1);
    }

    Idx add_mediator(Gender g = Gender::Man) {
        ds.mediators.push_back({seq_id("MD", 4, ds.mediators.size() + 1), g});
        return static_cast<Idx>(ds.mediators.size() - 1);
    }

    Idx screen(Idx village, Idx video, Date date, std::vector<Idx> attendees,
               MinuteOfDay start = 600, Idx mediator = 0) {
        if (ds.mediators.empty()) add_mediator();
        ScreeningRec s;
        s.id = seq_id("SC", 7, ds.screenings.size() + 1);
        s.video = video;
        s.mediator = mediator;
        s.village = village;
        s.date = date;
        s.start = start;
        std::sort(attendees.begin(), attendees.end());
        s.attendees = std::move(attendees);
        ds.screenings.push_back(std::move(s));
        return static_cast<Idx>(ds.screenings.size() - 1);
    }

    Idx screen(Idx village, Idx video, const char* date, std::vector<Idx> attendees,
               MinuteOfDay start = 600, Idx mediator = 0) {
        return screen(village, video, day(date), std::move(attendees), start, mediator);
    }

    void adopt(Idx farmer, Idx video, const char* date) { adopt(farmer, video, day(date)); }

    void adopt(Idx farmer, Idx video, Date date) {
        ds.adoptions.push_back({farmer, video, date});
    }

    // Sorts adoptions into canonical order and rebuilds the indices.
    Dataset& done() {
        std::sort(ds.adoptions.begin(), ds.adoptions.end(),
                  [](const AdoptionRec& a, const AdoptionRec& b) {
                      if (a.farmer != b.farmer) return a.farmer < b.farmer;
                      return a.video < b.video;
                  });
        ds.finalize();
        return ds;
    }
};

// One state per `states`, each with one district, one block, and
// `villages_per_state` villages of `groups_per_village` groups holding
// `farmers_per_group` farmers. Farmer gender alternates Woman/Man by index.
inline World make_world(int states, int villages_per_state, int groups_per_village,
                        int farmers_per_group) {
    World w;
    Dataset& ds = w.ds;
    for (int s = 0; s < states; ++s) {
        ds.states.push_back({seq_id("ST", 2, ds.states.size() + 1), 0});
        ds.districts.push_back(
            {seq_id("DT", 3, ds.districts.size() + 1), static_cast<Idx>(s), 0});
        ds.blocks.push_back({seq_id("BL", 4, ds.blocks.size() + 1),
                             static_cast<Idx>(ds.districts.size() - 1), 0});
        const Idx block = static_cast<Idx>(ds.blocks.size() - 1);
        for (int v = 0; v < villages_per_state; ++v) {
            VillageRec vr;
            vr.id = seq_id("VL", 5, ds.villages.size() + 1);
            vr.block = block;
            vr.district = static_cast<Idx>(s);
            vr.state = static_cast<Idx>(s);
            ds.villages.push_back(std::move(vr));
            const Idx village = static_cast<Idx>(ds.villages.size() - 1);
            for (int g = 0; g < groups_per_village; ++g) {
                ds.groups.push_back({seq_id("GR", 6, ds.groups.size() + 1), village, {}});
                const Idx group = static_cast<Idx>(ds.groups.size() - 1);
                for (int f = 0; f < farmers_per_group; ++f) {
                    FarmerRec fr;
                    fr.id = seq_id("FA", 7, ds.farmers.size() + 1);
                    fr.group = group;
                    fr.village = village;
                    fr.gender = ds.farmers.size() % 2 == 0 ? Gender::Woman : Gender::Man;
                    fr.registered = day("2015-01-01");
                    ds.farmers.push_back(std::move(fr));
                }
            }
        }
    }
    return w;
}

// Feature matrix assembled directly, for learner and explainer tests that
// need no dataset. Dates default to one row per day in row order.
inline FeatureMatrix make_matrix(std::vector<std::string> names,
                                 const std::vector<std::vector<double>>& rows,
                                 const std::vector<int>& labels,
                                 std::vector<Date> dates = {}) {
    FeatureMatrix m;
    m.names = std::move(names);
    m.cols = m.names.size();
    m.rows = rows.size();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != m.cols) throw std::runtime_error("make_matrix: ragged row");
        m.x.insert(m.x.end(), rows[r].begin(), rows[r].end());
        m.label.push_back(static_cast<std::int8_t>(labels.at(r)));
        m.date.push_back(dates.empty() ? static_cast<Date>(17000 + r) : dates.at(r));
        m.screening.push_back(static_cast<Idx>(r));
        m.farmer.push_back(static_cast<Idx>(r));
        m.video.push_back(0);
    }
    return m;
}

// Same, row-major flat values.
inline FeatureMatrix make_matrix(std::vector<std::string> names,
                                 const std::vector<double>& flat,
                                 const std::vector<std::int8_t>& labels,
                                 std::vector<Date> dates = {}) {
    const std::size_t cols = names.size();
    if (cols == 0 || flat.size() % cols != 0)
        throw std::runtime_error("make_matrix: bad flat size");
    std::vector<std::vector<double>> rows(flat.size() / cols);
    std::vector<int> lab(labels.begin(), labels.end());
    for (std::size_t r = 0; r < rows.size(); ++r)
        rows[r].assign(flat.begin() + static_cast<std::ptrdiff_t>(r * cols),
                       flat.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols));
    return make_matrix(std::move(names), rows, lab, std::move(dates));
}

} // namespace fixtures
