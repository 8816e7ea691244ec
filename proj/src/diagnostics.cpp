#include "adoptkit/diagnostics.hpp"

#include "adoptkit/csv.hpp"
#include "adoptkit/features.hpp"
#include "adoptkit/parallel.hpp"
#include "adoptkit/temporal_graph.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace adoptkit {

namespace {

nlohmann::json num_or_null(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

std::size_t distinct_viewed(const Dataset& ds, Idx farmer) {
    std::vector<Idx> vids;
    vids.reserve(ds.farmer_attendance[farmer].size());
    for (Idx s : ds.farmer_attendance[farmer]) vids.push_back(ds.screenings[s].video);
    std::sort(vids.begin(), vids.end());
    vids.erase(std::unique(vids.begin(), vids.end()), vids.end());
    return vids.size();
}

} // namespace

double adoption_rate_farmer(const Dataset& ds, Idx farmer) {
    if (ds.farmer_attendance[farmer].empty())
        throw std::invalid_argument("adoption rate undefined: farmer " + ds.farmers[farmer].id +
                                    " never attended a screening");
    return static_cast<double>(ds.farmer_adoptions[farmer].size()) /
           static_cast<double>(distinct_viewed(ds, farmer));
}

std::vector<std::int64_t> adoptions_per_screening(const Dataset& ds) {
    std::vector<std::int64_t> out(ds.screenings.size(), 0);
    for (Idx s : attribute_adoptions(ds)) ++out[s];
    return out;
}

double adoption_rate_mediator(const Dataset& ds, Idx mediator,
                              const std::vector<std::int64_t>& per_screening) {
    double sum = 0.0;
    std::size_t held = 0;
    for (std::size_t s = 0; s < ds.screenings.size(); ++s) {
        const auto& sc = ds.screenings[s];
        if (sc.mediator != mediator) continue;
        sum += static_cast<double>(per_screening[s]) / static_cast<double>(sc.attendees.size());
        ++held;
    }
    if (held == 0)
        throw std::invalid_argument("adoption rate undefined: mediator " +
                                    ds.mediators[mediator].id + " conducted no screenings");
    return sum / static_cast<double>(held);
}

double adoption_rate_mediator(const Dataset& ds, Idx mediator) {
    return adoption_rate_mediator(ds, mediator, adoptions_per_screening(ds));
}

std::array<std::pair<std::size_t, std::size_t>, 4> quartile_bounds(std::size_t n) {
    std::array<std::pair<std::size_t, std::size_t>, 4> out;
    for (std::size_t q = 0; q < 4; ++q) out[q] = {q * n / 4, (q + 1) * n / 4};
    return out;
}

namespace {

// Per-farmer factor aggregates over their attendance events.
struct FarmerAgg {
    double ma = 0.0, cs_v = 0.0, pai_g = 0.0, pai_v = 0.0, dur = 0.0;
    double events = 0.0;
    double ar = -1.0; // -1 marks farmers who never attended
    double active_age = 0.0;
    double group_size = 0.0, village_size = 0.0;
};

struct FactorDef {
    const char* name;
    bool q1_smaller; // true: H1 q1 < q4; false: H1 q4 < q1
    double (*value)(const FarmerAgg&);
};

constexpr FactorDef kFactors[8] = {
    {"ma_mean", true, [](const FarmerAgg& a) { return a.ma / a.events; }},
    {"cs_village_mean", true, [](const FarmerAgg& a) { return a.cs_v / a.events; }},
    {"pai_group_mean", true, [](const FarmerAgg& a) { return a.pai_g / a.events; }},
    {"pai_village_mean", true, [](const FarmerAgg& a) { return a.pai_v / a.events; }},
    {"active_age_days", true, [](const FarmerAgg& a) { return a.active_age; }},
    {"duration_mean", false, [](const FarmerAgg& a) { return a.dur / a.events; }},
    {"group_size", false, [](const FarmerAgg& a) { return a.group_size; }},
    {"village_size", false, [](const FarmerAgg& a) { return a.village_size; }},
};

std::vector<FarmerAgg> aggregate_factors(const Dataset& ds, int threads) {
    FeatureContext ctx(ds);
    std::vector<FarmerAgg> agg(ds.farmers.size());
    parallel_for(ds.villages.size(), threads, [&](std::size_t v) {
        TemporalGraph g2 = build_coadoption(ds, static_cast<Idx>(v));
        for (Idx f : ds.villages[v].farmers) {
            const auto& att = ds.farmer_attendance[f];
            if (att.empty()) continue;
            FarmerAgg a;
            for (Idx s : att) {
                const auto& sc = ds.screenings[s];
                a.ma += 1.0 / static_cast<double>(sc.attendees.size());
                a.cs_v += ctx.content_specificity(sc.village, Level::Village, sc.date);
                auto [pg, pv] = ctx.pai(g2, f, sc.video, sc.date);
                a.pai_g += pg;
                a.pai_v += pv;
                a.dur += ds.videos[sc.video].duration_minutes;
            }
            a.events = static_cast<double>(att.size());
            a.ar = static_cast<double>(ds.farmer_adoptions[f].size()) /
                   static_cast<double>(distinct_viewed(ds, f));
            a.active_age = static_cast<double>(ds.screenings[att.back()].date -
                                               ds.screenings[att.front()].date);
            a.group_size = static_cast<double>(ds.groups[ds.farmers[f].group].farmers.size());
            a.village_size = static_cast<double>(ds.villages[v].farmers.size());
            agg[f] = a;
        }
    });
    return agg;
}

} // namespace

DifferentialReport differential_battery(const Dataset& ds, int threads) {
    DifferentialReport rep;
    const std::vector<FarmerAgg> agg = aggregate_factors(ds, threads);

    // Farmer idx order equals id order, so pushing in idx order makes the
    // later (ar, idx) sort the (AR, farmer_id) order the tie rule asks for.
    std::vector<std::vector<Idx>> eligible(ds.states.size());
    for (std::size_t f = 0; f < ds.farmers.size(); ++f) {
        if (agg[f].ar <= 0.0) continue;
        eligible[ds.villages[ds.farmers[f].village].state].push_back(static_cast<Idx>(f));
    }

    rep.states.resize(ds.states.size());
    std::atomic<bool> degenerate{false};
    parallel_for(ds.states.size(), threads, [&](std::size_t st) {
        StateDifferential sd;
        sd.state = ds.states[st].id;
        auto& farmers = eligible[st];
        std::sort(farmers.begin(), farmers.end(), [&](Idx x, Idx y) {
            return std::pair(agg[x].ar, x) < std::pair(agg[y].ar, y);
        });
        sd.eligible = farmers.size();
        const auto bounds = quartile_bounds(farmers.size());
        sd.q1_size = bounds[0].second - bounds[0].first;
        sd.q4_size = bounds[3].second - bounds[3].first;
        if (sd.q1_size < 2 || sd.q4_size < 2) {
            sd.skipped = true;
            sd.note = "a quartile has fewer than 2 farmers";
        } else if (agg[farmers.front()].ar == agg[farmers.back()].ar) {
            sd.skipped = true;
            sd.note = "all adoption rates equal; quartile split is arbitrary";
        } else {
            for (const auto& def : kFactors) {
                std::vector<double> q1, q4;
                for (std::size_t i = bounds[0].first; i < bounds[0].second; ++i)
                    q1.push_back(def.value(agg[farmers[i]]));
                for (std::size_t i = bounds[3].first; i < bounds[3].second; ++i)
                    q4.push_back(def.value(agg[farmers[i]]));
                FactorTest ft;
                ft.factor = def.name;
                ft.hypothesis = def.q1_smaller ? "q1<q4" : "q4<q1";
                ft.welch = def.q1_smaller ? welch_one_tailed(q1, q4, Tail::Less)
                                          : welch_one_tailed(q4, q1, Tail::Less);
                if (ft.welch.degenerate) degenerate.store(true);
                ft.significant = !ft.welch.degenerate &&
                                 bonferroni_significant(ft.welch.p, rep.alpha, rep.measures);
                sd.tests.push_back(std::move(ft));
            }
        }
        rep.states[st] = std::move(sd);
    });
    rep.any_degenerate = degenerate.load();
    return rep;
}

nlohmann::json DifferentialReport::to_json() const {
    nlohmann::json j;
    j["alpha"] = alpha;
    j["measures"] = measures;
    j["orientation"] =
        "t = mean(hypothesized smaller) - mean(hypothesized larger); a real effect drives t negative";
    j["any_degenerate"] = any_degenerate;
    j["states"] = nlohmann::json::array();
    for (const auto& sd : states) {
        nlohmann::json s;
        s["state"] = sd.state;
        s["skipped"] = sd.skipped;
        if (sd.skipped) s["note"] = sd.note;
        s["eligible"] = sd.eligible;
        s["q1_size"] = sd.q1_size;
        s["q4_size"] = sd.q4_size;
        s["tests"] = nlohmann::json::array();
        for (const auto& ft : sd.tests) {
            nlohmann::json t;
            t["factor"] = ft.factor;
            t["hypothesis"] = ft.hypothesis;
            const bool q1_first = ft.hypothesis == "q1<q4";
            t["mean_q1"] = q1_first ? ft.welch.mean_a : ft.welch.mean_b;
            t["mean_q4"] = q1_first ? ft.welch.mean_b : ft.welch.mean_a;
            t["t"] = num_or_null(ft.welch.t);
            t["df"] = num_or_null(ft.welch.df);
            t["p"] = num_or_null(ft.welch.p);
            t["degenerate"] = ft.welch.degenerate;
            t["significant"] = ft.significant;
            s["tests"].push_back(std::move(t));
        }
        j["states"].push_back(std::move(s));
    }
    return j;
}

namespace {

GenderCell gender_contrast(std::string state, std::vector<double> women, std::vector<double> men,
                           std::atomic<bool>& degenerate) {
    GenderCell cell;
    cell.state = std::move(state);
    if (women.size() < 2 || men.size() < 2) {
        cell.note = women.size() < 2 ? "fewer than 2 women" : "fewer than 2 men";
        return cell;
    }
    cell.welch = welch_one_tailed(women, men, Tail::Less);
    if (cell.welch.degenerate) {
        degenerate.store(true);
        cell.note = "both samples constant and equal";
        return cell;
    }
    cell.computable = true;
    cell.tier = cell.welch.p < 0.001 ? 2 : (cell.welch.p < 0.05 ? 1 : 0);
    return cell;
}

} // namespace

GenderReport gender_battery(const Dataset& ds, int threads) {
    GenderReport rep;
    const std::size_t nstates = ds.states.size();

    // Farmer side: adoption rates of AR > 0 farmers, grouped by state.
    std::vector<std::vector<double>> farmer_women(nstates), farmer_men(nstates);
    for (std::size_t f = 0; f < ds.farmers.size(); ++f) {
        if (ds.farmer_attendance[f].empty() || ds.farmer_adoptions[f].empty()) continue;
        const Gender g = ds.farmers[f].gender;
        if (g == Gender::Unspecified) continue;
        const Idx st = ds.villages[ds.farmers[f].village].state;
        const double ar = static_cast<double>(ds.farmer_adoptions[f].size()) /
                          static_cast<double>(distinct_viewed(ds, static_cast<Idx>(f)));
        (g == Gender::Woman ? farmer_women : farmer_men)[st].push_back(ar);
    }

    // Mediator side: per-state adoption rates over the screenings they held
    // in that state.
    const std::vector<std::int64_t> per_screening = adoptions_per_screening(ds);
    std::vector<double> med_sum(ds.mediators.size() * nstates, 0.0);
    std::vector<std::int64_t> med_cnt(ds.mediators.size() * nstates, 0);
    for (std::size_t s = 0; s < ds.screenings.size(); ++s) {
        const auto& sc = ds.screenings[s];
        const std::size_t slot =
            static_cast<std::size_t>(sc.mediator) * nstates + ds.villages[sc.village].state;
        med_sum[slot] += static_cast<double>(per_screening[s]) /
                         static_cast<double>(sc.attendees.size());
        ++med_cnt[slot];
    }
    std::vector<std::vector<double>> med_women(nstates), med_men(nstates);
    for (std::size_t m = 0; m < ds.mediators.size(); ++m) {
        const Gender g = ds.mediators[m].gender;
        if (g == Gender::Unspecified) continue;
        for (std::size_t st = 0; st < nstates; ++st) {
            const std::size_t slot = m * nstates + st;
            if (med_cnt[slot] == 0) continue;
            (g == Gender::Woman ? med_women : med_men)[st].push_back(
                med_sum[slot] / static_cast<double>(med_cnt[slot]));
        }
    }

    rep.farmers.resize(nstates);
    rep.mediators.resize(nstates);
    std::atomic<bool> degenerate{false};
    parallel_for(nstates, threads, [&](std::size_t st) {
        rep.farmers[st] = gender_contrast(ds.states[st].id, std::move(farmer_women[st]),
                                          std::move(farmer_men[st]), degenerate);
        rep.mediators[st] = gender_contrast(ds.states[st].id, std::move(med_women[st]),
                                            std::move(med_men[st]), degenerate);
    });
    rep.any_degenerate = degenerate.load();
    return rep;
}

namespace {

nlohmann::json gender_cells_json(const std::vector<GenderCell>& cells) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : cells) {
        nlohmann::json j;
        j["state"] = c.state;
        j["computable"] = c.computable;
        if (!c.computable) {
            j["note"] = c.note;
        } else {
            j["ar_mean_women"] = c.welch.mean_a;
            j["ar_mean_men"] = c.welch.mean_b;
            j["n_women"] = c.welch.n_a;
            j["n_men"] = c.welch.n_b;
            j["t"] = num_or_null(c.welch.t);
            j["df"] = num_or_null(c.welch.df);
            j["p"] = num_or_null(c.welch.p);
            j["tier"] = c.tier == 2 ? "0.001" : (c.tier == 1 ? "0.05" : "none");
        }
        arr.push_back(std::move(j));
    }
    return arr;
}

} // namespace

nlohmann::json GenderReport::to_json() const {
    nlohmann::json j;
    j["hypothesis"] = "AR_mean(women) < AR_mean(men)";
    j["orientation"] = "t = mean(women) - mean(men); a real gap drives t negative";
    j["any_degenerate"] = any_degenerate;
    j["farmers"] = gender_cells_json(farmers);
    j["mediators"] = gender_cells_json(mediators);
    return j;
}

namespace {

// Appends CDF points (distinct values with cumulative fractions) for one
// already-sorted sample.
void append_cdf_rows(CsvWriter& w, std::string_view label, const std::vector<double>& sorted) {
    const double n = static_cast<double>(sorted.size());
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        w.row({label, format_double(sorted[i]), format_double(static_cast<double>(j) / n)});
        i = j;
    }
}

std::vector<std::vector<Idx>> adopted_videos_per_village(const Dataset& ds) {
    std::vector<std::vector<Idx>> adopted(ds.villages.size());
    for (const auto& ad : ds.adoptions)
        adopted[ds.farmers[ad.farmer].village].push_back(ad.video);
    for (auto& v : adopted) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    return adopted;
}

bool sorted_intersects(const std::vector<Idx>& a, const std::vector<Idx>& b) {
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) return true;
        if (a[i] < b[j]) ++i; else ++j;
    }
    return false;
}

std::size_t sorted_intersection_size(const std::vector<Idx>& a, const std::vector<Idx>& b) {
    std::size_t i = 0, j = 0, n = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) { ++n; ++i; ++j; }
        else if (a[i] < b[j]) ++i;
        else ++j;
    }
    return n;
}

std::string month_label(Date d) {
    const CivilDate c = civil_from_days(d);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u", c.year, c.month);
    return buf;
}

} // namespace

DescriptiveSuite descriptive_suite(const Dataset& ds) {
    DescriptiveSuite out;

    { // Group-size CDF.
        std::vector<double> sizes;
        sizes.reserve(ds.groups.size());
        for (const auto& g : ds.groups) sizes.push_back(static_cast<double>(g.farmers.size()));
        std::sort(sizes.begin(), sizes.end());
        std::string csv;
        CsvWriter w(csv);
        w.row({"group_size", "cum_fraction"});
        const double n = static_cast<double>(sizes.size());
        std::size_t i = 0;
        while (i < sizes.size()) {
            std::size_t j = i;
            while (j < sizes.size() && sizes[j] == sizes[i]) ++j;
            w.row({format_double(sizes[i]), format_double(static_cast<double>(j) / n)});
            i = j;
        }
        out.files.emplace_back("group_size_cdf.csv", std::move(csv));
    }

    { // Adoption-rate CDF per state plus a pooled curve.
        std::vector<std::vector<double>> per_state(ds.states.size());
        std::vector<double> all;
        for (std::size_t f = 0; f < ds.farmers.size(); ++f) {
            if (ds.farmer_attendance[f].empty()) continue;
            const double ar = static_cast<double>(ds.farmer_adoptions[f].size()) /
                              static_cast<double>(distinct_viewed(ds, static_cast<Idx>(f)));
            per_state[ds.villages[ds.farmers[f].village].state].push_back(ar);
            all.push_back(ar);
        }
        std::string csv;
        CsvWriter w(csv);
        w.row({"state", "adoption_rate", "cum_fraction"});
        for (std::size_t st = 0; st < ds.states.size(); ++st) {
            std::sort(per_state[st].begin(), per_state[st].end());
            if (!per_state[st].empty()) append_cdf_rows(w, ds.states[st].id, per_state[st]);
        }
        std::sort(all.begin(), all.end());
        if (!all.empty()) append_cdf_rows(w, "ALL", all);
        out.files.emplace_back("ar_cdf.csv", std::move(csv));
    }

    { // Same-state village pairs sharing at least one adopted video.
        const auto adopted = adopted_videos_per_village(ds);
        std::vector<std::vector<Idx>> state_villages(ds.states.size());
        for (std::size_t v = 0; v < ds.villages.size(); ++v)
            state_villages[ds.villages[v].state].push_back(static_cast<Idx>(v));
        std::string csv;
        CsvWriter w(csv);
        w.row({"state", "village_pairs", "pairs_sharing", "overlap_percent"});
        std::uint64_t total_pairs = 0, total_sharing = 0;
        for (std::size_t st = 0; st < ds.states.size(); ++st) {
            const auto& vs = state_villages[st];
            std::uint64_t pairs = 0, sharing = 0;
            for (std::size_t i = 0; i < vs.size(); ++i)
                for (std::size_t j = i + 1; j < vs.size(); ++j) {
                    ++pairs;
                    if (sorted_intersects(adopted[vs[i]], adopted[vs[j]])) ++sharing;
                }
            total_pairs += pairs;
            total_sharing += sharing;
            const double pct = pairs ? 100.0 * static_cast<double>(sharing) /
                                           static_cast<double>(pairs)
                                     : 0.0;
            w.row({ds.states[st].id, format_int(static_cast<std::int64_t>(pairs)),
                   format_int(static_cast<std::int64_t>(sharing)), format_double(pct)});
        }
        out.overlap_percent = total_pairs ? 100.0 * static_cast<double>(total_sharing) /
                                                static_cast<double>(total_pairs)
                                          : 0.0;
        w.row({"ALL", format_int(static_cast<std::int64_t>(total_pairs)),
               format_int(static_cast<std::int64_t>(total_sharing)),
               format_double(out.overlap_percent)});
        out.files.emplace_back("village_overlap.csv", std::move(csv));
    }

    { // Per-state distinct video sets and their pairwise intersections.
        std::vector<std::vector<Idx>> screened(ds.states.size()), adopted(ds.states.size());
        for (const auto& sc : ds.screenings)
            screened[ds.villages[sc.village].state].push_back(sc.video);
        for (const auto& ad : ds.adoptions)
            adopted[ds.villages[ds.farmers[ad.farmer].village].state].push_back(ad.video);
        for (auto* sets : {&screened, &adopted})
            for (auto& v : *sets) {
                std::sort(v.begin(), v.end());
                v.erase(std::unique(v.begin(), v.end()), v.end());
            }
        std::string csv;
        CsvWriter w(csv);
        w.row({"state_a", "state_b", "screened", "adopted"});
        for (std::size_t i = 0; i < ds.states.size(); ++i)
            for (std::size_t j = i; j < ds.states.size(); ++j) {
                const std::size_t s = i == j ? screened[i].size()
                                             : sorted_intersection_size(screened[i], screened[j]);
                const std::size_t a = i == j ? adopted[i].size()
                                             : sorted_intersection_size(adopted[i], adopted[j]);
                w.row({ds.states[i].id, ds.states[j].id,
                       format_int(static_cast<std::int64_t>(s)),
                       format_int(static_cast<std::int64_t>(a))});
            }
        out.files.emplace_back("state_video_sets.csv", std::move(csv));
    }

    { // Monthly screening and adoption counts over the event span.
        std::string csv;
        CsvWriter w(csv);
        w.row({"month", "screenings", "adoptions"});
        if (ds.first_event != kDateNone) {
            const CivilDate lo = civil_from_days(ds.first_event);
            const CivilDate hi = civil_from_days(ds.last_event);
            const int base = lo.year * 12 + static_cast<int>(lo.month) - 1;
            const int last = hi.year * 12 + static_cast<int>(hi.month) - 1;
            std::vector<std::int64_t> scr(last - base + 1, 0), ado(last - base + 1, 0);
            auto bucket = [&](Date d) {
                const CivilDate c = civil_from_days(d);
                return c.year * 12 + static_cast<int>(c.month) - 1 - base;
            };
            for (const auto& sc : ds.screenings) ++scr[bucket(sc.date)];
            for (const auto& ad : ds.adoptions) ++ado[bucket(ad.verified)];
            for (int m = base; m <= last; ++m) {
                const Date d = days_from_civil(m / 12, static_cast<unsigned>(m % 12 + 1), 1);
                w.row({month_label(d), format_int(scr[m - base]), format_int(ado[m - base])});
            }
        }
        out.files.emplace_back("monthly_events.csv", std::move(csv));
    }

    { // Views vs adoptions per video with a log-linear fit.
        std::vector<std::int64_t> views(ds.videos.size(), 0);
        for (const auto& sc : ds.screenings)
            views[sc.video] += static_cast<std::int64_t>(sc.attendees.size());
        std::string csv;
        CsvWriter w(csv);
        w.row({"video_id", "views", "adoptions"});
        std::vector<double> lx, ly;
        for (std::size_t v = 0; v < ds.videos.size(); ++v) {
            const auto adoptions = static_cast<std::int64_t>(ds.video_adoptions[v].size());
            w.row({ds.videos[v].id, format_int(views[v]), format_int(adoptions)});
            if (views[v] > 0) {
                lx.push_back(std::log(static_cast<double>(views[v])));
                ly.push_back(static_cast<double>(adoptions));
            }
        }
        if (lx.size() >= 2) {
            try {
                const OlsFit fit = ols_fit(lx, ly);
                out.scatter_fit_ok = true;
                out.scatter_slope = fit.slope;
                out.scatter_intercept = fit.intercept;
            } catch (const std::invalid_argument&) {
                // constant views; leave the fit unset
            }
        }
        out.files.emplace_back("video_scatter.csv", std::move(csv));
    }

    return out;
}

nlohmann::json DescriptiveSuite::to_json() const {
    nlohmann::json j;
    nlohmann::json names = nlohmann::json::array();
    for (const auto& [name, _] : files) names.push_back(name);
    j["files"] = std::move(names);
    j["village_overlap_percent"] = overlap_percent;
    j["scatter_fit_ok"] = scatter_fit_ok;
    if (scatter_fit_ok) {
        j["scatter_slope"] = scatter_slope;
        j["scatter_intercept"] = scatter_intercept;
    }
    return j;
}

} // namespace adoptkit
