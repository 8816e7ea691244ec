#include "adoptkit/temporal_graph.hpp"

#include <algorithm>

namespace adoptkit {

namespace {

struct EdgeEvent {
    Idx a, b;
    Date date;
};

TemporalGraph assemble(const Dataset& ds, Idx village, GraphKind kind,
                       std::vector<EdgeEvent> events) {
    TemporalGraph g;
    g.village = village;
    g.kind = kind;
    g.nodes = ds.villages[village].farmers; // already sorted ascending

    std::sort(events.begin(), events.end(), [](const EdgeEvent& x, const EdgeEvent& y) {
        if (x.a != y.a) return x.a < y.a;
        if (x.b != y.b) return x.b < y.b;
        return x.date < y.date;
    });

    g.event_dates.reserve(events.size());
    g.adjacency.assign(g.nodes.size(), {});
    for (std::size_t i = 0; i < events.size();) {
        std::size_t j = i;
        while (j < events.size() && events[j].a == events[i].a && events[j].b == events[i].b) ++j;
        TemporalGraph::PairEdge pe;
        pe.a = events[i].a;
        pe.b = events[i].b;
        pe.dates_begin = static_cast<std::uint32_t>(g.event_dates.size());
        for (std::size_t k = i; k < j; ++k) g.event_dates.push_back(events[k].date);
        pe.dates_end = static_cast<std::uint32_t>(g.event_dates.size());
        Date first = events[i].date;
        g.pair_edges.push_back(pe);
        g.first_event_dates.push_back(first);
        std::int32_t la = g.local_of(pe.a), lb = g.local_of(pe.b);
        g.adjacency[la].emplace_back(pe.b, first);
        g.adjacency[lb].emplace_back(pe.a, first);
        i = j;
    }
    for (auto& adj : g.adjacency)
        std::sort(adj.begin(), adj.end());

    std::sort(g.first_event_dates.begin(), g.first_event_dates.end());
    g.first_event_dates.erase(
        std::unique(g.first_event_dates.begin(), g.first_event_dates.end()),
        g.first_event_dates.end());

    g.registration_dates.reserve(g.nodes.size());
    for (Idx f : g.nodes) g.registration_dates.push_back(ds.farmers[f].registered);
    std::sort(g.registration_dates.begin(), g.registration_dates.end());
    g.registration_dates.erase(
        std::unique(g.registration_dates.begin(), g.registration_dates.end()),
        g.registration_dates.end());
    return g;
}

} // namespace

std::int32_t TemporalGraph::local_of(Idx farmer) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), farmer);
    if (it == nodes.end() || *it != farmer) return -1;
    return static_cast<std::int32_t>(it - nodes.begin());
}

std::span<const std::pair<Idx, Date>> TemporalGraph::neighbors(Idx farmer) const {
    std::int32_t l = local_of(farmer);
    if (l < 0) return {};
    return adjacency[static_cast<std::size_t>(l)];
}

std::pair<std::uint32_t, std::uint32_t> TemporalGraph::topology_epoch(Date date) const {
    auto fe = std::lower_bound(first_event_dates.begin(), first_event_dates.end(), date);
    auto re = std::upper_bound(registration_dates.begin(), registration_dates.end(), date);
    return {static_cast<std::uint32_t>(fe - first_event_dates.begin()),
            static_cast<std::uint32_t>(re - registration_dates.begin())};
}

TemporalGraph build_coattendance(const Dataset& ds, Idx village, std::size_t attendee_cap) {
    std::vector<EdgeEvent> events;
    for (Idx si : ds.village_screenings[village]) {
        const auto& s = ds.screenings[si];
        if (s.attendees.size() > attendee_cap)
            throw GraphBuildError("screening " + s.id + " has " + std::to_string(s.attendees.size()) +
                                  " attendees, over the cap of " + std::to_string(attendee_cap));
        for (std::size_t i = 0; i < s.attendees.size(); ++i)
            for (std::size_t j = i + 1; j < s.attendees.size(); ++j)
                events.push_back({s.attendees[i], s.attendees[j], s.date});
    }
    return assemble(ds, village, GraphKind::CoAttendance, std::move(events));
}

TemporalGraph build_coadoption(const Dataset& ds, Idx village) {
    std::vector<EdgeEvent> events;
    std::vector<std::pair<Idx, Date>> here; // same-village adopters of one video
    for (std::size_t v = 0; v < ds.videos.size(); ++v) {
        here.clear();
        for (Idx ai : ds.video_adoptions[v]) {
            const auto& a = ds.adoptions[ai];
            if (ds.farmers[a.farmer].village == village) here.emplace_back(a.farmer, a.verified);
        }
        // `here` is ordered by verification date, so the later element of
        // each pair dates the tie.
        for (std::size_t j = 1; j < here.size(); ++j)
            for (std::size_t i = 0; i < j; ++i)
                events.push_back({std::min(here[i].first, here[j].first),
                                  std::max(here[i].first, here[j].first),
                                  std::max(here[i].second, here[j].second)});
    }
    return assemble(ds, village, GraphKind::CoAdoption, std::move(events));
}

TemporalGraph build_graph(const Dataset& ds, Idx village, GraphKind kind, std::size_t attendee_cap) {
    return kind == GraphKind::CoAttendance ? build_coattendance(ds, village, attendee_cap)
                                           : build_coadoption(ds, village);
}

std::int32_t StaticGraph::local_of(Idx farmer) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), farmer);
    if (it == nodes.end() || *it != farmer) return -1;
    return static_cast<std::int32_t>(it - nodes.begin());
}

StaticGraph snapshot(const TemporalGraph& g, const Dataset& ds, Date date) {
    StaticGraph s;
    s.nodes.reserve(g.nodes.size());
    for (Idx f : g.nodes)
        if (ds.farmers[f].registered <= date) s.nodes.push_back(f);

    struct Live { Idx a, b; std::uint32_t w; };
    std::vector<Live> live;
    for (const auto& pe : g.pair_edges) {
        const Date* lo = g.event_dates.data() + pe.dates_begin;
        const Date* hi = g.event_dates.data() + pe.dates_end;
        auto cut = std::lower_bound(lo, hi, date);
        auto w = static_cast<std::uint32_t>(cut - lo);
        if (w > 0) live.push_back({pe.a, pe.b, w});
    }
    // endpoints stay in the node set even if their registration is late
    // (possible in leniently loaded data)
    for (const auto& e : live) {
        for (Idx f : {e.a, e.b}) {
            auto it = std::lower_bound(s.nodes.begin(), s.nodes.end(), f);
            if (it == s.nodes.end() || *it != f) s.nodes.insert(it, f);
        }
    }

    const std::size_t n = s.nodes.size();
    std::vector<std::uint32_t> degree(n, 0);
    std::vector<std::pair<std::int32_t, std::int32_t>> locals(live.size());
    for (std::size_t i = 0; i < live.size(); ++i) {
        locals[i] = {s.local_of(live[i].a), s.local_of(live[i].b)};
        degree[static_cast<std::size_t>(locals[i].first)]++;
        degree[static_cast<std::size_t>(locals[i].second)]++;
    }
    s.offsets.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) s.offsets[i + 1] = s.offsets[i] + degree[i];
    s.neighbors.resize(s.offsets[n]);
    s.weights.resize(s.offsets[n]);
    std::vector<std::uint32_t> fill(s.offsets.begin(), s.offsets.end() - 1);
    for (std::size_t i = 0; i < live.size(); ++i) {
        auto [la, lb] = locals[i];
        s.neighbors[fill[la]] = static_cast<std::uint32_t>(lb);
        s.weights[fill[la]++] = live[i].w;
        s.neighbors[fill[lb]] = static_cast<std::uint32_t>(la);
        s.weights[fill[lb]++] = live[i].w;
    }
    // neighbor runs come out sorted because pair_edges are sorted by (a, b)
    return s;
}

} // namespace adoptkit
