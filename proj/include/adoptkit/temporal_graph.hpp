#pragma once

#include "adoptkit/dataset.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace adoptkit {

struct GraphBuildError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class GraphKind : std::uint8_t { CoAttendance = 0, CoAdoption = 1 };

// Village-level temporal multigraph. An edge event is a dated tie between
// two farmers; the same pair can accumulate many events. Storage is the
// per-pair sorted date list plus a per-farmer adjacency carrying each
// neighbor's first event date, which is all the as-of queries need.
struct TemporalGraph {
    Idx village = -1;
    GraphKind kind = GraphKind::CoAttendance;

    std::vector<Idx> nodes; // all farmers of the village, sorted

    struct PairEdge {
        Idx a, b; // a < b, global farmer idxs
        std::uint32_t dates_begin, dates_end;
    };
    std::vector<PairEdge> pair_edges;
    std::vector<Date> event_dates; // concatenated sorted runs per pair

    // (neighbor, first event date with that neighbor), sorted by neighbor
    std::vector<std::vector<std::pair<Idx, Date>>> adjacency;

    std::int32_t local_of(Idx farmer) const; // -1 when not a village node

    std::span<const std::pair<Idx, Date>> neighbors(Idx farmer) const;

    // Distinct pair-first-event dates (sorted); snapshots taken at two dates
    // with the same count of these behind them share identical topology.
    std::vector<Date> first_event_dates;
    // Distinct registration dates of village farmers (sorted); the node set
    // grows as these pass.
    std::vector<Date> registration_dates;

    // Key identifying the snapshot topology at `date`: (#pair first events
    // strictly before, #registrations on or before).
    std::pair<std::uint32_t, std::uint32_t> topology_epoch(Date date) const;
};

// Unweighted-topology snapshot with per-edge event counts. Nodes are the
// village farmers registered on or before `date` plus any event endpoints;
// edges carry only events dated strictly before `date`.
struct StaticGraph {
    std::vector<Idx> nodes; // global farmer idxs, sorted
    std::vector<std::uint32_t> offsets;
    std::vector<std::uint32_t> neighbors; // local indices
    std::vector<std::uint32_t> weights;   // event counts per half-edge

    std::size_t node_count() const { return nodes.size(); }
    std::size_t edge_count() const { return neighbors.size() / 2; }
    std::int32_t local_of(Idx farmer) const;
};

// Co-attendance ties: every unordered attendee pair of every screening in
// the village, dated at the screening date. Screenings with more attendees
// than `attendee_cap` abort the build.
TemporalGraph build_coattendance(const Dataset& ds, Idx village, std::size_t attendee_cap = 500);

// Co-adoption ties: for each video, every unordered pair of same-village
// adopters, dated at the later of the two verification dates.
TemporalGraph build_coadoption(const Dataset& ds, Idx village);

TemporalGraph build_graph(const Dataset& ds, Idx village, GraphKind kind,
                          std::size_t attendee_cap = 500);

StaticGraph snapshot(const TemporalGraph& g, const Dataset& ds, Date date);

} // namespace adoptkit
