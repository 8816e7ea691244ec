#pragma once

#include "adoptkit/dataset.hpp"
#include "adoptkit/stats.hpp"

#include <json.hpp>

#include <array>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace adoptkit {

// Farmer adoption rate: distinct videos adopted / distinct videos viewed.
// Throws std::invalid_argument when the farmer never attended a screening.
double adoption_rate_farmer(const Dataset& ds, Idx farmer);

// Adoptions credited to each screening under the most-recent-attendance
// attribution rule (one entry per screening).
std::vector<std::int64_t> adoptions_per_screening(const Dataset& ds);

// Mediator adoption rate: mean over the mediator's screenings of
// (attributed adoptions / attendees). Throws when they conducted none.
double adoption_rate_mediator(const Dataset& ds, Idx mediator);
double adoption_rate_mediator(const Dataset& ds, Idx mediator,
                              const std::vector<std::int64_t>& per_screening);

// Contiguous [begin, end) ranges cutting a sorted sample of size n into
// quartiles; sizes differ by at most one and the ranges partition [0, n).
std::array<std::pair<std::size_t, std::size_t>, 4> quartile_bounds(std::size_t n);

// One factor's quartile contrast. Sample a of the Welch result is always the
// quartile hypothesized to be smaller, so a real effect drives t negative.
struct FactorTest {
    std::string factor;
    std::string hypothesis; // "q1<q4" or "q4<q1"
    WelchResult welch;
    bool significant = false; // Bonferroni-adjusted at alpha/measures
};

struct StateDifferential {
    std::string state;
    bool skipped = false;
    std::string note;
    std::size_t eligible = 0; // farmers with AR > 0
    std::size_t q1_size = 0, q4_size = 0;
    std::vector<FactorTest> tests; // the eight factors, fixed order
};

// Quartile battery over farmers with at least one adoption, one grid row per
// state. Factors with a _mean suffix are the farmer's mean over attendance
// events; active age is first-to-last attendance in days.
struct DifferentialReport {
    double alpha = 1e-3;
    int measures = 8;
    std::vector<StateDifferential> states;
    bool any_degenerate = false;
    nlohmann::json to_json() const;
};

DifferentialReport differential_battery(const Dataset& ds, int threads = 1);

// One state's women-vs-men adoption rate contrast for a single role.
struct GenderCell {
    std::string state;
    bool computable = false;
    std::string note;
    WelchResult welch; // a = women, b = men
    int tier = 0;      // 2: p < 0.001, 1: p < 0.05, 0: neither
};

struct GenderReport {
    std::vector<GenderCell> farmers;   // per state, AR > 0 farmers
    std::vector<GenderCell> mediators; // per state, screenings held there
    bool any_degenerate = false;
    nlohmann::json to_json() const;
};

GenderReport gender_battery(const Dataset& ds, int threads = 1);

// Plot-ready CSV bundle: group-size and adoption-rate CDFs, same-state
// village-pair adoption overlap, per-state video set sizes and pairwise
// intersections, monthly event counts, and a views/adoptions scatter with a
// log-linear fit.
struct DescriptiveSuite {
    std::vector<std::pair<std::string, std::string>> files; // name -> csv body

    double overlap_percent = 0.0; // all same-state village pairs pooled
    bool scatter_fit_ok = false;  // enough spread in views to fit a line
    double scatter_slope = 0.0;   // adoptions per unit ln(views)
    double scatter_intercept = 0.0;

    nlohmann::json to_json() const;
};

DescriptiveSuite descriptive_suite(const Dataset& ds);

} // namespace adoptkit
