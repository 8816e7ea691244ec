#pragma once

#include "adoptkit/learner.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace adoptkit {

// Cover-weighted expectation of the tree's leaf values (the tree's share of
// the model's base value).
double tree_expected_value(const Tree& t);

// Conditional expectation of the tree given the features marked known in
// `mask`: known splits follow x, unknown splits average children by cover.
// This is the coalition game both the fast algorithm and the brute-force
// oracle evaluate.
double tree_conditional_expectation(const Tree& t, const double* x,
                                    const std::vector<std::uint8_t>& mask);

// Exact per-feature Shapley values of one tree under the game above,
// enumerating all subsets of the features the tree actually splits on.
// Exponential; only usable on small trees. Features absent from the tree
// get exactly 0.
std::vector<double> shap_bruteforce(const Tree& t, std::size_t cols, const double* x);

struct ShapExplanation {
    double base_value = 0.0;
    std::vector<double> phi; // aligned to the model's feature catalogue
};

// Polynomial path-dependent TreeSHAP on the forest's class-1 probability:
// per-tree attributions averaged over trees. base + sum(phi) reproduces the
// forest probability to ~1e-12.
class TreeShapExplainer {
public:
    explicit TreeShapExplainer(const ForestModel& m);

    double base_value() const { return base_; }
    ShapExplanation explain(const double* x) const;

private:
    const ForestModel* model_;
    std::size_t cols_;
    double base_ = 0.0;
};

// Attribution matrix over a row sample. `candidates` are matrix row ids;
// when more than `cap`, a seeded subsample without replacement is taken.
// Rows come out ascending, so the result is independent of candidate order.
struct ShapSample {
    std::vector<std::size_t> rows;
    std::size_t cols = 0;
    std::vector<double> phi;    // rows x cols
    std::vector<double> values; // rows x cols feature values
    double base_value = 0.0;

    double phi_at(std::size_t r, std::size_t c) const { return phi[r * cols + c]; }
    double value_at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

ShapSample explain_sample(const ForestModel& m, const FeatureMatrix& mat,
                          const std::vector<std::size_t>& candidates, std::size_t cap,
                          std::uint64_t seed, int threads = 1);

// Features ordered by descending mean |attribution|; ties keep catalogue
// order. Invariant to the sample's row order.
struct SummaryRanking {
    std::vector<std::size_t> order;
    std::vector<double> mean_abs; // aligned to catalogue, not to `order`
};

SummaryRanking shap_ranking(const ShapSample& s);

struct DependencySeries {
    std::string feature;
    std::vector<std::pair<double, double>> points; // (feature value, attribution)
    double slope = 0.0;
    double intercept = 0.0;
};

// OLS of attribution on feature value across the sample. Throws
// std::invalid_argument on a constant feature.
DependencySeries dependency(const ShapSample& s, std::size_t col,
                            const std::vector<std::string>& names);

// Report artifacts: ranking plus slopes as JSON, point clouds as CSV.
nlohmann::json shap_report_json(const ShapSample& s, const SummaryRanking& rank,
                                const std::vector<DependencySeries>& deps,
                                const std::vector<std::string>& names);

// feature, attribution, normalized_value (min-max per feature over the
// sample; constant features sit at 0.5), one row per (sampled row, feature).
std::string summary_points_csv(const ShapSample& s, const std::vector<std::string>& names);

std::string dependency_points_csv(const DependencySeries& d);

} // namespace adoptkit
