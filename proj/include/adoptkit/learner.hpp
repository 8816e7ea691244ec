#pragma once

#include "adoptkit/features.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace adoptkit {

// Compact row-major copy of selected matrix rows; training touches this,
// never the full matrix.
struct LabeledData {
    std::size_t rows = 0, cols = 0;
    std::vector<double> x;
    std::vector<std::int8_t> y;
    double at(std::size_t r, std::size_t c) const { return x[r * cols + c]; }
    const double* row(std::size_t r) const { return x.data() + r * cols; }
};

LabeledData gather(const FeatureMatrix& m, const std::vector<std::size_t>& rows);

struct Split {
    std::vector<std::size_t> train, test;
    Date boundary = kDateNone; // last train date
};

// Chronological split: first ceil(cutoff * rows) rows plus everything else
// sharing the boundary date go to train. Throws when either side is empty
// or the matrix is not date-ordered.
Split temporal_split(const FeatureMatrix& m, double cutoff = 0.8);

// Majority class subsampled without replacement down to the minority size;
// minority rows untouched. Returns row ids in ascending order. Throws when
// only one class is present.
std::vector<std::size_t> downsample_majority(const FeatureMatrix& m,
                                             const std::vector<std::size_t>& rows,
                                             std::uint64_t seed);

// ---- logistic regression ----

struct LogisticModel {
    std::vector<std::string> feature_names;
    std::vector<double> weights; // original feature scale
    double intercept = 0.0;
    bool converged = false;
    double grad_norm = 0.0; // inf-norm at stop, standardized scale
    std::int32_t iterations = 0;
};

// Mean log-loss and its gradient for w = [weights..., intercept]; exposed
// so tests can difference the loss numerically.
double logistic_loss(const LabeledData& d, const std::vector<double>& w);
std::vector<double> logistic_gradient(const LabeledData& d, const std::vector<double>& w);

// Damped Newton descent on internally standardized features, folded back
// to the raw scale. A 1e-8 ridge on the Hessian absorbs the exact
// collinearity of the one-hot blocks. Stops at inf-norm(grad) < tol; on
// separable data the weights keep growing and the iteration cap reports
// converged=false with the final gradient norm.
LogisticModel train_logistic(const LabeledData& d, const std::vector<std::string>& names,
                             double tol = 1e-7, std::int32_t max_iter = 100);

// ---- trees ----

struct TreeNode {
    std::int32_t feature = -1; // -1 marks a leaf
    double threshold = 0.0;    // x[feature] <= threshold goes left
    std::int32_t left = -1, right = -1;
    double value = 0.0; // leaf only: class-1 probability (forest) or margin step (gbt)
    double cover = 0.0; // training rows routed through the node
};

struct Tree {
    std::vector<TreeNode> nodes; // nodes[0] is the root
};

double tree_predict(const Tree& t, const double* x);

struct ForestModel {
    std::vector<std::string> feature_names;
    std::vector<Tree> trees;
    std::uint64_t seed = 0;
};

// Bootstrap per tree, Gini over floor(sqrt(cols)) candidate features per
// node, grown until pure, no candidate separates the rows, or `max_depth`
// is reached; zero-gain splits are taken when they exist. The depth cap
// bounds leaf count at 2^max_depth, which keeps attribution over the
// forest tractable at event-log scale. Per-tree rngs derive from `seed`.
ForestModel train_random_forest(const LabeledData& d, const std::vector<std::string>& names,
                                std::int32_t trees = 25, std::uint64_t seed = 1,
                                int threads = 1, std::int32_t max_depth = 12);

struct GbtModel {
    std::vector<std::string> feature_names;
    std::vector<Tree> trees;
    double base_score = 0.0; // prior log-odds
    double learning_rate = 0.1;
};

// Logistic-loss boosting: depth-3 regression trees on the gradient with
// variance-reduction splits over all features and Newton leaf values,
// shrunk by the learning rate. Split search is exact over presorted
// feature orders, so the fit is deterministic without a seed.
GbtModel train_gbt(const LabeledData& d, const std::vector<std::string>& names,
                   std::int32_t stages = 25, double learning_rate = 0.1,
                   std::int32_t max_depth = 3);

// Per-stage mean training log-loss, stages+1 entries starting at the prior.
std::vector<double> gbt_stagewise_loss(const GbtModel& m, const LabeledData& d);

// ---- prediction & evaluation ----

std::vector<double> predict(const LogisticModel& m, const LabeledData& d, int threads = 1);
std::vector<double> predict(const ForestModel& m, const LabeledData& d, int threads = 1);
std::vector<double> predict(const GbtModel& m, const LabeledData& d, int threads = 1);

struct EvalReport {
    std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
    double precision0 = 0.0, recall0 = 0.0, f1_0 = 0.0;
    double precision1 = 0.0, recall1 = 0.0, f1_1 = 0.0;
    double macro_f1 = 0.0;
    double tn_rate = 0.0;
    nlohmann::json to_json() const;
};

// Confusion at probability threshold 0.5 (class 1 iff p > 0.5); degenerate
// 0/0 ratios are reported as 0.
EvalReport evaluate(const std::vector<double>& probs, const std::vector<std::int8_t>& labels);

// ---- serialization ----

using AnyModel = std::variant<LogisticModel, ForestModel, GbtModel>;

nlohmann::json model_to_json(const AnyModel& m);
AnyModel model_from_json(const nlohmann::json& j);

// Throws when the matrix columns differ from what the model was fit on.
void check_features(const AnyModel& m, const std::vector<std::string>& names);
std::vector<double> predict(const AnyModel& m, const LabeledData& d, int threads = 1);

} // namespace adoptkit
