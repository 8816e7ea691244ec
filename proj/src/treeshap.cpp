#include "adoptkit/explain.hpp"

#include "adoptkit/csv.hpp"
#include "adoptkit/parallel.hpp"
#include "adoptkit/rng.hpp"
#include "adoptkit/stats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace adoptkit {

double tree_expected_value(const Tree& t) {
    double total = t.nodes[0].cover;
    double e = 0.0;
    for (const auto& n : t.nodes)
        if (n.feature < 0) e += n.value * (n.cover / total);
    return e;
}

double tree_conditional_expectation(const Tree& t, const double* x,
                                    const std::vector<std::uint8_t>& mask) {
    // explicit stack of (node, weight)
    double e = 0.0;
    std::vector<std::pair<std::int32_t, double>> stack{{0, 1.0}};
    while (!stack.empty()) {
        auto [ni, w] = stack.back();
        stack.pop_back();
        const auto& n = t.nodes[static_cast<std::size_t>(ni)];
        if (n.feature < 0) {
            e += w * n.value;
            continue;
        }
        if (mask[static_cast<std::size_t>(n.feature)]) {
            stack.push_back({x[n.feature] <= n.threshold ? n.left : n.right, w});
        } else {
            double cl = t.nodes[static_cast<std::size_t>(n.left)].cover;
            double cr = t.nodes[static_cast<std::size_t>(n.right)].cover;
            stack.push_back({n.left, w * cl / (cl + cr)});
            stack.push_back({n.right, w * cr / (cl + cr)});
        }
    }
    return e;
}

std::vector<double> shap_bruteforce(const Tree& t, std::size_t cols, const double* x) {
    std::vector<std::int32_t> used;
    for (const auto& n : t.nodes)
        if (n.feature >= 0) used.push_back(n.feature);
    std::sort(used.begin(), used.end());
    used.erase(std::unique(used.begin(), used.end()), used.end());
    const std::size_t m = used.size();
    if (m > 20) throw std::invalid_argument("shap_bruteforce: too many active features");

    std::vector<double> phi(cols, 0.0);
    if (m == 0) return phi;

    // factorial table up to m
    std::vector<double> fact(m + 1, 1.0);
    for (std::size_t i = 1; i <= m; ++i) fact[i] = fact[i - 1] * static_cast<double>(i);

    // value of every coalition, indexed by bitmask over `used`
    const std::size_t nsub = std::size_t{1} << m;
    std::vector<double> value(nsub);
    std::vector<std::uint8_t> mask(cols, 0);
    for (std::size_t s = 0; s < nsub; ++s) {
        std::fill(mask.begin(), mask.end(), std::uint8_t{0});
        for (std::size_t i = 0; i < m; ++i)
            if (s & (std::size_t{1} << i)) mask[static_cast<std::size_t>(used[i])] = 1;
        value[s] = tree_conditional_expectation(t, x, mask);
    }

    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t bit = std::size_t{1} << i;
        double p = 0.0;
        for (std::size_t s = 0; s < nsub; ++s) {
            if (s & bit) continue;
            auto k = static_cast<std::size_t>(std::popcount(s));
            double w = fact[k] * fact[m - k - 1] / fact[m];
            p += w * (value[s | bit] - value[s]);
        }
        phi[static_cast<std::size_t>(used[i])] = p;
    }
    return phi;
}

namespace {

struct PathItem {
    std::int32_t feature;
    double zero_fraction;
    double one_fraction;
    double pweight;
};

void extend_path(std::vector<PathItem>& path, double pz, double po, std::int32_t feature) {
    path.push_back({feature, pz, po, path.empty() ? 1.0 : 0.0});
    const auto n = static_cast<std::int32_t>(path.size()) - 1;
    for (std::int32_t i = n - 1; i >= 0; --i) {
        path[static_cast<std::size_t>(i + 1)].pweight +=
            po * path[static_cast<std::size_t>(i)].pweight * (i + 1) /
            static_cast<double>(n + 1);
        path[static_cast<std::size_t>(i)].pweight *=
            pz * (n - i) / static_cast<double>(n + 1);
    }
}

void unwind_path(std::vector<PathItem>& path, std::int32_t path_index) {
    const auto n = static_cast<std::int32_t>(path.size()) - 1;
    const double po = path[static_cast<std::size_t>(path_index)].one_fraction;
    const double pz = path[static_cast<std::size_t>(path_index)].zero_fraction;
    double next_one = path[static_cast<std::size_t>(n)].pweight;
    for (std::int32_t i = n - 1; i >= 0; --i) {
        auto& el = path[static_cast<std::size_t>(i)];
        if (po != 0.0) {
            const double tmp = el.pweight;
            el.pweight = next_one * (n + 1) / ((i + 1) * po);
            next_one = tmp - el.pweight * pz * (n - i) / static_cast<double>(n + 1);
        } else {
            el.pweight = el.pweight * (n + 1) / (pz * (n - i));
        }
    }
    for (std::int32_t i = path_index; i < n; ++i) {
        path[static_cast<std::size_t>(i)].feature = path[static_cast<std::size_t>(i + 1)].feature;
        path[static_cast<std::size_t>(i)].zero_fraction =
            path[static_cast<std::size_t>(i + 1)].zero_fraction;
        path[static_cast<std::size_t>(i)].one_fraction =
            path[static_cast<std::size_t>(i + 1)].one_fraction;
    }
    path.pop_back();
}

double unwound_sum(const std::vector<PathItem>& path, std::int32_t path_index) {
    const auto n = static_cast<std::int32_t>(path.size()) - 1;
    const double po = path[static_cast<std::size_t>(path_index)].one_fraction;
    const double pz = path[static_cast<std::size_t>(path_index)].zero_fraction;
    double next_one = path[static_cast<std::size_t>(n)].pweight;
    double total = 0.0;
    for (std::int32_t i = n - 1; i >= 0; --i) {
        const auto& el = path[static_cast<std::size_t>(i)];
        if (po != 0.0) {
            const double tmp = next_one * (n + 1) / ((i + 1) * po);
            total += tmp;
            next_one = el.pweight - tmp * pz * (n - i) / static_cast<double>(n + 1);
        } else {
            total += el.pweight * (n + 1) / (pz * (n - i));
        }
    }
    return total;
}

void tree_shap_recurse(const Tree& t, const double* x, double* phi, std::int32_t node,
                       std::vector<PathItem> path, double parent_zero, double parent_one,
                       std::int32_t parent_feature) {
    extend_path(path, parent_zero, parent_one, parent_feature);
    const auto& nd = t.nodes[static_cast<std::size_t>(node)];

    if (nd.feature < 0) {
        const auto n = static_cast<std::int32_t>(path.size()) - 1;
        for (std::int32_t i = 1; i <= n; ++i) {
            const double w = unwound_sum(path, i);
            const auto& el = path[static_cast<std::size_t>(i)];
            phi[el.feature] += w * (el.one_fraction - el.zero_fraction) * nd.value;
        }
        return;
    }

    const auto& left = t.nodes[static_cast<std::size_t>(nd.left)];
    const auto& right = t.nodes[static_cast<std::size_t>(nd.right)];
    const bool go_left = x[nd.feature] <= nd.threshold;
    const std::int32_t hot = go_left ? nd.left : nd.right;
    const std::int32_t cold = go_left ? nd.right : nd.left;
    const double hot_frac = (go_left ? left.cover : right.cover) / nd.cover;
    const double cold_frac = (go_left ? right.cover : left.cover) / nd.cover;

    double incoming_zero = 1.0, incoming_one = 1.0;
    std::int32_t prev = -1;
    for (std::size_t i = 0; i < path.size(); ++i)
        if (path[i].feature == nd.feature) {
            prev = static_cast<std::int32_t>(i);
            break;
        }
    if (prev >= 0) {
        incoming_zero = path[static_cast<std::size_t>(prev)].zero_fraction;
        incoming_one = path[static_cast<std::size_t>(prev)].one_fraction;
        unwind_path(path, prev);
    }

    tree_shap_recurse(t, x, phi, hot, path, hot_frac * incoming_zero, incoming_one, nd.feature);
    tree_shap_recurse(t, x, phi, cold, std::move(path), cold_frac * incoming_zero, 0.0,
                      nd.feature);
}

} // namespace

TreeShapExplainer::TreeShapExplainer(const ForestModel& m)
    : model_(&m), cols_(m.feature_names.size()) {
    double b = 0.0;
    for (const auto& t : m.trees) b += tree_expected_value(t);
    base_ = b / static_cast<double>(m.trees.size());
}

ShapExplanation TreeShapExplainer::explain(const double* x) const {
    ShapExplanation e;
    e.base_value = base_;
    e.phi.assign(cols_, 0.0);
    std::vector<double> tree_phi(cols_);
    for (const auto& t : model_->trees) {
        std::fill(tree_phi.begin(), tree_phi.end(), 0.0);
        tree_shap_recurse(t, x, tree_phi.data(), 0, {}, 1.0, 1.0, -1);
        for (std::size_t c = 0; c < cols_; ++c) e.phi[c] += tree_phi[c];
    }
    const auto nt = static_cast<double>(model_->trees.size());
    for (auto& v : e.phi) v /= nt;
    return e;
}

ShapSample explain_sample(const ForestModel& m, const FeatureMatrix& mat,
                          const std::vector<std::size_t>& candidates, std::size_t cap,
                          std::uint64_t seed, int threads) {
    if (candidates.empty()) throw std::invalid_argument("explain_sample: no rows to explain");
    check_features(AnyModel(m), mat.names);

    ShapSample s;
    s.rows = candidates;
    if (s.rows.size() > cap && cap > 0) {
        Rng rng(seed);
        for (std::size_t i = 0; i < cap; ++i) {
            std::size_t j = i + rng.uniform_u64(s.rows.size() - i);
            std::swap(s.rows[i], s.rows[j]);
        }
        s.rows.resize(cap);
    }
    std::sort(s.rows.begin(), s.rows.end());

    s.cols = mat.cols;
    s.phi.assign(s.rows.size() * s.cols, 0.0);
    s.values.assign(s.rows.size() * s.cols, 0.0);
    TreeShapExplainer ex(m);
    s.base_value = ex.base_value();
    parallel_for(s.rows.size(), threads, [&](std::size_t i) {
        const double* x = mat.x.data() + s.rows[i] * mat.cols;
        auto e = ex.explain(x);
        std::copy(e.phi.begin(), e.phi.end(), s.phi.begin() + static_cast<std::ptrdiff_t>(i * s.cols));
        std::copy(x, x + mat.cols, s.values.begin() + static_cast<std::ptrdiff_t>(i * s.cols));
    });
    return s;
}

SummaryRanking shap_ranking(const ShapSample& s) {
    SummaryRanking r;
    r.mean_abs.assign(s.cols, 0.0);
    for (std::size_t i = 0; i < s.rows.size(); ++i)
        for (std::size_t c = 0; c < s.cols; ++c) r.mean_abs[c] += std::abs(s.phi_at(i, c));
    for (auto& v : r.mean_abs) v /= static_cast<double>(s.rows.size());
    r.order.resize(s.cols);
    std::iota(r.order.begin(), r.order.end(), std::size_t{0});
    std::stable_sort(r.order.begin(), r.order.end(), [&](std::size_t a, std::size_t b) {
        return r.mean_abs[a] > r.mean_abs[b];
    });
    return r;
}

DependencySeries dependency(const ShapSample& s, std::size_t col,
                            const std::vector<std::string>& names) {
    DependencySeries d;
    d.feature = names.at(col);
    d.points.reserve(s.rows.size());
    std::vector<double> xs(s.rows.size()), ys(s.rows.size());
    for (std::size_t i = 0; i < s.rows.size(); ++i) {
        xs[i] = s.value_at(i, col);
        ys[i] = s.phi_at(i, col);
        d.points.emplace_back(xs[i], ys[i]);
    }
    if (s.rows.size() < 2 ||
        std::all_of(xs.begin(), xs.end(), [&](double v) { return v == xs[0]; }))
        throw std::invalid_argument("dependency: constant feature " + d.feature);
    auto fit = ols_fit(xs, ys);
    d.slope = fit.slope;
    d.intercept = fit.intercept;
    return d;
}

nlohmann::json shap_report_json(const ShapSample& s, const SummaryRanking& rank,
                                const std::vector<DependencySeries>& deps,
                                const std::vector<std::string>& names) {
    nlohmann::json j;
    j["base_value"] = s.base_value;
    j["rows_explained"] = s.rows.size();
    auto& rk = j["ranking"] = nlohmann::json::array();
    for (std::size_t c : rank.order)
        rk.push_back({{"feature", names.at(c)}, {"mean_abs_attribution", rank.mean_abs[c]}});
    auto& dp = j["dependency"] = nlohmann::json::array();
    for (const auto& d : deps)
        dp.push_back(
            {{"feature", d.feature}, {"slope", d.slope}, {"intercept", d.intercept}});
    return j;
}

std::string summary_points_csv(const ShapSample& s, const std::vector<std::string>& names) {
    std::vector<double> lo(s.cols), hi(s.cols);
    for (std::size_t c = 0; c < s.cols; ++c) {
        lo[c] = hi[c] = s.value_at(0, c);
        for (std::size_t i = 1; i < s.rows.size(); ++i) {
            lo[c] = std::min(lo[c], s.value_at(i, c));
            hi[c] = std::max(hi[c], s.value_at(i, c));
        }
    }
    std::string out;
    CsvWriter w(out);
    w.row({"feature", "attribution", "normalized_value"});
    for (std::size_t c = 0; c < s.cols; ++c)
        for (std::size_t i = 0; i < s.rows.size(); ++i) {
            double nv = hi[c] > lo[c] ? (s.value_at(i, c) - lo[c]) / (hi[c] - lo[c]) : 0.5;
            w.row({names.at(c), format_double(s.phi_at(i, c)), format_double(nv)});
        }
    return out;
}

std::string dependency_points_csv(const DependencySeries& d) {
    std::string out;
    CsvWriter w(out);
    w.row({"value", "attribution"});
    for (const auto& [x, y] : d.points) w.row({format_double(x), format_double(y)});
    return out;
}

} // namespace adoptkit
