#include "adoptkit/learner.hpp"

#include "adoptkit/kernels.hpp"
#include "adoptkit/parallel.hpp"
#include "adoptkit/rng.hpp"
#include "adoptkit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace adoptkit {

LabeledData gather(const FeatureMatrix& m, const std::vector<std::size_t>& rows) {
    LabeledData d;
    d.rows = rows.size();
    d.cols = m.cols;
    d.x.reserve(d.rows * d.cols);
    d.y.reserve(d.rows);
    for (std::size_t r : rows) {
        d.x.insert(d.x.end(), m.x.begin() + static_cast<std::ptrdiff_t>(r * m.cols),
                   m.x.begin() + static_cast<std::ptrdiff_t>((r + 1) * m.cols));
        d.y.push_back(m.label[r]);
    }
    return d;
}

Split temporal_split(const FeatureMatrix& m, double cutoff) {
    if (!(cutoff > 0.0 && cutoff < 1.0))
        throw std::invalid_argument("temporal_split: cutoff must lie in (0,1)");
    if (m.rows == 0) throw std::invalid_argument("temporal_split: empty matrix");
    for (std::size_t r = 1; r < m.rows; ++r)
        if (m.date[r] < m.date[r - 1])
            throw std::invalid_argument("temporal_split: matrix is not date-ordered");

    std::size_t k = static_cast<std::size_t>(std::ceil(cutoff * static_cast<double>(m.rows)));
    k = std::min(std::max<std::size_t>(k, 1), m.rows);
    Date boundary = m.date[k - 1];
    while (k < m.rows && m.date[k] == boundary) ++k;
    if (k >= m.rows)
        throw std::invalid_argument("temporal_split: empty test side (boundary date swallows all "
                                    "remaining rows)");
    Split s;
    s.boundary = boundary;
    s.train.resize(k);
    std::iota(s.train.begin(), s.train.end(), std::size_t{0});
    s.test.resize(m.rows - k);
    std::iota(s.test.begin(), s.test.end(), k);
    return s;
}

std::vector<std::size_t> downsample_majority(const FeatureMatrix& m,
                                             const std::vector<std::size_t>& rows,
                                             std::uint64_t seed) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t r : rows) (m.label[r] ? pos : neg).push_back(r);
    if (pos.empty() || neg.empty())
        throw std::invalid_argument("downsample_majority: train rows hold a single class");
    auto& majority = pos.size() > neg.size() ? pos : neg;
    auto& minority = pos.size() > neg.size() ? neg : pos;
    Rng rng(seed);
    for (std::size_t i = 0; i < minority.size(); ++i) {
        std::size_t j = i + rng.uniform_u64(majority.size() - i);
        std::swap(majority[i], majority[j]);
    }
    majority.resize(minority.size());
    std::vector<std::size_t> out;
    out.reserve(2 * minority.size());
    out.insert(out.end(), minority.begin(), minority.end());
    out.insert(out.end(), majority.begin(), majority.end());
    std::sort(out.begin(), out.end());
    return out;
}

// ---- logistic regression ----

double logistic_loss(const LabeledData& d, const std::vector<double>& w) {
    const std::span<const double> wspan(w.data(), d.cols);
    double loss = 0.0;
    for (std::size_t r = 0; r < d.rows; ++r) {
        double z = w[d.cols] + kernels::dot(wspan, {d.row(r), d.cols});
        double p = logistic(z);
        loss -= d.y[r] ? std::log(p) : std::log(1.0 - p);
    }
    return loss / static_cast<double>(d.rows);
}

std::vector<double> logistic_gradient(const LabeledData& d, const std::vector<double>& w) {
    const std::span<const double> wspan(w.data(), d.cols);
    std::vector<double> g(d.cols + 1, 0.0);
    const std::span<double> gspan(g.data(), d.cols);
    for (std::size_t r = 0; r < d.rows; ++r) {
        const double* x = d.row(r);
        double z = w[d.cols] + kernels::dot(wspan, {x, d.cols});
        double e = logistic(z) - static_cast<double>(d.y[r]);
        kernels::axpy(e, {x, d.cols}, gspan);
        g[d.cols] += e;
    }
    for (auto& v : g) v /= static_cast<double>(d.rows);
    return g;
}

namespace {

// Solves A x = b in place for a symmetric positive-definite A (dense,
// row-major). Throws only if the ridge failed to make A positive.
std::vector<double> cholesky_solve(std::vector<double> a, std::vector<double> b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            if (i == j) {
                if (s <= 0.0) throw std::runtime_error("cholesky: matrix not positive definite");
                a[i * n + i] = std::sqrt(s);
            } else {
                a[i * n + j] = s / a[j * n + j];
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
        b[i] = s / a[i * n + i];
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a[k * n + i] * b[k];
        b[i] = s / a[i * n + i];
    }
    return b;
}

} // namespace

LogisticModel train_logistic(const LabeledData& d, const std::vector<std::string>& names,
                             double tol, std::int32_t max_iter) {
    if (d.rows == 0 || d.cols == 0 || names.size() != d.cols)
        throw std::invalid_argument("train_logistic: bad shapes");

    // standardize columns; constant columns keep sd 1 and end up with weight 0
    std::vector<double> mu(d.cols, 0.0), sd(d.cols, 0.0);
    for (std::size_t r = 0; r < d.rows; ++r)
        for (std::size_t c = 0; c < d.cols; ++c) mu[c] += d.at(r, c);
    for (auto& v : mu) v /= static_cast<double>(d.rows);
    for (std::size_t r = 0; r < d.rows; ++r)
        for (std::size_t c = 0; c < d.cols; ++c) {
            double dx = d.at(r, c) - mu[c];
            sd[c] += dx * dx;
        }
    for (auto& v : sd) {
        v = std::sqrt(v / static_cast<double>(d.rows));
        if (v == 0.0) v = 1.0;
    }
    LabeledData z;
    z.rows = d.rows;
    z.cols = d.cols;
    z.y = d.y;
    z.x.resize(d.x.size());
    for (std::size_t r = 0; r < d.rows; ++r)
        for (std::size_t c = 0; c < d.cols; ++c) z.x[r * d.cols + c] = (d.at(r, c) - mu[c]) / sd[c];

    const std::size_t nw = d.cols + 1;
    std::vector<double> w(nw, 0.0);
    double loss = logistic_loss(z, w);
    LogisticModel m;
    m.feature_names = names;

    std::vector<double> hess(nw * nw);
    std::vector<double> p(z.rows);
    for (; m.iterations < max_iter; ++m.iterations) {
        auto g = logistic_gradient(z, w);
        m.grad_norm = 0.0;
        for (double v : g) m.grad_norm = std::max(m.grad_norm, std::abs(v));
        if (m.grad_norm < tol) {
            m.converged = true;
            break;
        }
        for (std::size_t r = 0; r < z.rows; ++r) {
            const double* x = z.row(r);
            double zz = w[d.cols];
            for (std::size_t c = 0; c < d.cols; ++c) zz += w[c] * x[c];
            p[r] = logistic(zz);
        }
        std::fill(hess.begin(), hess.end(), 0.0);
        for (std::size_t r = 0; r < z.rows; ++r) {
            const double* x = z.row(r);
            double hw = p[r] * (1.0 - p[r]);
            for (std::size_t i = 0; i < d.cols; ++i) {
                double hx = hw * x[i];
                for (std::size_t j = 0; j <= i; ++j) hess[i * nw + j] += hx * x[j];
                hess[d.cols * nw + i] += hx;
            }
            hess[d.cols * nw + d.cols] += hw;
        }
        double inv_n = 1.0 / static_cast<double>(z.rows);
        for (std::size_t i = 0; i < nw; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                hess[i * nw + j] *= inv_n;
                hess[j * nw + i] = hess[i * nw + j];
            }
            hess[i * nw + i] += 1e-8;
        }
        auto step = cholesky_solve(hess, g, nw);

        double scale = 1.0;
        bool accepted = false;
        for (int half = 0; half < 60; ++half) {
            std::vector<double> wn(nw);
            for (std::size_t i = 0; i < nw; ++i) wn[i] = w[i] - scale * step[i];
            double ln = logistic_loss(z, wn);
            if (ln <= loss) {
                w = std::move(wn);
                loss = ln;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if (!accepted) break; // numerically flat; grad_norm already recorded
    }

    m.weights.resize(d.cols);
    m.intercept = w[d.cols];
    for (std::size_t c = 0; c < d.cols; ++c) {
        m.weights[c] = w[c] / sd[c];
        m.intercept -= w[c] * mu[c] / sd[c];
    }
    return m;
}

// ---- trees ----

double tree_predict(const Tree& t, const double* x) {
    std::int32_t n = 0;
    while (t.nodes[static_cast<std::size_t>(n)].feature >= 0) {
        const auto& nd = t.nodes[static_cast<std::size_t>(n)];
        n = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
    }
    return t.nodes[static_cast<std::size_t>(n)].value;
}

namespace {

// Midpoint that is guaranteed to classify a left and b right under
// x <= threshold, even for adjacent doubles.
double split_midpoint(double a, double b) {
    double thr = a + (b - a) * 0.5;
    if (!(thr < b)) thr = a;
    return thr;
}

struct BestSplit {
    double gain = -1.0;
    std::int32_t feature = -1;
    double threshold = 0.0;
};

Tree build_rf_tree(const LabeledData& d, Rng& rng, std::int32_t max_depth) {
    const std::size_t n = d.rows;
    std::vector<std::uint32_t> idx(n);
    for (auto& v : idx) v = static_cast<std::uint32_t>(rng.uniform_u64(n));

    const std::size_t k = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(d.cols)))));
    std::vector<std::int32_t> feats(d.cols);
    std::iota(feats.begin(), feats.end(), 0);

    Tree t;
    struct Item {
        std::int32_t node;
        std::uint32_t begin, end;
        std::int32_t depth;
    };
    std::vector<Item> stack;
    t.nodes.emplace_back();
    t.nodes[0].cover = static_cast<double>(n);
    stack.push_back({0, 0, static_cast<std::uint32_t>(n), 0});

    std::vector<std::pair<double, std::int8_t>> vals;
    while (!stack.empty()) {
        auto [node, begin, end, depth] = stack.back();
        stack.pop_back();
        const std::uint32_t cnt = end - begin;
        std::uint32_t pos = 0;
        for (std::uint32_t i = begin; i < end; ++i) pos += d.y[idx[i]];

        auto make_leaf = [&] {
            t.nodes[static_cast<std::size_t>(node)].value =
                static_cast<double>(pos) / static_cast<double>(cnt);
        };
        if (cnt <= 1 || pos == 0 || pos == cnt || depth >= max_depth) {
            make_leaf();
            continue;
        }

        for (std::size_t i = 0; i < k; ++i) {
            std::size_t j = i + rng.uniform_u64(d.cols - i);
            std::swap(feats[i], feats[j]);
        }

        const double parent_gini =
            2.0 * (static_cast<double>(pos) / cnt) * (1.0 - static_cast<double>(pos) / cnt);
        BestSplit best;
        for (std::size_t fi = 0; fi < k; ++fi) {
            const std::int32_t f = feats[fi];
            vals.clear();
            for (std::uint32_t i = begin; i < end; ++i)
                vals.push_back({d.at(idx[i], static_cast<std::size_t>(f)), d.y[idx[i]]});
            std::sort(vals.begin(), vals.end());
            std::uint32_t lc = 0, lp = 0;
            for (std::uint32_t i = 0; i + 1 < cnt; ++i) {
                ++lc;
                lp += static_cast<std::uint32_t>(vals[i].second);
                if (!(vals[i + 1].first > vals[i].first)) continue;
                const double rc = cnt - lc, rp = pos - lp;
                double pl = static_cast<double>(lp) / lc, pr = rp / rc;
                double gini = (lc * 2.0 * pl * (1.0 - pl) + rc * 2.0 * pr * (1.0 - pr)) /
                              static_cast<double>(cnt);
                double gain = parent_gini - gini;
                if (gain > best.gain) {
                    best = {gain, f, split_midpoint(vals[i].first, vals[i + 1].first)};
                }
            }
        }
        if (best.feature < 0) { // no candidate separates the rows
            make_leaf();
            continue;
        }

        auto mid = std::partition(idx.begin() + begin, idx.begin() + end, [&](std::uint32_t r) {
            return d.at(r, static_cast<std::size_t>(best.feature)) <= best.threshold;
        });
        const auto m = static_cast<std::uint32_t>(mid - idx.begin());
        std::int32_t left = static_cast<std::int32_t>(t.nodes.size());
        t.nodes.emplace_back();
        t.nodes.emplace_back();
        auto& nd = t.nodes[static_cast<std::size_t>(node)];
        nd.feature = best.feature;
        nd.threshold = best.threshold;
        nd.left = left;
        nd.right = left + 1;
        t.nodes[static_cast<std::size_t>(left)].cover = static_cast<double>(m - begin);
        t.nodes[static_cast<std::size_t>(left + 1)].cover = static_cast<double>(end - m);
        stack.push_back({left + 1, m, end, depth + 1});
        stack.push_back({left, begin, m, depth + 1}); // left subtree first
    }
    return t;
}

} // namespace

ForestModel train_random_forest(const LabeledData& d, const std::vector<std::string>& names,
                                std::int32_t trees, std::uint64_t seed, int threads,
                                std::int32_t max_depth) {
    if (d.rows < 2) throw std::invalid_argument("train_random_forest: needs at least 2 rows");
    if (max_depth < 1) throw std::invalid_argument("train_random_forest: max_depth must be >= 1");
    bool any0 = false, any1 = false;
    for (auto y : d.y) (y ? any1 : any0) = true;
    if (!any0 || !any1)
        throw std::invalid_argument("train_random_forest: train rows hold a single class");

    ForestModel m;
    m.feature_names = names;
    m.seed = seed;
    m.trees.resize(static_cast<std::size_t>(trees));
    parallel_for(static_cast<std::size_t>(trees), threads, [&](std::size_t t) {
        Rng rng(derive_seed(seed, t));
        m.trees[t] = build_rf_tree(d, rng, max_depth);
    });
    return m;
}

GbtModel train_gbt(const LabeledData& d, const std::vector<std::string>& names,
                   std::int32_t stages, double learning_rate, std::int32_t max_depth) {
    const std::size_t n = d.rows;
    if (n == 0) throw std::invalid_argument("train_gbt: empty train set");
    double prior = 0.0;
    for (auto y : d.y) prior += y;
    prior /= static_cast<double>(n);
    if (prior <= 0.0 || prior >= 1.0)
        throw std::invalid_argument("train_gbt: train rows hold a single class");

    GbtModel m;
    m.feature_names = names;
    m.learning_rate = learning_rate;
    m.base_score = std::log(prior / (1.0 - prior));

    // global presort per feature, ties broken by row id
    std::vector<std::vector<std::uint32_t>> sorted(d.cols, std::vector<std::uint32_t>(n));
    for (std::size_t f = 0; f < d.cols; ++f) {
        auto& s = sorted[f];
        std::iota(s.begin(), s.end(), 0u);
        std::sort(s.begin(), s.end(), [&](std::uint32_t a, std::uint32_t b) {
            double xa = d.at(a, f), xb = d.at(b, f);
            if (xa != xb) return xa < xb;
            return a < b;
        });
    }

    std::vector<double> margin(n, m.base_score), grad(n), hess_(n);
    std::vector<std::int32_t> node_of(n);
    for (std::int32_t stage = 0; stage < stages; ++stage) {
        for (std::size_t i = 0; i < n; ++i) {
            double p = logistic(margin[i]);
            grad[i] = p - static_cast<double>(d.y[i]);
            hess_[i] = p * (1.0 - p);
        }

        Tree t;
        t.nodes.emplace_back();
        t.nodes[0].cover = static_cast<double>(n);
        std::fill(node_of.begin(), node_of.end(), 0);

        // per-node aggregates, indexed by node id
        std::vector<double> sum_g{0.0}, sum_h{0.0};
        std::vector<std::uint32_t> count{static_cast<std::uint32_t>(n)};
        sum_g[0] = std::accumulate(grad.begin(), grad.end(), 0.0);
        sum_h[0] = std::accumulate(hess_.begin(), hess_.end(), 0.0);

        std::vector<std::int32_t> level{0};
        for (std::int32_t depth = 0; depth < max_depth && !level.empty(); ++depth) {
            const std::size_t width = level.size();
            std::vector<std::int32_t> slot(t.nodes.size(), -1);
            for (std::size_t i = 0; i < width; ++i) slot[static_cast<std::size_t>(level[i])] =
                static_cast<std::int32_t>(i);

            std::vector<BestSplit> best(width);
            std::vector<double> run_g(width), last_x(width);
            std::vector<std::uint32_t> run_c(width);
            std::vector<std::uint8_t> started(width);
            for (std::size_t f = 0; f < d.cols; ++f) {
                std::fill(run_g.begin(), run_g.end(), 0.0);
                std::fill(run_c.begin(), run_c.end(), 0u);
                std::fill(started.begin(), started.end(), std::uint8_t{0});
                for (std::uint32_t r : sorted[f]) {
                    std::int32_t nd = node_of[r];
                    std::int32_t s = slot[static_cast<std::size_t>(nd)];
                    if (s < 0) continue;
                    double xv = d.at(r, f);
                    auto si = static_cast<std::size_t>(s);
                    if (started[si] && xv > last_x[si] && run_c[si] > 0 &&
                        run_c[si] < count[static_cast<std::size_t>(nd)]) {
                        double gl = run_g[si], cl = run_c[si];
                        double gp = sum_g[static_cast<std::size_t>(nd)];
                        double cp = count[static_cast<std::size_t>(nd)];
                        double gr = gp - gl, cr = cp - cl;
                        double gain = gl * gl / cl + gr * gr / cr - gp * gp / cp;
                        if (gain > best[si].gain) {
                            best[si] = {gain, static_cast<std::int32_t>(f),
                                        split_midpoint(last_x[si], xv)};
                        }
                    }
                    run_g[si] += grad[r];
                    run_c[si] += 1;
                    last_x[si] = xv;
                    started[si] = 1;
                }
            }

            std::vector<std::int32_t> next;
            bool any_split = false;
            for (std::size_t i = 0; i < width; ++i) {
                if (best[i].gain <= 1e-12 || best[i].feature < 0) continue;
                any_split = true;
                auto node = static_cast<std::size_t>(level[i]);
                std::int32_t left = static_cast<std::int32_t>(t.nodes.size());
                t.nodes.emplace_back();
                t.nodes.emplace_back();
                t.nodes[node].feature = best[i].feature;
                t.nodes[node].threshold = best[i].threshold;
                t.nodes[node].left = left;
                t.nodes[node].right = left + 1;
                sum_g.resize(t.nodes.size(), 0.0);
                sum_h.resize(t.nodes.size(), 0.0);
                count.resize(t.nodes.size(), 0);
                next.push_back(left);
                next.push_back(left + 1);
            }
            if (!any_split) break;
            for (std::size_t r = 0; r < n; ++r) {
                auto node = static_cast<std::size_t>(node_of[r]);
                if (t.nodes[node].feature < 0) continue;
                std::int32_t child = d.at(r, static_cast<std::size_t>(t.nodes[node].feature)) <=
                                             t.nodes[node].threshold
                                         ? t.nodes[node].left
                                         : t.nodes[node].right;
                node_of[r] = child;
                auto ci = static_cast<std::size_t>(child);
                sum_g[ci] += grad[r];
                sum_h[ci] += hess_[r];
                count[ci] += 1;
            }
            for (std::int32_t nd : next)
                t.nodes[static_cast<std::size_t>(nd)].cover = count[static_cast<std::size_t>(nd)];
            level = std::move(next);
        }

        for (std::size_t nd = 0; nd < t.nodes.size(); ++nd)
            if (t.nodes[nd].feature < 0)
                t.nodes[nd].value = learning_rate * (-sum_g[nd] / (sum_h[nd] + 1e-12));

        for (std::size_t r = 0; r < n; ++r)
            margin[r] += t.nodes[static_cast<std::size_t>(node_of[r])].value;
        m.trees.push_back(std::move(t));
    }
    return m;
}

std::vector<double> gbt_stagewise_loss(const GbtModel& m, const LabeledData& d) {
    std::vector<double> margin(d.rows, m.base_score);
    std::vector<double> out;
    auto mean_loss = [&] {
        double s = 0.0;
        for (std::size_t r = 0; r < d.rows; ++r) {
            double p = logistic(margin[r]);
            s -= d.y[r] ? std::log(p) : std::log(1.0 - p);
        }
        return s / static_cast<double>(d.rows);
    };
    out.push_back(mean_loss());
    for (const auto& t : m.trees) {
        for (std::size_t r = 0; r < d.rows; ++r) margin[r] += tree_predict(t, d.row(r));
        out.push_back(mean_loss());
    }
    return out;
}

// ---- prediction & evaluation ----

std::vector<double> predict(const LogisticModel& m, const LabeledData& d, int threads) {
    if (m.weights.size() != d.cols) throw std::invalid_argument("predict: column mismatch");
    std::vector<double> p(d.rows);
    parallel_for(d.rows, threads, [&](std::size_t r) {
        const double* x = d.row(r);
        double z = m.intercept;
        for (std::size_t c = 0; c < d.cols; ++c) z += m.weights[c] * x[c];
        p[r] = logistic(z);
    });
    return p;
}

std::vector<double> predict(const ForestModel& m, const LabeledData& d, int threads) {
    if (m.feature_names.size() != d.cols) throw std::invalid_argument("predict: column mismatch");
    std::vector<double> p(d.rows);
    parallel_for(d.rows, threads, [&](std::size_t r) {
        double s = 0.0;
        for (const auto& t : m.trees) s += tree_predict(t, d.row(r));
        p[r] = s / static_cast<double>(m.trees.size());
    });
    return p;
}

std::vector<double> predict(const GbtModel& m, const LabeledData& d, int threads) {
    if (m.feature_names.size() != d.cols) throw std::invalid_argument("predict: column mismatch");
    std::vector<double> p(d.rows);
    parallel_for(d.rows, threads, [&](std::size_t r) {
        double z = m.base_score;
        for (const auto& t : m.trees) z += tree_predict(t, d.row(r));
        p[r] = logistic(z);
    });
    return p;
}

EvalReport evaluate(const std::vector<double>& probs, const std::vector<std::int8_t>& labels) {
    if (probs.size() != labels.size() || probs.empty())
        throw std::invalid_argument("evaluate: size mismatch or empty test");
    EvalReport e;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        bool pred = probs[i] > 0.5;
        bool truth = labels[i] != 0;
        if (pred && truth) ++e.tp;
        else if (pred && !truth) ++e.fp;
        else if (!pred && !truth) ++e.tn;
        else ++e.fn;
    }
    auto ratio = [](double num, double den) { return den > 0.0 ? num / den : 0.0; };
    e.precision1 = ratio(e.tp, e.tp + e.fp);
    e.recall1 = ratio(e.tp, e.tp + e.fn);
    e.f1_1 = ratio(2.0 * e.precision1 * e.recall1, e.precision1 + e.recall1);
    e.precision0 = ratio(e.tn, e.tn + e.fn);
    e.recall0 = ratio(e.tn, e.tn + e.fp);
    e.f1_0 = ratio(2.0 * e.precision0 * e.recall0, e.precision0 + e.recall0);
    e.macro_f1 = 0.5 * (e.f1_0 + e.f1_1);
    e.tn_rate = ratio(e.tn, e.tn + e.fp);
    return e;
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json j;
    j["confusion"] = {{"tp", tp}, {"fp", fp}, {"tn", tn}, {"fn", fn}};
    j["precision"] = {{"class0", precision0}, {"class1", precision1}};
    j["recall"] = {{"class0", recall0}, {"class1", recall1}};
    j["f1"] = {{"class0", f1_0}, {"class1", f1_1}};
    j["macro_f1"] = macro_f1;
    j["tn_rate"] = tn_rate;
    return j;
}

// ---- serialization ----

namespace {

std::string names_hash(const std::vector<std::string>& names) {
    std::uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a over newline-joined names
    auto mix = [&](unsigned char c) {
        h ^= c;
        h *= 0x100000001b3ULL;
    };
    for (const auto& n : names) {
        for (unsigned char c : n) mix(c);
        mix('\n');
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

nlohmann::json tree_to_json(const Tree& t) {
    nlohmann::json j;
    auto& f = j["feature"] = nlohmann::json::array();
    auto& th = j["threshold"] = nlohmann::json::array();
    auto& l = j["left"] = nlohmann::json::array();
    auto& r = j["right"] = nlohmann::json::array();
    auto& v = j["value"] = nlohmann::json::array();
    auto& c = j["cover"] = nlohmann::json::array();
    for (const auto& n : t.nodes) {
        f.push_back(n.feature);
        th.push_back(n.threshold);
        l.push_back(n.left);
        r.push_back(n.right);
        v.push_back(n.value);
        c.push_back(n.cover);
    }
    return j;
}

Tree tree_from_json(const nlohmann::json& j) {
    Tree t;
    const auto& f = j.at("feature");
    const std::size_t n = f.size();
    t.nodes.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        t.nodes[i].feature = f[i].get<std::int32_t>();
        t.nodes[i].threshold = j.at("threshold")[i].get<double>();
        t.nodes[i].left = j.at("left")[i].get<std::int32_t>();
        t.nodes[i].right = j.at("right")[i].get<std::int32_t>();
        t.nodes[i].value = j.at("value")[i].get<double>();
        t.nodes[i].cover = j.at("cover")[i].get<double>();
    }
    return t;
}

void put_common(nlohmann::json& j, const char* type, const std::vector<std::string>& names) {
    j["type"] = type;
    j["version"] = 1;
    j["feature_names"] = names;
    j["feature_hash"] = names_hash(names);
}

std::vector<std::string> get_names(const nlohmann::json& j) {
    if (j.at("version").get<int>() != 1)
        throw std::runtime_error("model file: unsupported version");
    auto names = j.at("feature_names").get<std::vector<std::string>>();
    if (j.at("feature_hash").get<std::string>() != names_hash(names))
        throw std::runtime_error("model file: feature hash does not match the name list");
    return names;
}

} // namespace

nlohmann::json model_to_json(const AnyModel& m) {
    nlohmann::json j;
    if (const auto* lg = std::get_if<LogisticModel>(&m)) {
        put_common(j, "logistic", lg->feature_names);
        j["weights"] = lg->weights;
        j["intercept"] = lg->intercept;
        j["converged"] = lg->converged;
        j["grad_norm"] = lg->grad_norm;
        j["iterations"] = lg->iterations;
    } else if (const auto* rf = std::get_if<ForestModel>(&m)) {
        put_common(j, "random_forest", rf->feature_names);
        j["seed"] = rf->seed;
        auto& trees = j["trees"] = nlohmann::json::array();
        for (const auto& t : rf->trees) trees.push_back(tree_to_json(t));
    } else {
        const auto& gb = std::get<GbtModel>(m);
        put_common(j, "gbt", gb.feature_names);
        j["base_score"] = gb.base_score;
        j["learning_rate"] = gb.learning_rate;
        auto& trees = j["trees"] = nlohmann::json::array();
        for (const auto& t : gb.trees) trees.push_back(tree_to_json(t));
    }
    return j;
}

AnyModel model_from_json(const nlohmann::json& j) {
    const auto type = j.at("type").get<std::string>();
    if (type == "logistic") {
        LogisticModel m;
        m.feature_names = get_names(j);
        m.weights = j.at("weights").get<std::vector<double>>();
        m.intercept = j.at("intercept").get<double>();
        m.converged = j.at("converged").get<bool>();
        m.grad_norm = j.at("grad_norm").get<double>();
        m.iterations = j.at("iterations").get<std::int32_t>();
        return m;
    }
    if (type == "random_forest") {
        ForestModel m;
        m.feature_names = get_names(j);
        m.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t));
        return m;
    }
    if (type == "gbt") {
        GbtModel m;
        m.feature_names = get_names(j);
        m.base_score = j.at("base_score").get<double>();
        m.learning_rate = j.at("learning_rate").get<double>();
        for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t));
        return m;
    }
    throw ValidationError("model file: unknown type " + type);
}

void check_features(const AnyModel& m, const std::vector<std::string>& names) {
    const auto& have = std::visit([](const auto& mm) -> const std::vector<std::string>& {
        return mm.feature_names;
    }, m);
    if (have != names)
        throw ValidationError("model was fit on a different feature catalogue than the "
                              "matrix provides");
}

std::vector<double> predict(const AnyModel& m, const LabeledData& d, int threads) {
    return std::visit([&](const auto& mm) { return predict(mm, d, threads); }, m);
}

} // namespace adoptkit
