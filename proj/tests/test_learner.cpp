#include "adoptkit/learner.hpp"
#include "adoptkit/stats.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

using namespace adoptkit;

namespace {

// two interleaved Gaussian blobs per quadrant: XOR in the first two features
FeatureMatrix xor_matrix(std::size_t n, std::uint64_t seed, double jitter = 0.3) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, jitter);
    std::vector<double> rows;
    std::vector<std::int8_t> labels;
    for (std::size_t i = 0; i < n; ++i) {
        const int qa = int(rng() & 1), qb = int(rng() & 1);
        const double x = (qa ? 1.0 : -1.0) + noise(rng);
        const double y = (qb ? 1.0 : -1.0) + noise(rng);
        rows.insert(rows.end(), {x, y, noise(rng)});
        labels.push_back(std::int8_t(qa ^ qb));
    }
    return fixtures::make_matrix({"u", "v", "junk"}, rows, labels);
}

LabeledData all_rows(const FeatureMatrix& m) {
    std::vector<std::size_t> idx(m.rows);
    std::iota(idx.begin(), idx.end(), 0);
    return gather(m, idx);
}

double accuracy(const std::vector<double>& p, const std::vector<std::int8_t>& y) {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < p.size(); ++i) ok += (p[i] > 0.5) == (y[i] != 0);
    return double(ok) / double(p.size());
}

} // namespace

TEST_CASE("temporal split keeps whole boundary dates in train") {
    const FeatureMatrix m = fixtures::make_matrix(
        {"f"}, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, {0, 1, 0, 1, 0, 1, 0, 1, 0, 1},
        {10, 10, 20, 20, 30, 30, 30, 40, 50, 60});
    const Split s = temporal_split(m, 0.8);
    CHECK(s.boundary == 40);
    CHECK(s.train == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7});
    CHECK(s.test == std::vector<std::size_t>{8, 9});

    // the boundary date drags its whole day across the cut
    const Split s2 = temporal_split(m, 0.5);
    CHECK(s2.boundary == 30);
    CHECK(s2.train.size() == 7);
    CHECK(s2.test.size() == 3);

    CHECK_THROWS_AS(temporal_split(m, 0.999), std::invalid_argument); // empty test
    FeatureMatrix bad = m;
    std::swap(bad.date[0], bad.date[9]);
    CHECK_THROWS_AS(temporal_split(bad, 0.8), std::invalid_argument);
}

TEST_CASE("downsampling equalizes classes and keeps the minority intact") {
    std::vector<double> xs(53, 0.0);
    std::vector<std::int8_t> ys(53, 0);
    ys[5] = ys[17] = ys[40] = 1;
    const FeatureMatrix m = fixtures::make_matrix({"f"}, xs, ys);
    std::vector<std::size_t> rows(m.rows);
    std::iota(rows.begin(), rows.end(), 0);

    const auto picked = downsample_majority(m, rows, 7);
    CHECK(picked.size() == 6);
    CHECK(std::is_sorted(picked.begin(), picked.end()));
    int ones = 0;
    for (auto r : picked) ones += m.label[r];
    CHECK(ones == 3);

    CHECK(downsample_majority(m, rows, 7) == picked);
    CHECK(downsample_majority(m, rows, 8) != picked);

    std::vector<std::int8_t> flat(53, 0);
    const FeatureMatrix one_class = fixtures::make_matrix({"f"}, xs, flat);
    CHECK_THROWS_AS(downsample_majority(one_class, rows, 7), std::invalid_argument);
}

TEST_CASE("gather copies the requested rows verbatim") {
    const FeatureMatrix m = fixtures::make_matrix({"a", "b"}, {1, 2, 3, 4, 5, 6, 7, 8},
                                                  {0, 1, 0, 1});
    const LabeledData d = gather(m, {3, 1});
    REQUIRE(d.rows == 2);
    REQUIRE(d.cols == 2);
    CHECK(d.at(0, 0) == 7.0);
    CHECK(d.at(0, 1) == 8.0);
    CHECK(d.at(1, 0) == 3.0);
    CHECK(d.y == std::vector<std::int8_t>{1, 1});
}

TEST_CASE("analytic logistic gradient matches finite differences") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 1.0);
    const std::size_t n = 40, c = 3;
    std::vector<double> xs(n * c);
    std::vector<std::int8_t> ys(n);
    for (auto& v : xs) v = g(rng);
    for (auto& y : ys) y = std::int8_t(rng() & 1);
    const FeatureMatrix m = fixtures::make_matrix({"a", "b", "c"}, xs, ys);
    const LabeledData d = all_rows(m);

    std::vector<double> w = {0.3, -0.8, 0.1, 0.25}; // last entry intercept
    const auto grad = logistic_gradient(d, w);
    REQUIRE(grad.size() == c + 1);
    const double h = 1e-6;
    for (std::size_t k = 0; k <= c; ++k) {
        auto wp = w, wm = w;
        wp[k] += h;
        wm[k] -= h;
        const double fd = (logistic_loss(d, wp) - logistic_loss(d, wm)) / (2 * h);
        CHECK(grad[k] == doctest::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("logistic separates what is separable") {
    std::vector<double> xs;
    std::vector<std::int8_t> ys;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 0.25);
    for (int i = 0; i < 60; ++i) {
        const int y = i & 1;
        xs.push_back((y ? 2.0 : -2.0) + g(rng));
        xs.push_back(g(rng));
        ys.push_back(std::int8_t(y));
    }
    const FeatureMatrix m = fixtures::make_matrix({"signal", "nuisance"}, xs, ys);
    const LabeledData d = all_rows(m);
    const LogisticModel lm = train_logistic(d, m.names);
    CHECK(accuracy(predict(lm, d), d.y) == 1.0);
    CHECK(lm.weights.size() == 2);
    CHECK(lm.weights[0] > 0.0);
    CHECK(std::abs(lm.weights[0]) > std::abs(lm.weights[1]));
}

TEST_CASE("affine feature rescaling leaves logistic predictions alone") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> xs;
    std::vector<std::int8_t> ys;
    for (int i = 0; i < 200; ++i) {
        const double a = g(rng), b = g(rng);
        xs.push_back(a);
        xs.push_back(b);
        ys.push_back(std::int8_t(a + 0.5 * b + 0.3 * g(rng) > 0));
    }
    const FeatureMatrix m = fixtures::make_matrix({"a", "b"}, xs, ys);
    FeatureMatrix scaled = m;
    for (std::size_t r = 0; r < m.rows; ++r) {
        scaled.x[r * 2] = m.at(r, 0) * 250.0 - 17.0;
        scaled.x[r * 2 + 1] = m.at(r, 1) * 0.004 + 3.0;
    }
    const LabeledData d1 = all_rows(m);
    const LabeledData d2 = all_rows(scaled);
    const auto p1 = predict(train_logistic(d1, m.names), d1);
    const auto p2 = predict(train_logistic(d2, m.names), d2);
    for (std::size_t i = 0; i < p1.size(); ++i)
        CHECK(p1[i] == doctest::Approx(p2[i]).epsilon(1e-4));
}

TEST_CASE("forest cracks xor where the linear model cannot") {
    const FeatureMatrix m = xor_matrix(400, 11);
    const LabeledData d = all_rows(m);

    const ForestModel rf = train_random_forest(d, m.names, 25, 1);
    CHECK(accuracy(predict(rf, d), d.y) >= 0.95);

    const LogisticModel lm = train_logistic(d, m.names);
    CHECK(accuracy(predict(lm, d), d.y) < 0.70);
}

TEST_CASE("forest training is seed-deterministic and thread-invariant") {
    const FeatureMatrix m = xor_matrix(200, 13);
    const LabeledData d = all_rows(m);
    const ForestModel a = train_random_forest(d, m.names, 10, 42, 1);
    const ForestModel b = train_random_forest(d, m.names, 10, 42, 3);
    REQUIRE(a.trees.size() == b.trees.size());
    CHECK(predict(a, d) == predict(b, d));

    const ForestModel c = train_random_forest(d, m.names, 10, 43, 1);
    CHECK(predict(a, d) != predict(c, d));
}

TEST_CASE("first boosting stage is the exact greedy variance split") {
    const FeatureMatrix m =
        fixtures::make_matrix({"x"}, {1, 2, 3, 4}, {0, 0, 1, 1}, {10, 11, 12, 13});
    const LabeledData d = all_rows(m);
    const GbtModel g = train_gbt(d, m.names, 1, 0.1, 1);

    CHECK(g.base_score == doctest::Approx(0.0)); // log-odds of one half
    REQUIRE(g.trees.size() == 1);
    const Tree& t = g.trees[0];
    REQUIRE(t.nodes.size() == 3);
    CHECK(t.nodes[0].feature == 0);
    CHECK(t.nodes[0].threshold == doctest::Approx(2.5));

    // Newton leaf: sum(residual) / sum(p(1-p)) = +-1/0.5, shrunk by 0.1
    const double lv = t.nodes[t.nodes[0].left].value;
    const double rv = t.nodes[t.nodes[0].right].value;
    CHECK(lv == doctest::Approx(-0.2).epsilon(1e-12));
    CHECK(rv == doctest::Approx(0.2).epsilon(1e-12));

    const auto p = predict(g, d);
    CHECK(p[0] == doctest::Approx(logistic(-0.2)).epsilon(1e-12));
    CHECK(p[3] == doctest::Approx(logistic(0.2)).epsilon(1e-12));
}

TEST_CASE("boosting loss decreases stage over stage") {
    const FeatureMatrix m = xor_matrix(300, 17);
    const LabeledData d = all_rows(m);
    const GbtModel g = train_gbt(d, m.names, 25, 0.1, 3);
    const auto losses = gbt_stagewise_loss(g, d);
    REQUIRE(losses.size() == 26);
    for (std::size_t i = 1; i < losses.size(); ++i) {
        CAPTURE(i);
        CHECK(losses[i] <= losses[i - 1] + 1e-12);
    }
    CHECK(losses.back() < losses.front() - 0.1);
    CHECK(accuracy(predict(g, d), d.y) >= 0.95);
}

TEST_CASE("confusion arithmetic and the strict half threshold") {
    const std::vector<double> p = {0.9, 0.4, 0.6, 0.2, 0.5};
    const std::vector<std::int8_t> y = {1, 0, 0, 0, 1};
    const EvalReport e = evaluate(p, y);
    CHECK(e.tp == 1);
    CHECK(e.fp == 1);
    CHECK(e.tn == 2);
    CHECK(e.fn == 1); // p = 0.5 is not class 1
    CHECK(e.precision1 == doctest::Approx(0.5));
    CHECK(e.recall1 == doctest::Approx(0.5));
    CHECK(e.f1_1 == doctest::Approx(0.5));
    CHECK(e.precision0 == doctest::Approx(2.0 / 3.0));
    CHECK(e.recall0 == doctest::Approx(2.0 / 3.0));
    CHECK(e.macro_f1 == doctest::Approx(0.5 * (0.5 + 2.0 / 3.0)));
    CHECK(e.tn_rate == doctest::Approx(2.0 / 3.0));
    CHECK_THROWS_AS(evaluate({}, {}), std::invalid_argument);
}

TEST_CASE("models survive json serialization with identical predictions") {
    const FeatureMatrix m = xor_matrix(150, 23);
    const LabeledData d = all_rows(m);

    const AnyModel lm = train_logistic(d, m.names);
    const AnyModel rf = train_random_forest(d, m.names, 8, 5);
    const AnyModel gb = train_gbt(d, m.names, 8);
    for (const AnyModel* src : {&lm, &rf, &gb}) {
        const AnyModel back = model_from_json(model_to_json(*src));
        CHECK(back.index() == src->index());
        CHECK(predict(back, d) == predict(*src, d));
        CHECK_NOTHROW(check_features(back, m.names));
        CHECK_THROWS_AS(check_features(back, std::vector<std::string>{"u", "v"}),
                        ValidationError);
    }
}
