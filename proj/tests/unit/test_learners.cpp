#include "iuprobe/evaluation.hpp"
#include "iuprobe/learners.hpp"

#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace iuprobe;

namespace {

/// Two noisy informative columns, one pure-noise column and a constant column.
Dataset noisy_dataset(std::uint64_t seed, std::size_t n, double positive_rate = 0.3) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0, 1);
    std::bernoulli_distribution pos(positive_rate);
    Dataset d;
    d.cols = 4;
    d.feature_names = {"a", "b", "noise", "const"};
    for (std::size_t i = 0; i < n; ++i) {
        const int y = pos(rng) ? 1 : 0;
        d.x.push_back(z(rng) + 1.2 * y);
        d.x.push_back(std::round(2 * (z(rng) - 0.8 * y)) / 2);
        d.x.push_back(z(rng));
        d.x.push_back(3.0);
        d.y.push_back(y);
        d.ids.push_back("r" + std::to_string(i));
    }
    return d;
}

double logloss(const TreeEnsemble& e, const Dataset& d) {
    double s = 0;
    for (std::size_t i = 0; i < d.rows(); ++i) {
        const double p = e.probability(d.row(i));
        s -= d.y[i] ? std::log(p) : std::log(1 - p);
    }
    return s / static_cast<double>(d.rows());
}

}  // namespace

TEST_SUITE("gbdt") {
    TEST_CASE("depth-one stump closed form") {
        Dataset d;
        d.cols = 1;
        d.feature_names = {"x"};
        d.x = {0, 0, 1, 1};
        d.y = {0, 0, 1, 1};
        GbdtParams p;
        p.trees = 1;
        p.max_depth = 1;
        p.learning_rate = 1.0;
        p.l2 = 0.0;
        p.min_child_weight = 0.1;
        const auto m = train_gbdt(d, p);
        CHECK(m.base_score == 0.0);
        REQUIRE(m.trees.size() == 1);
        const auto& root = m.trees[0].nodes[0];
        CHECK(root.feature == 0);
        CHECK(root.threshold == 0.5);
        CHECK(m.trees[0].nodes[static_cast<std::size_t>(root.left)].value == doctest::Approx(-2.0));
        CHECK(m.trees[0].nodes[static_cast<std::size_t>(root.right)].value == doctest::Approx(2.0));
        CHECK(root.cover == 4.0);
    }

    TEST_CASE("training loss never increases") {
        for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
            const auto d = noisy_dataset(seed, 300);
            GbdtParams p;
            p.trees = 60;
            p.max_depth = 4;
            p.learning_rate = 0.5;
            GbdtTrace trace;
            const auto m = train_gbdt(d, p, &trace);
            REQUIRE(trace.loss.size() == 61);
            for (std::size_t t = 1; t < trace.loss.size(); ++t) CHECK(trace.loss[t] <= trace.loss[t - 1]);
            // the trace holds the summed (weighted) loss
            CHECK(trace.loss.back() == doctest::Approx(logloss(m, d) * static_cast<double>(d.rows())).epsilon(1e-9));
            m.validate();
        }
    }

    TEST_CASE("class weighting, serialisation and one-class data") {
        const auto d = noisy_dataset(9, 200);
        GbdtParams p;
        p.trees = 20;
        p.positive_weight = 3.0;
        const auto m = train_gbdt(d, p);
        const double wpos = 3.0 * static_cast<double>(d.positives());
        CHECK(m.base_score == doctest::Approx(std::log(wpos / static_cast<double>(d.rows() - d.positives()))));
        const auto back = TreeEnsemble::deserialize(m.serialize());
        CHECK(back.serialize() == m.serialize());
        for (std::size_t i = 0; i < d.rows(); ++i) CHECK(back.raw_output(d.row(i)) == m.raw_output(d.row(i)));
        CHECK_THROWS_AS(TreeEnsemble::deserialize("garbage"), ValidationError);

        Dataset one = d;
        std::fill(one.y.begin(), one.y.end(), 0);
        CHECK_THROWS_AS(train_gbdt(one, p), DegenerateDataError);
    }

    TEST_CASE("validate catches inconsistent covers") {
        auto m = train_gbdt(noisy_dataset(4, 100), GbdtParams{});
        m.trees[0].nodes[0].cover += 1.0;
        CHECK_THROWS_AS(m.validate(), ValidationError);
    }
}

TEST_SUITE("random forest") {
    TEST_CASE("seeded determinism, probability scale and prefix truncation") {
        const auto d = noisy_dataset(5, 250);
        ForestParams p;
        p.trees = 30;
        p.seed = 77;
        const auto a = train_random_forest(d, p);
        const auto b = train_random_forest(d, p);
        CHECK(a.serialize() == b.serialize());
        CHECK(a.kind == EnsembleKind::RandomForest);
        for (std::size_t i = 0; i < d.rows(); ++i) {
            const double prob = a.probability(d.row(i));
            CHECK(prob >= 0.0);
            CHECK(prob <= 1.0);
        }
        ForestParams small = p;
        small.trees = 10;
        const auto s = train_random_forest(d, small);
        const auto cut = truncate_ensemble(a, 10);
        for (std::size_t i = 0; i < d.rows(); ++i)
            CHECK(cut.raw_output(d.row(i)) == doctest::Approx(s.raw_output(d.row(i))).epsilon(1e-12));
        p.seed = 78;
        CHECK(train_random_forest(d, p).serialize() != a.serialize());
    }

    TEST_CASE("depth cap") {
        ForestParams p;
        p.trees = 5;
        p.max_depth = 2;
        const auto m = train_random_forest(noisy_dataset(6, 200), p);
        for (const auto& t : m.trees) CHECK(t.depth() <= 2);
    }
}

TEST_SUITE("logistic") {
    TEST_CASE("Newton solution matches gradient descent") {
        for (double l2 : {0.01, 0.1, 1.0}) {
            const auto d = noisy_dataset(12, 150);
            const auto m = train_logistic(d, LogisticParams{l2, 100, 1e-10});
            CHECK(m.converged);
            const auto ref = oracle::logistic_gd(d, l2);
            CHECK(m.intercept == doctest::Approx(ref.intercept).epsilon(1e-4));
            for (std::size_t j = 0; j < d.cols; ++j) CHECK(std::abs(m.coef[j] - ref.coef[j]) < 1e-4);
            CHECK(m.coef[3] == 0.0);
            CHECK(m.scale[3] == 0.0);
        }
    }

    TEST_CASE("parameter validation") {
        const auto d = noisy_dataset(1, 50);
        CHECK_THROWS_AS(train_logistic(d, LogisticParams{-1.0, 10, 1e-8}), ValidationError);
    }
}

TEST_SUITE("generic learner surface") {
    TEST_CASE("fit, predict, describe") {
        const auto d = noisy_dataset(3, 120);
        const auto maj = fit(d, MajorityParams{}, 0);
        const auto p = predict_proba(maj, d);
        CHECK(p[0] == doctest::Approx(static_cast<double>(d.positives()) / static_cast<double>(d.rows())));
        CHECK(threshold_labels(std::vector<double>{0.5, 0.51, 0.2}) == std::vector<int>{0, 1, 0});
        CHECK(learner_name(GbdtParams{}) == "gbdt");
        CHECK(describe(ForestParams{}) == "random_forest(trees=100 depth=inf mtry=0)");
        CHECK(describe(LogisticParams{}) == "logistic(l2=1)");
        CHECK(describe(MajorityParams{}) == "majority()");
        GbdtParams shallow, deep;
        deep.max_depth = 6;
        CHECK(complexity(shallow) < complexity(deep));
        CHECK(complexity(LogisticParams{1.0}) < complexity(LogisticParams{0.1}));
    }
}

TEST_SUITE("evaluation") {
    TEST_CASE("metric example") {
        const std::vector<int> truth{1, 1, 0, 0, 0, 0};
        const std::vector<int> pred{1, 0, 0, 0, 0, 0};
        const auto m = evaluate(pred, truth);
        CHECK(m.accuracy == doctest::Approx(5.0 / 6.0));
        CHECK(m.precision_macro == doctest::Approx(0.9));
        CHECK(m.recall_macro == doctest::Approx(0.75));
        CHECK(m.f1_macro == doctest::Approx((2.0 / 3.0 + 8.0 / 9.0) / 2.0));
    }

    TEST_CASE("undefined precision is zero with a warning") {
        const std::vector<int> truth{1, 0, 0, 0};
        const std::vector<int> pred{0, 0, 0, 0};
        Diagnostics d;
        const auto m = evaluate(pred, truth, &d);
        CHECK(m.recall_macro == doctest::Approx(0.5));
        CHECK(m.precision_macro == doctest::Approx(0.375));
        CHECK(d.count() >= 1);
        CHECK_THROWS_AS(evaluate(std::vector<int>{0}, truth), ValidationError);
        CHECK_THROWS_AS(evaluate(std::vector<int>{2}, std::vector<int>{1}), ValidationError);
    }

    TEST_CASE("stratified split and folds") {
        std::vector<int> labels(203, 0);
        for (std::size_t i = 0; i < 23; ++i) labels[i * 7] = 1;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const auto s = stratified_split(labels, 0.2, seed);
            std::size_t test_pos = 0;
            for (std::size_t i : s.test) test_pos += static_cast<std::size_t>(labels[i]);
            CHECK(std::abs(static_cast<double>(test_pos) - 0.2 * 23) <= 1.0);
            CHECK(std::abs(static_cast<double>(s.test.size() - test_pos) - 0.2 * 180) <= 1.0);
            CHECK(s.train.size() + s.test.size() == labels.size());
            CHECK(std::is_sorted(s.test.begin(), s.test.end()));
        }
        const auto folds = stratified_folds(labels, 5, 3);
        std::vector<int> seen(labels.size(), 0);
        for (const auto& f : folds) {
            std::size_t pos = 0;
            for (std::size_t i : f) {
                ++seen[i];
                pos += static_cast<std::size_t>(labels[i]);
            }
            CHECK((pos == 4 || pos == 5));
        }
        CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
        CHECK_THROWS_AS(stratified_folds(std::vector<int>{1, 1, 0, 0, 0, 0}, 3, 0), ValidationError);
        CHECK_THROWS_AS(stratified_split(std::vector<int>{1, 0, 0}, 0.2, 0), ValidationError);
    }

    TEST_CASE("cross-validation: prefix scoring matches separate fits") {
        const auto d = noisy_dataset(21, 200);
        std::vector<LearnerParams> grid;
        for (int trees : {5, 15}) {
            GbdtParams p;
            p.trees = trees;
            p.max_depth = 2;
            grid.emplace_back(p);
        }
        const auto cv = cross_validate(d, grid, 4, 99);
        REQUIRE(cv.mean_f1.size() == 2);

        // recompute the 5-tree score without the shared fit
        const auto folds = stratified_folds(d.y, 4, 99);
        double total = 0;
        for (std::size_t f = 0; f < folds.size(); ++f) {
            std::vector<char> in(d.rows(), 0);
            for (std::size_t i : folds[f]) in[i] = 1;
            std::vector<std::size_t> tr;
            for (std::size_t i = 0; i < d.rows(); ++i)
                if (!in[i]) tr.push_back(i);
            const auto fitted = fit(d.subset(tr), grid[0], 0);
            const auto valid = d.subset(folds[f]);
            total += evaluate(threshold_labels(predict_proba(fitted, valid)), valid.y).f1_macro;
        }
        CHECK(cv.mean_f1[0] == doctest::Approx(total / 4.0).epsilon(1e-12));
        CHECK(cv.best_index == (cv.mean_f1[1] > cv.mean_f1[0] + 1e-12 ? 1u : 0u));

        const std::vector<LearnerParams> single{LogisticParams{}};
        const auto one = cross_validate(d, single, 4, 1);
        CHECK(one.best_index == 0);
        CHECK(std::isnan(one.mean_f1[0]));
    }

    TEST_CASE("ties go to the simpler model") {
        const auto d = noisy_dataset(2, 100);
        const std::vector<LearnerParams> grid{MajorityParams{}, LogisticParams{0.5}, LogisticParams{1e6}};
        // a huge penalty collapses logistic to the majority rule, tying it with the baseline
        const auto cv = cross_validate(d, grid, 3, 5);
        CHECK(cv.mean_f1[2] == doctest::Approx(cv.mean_f1[0]));
        CHECK(cv.best_index == 0);
    }
}
