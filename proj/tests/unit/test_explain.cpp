#include "iuprobe/explain.hpp"
#include "iuprobe/learners.hpp"

#include "support/oracles.hpp"

#include <doctest.h>

#include <filesystem>
#include <random>
#include <sstream>

using namespace iuprobe;

namespace {

TreeEnsemble random_ensemble(std::mt19937_64& rng, std::size_t features, std::size_t trees) {
    TreeEnsemble e;
    for (std::size_t j = 0; j < features; ++j) e.feature_names.push_back("f" + std::to_string(j));
    e.base_score = std::normal_distribution<double>(0, 1)(rng);
    for (std::size_t t = 0; t < trees; ++t) e.trees.push_back(oracle::random_tree(rng, features, 4));
    e.validate();
    return e;
}

std::vector<double> random_input(std::mt19937_64& rng, std::size_t features) {
    std::vector<double> x(features);
    // an eighth grid so inputs often sit exactly on thresholds
    for (auto& v : x) v = static_cast<double>(rng() % 9) / 8.0;
    return x;
}

}  // namespace

TEST_CASE("depth-one closed form") {
    // one stump on feature 0: left value -1 (cover 3), right value 2 (cover 1)
    TreeEnsemble e;
    e.feature_names = {"a", "b"};
    e.base_score = 0.5;
    Tree t;
    t.nodes = {TreeNode{0, 0.5, 1, 2, 0, 4}, TreeNode{-1, 0, -1, -1, -1.0, 3}, TreeNode{-1, 0, -1, -1, 2.0, 1}};
    e.trees.push_back(t);
    const double expected = 0.5 + (3 * -1.0 + 1 * 2.0) / 4;
    CHECK(expected_output(e) == doctest::Approx(expected));
    const std::vector<double> x{0.9, 0.0};
    const auto row = tree_shap(e, x, "u1");
    CHECK(row.user_id == "u1");
    CHECK(row.base_value == doctest::Approx(expected));
    CHECK(row.contributions[0] == doctest::Approx(2.0 - (-0.25)));
    CHECK(row.contributions[1] == 0.0);
    CHECK(row.output() == doctest::Approx(e.raw_output(x)));
}

TEST_CASE("tree_shap equals both brute-force enumerations on random ensembles") {
    std::mt19937_64 rng(2024);
    for (int rep = 0; rep < 60; ++rep) {
        const std::size_t m = 1 + rng() % 6;
        const auto e = random_ensemble(rng, m, 1 + rng() % 4);
        const auto x = random_input(rng, m);
        const auto fast = tree_shap(e, x);
        const auto slow = brute_force_shap(e, x);
        const auto ref = oracle::shapley(e, x);
        CHECK(fast.base_value == doctest::Approx(slow.base_value).epsilon(1e-12));
        for (std::size_t j = 0; j < m; ++j) {
            CHECK(std::abs(fast.contributions[j] - slow.contributions[j]) < 1e-10);
            CHECK(std::abs(fast.contributions[j] - ref[j]) < 1e-10);
        }
        CHECK(std::abs(fast.output() - e.raw_output(x)) < 1e-10);
    }
}

TEST_CASE("shap on trained models is locally accurate") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z(0, 1);
    Dataset d;
    d.cols = 5;
    d.feature_names = {"a", "b", "c", "d", "e"};
    for (int i = 0; i < 300; ++i) {
        const int y = i % 4 == 0;
        for (int j = 0; j < 5; ++j) d.x.push_back(z(rng) + (j < 2 ? y : 0));
        d.y.push_back(y);
    }
    GbdtParams gp;
    gp.trees = 25;
    const auto g = train_gbdt(d, gp);
    ForestParams fp;
    fp.trees = 10;
    const auto f = train_random_forest(d, fp);
    for (std::size_t i = 0; i < 40; ++i) {
        for (const auto* model : {&g, &f}) {
            const auto row = tree_shap(*model, d.row(i));
            CHECK(std::abs(row.output() - model->raw_output(d.row(i))) < 1e-9);
            const auto slow = brute_force_shap(*model, d.row(i));
            for (std::size_t j = 0; j < 5; ++j) CHECK(std::abs(row.contributions[j] - slow.contributions[j]) < 1e-9);
        }
    }
}

TEST_CASE("width and size limits") {
    std::mt19937_64 rng(1);
    const auto e = random_ensemble(rng, 3, 1);
    CHECK_THROWS_AS(tree_shap(e, std::vector<double>{0.0}), ValidationError);
    const auto wide = random_ensemble(rng, kBruteForceMaxFeatures + 1, 1);
    CHECK_THROWS_AS(brute_force_shap(wide, random_input(rng, kBruteForceMaxFeatures + 1)), ValidationError);
}

TEST_CASE("ranking and beeswarm") {
    ExplainedSplit s1, s2;
    s1.rows.push_back(ShapRow{"u1", 0.0, {1.0, -0.5, 0.0}});
    s1.rows.push_back(ShapRow{"u2", 0.0, {-1.0, 0.5, 0.0}});
    s1.values = {{1, 2, 3}, {2, 1, 3}};
    s2.rows.push_back(ShapRow{"u3", 0.0, {0.0, 2.0, 0.0}});
    s2.values = {{4, 4, 4}};
    const std::vector<ExplainedSplit> splits{s1, s2};
    const std::vector<std::string> names{"alpha", "beta", "gamma"};
    const auto ranking = rank_features(splits, names);
    REQUIRE(ranking.size() == 3);
    // alpha: (1 + 0) / 2 = 0.5; beta: (0.5 + 2) / 2 = 1.25
    CHECK(ranking[0].feature == "beta");
    CHECK(ranking[0].mean_abs_shap == doctest::Approx(1.25));
    CHECK(ranking[1].feature == "alpha");
    CHECK(ranking[2].rank == 3);

    std::ostringstream csv;
    write_ranking_csv(csv, ranking);
    CHECK(csv.str().rfind("feature,mean_abs_shap,rank\nbeta,1.25,1\n", 0) == 0);

    BeeswarmOptions opt;
    opt.max_features = 2;
    const auto svg = render_beeswarm(splits, names, ranking, opt);
    CHECK(svg.rfind("<?xml", 0) == 0);
    CHECK(svg.find("valuebar") != std::string::npos);
    CHECK(svg.find(">beta<") != std::string::npos);
    CHECK(svg.find(">gamma<") == std::string::npos);
    CHECK(svg == render_beeswarm(splits, names, ranking, opt));

    const auto dir = std::filesystem::temp_directory_path() / "iuprobe_explain_test";
    std::filesystem::create_directories(dir);
    summarize_and_plot(splits, names, dir / "a.svg", dir / "a.csv");
    CHECK(std::filesystem::file_size(dir / "a.svg") > 0);
    CHECK_THROWS_AS(summarize_and_plot(splits, names, dir / "missing" / "a.svg", dir / "a.csv"), IoError);
    std::filesystem::remove_all(dir);
}
