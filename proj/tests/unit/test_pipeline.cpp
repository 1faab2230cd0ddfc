#include "iuprobe/pipeline.hpp"
#include "iuprobe/synth.hpp"

#include <doctest.h>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace iuprobe;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("iuprobe_unit_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// A small but complete experiment: two learners, three splits, three folds.
const std::vector<std::string> kSmall{
    "synth.users=900",
    "experiment.splits=3",
    "experiment.folds=3",
    R"(experiment.learners={"gbdt":[{"trees":20,"max_depth":2},{"trees":40,"max_depth":2}],"majority":[{}]})",
};

}  // namespace

TEST_SUITE("config") {
    TEST_CASE("defaults and overrides") {
        const auto c = parse_config("{}");
        CHECK(c.hit_threshold == 3u);
        CHECK(c.min_activities == 10);
        CHECK(c.experiment.splits == 10);
        CHECK(c.experiment.folds == 5);
        CHECK_FALSE(c.master_seed);
        CHECK(c.experiment.learners.size() == 4);

        const auto o = parse_config("{}", {"master_seed=5", "hit_threshold=null", "paths.output_dir=out",
                                           "explain.learner=random_forest"});
        CHECK(o.master_seed == 5u);
        CHECK_FALSE(o.hit_threshold);
        CHECK(o.paths.output_dir == "out");
        CHECK(o.explain.learner == "random_forest");
    }

    TEST_CASE("relative paths resolve against the config directory") {
        const auto c = parse_config(R"({"paths":{"activities":"a.jsonl","output_dir":"o"}})", {}, "/data/run");
        CHECK(*c.paths.activities == fs::path("/data/run/a.jsonl"));
        CHECK(c.paths.output_dir == fs::path("/data/run/o"));
    }

    TEST_CASE("validation errors") {
        for (const char* bad : {R"({"bogus":1})", R"({"experiment":{"folds":1}})", R"({"experiment":{"test_fraction":1.5}})",
                                R"({"min_activities":0})", R"({"master_seed":-3})", R"({"paths":{"extra":"x"}})",
                                R"({"experiment":{"learners":{"svm":[{}]}}})",
                                R"({"experiment":{"learners":{"gbdt":[{"trees":0}]}}})",
                                R"({"synth":{"effects":{"follower":1.5}}})", R"({"synth":{"effects":{"shoe_size":0.2}}})",
                                R"({"collection_end":"yesterday"})", "[1, 2", R"({"centrality":{"teleport":0}})"}) {
            const std::string text = bad;
            CAPTURE(text);
            CHECK_THROWS_AS(parse_config(text), ValidationError);
        }
        CHECK_THROWS_AS(parse_config("{}", {"noequals"}), ValidationError);
        CHECK_THROWS_AS(parse_config("{}", {"min_activities.x=1"}), ValidationError);
        CHECK_THROWS_AS(load_config("/nonexistent/pipeline.json"), ValidationError);
    }

    TEST_CASE("canonical JSON round trips") {
        const auto c = parse_config("{}", {"master_seed=9", "synth.users=123"});
        const auto again = parse_config(c.to_json());
        CHECK(again.to_json() == c.to_json());
        CHECK(again.synth.users == 123);
    }
}

TEST_SUITE("synth") {
    TEST_CASE("effect shifts invert Cliff's delta of two normals") {
        CHECK(shift_for_delta(0.0, 1.0) == doctest::Approx(0.0));
        // delta = 2 Phi(-s / (sigma sqrt 2)) - 1 for a shift s of Y over X
        const double s = shift_for_delta(-0.4, 2.0);
        CHECK(s > 0);
        CHECK(std::erfc(s / (2.0 * std::sqrt(2.0)) / std::sqrt(2.0)) - 1.0 == doctest::Approx(-0.4));
    }

    TEST_CASE("generator is seed-deterministic and labels recover the intended groups") {
        auto cfg = SynthConfig::defaults(31);
        cfg.users = 900;
        const auto a = generate_synthetic(cfg);
        const auto b = generate_synthetic(cfg);
        CHECK(a.activities.size() == b.activities.size());
        CHECK(to_json_line(a.activities.back()) == to_json_line(b.activities.back()));
        CHECK(a.intended.size() == 900);

        const fs::path dir = scratch("synth");
        auto pc = parse_config("{}", {"master_seed=31", "synth.users=900", "paths.output_dir=" + dir.string()});
        cmd_synth(pc);
        const auto c = load_config(dir / "pipeline.json");
        LabelSummary summary;
        cmd_label(c, &summary);
        std::ifstream labels(dir / "labels.csv");
        std::string line;
        std::getline(labels, line);
        std::size_t checked = 0;
        while (std::getline(labels, line)) {
            const auto cols = split(line, ',');
            CHECK(parse_group(cols[1]) == a.intended.at(cols[0]));
            ++checked;
        }
        CHECK(checked == 900);
        CHECK(summary.sizes.at(Group::IU) == static_cast<std::size_t>(std::lround(900 * cfg.iu_fraction)));
        fs::remove_all(dir);
    }
}

TEST_SUITE("pipeline") {
    TEST_CASE("end to end on a small experiment, with manifests") {
        const fs::path dir = scratch("run");
        auto opts = kSmall;
        opts.push_back("master_seed=4");
        opts.push_back("paths.output_dir=" + dir.string());
        cmd_synth(parse_config("{}", opts));
        const auto c = load_config(dir / "pipeline.json", kSmall);
        const auto stages = cmd_run(c);
        CHECK(stages.size() == 5);
        for (const char* f : {"labels.csv", "group_sizes.csv", "retweet_edges.csv", "matrix.csv", "stat_report.csv",
                              "stat_report.txt", "stat_report.html", "experiment_summary.csv", "experiment_splits.csv",
                              "predictions.csv", "best.model", "shap_beeswarm.svg", "shap_ranking.csv",
                              "shap_values.csv", "report.md", "manifest_train.json"}) {
            CAPTURE(f);
            CHECK(fs::exists(dir / f));
        }
        const auto manifest = nlohmann::json::parse(slurp(dir / "manifest_train.json"));
        CHECK(manifest.at("stage") == "train");
        CHECK(manifest.at("outputs").contains("best.model"));
        CHECK(manifest.at("outputs").at("best.model") == file_digest(dir / "best.model"));

        const std::string summary = slurp(dir / "experiment_summary.csv");
        CHECK(summary.find("gbdt,3,") != std::string::npos);
        CHECK(summary.find("majority,3,") != std::string::npos);
        fs::remove_all(dir);
    }

    TEST_CASE("stage preconditions") {
        const fs::path dir = scratch("pre");
        auto c = parse_config("{}", {"paths.output_dir=" + dir.string()});
        CHECK_THROWS_AS(cmd_synth(c), ValidationError);  // no seed
        CHECK_THROWS_AS(cmd_label(c), ValidationError);  // no activities
        CHECK_THROWS_AS(cmd_stats(c), ValidationError);  // no labels yet
        c.master_seed = 1;
        CHECK_THROWS_AS(cmd_train(c), ValidationError);
        fs::remove_all(dir);
    }

    TEST_CASE("file digests") {
        const fs::path dir = scratch("digest");
        std::ofstream(dir / "x") << "a";
        CHECK(file_digest(dir / "x") == "af63dc4c8601ec8c");
        CHECK_THROWS_AS(file_digest(dir / "nope"), IoError);
        fs::remove_all(dir);
    }
}
