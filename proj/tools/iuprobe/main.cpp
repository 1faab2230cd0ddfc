#include "iuprobe/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace iuprobe;

struct CommonOptions {
    std::string config;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::string output_dir;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("-c,--config", opts.config, "JSON pipeline config");
    cmd->add_option("--set", opts.overrides, "Override a config key, e.g. --set experiment.splits=3");
    cmd->add_option("--seed", opts.seed, "Shortcut for --set master_seed=N");
    cmd->add_option("-o,--out", opts.output_dir, "Shortcut for --set paths.output_dir=DIR");
}

PipelineConfig resolve(const CommonOptions& opts) {
    std::vector<std::string> overrides = opts.overrides;
    if (opts.seed) overrides.push_back("master_seed=" + std::to_string(*opts.seed));
    if (!opts.output_dir.empty()) {
        // The value is re-parsed as JSON when possible, so quote it explicitly.
        overrides.push_back("paths.output_dir=\"" + opts.output_dir + "\"");
    }
    if (opts.config.empty()) {
        return parse_config("{}", overrides);
    }
    return load_config(opts.config, overrides);
}

void report(const StageOutput& out) {
    std::cout << out.stage << ": wrote " << out.files.size() << " file(s)\n";
    for (const auto& [name, digest] : out.files) {
        std::cout << "  " << name << "  " << digest << '\n';
    }
    for (const auto& w : out.diagnostics.messages()) {
        std::cerr << "warning: " << w << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"iuprobe: inflammatory-user labelling, statistics, classification and SHAP explanations"};
    app.require_subcommand(1);
    CommonOptions opts;

    struct Command {
        const char* name;
        const char* help;
    };
    const Command commands[] = {
        {"synth", "Generate a synthetic dataset and a ready-to-run pipeline.json"},
        {"label", "Assign IU/BU/NIU/Excluded groups (labels.csv, group_sizes.csv)"},
        {"stats", "Build the feature matrix and the group-difference report"},
        {"train", "Run the split/cross-validation experiment and save models"},
        {"explain", "Compute SHAP values, the ranking CSV and the beeswarm SVG"},
        {"report", "Collect stage outputs into report.md"},
        {"run", "label, stats, train, explain and report in sequence"},
    };
    for (const auto& c : commands) add_common(app.add_subcommand(c.name, c.help), opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const PipelineConfig config = resolve(opts);
        const std::string cmd = app.get_subcommands().front()->get_name();
        if (cmd == "synth") {
            report(cmd_synth(config));
        } else if (cmd == "label") {
            LabelSummary s;
            report(cmd_label(config, &s));
            for (const auto& [g, n] : s.sizes) std::cout << "  " << to_string(g) << ": " << n << '\n';
            std::cout << "  total: " << s.users << '\n';
        } else if (cmd == "stats") {
            report(cmd_stats(config));
        } else if (cmd == "train") {
            ExperimentResult r;
            report(cmd_train(config, &r));
            for (const auto& s : r.summary) {
                std::cout << "  " << s.learner << ": macro-F1 " << format_fixed(s.mean.f1_macro, 3) << " +/- "
                          << format_fixed(s.stddev.f1_macro, 3) << ", accuracy " << format_fixed(s.mean.accuracy, 3)
                          << '\n';
            }
        } else if (cmd == "explain") {
            std::vector<FeatureRank> ranking;
            report(cmd_explain(config, &ranking));
            for (std::size_t i = 0; i < std::min<std::size_t>(10, ranking.size()); ++i) {
                std::cout << "  " << ranking[i].rank << ". " << ranking[i].feature << " "
                          << format_fixed(ranking[i].mean_abs_shap, 4) << '\n';
            }
        } else if (cmd == "report") {
            report(cmd_report(config));
        } else {
            for (const auto& out : cmd_run(config)) report(out);
        }
        return 0;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
