#pragma once

#include "iuprobe/experiment.hpp"
#include "iuprobe/explain.hpp"
#include "iuprobe/graph.hpp"
#include "iuprobe/stats.hpp"
#include "iuprobe/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace iuprobe {

struct PipelinePaths {
    std::optional<std::filesystem::path> activities;
    std::optional<std::filesystem::path> profiles;
    std::optional<std::filesystem::path> lexicon;
    std::optional<std::filesystem::path> flagged;
    std::optional<std::filesystem::path> topics;
    std::filesystem::path output_dir = "iuprobe_out";
};

struct ExplainSettings {
    std::string learner = "gbdt";
    std::size_t max_features = 20;
};

/// Declarative configuration shared by every subcommand.
struct PipelineConfig {
    PipelinePaths paths;
    Timestamp collection_end = 1627516800;
    /// nullopt disables lexicon qualification.
    std::optional<std::size_t> hit_threshold = 3;
    std::size_t min_activities = 10;
    bool include_quotes = true;
    DiffusionOptions diffusion;
    CentralityOptions centrality;
    /// Required by every randomised stage; there is no clock-based fallback.
    std::optional<std::uint64_t> master_seed;
    ExperimentConfig experiment;
    ReportOptions report;
    ExplainSettings explain;
    SynthConfig synth = SynthConfig::defaults(0);

    /// Canonical JSON form (relative paths as given); recorded in manifests.
    std::string to_json() const;
};

/// Parses a JSON config. `overrides` are `dotted.key=value` strings applied before validation,
/// where value is JSON or a bare string. Relative paths resolve against `base_dir`.
/// Throws ValidationError on unknown keys, bad types or out-of-range values.
PipelineConfig parse_config(std::string_view json_text, const std::vector<std::string>& overrides = {},
                            const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// Names of files written by a stage, relative to the output directory, with their digests.
struct StageOutput {
    std::string stage;
    std::map<std::string, std::string> files;  // name -> FNV-1a 64 hex digest
    Diagnostics diagnostics;
};

struct LabelSummary {
    std::map<Group, std::size_t> sizes;
    std::size_t users = 0;
};

StageOutput cmd_synth(const PipelineConfig& config);
StageOutput cmd_label(const PipelineConfig& config, LabelSummary* summary = nullptr);
StageOutput cmd_stats(const PipelineConfig& config, StatReport* report = nullptr);
StageOutput cmd_train(const PipelineConfig& config, ExperimentResult* result = nullptr);
StageOutput cmd_explain(const PipelineConfig& config, std::vector<FeatureRank>* ranking = nullptr);
StageOutput cmd_report(const PipelineConfig& config);
/// label, stats, train, explain and report in sequence.
std::vector<StageOutput> cmd_run(const PipelineConfig& config);

/// FNV-1a 64 digest of a file's bytes, as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);

}  // namespace iuprobe
