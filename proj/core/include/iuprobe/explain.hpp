#pragma once

#include "iuprobe/tree.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace iuprobe {

/// Per-row attribution. base_value + sum(contributions) equals the ensemble's raw output, which is
/// the logit for GBDT models and the averaged probability for forests.
struct ShapRow {
    std::string user_id;
    double base_value = 0;
    std::vector<double> contributions;

    double output() const;
};

/// base_score plus each tree's cover-weighted mean leaf value.
double expected_output(const TreeEnsemble& ensemble);

/// Path-dependent exact TreeSHAP. Throws ValidationError when x has the wrong width.
ShapRow tree_shap(const TreeEnsemble& ensemble, std::span<const double> x, std::string user_id = {});

inline constexpr std::size_t kBruteForceMaxFeatures = 15;

/// Shapley values by subset enumeration with the same cover-weighted masking as tree_shap.
/// Throws ValidationError beyond kBruteForceMaxFeatures features.
ShapRow brute_force_shap(const TreeEnsemble& ensemble, std::span<const double> x, std::string user_id = {});

/// SHAP rows of one test split together with the explained feature values.
struct ExplainedSplit {
    std::vector<ShapRow> rows;
    std::vector<std::vector<double>> values;  // aligned with rows
};

struct FeatureRank {
    std::string feature;
    double mean_abs_shap = 0;
    int rank = 0;  // 1 = most important
};

/// Mean |contribution| per feature within each split, averaged over splits. Sorted by that score
/// descending with the feature name breaking ties.
std::vector<FeatureRank> rank_features(std::span<const ExplainedSplit> splits,
                                       const std::vector<std::string>& feature_names);

/// feature, mean_abs_shap, rank.
void write_ranking_csv(std::ostream& out, std::span<const FeatureRank> ranking);

struct BeeswarmOptions {
    std::size_t max_features = 20;
    double width = 900;
    double row_height = 30;
    std::string x_label = "SHAP value (impact on model output, logit scale)";
};

/// SVG 1.1 beeswarm: one row per ranked feature, x = contribution, colour = the point's value
/// percentile within its feature, vertical jitter from a hash of the user id.
std::string render_beeswarm(std::span<const ExplainedSplit> splits, const std::vector<std::string>& feature_names,
                            std::span<const FeatureRank> ranking, const BeeswarmOptions& options = {});

/// Ranks features, then writes `svg_path` and `ranking_path`. Throws IoError when unwritable.
std::vector<FeatureRank> summarize_and_plot(std::span<const ExplainedSplit> splits,
                                            const std::vector<std::string>& feature_names,
                                            const std::filesystem::path& svg_path,
                                            const std::filesystem::path& ranking_path,
                                            const BeeswarmOptions& options = {});

}  // namespace iuprobe
