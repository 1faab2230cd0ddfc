#pragma once

#include "iuprobe/common.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace iuprobe {

double sigmoid(double x) noexcept;
double logit(double p) noexcept;

/// One node of a binary regression tree. Samples with `x[feature] < threshold` go left.
struct TreeNode {
    int feature = -1;  // -1 for leaves
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf output
    double cover = 0.0;  // training weight reaching the node

    bool is_leaf() const noexcept { return feature < 0; }
};

/// Flat tree, root at index 0.
struct Tree {
    std::vector<TreeNode> nodes;

    double predict(std::span<const double> x) const;
    /// Cover-weighted mean of the leaf values.
    double expected_value() const;
    int depth() const;
};

enum class EnsembleKind { Gbdt, RandomForest };

std::string_view to_string(EnsembleKind kind) noexcept;

/// Additive tree model shared by prediction and SHAP.
///
/// For GBDT the raw output base_score + sum(trees) is a logit. Random-forest trees store class-1
/// probabilities pre-divided by the tree count, so the raw output is the averaged probability
/// and logit() converts it at the ensemble surface.
class TreeEnsemble {
public:
    EnsembleKind kind = EnsembleKind::Gbdt;
    double base_score = 0.0;
    std::vector<Tree> trees;
    std::vector<std::string> feature_names;

    std::size_t num_features() const noexcept { return feature_names.size(); }

    double raw_output(std::span<const double> x) const;
    double logit_output(std::span<const double> x) const;
    double probability(std::span<const double> x) const;

    /// Checks node links, finite thresholds, positive covers and that child covers sum to
    /// the parent's. Throws ValidationError describing the first violation.
    void validate() const;

    /// Versioned, line-oriented text format; doubles in shortest round-trip form.
    void serialize(std::ostream& out) const;
    std::string serialize() const;
    static TreeEnsemble deserialize(std::istream& in);
    static TreeEnsemble deserialize(const std::string& text);
};

}  // namespace iuprobe
