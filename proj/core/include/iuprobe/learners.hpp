#pragma once

#include "iuprobe/features.hpp"
#include "iuprobe/tree.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace iuprobe {

/// Row-major design matrix with binary labels (1 = IU).
struct Dataset {
    std::size_t cols = 0;
    std::vector<double> x;
    std::vector<int> y;
    std::vector<std::string> ids;
    std::vector<std::string> feature_names;

    std::size_t rows() const noexcept { return y.size(); }
    std::span<const double> row(std::size_t i) const { return {x.data() + i * cols, cols}; }
    std::size_t positives() const noexcept;

    /// IU rows become positives, NIU rows negatives; all other groups are dropped.
    static Dataset from_matrix(const FeatureMatrix& matrix);
    Dataset subset(std::span<const std::size_t> indices) const;
};

struct GbdtParams {
    int trees = 100;
    int max_depth = 3;
    double learning_rate = 0.1;
    double l2 = 1.0;
    double min_child_weight = 1.0;
    /// Instance weight of positive examples (class weighting); 1 disables it.
    double positive_weight = 1.0;
};

/// Weighted training log-loss after each boosting round; loss[0] is the base-score loss.
struct GbdtTrace {
    std::vector<double> loss;
    std::size_t backtracks = 0;
};

/// Second-order (Newton) gradient boosting on the logistic loss with exact greedy splits.
/// Throws DegenerateDataError when only one class is present.
TreeEnsemble train_gbdt(const Dataset& data, const GbdtParams& params, GbdtTrace* trace = nullptr);

struct ForestParams {
    int trees = 100;
    int max_depth = 0;          // 0 = unlimited
    int features_per_split = 0; // 0 = round(sqrt(cols))
    int min_samples_leaf = 1;
    bool bootstrap = true;
    std::uint64_t seed = 0;
};

/// Bootstrap-aggregated Gini trees; leaves hold class-1 probabilities.
TreeEnsemble train_random_forest(const Dataset& data, const ForestParams& params);

struct LogisticParams {
    double l2 = 1.0;
    int max_iter = 100;
    double tol = 1e-8;
};

/// L2-regularised logistic regression fitted on standardised features.
///
/// Minimises mean log-loss + (l2/2)·|w|² where w acts on z-scored columns and the intercept is
/// unpenalised. Zero-variance columns get coefficient 0.
struct LogisticModel {
    std::vector<double> mean;
    std::vector<double> scale;  // 0 marks a dropped constant column
    std::vector<double> coef;   // standardised space
    double intercept = 0.0;
    bool converged = false;
    int iterations = 0;
    double gradient_norm = 0.0;

    double logit_output(std::span<const double> x) const;
    double probability(std::span<const double> x) const;
};

LogisticModel train_logistic(const Dataset& data, const LogisticParams& params);

/// Always predicts the training majority class; a trivial baseline.
struct MajorityParams {};
struct MajorityModel {
    double positive_rate = 0.0;
};

using LearnerParams = std::variant<GbdtParams, ForestParams, LogisticParams, MajorityParams>;
using Model = std::variant<TreeEnsemble, LogisticModel, MajorityModel>;

/// Fits any learner. `seed` feeds stochastic learners (overrides ForestParams::seed).
Model fit(const Dataset& data, const LearnerParams& params, std::uint64_t seed);

std::vector<double> predict_proba(const Model& model, const Dataset& data);
std::vector<int> threshold_labels(std::span<const double> probabilities, double cut = 0.5);

std::string learner_name(const LearnerParams& params);
std::string describe(const LearnerParams& params);

/// Ordering key for grid tie-breaks: fewer trees, then shallower, then larger l2. The majority
/// rule is the simplest model of all.
struct ComplexityKey {
    double trees = 0;
    double depth = 0;
    double neg_l2 = 0;

    auto operator<=>(const ComplexityKey&) const = default;
};
ComplexityKey complexity(const LearnerParams& params);

}  // namespace iuprobe
