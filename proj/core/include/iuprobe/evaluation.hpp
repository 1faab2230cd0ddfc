#pragma once

#include "iuprobe/learners.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace iuprobe {

struct ClassScores {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    std::size_t support = 0;
};

struct Metrics {
    double accuracy = 0;
    double precision_macro = 0;
    double recall_macro = 0;
    double f1_macro = 0;
};

/// Binary metrics with classes {0, 1}. Macro scores are the unweighted mean over both classes;
/// an undefined precision/recall/F1 counts as 0 and is reported through `diagnostics`.
Metrics evaluate(std::span<const int> predicted, std::span<const int> truth, Diagnostics* diagnostics = nullptr);
ClassScores class_scores(std::span<const int> predicted, std::span<const int> truth, int positive_class,
                         Diagnostics* diagnostics = nullptr);

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Per class, round(fraction * n_class) rows go to the test side, clamped so both sides keep a
/// member. Indices are returned sorted. Throws ValidationError for a class with < 2 rows.
SplitIndices stratified_split(std::span<const int> labels, double test_fraction, std::uint64_t seed);

/// k disjoint validation folds with classes dealt round-robin after a shuffle. Throws
/// ValidationError when a class has fewer than k members (a fold would lose it).
std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> labels, int folds, std::uint64_t seed);

struct CvResult {
    std::size_t best_index = 0;
    std::vector<double> mean_f1;  // per grid point
};

/// Grid search maximising mean validation macro-F1. Ties (within 1e-12) go to the smaller model
/// by ComplexityKey and then to the earlier grid point. GBDT and forest points that differ only
/// in tree count share one fit whose prefixes are scored.
CvResult cross_validate(const Dataset& train, std::span<const LearnerParams> grid, int folds, std::uint64_t seed);

/// First `count` trees of a model. Forest leaves are rescaled to the shorter average.
TreeEnsemble truncate_ensemble(const TreeEnsemble& model, std::size_t count);

}  // namespace iuprobe
