#pragma once

#include "iuprobe/evaluation.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace iuprobe {

struct LearnerGrid {
    std::string name;
    std::vector<LearnerParams> points;
};

/// Default grids for gbdt, random_forest, logistic and majority.
std::vector<LearnerGrid> default_grids();

struct ExperimentConfig {
    int splits = 10;
    double test_fraction = 0.2;
    int folds = 5;
    std::uint64_t master_seed = 0;
    std::vector<LearnerGrid> learners = default_grids();
};

/// One learner evaluated on one split.
struct SplitOutcome {
    int split = 0;
    std::uint64_t seed = 0;
    std::string learner;
    std::string chosen;  // describe() of the selected grid point
    double cv_f1 = 0;    // NaN for singleton grids
    Metrics test;
};

struct LearnerSummary {
    std::string learner;
    std::size_t splits = 0;
    Metrics mean;
    Metrics stddev;  // sample standard deviation; 0 for a single split
};

struct SplitModel {
    int split = 0;
    std::string learner;
    Model model;
    std::vector<std::size_t> test_rows;  // indices into the experiment dataset
    std::vector<double> probabilities;   // aligned with test_rows
};

struct ExperimentResult {
    std::uint64_t master_seed = 0;
    std::vector<SplitOutcome> outcomes;  // split-major, learners in config order
    std::vector<LearnerSummary> summary;
    std::vector<SplitModel> models;
    Diagnostics diagnostics;

    const LearnerSummary* find(std::string_view learner) const;
    /// Tree-ensemble model of `learner` with the best test macro-F1 (earliest split on ties).
    const SplitModel* best_model(std::string_view learner) const;
};

std::uint64_t split_seed(std::uint64_t master_seed, int split) noexcept;

/// For each split: stratified split, per-learner grid search by cross-validation, refit on the
/// full training side, evaluation on the test side. Results depend only on data and config.
ExperimentResult run_experiment(const Dataset& data, const ExperimentConfig& config);

/// One row per learner: learner, splits, then mean and std of each metric.
void write_summary_csv(std::ostream& out, const ExperimentResult& result);
void write_splits_csv(std::ostream& out, const ExperimentResult& result);
/// split, learner, user_id, truth, probability, predicted.
void write_predictions_csv(std::ostream& out, const ExperimentResult& result, const Dataset& data);

}  // namespace iuprobe
