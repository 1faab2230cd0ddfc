#include "iuprobe/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

namespace iuprobe {

ClassScores class_scores(std::span<const int> predicted, std::span<const int> truth, int positive_class,
                         Diagnostics* diagnostics) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool p = predicted[i] == positive_class;
        const bool t = truth[i] == positive_class;
        tp += p && t;
        fp += p && !t;
        fn += !p && t;
    }
    ClassScores s;
    s.support = tp + fn;
    const std::string cls = "class " + std::to_string(positive_class);
    if (tp + fp > 0) {
        s.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    } else if (diagnostics) {
        diagnostics->warn(cls + ": precision undefined (no predictions), counted as 0");
    }
    if (tp + fn > 0) {
        s.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    } else if (diagnostics) {
        diagnostics->warn(cls + ": recall undefined (no true members), counted as 0");
    }
    if (s.precision + s.recall > 0) {
        s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
    }
    return s;
}

Metrics evaluate(std::span<const int> predicted, std::span<const int> truth, Diagnostics* diagnostics) {
    if (predicted.size() != truth.size()) {
        throw ValidationError("evaluate: " + std::to_string(predicted.size()) + " predictions for " +
                              std::to_string(truth.size()) + " labels");
    }
    if (truth.empty()) {
        throw ValidationError("evaluate: no labels");
    }
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if ((truth[i] != 0 && truth[i] != 1) || (predicted[i] != 0 && predicted[i] != 1)) {
            throw ValidationError("evaluate: labels must be 0 or 1");
        }
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        correct += predicted[i] == truth[i];
    }
    const ClassScores neg = class_scores(predicted, truth, 0, diagnostics);
    const ClassScores pos = class_scores(predicted, truth, 1, diagnostics);
    Metrics m;
    m.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
    m.precision_macro = 0.5 * (neg.precision + pos.precision);
    m.recall_macro = 0.5 * (neg.recall + pos.recall);
    m.f1_macro = 0.5 * (neg.f1 + pos.f1);
    return m;
}

namespace {

std::map<int, std::vector<std::size_t>> by_class(std::span<const int> labels) {
    std::map<int, std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out[labels[i]].push_back(i);
    }
    return out;
}

}  // namespace

SplitIndices stratified_split(std::span<const int> labels, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ValidationError("test_fraction must lie in (0, 1)");
    }
    const auto classes = by_class(labels);
    if (classes.size() < 2) {
        throw ValidationError("stratified split needs both classes");
    }
    SplitIndices out;
    std::mt19937_64 rng(seed);
    for (const auto& [cls, members] : classes) {
        if (members.size() < 2) {
            throw ValidationError("class " + std::to_string(cls) + " has fewer than 2 members");
        }
        std::vector<std::size_t> shuffled = members;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        const auto n = static_cast<long>(shuffled.size());
        const long k = std::clamp(std::lround(test_fraction * static_cast<double>(n)), 1L, n - 1);
        out.test.insert(out.test.end(), shuffled.begin(), shuffled.begin() + k);
        out.train.insert(out.train.end(), shuffled.begin() + k, shuffled.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> labels, int folds, std::uint64_t seed) {
    if (folds < 2) {
        throw ValidationError("cross-validation needs at least 2 folds");
    }
    const auto classes = by_class(labels);
    if (classes.size() < 2) {
        throw ValidationError("stratified folds need both classes");
    }
    std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(folds));
    std::mt19937_64 rng(seed);
    for (const auto& [cls, members] : classes) {
        if (members.size() < static_cast<std::size_t>(folds)) {
            throw ValidationError("class " + std::to_string(cls) + " has " + std::to_string(members.size()) +
                                  " members, fewer than " + std::to_string(folds) + " folds");
        }
        std::vector<std::size_t> shuffled = members;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        for (std::size_t i = 0; i < shuffled.size(); ++i) {
            out[i % out.size()].push_back(shuffled[i]);
        }
    }
    for (auto& f : out) {
        std::sort(f.begin(), f.end());
    }
    return out;
}

TreeEnsemble truncate_ensemble(const TreeEnsemble& model, std::size_t count) {
    TreeEnsemble out = model;
    count = std::min(count, model.trees.size());
    out.trees.resize(count);
    if (model.kind == EnsembleKind::RandomForest && count > 0 && count != model.trees.size()) {
        const double scale = static_cast<double>(model.trees.size()) / static_cast<double>(count);
        for (auto& t : out.trees) {
            for (auto& n : t.nodes) {
                if (n.is_leaf()) n.value *= scale;
            }
        }
    }
    return out;
}

namespace {

int tree_count(const LearnerParams& p) {
    if (const auto* g = std::get_if<GbdtParams>(&p)) return g->trees;
    if (const auto* f = std::get_if<ForestParams>(&p)) return f->trees;
    return -1;
}

/// Grid points sharing a family differ at most in tree count.
std::string family_of(const LearnerParams& p) {
    LearnerParams q = p;
    if (auto* g = std::get_if<GbdtParams>(&q)) g->trees = 0;
    if (auto* f = std::get_if<ForestParams>(&q)) f->trees = 0;
    return describe(q);
}

}  // namespace

CvResult cross_validate(const Dataset& train, std::span<const LearnerParams> grid, int folds, std::uint64_t seed) {
    if (grid.empty()) {
        throw ValidationError("empty hyperparameter grid");
    }
    CvResult result;
    result.mean_f1.assign(grid.size(), 0.0);
    if (grid.size() == 1) {
        result.best_index = 0;
        result.mean_f1[0] = std::numeric_limits<double>::quiet_NaN();
        return result;
    }

    std::map<std::string, std::vector<std::size_t>> families;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        families[family_of(grid[i])].push_back(i);
    }

    const auto fold_sets = stratified_folds(train.y, folds, seed);
    for (std::size_t f = 0; f < fold_sets.size(); ++f) {
        const auto& valid_idx = fold_sets[f];
        std::vector<char> in_valid(train.rows(), 0);
        for (std::size_t i : valid_idx) in_valid[i] = 1;
        std::vector<std::size_t> train_idx;
        for (std::size_t i = 0; i < train.rows(); ++i) {
            if (!in_valid[i]) train_idx.push_back(i);
        }
        const Dataset fit_set = train.subset(train_idx);
        const Dataset valid_set = train.subset(valid_idx);
        const std::uint64_t fit_seed = mix_seed(seed, 0x100 + f);

        for (const auto& [key, members] : families) {
            std::size_t lead = members.front();
            for (std::size_t m : members) {
                if (tree_count(grid[m]) > tree_count(grid[lead])) lead = m;
            }
            const Model full = fit(fit_set, grid[lead], fit_seed);
            for (std::size_t m : members) {
                Model model = full;
                if (const auto* ens = std::get_if<TreeEnsemble>(&full); ens && m != lead) {
                    model = truncate_ensemble(*ens, static_cast<std::size_t>(tree_count(grid[m])));
                }
                const auto labels = threshold_labels(predict_proba(model, valid_set));
                result.mean_f1[m] += evaluate(labels, valid_set.y).f1_macro;
            }
        }
    }
    for (double& v : result.mean_f1) v /= static_cast<double>(fold_sets.size());

    std::size_t best = 0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double diff = result.mean_f1[i] - result.mean_f1[best];
        if (diff > 1e-12 || (std::abs(diff) <= 1e-12 && complexity(grid[i]) < complexity(grid[best]))) {
            best = i;
        }
    }
    result.best_index = best;
    return result;
}

}  // namespace iuprobe
