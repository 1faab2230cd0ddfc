#include "iuprobe/experiment.hpp"

#include <cmath>
#include <limits>
#include <ostream>

namespace iuprobe {

std::vector<LearnerGrid> default_grids() {
    LearnerGrid gbdt{"gbdt", {}};
    for (int trees : {50, 100, 200}) {
        for (int depth : {3, 5}) {
            for (double lr : {0.1, 0.3}) {
                GbdtParams p;
                p.trees = trees;
                p.max_depth = depth;
                p.learning_rate = lr;
                p.l2 = 1.0;
                gbdt.points.emplace_back(p);
            }
        }
    }
    LearnerGrid forest{"random_forest", {}};
    for (int trees : {100, 300}) {
        for (int depth : {0, 10}) {
            ForestParams p;
            p.trees = trees;
            p.max_depth = depth;
            forest.points.emplace_back(p);
        }
    }
    LearnerGrid logistic{"logistic", {}};
    for (double l2 : {0.01, 0.1, 1.0}) {
        LogisticParams p;
        p.l2 = l2;
        logistic.points.emplace_back(p);
    }
    LearnerGrid majority{"majority", {MajorityParams{}}};
    return {gbdt, forest, logistic, majority};
}

std::uint64_t split_seed(std::uint64_t master_seed, int split) noexcept {
    return mix_seed(master_seed, static_cast<std::uint64_t>(split));
}

const LearnerSummary* ExperimentResult::find(std::string_view learner) const {
    for (const auto& s : summary) {
        if (s.learner == learner) return &s;
    }
    return nullptr;
}

const SplitModel* ExperimentResult::best_model(std::string_view learner) const {
    const SplitModel* best = nullptr;
    double best_f1 = -1;
    for (const auto& m : models) {
        if (m.learner != learner || !std::holds_alternative<TreeEnsemble>(m.model)) continue;
        for (const auto& o : outcomes) {
            if (o.split == m.split && o.learner == learner && o.test.f1_macro > best_f1) {
                best_f1 = o.test.f1_macro;
                best = &m;
            }
        }
    }
    return best;
}

namespace {

Metrics metric_op(const Metrics& a, const Metrics& b, double (*op)(double, double)) {
    return {op(a.accuracy, b.accuracy), op(a.precision_macro, b.precision_macro), op(a.recall_macro, b.recall_macro),
            op(a.f1_macro, b.f1_macro)};
}

}  // namespace

ExperimentResult run_experiment(const Dataset& data, const ExperimentConfig& config) {
    if (config.splits < 1) {
        throw ValidationError("experiment needs at least one split");
    }
    if (config.learners.empty()) {
        throw ValidationError("experiment has no learners");
    }
    for (const auto& l : config.learners) {
        if (l.points.empty()) throw ValidationError("learner '" + l.name + "' has an empty grid");
    }
    ExperimentResult result;
    result.master_seed = config.master_seed;

    for (int s = 0; s < config.splits; ++s) {
        const std::uint64_t seed = split_seed(config.master_seed, s);
        const SplitIndices split = stratified_split(data.y, config.test_fraction, seed);
        const Dataset train = data.subset(split.train);
        const Dataset test = data.subset(split.test);
        for (std::size_t l = 0; l < config.learners.size(); ++l) {
            const LearnerGrid& grid = config.learners[l];
            const std::uint64_t learner_seed = mix_seed(seed, 0x1000 + l);
            const CvResult cv = cross_validate(train, grid.points, config.folds, learner_seed);
            const LearnerParams& chosen = grid.points[cv.best_index];
            Model model = fit(train, chosen, learner_seed);
            std::vector<double> prob = predict_proba(model, test);
            const auto labels = threshold_labels(prob);

            Diagnostics diag;
            SplitOutcome o;
            o.split = s;
            o.seed = seed;
            o.learner = grid.name;
            o.chosen = describe(chosen);
            o.cv_f1 = cv.mean_f1[cv.best_index];
            o.test = evaluate(labels, test.y, &diag);
            for (const auto& msg : diag.messages()) {
                result.diagnostics.warn("split " + std::to_string(s) + " " + grid.name + ": " + msg);
            }
            if (const auto* lr = std::get_if<LogisticModel>(&model); lr && !lr->converged) {
                result.diagnostics.warn("split " + std::to_string(s) + " " + grid.name +
                                        ": logistic regression did not converge");
            }
            result.outcomes.push_back(o);
            result.models.push_back(SplitModel{s, grid.name, std::move(model), split.test, std::move(prob)});
        }
    }

    for (const auto& grid : config.learners) {
        LearnerSummary sum;
        sum.learner = grid.name;
        Metrics total;
        std::vector<const Metrics*> rows;
        for (const auto& o : result.outcomes) {
            if (o.learner == grid.name) rows.push_back(&o.test);
        }
        for (const Metrics* m : rows) total = metric_op(total, *m, [](double a, double b) { return a + b; });
        sum.splits = rows.size();
        const double n = static_cast<double>(rows.size());
        sum.mean = metric_op(total, total, [](double a, double) { return a; });
        sum.mean.accuracy /= n;
        sum.mean.precision_macro /= n;
        sum.mean.recall_macro /= n;
        sum.mean.f1_macro /= n;
        if (rows.size() > 1) {
            Metrics sq;
            for (const Metrics* m : rows) {
                const Metrics d = metric_op(*m, sum.mean, [](double a, double b) { return (a - b) * (a - b); });
                sq = metric_op(sq, d, [](double a, double b) { return a + b; });
            }
            sum.stddev = metric_op(sq, sq, [](double a, double) { return a; });
            sum.stddev.accuracy = std::sqrt(sq.accuracy / (n - 1));
            sum.stddev.precision_macro = std::sqrt(sq.precision_macro / (n - 1));
            sum.stddev.recall_macro = std::sqrt(sq.recall_macro / (n - 1));
            sum.stddev.f1_macro = std::sqrt(sq.f1_macro / (n - 1));
        }
        result.summary.push_back(sum);
    }
    return result;
}

void write_summary_csv(std::ostream& out, const ExperimentResult& result) {
    out << "learner,splits,precision_mean,precision_std,recall_mean,recall_std,f1_mean,f1_std,accuracy_mean,"
           "accuracy_std\n";
    for (const auto& s : result.summary) {
        out << s.learner << ',' << s.splits << ',' << format_double(s.mean.precision_macro) << ','
            << format_double(s.stddev.precision_macro) << ',' << format_double(s.mean.recall_macro) << ','
            << format_double(s.stddev.recall_macro) << ',' << format_double(s.mean.f1_macro) << ','
            << format_double(s.stddev.f1_macro) << ',' << format_double(s.mean.accuracy) << ','
            << format_double(s.stddev.accuracy) << '\n';
    }
}

void write_splits_csv(std::ostream& out, const ExperimentResult& result) {
    out << "split,seed,learner,chosen,cv_f1,precision,recall,f1,accuracy\n";
    for (const auto& o : result.outcomes) {
        out << o.split << ',' << o.seed << ',' << o.learner << ",\"" << o.chosen << "\"," << format_double(o.cv_f1)
            << ',' << format_double(o.test.precision_macro) << ',' << format_double(o.test.recall_macro) << ','
            << format_double(o.test.f1_macro) << ',' << format_double(o.test.accuracy) << '\n';
    }
}

void write_predictions_csv(std::ostream& out, const ExperimentResult& result, const Dataset& data) {
    out << "split,learner,user_id,truth,probability,predicted\n";
    for (const auto& m : result.models) {
        for (std::size_t k = 0; k < m.test_rows.size(); ++k) {
            const std::size_t r = m.test_rows[k];
            const double p = m.probabilities[k];
            out << m.split << ',' << m.learner << ',' << (data.ids.empty() ? std::to_string(r) : data.ids[r]) << ','
                << data.y[r] << ',' << format_double(p) << ',' << (p > 0.5 ? 1 : 0) << '\n';
        }
    }
}

}  // namespace iuprobe
