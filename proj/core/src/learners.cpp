#include "iuprobe/learners.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace iuprobe {

std::size_t Dataset::positives() const noexcept {
    return static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
}

Dataset Dataset::from_matrix(const FeatureMatrix& matrix) {
    Dataset d;
    d.cols = matrix.cols();
    d.feature_names = matrix.feature_names();
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
        const Group g = matrix.labels()[i];
        if (g != Group::IU && g != Group::NIU) {
            continue;
        }
        const auto r = matrix.row(i);
        d.x.insert(d.x.end(), r.begin(), r.end());
        d.y.push_back(g == Group::IU ? 1 : 0);
        d.ids.push_back(matrix.users()[i]);
    }
    return d;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset d;
    d.cols = cols;
    d.feature_names = feature_names;
    d.x.reserve(indices.size() * cols);
    for (std::size_t i : indices) {
        const auto r = row(i);
        d.x.insert(d.x.end(), r.begin(), r.end());
        d.y.push_back(y[i]);
        if (!ids.empty()) {
            d.ids.push_back(ids[i]);
        }
    }
    return d;
}

namespace {

// ---------------------------------------------------------------------------
// Level-wise exact tree growth shared by GBDT and random forests.
// ---------------------------------------------------------------------------

struct Stat {
    double a = 0;  // GBDT: gradient sum; RF: weighted positives
    double b = 0;  // GBDT: hessian sum
    double w = 0;  // instance weight (cover)

    Stat& operator+=(const Stat& o) noexcept {
        a += o.a;
        b += o.b;
        w += o.w;
        return *this;
    }
    friend Stat operator-(const Stat& x, const Stat& y) noexcept { return {x.a - y.a, x.b - y.b, x.w - y.w}; }
};

/// Column-major copy plus per-feature sort order, built once per training call.
struct Columns {
    std::size_t n = 0;
    std::size_t f = 0;
    std::vector<double> values;
    std::vector<std::vector<std::uint32_t>> order;

    explicit Columns(const Dataset& data) : n(data.rows()), f(data.cols), values(n * f), order(f) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < f; ++j) {
                values[j * n + i] = data.x[i * f + j];
            }
        }
        for (std::size_t j = 0; j < f; ++j) {
            auto& o = order[j];
            o.resize(n);
            std::iota(o.begin(), o.end(), 0u);
            const double* col = &values[j * n];
            std::stable_sort(o.begin(), o.end(), [col](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
        }
    }
    double at(std::size_t row, std::size_t feature) const { return values[feature * n + row]; }
};

struct NewtonCriterion {
    double l2;
    double min_child_weight;
    double learning_rate;

    double score(const Stat& s) const { return s.a * s.a / (s.b + l2); }
    double gain(const Stat& parent, const Stat& left, const Stat& right) const {
        return 0.5 * (score(left) + score(right) - score(parent));
    }
    bool admissible(const Stat& left, const Stat& right) const {
        return left.b >= min_child_weight && right.b >= min_child_weight;
    }
    bool can_split(const Stat& s) const { return s.b >= 2.0 * min_child_weight; }
    double leaf_value(const Stat& s) const { return -s.a / (s.b + l2) * learning_rate; }
};

struct GiniCriterion {
    double min_leaf;
    double tree_scale;  // 1 / number of trees

    static double impurity(const Stat& s) { return s.w > 0 ? 2.0 * s.a * (s.w - s.a) / s.w : 0.0; }
    double gain(const Stat& parent, const Stat& left, const Stat& right) const {
        return impurity(parent) - impurity(left) - impurity(right);
    }
    bool admissible(const Stat& left, const Stat& right) const { return left.w >= min_leaf && right.w >= min_leaf; }
    bool can_split(const Stat& s) const { return s.a > 0 && s.a < s.w && s.w >= 2.0 * min_leaf; }
    double leaf_value(const Stat& s) const { return s.a / s.w * tree_scale; }
};

/// Chooses the candidate features of each node; nullptr means all features.
struct FeatureSampler {
    std::size_t per_node;
    std::mt19937_64* rng;
};

constexpr double kMinGain = 1e-12;

template <class Criterion>
Tree grow_tree(const Columns& cols, const std::vector<Stat>& sample, int max_depth, const Criterion& crit,
               const FeatureSampler* sampler, std::vector<int>& node_of) {
    const std::size_t n = cols.n;
    const std::size_t nf = cols.f;

    Tree tree;
    std::vector<Stat> stat;
    Stat total;
    node_of.assign(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        if (sample[i].w > 0) {
            total += sample[i];
            node_of[i] = 0;
        }
    }
    tree.nodes.push_back(TreeNode{});
    tree.nodes[0].cover = total.w;
    stat.push_back(total);

    std::vector<int> frontier;
    if (crit.can_split(total)) {
        frontier.push_back(0);
    }

    struct Best {
        double gain = kMinGain;
        int feature = -1;
        double threshold = 0;
        Stat left;
    };
    struct Run {
        Stat left;
        double last = 0;
        bool has = false;
    };

    // Per-tree copy of the sort orders; rows outside the frontier are dropped lazily while scanning.
    std::vector<std::vector<std::uint32_t>> order = cols.order;
    std::vector<std::size_t> pool(nf);
    for (int depth = 0; !frontier.empty() && (max_depth <= 0 || depth < max_depth); ++depth) {
        const std::size_t nfront = frontier.size();
        std::vector<int> slot(tree.nodes.size(), -1);
        for (std::size_t k = 0; k < nfront; ++k) {
            slot[static_cast<std::size_t>(frontier[k])] = static_cast<int>(k);
        }

        std::vector<char> considered;  // nfront x nf
        std::vector<char> feature_used(nf, sampler ? 0 : 1);
        if (sampler) {
            considered.assign(nfront * nf, 0);
            const std::size_t m = std::min(sampler->per_node, nf);
            for (std::size_t k = 0; k < nfront; ++k) {
                std::iota(pool.begin(), pool.end(), std::size_t{0});
                for (std::size_t t = 0; t < m; ++t) {
                    std::uniform_int_distribution<std::size_t> pick(t, nf - 1);
                    std::swap(pool[t], pool[pick(*sampler->rng)]);
                    considered[k * nf + pool[t]] = 1;
                    feature_used[pool[t]] = 1;
                }
            }
        }

        std::vector<Best> best(nfront);
        std::vector<Run> run(nfront);
        for (std::size_t j = 0; j < nf; ++j) {
            if (!feature_used[j]) {
                continue;
            }
            std::fill(run.begin(), run.end(), Run{});
            const double* col = &cols.values[j * n];
            auto& ord = order[j];
            std::size_t kept = 0;
            for (std::uint32_t idx : ord) {
                const int node = node_of[idx];
                if (node < 0) {
                    continue;
                }
                const int s = slot[static_cast<std::size_t>(node)];
                if (s < 0) {
                    continue;
                }
                ord[kept++] = idx;
                const auto k = static_cast<std::size_t>(s);
                if (sampler && !considered[k * nf + j]) {
                    continue;
                }
                const double v = col[idx];
                Run& r = run[k];
                if (r.has && v > r.last) {
                    const Stat& parent = stat[static_cast<std::size_t>(node)];
                    const Stat right = parent - r.left;
                    if (crit.admissible(r.left, right)) {
                        const double g = crit.gain(parent, r.left, right);
                        if (g > best[k].gain) {
                            double thr = r.last + 0.5 * (v - r.last);
                            if (!(thr > r.last)) {
                                thr = v;
                            }
                            best[k] = Best{g, static_cast<int>(j), thr, r.left};
                        }
                    }
                }
                r.left += sample[idx];
                r.last = v;
                r.has = true;
            }
            ord.resize(kept);
        }

        std::vector<int> next;
        for (std::size_t k = 0; k < nfront; ++k) {
            if (best[k].feature < 0) {
                continue;
            }
            const auto node = static_cast<std::size_t>(frontier[k]);
            const Stat left = best[k].left;
            const Stat right = stat[node] - left;
            const int li = static_cast<int>(tree.nodes.size());
            TreeNode ln;
            ln.cover = left.w;
            TreeNode rn;
            rn.cover = right.w;
            tree.nodes.push_back(ln);
            tree.nodes.push_back(rn);
            stat.push_back(left);
            stat.push_back(right);
            TreeNode& parent = tree.nodes[node];
            parent.feature = best[k].feature;
            parent.threshold = best[k].threshold;
            parent.left = li;
            parent.right = li + 1;
            parent.cover = left.w + right.w;
            if (crit.can_split(left)) next.push_back(li);
            if (crit.can_split(right)) next.push_back(li + 1);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const int node = node_of[i];
            if (node < 0 || slot[static_cast<std::size_t>(node)] < 0) {
                continue;
            }
            const TreeNode& tn = tree.nodes[static_cast<std::size_t>(node)];
            if (!tn.is_leaf()) {
                node_of[i] = cols.at(i, static_cast<std::size_t>(tn.feature)) < tn.threshold ? tn.left : tn.right;
            }
        }
        frontier = std::move(next);
    }

    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        if (tree.nodes[i].is_leaf()) {
            tree.nodes[i].value = crit.leaf_value(stat[i]);
        }
    }
    return tree;
}

double log_loss(int y, double margin) noexcept {
    // softplus(m) - y*m, computed stably
    const double sp = std::max(margin, 0.0) + std::log1p(std::exp(-std::abs(margin)));
    return sp - (y ? margin : 0.0);
}

void require_both_classes(const Dataset& data) {
    const std::size_t pos = data.positives();
    if (data.rows() == 0 || pos == 0 || pos == data.rows()) {
        throw DegenerateDataError("training data must contain both classes");
    }
}

}  // namespace

TreeEnsemble train_gbdt(const Dataset& data, const GbdtParams& params, GbdtTrace* trace) {
    require_both_classes(data);
    if (params.trees < 0 || params.max_depth < 1 || !(params.learning_rate >= 0) || !(params.l2 >= 0) ||
        !(params.positive_weight > 0)) {
        throw ValidationError("invalid GBDT parameters");
    }
    const std::size_t n = data.rows();
    std::vector<double> weight(n);
    double wpos = 0, wneg = 0;
    for (std::size_t i = 0; i < n; ++i) {
        weight[i] = data.y[i] ? params.positive_weight : 1.0;
        (data.y[i] ? wpos : wneg) += weight[i];
    }

    TreeEnsemble model;
    model.kind = EnsembleKind::Gbdt;
    model.feature_names = data.feature_names;
    model.base_score = std::log(wpos / wneg);

    std::vector<double> margin(n, model.base_score);
    const auto total_loss = [&](const std::vector<double>& m) {
        double acc = 0;
        for (std::size_t i = 0; i < n; ++i) {
            acc += weight[i] * log_loss(data.y[i], m[i]);
        }
        return acc;
    };
    double loss = total_loss(margin);
    if (trace) {
        trace->loss = {loss};
        trace->backtracks = 0;
    }

    const Columns cols(data);
    const NewtonCriterion crit{params.l2, params.min_child_weight, params.learning_rate};
    std::vector<Stat> sample(n);
    std::vector<int> leaf_of;
    std::vector<double> trial(n);
    for (int t = 0; t < params.trees; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(margin[i]);
            sample[i] = Stat{weight[i] * (p - data.y[i]), weight[i] * p * (1.0 - p), weight[i]};
        }
        Tree tree = grow_tree(cols, sample, params.max_depth, crit, nullptr, leaf_of);

        // Newton steps can overshoot on the logistic loss; halve the tree until the loss does not rise.
        double trial_loss = 0;
        for (int attempt = 0;; ++attempt) {
            for (std::size_t i = 0; i < n; ++i) {
                trial[i] = margin[i] + tree.nodes[static_cast<std::size_t>(leaf_of[i])].value;
            }
            trial_loss = total_loss(trial);
            if (trial_loss <= loss) {
                break;
            }
            if (trace) {
                ++trace->backtracks;
            }
            const bool give_up = attempt >= 40;
            for (auto& node : tree.nodes) {
                if (node.is_leaf()) {
                    node.value = give_up ? 0.0 : 0.5 * node.value;
                }
            }
            if (give_up) {
                trial = margin;
                trial_loss = loss;
                break;
            }
        }
        margin.swap(trial);
        loss = trial_loss;
        if (trace) {
            trace->loss.push_back(loss);
        }
        model.trees.push_back(std::move(tree));
    }
    return model;
}

TreeEnsemble train_random_forest(const Dataset& data, const ForestParams& params) {
    require_both_classes(data);
    if (params.trees < 1 || params.max_depth < 0 || params.min_samples_leaf < 1) {
        throw ValidationError("invalid random forest parameters");
    }
    const std::size_t n = data.rows();
    const std::size_t per_node = params.features_per_split > 0
                                     ? static_cast<std::size_t>(params.features_per_split)
                                     : std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(std::sqrt(data.cols))));

    TreeEnsemble model;
    model.kind = EnsembleKind::RandomForest;
    model.feature_names = data.feature_names;
    model.base_score = 0.0;

    const Columns cols(data);
    const GiniCriterion crit{static_cast<double>(params.min_samples_leaf), 1.0 / params.trees};
    std::vector<Stat> sample(n);
    std::vector<int> leaf_of;
    for (int t = 0; t < params.trees; ++t) {
        std::mt19937_64 rng(mix_seed(params.seed, static_cast<std::uint64_t>(t)));
        std::vector<double> counts(n, params.bootstrap ? 0.0 : 1.0);
        if (params.bootstrap) {
            std::uniform_int_distribution<std::size_t> draw(0, n - 1);
            for (std::size_t k = 0; k < n; ++k) {
                counts[draw(rng)] += 1.0;
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            sample[i] = Stat{counts[i] * data.y[i], 0.0, counts[i]};
        }
        const FeatureSampler sampler{per_node, &rng};
        model.trees.push_back(grow_tree(cols, sample, params.max_depth, crit,
                                        per_node >= data.cols ? nullptr : &sampler, leaf_of));
    }
    return model;
}

// ---------------------------------------------------------------------------
// Logistic regression
// ---------------------------------------------------------------------------

double LogisticModel::logit_output(std::span<const double> x) const {
    double acc = intercept;
    for (std::size_t j = 0; j < coef.size(); ++j) {
        if (scale[j] > 0) {
            acc += coef[j] * (x[j] - mean[j]) / scale[j];
        }
    }
    return acc;
}

double LogisticModel::probability(std::span<const double> x) const { return sigmoid(logit_output(x)); }

LogisticModel train_logistic(const Dataset& data, const LogisticParams& params) {
    require_both_classes(data);
    if (!(params.l2 >= 0) || params.max_iter < 1 || !(params.tol > 0)) {
        throw ValidationError("invalid logistic regression parameters");
    }
    const std::size_t n = data.rows();
    const std::size_t d = data.cols;
    LogisticModel model;
    model.mean.assign(d, 0.0);
    model.scale.assign(d, 0.0);
    model.coef.assign(d, 0.0);

    std::vector<std::size_t> active;
    for (std::size_t j = 0; j < d; ++j) {
        double m = 0;
        for (std::size_t i = 0; i < n; ++i) m += data.x[i * d + j];
        m /= static_cast<double>(n);
        double v = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double c = data.x[i * d + j] - m;
            v += c * c;
        }
        v /= static_cast<double>(n);
        model.mean[j] = m;
        if (v > 1e-24 * std::max(1.0, m * m)) {
            model.scale[j] = std::sqrt(v);
            active.push_back(j);
        }
    }

    // Column 0 is the intercept.
    const auto p = static_cast<Eigen::Index>(active.size() + 1);
    Eigen::MatrixXd z(static_cast<Eigen::Index>(n), p);
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        z(ii, 0) = 1.0;
        for (std::size_t k = 0; k < active.size(); ++k) {
            const std::size_t j = active[k];
            z(ii, static_cast<Eigen::Index>(k + 1)) = (data.x[i * d + j] - model.mean[j]) / model.scale[j];
        }
        y(ii) = data.y[i];
    }
    Eigen::VectorXd penalty = Eigen::VectorXd::Constant(p, params.l2);
    penalty(0) = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);

    const auto objective = [&](const Eigen::VectorXd& theta) {
        const Eigen::VectorXd m = z * theta;
        double acc = 0;
        for (Eigen::Index i = 0; i < m.size(); ++i) acc += log_loss(static_cast<int>(y(i)), m(i));
        return acc * inv_n + 0.5 * (penalty.array() * theta.array().square()).sum();
    };
    const auto gradient = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& prob) {
        const Eigen::VectorXd m = z * theta;
        prob.resize(m.size());
        for (Eigen::Index i = 0; i < m.size(); ++i) prob(i) = sigmoid(m(i));
        Eigen::VectorXd g = inv_n * (z.transpose() * (prob - y));
        g.array() += penalty.array() * theta.array();
        return g;
    };

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd prob;
    Eigen::VectorXd grad = gradient(theta, prob);
    double f = objective(theta);
    int it = 0;
    for (; it < params.max_iter; ++it) {
        if (grad.norm() < params.tol) {
            model.converged = true;
            break;
        }
        const Eigen::VectorXd curv = prob.array() * (1.0 - prob.array());
        Eigen::MatrixXd h = inv_n * (z.transpose() * curv.asDiagonal() * z);
        h.diagonal() += penalty;
        h.diagonal().array() += 1e-12;
        const Eigen::VectorXd step = h.ldlt().solve(grad);
        const double slope = grad.dot(step);
        double t = 1.0;
        Eigen::VectorXd candidate = theta - step;
        double fc = objective(candidate);
        // near the optimum the decrease drowns in rounding noise of f; accept such steps
        const double noise = 8.0 * std::numeric_limits<double>::epsilon() * std::abs(f);
        while (fc > f - 1e-4 * t * slope + noise && t > 1e-12) {
            t *= 0.5;
            candidate = theta - t * step;
            fc = objective(candidate);
        }
        theta = candidate;
        f = fc;
        grad = gradient(theta, prob);
    }
    if (!model.converged && grad.norm() < params.tol) {
        model.converged = true;
    }
    model.iterations = it;
    model.gradient_norm = grad.norm();
    model.intercept = theta(0);
    for (std::size_t k = 0; k < active.size(); ++k) {
        model.coef[active[k]] = theta(static_cast<Eigen::Index>(k + 1));
    }
    return model;
}

// ---------------------------------------------------------------------------
// Uniform learner surface
// ---------------------------------------------------------------------------

namespace {
template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace

Model fit(const Dataset& data, const LearnerParams& params, std::uint64_t seed) {
    return std::visit(overloaded{
                          [&](const GbdtParams& p) -> Model { return train_gbdt(data, p); },
                          [&](const ForestParams& p) -> Model {
                              ForestParams q = p;
                              q.seed = seed;
                              return train_random_forest(data, q);
                          },
                          [&](const LogisticParams& p) -> Model { return train_logistic(data, p); },
                          [&](const MajorityParams&) -> Model {
                              if (data.rows() == 0) {
                                  throw DegenerateDataError("majority baseline needs training rows");
                              }
                              return MajorityModel{static_cast<double>(data.positives()) /
                                                   static_cast<double>(data.rows())};
                          },
                      },
                      params);
}

std::vector<double> predict_proba(const Model& model, const Dataset& data) {
    std::vector<double> out(data.rows());
    std::visit(overloaded{
                   [&](const TreeEnsemble& m) {
                       for (std::size_t i = 0; i < data.rows(); ++i) out[i] = m.probability(data.row(i));
                   },
                   [&](const LogisticModel& m) {
                       for (std::size_t i = 0; i < data.rows(); ++i) out[i] = m.probability(data.row(i));
                   },
                   [&](const MajorityModel& m) { std::fill(out.begin(), out.end(), m.positive_rate); },
               },
               model);
    return out;
}

std::vector<int> threshold_labels(std::span<const double> probabilities, double cut) {
    std::vector<int> out(probabilities.size());
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        out[i] = probabilities[i] > cut ? 1 : 0;
    }
    return out;
}

std::string learner_name(const LearnerParams& params) {
    return std::visit(overloaded{
                          [](const GbdtParams&) { return std::string("gbdt"); },
                          [](const ForestParams&) { return std::string("random_forest"); },
                          [](const LogisticParams&) { return std::string("logistic"); },
                          [](const MajorityParams&) { return std::string("majority"); },
                      },
                      params);
}

std::string describe(const LearnerParams& params) {
    return std::visit(overloaded{
                          [](const GbdtParams& p) {
                              return "gbdt(trees=" + std::to_string(p.trees) + " depth=" + std::to_string(p.max_depth) +
                                     " lr=" + format_double(p.learning_rate) + " l2=" + format_double(p.l2) +
                                     " mcw=" + format_double(p.min_child_weight) +
                                     " pos_weight=" + format_double(p.positive_weight) + ")";
                          },
                          [](const ForestParams& p) {
                              return "random_forest(trees=" + std::to_string(p.trees) + " depth=" +
                                     (p.max_depth == 0 ? std::string("inf") : std::to_string(p.max_depth)) +
                                     " mtry=" + std::to_string(p.features_per_split) + ")";
                          },
                          [](const LogisticParams& p) { return "logistic(l2=" + format_double(p.l2) + ")"; },
                          [](const MajorityParams&) { return std::string("majority()"); },
                      },
                      params);
}

ComplexityKey complexity(const LearnerParams& params) {
    constexpr double kInf = std::numeric_limits<double>::infinity();
    return std::visit(overloaded{
                          [](const GbdtParams& p) {
                              return ComplexityKey{static_cast<double>(p.trees), static_cast<double>(p.max_depth), -p.l2};
                          },
                          [&](const ForestParams& p) {
                              return ComplexityKey{static_cast<double>(p.trees),
                                                   p.max_depth == 0 ? kInf : static_cast<double>(p.max_depth), 0.0};
                          },
                          [](const LogisticParams& p) { return ComplexityKey{0, 0, -p.l2}; },
                          [&](const MajorityParams&) { return ComplexityKey{0, 0, -kInf}; },
                      },
                      params);
}

}  // namespace iuprobe
