#pragma once

// Independent reference implementations used by the unit and acceptance suites. Each one is
// written from the textbook definition and deliberately shares no code path with the library.

#include "iuprobe/graph.hpp"
#include "iuprobe/learners.hpp"
#include "iuprobe/stats.hpp"
#include "iuprobe/tree.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numbers>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace oracle {

// ---------------------------------------------------------------------------
// Rank statistics
// ---------------------------------------------------------------------------

/// O(N^2) mid-rank: 1 + #smaller + (#equal - 1) / 2.
inline std::vector<double> naive_ranks(const std::vector<double>& pooled) {
    std::vector<double> r(pooled.size());
    for (std::size_t i = 0; i < pooled.size(); ++i) {
        double less = 0, equal = 0;
        for (double v : pooled) {
            if (v < pooled[i]) less += 1;
            if (v == pooled[i]) equal += 1;
        }
        r[i] = less + (equal + 1.0) / 2.0;
    }
    return r;
}

/// Sum over tie blocks of (t^3 - t).
inline double tie_sum(const std::vector<double>& pooled) {
    std::vector<double> s = pooled;
    std::sort(s.begin(), s.end());
    double acc = 0;
    for (std::size_t i = 0; i < s.size();) {
        std::size_t j = i;
        while (j < s.size() && s[j] == s[i]) ++j;
        const double t = static_cast<double>(j - i);
        acc += t * t * t - t;
        i = j;
    }
    return acc;
}

struct Pooled {
    std::vector<double> values;
    std::vector<double> ranks;
    std::vector<double> rank_sum;
    std::vector<double> size;
};

inline Pooled pool(const std::vector<std::vector<double>>& groups) {
    Pooled p;
    for (const auto& g : groups) p.values.insert(p.values.end(), g.begin(), g.end());
    p.ranks = naive_ranks(p.values);
    std::size_t at = 0;
    for (const auto& g : groups) {
        double s = 0;
        for (std::size_t i = 0; i < g.size(); ++i) s += p.ranks[at++];
        p.rank_sum.push_back(s);
        p.size.push_back(static_cast<double>(g.size()));
    }
    return p;
}

inline double kruskal_h(const std::vector<std::vector<double>>& groups) {
    const Pooled p = pool(groups);
    const double n = static_cast<double>(p.values.size());
    double h = 0;
    for (std::size_t g = 0; g < groups.size(); ++g) h += p.rank_sum[g] * p.rank_sum[g] / p.size[g];
    h = 12.0 / (n * (n + 1.0)) * h - 3.0 * (n + 1.0);
    return h / (1.0 - tie_sum(p.values) / (n * n * n - n));
}

inline double dunn_z(const std::vector<std::vector<double>>& groups, std::size_t a, std::size_t b) {
    const Pooled p = pool(groups);
    const double n = static_cast<double>(p.values.size());
    const double var = n * (n + 1.0) / 12.0 - tie_sum(p.values) / (12.0 * (n - 1.0));
    const double diff = p.rank_sum[a] / p.size[a] - p.rank_sum[b] / p.size[b];
    return diff / std::sqrt(var * (1.0 / p.size[a] + 1.0 / p.size[b]));
}

/// Tie-corrected Mann-Whitney z from brute-force U; for two groups H = z^2 and Dunn's z = z.
inline double mann_whitney_z(const std::vector<double>& a, const std::vector<double>& b) {
    double u = 0;
    for (double x : a)
        for (double y : b) u += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
    std::vector<double> all = a;
    all.insert(all.end(), b.begin(), b.end());
    const double n1 = static_cast<double>(a.size()), n2 = static_cast<double>(b.size()), n = n1 + n2;
    const double var = n1 * n2 / 12.0 * ((n + 1.0) - tie_sum(all) / (n * (n - 1.0)));
    return (u - n1 * n2 / 2.0) / std::sqrt(var);
}

struct Pairs {
    std::uint64_t greater = 0;
    std::uint64_t less = 0;
};

inline Pairs pair_count(const std::vector<double>& a, const std::vector<double>& b) {
    Pairs c;
    for (double x : a)
        for (double y : b) {
            if (x > y) ++c.greater;
            if (x < y) ++c.less;
        }
    return c;
}

inline double cliff_delta(const std::vector<double>& a, const std::vector<double>& b) {
    const Pairs c = pair_count(a, b);
    return (static_cast<double>(c.greater) - static_cast<double>(c.less)) /
           (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

/// Chi-squared survival from the closed forms for integer degrees of freedom.
inline double chi2_sf(double x, int df) {
    if (x <= 0) return 1.0;
    if (df % 2 == 0) {
        double term = 1, sum = 1;
        for (int i = 1; i < df / 2; ++i) {
            term *= (x / 2.0) / i;
            sum += term;
        }
        return std::exp(-x / 2.0) * sum;
    }
    const double r = std::sqrt(x);
    double sum = 0, term = r;
    for (int j = 1; j <= (df - 1) / 2; ++j) {
        if (j > 1) term *= x / (2.0 * j - 1.0);
        sum += term;
    }
    return std::erfc(r / std::numbers::sqrt2) + std::sqrt(2.0 / std::numbers::pi) * std::exp(-x / 2.0) * sum;
}

inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

// ---------------------------------------------------------------------------
// Graphs
// ---------------------------------------------------------------------------

/// Users with a directed retweet path to some seed (seeds included).
inline std::vector<char> reaches_seed(const iuprobe::RetweetGraph& g, const std::set<std::string>& seeds) {
    std::vector<char> seen(g.node_count(), 0);
    std::deque<std::size_t> queue;
    for (const auto& s : seeds) {
        const std::size_t i = *g.index_of(s);
        if (!seen[i]) {
            seen[i] = 1;
            queue.push_back(i);
        }
    }
    while (!queue.empty()) {
        const std::size_t v = queue.front();
        queue.pop_front();
        for (const auto& e : g.in_edges(v)) {
            if (!seen[e.target]) {
                seen[e.target] = 1;
                queue.push_back(e.target);
            }
        }
    }
    return seen;
}

/// Fixed point of the DeGroot update: seeds at 1, users that cannot reach a seed at 0, every
/// other user equal to the edge-weighted mean of the users they retweeted. Dense LU solve.
inline std::vector<double> diffusion_fixed_point(const iuprobe::RetweetGraph& g, const std::set<std::string>& seeds) {
    const std::size_t n = g.node_count();
    const std::vector<char> reach = reaches_seed(g, seeds);
    std::vector<char> is_seed(n, 0);
    for (const auto& s : seeds) is_seed[*g.index_of(s)] = 1;
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t u = 0; u < n; ++u) {
        const auto iu = static_cast<Eigen::Index>(u);
        if (is_seed[u]) {
            rhs(iu) = 1.0;
        } else if (reach[u]) {
            a(iu, iu) = g.out_weight(u);
            for (const auto& e : g.out_edges(u)) a(iu, static_cast<Eigen::Index>(e.target)) -= e.weight;
        }
    }
    const Eigen::VectorXd x = a.partialPivLu().solve(rhs);
    return {x.data(), x.data() + x.size()};
}

/// Leading eigenvector of I + A^T + teleport * J via a dense eigen-decomposition, max-normalised.
inline std::vector<double> centrality_dense(const iuprobe::RetweetGraph& g, double teleport) {
    const auto n = static_cast<Eigen::Index>(g.node_count());
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n) + Eigen::MatrixXd::Constant(n, n, teleport);
    for (std::size_t u = 0; u < g.node_count(); ++u)
        for (const auto& e : g.out_edges(u)) m(static_cast<Eigen::Index>(e.target), static_cast<Eigen::Index>(u)) += e.weight;
    Eigen::EigenSolver<Eigen::MatrixXd> solver(m);
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < n; ++i)
        if (solver.eigenvalues()(i).real() > solver.eigenvalues()(best).real()) best = i;
    Eigen::VectorXd v = solver.eigenvectors().col(best).real();
    if (v.sum() < 0) v = -v;
    v /= v.maxCoeff();
    return {v.data(), v.data() + v.size()};
}

// ---------------------------------------------------------------------------
// Logistic regression by plain gradient descent
// ---------------------------------------------------------------------------

struct LogisticFit {
    std::vector<double> coef;  // standardised space, constant columns 0
    double intercept = 0;
};

/// Full-batch gradient descent with the fixed step 1/L, L a Lipschitz bound of the gradient.
inline LogisticFit logistic_gd(const iuprobe::Dataset& d, double l2, int max_iter = 2000000, double tol = 1e-11) {
    const std::size_t n = d.rows(), p = d.cols;
    std::vector<double> mean(p, 0), sd(p, 0);
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t i = 0; i < n; ++i) mean[j] += d.x[i * p + j];
        mean[j] /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) sd[j] += (d.x[i * p + j] - mean[j]) * (d.x[i * p + j] - mean[j]);
        sd[j] = std::sqrt(sd[j] / static_cast<double>(n));
    }
    auto z = [&](std::size_t i, std::size_t j) { return sd[j] > 1e-12 ? (d.x[i * p + j] - mean[j]) / sd[j] : 0.0; };
    const double step = 1.0 / (0.25 * static_cast<double>(p + 1) + l2);
    std::vector<double> w(p, 0), g(p);
    double b = 0;
    for (int it = 0; it < max_iter; ++it) {
        std::fill(g.begin(), g.end(), 0.0);
        double gb = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double eta = b;
            for (std::size_t j = 0; j < p; ++j) eta += w[j] * z(i, j);
            const double r = 1.0 / (1.0 + std::exp(-eta)) - d.y[i];
            gb += r;
            for (std::size_t j = 0; j < p; ++j) g[j] += r * z(i, j);
        }
        double norm = gb * gb / (static_cast<double>(n) * n);
        for (std::size_t j = 0; j < p; ++j) {
            g[j] = g[j] / static_cast<double>(n) + l2 * w[j];
            norm += g[j] * g[j];
        }
        if (std::sqrt(norm) < tol) break;
        b -= step * gb / static_cast<double>(n);
        for (std::size_t j = 0; j < p; ++j) w[j] -= step * g[j];
    }
    return {w, b};
}

// ---------------------------------------------------------------------------
// Trees and Shapley values
// ---------------------------------------------------------------------------

/// Random tree with consistent covers: leaf covers are drawn, inner covers are their sums.
inline iuprobe::Tree random_tree(std::mt19937_64& rng, std::size_t features, int max_depth) {
    iuprobe::Tree t;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> value(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> feat(0, features - 1);
    // Build depth-first; returns node index.
    auto build = [&](auto&& self, int depth) -> int {
        const int id = static_cast<int>(t.nodes.size());
        t.nodes.emplace_back();
        if (depth >= max_depth || (depth > 0 && unit(rng) < 0.3)) {
            t.nodes[id].value = value(rng);
            t.nodes[id].cover = 1.0 + std::floor(unit(rng) * 20.0);
            return id;
        }
        t.nodes[id].feature = static_cast<int>(feat(rng));
        t.nodes[id].threshold = std::round(unit(rng) * 8.0) / 8.0;
        const int l = self(self, depth + 1);
        const int r = self(self, depth + 1);
        t.nodes[id].left = l;
        t.nodes[id].right = r;
        t.nodes[id].cover = t.nodes[l].cover + t.nodes[r].cover;
        return id;
    };
    build(build, 0);
    return t;
}

/// Cover-weighted conditional expectation of one tree given the features in `mask`.
inline double masked_value(const iuprobe::Tree& t, int node, std::span<const double> x, std::uint32_t mask) {
    const auto& nd = t.nodes[static_cast<std::size_t>(node)];
    if (nd.is_leaf()) return nd.value;
    if (mask >> nd.feature & 1u) return masked_value(t, x[nd.feature] < nd.threshold ? nd.left : nd.right, x, mask);
    const auto& l = t.nodes[static_cast<std::size_t>(nd.left)];
    const auto& r = t.nodes[static_cast<std::size_t>(nd.right)];
    return (l.cover * masked_value(t, nd.left, x, mask) + r.cover * masked_value(t, nd.right, x, mask)) / nd.cover;
}

/// Shapley values of the masked game, by enumerating every coalition with factorial weights.
inline std::vector<double> shapley(const iuprobe::TreeEnsemble& e, std::span<const double> x) {
    const std::size_t m = e.num_features();
    auto game = [&](std::uint32_t mask) {
        double v = e.base_score;
        for (const auto& t : e.trees) v += masked_value(t, 0, x, mask);
        return v;
    };
    std::vector<double> fact(m + 1, 1.0);
    for (std::size_t i = 1; i <= m; ++i) fact[i] = fact[i - 1] * static_cast<double>(i);
    std::vector<double> phi(m, 0.0);
    for (std::uint32_t s = 0; s < (1u << m); ++s) {
        const auto k = static_cast<std::size_t>(__builtin_popcount(s));
        const double base = game(s);
        for (std::size_t i = 0; i < m; ++i) {
            if (s >> i & 1u) continue;
            phi[i] += fact[k] * fact[m - k - 1] / fact[m] * (game(s | (1u << i)) - base);
        }
    }
    return phi;
}

}  // namespace oracle
