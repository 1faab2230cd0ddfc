#include "iuprobe/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <utility>

namespace iuprobe {

RetweetGraph RetweetGraph::build(const ActivityStore& store) {
    std::set<std::string> names;
    for (const auto& r : store.activities()) {
        names.insert(r.user_id);
        if (r.referenced_user_id) {
            names.insert(*r.referenced_user_id);
        }
    }
    RetweetGraph g;
    g.nodes_.assign(names.begin(), names.end());

    std::map<std::pair<std::size_t, std::size_t>, double> weights;
    for (const auto& r : store.activities()) {
        if (r.kind == ActivityKind::Tweet || !r.referenced_user_id || *r.referenced_user_id == r.user_id) {
            continue;
        }
        const std::size_t src = *g.index_of(r.user_id);
        const std::size_t dst = *g.index_of(*r.referenced_user_id);
        weights[{src, dst}] += 1.0;
    }
    g.finalize(std::move(weights));
    return g;
}

RetweetGraph RetweetGraph::from_edges(std::vector<std::string> nodes,
                                      const std::vector<std::tuple<std::string, std::string, double>>& edges) {
    RetweetGraph g;
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    g.nodes_ = std::move(nodes);
    std::map<std::pair<std::size_t, std::size_t>, double> weights;
    for (const auto& [src, dst, w] : edges) {
        auto s = g.index_of(src);
        auto d = g.index_of(dst);
        if (!s || !d) {
            throw NotFoundError("edge endpoint not in node list: " + src + " -> " + dst);
        }
        if (!(w > 0.0) || !std::isfinite(w)) {
            throw ValidationError("edge weight must be positive and finite");
        }
        if (*s == *d) {
            continue;
        }
        weights[{*s, *d}] += w;
    }
    g.finalize(std::move(weights));
    return g;
}

void RetweetGraph::finalize(std::map<std::pair<std::size_t, std::size_t>, double> weights) {
    const std::size_t n = nodes_.size();
    out_offsets_.assign(n + 1, 0);
    in_offsets_.assign(n + 1, 0);
    out_weight_.assign(n, 0.0);
    for (const auto& [key, w] : weights) {
        ++out_offsets_[key.first + 1];
        ++in_offsets_[key.second + 1];
        out_weight_[key.first] += w;
    }
    for (std::size_t i = 0; i < n; ++i) {
        out_offsets_[i + 1] += out_offsets_[i];
        in_offsets_[i + 1] += in_offsets_[i];
    }
    out_targets_.resize(weights.size());
    in_sources_.resize(weights.size());
    std::vector<std::size_t> out_fill(out_offsets_.begin(), out_offsets_.end() - 1);
    std::vector<std::size_t> in_fill(in_offsets_.begin(), in_offsets_.end() - 1);
    // map iteration is (src, dst) ordered, so both adjacency lists come out sorted
    for (const auto& [key, w] : weights) {
        out_targets_[out_fill[key.first]++] = Edge{key.second, w};
        in_sources_[in_fill[key.second]++] = Edge{key.first, w};
    }
}

std::optional<std::size_t> RetweetGraph::index_of(std::string_view user) const {
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), user,
                               [](const std::string& a, std::string_view b) { return a < b; });
    if (it == nodes_.end() || *it != user) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - nodes_.begin());
}

std::span<const RetweetGraph::Edge> RetweetGraph::out_edges(std::size_t node) const {
    return {out_targets_.data() + out_offsets_[node], out_offsets_[node + 1] - out_offsets_[node]};
}

std::span<const RetweetGraph::Edge> RetweetGraph::in_edges(std::size_t node) const {
    return {in_sources_.data() + in_offsets_[node], in_offsets_[node + 1] - in_offsets_[node]};
}

void RetweetGraph::write_edge_list(std::ostream& out) const {
    out << "src,dst,weight\n";
    for (std::size_t u = 0; u < nodes_.size(); ++u) {
        for (const Edge& e : out_edges(u)) {
            out << nodes_[u] << ',' << nodes_[e.target] << ',' << format_double(e.weight) << '\n';
        }
    }
}

CentralityResult eigencentrality(const RetweetGraph& graph, const CentralityOptions& options) {
    const std::size_t n = graph.node_count();
    if (n == 0) {
        throw ValidationError("eigencentrality: empty graph");
    }
    // Power iteration on (I + A^T + teleport * J). The identity shift leaves the Perron vector
    // unchanged but removes the oscillation of periodic graphs (e.g. directed cycles).
    std::vector<double> x(n, 1.0);
    std::vector<double> y(n, 0.0);
    CentralityResult result;
    for (std::size_t it = 0; it < options.max_iterations; ++it) {
        double total = 0.0;
        for (double v : x) {
            total += v;
        }
        for (std::size_t v = 0; v < n; ++v) {
            double acc = x[v] + options.teleport * total;
            for (const auto& e : graph.in_edges(v)) {
                acc += e.weight * x[e.target];
            }
            y[v] = acc;
        }
        const double peak = *std::max_element(y.begin(), y.end());
        double delta = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
            y[v] /= peak;
            delta = std::max(delta, std::abs(y[v] - x[v]));
        }
        x.swap(y);
        result.iterations = it + 1;
        if (delta < options.tolerance) {
            result.converged = true;
            break;
        }
    }
    for (std::size_t v = 0; v < n; ++v) {
        result.scores.emplace(graph.nodes()[v], x[v]);
    }
    return result;
}

double BeliefVector::at(std::string_view user) const {
    auto it = std::lower_bound(users.begin(), users.end(), user,
                               [](const std::string& a, std::string_view b) { return a < b; });
    if (it == users.end() || *it != user) {
        return 0.0;
    }
    return values[static_cast<std::size_t>(it - users.begin())];
}

BeliefVector degroot_diffuse(const RetweetGraph& graph, const std::set<std::string>& seeds,
                             const DiffusionOptions& options) {
    const std::size_t n = graph.node_count();
    std::vector<char> is_seed(n, 0);
    for (const auto& s : seeds) {
        auto idx = graph.index_of(s);
        if (!idx) {
            throw NotFoundError("diffusion seed not in graph: " + s);
        }
        is_seed[*idx] = 1;
    }

    BeliefVector beliefs;
    beliefs.users = graph.nodes();
    std::vector<double> cur(n, 0.0);
    std::size_t positive = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (is_seed[i]) {
            cur[i] = 1.0;
            ++positive;
        }
    }
    std::vector<double> next(n, 0.0);

    constexpr double kTiny = std::numeric_limits<double>::denorm_min();
    std::size_t it = 0;
    while (true) {
        std::size_t now_positive = 0;
        double delta = 0.0;
        for (std::size_t u = 0; u < n; ++u) {
            double value;
            if (is_seed[u]) {
                value = 1.0;
            } else {
                double num = cur[u];
                bool reaches = num > 0.0;
                for (const auto& e : graph.out_edges(u)) {
                    if (cur[e.target] > 0.0) {
                        num += e.weight * cur[e.target];
                        reaches = true;
                    }
                }
                value = num / (1.0 + graph.out_weight(u));
                // keep exposure visible even if the product underflows
                if (reaches && value <= 0.0) {
                    value = kTiny;
                }
            }
            next[u] = value;
            delta = std::max(delta, std::abs(value - cur[u]));
            if (value > 0.0) {
                ++now_positive;
            }
        }
        cur.swap(next);
        ++it;
        const bool support_stable = now_positive == positive;
        positive = now_positive;
        if (support_stable && delta < options.tolerance) {
            beliefs.converged = true;
            break;
        }
        if (support_stable && it >= options.max_iterations) {
            break;
        }
    }
    beliefs.iterations = it;
    beliefs.values = std::move(cur);
    return beliefs;
}

Group GroupPartition::group_of(std::string_view user) const {
    const std::string key(user);
    if (iu.count(key)) return Group::IU;
    if (bu.count(key)) return Group::BU;
    if (niu.count(key)) return Group::NIU;
    if (excluded.count(key)) return Group::Excluded;
    throw NotFoundError("user not in partition: " + key);
}

const std::set<std::string>& GroupPartition::members(Group group) const {
    switch (group) {
    case Group::IU: return iu;
    case Group::BU: return bu;
    case Group::NIU: return niu;
    case Group::Excluded: return excluded;
    }
    return excluded;
}

std::set<std::string>& GroupPartition::members(Group group) {
    return const_cast<std::set<std::string>&>(std::as_const(*this).members(group));
}

GroupPartition partition_groups(const ActivityStore& store, const BeliefVector& beliefs,
                                const std::set<std::string>& iu, std::size_t min_activities) {
    GroupPartition p;
    for (const auto& user : store.users()) {
        if (iu.count(user)) {
            p.iu.insert(user);
        } else if (store.activity_count_of(user) < min_activities) {
            p.excluded.insert(user);
        } else if (beliefs.at(user) == 0.0) {
            p.niu.insert(user);
        } else {
            p.bu.insert(user);
        }
    }
    for (const auto& user : iu) {
        if (!store.has_user(user)) {
            throw NotFoundError("IU user not in store: " + user);
        }
    }
    return p;
}

}  // namespace iuprobe
