#pragma once

#include "iuprobe/ingest.hpp"

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace iuprobe {

/// Directed weighted retweet graph: edge u -> v counts how often u retweeted or quoted v.
///
/// Nodes are every user appearing as the actor or target of an activity, indexed in
/// lexicographic order. Self-retweets are dropped.
class RetweetGraph {
public:
    struct Edge {
        std::size_t target;
        double weight;
    };

    RetweetGraph() = default;

    static RetweetGraph build(const ActivityStore& store);
    /// Builds from explicit (src, dst, weight) triples; used by tests and the edge-list reader.
    static RetweetGraph from_edges(std::vector<std::string> nodes,
                                   const std::vector<std::tuple<std::string, std::string, double>>& edges);

    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t edge_count() const noexcept { return out_targets_.size(); }
    const std::vector<std::string>& nodes() const noexcept { return nodes_; }
    std::optional<std::size_t> index_of(std::string_view user) const;

    /// Outgoing edges (users that `node` retweeted), sorted by target index.
    std::span<const Edge> out_edges(std::size_t node) const;
    /// Incoming edges (users that retweeted `node`), sorted by source index; `target` holds the source.
    std::span<const Edge> in_edges(std::size_t node) const;
    double out_weight(std::size_t node) const noexcept { return out_weight_[node]; }

    /// CSV `src,dst,weight`, rows in (src, dst) order.
    void write_edge_list(std::ostream& out) const;

private:
    void finalize(std::map<std::pair<std::size_t, std::size_t>, double> weights);

    std::vector<std::string> nodes_;
    std::vector<std::size_t> out_offsets_;
    std::vector<Edge> out_targets_;
    std::vector<std::size_t> in_offsets_;
    std::vector<Edge> in_sources_;
    std::vector<double> out_weight_;
};

struct CentralityOptions {
    double teleport = 1e-4;
    double tolerance = 1e-10;
    std::size_t max_iterations = 1000;
};

struct CentralityResult {
    std::map<std::string, double> scores;
    std::size_t iterations = 0;
    bool converged = false;
};

/// Eigenvector centrality on reversed edges (score flows to retweeted users), max-normalized to 1.
/// Throws ValidationError on an empty graph.
CentralityResult eigencentrality(const RetweetGraph& graph, const CentralityOptions& options = {});

struct DiffusionOptions {
    std::size_t max_iterations = 100;
    double tolerance = 1e-6;
};

/// DeGroot beliefs over graph nodes, in node order.
struct BeliefVector {
    std::vector<std::string> users;
    std::vector<double> values;
    std::size_t iterations = 0;
    bool converged = false;

    /// 0 for users not in the graph.
    double at(std::string_view user) const;
};

/// Belief diffusion seeded at `seeds` (clamped to 1). Each user averages their own belief with
/// the beliefs of the users they retweeted, weighted by edge counts plus a unit self-weight.
///
/// `max_iterations` caps numerical refinement only: iteration continues while the set of
/// users with positive belief is still growing, so positivity is exactly reachability.
BeliefVector degroot_diffuse(const RetweetGraph& graph, const std::set<std::string>& seeds,
                             const DiffusionOptions& options = {});

struct GroupPartition {
    std::set<std::string> iu;
    std::set<std::string> bu;
    std::set<std::string> niu;
    std::set<std::string> excluded;

    Group group_of(std::string_view user) const;
    std::size_t total() const noexcept { return iu.size() + bu.size() + niu.size() + excluded.size(); }
    const std::set<std::string>& members(Group group) const;
    std::set<std::string>& members(Group group);
};

/// Non-IU users with at least `min_activities` activities go to NIU (belief exactly 0) or BU;
/// the rest are Excluded. IU membership is never affected by the activity threshold.
GroupPartition partition_groups(const ActivityStore& store, const BeliefVector& beliefs,
                                const std::set<std::string>& iu, std::size_t min_activities = 10);

}  // namespace iuprobe
