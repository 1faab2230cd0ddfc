#include "iuprobe/graph.hpp"

#include "support/oracles.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace iuprobe;

namespace {

ActivityRecord retweet(std::string id, std::string user, std::string ref_id, std::string ref_user) {
    ActivityRecord r;
    r.activity_id = std::move(id);
    r.user_id = std::move(user);
    r.kind = ActivityKind::Retweet;
    r.referenced_activity_id = std::move(ref_id);
    r.referenced_user_id = std::move(ref_user);
    r.created_at = 1600000000;
    return r;
}

ActivityRecord tweet(std::string id, std::string user) {
    ActivityRecord r;
    r.activity_id = std::move(id);
    r.user_id = std::move(user);
    r.created_at = 1600000000;
    return r;
}

RetweetGraph random_graph(std::mt19937_64& rng, std::size_t n, double density) {
    std::vector<std::string> nodes;
    for (std::size_t i = 0; i < n; ++i) nodes.push_back("n" + std::to_string(1000 + i));
    std::vector<std::tuple<std::string, std::string, double>> edges;
    std::bernoulli_distribution edge(density);
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = 0; v < n; ++v)
            if (u != v && edge(rng)) edges.emplace_back(nodes[u], nodes[v], 1.0 + static_cast<double>(rng() % 3));
    return RetweetGraph::from_edges(nodes, edges);
}

}  // namespace

TEST_CASE("graph construction counts retweets and quotes, drops self loops") {
    std::vector<ActivityRecord> recs{tweet("t1", "b"), retweet("r1", "a", "t1", "b"), retweet("r2", "a", "t1", "b"),
                                     retweet("r3", "b", "t1", "b"), tweet("t2", "c")};
    ActivityRecord q = tweet("q1", "c");
    q.kind = ActivityKind::Quote;
    q.referenced_activity_id = "t1";
    q.referenced_user_id = "b";
    recs.push_back(q);
    const ActivityStore store(recs, {});
    const auto g = RetweetGraph::build(store);
    CHECK(g.node_count() == 3);
    CHECK(g.edge_count() == 2);
    const std::size_t a = *g.index_of("a"), b = *g.index_of("b");
    REQUIRE(g.out_edges(a).size() == 1);
    CHECK(g.out_edges(a)[0].target == b);
    CHECK(g.out_edges(a)[0].weight == 2.0);
    CHECK(g.out_weight(a) == 2.0);
    CHECK(g.in_edges(b).size() == 2);
    std::ostringstream out;
    g.write_edge_list(out);
    CHECK(out.str() == "src,dst,weight\na,b,2\nc,b,1\n");
}

TEST_CASE("from_edges validation") {
    CHECK_THROWS_AS(RetweetGraph::from_edges({"a"}, {{"a", "z", 1.0}}), NotFoundError);
    CHECK_THROWS_AS(RetweetGraph::from_edges({"a", "b"}, {{"a", "b", 0.0}}), ValidationError);
}

TEST_CASE("eigencentrality matches a dense eigensolver") {
    std::mt19937_64 rng(21);
    for (int rep = 0; rep < 20; ++rep) {
        const auto g = random_graph(rng, 5 + rng() % 40, 0.08);
        const auto res = eigencentrality(g);
        REQUIRE(res.converged);
        const auto ref = oracle::centrality_dense(g, CentralityOptions{}.teleport);
        for (std::size_t i = 0; i < g.node_count(); ++i) {
            CHECK(res.scores.at(g.nodes()[i]) == doctest::Approx(ref[i]).epsilon(1e-6));
        }
    }
}

TEST_CASE("eigencentrality converges on a directed cycle") {
    const auto g = RetweetGraph::from_edges({"a", "b", "c"}, {{"a", "b", 1}, {"b", "c", 1}, {"c", "a", 1}});
    const auto res = eigencentrality(g);
    CHECK(res.converged);
    for (const auto& [user, s] : res.scores) CHECK(s == doctest::Approx(1.0));
    CHECK_THROWS_AS(eigencentrality(RetweetGraph{}), ValidationError);
}

TEST_CASE("DeGroot beliefs: chain example and fixed point") {
    // a retweets b, b retweets s (seed).
    const auto g = RetweetGraph::from_edges({"a", "b", "s", "x"}, {{"a", "b", 1}, {"b", "s", 1}, {"s", "x", 1}});
    const auto b = degroot_diffuse(g, {"s"}, DiffusionOptions{100000, 1e-14});
    CHECK(b.converged);
    CHECK(b.at("s") == 1.0);
    CHECK(b.at("x") == 0.0);
    CHECK(b.at("a") > 0.0);
    CHECK(b.at("b") == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(b.at("nobody") == 0.0);
    CHECK_THROWS_AS(degroot_diffuse(g, {"ghost"}), NotFoundError);
}

TEST_CASE("DeGroot positivity equals reachability even with a tiny iteration cap") {
    // Long chain: the cap would stop numerical refinement long before the tail is reached.
    std::vector<std::string> nodes;
    std::vector<std::tuple<std::string, std::string, double>> edges;
    for (int i = 0; i < 60; ++i) nodes.push_back("c" + std::to_string(100 + i));
    for (int i = 0; i + 1 < 60; ++i) edges.emplace_back(nodes[i + 1], nodes[i], 5.0);
    const auto g = RetweetGraph::from_edges(nodes, edges);
    const auto b = degroot_diffuse(g, {nodes[0]}, DiffusionOptions{2, 1e-6});
    for (const auto& n : nodes) CHECK(b.at(n) > 0.0);
}

TEST_CASE("DeGroot agrees with the linear fixed point on random graphs") {
    std::mt19937_64 rng(8);
    for (int rep = 0; rep < 15; ++rep) {
        const auto g = random_graph(rng, 10 + rng() % 30, 0.1);
        std::set<std::string> seeds{g.nodes()[rng() % g.node_count()]};
        const auto b = degroot_diffuse(g, seeds, DiffusionOptions{1000000, 1e-14});
        const auto ref = oracle::diffusion_fixed_point(g, seeds);
        for (std::size_t i = 0; i < g.node_count(); ++i) CHECK(b.values[i] == doctest::Approx(ref[i]).epsilon(1e-7));
    }
}

TEST_CASE("group partition") {
    std::vector<ActivityRecord> recs;
    for (int i = 0; i < 3; ++i) recs.push_back(tweet("i" + std::to_string(i), "iu"));
    recs.push_back(retweet("b0", "bu", "i0", "iu"));
    for (int i = 1; i < 3; ++i) recs.push_back(tweet("b" + std::to_string(i), "bu"));
    for (int i = 0; i < 3; ++i) recs.push_back(tweet("n" + std::to_string(i), "niu"));
    recs.push_back(tweet("z0", "quiet"));
    recs.push_back(retweet("z1", "quiet", "i0", "iu"));
    const ActivityStore store(recs, {});
    const auto g = RetweetGraph::build(store);
    const auto beliefs = degroot_diffuse(g, {"iu"});
    const auto p = partition_groups(store, beliefs, {"iu"}, 3);
    CHECK(p.group_of("iu") == Group::IU);
    CHECK(p.group_of("bu") == Group::BU);
    CHECK(p.group_of("niu") == Group::NIU);
    CHECK(p.group_of("quiet") == Group::Excluded);
    CHECK(p.total() == 4);
    CHECK_THROWS_AS(p.group_of("nobody"), NotFoundError);
    CHECK_THROWS_AS(partition_groups(store, beliefs, {"ghost"}, 3), NotFoundError);
}
