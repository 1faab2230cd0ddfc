#include "iuprobe/explain.hpp"
#include "iuprobe/graph.hpp"
#include "iuprobe/learners.hpp"
#include "iuprobe/stats.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <tuple>
#include <vector>

using namespace iuprobe;

namespace {

Dataset make_dataset(std::size_t n, std::size_t cols) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> z(0, 1);
    Dataset d;
    d.cols = cols;
    for (std::size_t j = 0; j < cols; ++j) d.feature_names.push_back("c" + std::to_string(j));
    for (std::size_t i = 0; i < n; ++i) {
        const int y = i % 21 == 0 ? 1 : 0;
        for (std::size_t j = 0; j < cols; ++j) d.x.push_back(z(rng) + (j < 5 ? 0.8 * y : 0.0));
        d.y.push_back(y);
        d.ids.push_back(std::to_string(i));
    }
    return d;
}

RetweetGraph make_graph(std::size_t n, double mean_degree) {
    std::mt19937_64 rng(5);
    std::vector<std::string> nodes;
    for (std::size_t i = 0; i < n; ++i) nodes.push_back("u" + std::to_string(i));
    std::vector<std::tuple<std::string, std::string, double>> edges;
    const auto m = static_cast<std::size_t>(mean_degree * static_cast<double>(n));
    for (std::size_t e = 0; e < m; ++e) {
        const std::size_t a = rng() % n, b = rng() % n;
        if (a != b) edges.emplace_back(nodes[a], nodes[b], 1.0);
    }
    return RetweetGraph::from_edges(nodes, edges);
}

void BM_GbdtFit(benchmark::State& state) {
    const auto d = make_dataset(static_cast<std::size_t>(state.range(0)), 71);
    GbdtParams p;
    p.trees = 50;
    p.max_depth = 5;
    for (auto _ : state) benchmark::DoNotOptimize(train_gbdt(d, p));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GbdtFit)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_TreeShap(benchmark::State& state) {
    const auto d = make_dataset(4000, 71);
    GbdtParams p;
    p.trees = static_cast<int>(state.range(0));
    p.max_depth = 5;
    const auto model = train_gbdt(d, p);
    std::size_t row = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(tree_shap(model, d.row(row)));
        row = (row + 1) % d.rows();
    }
}
BENCHMARK(BM_TreeShap)->Arg(50)->Arg(200)->Unit(benchmark::kMicrosecond);

void BM_KruskalDunnCliff(benchmark::State& state) {
    std::mt19937_64 rng(3);
    std::lognormal_distribution<double> v(0, 1);
    const auto n = static_cast<std::size_t>(state.range(0));
    std::vector<std::vector<double>> groups{std::vector<double>(n * 20), std::vector<double>(n), std::vector<double>(n)};
    for (auto& g : groups)
        for (auto& x : g) x = std::round(10 * v(rng));
    for (auto _ : state) {
        benchmark::DoNotOptimize(kruskal_wallis(groups));
        benchmark::DoNotOptimize(dunn_pairwise(groups, 0, 2));
        benchmark::DoNotOptimize(cliffs_delta(groups[0], groups[2]));
    }
}
BENCHMARK(BM_KruskalDunnCliff)->Arg(50)->Arg(200)->Unit(benchmark::kMicrosecond);

void BM_Diffusion(benchmark::State& state) {
    const auto g = make_graph(static_cast<std::size_t>(state.range(0)), 3.0);
    const std::set<std::string> seeds{"u0", "u1", "u2"};
    for (auto _ : state) benchmark::DoNotOptimize(degroot_diffuse(g, seeds));
}
BENCHMARK(BM_Diffusion)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_Eigencentrality(benchmark::State& state) {
    const auto g = make_graph(static_cast<std::size_t>(state.range(0)), 3.0);
    for (auto _ : state) benchmark::DoNotOptimize(eigencentrality(g));
}
BENCHMARK(BM_Eigencentrality)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
