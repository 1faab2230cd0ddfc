#include "iuprobe/tree.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace iuprobe {

double sigmoid(double x) noexcept {
    if (x >= 0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double logit(double p) noexcept { return std::log(p) - std::log1p(-p); }

double Tree::predict(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
        const TreeNode& n = nodes[i];
        i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right);
    }
    return nodes[i].value;
}

double Tree::expected_value() const {
    double acc = 0.0;
    for (const auto& n : nodes) {
        if (n.is_leaf()) {
            acc += n.value * n.cover;
        }
    }
    return acc / nodes.front().cover;
}

int Tree::depth() const {
    std::vector<int> d(nodes.size(), 0);
    int best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!nodes[i].is_leaf()) {
            d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
            d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
            best = std::max(best, d[i] + 1);
        }
    }
    return best;
}

std::string_view to_string(EnsembleKind kind) noexcept {
    return kind == EnsembleKind::Gbdt ? "gbdt" : "random_forest";
}

double TreeEnsemble::raw_output(std::span<const double> x) const {
    double acc = base_score;
    for (const auto& t : trees) {
        acc += t.predict(x);
    }
    return acc;
}

double TreeEnsemble::logit_output(std::span<const double> x) const {
    const double raw = raw_output(x);
    if (kind == EnsembleKind::Gbdt) {
        return raw;
    }
    constexpr double kClamp = 1e-6;
    return logit(std::clamp(raw, kClamp, 1.0 - kClamp));
}

double TreeEnsemble::probability(std::span<const double> x) const {
    const double raw = raw_output(x);
    return kind == EnsembleKind::Gbdt ? sigmoid(raw) : std::clamp(raw, 0.0, 1.0);
}

void TreeEnsemble::validate() const {
    for (std::size_t t = 0; t < trees.size(); ++t) {
        const auto& nodes = trees[t].nodes;
        const std::string where = "tree " + std::to_string(t);
        if (nodes.empty()) {
            throw ValidationError(where + ": no nodes");
        }
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const TreeNode& n = nodes[i];
            if (!(n.cover > 0.0) || !std::isfinite(n.cover)) {
                throw ValidationError(where + " node " + std::to_string(i) + ": cover must be positive");
            }
            if (n.is_leaf()) {
                if (!std::isfinite(n.value)) {
                    throw ValidationError(where + " node " + std::to_string(i) + ": non-finite leaf value");
                }
                continue;
            }
            if (static_cast<std::size_t>(n.feature) >= num_features()) {
                throw ValidationError(where + " node " + std::to_string(i) + ": feature index out of range");
            }
            if (!std::isfinite(n.threshold)) {
                throw ValidationError(where + " node " + std::to_string(i) + ": non-finite threshold");
            }
            const auto l = static_cast<std::size_t>(n.left);
            const auto r = static_cast<std::size_t>(n.right);
            if (n.left <= static_cast<int>(i) || n.right <= static_cast<int>(i) || l >= nodes.size() ||
                r >= nodes.size()) {
                throw ValidationError(where + " node " + std::to_string(i) + ": bad child links");
            }
            const double sum = nodes[l].cover + nodes[r].cover;
            if (std::abs(sum - n.cover) > 1e-9 * std::max(1.0, n.cover)) {
                throw ValidationError(where + " node " + std::to_string(i) + ": child covers do not sum to parent");
            }
        }
    }
}

namespace {

constexpr std::string_view kMagic = "iuprobe-tree-ensemble";
constexpr int kVersion = 1;

double parse_double_token(const std::string& tok) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
        throw ValidationError("model: bad number '" + tok + "'");
    }
    return v;
}

std::string expect_key(std::istream& in, std::string_view key) {
    std::string k;
    if (!(in >> k) || k != key) {
        throw ValidationError("model: expected '" + std::string(key) + "', got '" + k + "'");
    }
    std::string v;
    if (!(in >> v)) {
        throw ValidationError("model: missing value for '" + std::string(key) + "'");
    }
    return v;
}

}  // namespace

void TreeEnsemble::serialize(std::ostream& out) const {
    out << kMagic << ' ' << kVersion << '\n';
    out << "kind " << to_string(kind) << '\n';
    out << "base_score " << format_double(base_score) << '\n';
    out << "features " << feature_names.size() << '\n';
    for (const auto& f : feature_names) {
        out << f << '\n';
    }
    out << "trees " << trees.size() << '\n';
    for (const auto& t : trees) {
        out << "tree " << t.nodes.size() << '\n';
        for (const auto& n : t.nodes) {
            if (n.is_leaf()) {
                out << "L " << format_double(n.value) << ' ' << format_double(n.cover) << '\n';
            } else {
                out << "S " << n.feature << ' ' << format_double(n.threshold) << ' ' << n.left << ' ' << n.right << ' '
                    << format_double(n.cover) << '\n';
            }
        }
    }
}

std::string TreeEnsemble::serialize() const {
    std::ostringstream os;
    serialize(os);
    return os.str();
}

TreeEnsemble TreeEnsemble::deserialize(std::istream& in) {
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != kMagic) {
        throw ValidationError("model: not an iuprobe tree ensemble");
    }
    if (version != kVersion) {
        throw ValidationError("model: unsupported version " + std::to_string(version));
    }
    TreeEnsemble e;
    const std::string kind = expect_key(in, "kind");
    if (kind == "gbdt") {
        e.kind = EnsembleKind::Gbdt;
    } else if (kind == "random_forest") {
        e.kind = EnsembleKind::RandomForest;
    } else {
        throw ValidationError("model: unknown kind '" + kind + "'");
    }
    e.base_score = parse_double_token(expect_key(in, "base_score"));
    const auto nfeat = static_cast<std::size_t>(std::stoull(expect_key(in, "features")));
    e.feature_names.resize(nfeat);
    for (auto& f : e.feature_names) {
        if (!(in >> f)) {
            throw ValidationError("model: truncated feature list");
        }
    }
    const auto ntrees = static_cast<std::size_t>(std::stoull(expect_key(in, "trees")));
    e.trees.resize(ntrees);
    for (auto& t : e.trees) {
        const auto nnodes = static_cast<std::size_t>(std::stoull(expect_key(in, "tree")));
        t.nodes.resize(nnodes);
        for (auto& n : t.nodes) {
            std::string tag, a, b;
            if (!(in >> tag)) {
                throw ValidationError("model: truncated tree");
            }
            if (tag == "L") {
                if (!(in >> a >> b)) throw ValidationError("model: truncated leaf");
                n.value = parse_double_token(a);
                n.cover = parse_double_token(b);
            } else if (tag == "S") {
                std::string thr, cover;
                if (!(in >> n.feature >> thr >> n.left >> n.right >> cover)) {
                    throw ValidationError("model: truncated split");
                }
                n.threshold = parse_double_token(thr);
                n.cover = parse_double_token(cover);
            } else {
                throw ValidationError("model: unknown node tag '" + tag + "'");
            }
        }
    }
    e.validate();
    return e;
}

TreeEnsemble TreeEnsemble::deserialize(const std::string& text) {
    std::istringstream is(text);
    return deserialize(is);
}

}  // namespace iuprobe
