#include "iuprobe/explain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace iuprobe {

double ShapRow::output() const {
    return std::accumulate(contributions.begin(), contributions.end(), base_value);
}

double expected_output(const TreeEnsemble& ensemble) {
    double acc = ensemble.base_score;
    for (const auto& t : ensemble.trees) {
        acc += t.expected_value();
    }
    return acc;
}

namespace {

void check_width(const TreeEnsemble& ensemble, std::span<const double> x) {
    if (x.size() != ensemble.num_features()) {
        throw ValidationError("explain: input has " + std::to_string(x.size()) + " features, model expects " +
                              std::to_string(ensemble.num_features()));
    }
}

// Unique-path bookkeeping of the polynomial-time algorithm. Each element records the fraction of
// "feature absent" (zero) and "feature present" (one) flow along the path and the permutation
// weight of subsets of a given size.
struct PathElement {
    int feature = -1;
    double zero_fraction = 0;
    double one_fraction = 0;
    double pweight = 0;
};

void extend_path(std::vector<PathElement>& path, int depth, double zero, double one, int feature) {
    path[static_cast<std::size_t>(depth)] = {feature, zero, one, depth == 0 ? 1.0 : 0.0};
    for (int i = depth - 1; i >= 0; --i) {
        auto& cur = path[static_cast<std::size_t>(i)];
        path[static_cast<std::size_t>(i) + 1].pweight += one * cur.pweight * (i + 1) / static_cast<double>(depth + 1);
        cur.pweight = zero * cur.pweight * (depth - i) / static_cast<double>(depth + 1);
    }
}

void unwind_path(std::vector<PathElement>& path, int depth, int index) {
    const double one = path[static_cast<std::size_t>(index)].one_fraction;
    const double zero = path[static_cast<std::size_t>(index)].zero_fraction;
    double next = path[static_cast<std::size_t>(depth)].pweight;
    for (int i = depth - 1; i >= 0; --i) {
        auto& cur = path[static_cast<std::size_t>(i)];
        if (one != 0) {
            const double tmp = cur.pweight;
            cur.pweight = next * (depth + 1) / ((i + 1) * one);
            next = tmp - cur.pweight * zero * (depth - i) / static_cast<double>(depth + 1);
        } else {
            cur.pweight = cur.pweight * (depth + 1) / (zero * (depth - i));
        }
    }
    for (int i = index; i < depth; ++i) {
        auto& dst = path[static_cast<std::size_t>(i)];
        const auto& src = path[static_cast<std::size_t>(i) + 1];
        dst.feature = src.feature;
        dst.zero_fraction = src.zero_fraction;
        dst.one_fraction = src.one_fraction;
    }
}

/// Total permutation weight with element `index` removed, without modifying the path.
double unwound_sum(const std::vector<PathElement>& path, int depth, int index) {
    const double one = path[static_cast<std::size_t>(index)].one_fraction;
    const double zero = path[static_cast<std::size_t>(index)].zero_fraction;
    double next = path[static_cast<std::size_t>(depth)].pweight;
    double total = 0;
    for (int i = depth - 1; i >= 0; --i) {
        const double pw = path[static_cast<std::size_t>(i)].pweight;
        if (one != 0) {
            const double tmp = next * (depth + 1) / ((i + 1) * one);
            total += tmp;
            next = pw - tmp * zero * (depth - i) / static_cast<double>(depth + 1);
        } else if (zero != 0) {
            total += pw / zero / ((depth - i) / static_cast<double>(depth + 1));
        }
    }
    return total;
}

void recurse(const Tree& tree, int node, std::span<const double> x, std::vector<double>& phi,
             const std::vector<PathElement>& parent_path, int depth, double zero, double one, int feature) {
    std::vector<PathElement> path(parent_path.begin(), parent_path.begin() + depth);
    path.resize(static_cast<std::size_t>(depth) + 2);
    extend_path(path, depth, zero, one, feature);

    const TreeNode& n = tree.nodes[static_cast<std::size_t>(node)];
    if (n.is_leaf()) {
        for (int i = 1; i <= depth; ++i) {
            const auto& e = path[static_cast<std::size_t>(i)];
            const double w = unwound_sum(path, depth, i);
            phi[static_cast<std::size_t>(e.feature)] += w * (e.one_fraction - e.zero_fraction) * n.value;
        }
        return;
    }

    const bool go_left = x[static_cast<std::size_t>(n.feature)] < n.threshold;
    const int hot = go_left ? n.left : n.right;
    const int cold = go_left ? n.right : n.left;
    const double hot_zero = tree.nodes[static_cast<std::size_t>(hot)].cover / n.cover;
    const double cold_zero = tree.nodes[static_cast<std::size_t>(cold)].cover / n.cover;

    double incoming_zero = 1;
    double incoming_one = 1;
    int index = 0;
    while (index <= depth && path[static_cast<std::size_t>(index)].feature != n.feature) {
        ++index;
    }
    if (index <= depth) {
        incoming_zero = path[static_cast<std::size_t>(index)].zero_fraction;
        incoming_one = path[static_cast<std::size_t>(index)].one_fraction;
        unwind_path(path, depth, index);
        --depth;
    }
    recurse(tree, hot, x, phi, path, depth + 1, hot_zero * incoming_zero, incoming_one, n.feature);
    recurse(tree, cold, x, phi, path, depth + 1, cold_zero * incoming_zero, 0.0, n.feature);
}

double masked_value(const Tree& tree, std::size_t node, std::span<const double> x, std::uint32_t mask) {
    const TreeNode& n = tree.nodes[node];
    if (n.is_leaf()) {
        return n.value;
    }
    const auto l = static_cast<std::size_t>(n.left);
    const auto r = static_cast<std::size_t>(n.right);
    if (mask >> n.feature & 1u) {
        return masked_value(tree, x[static_cast<std::size_t>(n.feature)] < n.threshold ? l : r, x, mask);
    }
    return (tree.nodes[l].cover * masked_value(tree, l, x, mask) +
            tree.nodes[r].cover * masked_value(tree, r, x, mask)) /
           n.cover;
}

}  // namespace

ShapRow tree_shap(const TreeEnsemble& ensemble, std::span<const double> x, std::string user_id) {
    check_width(ensemble, x);
    ShapRow row;
    row.user_id = std::move(user_id);
    row.contributions.assign(ensemble.num_features(), 0.0);
    row.base_value = expected_output(ensemble);
    const std::vector<PathElement> empty(1);
    for (const auto& tree : ensemble.trees) {
        recurse(tree, 0, x, row.contributions, empty, 0, 1.0, 1.0, -1);
    }
    return row;
}

ShapRow brute_force_shap(const TreeEnsemble& ensemble, std::span<const double> x, std::string user_id) {
    check_width(ensemble, x);
    const std::size_t n = ensemble.num_features();
    if (n > kBruteForceMaxFeatures) {
        throw ValidationError("brute-force Shapley values support at most " + std::to_string(kBruteForceMaxFeatures) +
                              " features; use tree_shap");
    }
    const std::uint32_t subsets = 1u << n;
    std::vector<double> v(subsets, ensemble.base_score);
    for (std::uint32_t s = 0; s < subsets; ++s) {
        for (const auto& tree : ensemble.trees) {
            v[s] += masked_value(tree, 0, x, s);
        }
    }
    // Shapley kernel |S|!(n-|S|-1)!/n!
    std::vector<double> weight(n, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        weight[s] = std::exp(std::lgamma(s + 1.0) + std::lgamma(static_cast<double>(n - s)) -
                             std::lgamma(static_cast<double>(n) + 1.0));
    }
    ShapRow row;
    row.user_id = std::move(user_id);
    row.base_value = v[0];
    row.contributions.assign(n, 0.0);
    for (std::uint32_t s = 0; s < subsets; ++s) {
        const auto size = static_cast<std::size_t>(std::popcount(s));
        for (std::size_t i = 0; i < n; ++i) {
            if (!(s >> i & 1u)) {
                row.contributions[i] += weight[size] * (v[s | (1u << i)] - v[s]);
            }
        }
    }
    return row;
}

std::vector<FeatureRank> rank_features(std::span<const ExplainedSplit> splits,
                                       const std::vector<std::string>& feature_names) {
    const std::size_t nf = feature_names.size();
    std::vector<double> score(nf, 0.0);
    std::size_t used = 0;
    for (const auto& split : splits) {
        if (split.rows.empty()) continue;
        std::vector<double> acc(nf, 0.0);
        for (const auto& row : split.rows) {
            if (row.contributions.size() != nf) {
                throw ValidationError("SHAP row width does not match the feature names");
            }
            for (std::size_t j = 0; j < nf; ++j) acc[j] += std::abs(row.contributions[j]);
        }
        for (std::size_t j = 0; j < nf; ++j) score[j] += acc[j] / static_cast<double>(split.rows.size());
        ++used;
    }
    if (used == 0) {
        throw ValidationError("no SHAP rows to summarise");
    }
    std::vector<FeatureRank> out(nf);
    for (std::size_t j = 0; j < nf; ++j) {
        out[j] = {feature_names[j], score[j] / static_cast<double>(used), 0};
    }
    std::sort(out.begin(), out.end(), [](const FeatureRank& a, const FeatureRank& b) {
        if (a.mean_abs_shap != b.mean_abs_shap) return a.mean_abs_shap > b.mean_abs_shap;
        return a.feature < b.feature;
    });
    for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = static_cast<int>(i) + 1;
    return out;
}

void write_ranking_csv(std::ostream& out, std::span<const FeatureRank> ranking) {
    out << "feature,mean_abs_shap,rank\n";
    for (const auto& r : ranking) {
        out << r.feature << ',' << format_double(r.mean_abs_shap) << ',' << r.rank << '\n';
    }
}

namespace {

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    std::string s = buf;
    return s == "-0.000" ? "0.000" : s;
}

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

// Low values blue, high values red.
std::string colour(double t) {
    constexpr int lo[3] = {0x00, 0x8b, 0xfb};
    constexpr int hi[3] = {0xff, 0x00, 0x52};
    char buf[8];
    int c[3];
    for (int k = 0; k < 3; ++k) {
        c[k] = static_cast<int>(std::lround(lo[k] + (hi[k] - lo[k]) * std::clamp(t, 0.0, 1.0)));
    }
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c[0], c[1], c[2]);
    return buf;
}

}  // namespace

std::string render_beeswarm(std::span<const ExplainedSplit> splits, const std::vector<std::string>& feature_names,
                            std::span<const FeatureRank> ranking, const BeeswarmOptions& options) {
    const std::size_t shown = std::min(options.max_features, ranking.size());
    std::vector<std::size_t> feature_index(shown);
    for (std::size_t k = 0; k < shown; ++k) {
        const auto it = std::find(feature_names.begin(), feature_names.end(), ranking[k].feature);
        if (it == feature_names.end()) {
            throw ValidationError("ranked feature '" + ranking[k].feature + "' is not in the model");
        }
        feature_index[k] = static_cast<std::size_t>(it - feature_names.begin());
    }

    double lo = 0, hi = 0;
    for (const auto& split : splits) {
        for (const auto& row : split.rows) {
            for (std::size_t j : feature_index) {
                lo = std::min(lo, row.contributions[j]);
                hi = std::max(hi, row.contributions[j]);
            }
        }
    }
    if (hi - lo <= 0) {
        lo = -1;
        hi = 1;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;

    const double left = 200, right_margin = 90, top = 30;
    const double plot_w = options.width - left - right_margin;
    const double rh = options.row_height;
    const double plot_h = rh * static_cast<double>(shown);
    const double height = top + plot_h + 70;
    const auto sx = [&](double v) { return left + (v - lo) / (hi - lo) * plot_w; };

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << num(options.width)
        << "\" height=\"" << num(height) << "\" viewBox=\"0 0 " << num(options.width) << ' ' << num(height)
        << "\" font-family=\"Helvetica, Arial, sans-serif\" font-size=\"12\">\n"
        << "<defs><linearGradient id=\"valuebar\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\">"
        << "<stop offset=\"0\" stop-color=\"" << colour(0) << "\"/><stop offset=\"1\" stop-color=\"" << colour(1)
        << "\"/></linearGradient></defs>\n"
        << "<rect x=\"0\" y=\"0\" width=\"" << num(options.width) << "\" height=\"" << num(height)
        << "\" fill=\"#ffffff\"/>\n";

    for (std::size_t k = 0; k < shown; ++k) {
        const double cy = top + rh * (static_cast<double>(k) + 0.5);
        svg << "<line x1=\"" << num(left) << "\" y1=\"" << num(cy) << "\" x2=\"" << num(left + plot_w) << "\" y2=\""
            << num(cy) << "\" stroke=\"#dddddd\" stroke-dasharray=\"2,3\"/>\n"
            << "<text x=\"" << num(left - 10) << "\" y=\"" << num(cy + 4) << "\" text-anchor=\"end\">"
            << xml_escape(ranking[k].feature) << "</text>\n";
    }
    svg << "<line x1=\"" << num(sx(0)) << "\" y1=\"" << num(top) << "\" x2=\"" << num(sx(0)) << "\" y2=\""
        << num(top + plot_h) << "\" stroke=\"#999999\"/>\n";

    for (std::size_t k = 0; k < shown; ++k) {
        const std::size_t j = feature_index[k];
        std::vector<double> all;
        for (const auto& split : splits) {
            for (const auto& v : split.values) all.push_back(v[j]);
        }
        std::sort(all.begin(), all.end());
        const double denom = all.size() > 1 ? static_cast<double>(all.size() - 1) : 1.0;
        const double cy = top + rh * (static_cast<double>(k) + 0.5);
        svg << "<g>\n";
        for (std::size_t s = 0; s < splits.size(); ++s) {
            const auto& split = splits[s];
            for (std::size_t r = 0; r < split.rows.size(); ++r) {
                const double value = split.values[r][j];
                const auto lower = std::lower_bound(all.begin(), all.end(), value) - all.begin();
                const auto upper = std::upper_bound(all.begin(), all.end(), value) - all.begin();
                const double pct =
                    all.size() > 1 ? 0.5 * static_cast<double>(lower + upper - 1) / denom : 0.5;
                const std::string key = split.rows[r].user_id + '\x1f' + std::to_string(s) + '\x1f' + feature_names[j];
                const double u = static_cast<double>(fnv1a64(key) % 10001) / 10000.0 - 0.5;
                svg << "<circle cx=\"" << num(sx(split.rows[r].contributions[j])) << "\" cy=\""
                    << num(cy + u * 0.8 * rh) << "\" r=\"2.5\" fill=\"" << colour(pct)
                    << "\" fill-opacity=\"0.8\"/>\n";
            }
        }
        svg << "</g>\n";
    }

    const double axis_y = top + plot_h + 8;
    svg << "<line x1=\"" << num(left) << "\" y1=\"" << num(axis_y) << "\" x2=\"" << num(left + plot_w) << "\" y2=\""
        << num(axis_y) << "\" stroke=\"#333333\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double v = lo + (hi - lo) * t / 4.0;
        svg << "<line x1=\"" << num(sx(v)) << "\" y1=\"" << num(axis_y) << "\" x2=\"" << num(sx(v)) << "\" y2=\""
            << num(axis_y + 5) << "\" stroke=\"#333333\"/>\n"
            << "<text x=\"" << num(sx(v)) << "\" y=\"" << num(axis_y + 18) << "\" text-anchor=\"middle\">" << num(v)
            << "</text>\n";
    }
    svg << "<text x=\"" << num(left + plot_w / 2) << "\" y=\"" << num(axis_y + 40) << "\" text-anchor=\"middle\">"
        << xml_escape(options.x_label) << "</text>\n";

    const double bar_x = left + plot_w + 30;
    svg << "<rect x=\"" << num(bar_x) << "\" y=\"" << num(top) << "\" width=\"10\" height=\"" << num(plot_h)
        << "\" fill=\"url(#valuebar)\"/>\n"
        << "<text x=\"" << num(bar_x + 14) << "\" y=\"" << num(top + 10) << "\">High</text>\n"
        << "<text x=\"" << num(bar_x + 14) << "\" y=\"" << num(top + plot_h) << "\">Low</text>\n"
        << "<text transform=\"translate(" << num(bar_x + 40) << ',' << num(top + plot_h / 2)
        << ") rotate(90)\" text-anchor=\"middle\">Feature value</text>\n"
        << "</svg>\n";
    return svg.str();
}

std::vector<FeatureRank> summarize_and_plot(std::span<const ExplainedSplit> splits,
                                            const std::vector<std::string>& feature_names,
                                            const std::filesystem::path& svg_path,
                                            const std::filesystem::path& ranking_path, const BeeswarmOptions& options) {
    const auto ranking = rank_features(splits, feature_names);
    const std::string svg = render_beeswarm(splits, feature_names, ranking, options);
    std::ofstream s(svg_path, std::ios::binary);
    if (!s || !(s << svg) || !s.flush()) {
        throw IoError("cannot write " + svg_path.string());
    }
    std::ofstream r(ranking_path, std::ios::binary);
    if (!r) {
        throw IoError("cannot write " + ranking_path.string());
    }
    write_ranking_csv(r, ranking);
    if (!r.flush()) {
        throw IoError("cannot write " + ranking_path.string());
    }
    return ranking;
}

}  // namespace iuprobe
