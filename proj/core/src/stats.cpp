#include "iuprobe/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

namespace iuprobe {

namespace special {

namespace {

constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;
constexpr int kMaxIter = 10000;

double log_prefactor(double a, double x) { return -x + a * std::log(x) - std::lgamma(a); }

// P(a, x) by its power series; valid (fast) for x < a + 1.
double gamma_p_series(double a, double x) {
    double ap = a;
    double term = 1.0 / a;
    double sum = term;
    for (int i = 0; i < kMaxIter; ++i) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * kEps) {
            break;
        }
    }
    return sum * std::exp(log_prefactor(a, x));
}

// Q(a, x) by Lentz's continued fraction; valid for x >= a + 1.
double gamma_q_fraction(double a, double x) {
    double b = x + 1.0 - a;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxIter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) {
            break;
        }
    }
    return std::exp(log_prefactor(a, x)) * h;
}

void check_args(double a, double x) {
    if (!(a > 0.0) || !(x >= 0.0)) {
        throw ValidationError("incomplete gamma requires a > 0 and x >= 0");
    }
}

}  // namespace

double gamma_p(double a, double x) {
    check_args(a, x);
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    return x < a + 1.0 ? gamma_p_series(a, x) : 1.0 - gamma_q_fraction(a, x);
}

double gamma_q(double a, double x) {
    check_args(a, x);
    if (x == 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    return x < a + 1.0 ? 1.0 - gamma_p_series(a, x) : gamma_q_fraction(a, x);
}

double chi2_sf(double x, double df) {
    if (!(df > 0.0)) {
        throw ValidationError("chi-squared df must be positive");
    }
    if (!(x > 0.0)) return 1.0;
    return gamma_q(0.5 * df, 0.5 * x);
}

double normal_sf(double z) {
    if (std::isnan(z)) return z;
    const double half_tail = 0.5 * gamma_q(0.5, 0.5 * z * z);
    return z >= 0.0 ? half_tail : 1.0 - half_tail;
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw ValidationError("normal_quantile requires p in (0,1)");
    }
    double lo = -40.0;
    double hi = 40.0;
    for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
        const double mid = 0.5 * (lo + hi);
        // CDF(mid) = 1 - sf(mid)
        if (1.0 - normal_sf(mid) < p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace special

std::vector<double> midranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && values[order[j]] == values[order[i]]) {
            ++j;
        }
        const double rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of i+1 .. j
        for (std::size_t k = i; k < j; ++k) {
            ranks[order[k]] = rank;
        }
        i = j;
    }
    return ranks;
}

namespace {

struct PooledRanks {
    std::vector<double> mean_rank;  // per group
    std::vector<std::size_t> sizes;
    double n = 0;
    double tie_sum = 0;  // sum of t^3 - t over tie runs
};

PooledRanks pool(std::span<const std::vector<double>> groups) {
    if (groups.size() < 2) {
        throw ValidationError("rank tests need at least two groups");
    }
    std::vector<double> all;
    PooledRanks out;
    for (const auto& g : groups) {
        if (g.empty()) {
            throw ValidationError("rank tests need non-empty groups");
        }
        all.insert(all.end(), g.begin(), g.end());
        out.sizes.push_back(g.size());
    }
    for (double v : all) {
        if (std::isnan(v)) {
            throw ValidationError("rank tests do not accept NaN");
        }
    }
    const auto ranks = midranks(all);
    std::size_t offset = 0;
    for (std::size_t size : out.sizes) {
        double s = 0;
        for (std::size_t k = 0; k < size; ++k) {
            s += ranks[offset + k];
        }
        out.mean_rank.push_back(s / static_cast<double>(size));
        offset += size;
    }
    std::vector<double> sorted = all;
    std::sort(sorted.begin(), sorted.end());
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i + 1;
        while (j < sorted.size() && sorted[j] == sorted[i]) {
            ++j;
        }
        const double t = static_cast<double>(j - i);
        out.tie_sum += t * t * t - t;
        i = j;
    }
    out.n = static_cast<double>(all.size());
    return out;
}

}  // namespace

KruskalResult kruskal_wallis(std::span<const std::vector<double>> groups) {
    const PooledRanks pr = pool(groups);
    const double n = pr.n;
    const double correction = 1.0 - pr.tie_sum / (n * n * n - n);
    if (!(correction > 0.0)) {
        throw DegenerateDataError("Kruskal-Wallis: all values identical");
    }
    const double grand = (n + 1.0) / 2.0;
    double ss = 0;
    for (std::size_t g = 0; g < pr.sizes.size(); ++g) {
        const double d = pr.mean_rank[g] - grand;
        ss += static_cast<double>(pr.sizes[g]) * d * d;
    }
    KruskalResult r;
    r.h = 12.0 / (n * (n + 1.0)) * ss / correction;
    r.df = static_cast<int>(groups.size()) - 1;
    r.p = special::chi2_sf(r.h, r.df);
    return r;
}

DunnResult dunn_pairwise(std::span<const std::vector<double>> groups, std::size_t first, std::size_t second) {
    if (first >= groups.size() || second >= groups.size() || first == second) {
        throw ValidationError("dunn_pairwise: invalid group pair");
    }
    const PooledRanks pr = pool(groups);
    const double n = pr.n;
    const double base_var = n * (n + 1.0) / 12.0 - pr.tie_sum / (12.0 * (n - 1.0));
    if (!(base_var > 0.0)) {
        throw DegenerateDataError("Dunn: all values identical");
    }
    const double var = base_var * (1.0 / static_cast<double>(pr.sizes[first]) + 1.0 / static_cast<double>(pr.sizes[second]));
    DunnResult r;
    r.z = (pr.mean_rank[first] - pr.mean_rank[second]) / std::sqrt(var);
    r.p_unadjusted = std::min(1.0, 2.0 * special::normal_sf(std::abs(r.z)));
    const double k = static_cast<double>(groups.size());
    r.p_adjusted = std::min(1.0, r.p_unadjusted * k * (k - 1.0) / 2.0);
    return r;
}

std::string_view to_string(Magnitude m) noexcept {
    switch (m) {
    case Magnitude::Negligible: return "negligible";
    case Magnitude::Small: return "small";
    case Magnitude::Medium: return "medium";
    case Magnitude::Large: return "large";
    }
    return "negligible";
}

Magnitude classify_delta(double delta) noexcept {
    const double a = std::abs(delta);
    if (a < 0.147) return Magnitude::Negligible;
    if (a < 0.33) return Magnitude::Small;
    if (a < 0.474) return Magnitude::Medium;
    return Magnitude::Large;
}

Dominance dominance_direct(std::span<const double> a, std::span<const double> b) {
    Dominance d;
    for (double x : a) {
        for (double y : b) {
            d.greater += x > y;
            d.less += x < y;
        }
    }
    return d;
}

Dominance dominance_sorted(std::span<const double> a, std::span<const double> b) {
    std::vector<double> sb(b.begin(), b.end());
    std::sort(sb.begin(), sb.end());
    Dominance d;
    for (double x : a) {
        const auto lo = std::lower_bound(sb.begin(), sb.end(), x);
        const auto hi = std::upper_bound(lo, sb.end(), x);
        d.greater += static_cast<std::uint64_t>(lo - sb.begin());
        d.less += static_cast<std::uint64_t>(sb.end() - hi);
    }
    return d;
}

CliffResult cliffs_delta(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) {
        throw ValidationError("Cliff's delta needs two non-empty samples");
    }
    constexpr std::size_t kDirectLimit = 4096;
    const Dominance d = a.size() * b.size() <= kDirectLimit ? dominance_direct(a, b) : dominance_sorted(a, b);
    CliffResult r;
    const double diff = static_cast<double>(d.greater) - static_cast<double>(d.less);
    r.delta = diff / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
    r.magnitude = classify_delta(r.delta);
    return r;
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

const FeatureReport* StatReport::find(std::string_view feature) const {
    for (const auto& f : features) {
        if (f.feature == feature) return &f;
    }
    return nullptr;
}

namespace {

std::string pair_name(const PairResult& p) {
    return std::string(to_string(p.first)) + "-" + std::string(to_string(p.second));
}

std::string format_p(double p) { return p < 0.001 ? "<0.001" : format_fixed(p, 3); }

}  // namespace

void StatReport::write_csv(std::ostream& out) const {
    out << "feature,pair,z,p_adjusted,delta,magnitude\n";
    for (const auto& f : features) {
        for (const auto& p : f.pairs) {
            out << f.feature << ',' << pair_name(p) << ',' << format_double(p.z) << ',' << format_double(p.p_adjusted)
                << ',' << format_double(p.delta) << ',' << to_string(p.magnitude) << '\n';
        }
    }
}

void StatReport::render_text(std::ostream& out, bool ansi) const {
    const auto colour = [&](Magnitude m) -> std::string {
        if (!ansi) return "";
        switch (m) {
        case Magnitude::Small: return "\x1b[38;5;226m";
        case Magnitude::Medium: return "\x1b[38;5;214m";
        case Magnitude::Large: return "\x1b[38;5;196m";
        default: return "";
        }
    };
    const std::string reset = ansi ? "\x1b[0m" : "";
    const auto pad = [](std::string s, std::size_t w) {
        if (s.size() < w) s.append(w - s.size(), ' ');
        return s;
    };

    out << pad("feature", 26) << pad("H", 10) << pad("p", 9);
    if (!features.empty()) {
        for (const auto& p : features.front().pairs) {
            out << "| " << pad(pair_name(p), 28);
        }
    }
    out << '\n';
    for (const auto& f : features) {
        out << pad(f.feature, 26) << pad(format_fixed(f.h, 2), 10) << pad(format_p(f.p), 9);
        for (const auto& p : f.pairs) {
            const std::string mark = p.magnitude == Magnitude::Negligible ? " " :
                                     p.magnitude == Magnitude::Small      ? "s" :
                                     p.magnitude == Magnitude::Medium     ? "m" : "L";
            out << "| " << pad(format_fixed(p.z, 2), 9) << pad(format_p(p.p_adjusted), 8) << colour(p.magnitude)
                << pad(format_fixed(p.delta, 3) + mark, 11) << reset;
        }
        out << '\n';
    }
    for (const auto& s : skipped) {
        out << "skipped: " << s << '\n';
    }
    out << "effect bands: |delta| < 0.147 negligible, < 0.33 small (s), < 0.474 medium (m), else large (L)\n";
}

void StatReport::render_html(std::ostream& out) const {
    const auto bg = [](Magnitude m) -> std::string {
        switch (m) {
        case Magnitude::Small: return " style=\"background:#FFFF00\"";
        case Magnitude::Medium: return " style=\"background:#FFA500\"";
        case Magnitude::Large: return " style=\"background:#FF0000\"";
        default: return "";
        }
    };
    out << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Group differences</title></head><body>\n";
    out << "<table border=\"1\" cellspacing=\"0\" cellpadding=\"3\">\n<tr><th>feature</th>";
    if (!features.empty()) {
        for (const auto& p : features.front().pairs) {
            out << "<th colspan=\"3\">" << pair_name(p) << "</th>";
        }
    }
    out << "</tr>\n";
    for (const auto& f : features) {
        out << "<tr><td>" << f.feature << "</td>";
        for (const auto& p : f.pairs) {
            out << "<td>" << format_fixed(p.z, 2) << "</td><td>" << format_p(p.p_adjusted) << "</td><td"
                << bg(p.magnitude) << ">" << format_fixed(p.delta, 3) << "</td>";
        }
        out << "</tr>\n";
    }
    out << "</table>\n";
    for (const auto& s : skipped) {
        out << "<p>skipped: " << s << "</p>\n";
    }
    out << "</body></html>\n";
}

StatReport build_report(const FeatureMatrix& matrix, const ReportOptions& options) {
    static constexpr Group kOrder[] = {Group::NIU, Group::BU, Group::IU};
    static constexpr std::pair<Group, Group> kPairs[] = {
        {Group::NIU, Group::BU}, {Group::NIU, Group::IU}, {Group::BU, Group::IU}};

    StatReport report;
    std::vector<Group> present;
    for (Group g : kOrder) {
        if (std::find(matrix.labels().begin(), matrix.labels().end(), g) != matrix.labels().end()) {
            present.push_back(g);
        }
    }
    report.groups = present;

    const std::size_t ncols = matrix.named_width() + (options.include_extra ? matrix.extra_width() : 0);
    for (std::size_t j = 0; j < ncols; ++j) {
        const std::string& name = matrix.feature_names()[j];
        std::vector<std::vector<double>> samples(present.size());
        for (std::size_t i = 0; i < matrix.rows(); ++i) {
            auto it = std::find(present.begin(), present.end(), matrix.labels()[i]);
            if (it != present.end()) {
                samples[static_cast<std::size_t>(it - present.begin())].push_back(matrix.at(i, j));
            }
        }
        if (present.size() < 2) {
            report.skipped.push_back(name + ": fewer than two groups present");
            continue;
        }
        bool too_small = false;
        for (std::size_t g = 0; g < present.size(); ++g) {
            if (samples[g].size() < 2) {
                report.skipped.push_back(name + ": group " + std::string(to_string(present[g])) +
                                         " has fewer than two users");
                too_small = true;
                break;
            }
        }
        if (too_small) {
            continue;
        }
        const double first_value = samples.front().front();
        bool constant = true;
        for (const auto& s : samples) {
            for (double v : s) {
                constant = constant && v == first_value;
            }
        }
        if (constant) {
            report.skipped.push_back(name + ": constant across all users (degenerate)");
            continue;
        }

        FeatureReport fr;
        fr.feature = name;
        const KruskalResult kw = kruskal_wallis(samples);
        fr.h = kw.h;
        fr.df = kw.df;
        fr.p = kw.p;
        for (const auto& [a, b] : kPairs) {
            auto ia = std::find(present.begin(), present.end(), a);
            auto ib = std::find(present.begin(), present.end(), b);
            if (ia == present.end() || ib == present.end()) {
                continue;
            }
            const auto ga = static_cast<std::size_t>(ia - present.begin());
            const auto gb = static_cast<std::size_t>(ib - present.begin());
            const DunnResult dunn = dunn_pairwise(samples, ga, gb);
            const CliffResult cliff = cliffs_delta(samples[ga], samples[gb]);
            fr.pairs.push_back(PairResult{a, b, dunn.z, dunn.p_adjusted, cliff.delta, cliff.magnitude});
        }
        report.features.push_back(std::move(fr));
    }
    return report;
}

}  // namespace iuprobe
