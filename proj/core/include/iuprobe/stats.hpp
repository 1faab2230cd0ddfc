#pragma once

#include "iuprobe/features.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace iuprobe {

namespace special {

/// Regularized lower incomplete gamma P(a, x); series for x < a + 1, continued fraction otherwise.
double gamma_p(double a, double x);
/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), computed without cancellation.
double gamma_q(double a, double x);
/// Survival function of the chi-squared distribution with `df` degrees of freedom.
double chi2_sf(double x, double df);
/// Upper tail of the standard normal, via Q(1/2, z^2/2).
double normal_sf(double z);
/// Inverse of the standard normal CDF (used by the synthetic generator).
double normal_quantile(double p);

}  // namespace special

/// Mid-ranks (1-based) of the pooled values.
std::vector<double> midranks(std::span<const double> values);

struct KruskalResult {
    double h = 0;  // tie-corrected
    int df = 0;
    double p = 1;
};

/// Kruskal-Wallis H test with tie correction. Throws ValidationError for fewer than two groups
/// or an empty group, DegenerateDataError when every value is identical.
KruskalResult kruskal_wallis(std::span<const std::vector<double>> groups);

struct DunnResult {
    double z = 0;
    double p_unadjusted = 1;
    double p_adjusted = 1;  // Bonferroni over k(k-1)/2 comparisons, capped at 1
};

/// Dunn's post-hoc comparison of groups[first] vs groups[second] over ranks of all groups pooled.
/// Positive z means the first group ranks higher.
DunnResult dunn_pairwise(std::span<const std::vector<double>> groups, std::size_t first, std::size_t second);

enum class Magnitude { Negligible, Small, Medium, Large };

std::string_view to_string(Magnitude m) noexcept;
Magnitude classify_delta(double delta) noexcept;

struct CliffResult {
    double delta = 0;
    Magnitude magnitude = Magnitude::Negligible;
};

/// Dominance counts #{x > y} and #{x < y} over all pairs.
struct Dominance {
    std::uint64_t greater = 0;
    std::uint64_t less = 0;
};
Dominance dominance_direct(std::span<const double> a, std::span<const double> b);
Dominance dominance_sorted(std::span<const double> a, std::span<const double> b);

/// Cliff's delta of `a` over `b`. Picks the direct or sorted counting route by size; both
/// produce identical integer counts. Throws ValidationError on an empty sample.
CliffResult cliffs_delta(std::span<const double> a, std::span<const double> b);

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

struct PairResult {
    Group first = Group::NIU;
    Group second = Group::IU;
    double z = 0;
    double p_adjusted = 1;
    double delta = 0;
    Magnitude magnitude = Magnitude::Negligible;
};

struct FeatureReport {
    std::string feature;
    double h = 0;
    int df = 0;
    double p = 1;
    std::vector<PairResult> pairs;  // (NIU,BU), (NIU,IU), (BU,IU), restricted to present groups
};

struct StatReport {
    std::vector<FeatureReport> features;
    std::vector<std::string> skipped;  // "feature: reason"
    std::vector<Group> groups;         // groups that took part

    const FeatureReport* find(std::string_view feature) const;

    /// CSV: feature,pair,z,p_adjusted,delta,magnitude
    void write_csv(std::ostream& out) const;
    /// Plain or ANSI-coloured text table (yellow/orange/red for small/medium/large effects).
    void render_text(std::ostream& out, bool ansi) const;
    void render_html(std::ostream& out) const;
};

struct ReportOptions {
    /// Also test extra profile features, not just the named block.
    bool include_extra = true;
};

/// Omnibus test plus every present group pair for each named (and extra) feature. Groups with
/// no members are dropped; a feature is skipped when a present group has fewer than two users,
/// fewer than two groups remain, or the feature is constant.
StatReport build_report(const FeatureMatrix& matrix, const ReportOptions& options = {});

}  // namespace iuprobe
