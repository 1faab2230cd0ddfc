#pragma once

#include "iuprobe/graph.hpp"
#include "iuprobe/ingest.hpp"

#include <array>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace iuprobe {

/// Column order of the named interaction features in every matrix.
inline constexpr std::array<std::string_view, 16> kNamedFeatures = {
    "following",      "follower",     "eigencentrality",          "description_length",
    "account_age",    "maxdate_ratio", "avg_mention",             "avg_hashtag",
    "follower_following_ratio", "name_length", "avg_tweet_length", "avg_url",
    "bot_score",      "activity_count", "lex_diversity",          "has_location",
};

struct FeatureVector {
    double following = 0;
    double follower = 0;
    double eigencentrality = 0;
    double description_length = 0;
    double account_age = 0;  // days
    double maxdate_ratio = 0;
    double avg_mention = 0;
    double avg_hashtag = 0;
    double follower_following_ratio = 0;
    double name_length = 0;
    double avg_tweet_length = 0;
    double avg_url = 0;
    std::optional<double> bot_score;
    double activity_count = 0;
    std::optional<double> lex_diversity;  // missing when the user authored no tokens
    double has_location = 0;
    std::map<std::string, double> extra;

    /// Values in kNamedFeatures order; missing entries are NaN.
    std::array<double, kNamedFeatures.size()> named_values() const;
};

struct FeatureOptions {
    Timestamp collection_end = 1627516800;  // 2021-07-29T00:00:00Z
};

/// Per-user features. `centrality` is keyed by user id (users absent from it score 0).
/// Throws NotFoundError for unknown users and ValidationError for users without activities.
FeatureVector compute_features(const ActivityStore& store, const std::map<std::string, double>& centrality,
                               std::string_view user_id, const FeatureOptions& options = {});

/// Precomputed per-user topic prevalences.
struct TopicTable {
    std::vector<std::string> column_names;
    std::map<std::string, std::vector<double>> rows;

    std::size_t width() const noexcept { return column_names.size(); }

    /// CSV: first column user_id, then one column per topic; a header row is optional.
    static TopicTable parse(std::istream& in);
    static TopicTable load(const std::filesystem::path& path);
    void write(std::ostream& out) const;
};

/// Dense row-major feature matrix with a group label per row.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    FeatureMatrix(std::vector<std::string> feature_names, std::size_t named_width, std::size_t extra_width,
                  std::size_t topic_width);

    std::size_t rows() const noexcept { return users_.size(); }
    std::size_t cols() const noexcept { return names_.size(); }
    std::size_t named_width() const noexcept { return named_width_; }
    std::size_t extra_width() const noexcept { return extra_width_; }
    std::size_t topic_width() const noexcept { return topic_width_; }

    const std::vector<std::string>& feature_names() const noexcept { return names_; }
    const std::vector<std::string>& users() const noexcept { return users_; }
    const std::vector<Group>& labels() const noexcept { return labels_; }
    std::span<const double> values() const noexcept { return values_; }

    std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols(), cols()}; }
    double at(std::size_t i, std::size_t j) const { return values_[i * cols() + j]; }
    std::vector<double> column(std::size_t j) const;
    std::optional<std::size_t> column_index(std::string_view name) const;

    void append_row(std::string user, std::span<const double> values, Group label);

    /// Rows whose label is in `groups`, order preserved.
    FeatureMatrix select(const std::set<Group>& groups) const;

    /// Header `user_id,<features...>,group`; values in shortest round-trip form.
    void write_csv(std::ostream& out) const;
    /// Reads write_csv output. Topic columns are recognised by the `topic` name prefix,
    /// the named block by kNamedFeatures; everything else is extra.
    static FeatureMatrix read_csv(std::istream& in);

private:
    std::vector<std::string> names_;
    std::size_t named_width_ = 0;
    std::size_t extra_width_ = 0;
    std::size_t topic_width_ = 0;
    std::vector<std::string> users_;
    std::vector<double> values_;
    std::vector<Group> labels_;
};

/// Builds the classification/statistics matrix for users in `selected` groups.
///
/// Rows are lexicographic by user id. Missing bot_score / lex_diversity values are imputed with
/// the median of present values; missing extra features become 0 and users without a topic
/// vector get a zero block, each with a diagnostic. Throws ValidationError when a selected
/// user has no feature vector or topic rows disagree on width.
FeatureMatrix assemble_matrix(const std::map<std::string, FeatureVector>& vectors, const TopicTable& topics,
                              const GroupPartition& partition, const std::set<Group>& selected,
                              Diagnostics* diagnostics = nullptr);

}  // namespace iuprobe
