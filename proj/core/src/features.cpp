#include "iuprobe/features.hpp"

#include "iuprobe/text.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace iuprobe {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::optional<double> parse_number(std::string_view s) {
    const std::string t = trim(s);
    if (t == "nan") return kNaN;
    if (t == "inf") return std::numeric_limits<double>::infinity();
    if (t == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) {
        return std::nullopt;
    }
    return v;
}

double median(std::vector<double> values) {
    if (values.empty()) {
        return 0.0;
    }
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

bool is_named(std::string_view name) {
    return std::find(kNamedFeatures.begin(), kNamedFeatures.end(), name) != kNamedFeatures.end();
}

}  // namespace

std::array<double, kNamedFeatures.size()> FeatureVector::named_values() const {
    return {following,
            follower,
            eigencentrality,
            description_length,
            account_age,
            maxdate_ratio,
            avg_mention,
            avg_hashtag,
            follower_following_ratio,
            name_length,
            avg_tweet_length,
            avg_url,
            bot_score.value_or(kNaN),
            activity_count,
            lex_diversity.value_or(kNaN),
            has_location};
}

FeatureVector compute_features(const ActivityStore& store, const std::map<std::string, double>& centrality,
                               std::string_view user_id, const FeatureOptions& options) {
    const auto acts = store.activities_of(user_id);
    if (acts.empty()) {
        throw ValidationError("user " + std::string(user_id) + " has no activities; no feature vector");
    }
    FeatureVector f;

    if (const UserProfile* p = store.profile(user_id)) {
        f.following = static_cast<double>(p->following);
        f.follower = static_cast<double>(p->followers);
        f.follower_following_ratio = f.follower / std::max(f.following, 1.0);
        f.description_length = static_cast<double>(text::scalar_count(p->description));
        f.name_length = static_cast<double>(text::scalar_count(p->display_name));
        f.account_age = static_cast<double>(options.collection_end - p->created_at) / kSecondsPerDay;
        f.bot_score = p->bot_score;
        f.has_location = trim(p->location).empty() ? 0.0 : 1.0;
        f.extra = p->extra;
    }
    if (auto it = centrality.find(std::string(user_id)); it != centrality.end()) {
        f.eigencentrality = it->second;
    }

    f.activity_count = static_cast<double>(acts.size());
    std::map<std::int64_t, std::size_t> per_day;
    for (const ActivityRecord* r : acts) {
        ++per_day[utc_day(r->created_at)];
    }
    std::size_t peak = 0;
    for (const auto& [day, count] : per_day) {
        peak = std::max(peak, count);
    }
    f.maxdate_ratio = static_cast<double>(peak) / f.activity_count;

    std::size_t authored = 0;
    double mentions = 0, hashtags = 0, urls = 0, length = 0;
    std::size_t tokens = 0;
    std::unordered_set<std::u32string> distinct;
    for (const ActivityRecord* r : acts) {
        if (!r->is_authored()) {
            continue;
        }
        ++authored;
        mentions += static_cast<double>(r->mention_count);
        hashtags += static_cast<double>(r->hashtag_count);
        urls += static_cast<double>(r->url_count);
        length += static_cast<double>(text::scalar_count(r->text));
        for (auto& tok : text::whitespace_tokens(text::normalize_fold(r->text))) {
            ++tokens;
            distinct.insert(std::move(tok));
        }
    }
    if (authored > 0) {
        const double n = static_cast<double>(authored);
        f.avg_mention = mentions / n;
        f.avg_hashtag = hashtags / n;
        f.avg_url = urls / n;
        f.avg_tweet_length = length / n;
    }
    if (tokens > 0) {
        f.lex_diversity = static_cast<double>(distinct.size()) / static_cast<double>(tokens);
    }
    return f;
}

// ---------------------------------------------------------------------------
// TopicTable
// ---------------------------------------------------------------------------

TopicTable TopicTable::parse(std::istream& in) {
    TopicTable table;
    std::string line;
    std::size_t line_no = 0;
    bool first = true;
    std::optional<std::size_t> width;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        auto cols = split(trim(line), ',');
        if (cols.size() < 2) {
            throw ValidationError("topic file line " + std::to_string(line_no) + ": need user_id and >=1 topic");
        }
        if (first) {
            first = false;
            if (!parse_number(cols[1])) {
                for (std::size_t j = 1; j < cols.size(); ++j) {
                    table.column_names.push_back(trim(cols[j]));
                }
                width = cols.size() - 1;
                continue;
            }
        }
        if (!width) {
            width = cols.size() - 1;
        }
        if (cols.size() - 1 != *width) {
            throw ValidationError("topic file line " + std::to_string(line_no) + ": width " +
                                  std::to_string(cols.size() - 1) + " != " + std::to_string(*width));
        }
        std::vector<double> row;
        row.reserve(*width);
        for (std::size_t j = 1; j < cols.size(); ++j) {
            auto v = parse_number(cols[j]);
            if (!v || !std::isfinite(*v)) {
                throw ValidationError("topic file line " + std::to_string(line_no) + ": bad value '" + cols[j] + "'");
            }
            row.push_back(*v);
        }
        table.rows[trim(cols[0])] = std::move(row);
    }
    if (width && table.column_names.empty()) {
        for (std::size_t j = 0; j < *width; ++j) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "topic_%02zu", j);
            table.column_names.emplace_back(buf);
        }
    }
    return table;
}

TopicTable TopicTable::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open topic file " + path.string());
    }
    return parse(in);
}

void TopicTable::write(std::ostream& out) const {
    out << "user_id";
    for (const auto& c : column_names) {
        out << ',' << c;
    }
    out << '\n';
    for (const auto& [user, row] : rows) {
        out << user;
        for (double v : row) {
            out << ',' << format_double(v);
        }
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// FeatureMatrix
// ---------------------------------------------------------------------------

FeatureMatrix::FeatureMatrix(std::vector<std::string> feature_names, std::size_t named_width,
                             std::size_t extra_width, std::size_t topic_width)
    : names_(std::move(feature_names)), named_width_(named_width), extra_width_(extra_width),
      topic_width_(topic_width) {
    if (named_width_ + extra_width_ + topic_width_ != names_.size()) {
        throw ValidationError("feature block widths do not add up to the column count");
    }
}

std::vector<double> FeatureMatrix::column(std::size_t j) const {
    std::vector<double> out(rows());
    for (std::size_t i = 0; i < rows(); ++i) {
        out[i] = at(i, j);
    }
    return out;
}

std::optional<std::size_t> FeatureMatrix::column_index(std::string_view name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - names_.begin());
}

void FeatureMatrix::append_row(std::string user, std::span<const double> values, Group label) {
    if (values.size() != cols()) {
        throw ValidationError("row width " + std::to_string(values.size()) + " != matrix width " +
                              std::to_string(cols()));
    }
    users_.push_back(std::move(user));
    values_.insert(values_.end(), values.begin(), values.end());
    labels_.push_back(label);
}

FeatureMatrix FeatureMatrix::select(const std::set<Group>& groups) const {
    FeatureMatrix out(names_, named_width_, extra_width_, topic_width_);
    for (std::size_t i = 0; i < rows(); ++i) {
        if (groups.count(labels_[i])) {
            out.append_row(users_[i], row(i), labels_[i]);
        }
    }
    return out;
}

void FeatureMatrix::write_csv(std::ostream& out) const {
    out << "user_id";
    for (const auto& n : names_) {
        out << ',' << n;
    }
    out << ",group\n";
    for (std::size_t i = 0; i < rows(); ++i) {
        out << users_[i];
        for (double v : row(i)) {
            out << ',' << format_double(v);
        }
        out << ',' << to_string(labels_[i]) << '\n';
    }
}

FeatureMatrix FeatureMatrix::read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ValidationError("matrix CSV is empty");
    }
    auto header = split(trim(line), ',');
    if (header.size() < 2 || header.front() != "user_id" || header.back() != "group") {
        throw ValidationError("matrix CSV header must start with user_id and end with group");
    }
    std::vector<std::string> names(header.begin() + 1, header.end() - 1);
    std::size_t named = 0, extra = 0, topics = 0;
    for (const auto& n : names) {
        if (n.rfind("topic", 0) == 0) {
            ++topics;
        } else if (is_named(n)) {
            ++named;
        } else {
            ++extra;
        }
    }
    FeatureMatrix m(names, named, extra, topics);
    std::vector<double> row(names.size());
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        auto cols = split(trim(line), ',');
        if (cols.size() != header.size()) {
            throw ValidationError("matrix CSV line " + std::to_string(line_no) + ": wrong column count");
        }
        for (std::size_t j = 0; j < names.size(); ++j) {
            auto v = parse_number(cols[j + 1]);
            if (!v) {
                throw ValidationError("matrix CSV line " + std::to_string(line_no) + ": bad number '" + cols[j + 1] + "'");
            }
            row[j] = *v;
        }
        auto g = parse_group(cols.back());
        if (!g) {
            throw ValidationError("matrix CSV line " + std::to_string(line_no) + ": bad group '" + cols.back() + "'");
        }
        m.append_row(cols.front(), row, *g);
    }
    return m;
}

FeatureMatrix assemble_matrix(const std::map<std::string, FeatureVector>& vectors, const TopicTable& topics,
                              const GroupPartition& partition, const std::set<Group>& selected,
                              Diagnostics* diagnostics) {
    Diagnostics local;
    Diagnostics& diag = diagnostics ? *diagnostics : local;

    const std::size_t topic_width = topics.width();
    for (const auto& [user, row] : topics.rows) {
        if (row.size() != topic_width) {
            throw ValidationError("topic vector width mismatch for user " + user);
        }
    }

    std::vector<std::pair<std::string, Group>> members;
    for (Group g : selected) {
        for (const auto& user : partition.members(g)) {
            members.emplace_back(user, g);
        }
    }
    std::sort(members.begin(), members.end());

    std::set<std::string> extra_names;
    std::vector<double> bots, lex;
    for (const auto& [user, g] : members) {
        auto it = vectors.find(user);
        if (it == vectors.end()) {
            throw ValidationError("no feature vector for selected user " + user);
        }
        for (const auto& [k, v] : it->second.extra) {
            extra_names.insert(k);
        }
        if (it->second.bot_score) bots.push_back(*it->second.bot_score);
        if (it->second.lex_diversity) lex.push_back(*it->second.lex_diversity);
    }
    const double bot_fill = median(bots);
    const double lex_fill = median(lex);
    if (bots.size() < members.size()) {
        diag.warn("bot_score missing for " + std::to_string(members.size() - bots.size()) +
                  " users; imputed median " + format_double(bot_fill));
    }
    if (lex.size() < members.size()) {
        diag.warn("lex_diversity missing for " + std::to_string(members.size() - lex.size()) +
                  " users; imputed median " + format_double(lex_fill));
    }

    std::vector<std::string> names(kNamedFeatures.begin(), kNamedFeatures.end());
    names.insert(names.end(), extra_names.begin(), extra_names.end());
    names.insert(names.end(), topics.column_names.begin(), topics.column_names.end());
    FeatureMatrix m(names, kNamedFeatures.size(), extra_names.size(), topic_width);

    constexpr std::size_t kBotCol = 12;
    constexpr std::size_t kLexCol = 14;
    static_assert(kNamedFeatures[kBotCol] == "bot_score" && kNamedFeatures[kLexCol] == "lex_diversity");

    std::vector<double> row(names.size());
    for (const auto& [user, g] : members) {
        const FeatureVector& v = vectors.at(user);
        const auto named = v.named_values();
        std::copy(named.begin(), named.end(), row.begin());
        if (!v.bot_score) row[kBotCol] = bot_fill;
        if (!v.lex_diversity) row[kLexCol] = lex_fill;
        std::size_t j = named.size();
        for (const auto& name : extra_names) {
            auto it = v.extra.find(name);
            if (it == v.extra.end()) {
                diag.warn("extra feature '" + name + "' missing for " + user + "; set to 0");
                row[j++] = 0.0;
            } else {
                row[j++] = it->second;
            }
        }
        auto t = topics.rows.find(user);
        if (t == topics.rows.end()) {
            if (topic_width > 0) {
                diag.warn("no topic vector for " + user + "; zero-filled");
            }
            std::fill(row.begin() + static_cast<std::ptrdiff_t>(j), row.end(), 0.0);
        } else {
            std::copy(t->second.begin(), t->second.end(), row.begin() + static_cast<std::ptrdiff_t>(j));
        }
        for (double x : row) {
            if (!std::isfinite(x)) {
                throw ValidationError("non-finite feature value for user " + user);
            }
        }
        m.append_row(user, row, g);
    }
    return m;
}

}  // namespace iuprobe
