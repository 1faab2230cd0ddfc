#pragma once

#include "iuprobe/common.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace iuprobe {

enum class ActivityKind { Tweet, Retweet, Quote };

std::string_view to_string(ActivityKind kind) noexcept;
std::optional<ActivityKind> parse_activity_kind(std::string_view text) noexcept;

struct ActivityRecord {
    std::string activity_id;
    std::string user_id;
    ActivityKind kind = ActivityKind::Tweet;
    std::optional<std::string> referenced_activity_id;
    std::optional<std::string> referenced_user_id;
    std::string text;
    Timestamp created_at = 0;
    std::size_t mention_count = 0;
    std::size_t hashtag_count = 0;
    std::size_t url_count = 0;

    /// Tweets and quotes carry text written by the user themselves.
    bool is_authored() const noexcept { return kind != ActivityKind::Retweet; }
};

struct UserProfile {
    std::string user_id;
    std::string display_name;
    std::string description;
    std::string location;
    std::int64_t followers = 0;
    std::int64_t following = 0;
    Timestamp created_at = 0;
    std::optional<double> bot_score;
    /// Additional numeric profile-side features, carried through to the feature matrix.
    std::map<std::string, double> extra;
};

struct ParseOptions {
    /// Reject the whole file on the first malformed line instead of skipping it.
    bool strict = false;
    /// Profiles created after this instant violate the collection window and are rejected.
    std::optional<Timestamp> collection_end;
};

struct ParseReport {
    std::size_t lines = 0;
    std::size_t activities = 0;
    std::size_t profiles = 0;
    std::size_t rejected = 0;
    std::size_t duplicates = 0;
    Diagnostics diagnostics;
};

/// Immutable collection of profiles and activity records keyed by user.
///
/// The user set is the union of profile owners, activity authors, and users referenced by
/// retweets/quotes, kept in lexicographic order. Records that violate the ActivityRecord
/// invariants are dropped at construction; for duplicate activity ids the first one wins.
class ActivityStore {
public:
    ActivityStore() = default;
    ActivityStore(std::vector<ActivityRecord> records, std::vector<UserProfile> profiles,
                  ParseReport* report = nullptr);

    const std::vector<std::string>& users() const noexcept { return users_; }
    bool has_user(std::string_view user_id) const;
    std::size_t user_count() const noexcept { return users_.size(); }

    std::span<const ActivityRecord> activities() const noexcept { return records_; }
    std::size_t activity_count() const noexcept { return records_.size(); }

    /// Records authored by `user_id`, in store order. Throws NotFoundError for unknown users.
    std::vector<const ActivityRecord*> activities_of(std::string_view user_id) const;
    std::size_t activity_count_of(std::string_view user_id) const;

    const ActivityRecord* find_activity(std::string_view activity_id) const;
    const UserProfile* profile(std::string_view user_id) const;
    std::span<const UserProfile> profiles() const noexcept { return profiles_; }

    /// For a retweet/quote, the referenced record if it is part of the store.
    const ActivityRecord* resolve_reference(const ActivityRecord& record) const;

private:
    std::vector<ActivityRecord> records_;
    std::vector<UserProfile> profiles_;
    std::vector<std::string> users_;
    std::map<std::string, std::vector<std::size_t>, std::less<>> by_user_;
    std::map<std::string, std::size_t, std::less<>> profile_index_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

/// Reads the line-delimited JSON stream. Lines with `"type": "profile"` are profiles; all other
/// lines are activity records. Malformed lines are counted in `report` (fatal when strict).
ActivityStore parse_activity_stream(const std::filesystem::path& path, const ParseOptions& options = {},
                                    ParseReport* report = nullptr);

/// Same as parse_activity_stream, with profiles optionally in a second stream.
ActivityStore load_store(const std::filesystem::path& activities,
                         const std::optional<std::filesystem::path>& profiles, const ParseOptions& options = {},
                         ParseReport* report = nullptr);

/// Parses records from an already-open stream; `source` names it in diagnostics.
void parse_stream_lines(std::istream& in, std::string_view source, const ParseOptions& options,
                        std::vector<ActivityRecord>& records, std::vector<UserProfile>& profiles,
                        ParseReport& report);

std::string to_json_line(const ActivityRecord& record);
std::string to_json_line(const UserProfile& profile);

// ---------------------------------------------------------------------------
// Lexicon
// ---------------------------------------------------------------------------

struct LexiconTerm {
    std::string canonical;
    std::vector<std::string> variants;
};

/// Term list matched case-insensitively, on word boundaries, over NFC-normalized text.
class Lexicon {
public:
    Lexicon() = default;
    explicit Lexicon(std::vector<LexiconTerm> terms);

    /// One term per line, comma-separated variants (the first is canonical); `#` starts a comment.
    static Lexicon parse(std::istream& in);
    static Lexicon load(const std::filesystem::path& path);

    const std::vector<LexiconTerm>& terms() const noexcept { return terms_; }
    bool empty() const noexcept { return terms_.empty(); }

    /// Occurrences of any variant. At each position the longest variant wins and matching
    /// resumes after it, so overlapping variants are never double counted.
    std::size_t count_occurrences(std::string_view utf8) const;

private:
    std::vector<LexiconTerm> terms_;
    std::vector<std::u32string> folded_variants_;  // longest first
};

/// Texts whose lexicon hits are attributed to `user_id`: own text of tweets and quotes, and the
/// referenced post's text for plain retweets.
std::vector<std::string_view> attributed_texts(const ActivityStore& store, std::string_view user_id);

/// Total occurrences of lexicon variants across the user's attributed texts.
std::size_t count_lexicon_hits(const ActivityStore& store, std::string_view user_id, const Lexicon& lexicon);

// ---------------------------------------------------------------------------
// Flagged posts and labels
// ---------------------------------------------------------------------------

enum class FlagReason { Hate, Misinfo, Other };

std::string_view to_string(FlagReason reason) noexcept;

struct FlaggedPostSet {
    std::map<std::string, FlagReason> entries;

    /// Two-column CSV `activity_id,reason`, optional header row; reason is hate/misinfo/other.
    static FlaggedPostSet parse(std::istream& in, Diagnostics* diagnostics = nullptr);
    static FlaggedPostSet load(const std::filesystem::path& path, Diagnostics* diagnostics = nullptr);
};

enum class Group { IU, BU, NIU, Excluded };
enum class Subtype { HU, MU, HMU, LexiconOnly, None };

std::string_view to_string(Group group) noexcept;
std::string_view to_string(Subtype subtype) noexcept;
std::optional<Group> parse_group(std::string_view text) noexcept;
std::optional<Subtype> parse_subtype(std::string_view text) noexcept;

struct UserLabel {
    std::string user_id;
    Group group = Group::Excluded;
    Subtype subtype = Subtype::None;
    std::size_t lexicon_hits = 0;
};

struct LabelOptions {
    /// nullopt disables lexicon-based qualification (an infinite threshold).
    std::optional<std::size_t> hit_threshold = 3;
    /// Quoting a flagged post counts like retweeting it.
    bool include_quotes = true;
};

struct LabelResult {
    /// IU members only.
    std::map<std::string, UserLabel> labels;
    /// Lexicon hits for every user in the store.
    std::map<std::string, std::size_t> lexicon_hits;
    std::size_t unmatched_flags = 0;
    Diagnostics diagnostics;
};

LabelResult assign_labels(const ActivityStore& store, const FlaggedPostSet& flagged, const Lexicon& lexicon,
                          const LabelOptions& options = {});

}  // namespace iuprobe
