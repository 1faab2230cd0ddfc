#include "iuprobe/ingest.hpp"

#include "iuprobe/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace iuprobe {

using nlohmann::json;

std::string_view to_string(ActivityKind kind) noexcept {
    switch (kind) {
    case ActivityKind::Tweet: return "tweet";
    case ActivityKind::Retweet: return "retweet";
    case ActivityKind::Quote: return "quote";
    }
    return "tweet";
}

std::optional<ActivityKind> parse_activity_kind(std::string_view text) noexcept {
    const std::string lower = to_lower_ascii(text);
    if (lower == "tweet") return ActivityKind::Tweet;
    if (lower == "retweet") return ActivityKind::Retweet;
    if (lower == "quote") return ActivityKind::Quote;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// ActivityStore
// ---------------------------------------------------------------------------

ActivityStore::ActivityStore(std::vector<ActivityRecord> records, std::vector<UserProfile> profiles,
                             ParseReport* report) {
    ParseReport local;
    ParseReport& rep = report ? *report : local;

    records_.reserve(records.size());
    for (auto& r : records) {
        if (r.activity_id.empty() || r.user_id.empty()) {
            ++rep.rejected;
            rep.diagnostics.warn("activity without id or user rejected");
            continue;
        }
        if (r.kind != ActivityKind::Tweet && (!r.referenced_activity_id || !r.referenced_user_id ||
                                              r.referenced_activity_id->empty() || r.referenced_user_id->empty())) {
            ++rep.rejected;
            rep.diagnostics.warn("activity " + r.activity_id + ": " + std::string(to_string(r.kind)) +
                                 " without referenced activity/user rejected");
            continue;
        }
        if (by_id_.count(r.activity_id) != 0) {
            ++rep.duplicates;
            rep.diagnostics.warn("duplicate activity_id " + r.activity_id + " skipped (first occurrence kept)");
            continue;
        }
        by_id_.emplace(r.activity_id, records_.size());
        records_.push_back(std::move(r));
    }

    for (auto& p : profiles) {
        if (p.user_id.empty()) {
            ++rep.rejected;
            rep.diagnostics.warn("profile without user_id rejected");
            continue;
        }
        if (profile_index_.count(p.user_id) != 0) {
            ++rep.duplicates;
            rep.diagnostics.warn("duplicate profile " + p.user_id + " skipped (first occurrence kept)");
            continue;
        }
        profile_index_.emplace(p.user_id, profiles_.size());
        profiles_.push_back(std::move(p));
    }

    std::set<std::string, std::less<>> users;
    for (const auto& p : profiles_) {
        users.insert(p.user_id);
    }
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& r = records_[i];
        users.insert(r.user_id);
        by_user_[r.user_id].push_back(i);
        if (r.referenced_user_id) {
            users.insert(*r.referenced_user_id);
        }
    }
    users_.assign(users.begin(), users.end());
}

bool ActivityStore::has_user(std::string_view user_id) const {
    return std::binary_search(users_.begin(), users_.end(), user_id,
                              [](std::string_view a, std::string_view b) { return a < b; });
}

std::vector<const ActivityRecord*> ActivityStore::activities_of(std::string_view user_id) const {
    if (!has_user(user_id)) {
        throw NotFoundError("unknown user: " + std::string(user_id));
    }
    std::vector<const ActivityRecord*> out;
    if (auto it = by_user_.find(user_id); it != by_user_.end()) {
        out.reserve(it->second.size());
        for (std::size_t idx : it->second) {
            out.push_back(&records_[idx]);
        }
    }
    return out;
}

std::size_t ActivityStore::activity_count_of(std::string_view user_id) const {
    if (!has_user(user_id)) {
        throw NotFoundError("unknown user: " + std::string(user_id));
    }
    auto it = by_user_.find(user_id);
    return it == by_user_.end() ? 0 : it->second.size();
}

const ActivityRecord* ActivityStore::find_activity(std::string_view activity_id) const {
    auto it = by_id_.find(std::string(activity_id));
    return it == by_id_.end() ? nullptr : &records_[it->second];
}

const UserProfile* ActivityStore::profile(std::string_view user_id) const {
    auto it = profile_index_.find(user_id);
    return it == profile_index_.end() ? nullptr : &profiles_[it->second];
}

const ActivityRecord* ActivityStore::resolve_reference(const ActivityRecord& record) const {
    if (!record.referenced_activity_id) {
        return nullptr;
    }
    return find_activity(*record.referenced_activity_id);
}

// ---------------------------------------------------------------------------
// Stream parsing
// ---------------------------------------------------------------------------

namespace {

std::string required_string(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) {
        throw ValidationError(std::string("missing string field '") + key + "'");
    }
    return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        return std::nullopt;
    }
    if (!it->is_string()) {
        throw ValidationError(std::string("field '") + key + "' must be a string");
    }
    return it->get<std::string>();
}

std::optional<std::size_t> optional_count(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        return std::nullopt;
    }
    if (!it->is_number_integer() || it->get<std::int64_t>() < 0) {
        throw ValidationError(std::string("field '") + key + "' must be a non-negative integer");
    }
    return it->get<std::size_t>();
}

std::int64_t required_count(const json& obj, const char* key) {
    auto v = optional_count(obj, key);
    if (!v) {
        throw ValidationError(std::string("missing integer field '") + key + "'");
    }
    return static_cast<std::int64_t>(*v);
}

ActivityRecord activity_from_json(const json& obj) {
    ActivityRecord r;
    r.activity_id = required_string(obj, "activity_id");
    r.user_id = required_string(obj, "user_id");
    const std::string kind = required_string(obj, "kind");
    auto parsed = parse_activity_kind(kind);
    if (!parsed) {
        throw ValidationError("unknown activity kind '" + kind + "'");
    }
    r.kind = *parsed;
    r.referenced_activity_id = optional_string(obj, "referenced_activity_id");
    r.referenced_user_id = optional_string(obj, "referenced_user_id");
    if (r.kind != ActivityKind::Tweet && (!r.referenced_activity_id || !r.referenced_user_id)) {
        throw ValidationError(kind + " without referenced_activity_id/referenced_user_id");
    }
    r.text = optional_string(obj, "text").value_or("");
    r.created_at = parse_iso8601(required_string(obj, "created_at"));

    auto mentions = optional_count(obj, "mention_count");
    auto hashtags = optional_count(obj, "hashtag_count");
    auto urls = optional_count(obj, "url_count");
    if (!mentions || !hashtags || !urls) {
        const auto fallback = text::extract_surface_counts(r.text);
        r.mention_count = mentions.value_or(fallback.mentions);
        r.hashtag_count = hashtags.value_or(fallback.hashtags);
        r.url_count = urls.value_or(fallback.urls);
    } else {
        r.mention_count = *mentions;
        r.hashtag_count = *hashtags;
        r.url_count = *urls;
    }
    return r;
}

UserProfile profile_from_json(const json& obj) {
    UserProfile p;
    p.user_id = required_string(obj, "user_id");
    p.display_name = optional_string(obj, "display_name").value_or("");
    p.description = optional_string(obj, "description").value_or("");
    p.location = optional_string(obj, "location").value_or("");
    p.followers = required_count(obj, "followers");
    p.following = required_count(obj, "following");
    p.created_at = parse_iso8601(required_string(obj, "created_at"));
    if (auto it = obj.find("bot_score"); it != obj.end() && !it->is_null()) {
        if (!it->is_number()) {
            throw ValidationError("bot_score must be a number");
        }
        const double b = it->get<double>();
        if (!(b >= 0.0 && b <= 1.0)) {
            throw ValidationError("bot_score outside [0,1]");
        }
        p.bot_score = b;
    }
    if (auto it = obj.find("extra"); it != obj.end() && !it->is_null()) {
        if (!it->is_object()) {
            throw ValidationError("extra must be an object of numbers");
        }
        for (const auto& [k, v] : it->items()) {
            if (!v.is_number()) {
                throw ValidationError("extra feature '" + k + "' must be numeric");
            }
            p.extra[k] = v.get<double>();
        }
    }
    return p;
}

}  // namespace

void parse_stream_lines(std::istream& in, std::string_view source, const ParseOptions& options,
                        std::vector<ActivityRecord>& records, std::vector<UserProfile>& profiles,
                        ParseReport& report) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        ++report.lines;
        try {
            const json obj = json::parse(line);
            if (!obj.is_object()) {
                throw ValidationError("line is not a JSON object");
            }
            const auto type = obj.find("type");
            if (type != obj.end() && type->is_string() && type->get<std::string>() == "profile") {
                UserProfile p = profile_from_json(obj);
                if (options.collection_end && p.created_at > *options.collection_end) {
                    throw ValidationError("profile " + p.user_id + " created after collection end");
                }
                profiles.push_back(std::move(p));
                ++report.profiles;
            } else {
                records.push_back(activity_from_json(obj));
                ++report.activities;
            }
        } catch (const std::exception& e) {
            const std::string msg = std::string(source) + ":" + std::to_string(line_no) + ": " + e.what();
            if (options.strict) {
                throw ValidationError(msg);
            }
            ++report.rejected;
            report.diagnostics.warn(msg);
        }
    }
}

namespace {

void read_file_into(const std::filesystem::path& path, const ParseOptions& options,
                    std::vector<ActivityRecord>& records, std::vector<UserProfile>& profiles, ParseReport& report) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    parse_stream_lines(in, path.string(), options, records, profiles, report);
    if (in.bad()) {
        throw IoError("read failure on " + path.string());
    }
}

}  // namespace

ActivityStore parse_activity_stream(const std::filesystem::path& path, const ParseOptions& options,
                                    ParseReport* report) {
    return load_store(path, std::nullopt, options, report);
}

ActivityStore load_store(const std::filesystem::path& activities,
                         const std::optional<std::filesystem::path>& profiles, const ParseOptions& options,
                         ParseReport* report) {
    ParseReport local;
    ParseReport& rep = report ? *report : local;
    std::vector<ActivityRecord> records;
    std::vector<UserProfile> profile_list;
    read_file_into(activities, options, records, profile_list, rep);
    if (profiles) {
        read_file_into(*profiles, options, records, profile_list, rep);
    }
    return ActivityStore(std::move(records), std::move(profile_list), &rep);
}

std::string to_json_line(const ActivityRecord& record) {
    json obj;
    obj["activity_id"] = record.activity_id;
    obj["user_id"] = record.user_id;
    obj["kind"] = std::string(to_string(record.kind));
    if (record.referenced_activity_id) {
        obj["referenced_activity_id"] = *record.referenced_activity_id;
    }
    if (record.referenced_user_id) {
        obj["referenced_user_id"] = *record.referenced_user_id;
    }
    obj["text"] = record.text;
    obj["created_at"] = format_iso8601(record.created_at);
    obj["mention_count"] = record.mention_count;
    obj["hashtag_count"] = record.hashtag_count;
    obj["url_count"] = record.url_count;
    return obj.dump();
}

std::string to_json_line(const UserProfile& profile) {
    json obj;
    obj["type"] = "profile";
    obj["user_id"] = profile.user_id;
    obj["display_name"] = profile.display_name;
    obj["description"] = profile.description;
    obj["location"] = profile.location;
    obj["followers"] = profile.followers;
    obj["following"] = profile.following;
    obj["created_at"] = format_iso8601(profile.created_at);
    if (profile.bot_score) {
        obj["bot_score"] = *profile.bot_score;
    }
    if (!profile.extra.empty()) {
        obj["extra"] = profile.extra;
    }
    return obj.dump();
}

// ---------------------------------------------------------------------------
// Lexicon
// ---------------------------------------------------------------------------

Lexicon::Lexicon(std::vector<LexiconTerm> terms) : terms_(std::move(terms)) {
    std::set<std::u32string> unique;
    for (const auto& term : terms_) {
        if (term.variants.empty()) {
            throw ValidationError("lexicon term '" + term.canonical + "' has no variants");
        }
        for (const auto& v : term.variants) {
            std::u32string folded = text::normalize_fold(trim(v));
            if (folded.empty()) {
                throw ValidationError("empty variant in lexicon term '" + term.canonical + "'");
            }
            unique.insert(std::move(folded));
        }
    }
    folded_variants_.assign(unique.begin(), unique.end());
    std::stable_sort(folded_variants_.begin(), folded_variants_.end(),
                     [](const auto& a, const auto& b) { return a.size() > b.size(); });
}

Lexicon Lexicon::parse(std::istream& in) {
    std::vector<LexiconTerm> terms;
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        if (trim(line).empty()) {
            continue;
        }
        LexiconTerm term;
        for (const auto& piece : split(line, ',')) {
            std::string v = trim(piece);
            if (v.empty()) {
                throw ValidationError("empty variant in lexicon line: '" + line + "'");
            }
            term.variants.push_back(std::move(v));
        }
        term.canonical = term.variants.front();
        terms.push_back(std::move(term));
    }
    return Lexicon(std::move(terms));
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open lexicon " + path.string());
    }
    return parse(in);
}

std::size_t Lexicon::count_occurrences(std::string_view utf8) const {
    if (folded_variants_.empty() || utf8.empty()) {
        return 0;
    }
    const std::u32string folded = text::normalize_fold(utf8);
    std::size_t hits = 0;
    std::size_t i = 0;
    while (i < folded.size()) {
        if (i > 0 && text::is_word_char(folded[i - 1])) {
            ++i;
            continue;
        }
        std::size_t matched = 0;
        for (const auto& v : folded_variants_) {
            if (v.size() > folded.size() - i) {
                continue;
            }
            if (folded.compare(i, v.size(), v) != 0) {
                continue;
            }
            const std::size_t end = i + v.size();
            if (end < folded.size() && text::is_word_char(folded[end])) {
                continue;
            }
            matched = v.size();
            break;
        }
        if (matched > 0) {
            ++hits;
            i += matched;
        } else {
            ++i;
        }
    }
    return hits;
}

std::vector<std::string_view> attributed_texts(const ActivityStore& store, std::string_view user_id) {
    std::vector<std::string_view> out;
    for (const ActivityRecord* r : store.activities_of(user_id)) {
        if (r->kind != ActivityKind::Retweet) {
            out.push_back(r->text);
            continue;
        }
        if (!r->text.empty()) {
            out.push_back(r->text);
        } else if (const ActivityRecord* ref = store.resolve_reference(*r)) {
            out.push_back(ref->text);
        }
    }
    return out;
}

std::size_t count_lexicon_hits(const ActivityStore& store, std::string_view user_id, const Lexicon& lexicon) {
    std::size_t hits = 0;
    for (std::string_view t : attributed_texts(store, user_id)) {
        hits += lexicon.count_occurrences(t);
    }
    return hits;
}

// ---------------------------------------------------------------------------
// Flags and labels
// ---------------------------------------------------------------------------

std::string_view to_string(FlagReason reason) noexcept {
    switch (reason) {
    case FlagReason::Hate: return "hate";
    case FlagReason::Misinfo: return "misinfo";
    case FlagReason::Other: return "other";
    }
    return "other";
}

FlaggedPostSet FlaggedPostSet::parse(std::istream& in, Diagnostics* diagnostics) {
    FlaggedPostSet set;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') {
            continue;
        }
        const auto cols = split(t, ',');
        if (cols.size() != 2) {
            throw ValidationError("flagged-post line " + std::to_string(line_no) + ": expected 2 columns");
        }
        const std::string id = trim(cols[0]);
        const std::string reason = to_lower_ascii(trim(cols[1]));
        if (line_no == 1 && id == "activity_id" && reason == "reason") {
            continue;
        }
        FlagReason r;
        if (reason == "hate") {
            r = FlagReason::Hate;
        } else if (reason == "misinfo") {
            r = FlagReason::Misinfo;
        } else if (reason == "other" || reason.empty()) {
            r = FlagReason::Other;
        } else {
            throw ValidationError("flagged-post line " + std::to_string(line_no) + ": unknown reason '" + reason + "'");
        }
        if (!set.entries.emplace(id, r).second && diagnostics) {
            diagnostics->warn("flagged post " + id + " listed twice; first reason kept");
        }
    }
    return set;
}

FlaggedPostSet FlaggedPostSet::load(const std::filesystem::path& path, Diagnostics* diagnostics) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open flagged-post file " + path.string());
    }
    return parse(in, diagnostics);
}

std::string_view to_string(Group group) noexcept {
    switch (group) {
    case Group::IU: return "IU";
    case Group::BU: return "BU";
    case Group::NIU: return "NIU";
    case Group::Excluded: return "Excluded";
    }
    return "Excluded";
}

std::string_view to_string(Subtype subtype) noexcept {
    switch (subtype) {
    case Subtype::HU: return "HU";
    case Subtype::MU: return "MU";
    case Subtype::HMU: return "HMU";
    case Subtype::LexiconOnly: return "LexiconOnly";
    case Subtype::None: return "None";
    }
    return "None";
}

std::optional<Group> parse_group(std::string_view text) noexcept {
    for (Group g : {Group::IU, Group::BU, Group::NIU, Group::Excluded}) {
        if (to_string(g) == text) return g;
    }
    return std::nullopt;
}

std::optional<Subtype> parse_subtype(std::string_view text) noexcept {
    for (Subtype s : {Subtype::HU, Subtype::MU, Subtype::HMU, Subtype::LexiconOnly, Subtype::None}) {
        if (to_string(s) == text) return s;
    }
    return std::nullopt;
}

LabelResult assign_labels(const ActivityStore& store, const FlaggedPostSet& flagged, const Lexicon& lexicon,
                          const LabelOptions& options) {
    LabelResult result;

    struct Links {
        bool hate = false;
        bool misinfo = false;
    };
    std::map<std::string, Links> links;
    std::set<std::string> matched;

    const auto link = [&](const std::string& user, const std::string& activity_id) {
        auto it = flagged.entries.find(activity_id);
        if (it == flagged.entries.end() || it->second == FlagReason::Other) {
            return;
        }
        matched.insert(activity_id);
        Links& l = links[user];
        (it->second == FlagReason::Hate ? l.hate : l.misinfo) = true;
    };

    for (const auto& r : store.activities()) {
        // authoring (or re-posting under its own id) a flagged post
        link(r.user_id, r.activity_id);
        if (r.kind == ActivityKind::Retweet || (r.kind == ActivityKind::Quote && options.include_quotes)) {
            link(r.user_id, *r.referenced_activity_id);
        } else if (r.kind == ActivityKind::Quote && r.referenced_activity_id &&
                   flagged.entries.count(*r.referenced_activity_id) != 0) {
            matched.insert(*r.referenced_activity_id);
        }
    }

    for (const auto& [id, reason] : flagged.entries) {
        if (reason == FlagReason::Other) {
            continue;
        }
        if (matched.count(id) == 0) {
            ++result.unmatched_flags;
            result.diagnostics.warn("flagged post " + id + " not found in activity stream");
        }
    }

    for (const auto& user : store.users()) {
        const std::size_t hits = lexicon.empty() ? 0 : count_lexicon_hits(store, user, lexicon);
        result.lexicon_hits[user] = hits;

        Subtype subtype = Subtype::None;
        if (auto it = links.find(user); it != links.end()) {
            const Links& l = it->second;
            subtype = (l.hate && l.misinfo) ? Subtype::HMU : (l.hate ? Subtype::HU : Subtype::MU);
        } else if (options.hit_threshold && hits >= *options.hit_threshold) {
            subtype = Subtype::LexiconOnly;
        }
        if (subtype != Subtype::None) {
            result.labels.emplace(user, UserLabel{user, Group::IU, subtype, hits});
        }
    }
    return result;
}

}  // namespace iuprobe
