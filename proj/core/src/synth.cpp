#include "iuprobe/synth.hpp"

#include "iuprobe/stats.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

namespace iuprobe {

std::map<std::string, double> default_effect_targets() {
    return {
        {"following", -0.43},       {"follower", -0.57},        {"account_age", -0.40},
        {"activity_count", -0.45},  {"maxdate_ratio", 0.43},    {"description_length", -0.29},
        {"avg_mention", 0.24},      {"avg_hashtag", 0.18},      {"avg_url", -0.10},
        {"avg_tweet_length", 0.31}, {"lex_diversity", -0.27},   {"eigencentrality", -0.27},
        {"name_length", 0.0},       {"has_location", 0.0},      {"bot_score", 0.0},
    };
}

SynthConfig SynthConfig::defaults(std::uint64_t seed) {
    SynthConfig c;
    c.seed = seed;
    c.effects = default_effect_targets();
    return c;
}

SynthConfig SynthConfig::null_model(std::uint64_t seed) {
    SynthConfig c = defaults(seed);
    for (auto& [name, target] : c.effects) target = 0.0;
    c.topic_signal = 0.0;
    return c;
}

double shift_for_delta(double delta, double sigma) {
    if (!(delta > -1.0 && delta < 1.0)) {
        throw ValidationError("effect target must lie strictly between -1 and 1");
    }
    if (delta == 0.0) return 0.0;
    return -sigma * std::sqrt(2.0) * special::normal_quantile(0.5 * (1.0 + delta));
}

namespace {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(eng_); }
    double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(eng_); }
    double normal(double mean, double sd) { return std::normal_distribution<double>(mean, sd)(eng_); }
    std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(eng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
    bool chance(double p) { return uniform() < p; }
    int poisson(double mean) { return mean > 0 ? std::poisson_distribution<int>(mean)(eng_) : 0; }
    double gamma(double shape) { return std::gamma_distribution<double>(shape, 1.0)(eng_); }
    std::mt19937_64& engine() { return eng_; }

private:
    std::mt19937_64 eng_;
};

constexpr const char* kSyllables[] = {"ba", "de", "ki", "lo", "mu", "na", "pe", "ri",
                                      "so", "tu", "va", "xe", "yo", "za", "qi", "fu"};

std::string vocab_word(std::size_t i) {
    std::string w = std::string(kSyllables[i % 16]) + kSyllables[(i / 16) % 16];
    if (i >= 256) w += kSyllables[(i / 256) % 16];
    return w;
}
constexpr std::size_t kVocabSize = 4096;

const std::vector<LexiconTerm>& synthetic_lexicon() {
    static const std::vector<LexiconTerm> terms = {
        {"grozhak", {"grozhak", "grozhaks", "gr0zhak"}},
        {"vuldrek", {"vuldrek", "vuldreks"}},
        {"skarnith", {"skarnith", "skarniths"}},
        {"threlm", {"threlm", "threlms", "þrelm"}},
        {"mordazi", {"mordazi"}},
        {"kvassit", {"kvassit", "kvassits", "kvässit"}},
    };
    return terms;
}

constexpr const char* kLocations[] = {"Addis Ababa", "Mekelle", "Bahir Dar", "Gondar",
                                      "Hawassa",     "Nairobi", "London",    "Washington DC"};

struct TweetRef {
    std::string id;
    std::string author;
};

/// Index into a pool with draw probability proportional to `weights`.
class WeightedPool {
public:
    void add(TweetRef ref, double weight) {
        refs_.push_back(std::move(ref));
        weights_.push_back(weight);
    }
    bool empty() const { return refs_.empty(); }
    void freeze() { dist_ = std::discrete_distribution<std::size_t>(weights_.begin(), weights_.end()); }
    const TweetRef& draw(Rng& rng) { return refs_[dist_(rng.engine())]; }

private:
    std::vector<TweetRef> refs_;
    std::vector<double> weights_;
    std::discrete_distribution<std::size_t> dist_;
};

enum class Mechanism { None, FlagAuthor, FlagRetweeter, Lexicon };

struct Plan {
    std::string id;
    Group group = Group::NIU;
    double k = 0;  // share of the IU shift
    Mechanism mechanism = Mechanism::None;
    std::size_t count = 0;
    std::size_t authored = 0;
    std::vector<Timestamp> times;  // one per activity, shuffled
    double popularity = 1;
    double mention_rate = 0, hashtag_rate = 0, url_rate = 0;
    double tweet_length = 0;
    std::vector<std::size_t> vocab;
};

double effect(const SynthConfig& c, const std::string& name) {
    auto it = c.effects.find(name);
    return it == c.effects.end() ? 0.0 : it->second;
}

std::string words_to_length(Rng& rng, const std::vector<std::size_t>& vocab, std::size_t length) {
    std::string out;
    while (out.size() < length) {
        if (!out.empty()) out += ' ';
        out += vocab_word(vocab[rng.index(vocab.size())]);
    }
    if (out.size() > length) out.resize(length);
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

std::string make_name(Rng& rng) {
    const int len = rng.integer(4, 20);
    std::string name;
    while (static_cast<int>(name.size()) < len) name += kSyllables[rng.index(16)];
    name.resize(static_cast<std::size_t>(len));
    name[0] = static_cast<char>(name[0] - 'a' + 'A');
    return name;
}

}  // namespace

SynthData generate_synthetic(const SynthConfig& cfg) {
    if (cfg.users < 20) {
        throw ValidationError("synthetic data needs at least 20 users");
    }
    const double fractions = cfg.iu_fraction + cfg.bu_fraction + cfg.excluded_fraction;
    if (cfg.iu_fraction <= 0 || cfg.bu_fraction < 0 || cfg.excluded_fraction < 0 || fractions >= 1.0) {
        throw ValidationError("group fractions must be non-negative, IU positive, and sum below 1");
    }
    if (cfg.topics == 0 || cfg.signal_topics > cfg.topics || cfg.window_days < 30) {
        throw ValidationError("invalid topic or window settings");
    }

    Rng rng(cfg.seed);
    SynthData data;
    data.config = cfg;
    data.lexicon = synthetic_lexicon();

    const std::size_t n = cfg.users;
    const auto count_of = [&](double f) { return static_cast<std::size_t>(std::lround(f * static_cast<double>(n))); };
    std::vector<Group> groups;
    groups.insert(groups.end(), std::max<std::size_t>(2, count_of(cfg.iu_fraction)), Group::IU);
    groups.insert(groups.end(), count_of(cfg.bu_fraction), Group::BU);
    groups.insert(groups.end(), count_of(cfg.excluded_fraction), Group::Excluded);
    groups.resize(n, Group::NIU);
    std::shuffle(groups.begin(), groups.end(), rng.engine());

    // Shifts on each latent scale.
    const double sd_following = 1.2, sd_ratio = 0.8;
    const double s_following = shift_for_delta(effect(cfg, "following"), sd_following);
    const double s_follower_total =
        shift_for_delta(effect(cfg, "follower"), std::hypot(sd_following, sd_ratio));
    const double s_ratio = s_follower_total - s_following;
    const double s_age = shift_for_delta(effect(cfg, "account_age"), 0.6);
    const double s_count = shift_for_delta(effect(cfg, "activity_count"), 0.9);
    const double s_peak = shift_for_delta(effect(cfg, "maxdate_ratio"), 1.0);
    const double s_desc = shift_for_delta(effect(cfg, "description_length"), 0.7);
    const double s_mention = shift_for_delta(effect(cfg, "avg_mention"), 0.5);
    const double s_hashtag = shift_for_delta(effect(cfg, "avg_hashtag"), 0.5);
    const double s_url = shift_for_delta(effect(cfg, "avg_url"), 0.5);
    const double s_length = shift_for_delta(effect(cfg, "avg_tweet_length"), 0.35);
    const double s_vocab = shift_for_delta(effect(cfg, "lex_diversity"), 1.5);
    const double s_popularity = shift_for_delta(effect(cfg, "eigencentrality"), 1.0);
    const double s_name = shift_for_delta(effect(cfg, "name_length"), 1.0);
    const double s_location = shift_for_delta(effect(cfg, "has_location"), 1.0);
    const double s_bot = shift_for_delta(effect(cfg, "bot_score"), 1.0);

    const Timestamp window_start = cfg.collection_end - static_cast<Timestamp>(cfg.window_days) * kSecondsPerDay;

    std::vector<Plan> plans(n);
    std::size_t iu_seen = 0;
    for (std::size_t i = 0; i < n; ++i) {
        Plan& p = plans[i];
        char buf[32];
        std::snprintf(buf, sizeof buf, "u%05zu", i);
        p.id = buf;
        p.group = groups[i];
        p.k = p.group == Group::IU ? 1.0 : p.group == Group::BU ? cfg.bu_shift_scale : 0.0;
        data.intended[p.id] = p.group;
        if (p.group == Group::IU) {
            // The first IUs author flagged posts so later IUs have something to retweet.
            const double u = rng.uniform();
            p.mechanism = iu_seen == 0 ? Mechanism::FlagAuthor
                          : u < 0.55   ? Mechanism::FlagAuthor
                          : u < 0.85   ? Mechanism::FlagRetweeter
                                       : Mechanism::Lexicon;
            ++iu_seen;
        }

        // Profile
        UserProfile prof;
        prof.user_id = p.id;
        std::string name = make_name(rng);
        if (const long extra = std::lround(p.k * s_name * 3.0); extra > 0) {
            name += std::string(static_cast<std::size_t>(extra), 'a');
        }
        if (rng.chance(0.1)) name += " ሰላም";
        prof.display_name = name;
        const double log_following = rng.normal(std::log(300.0) + p.k * s_following, sd_following);
        const double log_ratio = rng.normal(std::log(0.7) + p.k * s_ratio, sd_ratio);
        prof.following = std::llround(std::exp(log_following));
        prof.followers = std::llround(std::exp(log_following + log_ratio));
        const double age_days = std::clamp(std::exp(rng.normal(std::log(1500.0) + p.k * s_age, 0.6)),
                                           cfg.window_days + 30.0, 5400.0);
        prof.created_at = cfg.collection_end - static_cast<Timestamp>(age_days * kSecondsPerDay);
        std::vector<std::size_t> desc_vocab(40);
        for (auto& w : desc_vocab) w = rng.index(kVocabSize);
        if (!rng.chance(0.12)) {
            const double len = std::min(160.0, std::exp(rng.normal(std::log(60.0) + p.k * s_desc, 0.7)));
            prof.description = words_to_length(rng, desc_vocab, static_cast<std::size_t>(std::max(1.0, len)));
        }
        if (rng.uniform() < special::normal_sf(-(0.25 + p.k * s_location))) {
            prof.location = kLocations[rng.index(std::size(kLocations))];
        }
        if (!rng.chance(0.05)) {
            prof.bot_score = 1.0 / (1.0 + std::exp(-rng.normal(-1.5 + p.k * s_bot, 1.0)));
        }
        prof.extra["statuses_count"] = std::round(std::exp(rng.normal(std::log(2000.0), 1.5)));
        prof.extra["favourites_count"] = std::round(std::exp(rng.normal(std::log(1500.0), 1.5)));
        prof.extra["listed_count"] = std::floor(std::exp(rng.normal(std::log(5.0), 1.2)));
        prof.extra["verified"] = rng.chance(0.02) ? 1.0 : 0.0;
        prof.extra["default_profile_image"] = rng.chance(0.05) ? 1.0 : 0.0;
        data.profiles.push_back(std::move(prof));

        // Activity volume and schedule
        if (p.group == Group::Excluded) {
            p.count = static_cast<std::size_t>(rng.integer(1, 9));
        } else {
            p.count = 10 + static_cast<std::size_t>(std::min(
                               290.0, std::floor(std::exp(rng.normal(std::log(15.0) + p.k * s_count, 0.9)))));
        }
        const double share = rng.uniform(0.35, 0.65);
        std::size_t retweets = static_cast<std::size_t>(std::lround(share * static_cast<double>(p.count)));
        const std::size_t min_authored = p.count >= 3 ? 2 : 1;
        retweets = std::min(retweets, p.count - min_authored);
        const bool needs_retweet = p.group == Group::BU || p.mechanism == Mechanism::FlagRetweeter;
        if (needs_retweet && retweets == 0) retweets = 1;
        p.authored = p.count - retweets;

        const double logit_peak = rng.normal(-1.2 + p.k * s_peak, 1.0);
        const double q = 1.0 / (1.0 + std::exp(-logit_peak));
        const auto peak = static_cast<std::size_t>(
            std::clamp<long>(std::lround(q * static_cast<double>(p.count)), 1L, static_cast<long>(p.count)));
        std::vector<int> days(static_cast<std::size_t>(cfg.window_days));
        std::iota(days.begin(), days.end(), 0);
        std::shuffle(days.begin(), days.end(), rng.engine());
        std::vector<int> per_activity_day(peak, days[0]);
        std::size_t rest = p.count - peak;
        const std::size_t cap = peak > 1 ? peak - 1 : 1;
        for (std::size_t d = 1; rest > 0; ++d) {
            const std::size_t chunk = std::min<std::size_t>(rest, 1 + rng.index(cap));
            per_activity_day.insert(per_activity_day.end(), chunk, days[d % days.size()]);
            rest -= chunk;
        }
        std::shuffle(per_activity_day.begin(), per_activity_day.end(), rng.engine());
        for (int day : per_activity_day) {
            p.times.push_back(window_start + static_cast<Timestamp>(day) * kSecondsPerDay + rng.integer(0, 86399));
        }

        p.popularity = std::exp(rng.normal(p.k * s_popularity, 1.0));
        p.mention_rate = std::exp(rng.normal(std::log(0.8) + p.k * s_mention, 0.5));
        p.hashtag_rate = std::exp(rng.normal(std::log(0.5) + p.k * s_hashtag, 0.5));
        p.url_rate = std::exp(rng.normal(std::log(0.3) + p.k * s_url, 0.5));
        p.tweet_length = std::exp(rng.normal(std::log(90.0) + p.k * s_length, 0.35));
        const double vocab = std::clamp(std::exp(rng.normal(std::log(150.0) + p.k * s_vocab, 0.5)), 20.0, 4000.0);
        p.vocab.resize(static_cast<std::size_t>(vocab));
        for (auto& w : p.vocab) w = rng.index(kVocabSize);
    }

    // Authored posts
    std::size_t next_id = 0;
    const auto new_id = [&] {
        char buf[32];
        std::snprintf(buf, sizeof buf, "a%07zu", next_id++);
        return std::string(buf);
    };
    const auto& lex = data.lexicon;
    const auto lexicon_word = [&] {
        const auto& term = lex[rng.index(lex.size())];
        std::string w = term.variants[rng.index(term.variants.size())];
        const bool ascii = std::all_of(w.begin(), w.end(), [](unsigned char c) { return c < 0x80; });
        if (ascii && rng.chance(0.3)) {
            std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
        }
        return w;
    };

    WeightedPool niu_pool, bu_pool, iu_clean_pool, iu_flagged_pool;
    std::vector<TweetRef> niu_tweets;
    std::vector<std::pair<std::string, FlagReason>> flagged_by_author;
    std::map<std::string, std::size_t> slot_cursor;  // next timestamp index per user

    for (Plan& p : plans) {
        std::size_t lexicon_budget = 0;
        if (p.mechanism == Mechanism::Lexicon) lexicon_budget = static_cast<std::size_t>(rng.integer(3, 6));
        std::size_t flags_wanted = 0;
        FlagReason first_reason = FlagReason::Hate;
        bool both = false;
        if (p.mechanism == Mechanism::FlagAuthor) {
            flags_wanted = std::min<std::size_t>(p.authored, static_cast<std::size_t>(rng.integer(1, 3)));
            const double u = rng.uniform();
            first_reason = u < 0.45 ? FlagReason::Hate : FlagReason::Misinfo;
            both = u >= 0.85 && flags_wanted >= 2;
        }
        for (std::size_t a = 0; a < p.authored; ++a) {
            ActivityRecord r;
            r.activity_id = new_id();
            r.user_id = p.id;
            r.kind = ActivityKind::Tweet;
            r.created_at = p.times[slot_cursor[p.id]++];

            const auto length = static_cast<std::size_t>(
                std::clamp(p.tweet_length * rng.uniform(0.7, 1.3), 10.0, 280.0));
            std::string body = words_to_length(rng, p.vocab, length);
            const bool flagged = a < flags_wanted;
            std::size_t lexicon_here = 0;
            if (p.mechanism == Mechanism::Lexicon && lexicon_budget > 0) {
                lexicon_here = a + 1 == p.authored ? lexicon_budget : std::min<std::size_t>(lexicon_budget, 2);
                lexicon_budget -= lexicon_here;
            } else if (flagged && rng.chance(0.5)) {
                lexicon_here = 1;
            }
            for (std::size_t l = 0; l < lexicon_here; ++l) body += ' ' + lexicon_word();

            const int mentions = rng.poisson(p.mention_rate);
            const int hashtags = rng.poisson(p.hashtag_rate);
            const int urls = rng.poisson(p.url_rate);
            for (int m = 0; m < mentions; ++m) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "u%05zu", rng.index(n));
                body += std::string(" @") + buf;
            }
            for (int h = 0; h < hashtags; ++h) body += " #" + vocab_word(rng.index(kVocabSize));
            for (int u = 0; u < urls; ++u) body += " https://example.org/" + vocab_word(rng.index(kVocabSize));
            r.text = std::move(body);
            r.mention_count = static_cast<std::size_t>(mentions);
            r.hashtag_count = static_cast<std::size_t>(hashtags);
            r.url_count = static_cast<std::size_t>(urls);

            const TweetRef ref{r.activity_id, p.id};
            if (flagged) {
                const FlagReason reason = both && a == 1 ? (first_reason == FlagReason::Hate ? FlagReason::Misinfo
                                                                                            : FlagReason::Hate)
                                                         : first_reason;
                data.flagged.emplace_back(r.activity_id, reason);
                iu_flagged_pool.add(ref, p.popularity);
            } else if (p.group == Group::IU && lexicon_here == 0) {
                iu_clean_pool.add(ref, p.popularity);
            } else if (p.group == Group::BU) {
                bu_pool.add(ref, p.popularity);
            } else if (p.group == Group::NIU) {
                niu_pool.add(ref, p.popularity);
                niu_tweets.push_back(ref);
            }
            data.activities.push_back(std::move(r));
        }
    }
    if (iu_flagged_pool.empty() || niu_pool.empty()) {
        throw ValidationError("configuration produced no flagged or no NIU posts; increase users");
    }
    if (iu_clean_pool.empty()) {
        // Degenerate tiny configs: BUs then retweet flagged-author content only via IU retweets.
        throw ValidationError("configuration produced no clean IU posts for borderline users to share");
    }
    niu_pool.freeze();
    bu_pool.freeze();
    iu_clean_pool.freeze();
    iu_flagged_pool.freeze();

    std::map<std::string, double> popularity;
    for (const Plan& p : plans) popularity[p.id] = p.popularity;
    std::map<std::string, TweetRef> own_tweet;
    for (const TweetRef& t : niu_tweets) own_tweet.emplace(t.author, t);

    // Retweets and quotes
    for (Plan& p : plans) {
        const std::size_t retweets = p.count - p.authored;
        for (std::size_t s = 0; s < retweets; ++s) {
            const TweetRef* target = nullptr;
            const double u = rng.uniform();
            switch (p.group) {
            case Group::IU:
                if (s == 0 && p.mechanism == Mechanism::FlagRetweeter) {
                    target = &iu_flagged_pool.draw(rng);
                } else if (u < 0.25) {
                    target = &iu_clean_pool.draw(rng);
                } else if (u < 0.35) {
                    target = &iu_flagged_pool.draw(rng);
                } else if (u < 0.42 && !bu_pool.empty()) {
                    target = &bu_pool.draw(rng);
                } else {
                    target = &niu_pool.draw(rng);
                }
                break;
            case Group::BU:
                if (s == 0 || u < 0.3) {
                    target = &iu_clean_pool.draw(rng);
                } else if (u < 0.5 && !bu_pool.empty()) {
                    target = &bu_pool.draw(rng);
                } else {
                    target = &niu_pool.draw(rng);
                }
                break;
            case Group::NIU:
            case Group::Excluded: {
                // NIUs only retweet strictly more popular NIUs, so their block of the graph is
                // acyclic and the leading eigenvector is anchored in the IU/BU block.
                const auto rank = [&](const std::string& id) { return std::make_pair(popularity[id], id); };
                const auto own = rank(p.id);
                for (int attempt = 0; attempt < 16 && !target; ++attempt) {
                    const TweetRef& cand = niu_pool.draw(rng);
                    if (rank(cand.author) > own) target = &cand;
                }
                if (!target) {
                    auto mine = own_tweet.find(p.id);
                    target = mine != own_tweet.end() ? &mine->second : &niu_pool.draw(rng);
                }
                break;
            }
            }
            ActivityRecord r;
            r.activity_id = new_id();
            r.user_id = p.id;
            r.kind = ActivityKind::Retweet;
            r.referenced_activity_id = target->id;
            r.referenced_user_id = target->author;
            r.created_at = p.times[slot_cursor[p.id]++];
            data.activities.push_back(std::move(r));
        }
    }
    // A handful of NIU quotes of other NIU posts, converted from existing NIU tweets.
    for (auto& r : data.activities) {
        if (r.kind == ActivityKind::Tweet && data.intended[r.user_id] == Group::NIU && rng.chance(0.03)) {
            const TweetRef& target = niu_pool.draw(rng);
            if (target.id != r.activity_id) {
                r.kind = ActivityKind::Quote;
                r.referenced_activity_id = target.id;
                r.referenced_user_id = target.author;
            }
        }
    }

    // Non-actionable flags and one flag for a post outside the collection.
    for (std::size_t i = 0; i < 2 && i < niu_tweets.size(); ++i) {
        data.flagged.emplace_back(niu_tweets[rng.index(niu_tweets.size())].id, FlagReason::Other);
    }
    data.flagged.emplace_back("a_missing_post", FlagReason::Hate);
    std::sort(data.flagged.begin(), data.flagged.end());
    data.flagged.erase(std::unique(data.flagged.begin(), data.flagged.end(),
                                   [](const auto& a, const auto& b) { return a.first == b.first; }),
                       data.flagged.end());

    std::sort(data.activities.begin(), data.activities.end(), [](const ActivityRecord& a, const ActivityRecord& b) {
        return a.created_at != b.created_at ? a.created_at < b.created_at : a.activity_id < b.activity_id;
    });

    // Topic prevalences
    data.topics.column_names.clear();
    for (std::size_t t = 0; t < cfg.topics; ++t) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "topic_%02zu", t);
        data.topics.column_names.emplace_back(buf);
    }
    for (const Plan& p : plans) {
        std::vector<double> w(cfg.topics);
        double total = 0;
        for (std::size_t t = 0; t < cfg.topics; ++t) {
            w[t] = rng.gamma(0.5) + 1e-6;
            if (t < cfg.signal_topics) w[t] *= std::exp(p.k * cfg.topic_signal);
            total += w[t];
        }
        for (double& v : w) v /= total;
        data.topics.rows.emplace(p.id, std::move(w));
    }
    return data;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << content) || !out.flush()) {
        throw IoError("cannot write " + path.string());
    }
}

}  // namespace

void write_synthetic(const SynthData& data, const std::filesystem::path& directory) {
    std::error_code ec;
    std::filesystem::create_directories(directory, ec);
    if (ec) {
        throw IoError("cannot create " + directory.string() + ": " + ec.message());
    }
    std::string acts;
    for (const auto& r : data.activities) acts += to_json_line(r) + '\n';
    write_text(directory / "activities.jsonl", acts);

    std::string profs;
    for (const auto& p : data.profiles) profs += to_json_line(p) + '\n';
    write_text(directory / "profiles.jsonl", profs);

    std::string lex = "# synthetic placeholder lexicon: canonical form first, then variants\n";
    for (const auto& t : data.lexicon) {
        for (std::size_t i = 0; i < t.variants.size(); ++i) lex += (i ? "," : "") + t.variants[i];
        lex += '\n';
    }
    write_text(directory / "lexicon.txt", lex);

    std::string flags = "activity_id,reason\n";
    for (const auto& [id, reason] : data.flagged) flags += id + ',' + std::string(to_string(reason)) + '\n';
    write_text(directory / "flagged.csv", flags);

    std::ofstream topics(directory / "topics.csv", std::ios::binary);
    if (!topics) throw IoError("cannot write " + (directory / "topics.csv").string());
    data.topics.write(topics);

    const SynthConfig& c = data.config;
    nlohmann::ordered_json params;
    params["seed"] = c.seed;
    params["users"] = c.users;
    params["iu_fraction"] = c.iu_fraction;
    params["bu_fraction"] = c.bu_fraction;
    params["excluded_fraction"] = c.excluded_fraction;
    params["bu_shift_scale"] = c.bu_shift_scale;
    params["topic_signal"] = c.topic_signal;
    params["topics"] = c.topics;
    params["signal_topics"] = c.signal_topics;
    params["collection_end"] = format_iso8601(c.collection_end);
    params["window_days"] = c.window_days;
    params["effect_targets_niu_iu"] = c.effects;
    std::map<std::string, std::size_t> sizes;
    for (const auto& [user, g] : data.intended) ++sizes[std::string(to_string(g))];
    params["intended_group_sizes"] = sizes;
    params["activities"] = data.activities.size();
    params["flagged_posts"] = data.flagged.size();
    write_text(directory / "synth_params.json", params.dump(2) + '\n');
}

}  // namespace iuprobe
