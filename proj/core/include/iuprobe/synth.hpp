#pragma once

#include "iuprobe/features.hpp"
#include "iuprobe/ingest.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace iuprobe {

/// Desk-scale generator for the whole pipeline input: activity stream, profiles, lexicon,
/// flagged posts and topic prevalences.
///
/// Group membership is decided first and the raw data is then wired so that the labeler
/// recovers it: IUs author or retweet flagged posts (or use lexicon terms), BUs retweet clean IU
/// posts, NIUs and low-activity users only retweet NIU posts. Per-feature group differences are
/// set through target Cliff's deltas for the NIU-IU pair, where a negative target means IUs
/// score higher. BUs get `bu_shift_scale` times the IU shift.
struct SynthConfig {
    std::uint64_t seed = 0;
    std::size_t users = 4000;
    double iu_fraction = 0.045;
    double bu_fraction = 0.035;
    double excluded_fraction = 0.02;
    double bu_shift_scale = 0.5;
    /// Keyed by feature name; see default_effect_targets().
    std::map<std::string, double> effects;
    /// Log-scale boost of the first `signal_topics` topic weights for IUs.
    double topic_signal = 1.0;
    std::size_t topics = 50;
    std::size_t signal_topics = 5;
    Timestamp collection_end = 1627516800;
    int window_days = 365;

    /// Defaults with the effect targets filled in.
    static SynthConfig defaults(std::uint64_t seed);
    /// Every effect and the topic signal set to zero.
    static SynthConfig null_model(std::uint64_t seed);
};

std::map<std::string, double> default_effect_targets();

/// Location shift on a scale of standard deviation `sigma` that produces Cliff's delta `delta`
/// between two equal-variance normal samples (delta < 0 gives a positive shift).
double shift_for_delta(double delta, double sigma);

struct SynthData {
    std::vector<ActivityRecord> activities;
    std::vector<UserProfile> profiles;
    std::vector<LexiconTerm> lexicon;
    std::vector<std::pair<std::string, FlagReason>> flagged;
    TopicTable topics;
    /// Group every user was generated for.
    std::map<std::string, Group> intended;
    SynthConfig config;
};

SynthData generate_synthetic(const SynthConfig& config);

/// activities.jsonl, profiles.jsonl, lexicon.txt, flagged.csv, topics.csv, synth_params.json.
void write_synthetic(const SynthData& data, const std::filesystem::path& directory);

}  // namespace iuprobe
