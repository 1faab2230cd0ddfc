#include "iuprobe/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace iuprobe {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& what) {
    throw ValidationError("config: " + key + ": " + what);
}

void check_keys(const ojson& obj, const std::string& where, std::initializer_list<std::string_view> allowed) {
    if (!obj.is_object()) bad(where.empty() ? "<root>" : where, "expected an object");
    for (const auto& [key, value] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            bad(where.empty() ? key : where + "." + key, "unknown key");
        }
    }
}

template <class T>
T get_number(const ojson& obj, const std::string& key, const std::string& where, T fallback) {
    if (!obj.contains(key)) return fallback;
    const ojson& v = obj.at(key);
    if (!v.is_number()) bad(where + key, "expected a number");
    if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) bad(where + key, "expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
            if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
                bad(where + key, "must not be negative");
            }
        }
    }
    return v.get<T>();
}

bool get_bool(const ojson& obj, const std::string& key, const std::string& where, bool fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_boolean()) bad(where + key, "expected true or false");
    return obj.at(key).get<bool>();
}

std::optional<fs::path> get_path(const ojson& obj, const std::string& key, const fs::path& base) {
    if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
    if (!obj.at(key).is_string()) bad("paths." + key, "expected a string");
    fs::path p = obj.at(key).get<std::string>();
    if (p.empty()) return std::nullopt;
    return p.is_absolute() || base.empty() ? p : base / p;
}

LearnerParams parse_point(const std::string& learner, const ojson& p, const std::string& where) {
    if (learner == "gbdt") {
        check_keys(p, where, {"trees", "max_depth", "learning_rate", "l2", "min_child_weight", "positive_weight"});
        GbdtParams g;
        g.trees = get_number(p, "trees", where + ".", g.trees);
        g.max_depth = get_number(p, "max_depth", where + ".", g.max_depth);
        g.learning_rate = get_number(p, "learning_rate", where + ".", g.learning_rate);
        g.l2 = get_number(p, "l2", where + ".", g.l2);
        g.min_child_weight = get_number(p, "min_child_weight", where + ".", g.min_child_weight);
        g.positive_weight = get_number(p, "positive_weight", where + ".", g.positive_weight);
        if (g.trees < 1 || g.max_depth < 1 || !(g.learning_rate > 0) || g.l2 < 0 || g.min_child_weight < 0 ||
            g.positive_weight <= 0) {
            bad(where, "GBDT parameters out of range");
        }
        return g;
    }
    if (learner == "random_forest") {
        check_keys(p, where, {"trees", "max_depth", "features_per_split", "min_samples_leaf", "bootstrap"});
        ForestParams f;
        f.trees = get_number(p, "trees", where + ".", f.trees);
        f.max_depth = get_number(p, "max_depth", where + ".", f.max_depth);
        f.features_per_split = get_number(p, "features_per_split", where + ".", f.features_per_split);
        f.min_samples_leaf = get_number(p, "min_samples_leaf", where + ".", f.min_samples_leaf);
        f.bootstrap = get_bool(p, "bootstrap", where + ".", f.bootstrap);
        if (f.trees < 1 || f.max_depth < 0 || f.features_per_split < 0 || f.min_samples_leaf < 1) {
            bad(where, "random forest parameters out of range");
        }
        return f;
    }
    if (learner == "logistic") {
        check_keys(p, where, {"l2", "max_iter", "tol"});
        LogisticParams l;
        l.l2 = get_number(p, "l2", where + ".", l.l2);
        l.max_iter = get_number(p, "max_iter", where + ".", l.max_iter);
        l.tol = get_number(p, "tol", where + ".", l.tol);
        if (l.l2 < 0 || l.max_iter < 1 || l.tol <= 0) bad(where, "logistic parameters out of range");
        return l;
    }
    if (learner == "majority") {
        check_keys(p, where, {});
        return MajorityParams{};
    }
    bad(where, "unknown learner '" + learner + "' (gbdt, random_forest, logistic, majority)");
}

ojson point_to_json(const LearnerParams& params) {
    return std::visit(
        [](const auto& p) -> ojson {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, GbdtParams>) {
                return {{"trees", p.trees},
                        {"max_depth", p.max_depth},
                        {"learning_rate", p.learning_rate},
                        {"l2", p.l2},
                        {"min_child_weight", p.min_child_weight},
                        {"positive_weight", p.positive_weight}};
            } else if constexpr (std::is_same_v<T, ForestParams>) {
                return {{"trees", p.trees},
                        {"max_depth", p.max_depth},
                        {"features_per_split", p.features_per_split},
                        {"min_samples_leaf", p.min_samples_leaf},
                        {"bootstrap", p.bootstrap}};
            } else if constexpr (std::is_same_v<T, LogisticParams>) {
                return {{"l2", p.l2}, {"max_iter", p.max_iter}, {"tol", p.tol}};
            } else {
                return ojson::object();
            }
        },
        params);
}

void apply_override(ojson& root, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ValidationError("override '" + assignment + "' must look like key.path=value");
    }
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    ojson value = ojson::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    ojson* node = &root;
    for (const auto& part : split(key, '.')) {
        if (part.empty()) throw ValidationError("override '" + assignment + "' has an empty key segment");
        if (!node->is_object() && !node->is_null()) throw ValidationError("override '" + assignment + "' descends into a non-object");
        node = &(*node)[part];
    }
    *node = std::move(value);
}

}  // namespace

PipelineConfig parse_config(std::string_view json_text, const std::vector<std::string>& overrides,
                            const fs::path& base_dir) {
    ojson root = ojson::parse(json_text, nullptr, false, true);
    if (root.is_discarded()) {
        throw ValidationError("config: not valid JSON");
    }
    if (root.is_null()) root = ojson::object();
    for (const auto& o : overrides) apply_override(root, o);
    check_keys(root, "", {"paths", "collection_end", "hit_threshold", "min_activities", "include_quotes", "diffusion",
                          "centrality", "master_seed", "experiment", "report", "explain", "synth"});

    PipelineConfig c;
    if (root.contains("paths")) {
        const ojson& p = root.at("paths");
        check_keys(p, "paths", {"activities", "profiles", "lexicon", "flagged", "topics", "output_dir"});
        c.paths.activities = get_path(p, "activities", base_dir);
        c.paths.profiles = get_path(p, "profiles", base_dir);
        c.paths.lexicon = get_path(p, "lexicon", base_dir);
        c.paths.flagged = get_path(p, "flagged", base_dir);
        c.paths.topics = get_path(p, "topics", base_dir);
        if (auto out = get_path(p, "output_dir", base_dir)) c.paths.output_dir = *out;
    } else if (!base_dir.empty()) {
        c.paths.output_dir = base_dir / c.paths.output_dir;
    }
    if (root.contains("collection_end")) {
        if (!root.at("collection_end").is_string()) bad("collection_end", "expected an ISO-8601 date");
        c.collection_end = parse_iso8601(root.at("collection_end").get<std::string>());
    }
    if (root.contains("hit_threshold")) {
        if (root.at("hit_threshold").is_null()) {
            c.hit_threshold.reset();
        } else {
            const auto t = get_number<std::int64_t>(root, "hit_threshold", "", 3);
            if (t < 1) bad("hit_threshold", "must be positive (or null to disable)");
            c.hit_threshold = static_cast<std::size_t>(t);
        }
    }
    {
        const auto m = get_number<std::int64_t>(root, "min_activities", "", 10);
        if (m < 1) bad("min_activities", "must be positive");
        c.min_activities = static_cast<std::size_t>(m);
    }
    c.include_quotes = get_bool(root, "include_quotes", "", true);
    if (root.contains("diffusion")) {
        const ojson& d = root.at("diffusion");
        check_keys(d, "diffusion", {"max_iter", "tol"});
        const auto it = get_number<std::int64_t>(d, "max_iter", "diffusion.", 100);
        c.diffusion.tolerance = get_number(d, "tol", "diffusion.", c.diffusion.tolerance);
        if (it < 1 || !(c.diffusion.tolerance > 0)) bad("diffusion", "max_iter and tol must be positive");
        c.diffusion.max_iterations = static_cast<std::size_t>(it);
    }
    if (root.contains("centrality")) {
        const ojson& d = root.at("centrality");
        check_keys(d, "centrality", {"max_iter", "tol", "teleport"});
        const auto it = get_number<std::int64_t>(d, "max_iter", "centrality.", 1000);
        c.centrality.tolerance = get_number(d, "tol", "centrality.", c.centrality.tolerance);
        c.centrality.teleport = get_number(d, "teleport", "centrality.", c.centrality.teleport);
        if (it < 1 || !(c.centrality.tolerance > 0) || !(c.centrality.teleport > 0)) {
            bad("centrality", "max_iter, tol and teleport must be positive");
        }
        c.centrality.max_iterations = static_cast<std::size_t>(it);
    }
    if (root.contains("master_seed") && !root.at("master_seed").is_null()) {
        const ojson& s = root.at("master_seed");
        if (!s.is_number_unsigned()) bad("master_seed", "expected a non-negative integer");
        c.master_seed = s.get<std::uint64_t>();
    }
    if (root.contains("experiment")) {
        const ojson& e = root.at("experiment");
        check_keys(e, "experiment", {"splits", "test_fraction", "folds", "learners"});
        c.experiment.splits = get_number(e, "splits", "experiment.", c.experiment.splits);
        c.experiment.test_fraction = get_number(e, "test_fraction", "experiment.", c.experiment.test_fraction);
        c.experiment.folds = get_number(e, "folds", "experiment.", c.experiment.folds);
        if (c.experiment.splits < 1) bad("experiment.splits", "must be positive");
        if (!(c.experiment.test_fraction > 0 && c.experiment.test_fraction < 1)) {
            bad("experiment.test_fraction", "must lie in (0, 1)");
        }
        if (c.experiment.folds < 2) bad("experiment.folds", "must be at least 2");
        if (e.contains("learners")) {
            const ojson& ls = e.at("learners");
            if (!ls.is_object() || ls.empty()) bad("experiment.learners", "expected a non-empty object");
            c.experiment.learners.clear();
            for (const auto& [name, points] : ls.items()) {
                const std::string where = "experiment.learners." + name;
                if (!points.is_array() || points.empty()) bad(where, "expected a non-empty list of grid points");
                LearnerGrid grid{name, {}};
                for (std::size_t i = 0; i < points.size(); ++i) {
                    grid.points.push_back(parse_point(name, points[i], where + "[" + std::to_string(i) + "]"));
                }
                c.experiment.learners.push_back(std::move(grid));
            }
        }
    }
    if (root.contains("report")) {
        const ojson& r = root.at("report");
        check_keys(r, "report", {"include_extra"});
        c.report.include_extra = get_bool(r, "include_extra", "report.", c.report.include_extra);
    }
    if (root.contains("explain")) {
        const ojson& x = root.at("explain");
        check_keys(x, "explain", {"learner", "max_features"});
        if (x.contains("learner")) {
            if (!x.at("learner").is_string()) bad("explain.learner", "expected a string");
            c.explain.learner = x.at("learner").get<std::string>();
        }
        const auto mf = get_number<std::int64_t>(x, "max_features", "explain.", 20);
        if (mf < 1) bad("explain.max_features", "must be positive");
        c.explain.max_features = static_cast<std::size_t>(mf);
    }
    if (root.contains("synth")) {
        const ojson& s = root.at("synth");
        check_keys(s, "synth", {"users", "iu_fraction", "bu_fraction", "excluded_fraction", "bu_shift_scale",
                                "topic_signal", "topics", "signal_topics", "window_days", "effects", "null_model"});
        if (get_bool(s, "null_model", "synth.", false)) c.synth = SynthConfig::null_model(0);
        auto& y = c.synth;
        y.users = get_number(s, "users", "synth.", y.users);
        y.iu_fraction = get_number(s, "iu_fraction", "synth.", y.iu_fraction);
        y.bu_fraction = get_number(s, "bu_fraction", "synth.", y.bu_fraction);
        y.excluded_fraction = get_number(s, "excluded_fraction", "synth.", y.excluded_fraction);
        y.bu_shift_scale = get_number(s, "bu_shift_scale", "synth.", y.bu_shift_scale);
        y.topic_signal = get_number(s, "topic_signal", "synth.", y.topic_signal);
        y.topics = get_number(s, "topics", "synth.", y.topics);
        y.signal_topics = get_number(s, "signal_topics", "synth.", y.signal_topics);
        y.window_days = get_number(s, "window_days", "synth.", y.window_days);
        if (s.contains("effects")) {
            const ojson& ef = s.at("effects");
            if (!ef.is_object()) bad("synth.effects", "expected an object of feature -> target delta");
            const auto known = default_effect_targets();
            for (const auto& [name, v] : ef.items()) {
                if (!known.count(name)) bad("synth.effects." + name, "unknown feature");
                if (!v.is_number() || !(v.get<double>() > -1 && v.get<double>() < 1)) {
                    bad("synth.effects." + name, "target delta must lie in (-1, 1)");
                }
                y.effects[name] = v.get<double>();
            }
        }
    }
    c.synth.collection_end = c.collection_end;
    return c;
}

PipelineConfig load_config(const fs::path& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("config: cannot read " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), overrides, path.parent_path());
}

std::string PipelineConfig::to_json() const {
    ojson j;
    const auto opt = [](const std::optional<fs::path>& p) -> ojson { return p ? ojson(p->generic_string()) : ojson(); };
    j["paths"] = {{"activities", opt(paths.activities)}, {"profiles", opt(paths.profiles)},
                  {"lexicon", opt(paths.lexicon)},       {"flagged", opt(paths.flagged)},
                  {"topics", opt(paths.topics)},         {"output_dir", paths.output_dir.generic_string()}};
    j["collection_end"] = format_iso8601(collection_end);
    j["hit_threshold"] = hit_threshold ? ojson(*hit_threshold) : ojson();
    j["min_activities"] = min_activities;
    j["include_quotes"] = include_quotes;
    j["diffusion"] = {{"max_iter", diffusion.max_iterations}, {"tol", diffusion.tolerance}};
    j["centrality"] = {{"max_iter", centrality.max_iterations},
                       {"tol", centrality.tolerance},
                       {"teleport", centrality.teleport}};
    j["master_seed"] = master_seed ? ojson(*master_seed) : ojson();
    ojson learners = ojson::object();
    for (const auto& g : experiment.learners) {
        ojson pts = ojson::array();
        for (const auto& p : g.points) pts.push_back(point_to_json(p));
        learners[g.name] = pts;
    }
    j["experiment"] = {{"splits", experiment.splits},
                       {"test_fraction", experiment.test_fraction},
                       {"folds", experiment.folds},
                       {"learners", learners}};
    j["report"] = {{"include_extra", report.include_extra}};
    j["explain"] = {{"learner", explain.learner}, {"max_features", explain.max_features}};
    j["synth"] = {{"users", synth.users},
                  {"iu_fraction", synth.iu_fraction},
                  {"bu_fraction", synth.bu_fraction},
                  {"excluded_fraction", synth.excluded_fraction},
                  {"bu_shift_scale", synth.bu_shift_scale},
                  {"topic_signal", synth.topic_signal},
                  {"topics", synth.topics},
                  {"signal_topics", synth.signal_topics},
                  {"window_days", synth.window_days},
                  {"effects", synth.effects}};
    return j.dump(2);
}

// ---------------------------------------------------------------------------
// Stage helpers
// ---------------------------------------------------------------------------

std::string file_digest(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return to_hex(fnv1a64(ss.str()));
}

namespace {

std::uint64_t require_seed(const PipelineConfig& c, std::string_view stage) {
    if (!c.master_seed) {
        throw ValidationError(std::string(stage) + ": master_seed must be set in the config");
    }
    return *c.master_seed;
}

const fs::path& require_path(const std::optional<fs::path>& p, std::string_view key) {
    if (!p) {
        throw ValidationError("config: paths." + std::string(key) + " is required for this command");
    }
    if (!fs::exists(*p)) {
        throw ValidationError("config: paths." + std::string(key) + " does not exist: " + p->string());
    }
    return *p;
}

fs::path require_stage_file(const PipelineConfig& c, std::string_view name, std::string_view producer) {
    fs::path p = c.paths.output_dir / name;
    if (!fs::exists(p)) {
        throw ValidationError(std::string(name) + " not found in " + c.paths.output_dir.string() + "; run '" +
                              std::string(producer) + "' first");
    }
    return p;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

class Writer {
public:
    Writer(const PipelineConfig& config, StageOutput& out) : config_(config), out_(out) {}

    void write(const std::string& name, const std::string& content) {
        const fs::path path = config_.paths.output_dir / name;
        ensure_dir(path.parent_path());
        std::ofstream f(path, std::ios::binary);
        if (!f || !(f << content) || !f.flush()) {
            throw IoError("cannot write " + path.string());
        }
        out_.files[name] = to_hex(fnv1a64(content));
    }
    void record(const std::string& name) { out_.files[name] = file_digest(config_.paths.output_dir / name); }

private:
    const PipelineConfig& config_;
    StageOutput& out_;
};

void write_manifest(const PipelineConfig& config, StageOutput& out, const std::vector<fs::path>& inputs) {
    ojson m;
    m["stage"] = out.stage;
    m["config"] = ojson::parse(config.to_json());
    ojson in = ojson::object();
    for (const auto& p : inputs) in[p.filename().string()] = file_digest(p);
    m["inputs"] = in;
    m["outputs"] = out.files;
    m["warnings"] = out.diagnostics.messages();
    Writer(config, out).write("manifest_" + out.stage + ".json", m.dump(2) + '\n');
    out.files.erase("manifest_" + out.stage + ".json");
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct LoadedInputs {
    ActivityStore store;
    std::vector<fs::path> files;
};

LoadedInputs load_inputs(const PipelineConfig& c, Diagnostics& diag) {
    LoadedInputs li;
    const fs::path& acts = require_path(c.paths.activities, "activities");
    li.files.push_back(acts);
    std::optional<fs::path> profiles;
    if (c.paths.profiles) {
        profiles = require_path(c.paths.profiles, "profiles");
        li.files.push_back(*profiles);
    }
    ParseOptions po;
    po.collection_end = c.collection_end;
    ParseReport report;
    li.store = load_store(acts, profiles, po, &report);
    diag.merge(report.diagnostics);
    if (report.rejected > 0) {
        diag.warn(std::to_string(report.rejected) + " input lines rejected");
    }
    return li;
}

void check_user_id(const std::string& id) {
    if (id.find_first_of(",\"\n\r") != std::string::npos) {
        throw ValidationError("user id '" + id + "' contains a character not allowed in CSV outputs");
    }
}

GroupPartition read_labels(const fs::path& path) {
    std::istringstream in(read_file(path));
    std::string line;
    GroupPartition p;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 || line.empty()) continue;
        const auto cols = split(line, ',');
        if (cols.size() < 2) throw ValidationError(path.string() + ": malformed line " + std::to_string(line_no));
        const auto g = parse_group(cols[1]);
        if (!g) throw ValidationError(path.string() + ": unknown group '" + cols[1] + "'");
        p.members(*g).insert(cols[0]);
    }
    return p;
}

FeatureMatrix read_matrix(const fs::path& path) {
    std::istringstream in(read_file(path));
    return FeatureMatrix::read_csv(in);
}

std::string split_model_name(const std::string& learner, int split) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "models/%s_split_%02d.model", learner.c_str(), split);
    return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

StageOutput cmd_synth(const PipelineConfig& config) {
    StageOutput out{"synth", {}, {}};
    SynthConfig sc = config.synth;
    sc.seed = require_seed(config, "synth");
    sc.collection_end = config.collection_end;
    const SynthData data = generate_synthetic(sc);
    write_synthetic(data, config.paths.output_dir);
    Writer w(config, out);
    for (const char* f : {"activities.jsonl", "profiles.jsonl", "lexicon.txt", "flagged.csv", "topics.csv",
                          "synth_params.json"}) {
        w.record(f);
    }
    // Ready-to-run config for the generated data, resolved relative to the output directory.
    PipelineConfig next = config;
    next.paths.activities = "activities.jsonl";
    next.paths.profiles = "profiles.jsonl";
    next.paths.lexicon = "lexicon.txt";
    next.paths.flagged = "flagged.csv";
    next.paths.topics = "topics.csv";
    next.paths.output_dir = ".";
    w.write("pipeline.json", next.to_json() + '\n');
    write_manifest(config, out, {});
    return out;
}

StageOutput cmd_label(const PipelineConfig& config, LabelSummary* summary) {
    StageOutput out{"label", {}, {}};
    if (config.hit_threshold && !config.paths.lexicon) {
        throw ValidationError("config: hit_threshold is set but paths.lexicon is missing");
    }
    LoadedInputs in = load_inputs(config, out.diagnostics);
    Lexicon lexicon;
    if (config.hit_threshold) {
        const fs::path& lp = require_path(config.paths.lexicon, "lexicon");
        lexicon = Lexicon::load(lp);
        in.files.push_back(lp);
    }
    FlaggedPostSet flagged;
    if (config.paths.flagged) {
        const fs::path& fp = require_path(config.paths.flagged, "flagged");
        flagged = FlaggedPostSet::load(fp, &out.diagnostics);
        in.files.push_back(fp);
    }
    LabelOptions lo;
    lo.hit_threshold = config.hit_threshold;
    lo.include_quotes = config.include_quotes;
    const LabelResult labels = assign_labels(in.store, flagged, lexicon, lo);
    out.diagnostics.merge(labels.diagnostics);

    const RetweetGraph graph = RetweetGraph::build(in.store);
    std::set<std::string> iu, seeds;
    for (const auto& [user, label] : labels.labels) {
        iu.insert(user);
        if (graph.index_of(user)) seeds.insert(user);
    }
    const BeliefVector beliefs = degroot_diffuse(graph, seeds, config.diffusion);
    if (!beliefs.converged) {
        out.diagnostics.warn("belief diffusion stopped at max_iter before reaching tol");
    }
    const GroupPartition partition = partition_groups(in.store, beliefs, iu, config.min_activities);

    std::string csv = "user_id,group,subtype,lexicon_hits,belief\n";
    for (const auto& user : in.store.users()) {
        check_user_id(user);
        const Group g = partition.group_of(user);
        const auto it = labels.labels.find(user);
        const Subtype st = it == labels.labels.end() ? Subtype::None : it->second.subtype;
        const auto hits = labels.lexicon_hits.count(user) ? labels.lexicon_hits.at(user) : 0;
        csv += user + ',' + std::string(to_string(g)) + ',' + std::string(to_string(st)) + ',' +
               std::to_string(hits) + ',' + format_double(g == Group::IU ? 1.0 : beliefs.at(user)) + '\n';
    }
    std::string sizes = "group,count\n";
    LabelSummary s;
    s.users = partition.total();
    for (Group g : {Group::IU, Group::BU, Group::NIU, Group::Excluded}) {
        s.sizes[g] = partition.members(g).size();
        sizes += std::string(to_string(g)) + ',' + std::to_string(s.sizes[g]) + '\n';
    }
    sizes += "total," + std::to_string(s.users) + '\n';

    Writer w(config, out);
    w.write("labels.csv", csv);
    w.write("group_sizes.csv", sizes);
    std::ostringstream edges;
    graph.write_edge_list(edges);
    w.write("retweet_edges.csv", edges.str());
    write_manifest(config, out, in.files);
    if (summary) *summary = s;
    return out;
}

StageOutput cmd_stats(const PipelineConfig& config, StatReport* report_out) {
    StageOutput out{"stats", {}, {}};
    const fs::path labels_path = require_stage_file(config, "labels.csv", "label");
    LoadedInputs in = load_inputs(config, out.diagnostics);
    in.files.push_back(labels_path);
    const GroupPartition partition = read_labels(labels_path);

    const RetweetGraph graph = RetweetGraph::build(in.store);
    std::map<std::string, double> centrality;
    if (graph.node_count() > 0) {
        const CentralityResult cr = eigencentrality(graph, config.centrality);
        if (!cr.converged) out.diagnostics.warn("eigencentrality did not converge");
        centrality = cr.scores;
    }
    FeatureOptions fo;
    fo.collection_end = config.collection_end;
    std::map<std::string, FeatureVector> vectors;
    const std::set<Group> selected = {Group::IU, Group::BU, Group::NIU};
    for (Group g : selected) {
        for (const auto& user : partition.members(g)) {
            if (in.store.activity_count_of(user) == 0) {
                out.diagnostics.warn("user " + user + " has no activities and is left out of the matrix");
                continue;
            }
            vectors.emplace(user, compute_features(in.store, centrality, user, fo));
        }
    }
    GroupPartition kept;
    for (Group g : selected) {
        for (const auto& user : partition.members(g)) {
            if (vectors.count(user)) kept.members(g).insert(user);
        }
    }
    TopicTable topics;
    if (config.paths.topics) {
        const fs::path& tp = require_path(config.paths.topics, "topics");
        topics = TopicTable::load(tp);
        in.files.push_back(tp);
    }
    const FeatureMatrix matrix = assemble_matrix(vectors, topics, kept, selected, &out.diagnostics);
    const StatReport report = build_report(matrix, config.report);
    for (const auto& s : report.skipped) out.diagnostics.warn("statistics skipped " + s);

    Writer w(config, out);
    std::ostringstream m, csv, txt, html;
    matrix.write_csv(m);
    report.write_csv(csv);
    report.render_text(txt, false);
    report.render_html(html);
    w.write("matrix.csv", m.str());
    w.write("stat_report.csv", csv.str());
    w.write("stat_report.txt", txt.str());
    w.write("stat_report.html", html.str());
    write_manifest(config, out, in.files);
    if (report_out) *report_out = report;
    return out;
}

StageOutput cmd_train(const PipelineConfig& config, ExperimentResult* result_out) {
    StageOutput out{"train", {}, {}};
    const fs::path matrix_path = require_stage_file(config, "matrix.csv", "stats");
    ExperimentConfig ec = config.experiment;
    ec.master_seed = require_seed(config, "train");
    const Dataset data = Dataset::from_matrix(read_matrix(matrix_path));
    ExperimentResult result = run_experiment(data, ec);
    out.diagnostics.merge(result.diagnostics);

    Writer w(config, out);
    std::ostringstream summary, splits, preds;
    write_summary_csv(summary, result);
    write_splits_csv(splits, result);
    write_predictions_csv(preds, result, data);
    w.write("experiment_summary.csv", summary.str());
    w.write("experiment_splits.csv", splits.str());
    w.write("predictions.csv", preds.str());
    for (const auto& m : result.models) {
        if (const auto* ens = std::get_if<TreeEnsemble>(&m.model)) {
            w.write(split_model_name(m.learner, m.split), ens->serialize());
        }
    }
    if (const SplitModel* best = result.best_model(config.explain.learner)) {
        w.write("best.model", std::get<TreeEnsemble>(best->model).serialize());
    } else {
        out.diagnostics.warn("no tree-ensemble model for learner '" + config.explain.learner +
                             "'; best.model not written");
    }
    write_manifest(config, out, {matrix_path});
    if (result_out) *result_out = std::move(result);
    return out;
}

StageOutput cmd_explain(const PipelineConfig& config, std::vector<FeatureRank>* ranking_out) {
    StageOutput out{"explain", {}, {}};
    const fs::path matrix_path = require_stage_file(config, "matrix.csv", "stats");
    const fs::path preds_path = require_stage_file(config, "predictions.csv", "train");
    const FeatureMatrix matrix = read_matrix(matrix_path);
    std::map<std::string, std::size_t> row_of;
    for (std::size_t i = 0; i < matrix.rows(); ++i) row_of[matrix.users()[i]] = i;

    // split -> test users, in predictions order
    std::map<int, std::vector<std::string>> test_users;
    {
        std::istringstream in(read_file(preds_path));
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto cols = split(line, ',');
            if (cols.size() != 6) throw ValidationError("predictions.csv: malformed line");
            if (cols[1] == config.explain.learner) test_users[std::stoi(cols[0])].push_back(cols[2]);
        }
    }
    if (test_users.empty()) {
        throw ValidationError("predictions.csv has no rows for learner '" + config.explain.learner + "'");
    }

    std::vector<fs::path> inputs = {matrix_path, preds_path};
    std::vector<ExplainedSplit> splits;
    std::string values_csv = "split,user_id,base_value";
    for (const auto& f : matrix.feature_names()) values_csv += ',' + f;
    values_csv += '\n';
    double worst = 0;
    for (const auto& [split_index, users] : test_users) {
        const fs::path model_path = config.paths.output_dir / split_model_name(config.explain.learner, split_index);
        if (!fs::exists(model_path)) {
            throw ValidationError("model file missing: " + model_path.string() +
                                  " (explain needs a tree-ensemble learner)");
        }
        inputs.push_back(model_path);
        const TreeEnsemble model = TreeEnsemble::deserialize(read_file(model_path));
        if (model.feature_names != matrix.feature_names()) {
            throw ValidationError(model_path.string() + ": feature names do not match matrix.csv");
        }
        ExplainedSplit es;
        for (const auto& user : users) {
            const auto it = row_of.find(user);
            if (it == row_of.end()) throw ValidationError("predictions.csv user " + user + " not in matrix.csv");
            const auto x = matrix.row(it->second);
            ShapRow row = tree_shap(model, x, user);
            worst = std::max(worst, std::abs(row.output() - model.raw_output(x)));
            values_csv += std::to_string(split_index) + ',' + user + ',' + format_double(row.base_value);
            for (double c : row.contributions) values_csv += ',' + format_double(c);
            values_csv += '\n';
            es.values.emplace_back(x.begin(), x.end());
            es.rows.push_back(std::move(row));
        }
        splits.push_back(std::move(es));
    }
    if (worst > 1e-8) {
        out.diagnostics.warn("SHAP local accuracy deviation " + format_double(worst) + " exceeds 1e-8");
    }

    const auto ranking = rank_features(splits, matrix.feature_names());
    BeeswarmOptions bo;
    bo.max_features = config.explain.max_features;
    if (config.explain.learner == "random_forest") bo.x_label = "SHAP value (impact on predicted probability)";
    Writer w(config, out);
    w.write("shap_beeswarm.svg", render_beeswarm(splits, matrix.feature_names(), ranking, bo));
    std::ostringstream rk;
    write_ranking_csv(rk, ranking);
    w.write("shap_ranking.csv", rk.str());
    w.write("shap_values.csv", values_csv);
    write_manifest(config, out, inputs);
    if (ranking_out) *ranking_out = ranking;
    return out;
}

StageOutput cmd_report(const PipelineConfig& config) {
    StageOutput out{"report", {}, {}};
    std::vector<fs::path> inputs;
    std::ostringstream md;
    md << "# iuprobe report\n\n";
    const auto section = [&](const std::string& title, const std::string& file, bool fenced) {
        const fs::path p = config.paths.output_dir / file;
        md << "## " << title << "\n\n";
        if (!fs::exists(p)) {
            md << "_" << file << " not produced yet._\n\n";
            out.diagnostics.warn(file + " missing from report");
            return;
        }
        inputs.push_back(p);
        if (fenced) md << "```\n";
        md << read_file(p);
        if (fenced) md << "```\n";
        md << '\n';
    };
    section("Group sizes", "group_sizes.csv", true);
    section("Group differences (Dunn z, adjusted p, Cliff's delta)", "stat_report.txt", true);
    section("Classifier performance (mean and std over splits)", "experiment_summary.csv", true);
    section("Feature importance (mean |SHAP|)", "shap_ranking.csv", true);
    md << "Beeswarm plot: shap_beeswarm.svg\n";
    Writer(config, out).write("report.md", md.str());
    write_manifest(config, out, inputs);
    return out;
}

std::vector<StageOutput> cmd_run(const PipelineConfig& config) {
    require_seed(config, "run");
    std::vector<StageOutput> outs;
    outs.push_back(cmd_label(config));
    outs.push_back(cmd_stats(config));
    outs.push_back(cmd_train(config));
    outs.push_back(cmd_explain(config));
    outs.push_back(cmd_report(config));
    return outs;
}

}  // namespace iuprobe
