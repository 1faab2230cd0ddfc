#include "iuprobe/ingest.hpp"

#include <doctest.h>

#include <sstream>

using namespace iuprobe;

namespace {

ActivityStore parse(const std::string& text, const ParseOptions& opt, ParseReport& rep) {
    std::istringstream in(text);
    std::vector<ActivityRecord> recs;
    std::vector<UserProfile> profs;
    parse_stream_lines(in, "mem", opt, recs, profs, rep);
    return ActivityStore(std::move(recs), std::move(profs), &rep);
}

const char* kStream =
    R"({"activity_id":"t1","user_id":"alice","kind":"tweet","text":"vuldrek and VULDREK! @bob #x http://e.org","created_at":"2021-01-02T10:00:00Z"})"
    "\n"
    R"({"activity_id":"r1","user_id":"bob","kind":"retweet","referenced_activity_id":"t1","referenced_user_id":"alice","created_at":"2021-01-03"})"
    "\n"
    R"({"activity_id":"q1","user_id":"carol","kind":"quote","referenced_activity_id":"t1","referenced_user_id":"alice","text":"hm","created_at":"2021-01-03"})"
    "\n"
    R"({"type":"profile","user_id":"alice","followers":10,"following":4,"created_at":"2015-05-05","bot_score":0.2,"extra":{"listed_count":3}})"
    "\n"
    "not json\n"
    R"({"activity_id":"t1","user_id":"dave","kind":"tweet","created_at":"2021-01-04"})"
    "\n"
    R"({"activity_id":"x1","user_id":"erin","kind":"retweet","created_at":"2021-01-04"})"
    "\n";

}  // namespace

TEST_CASE("activity stream parsing") {
    ParseReport rep;
    const auto store = parse(kStream, {}, rep);
    CHECK(rep.lines == 7);
    CHECK(rep.activities == 4);
    CHECK(rep.profiles == 1);
    CHECK(rep.rejected == 2);
    CHECK(rep.duplicates == 1);
    CHECK(store.activity_count() == 3);
    CHECK(store.users() == std::vector<std::string>{"alice", "bob", "carol"});
    const auto* t1 = store.find_activity("t1");
    REQUIRE(t1);
    CHECK(t1->user_id == "alice");
    CHECK(t1->mention_count == 1);
    CHECK(t1->hashtag_count == 1);
    CHECK(t1->url_count == 1);
    CHECK(store.profile("alice")->extra.at("listed_count") == 3.0);
    CHECK(store.profile("bob") == nullptr);
    CHECK(store.resolve_reference(*store.find_activity("r1")) == t1);
    CHECK(store.activity_count_of("alice") == 1);
    CHECK_THROWS_AS(store.activities_of("zed"), NotFoundError);
}

TEST_CASE("strict mode and collection window") {
    ParseReport rep;
    ParseOptions strict;
    strict.strict = true;
    CHECK_THROWS_AS(parse(kStream, strict, rep), ValidationError);

    ParseReport rep2;
    ParseOptions window;
    window.collection_end = parse_iso8601("2010-01-01");
    parse(kStream, window, rep2);
    CHECK(rep2.profiles == 0);
    CHECK(rep2.rejected == 3);
}

TEST_CASE("profile field validation") {
    ParseReport rep;
    parse(R"({"type":"profile","user_id":"a","followers":1,"following":1,"created_at":"2015-05-05","bot_score":1.5})", {},
          rep);
    CHECK(rep.rejected == 1);
    ParseReport rep2;
    parse(R"({"type":"profile","user_id":"a","followers":-1,"following":1,"created_at":"2015-05-05"})", {}, rep2);
    CHECK(rep2.rejected == 1);
}

TEST_CASE("JSON lines round trip") {
    ParseReport rep;
    const auto store = parse(kStream, {}, rep);
    std::string lines;
    for (const auto& r : store.activities()) lines += to_json_line(r) + "\n";
    for (const auto& p : store.profiles()) lines += to_json_line(p) + "\n";
    ParseReport rep2;
    const auto again = parse(lines, {}, rep2);
    CHECK(rep2.rejected == 0);
    CHECK(again.activity_count() == store.activity_count());
    CHECK(again.find_activity("t1")->text == store.find_activity("t1")->text);
    CHECK(again.profile("alice")->bot_score == store.profile("alice")->bot_score);
}

TEST_CASE("lexicon matching") {
    std::istringstream in("# comment\nvuldrek, vuldreks\nthrelm,\xC3\xBErelm\ngrozhak,grozhak grozhak\n");
    const auto lex = Lexicon::parse(in);
    CHECK(lex.terms().size() == 3);
    CHECK(lex.count_occurrences("VULDREK vuldreks vuldrekx xvuldrek") == 2);
    CHECK(lex.count_occurrences("\xC3\x9E" "RELM!") == 1);
    // longest variant wins, no double counting
    CHECK(lex.count_occurrences("grozhak grozhak grozhak") == 2);
    CHECK(lex.count_occurrences("") == 0);
    std::istringstream bad("a,,b\n");
    CHECK_THROWS_AS(Lexicon::parse(bad), ValidationError);
    CHECK_THROWS_AS(Lexicon::load("/nonexistent/lexicon.txt"), IoError);
}

TEST_CASE("flag parsing") {
    std::istringstream in("activity_id,reason\nt1,hate\nt2,Misinfo\n# note\nt4,other\nt1,misinfo\n");
    Diagnostics d;
    const auto f = FlaggedPostSet::parse(in, &d);
    CHECK(f.entries.size() == 3);
    CHECK(f.entries.at("t1") == FlagReason::Hate);
    CHECK(f.entries.at("t2") == FlagReason::Misinfo);
    CHECK(f.entries.at("t4") == FlagReason::Other);
    CHECK(d.count() == 1);
    std::istringstream unknown("t3,spam\n");
    CHECK_THROWS_AS(FlaggedPostSet::parse(unknown), ValidationError);
    std::istringstream columns("t3,hate,extra\n");
    CHECK_THROWS_AS(FlaggedPostSet::parse(columns), ValidationError);
}

TEST_CASE("label assignment") {
    ParseReport rep;
    const auto store = parse(kStream, {}, rep);
    std::istringstream flags("t1,hate\nmissing,misinfo\n");
    const auto flagged = FlaggedPostSet::parse(flags);
    std::istringstream lexin("vuldrek\n");
    const auto lex = Lexicon::parse(lexin);

    const auto res = assign_labels(store, flagged, lex);
    CHECK(res.labels.size() == 3);
    CHECK(res.labels.at("alice").subtype == Subtype::HU);
    CHECK(res.labels.at("bob").subtype == Subtype::HU);
    CHECK(res.labels.at("carol").subtype == Subtype::HU);
    CHECK(res.unmatched_flags == 1);
    // retweets are attributed the referenced text
    CHECK(res.lexicon_hits.at("bob") == 2);
    CHECK(res.lexicon_hits.at("carol") == 0);

    LabelOptions no_quotes;
    no_quotes.include_quotes = false;
    const auto res2 = assign_labels(store, flagged, lex, no_quotes);
    CHECK(res2.labels.count("carol") == 0);

    const FlaggedPostSet none;
    LabelOptions lexical;
    lexical.hit_threshold = 2;
    const auto res3 = assign_labels(store, none, lex, lexical);
    CHECK(res3.labels.size() == 2);
    CHECK(res3.labels.at("alice").subtype == Subtype::LexiconOnly);
    lexical.hit_threshold = std::nullopt;
    CHECK(assign_labels(store, none, lex, lexical).labels.empty());
}

TEST_CASE("enum string round trips") {
    for (Group g : {Group::IU, Group::BU, Group::NIU, Group::Excluded}) CHECK(parse_group(to_string(g)) == g);
    for (Subtype s : {Subtype::HU, Subtype::MU, Subtype::HMU, Subtype::LexiconOnly, Subtype::None})
        CHECK(parse_subtype(to_string(s)) == s);
    CHECK(parse_activity_kind("retweet") == ActivityKind::Retweet);
    CHECK_FALSE(parse_activity_kind("reply"));
}
