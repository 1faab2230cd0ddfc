#include "iuprobe/common.hpp"
#include "iuprobe/text.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace iuprobe;

TEST_CASE("ISO-8601 parsing and formatting") {
    CHECK(parse_iso8601("2021-07-29") == 1627516800);
    CHECK(parse_iso8601("2021-07-29T00:00:00Z") == 1627516800);
    CHECK(parse_iso8601("2021-07-29T03:00:00+03:00") == 1627516800);
    CHECK(parse_iso8601("2021-07-28T21:30:00.250-02:30") == 1627516800);
    CHECK(format_iso8601(1627516800) == "2021-07-29T00:00:00Z");
    CHECK(format_iso8601(-1) == "1969-12-31T23:59:59Z");
    CHECK(utc_day(1627516800 + 86399) == 18837);
    CHECK(utc_day(-1) == -1);
    for (const char* bad : {"2021-13-01", "2021-02-30", "21-07-29", "2021-07-29T25:00:00Z", "2021-07-29 junk", ""}) {
        CHECK_THROWS_AS(parse_iso8601(bad), ValidationError);
    }
}

TEST_CASE("digests, seeds and number formatting") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(to_hex(0xaf63dc4c8601ec8cULL) == "af63dc4c8601ec8c");
    CHECK(mix_seed(1, 0) != mix_seed(1, 1));
    CHECK(mix_seed(1, 0) == mix_seed(1, 0));
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(2.0) == "2");
    CHECK(format_double(std::nan("")) == "nan");
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
    CHECK(format_fixed(2.0 / 3.0, 3) == "0.667");
}

TEST_CASE("string helpers") {
    CHECK(trim("  a b \t\n") == "a b");
    CHECK(split("a,,b", ',') == std::vector<std::string>{"a", "", "b"});
    CHECK(to_lower_ascii("AbC-Ä") == "abc-Ä");
}

TEST_CASE("normalisation, folding and counting") {
    // composed and decomposed forms fold to the same text
    CHECK(text::normalize_fold("K\xC3\xA4ssit") == text::normalize_fold("Ka\xCC\x88ssit"));
    CHECK(text::to_utf8(text::normalize_fold("\xC3\x9E" "RELM")) == "\xC3\xBE" "relm");
    CHECK(text::scalar_count("h\xC3\xA9llo") == 5);
    CHECK(text::normalize_fold("\xFF") == std::u32string{U'�'});
    CHECK(text::is_word_char(U'_'));
    CHECK(text::is_word_char(U'ሀ'));
    CHECK_FALSE(text::is_word_char(U'-'));
    const auto tokens = text::whitespace_tokens(text::normalize_fold("  One two\tTWO\n"));
    CHECK(tokens.size() == 3);
    CHECK(tokens[1] == tokens[2]);
}

TEST_CASE("surface counts") {
    const auto c = text::extract_surface_counts("hi @a @ #tag # http://x.y https://z nothttp://");
    CHECK(c.mentions == 1);
    CHECK(c.hashtags == 1);
    CHECK(c.urls == 2);
}

TEST_CASE("diagnostics merge") {
    Diagnostics a, b;
    a.warn("x");
    b.warn("y");
    a.merge(b);
    CHECK(a.count() == 2);
    CHECK(a.messages()[1] == "y");
}
