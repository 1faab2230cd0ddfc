#include "iuprobe/common.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>

namespace iuprobe {

namespace {

int parse_digits(std::string_view text, std::size_t pos, std::size_t len, std::string_view whole) {
    if (pos + len > text.size()) {
        throw ValidationError("truncated timestamp: '" + std::string(whole) + "'");
    }
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, value);
    if (ec != std::errc{} || ptr != text.data() + pos + len) {
        throw ValidationError("bad timestamp digits: '" + std::string(whole) + "'");
    }
    return value;
}

void expect_char(std::string_view text, std::size_t pos, char c, std::string_view whole) {
    if (pos >= text.size() || text[pos] != c) {
        throw ValidationError("malformed timestamp: '" + std::string(whole) + "'");
    }
}

}  // namespace

Timestamp parse_iso8601(std::string_view text) {
    using namespace std::chrono;
    const std::string_view whole = text;
    const int y = parse_digits(text, 0, 4, whole);
    expect_char(text, 4, '-', whole);
    const int mo = parse_digits(text, 5, 2, whole);
    expect_char(text, 7, '-', whole);
    const int d = parse_digits(text, 8, 2, whole);
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) {
        throw ValidationError("invalid calendar date: '" + std::string(whole) + "'");
    }
    Timestamp secs = static_cast<Timestamp>(sys_days{ymd}.time_since_epoch().count()) * kSecondsPerDay;
    if (text.size() == 10) {
        return secs;
    }
    if (text[10] != 'T' && text[10] != ' ') {
        throw ValidationError("malformed timestamp: '" + std::string(whole) + "'");
    }
    const int hh = parse_digits(text, 11, 2, whole);
    expect_char(text, 13, ':', whole);
    const int mm = parse_digits(text, 14, 2, whole);
    expect_char(text, 16, ':', whole);
    const int ss = parse_digits(text, 17, 2, whole);
    if (hh > 23 || mm > 59 || ss > 60) {
        throw ValidationError("time of day out of range: '" + std::string(whole) + "'");
    }
    secs += hh * 3600 + mm * 60 + ss;
    std::size_t pos = 19;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
            ++pos;
        }
    }
    if (pos == text.size()) {
        return secs;
    }
    if (text[pos] == 'Z' && pos + 1 == text.size()) {
        return secs;
    }
    if ((text[pos] == '+' || text[pos] == '-') && pos + 6 == text.size()) {
        const int oh = parse_digits(text, pos + 1, 2, whole);
        expect_char(text, pos + 3, ':', whole);
        const int om = parse_digits(text, pos + 4, 2, whole);
        const Timestamp offset = oh * 3600 + om * 60;
        return text[pos] == '+' ? secs - offset : secs + offset;
    }
    throw ValidationError("malformed timestamp zone: '" + std::string(whole) + "'");
}

std::string format_iso8601(Timestamp ts) {
    using namespace std::chrono;
    const std::int64_t day_index = utc_day(ts);
    const Timestamp rem = ts - day_index * kSecondsPerDay;
    const year_month_day ymd{sys_days{days{day_index}}};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(rem / 3600), static_cast<int>((rem / 60) % 60), static_cast<int>(rem % 60));
    return buf;
}

std::int64_t utc_day(Timestamp ts) noexcept {
    // floor division so pre-epoch timestamps land on the right date
    std::int64_t q = ts / kSecondsPerDay;
    if (ts % kSecondsPerDay < 0) {
        --q;
    }
    return q;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) noexcept {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string to_hex(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::string format_double(double value) {
    if (std::isnan(value)) {
        return "nan";
    }
    if (std::isinf(value)) {
        return value > 0 ? "inf" : "-inf";
    }
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    (void)ec;
    return std::string(buf, ptr);
}

std::string format_fixed(double value, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, value);
    std::string out = buf;
    if (out == "-0" || out.rfind("-0.", 0) == 0) {
        // avoid "-0.000" in reports
        bool all_zero = true;
        for (char c : out.substr(1)) {
            if (c != '0' && c != '.') {
                all_zero = false;
            }
        }
        if (all_zero) {
            out.erase(0, 1);
        }
    }
    return out;
}

std::string trim(std::string_view text) {
    const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    std::size_t b = 0;
    std::size_t e = text.size();
    while (b < e && is_space(text[b])) {
        ++b;
    }
    while (e > b && is_space(text[e - 1])) {
        --e;
    }
    return std::string(text.substr(b, e - b));
}

std::vector<std::string> split(std::string_view text, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == sep) {
            out.emplace_back(text.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

std::string to_lower_ascii(std::string_view text) {
    std::string out(text);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') {
            c = static_cast<char>(c - 'A' + 'a');
        }
    }
    return out;
}

}  // namespace iuprobe
