#include "iuprobe/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <stdexcept>

namespace iuprobe::text {

std::u32string normalize_fold(std::string_view utf8) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) {
        throw std::runtime_error(std::string("ICU NFC unavailable: ") + u_errorName(status));
    }
    icu::UnicodeString source = icu::UnicodeString::fromUTF8(icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
    icu::UnicodeString normalized = nfc->normalize(source, status);
    if (U_FAILURE(status)) {
        throw std::runtime_error(std::string("ICU normalization failed: ") + u_errorName(status));
    }
    normalized.foldCase(U_FOLD_CASE_DEFAULT);
    // folding can denormalize (e.g. U+0130), so normalize once more
    icu::UnicodeString folded = nfc->normalize(normalized, status);
    if (U_FAILURE(status)) {
        throw std::runtime_error(std::string("ICU normalization failed: ") + u_errorName(status));
    }

    std::u32string out;
    out.reserve(static_cast<std::size_t>(folded.length()));
    for (int32_t i = 0; i < folded.length();) {
        const UChar32 c = folded.char32At(i);
        out.push_back(static_cast<char32_t>(c));
        i += U16_LENGTH(c);
    }
    return out;
}

std::string to_utf8(std::u32string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char32_t c : text) {
        if (c < 0x80) {
            out.push_back(static_cast<char>(c));
        } else if (c < 0x800) {
            out.push_back(static_cast<char>(0xC0 | (c >> 6)));
            out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
        } else if (c < 0x10000) {
            out.push_back(static_cast<char>(0xE0 | (c >> 12)));
            out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
        } else {
            out.push_back(static_cast<char>(0xF0 | (c >> 18)));
            out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
        }
    }
    return out;
}

std::size_t scalar_count(std::string_view utf8) noexcept {
    std::size_t n = 0;
    for (unsigned char c : utf8) {
        if ((c & 0xC0) != 0x80) {
            ++n;
        }
    }
    return n;
}

bool is_word_char(char32_t c) noexcept {
    if (c < 0x80) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
    }
    const auto uc = static_cast<UChar32>(c);
    if (u_isalnum(uc)) {
        return true;
    }
    const int8_t type = u_charType(uc);
    return type == U_NON_SPACING_MARK || type == U_COMBINING_SPACING_MARK || type == U_ENCLOSING_MARK;
}

bool is_space(char32_t c) noexcept {
    if (c < 0x80) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    }
    return u_isUWhiteSpace(static_cast<UChar32>(c));
}

std::vector<std::u32string> whitespace_tokens(std::u32string_view folded) {
    std::vector<std::u32string> out;
    std::size_t i = 0;
    while (i < folded.size()) {
        while (i < folded.size() && is_space(folded[i])) {
            ++i;
        }
        const std::size_t start = i;
        while (i < folded.size() && !is_space(folded[i])) {
            ++i;
        }
        if (i > start) {
            out.emplace_back(folded.substr(start, i - start));
        }
    }
    return out;
}

SurfaceCounts extract_surface_counts(std::string_view utf8) {
    SurfaceCounts counts;
    std::size_t i = 0;
    const auto ascii_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
    while (i < utf8.size()) {
        while (i < utf8.size() && ascii_space(utf8[i])) {
            ++i;
        }
        const std::size_t start = i;
        while (i < utf8.size() && !ascii_space(utf8[i])) {
            ++i;
        }
        const std::string_view token = utf8.substr(start, i - start);
        if (token.size() > 1 && token[0] == '@') {
            ++counts.mentions;
        } else if (token.size() > 1 && token[0] == '#') {
            ++counts.hashtags;
        } else if (token.rfind("http://", 0) == 0 || token.rfind("https://", 0) == 0) {
            ++counts.urls;
        }
    }
    return counts;
}

}  // namespace iuprobe::text
