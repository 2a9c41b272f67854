#include "esprep/unicode.hpp"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <stdexcept>

namespace esprep::unicode {
namespace {

bool is_ascii(std::string_view s) noexcept {
    return std::all_of(s.begin(), s.end(), [](char c) { return static_cast<unsigned char>(c) < 0x80; });
}

const icu::Normalizer2& nfkc_instance() {
    UErrorCode ec = U_ZERO_ERROR;
    const icu::Normalizer2* n = icu::Normalizer2::getNFKCInstance(ec);
    if (U_FAILURE(ec) || n == nullptr) {
        throw std::runtime_error(std::string("ICU NFKC normalizer unavailable: ") + u_errorName(ec));
    }
    return *n;
}

icu::UnicodeString to_icu(std::string_view s) {
    return icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
}

}  // namespace

char32_t next_code_point(std::string_view s, std::size_t& pos) noexcept {
    const auto* p = reinterpret_cast<const unsigned char*>(s.data());
    const std::size_t n = s.size();
    const unsigned char b0 = p[pos];
    if (b0 < 0x80) {
        ++pos;
        return b0;
    }
    int len = 0;
    char32_t cp = 0;
    char32_t min = 0;
    if (b0 >= 0xC2 && b0 <= 0xDF) {
        len = 2; cp = b0 & 0x1F; min = 0x80;
    } else if (b0 >= 0xE0 && b0 <= 0xEF) {
        len = 3; cp = b0 & 0x0F; min = 0x800;
    } else if (b0 >= 0xF0 && b0 <= 0xF4) {
        len = 4; cp = b0 & 0x07; min = 0x10000;
    } else {
        ++pos;
        return kReplacement;
    }
    if (pos + len > n) {
        ++pos;
        return kReplacement;
    }
    for (int i = 1; i < len; ++i) {
        const unsigned char b = p[pos + i];
        if ((b & 0xC0) != 0x80) {
            ++pos;
            return kReplacement;
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
        ++pos;
        return kReplacement;
    }
    pos += len;
    return cp;
}

bool is_valid_utf8(std::string_view s) noexcept {
    std::size_t pos = 0;
    while (pos < s.size()) {
        if (static_cast<unsigned char>(s[pos]) < 0x80) {
            ++pos;
            continue;
        }
        const std::size_t start = pos;
        const char32_t cp = next_code_point(s, pos);
        // A literal U+FFFD in the input occupies three bytes; a decode failure only one.
        if (cp == kReplacement && pos - start != 3) return false;
    }
    return true;
}

std::u32string decode(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    std::size_t pos = 0;
    while (pos < s.size()) out.push_back(next_code_point(s, pos));
    return out;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

std::string encode(std::u32string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char32_t cp : s) append_utf8(out, cp);
    return out;
}

std::size_t count_code_points(std::string_view s) noexcept {
    std::size_t n = 0;
    for (char c : s) {
        if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n;
    }
    return n;
}

bool is_space(char32_t cp) noexcept {
    if (cp < 0x80) return cp == ' ' || (cp >= 0x09 && cp <= 0x0D);
    return u_isUWhiteSpace(static_cast<UChar32>(cp));
}

bool is_letter(char32_t cp) noexcept {
    if (cp < 0x80) return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
    return u_isalpha(static_cast<UChar32>(cp));
}

bool is_digit(char32_t cp) noexcept {
    if (cp < 0x80) return cp >= '0' && cp <= '9';
    return u_isdigit(static_cast<UChar32>(cp));
}

bool is_alnum_or_mark(char32_t cp) noexcept {
    if (cp < 0x80) return is_letter(cp) || is_digit(cp);
    if (u_isalnum(static_cast<UChar32>(cp))) return true;
    const auto mask = U_GET_GC_MASK(static_cast<UChar32>(cp));
    return (mask & U_GC_M_MASK) != 0;
}

bool is_control(char32_t cp) noexcept {
    return cp < 0x20 || (cp >= 0x7F && cp <= 0x9F);
}

std::string nfkc(std::string_view s) {
    if (is_ascii(s)) return std::string(s);
    static const icu::Normalizer2& norm = nfkc_instance();
    UErrorCode ec = U_ZERO_ERROR;
    const icu::UnicodeString in = to_icu(s);
    if (norm.isNormalized(in, ec) && U_SUCCESS(ec)) return std::string(s);
    ec = U_ZERO_ERROR;
    const icu::UnicodeString out = norm.normalize(in, ec);
    if (U_FAILURE(ec)) throw std::runtime_error(std::string("NFKC normalization failed: ") + u_errorName(ec));
    std::string result;
    out.toUTF8String(result);
    return result;
}

bool is_nfkc(std::string_view s) {
    if (is_ascii(s)) return true;
    static const icu::Normalizer2& norm = nfkc_instance();
    UErrorCode ec = U_ZERO_ERROR;
    return norm.isNormalized(to_icu(s), ec) && U_SUCCESS(ec);
}

std::string to_lower(std::string_view s) {
    if (is_ascii(s)) {
        std::string out(s);
        for (char& c : out) {
            if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        }
        return out;
    }
    icu::UnicodeString us = to_icu(s);
    us.toLower(icu::Locale::getRoot());
    std::string out;
    us.toUTF8String(out);
    return out;
}

std::vector<std::string_view> split_whitespace(std::string_view s) {
    std::vector<std::string_view> words;
    std::size_t pos = 0;
    std::size_t start = std::string_view::npos;
    while (pos < s.size()) {
        const std::size_t here = pos;
        const char32_t cp = next_code_point(s, pos);
        if (is_space(cp)) {
            if (start != std::string_view::npos) {
                words.push_back(s.substr(start, here - start));
                start = std::string_view::npos;
            }
        } else if (start == std::string_view::npos) {
            start = here;
        }
    }
    if (start != std::string_view::npos) words.push_back(s.substr(start));
    return words;
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::string_view w : split_whitespace(s)) {
        if (!out.empty()) out.push_back(' ');
        out.append(w);
    }
    return out;
}

}  // namespace esprep::unicode
