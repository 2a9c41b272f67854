#include "esprep/encoding.hpp"

#include "esprep/unicode.hpp"

#include <array>
#include <vector>

namespace esprep {
namespace {

// Windows-1252 for 0x80-0x9F; zero marks the five undefined bytes, which decode as Latin-1 C1 controls.
constexpr std::array<char32_t, 32> kCp1252High = {
    0x20AC, 0,      0x201A, 0x0192, 0x201E, 0x2026, 0x2020, 0x2021,
    0x02C6, 0x2030, 0x0160, 0x2039, 0x0152, 0,      0x017D, 0,
    0,      0x2018, 0x2019, 0x201C, 0x201D, 0x2022, 0x2013, 0x2014,
    0x02DC, 0x2122, 0x0161, 0x203A, 0x0153, 0,      0x017E, 0x0178,
};

int utf8_length_for_lead(unsigned char b) {
    if (b >= 0xC2 && b <= 0xDF) return 2;
    if (b >= 0xE0 && b <= 0xEF) return 3;
    if (b >= 0xF0 && b <= 0xF4) return 4;
    return 0;
}

std::size_t count_high(const std::u32string& cps) {
    std::size_t n = 0;
    for (char32_t cp : cps) {
        const auto b = cp1252_byte(cp);
        if (b && *b >= 0x80) ++n;
    }
    return n;
}

bool needs_work(std::string_view text) {
    for (char c : text) {
        const auto b = static_cast<unsigned char>(c);
        if (b >= 0x80 || (b < 0x20 && b != '\n' && b != '\t') || b == 0x7F) return true;
    }
    return false;
}

}  // namespace

std::optional<unsigned char> cp1252_byte(char32_t cp) noexcept {
    if (cp < 0x100) return static_cast<unsigned char>(cp);
    for (std::size_t i = 0; i < kCp1252High.size(); ++i) {
        if (kCp1252High[i] == cp) return static_cast<unsigned char>(0x80 + i);
    }
    return std::nullopt;
}

char32_t cp1252_char(unsigned char byte) noexcept {
    if (byte >= 0x80 && byte <= 0x9F && kCp1252High[byte - 0x80] != 0) return kCp1252High[byte - 0x80];
    return byte;
}

std::string repair_mojibake(std::string_view text) {
    const std::u32string cps = unicode::decode(text);
    std::u32string out;
    out.reserve(cps.size());
    bool changed = false;
    std::size_t i = 0;
    while (i < cps.size()) {
        const auto lead = cp1252_byte(cps[i]);
        const int len = lead ? utf8_length_for_lead(*lead) : 0;
        if (len > 0 && i + static_cast<std::size_t>(len) <= cps.size()) {
            std::string bytes(1, static_cast<char>(*lead));
            for (int k = 1; k < len; ++k) {
                const auto b = cp1252_byte(cps[i + k]);
                if (!b || *b < 0x80 || *b > 0xBF) break;
                bytes.push_back(static_cast<char>(*b));
            }
            if (bytes.size() == static_cast<std::size_t>(len)) {
                std::size_t pos = 0;
                const char32_t decoded = unicode::next_code_point(bytes, pos);
                if (pos == bytes.size() && decoded != unicode::kReplacement) {
                    out.push_back(decoded);
                    i += len;
                    changed = true;
                    continue;
                }
            }
        }
        out.push_back(cps[i]);
        ++i;
    }
    if (!changed || count_high(out) >= count_high(cps)) return std::string(text);
    return unicode::encode(out);
}

std::string strip_controls(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t start = pos;
        const char32_t cp = unicode::next_code_point(text, pos);
        if (unicode::is_control(cp) && cp != '\n' && cp != '\t') continue;
        out.append(text.substr(start, pos - start));
    }
    return out;
}

std::string fix_encoding(std::string_view text) {
    if (!needs_work(text)) return std::string(text);
    std::string current = unicode::is_valid_utf8(text) ? std::string(text) : unicode::encode(unicode::decode(text));
    // Each round either reaches a fixed point or consumes a mojibake sequence; a
    // handful of rounds covers any realistic nesting depth.
    for (int round = 0; round < 16; ++round) {
        std::string next = strip_controls(unicode::nfkc(repair_mojibake(current)));
        if (next == current) break;
        current = std::move(next);
    }
    return current;
}

}  // namespace esprep
