#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// UTF-8 helpers and thin wrappers over ICU. All strings are UTF-8 in std::string.
namespace esprep::unicode {

inline constexpr char32_t kReplacement = 0xFFFD;

/// Strict validation: rejects overlongs, surrogates, code points above U+10FFFF.
bool is_valid_utf8(std::string_view s) noexcept;

/// Decodes one code point starting at `pos` and advances it. Invalid sequences
/// yield U+FFFD and advance by one byte.
char32_t next_code_point(std::string_view s, std::size_t& pos) noexcept;

std::u32string decode(std::string_view s);
void append_utf8(std::string& out, char32_t cp);
std::string encode(std::u32string_view s);

std::size_t count_code_points(std::string_view s) noexcept;

bool is_space(char32_t cp) noexcept;
bool is_letter(char32_t cp) noexcept;
bool is_digit(char32_t cp) noexcept;
bool is_alnum_or_mark(char32_t cp) noexcept;
/// General category Cc.
bool is_control(char32_t cp) noexcept;

std::string nfkc(std::string_view s);
bool is_nfkc(std::string_view s);
/// Full Unicode lowercase mapping (root locale).
std::string to_lower(std::string_view s);

/// Splits on Unicode White_Space; never yields empty pieces.
std::vector<std::string_view> split_whitespace(std::string_view s);

/// Words joined by single spaces, leading/trailing whitespace removed.
std::string collapse_whitespace(std::string_view s);

}  // namespace esprep::unicode
