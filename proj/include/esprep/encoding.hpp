#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace esprep {

/// Byte that Windows-1252 (falling back to Latin-1 for its five undefined slots)
/// decodes to `cp`, if any.
std::optional<unsigned char> cp1252_byte(char32_t cp) noexcept;
/// Inverse of cp1252_byte for bytes >= 0x80; ASCII maps to itself.
char32_t cp1252_char(unsigned char byte) noexcept;

/// Undoes one layer of UTF-8 that was mis-decoded as Windows-1252/Latin-1.
/// Each run of characters whose code-page bytes form one valid multi-byte UTF-8
/// sequence is replaced by the character it encodes. The result is kept only if
/// it strictly lowers the count of characters sitting on code-page bytes
/// 0x80-0xFF and introduces no U+FFFD.
std::string repair_mojibake(std::string_view text);

/// Removes C0/C1 control characters other than '\n' and '\t'.
std::string strip_controls(std::string_view text);

/// Mojibake repair, then NFKC, then control stripping, iterated to a fixed point;
/// fix_encoding(fix_encoding(t)) == fix_encoding(t).
std::string fix_encoding(std::string_view text);

}  // namespace esprep
