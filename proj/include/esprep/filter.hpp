#pragma once

#include "esprep/corpus_io.hpp"
#include "esprep/sentences.hpp"

#include <filesystem>
#include <string>
#include <unordered_set>

namespace esprep {

struct CleanConfig {
    std::size_t min_chars = 100;
    std::size_t min_sentences = 2;
    std::size_t max_char_run = 10;
    double max_symbol_ratio = 0.05;
    double max_top_char_ratio = 0.30;
    std::size_t code_keyword_threshold = 3;
    std::unordered_set<std::string> blocklist;
    double lang_threshold = 0.98;
    std::string target_lang = "es";

    /// Throws ConfigError unless fractions lie in [0,1] and counts are >= 1.
    void validate() const;
};

/// Lowercase words, one per line; blank lines and '#' comments ignored.
std::unordered_set<std::string> load_word_list(const std::filesystem::path& path);

struct FilterDecision {
    bool accepted = true;
    std::string rule = "pass";
    std::string detail;

    static FilterDecision pass() { return {}; }
    static FilterDecision reject(std::string rule, std::string detail) {
        return {false, std::move(rule), std::move(detail)};
    }
};

/// Quality rules in evaluation order; the first failing rule names the rejection.
inline constexpr const char* kFilterRules[] = {
    "min_chars", "min_sentences", "char_run", "top_char_ratio", "symbol_ratio", "code", "blocklist",
};

class DocumentFilter {
public:
    explicit DocumentFilter(CleanConfig cfg, SentenceSplitter splitter = {});

    FilterDecision operator()(std::string_view text) const;
    FilterDecision operator()(const Document& doc) const { return (*this)(doc.text); }

    const CleanConfig& config() const { return cfg_; }

private:
    CleanConfig cfg_;
    SentenceSplitter splitter_;
};

FilterDecision filter_document(const Document& doc, const CleanConfig& cfg);

/// Punctuation a Spanish text may use without counting toward the symbol ratio.
bool is_allowed_punctuation(char32_t cp) noexcept;

/// Number of distinct code markers ("#include", "{", "def ", ...) present in `text`.
std::size_t count_code_markers(std::string_view text);

}  // namespace esprep
