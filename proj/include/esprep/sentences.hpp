#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace esprep {

/// Rule-based sentence splitter. A boundary follows a word ending in . ! ? or …
/// (optionally followed by closing quotes/brackets), unless the word before a
/// final period is a known abbreviation. Sentences come back with internal
/// whitespace collapsed to single spaces.
class SentenceSplitter {
public:
    SentenceSplitter();
    explicit SentenceSplitter(std::unordered_set<std::string> abbreviations);

    /// One lowercase abbreviation per line, without the trailing period; '#' starts a comment.
    static SentenceSplitter from_file(const std::filesystem::path& path);
    static const std::unordered_set<std::string>& default_abbreviations();

    std::vector<std::string> split(std::string_view text) const;
    /// Same boundaries as split(), without materializing sentences.
    std::size_t count(std::string_view text) const;

    bool ends_sentence(std::string_view word) const;

private:
    std::unordered_set<std::string> abbreviations_;
};

std::vector<std::string> segment_sentences(std::string_view text);

}  // namespace esprep
