#pragma once

#include "esprep/corpus_io.hpp"

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace synth {

using Rng = std::mt19937_64;

std::size_t uniform(Rng& rng, std::size_t lo, std::size_t hi);  // inclusive
double uniform01(Rng& rng);

/// Zipf-distributed pseudo-Spanish vocabulary built from syllables.
class Lexicon {
public:
    Lexicon(std::size_t size, std::uint64_t seed, double exponent = 1.0);

    const std::string& word(Rng& rng) const;
    const std::vector<std::string>& words() const { return words_; }

    std::string sentence(Rng& rng, std::size_t min_words = 6, std::size_t max_words = 18) const;
    std::string document(Rng& rng, std::size_t min_sentences = 3, std::size_t max_sentences = 10) const;

private:
    std::vector<std::string> words_;
    std::vector<double> cdf_;
};

/// Seed vocabulary for "es", "en", "pt", "fr", "de".
const std::map<std::string, std::vector<std::string>>& language_words();
std::string language_sentence(const std::string& lang, Rng& rng, std::size_t min_chars = 40);

/// `count` documents of roughly `bytes_each` bytes drawn from the lexicon.
std::vector<esprep::Document> corpus(const Lexicon& lex, std::size_t count, Rng& rng, esprep::DocId first_id = 0);
/// Documents until the serialized text reaches `total_bytes`.
std::vector<esprep::Document> corpus_of_size(const Lexicon& lex, std::size_t total_bytes, Rng& rng);

/// UTF-8 bytes reinterpreted as Windows-1252, re-encoded as UTF-8.
std::string mojibake(const std::string& utf8);
/// True when every byte of `utf8` has a Windows-1252 reading (so mojibake() is lossless).
bool cp1252_encodable(const std::string& utf8);
/// True when some adjacent characters, read as Windows-1252 bytes, form a valid
/// UTF-8 multi-byte sequence; such text is itself indistinguishable from mojibake.
bool reads_as_mojibake(const std::string& utf8);

/// Random UTF-8 over a mix of ASCII, Latin-1, cp1252 punctuation, controls,
/// combining marks and compatibility characters.
std::string random_text(Rng& rng, std::size_t max_chars);

std::string utf8(char32_t cp);

}  // namespace synth
