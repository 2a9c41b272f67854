#pragma once

#include "esprep/corpus_io.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace esprep {

struct LanguageGuess {
    std::string code;
    double confidence = 0.0;
};

/// Multinomial naive Bayes over character 3-grams with add-one smoothing and a
/// uniform prior. Text is NFKC-normalized, lowercased, whitespace-collapsed and
/// padded with one space on each side before 3-grams are taken.
///
/// Every language shares one vocabulary V (union of training 3-grams plus one
/// bucket for unseen grams), so each profile sums to exactly one.
class LangModel {
public:
    static constexpr std::size_t kMinSeedChars = 10'000;

    LangModel() = default;

    /// Throws ConfigError with fewer than two languages or a seed under kMinSeedChars.
    static LangModel train(const std::map<std::string, std::vector<std::string>>& seeds);

    const std::vector<std::string>& languages() const { return languages_; }
    double log_prior(std::size_t lang) const { return log_prior_[lang]; }
    double unseen_log_prob(std::size_t lang) const { return unseen_[lang]; }
    /// log P(gram | lang); unseen grams get the smoothed floor.
    double log_prob(std::size_t lang, std::u32string_view gram) const;
    std::size_t vocabulary_size() const { return gram_index_.size(); }

    /// Posterior per language, aligned with languages(). Throws DataError on blank text.
    std::vector<double> posteriors(std::string_view text) const;
    LanguageGuess detect(std::string_view text) const;

    void save(const std::filesystem::path& path) const;
    static LangModel load(const std::filesystem::path& path);

    std::string to_json() const;
    static LangModel from_json(std::string_view json);

private:
    std::vector<std::string> languages_;
    std::vector<double> log_prior_;
    std::vector<double> unseen_;
    // Row-major [gram][language] log-probabilities; rows follow gram_index_.
    std::unordered_map<std::uint64_t, std::uint32_t> gram_index_;
    std::vector<double> table_;
    // Which languages actually observed each gram (for serialization).
    std::vector<std::uint64_t> seen_mask_;
};

/// Padded, normalized code points that 3-grams are drawn from.
std::u32string langid_normalize(std::string_view text);
/// Packs three code points into one 63-bit key.
std::uint64_t pack_trigram(char32_t a, char32_t b, char32_t c) noexcept;

LangModel train_langid(const std::map<std::string, std::vector<Document>>& seed_corpora);
LanguageGuess detect_language(const LangModel& model, std::string_view text);

}  // namespace esprep
