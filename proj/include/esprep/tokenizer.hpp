#pragma once

#include "esprep/corpus_io.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace esprep {

using TokenId = std::uint32_t;

/// Marks the start of every whitespace-delimited word (U+2581).
inline constexpr std::string_view kWordMarker = "\xE2\x96\x81";

enum class TokenizerKind { bpe, unigram };

std::string_view to_string(TokenizerKind kind);
TokenizerKind parse_tokenizer_kind(std::string_view name);

enum class PieceType { normal, special, byte };

struct Piece {
    std::string text;
    double score = 0.0;
    PieceType type = PieceType::normal;
};

/// Reserved tokens at fixed low ids: pad=0, unk=1, bos=2, eos=3, mask=4, then
/// `num_sentinels` sentinels <extra_id_0>..., then the 256 byte-fallback pieces.
struct SpecialTokens {
    std::string pad = "<pad>";
    std::string unk = "<unk>";
    std::string bos = "<s>";
    std::string eos = "</s>";
    std::string mask = "<mask>";
    std::size_t num_sentinels = 0;

    /// BART profile: no sentinels.
    static SpecialTokens bart() { return {}; }
    /// T5 profile: 100 sentinels.
    static SpecialTokens t5() {
        SpecialTokens s;
        s.num_sentinels = 100;
        return s;
    }

    static std::string sentinel(std::size_t i) { return "<extra_id_" + std::to_string(i) + ">"; }
    std::vector<std::string> names() const;
    std::size_t count() const { return 5 + num_sentinels; }
    /// Named specials plus byte pieces.
    std::size_t reserved() const { return count() + 256; }

    friend bool operator==(const SpecialTokens&, const SpecialTokens&) = default;
};

struct TokenSeq {
    std::vector<TokenId> ids;
    DocId doc_id = 0;

    std::size_t size() const { return ids.size(); }
    bool empty() const { return ids.empty(); }
    friend bool operator==(const TokenSeq&, const TokenSeq&) = default;
};

/// Whitespace pre-segmentation: every word gets the marker prefix.
std::vector<std::string> pre_segment(std::string_view text);

/// Weighted word counts over a corpus, the input to both trainers.
class WordCounter {
public:
    void add(std::string_view text);
    void add(const Document& doc) { add(doc.text); }
    void merge(const WordCounter& other);

    /// Marker-prefixed words with counts, sorted by word for determinism.
    std::vector<std::pair<std::string, std::uint64_t>> sorted() const;
    /// Code points with counts (marker included), sorted by count desc then code point.
    std::vector<std::pair<char32_t, std::uint64_t>> characters() const;
    bool empty() const { return words_.empty(); }

private:
    std::unordered_map<std::string, std::uint64_t> words_;
};

/// A trained subword model: BPE merges or unigram log-probabilities, plus the
/// reserved-token table. Immutable once built; safe to share across threads.
class Tokenizer {
public:
    Tokenizer(TokenizerKind kind, SpecialTokens specials, std::vector<Piece> normal_pieces,
              std::vector<std::pair<std::string, std::string>> merges = {});

    TokenizerKind kind() const { return kind_; }
    const SpecialTokens& specials() const { return specials_; }
    std::size_t size() const { return vocab_.size(); }
    const Piece& piece(TokenId id) const { return vocab_.at(id); }
    const std::vector<Piece>& vocab() const { return vocab_; }
    std::optional<TokenId> find(std::string_view piece) const;
    const std::vector<std::pair<std::string, std::string>>& merges() const { return merges_; }

    TokenId pad_id() const { return 0; }
    TokenId unk_id() const { return 1; }
    TokenId bos_id() const { return 2; }
    TokenId eos_id() const { return 3; }
    TokenId mask_id() const { return 4; }
    std::size_t num_sentinels() const { return specials_.num_sentinels; }
    TokenId sentinel_id(std::size_t i) const;
    bool is_sentinel(TokenId id) const { return id >= 5 && id < 5 + specials_.num_sentinels; }
    TokenId byte_id(unsigned char b) const { return static_cast<TokenId>(specials_.count() + b); }
    bool is_byte(TokenId id) const { return id >= specials_.count() && id < specials_.reserved(); }

    TokenSeq encode(std::string_view text, DocId doc_id = 0) const;
    std::vector<std::string> encode_pieces(std::string_view text) const;
    /// Throws DataError on an out-of-range id.
    std::string decode(std::span<const TokenId> ids) const;

    /// Unigram Viterbi over one marker-prefixed word (no literal markers inside).
    std::vector<TokenId> segment_unigram(std::u32string_view word) const;
    /// Log-probability of a segmentation under the unigram scores.
    double segmentation_score(std::span<const TokenId> ids) const;

    std::string serialize() const;
    static Tokenizer deserialize(std::string_view data);
    void save(const std::filesystem::path& path) const;
    static Tokenizer load(const std::filesystem::path& path);

private:
    void encode_run(std::u32string_view run, std::vector<TokenId>& out) const;
    void encode_bpe(std::u32string_view run, std::vector<TokenId>& out) const;
    void append_bytes(char32_t cp, std::vector<TokenId>& out) const;

    TokenizerKind kind_;
    SpecialTokens specials_;
    std::vector<Piece> vocab_;
    std::unordered_map<std::string, TokenId> index_;
    std::vector<std::pair<std::string, std::string>> merges_;
    // (left id << 32 | right id) -> (rank, merged id)
    std::unordered_map<std::uint64_t, std::pair<std::uint32_t, TokenId>> merge_rank_;
    std::unordered_map<char32_t, TokenId> char_ids_;
    std::unordered_map<std::u32string, TokenId> unigram_pieces_;
    std::size_t max_piece_chars_ = 1;
    double fallback_score_ = -20.0;
};

struct UnigramOptions {
    std::size_t max_piece_chars = 8;
    std::size_t em_rounds = 2;
    double prune_ratio = 0.20;
    std::size_t seed_factor = 5;  // seed vocabulary = seed_factor x learned budget
};

/// Throws ConfigError when vocab_size is below the reserved tokens plus the
/// character set, or when the corpus cannot supply enough pieces.
Tokenizer train_bpe(const WordCounter& counts, std::size_t vocab_size, const SpecialTokens& specials);
Tokenizer train_bpe(std::span<const Document> corpus, std::size_t vocab_size, const SpecialTokens& specials);
Tokenizer train_unigram(const WordCounter& counts, std::size_t vocab_size, const SpecialTokens& specials,
                        const UnigramOptions& opts = {});
Tokenizer train_unigram(std::span<const Document> corpus, std::size_t vocab_size, const SpecialTokens& specials,
                        const UnigramOptions& opts = {});

}  // namespace esprep
