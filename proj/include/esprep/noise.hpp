#pragma once

#include "esprep/corpus_io.hpp"
#include "esprep/sentences.hpp"
#include "esprep/tokenizer.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace esprep {

enum class NoiseObjective { bart, t5 };

std::string_view to_string(NoiseObjective objective);
NoiseObjective parse_noise_objective(std::string_view name);

struct NoiseConfig {
    NoiseObjective objective = NoiseObjective::bart;
    double mask_rate = 0.30;
    double span_lambda = 3.0;
    bool permute_sentences = true;
    double corruption_rate = 0.15;
    double mean_span = 3.0;
    std::size_t max_len = 1024;
    std::size_t min_chunk = 32;
    std::uint64_t seed = 0;

    /// Throws ConfigError. mask_rate may be 0 (identity infilling); every other rate lies in (0, 1).
    void validate() const;
};

/// Half-open token range of one sentence inside a chunk.
struct SentenceSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
    friend bool operator==(const SentenceSpan&, const SentenceSpan&) = default;
};

struct Chunk {
    TokenSeq tokens;
    std::vector<SentenceSpan> sentences;  // partitions tokens
    std::size_t index = 0;
};

/// Ids the noisers write into inputs.
struct NoiseVocab {
    TokenId mask = 4;
    TokenId first_sentinel = 5;
    std::size_t num_sentinels = 0;

    static NoiseVocab of(const Tokenizer& tok);
};

struct NoisedPair {
    TokenSeq input_ids;
    TokenSeq target_ids;
    DocId doc_id = 0;
    std::size_t chunk_index = 0;
    std::uint64_t seed_used = 0;
    std::size_t chunk_length = 0;
    std::size_t noised_tokens = 0;            // original tokens hidden from the input
    std::vector<std::size_t> span_lengths;    // in sampling order; bart zero-length spans included
};

/// Seed for one example; depends only on the global seed and the example's identity.
std::uint64_t example_seed(std::uint64_t global_seed, DocId doc_id, std::size_t chunk_index);

/// Splits a token sequence into consecutive chunks of at most max_len, dropping a
/// trailing chunk shorter than min_chunk.
std::vector<TokenSeq> pack_tokens(const TokenSeq& tokens, const NoiseConfig& cfg);

/// Encodes a document sentence by sentence and packs it; sentence spans are clipped to chunks.
std::vector<Chunk> pack_document(const Document& doc, const Tokenizer& tok, const NoiseConfig& cfg,
                                 const SentenceSplitter& splitter = SentenceSplitter());

/// Throws DataError if the spans do not partition the chunk.
TokenSeq permute_sentences(const TokenSeq& chunk, std::span<const SentenceSpan> spans, std::uint64_t seed);

/// Throws DataError "chunk too short" below two tokens.
NoisedPair bart_noise(const TokenSeq& chunk, std::span<const SentenceSpan> spans, const NoiseConfig& cfg,
                      std::uint64_t seed, const NoiseVocab& vocab = {});

/// Throws ConfigError when the chunk needs more spans than the sentinels allow
/// (one sentinel is kept for the target terminator), DataError below two tokens.
NoisedPair t5_span_corrupt(const TokenSeq& chunk, const NoiseConfig& cfg, std::uint64_t seed,
                           const NoiseVocab& vocab);

/// All pairs for one document, seeded per chunk.
std::vector<NoisedPair> noise_document(const Document& doc, const Tokenizer& tok, const NoiseConfig& cfg,
                                       const SentenceSplitter& splitter = SentenceSplitter());

/// One JSON-lines record (no trailing newline).
std::string to_json(const NoisedPair& pair, NoiseObjective objective);

struct NoiseStats {
    std::uint64_t docs = 0;
    std::uint64_t pairs = 0;
    std::uint64_t chunk_tokens = 0;
    std::uint64_t noised_tokens = 0;
    std::uint64_t bytes_out = 0;
};

/// Streams a cleaned corpus into JSON-lines pairs. Output is independent of `workers`.
NoiseStats noise_file(const std::filesystem::path& input, const std::filesystem::path& output,
                      const Tokenizer& tok, const NoiseConfig& cfg, unsigned workers = 1);

}  // namespace esprep
