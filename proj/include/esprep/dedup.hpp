#pragma once

#include "esprep/corpus_io.hpp"
#include "esprep/hashing.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace esprep {

/// NFKC, lowercase, whitespace runs collapsed to one space, trimmed.
std::string normalize_for_hash(std::string_view text);

enum class DedupMode { exact, near, both };

DedupMode parse_dedup_mode(std::string_view name);
std::string_view to_string(DedupMode mode);

struct DedupConfig {
    std::size_t shingle_words = 5;
    std::size_t num_perms = 128;
    std::size_t bands = 16;
    std::size_t rows = 8;
    std::uint64_t seed = 0x5EED;
    DedupMode mode = DedupMode::both;

    /// Throws ConfigError unless bands * rows == num_perms and all counts are positive.
    void validate() const;
    /// LSH verification threshold (1/bands)^(1/rows).
    double threshold() const;
};

struct MinHashSignature {
    DocId doc_id = 0;
    std::vector<std::uint64_t> values;

    friend bool operator==(const MinHashSignature&, const MinHashSignature&) = default;
};

/// Hashes of the distinct k-word shingles of an already normalized text.
std::vector<std::uint64_t> shingle_hashes(std::string_view normalized, std::size_t k);

/// MinHash over word shingles; nullopt when the document has fewer than
/// cfg.shingle_words words after normalization (such documents bypass near dedup).
std::optional<MinHashSignature> minhash_signature(const Document& doc, const DedupConfig& cfg);
std::optional<MinHashSignature> minhash_from_normalized(DocId id, std::string_view normalized,
                                                        const DedupConfig& cfg);

/// Fraction of positions where the two signatures agree.
double signature_agreement(const MinHashSignature& a, const MinHashSignature& b);

struct DedupReport {
    DedupMode mode = DedupMode::both;
    std::vector<std::vector<DocId>> clusters;  // each sorted ascending, clusters ordered by kept id
    std::vector<DocId> kept;                   // kept[i] == clusters[i].front()
    std::uint64_t removed_count = 0;
    std::uint64_t estimated_pairs_checked = 0;
    std::uint64_t bypassed = 0;

    std::string to_json() const;
};

/// Per-document fingerprint that resolution works from; texts are not retained.
struct DedupEntry {
    DocId id = 0;
    Sha256Digest digest{};
    std::optional<MinHashSignature> signature;
};

DedupEntry fingerprint(const Document& doc, const DedupConfig& cfg);

/// Resolution output: the report plus, for every removed id, the id that survives it.
struct DedupResolution {
    DedupReport report;
    std::vector<std::pair<DocId, DocId>> removed;  // (removed id, kept id), sorted by removed id

    bool is_removed(DocId id) const;
};

/// Exact grouping by digest and/or LSH banding with union-find merging. The
/// outcome depends only on the entries and cfg, not on their order.
DedupResolution resolve_duplicates(std::span<const DedupEntry> entries, const DedupConfig& cfg);

struct DedupResult {
    std::vector<Document> docs;
    DedupReport report;
};

/// Keeps the lowest id among documents whose normalized text has the same SHA-256.
DedupResult exact_dedup(std::vector<Document> docs);
/// LSH near-duplicate removal (no exact pass). Throws ConfigError on an invalid config.
DedupResult near_dedup(std::vector<Document> docs, const DedupConfig& cfg, unsigned workers = 1);
/// Runs whichever passes cfg.mode selects.
DedupResult deduplicate(std::vector<Document> docs, const DedupConfig& cfg, unsigned workers = 1);

/// Two-pass streaming dedup of a corpus file: fingerprints first, survivors second.
/// Optionally persists the signatures in MHSIG1 format.
struct DedupFileResult {
    DedupReport report;
    CorpusStats stats;
};
DedupFileResult dedup_file(const std::filesystem::path& input, const std::filesystem::path& output,
                           const DedupConfig& cfg, unsigned workers = 1,
                           const std::optional<std::filesystem::path>& signatures_path = std::nullopt);

/// MHSIG1: magic "MHSIG1", u64 doc count, u32 num_perms, then per document a u64 id
/// followed by num_perms u64 values. All integers little-endian.
void write_signatures(const std::filesystem::path& path, std::span<const MinHashSignature> sigs,
                      std::size_t num_perms);
std::vector<MinHashSignature> read_signatures(const std::filesystem::path& path);

}  // namespace esprep
