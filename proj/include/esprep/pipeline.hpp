#pragma once

#include "esprep/clean.hpp"
#include "esprep/corpus_io.hpp"
#include "esprep/dedup.hpp"
#include "esprep/noise.hpp"
#include "esprep/tokenizer.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace esprep {

inline constexpr std::string_view kToolVersion = "esprep 0.1.0";

/// Stage names in the only order they may run.
inline constexpr std::string_view kStageOrder[] = {"ingest", "clean", "dedup", "repair", "tokenizer", "noise"};

enum class IngestFormat { jsonl, text };

struct IngestOptions {
    IngestFormat format = IngestFormat::jsonl;
    std::string source;  // overrides the source tag when nonempty
};

struct TokenizerSettings {
    TokenizerKind kind = TokenizerKind::bpe;
    std::size_t vocab_size = 8000;
    bool sentinels = false;  // T5 profile: 100 sentinel tokens
    UnigramOptions unigram;
    std::optional<std::filesystem::path> model;  // use this model instead of training

    SpecialTokens specials() const { return sentinels ? SpecialTokens::t5() : SpecialTokens::bart(); }
};

struct CleanSettings {
    CleanConfig config;
    std::optional<std::filesystem::path> lang_model;
    std::optional<std::filesystem::path> blocklist;
    std::optional<std::filesystem::path> abbreviations;
    bool repair = false;  // fix encoding before judging
};

struct PipelineConfig {
    std::vector<std::string> stages;
    std::filesystem::path input;
    std::filesystem::path output_dir;
    std::uint64_t seed = 0;
    unsigned workers = 0;  // 0: $ESPREP_WORKERS or 1
    IngestOptions ingest;
    CleanSettings clean;
    DedupConfig dedup;
    bool dedup_signatures = false;
    TokenizerSettings tokenizer;
    NoiseConfig noise;

    /// Key/value config with [sections]; string values may be quoted, lists are
    /// comma-separated or written as ["a", "b"]. Unknown keys are errors.
    static PipelineConfig parse(std::string_view text);
    static PipelineConfig load(const std::filesystem::path& path);
    /// Applies one "section.key=value" (or "key=value" for top-level keys) override.
    void set(std::string_view assignment);

    /// Throws ConfigError on an invalid stage list or field.
    void validate() const;
    /// Every effective setting as sorted "key=value" lines; worker count excluded.
    std::string canonical() const;
    std::string hash() const;
};

struct StageRecord {
    std::string name;
    std::string status;  // ok | failed
    CorpusStats stats;
    double wall_seconds = 0.0;
    std::map<std::string, std::string> details;  // artifact paths, token counts, clusters
    std::string error;
};

struct RunManifest {
    std::string config_hash;
    std::string tool_version = std::string(kToolVersion);
    std::string status = "ok";
    std::vector<StageRecord> stages;

    std::string to_json() const;
    static RunManifest from_json(std::string_view json);
};

/// Runs cfg.stages in order, writing one artifact per stage into output_dir plus
/// manifest.json. On a stage failure the manifest is written with status "failed"
/// and the error is rethrown.
RunManifest run_pipeline(const PipelineConfig& cfg);

/// Fixed-column summary of a manifest.
std::string report(const RunManifest& manifest);

CorpusStats ingest_file(const std::filesystem::path& input, const std::filesystem::path& output,
                        const IngestOptions& opts);
/// Rejected documents are counted per rule; survivors keep their annotations.
CorpusStats clean_file(const std::filesystem::path& input, const std::filesystem::path& output,
                       const Cleaner& cleaner, unsigned workers = 1);
CorpusStats repair_file(const std::filesystem::path& input, const std::filesystem::path& output,
                        unsigned workers = 1, std::uint64_t* changed_docs = nullptr);
/// Word counts gathered in parallel; the result does not depend on `workers`.
WordCounter count_words(const std::filesystem::path& input, unsigned workers = 1);
Tokenizer train_tokenizer(const std::filesystem::path& input, const TokenizerSettings& settings,
                          unsigned workers = 1);
Cleaner make_cleaner(const CleanSettings& settings);

}  // namespace esprep
