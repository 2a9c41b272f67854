#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace esprep {

using Tokens = std::vector<std::string>;

/// NFKC + lowercase; a run of letters, digits and marks is one token, every other
/// non-space character is a token of its own.
class EvalTokenizer {
public:
    Tokens operator()(std::string_view text) const;
};

Tokens eval_tokenize(std::string_view text);

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Clipped n-gram overlap; with several references the one with the highest F1 wins.
/// Throws ConfigError on an empty reference list or n == 0.
Prf rouge_n(const Tokens& candidate, std::span<const Tokens> references, std::size_t n);
Prf rouge_n(std::string_view candidate, std::span<const std::string> references, std::size_t n);
Prf rouge_l(const Tokens& candidate, std::span<const Tokens> references);
Prf rouge_l(std::string_view candidate, std::span<const std::string> references);

std::size_t lcs_length(const Tokens& a, const Tokens& b);

struct BleuOptions {
    std::size_t max_order = 4;
    bool smooth = false;  // add-one on orders above 1
};

/// Corpus-aggregated counts; bleu_from_counts() turns them into the score.
struct BleuCounts {
    std::vector<std::uint64_t> matches;
    std::vector<std::uint64_t> totals;
    std::uint64_t sys_len = 0;
    std::uint64_t ref_len = 0;  // closest reference length per sentence, ties to the shorter
};

BleuCounts bleu_counts(std::span<const Tokens> candidates, std::span<const std::vector<Tokens>> reference_sets,
                       std::size_t max_order = 4);
double bleu_from_counts(const BleuCounts& counts, const BleuOptions& opts = {});
/// In [0, 100]. Throws DataError when the corpus sizes differ or are zero.
double corpus_bleu(std::span<const Tokens> candidates, std::span<const std::vector<Tokens>> reference_sets,
                   const BleuOptions& opts = {});

struct SariComponents {
    double add = 0.0;   // F1 of added n-grams, averaged over orders 1..4
    double keep = 0.0;  // F1 of kept n-grams
    double del = 0.0;   // precision of deleted n-grams
    double score() const { return (add + keep + del) / 3.0; }
};

/// Sentence-level SARI in [0, 1]. Empty-set conventions: additions 0/0 -> 0,
/// keep precision/recall and deletion precision 0/0 -> 1.
SariComponents sari_sentence(const Tokens& source, const Tokens& candidate, std::span<const Tokens> references);
/// Mean sentence SARI in [0, 100]. Throws DataError on misaligned inputs.
double sari(std::span<const Tokens> sources, std::span<const Tokens> candidates,
            std::span<const std::vector<Tokens>> reference_sets);

struct MeteorAlignment {
    std::size_t matches = 0;
    std::size_t chunks = 0;
};

/// Exact-match one-to-one alignment with the most matches, then the fewest chunks.
MeteorAlignment meteor_align(const Tokens& candidate, const Tokens& reference);
double meteor_lite(const Tokens& candidate, const Tokens& reference);
double meteor_score(std::size_t matches, std::size_t chunks, std::size_t cand_len, std::size_t ref_len);

/// Multiset overlap F1; both empty -> 1, one empty -> 0.
double token_f1(const Tokens& candidate, const Tokens& reference);

struct MetricReport {
    std::string metric;
    double score = 0.0;  // rouge/bleu/sari on 0-100; meteor/f1 on 0-1
    std::vector<double> per_example;
    std::map<std::string, double> support;

    std::string to_json() const;
};

struct EvalInput {
    std::vector<std::string> predictions;
    std::vector<std::vector<std::string>> references;  // one list per reference file
    std::vector<std::string> sources;
};

/// Metric names: rouge (reports rouge1, rouge2, rougeL), bleu, sari, meteor, f1.
/// Throws ConfigError on an unknown metric or sari without sources; DataError on misalignment.
std::vector<MetricReport> evaluate(const EvalInput& input, std::span<const std::string> metrics,
                                   const BleuOptions& bleu = {});

/// Fixed-width table, one row per report.
std::string render_table(std::span<const MetricReport> reports);

}  // namespace esprep
