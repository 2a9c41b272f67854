#include "esprep/noise.hpp"

#include "esprep/error.hpp"
#include "esprep/hashing.hpp"
#include "esprep/parallel.hpp"
#include "esprep/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace esprep {

std::string_view to_string(NoiseObjective objective) {
    return objective == NoiseObjective::bart ? "bart" : "t5";
}

NoiseObjective parse_noise_objective(std::string_view name) {
    if (name == "bart") return NoiseObjective::bart;
    if (name == "t5") return NoiseObjective::t5;
    throw ConfigError("unknown noise objective '" + std::string(name) + "' (expected bart or t5)");
}

void NoiseConfig::validate() const {
    if (!(mask_rate >= 0.0 && mask_rate < 1.0)) throw ConfigError("mask_rate must lie in [0, 1)");
    if (!(span_lambda > 0.0)) throw ConfigError("span_lambda must be positive");
    if (!(corruption_rate > 0.0 && corruption_rate < 1.0)) throw ConfigError("corruption_rate must lie in (0, 1)");
    if (!(mean_span >= 1.0)) throw ConfigError("mean_span must be at least 1");
    if (min_chunk < 2) throw ConfigError("min_chunk must be at least 2");
    if (max_len < min_chunk) throw ConfigError("max_len must be at least min_chunk");
}

NoiseVocab NoiseVocab::of(const Tokenizer& tok) {
    NoiseVocab v;
    v.mask = tok.mask_id();
    v.num_sentinels = tok.num_sentinels();
    if (v.num_sentinels > 0) v.first_sentinel = tok.sentinel_id(0);
    return v;
}

std::uint64_t example_seed(std::uint64_t global_seed, DocId doc_id, std::size_t chunk_index) {
    return mix_seed(mix_seed(global_seed, doc_id), chunk_index);
}

std::vector<TokenSeq> pack_tokens(const TokenSeq& tokens, const NoiseConfig& cfg) {
    std::vector<TokenSeq> out;
    for (std::size_t begin = 0; begin < tokens.size(); begin += cfg.max_len) {
        const std::size_t end = std::min(tokens.size(), begin + cfg.max_len);
        if (end - begin < cfg.min_chunk) break;
        TokenSeq chunk;
        chunk.doc_id = tokens.doc_id;
        chunk.ids.assign(tokens.ids.begin() + static_cast<std::ptrdiff_t>(begin),
                         tokens.ids.begin() + static_cast<std::ptrdiff_t>(end));
        out.push_back(std::move(chunk));
    }
    return out;
}

std::vector<Chunk> pack_document(const Document& doc, const Tokenizer& tok, const NoiseConfig& cfg,
                                 const SentenceSplitter& splitter) {
    TokenSeq all;
    all.doc_id = doc.id;
    std::vector<SentenceSpan> spans;
    for (const auto& sentence : splitter.split(doc.text)) {
        const TokenSeq enc = tok.encode(sentence, doc.id);
        if (enc.empty()) continue;
        spans.push_back({all.size(), all.size() + enc.size()});
        all.ids.insert(all.ids.end(), enc.ids.begin(), enc.ids.end());
    }
    std::vector<Chunk> out;
    std::size_t s = 0;
    for (auto& seq : pack_tokens(all, cfg)) {
        Chunk chunk;
        chunk.index = out.size();
        const std::size_t begin = chunk.index * cfg.max_len;
        const std::size_t end = begin + seq.size();
        while (s < spans.size() && spans[s].end <= begin) ++s;
        for (std::size_t k = s; k < spans.size() && spans[k].begin < end; ++k) {
            chunk.sentences.push_back({std::max(spans[k].begin, begin) - begin, std::min(spans[k].end, end) - begin});
        }
        chunk.tokens = std::move(seq);
        out.push_back(std::move(chunk));
    }
    return out;
}

namespace {

void check_partition(std::size_t n, std::span<const SentenceSpan> spans) {
    std::size_t at = 0;
    for (const auto& s : spans) {
        if (s.begin != at || s.end <= s.begin) throw DataError("sentence spans do not partition the chunk");
        at = s.end;
    }
    if (at != n) throw DataError("sentence spans do not partition the chunk");
}

}  // namespace

TokenSeq permute_sentences(const TokenSeq& chunk, std::span<const SentenceSpan> spans, std::uint64_t seed) {
    check_partition(chunk.size(), spans);
    std::vector<std::size_t> order(spans.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);
    TokenSeq out;
    out.doc_id = chunk.doc_id;
    out.ids.reserve(chunk.size());
    for (std::size_t i : order) {
        out.ids.insert(out.ids.end(), chunk.ids.begin() + static_cast<std::ptrdiff_t>(spans[i].begin),
                       chunk.ids.begin() + static_cast<std::ptrdiff_t>(spans[i].end));
    }
    return out;
}

NoisedPair bart_noise(const TokenSeq& chunk, std::span<const SentenceSpan> spans, const NoiseConfig& cfg,
                      std::uint64_t seed, const NoiseVocab& vocab) {
    const std::size_t n = chunk.size();
    if (n < 2) throw DataError("chunk too short");
    NoisedPair pair;
    pair.doc_id = chunk.doc_id;
    pair.seed_used = seed;
    // Permutation and infilling draw from independent streams.
    pair.target_ids = cfg.permute_sentences ? permute_sentences(chunk, spans, mix_seed(seed, 1)) : chunk;
    Rng rng(mix_seed(seed, 2));

    constexpr std::size_t kMaxResamples = 1000;
    const auto budget = static_cast<std::size_t>(std::floor(cfg.mask_rate * static_cast<double>(n)));
    std::vector<std::int32_t> span_of(n, -1);
    std::vector<std::size_t> free_run(n + 1, 0);  // uncovered tokens starting at i
    std::size_t remaining = budget;
    std::size_t insertions = 0;
    std::int32_t next_span = 0;
    while (remaining > 0) {
        for (std::size_t i = n; i-- > 0;) free_run[i] = span_of[i] < 0 ? free_run[i + 1] + 1 : 0;
        std::size_t len = 0;
        std::size_t starts = 0;
        for (std::size_t attempt = 0;; ++attempt) {
            len = attempt < kMaxResamples ? rng.poisson(cfg.span_lambda) : 1;
            if (len > remaining) continue;
            if (len == 0) break;
            starts = 0;
            for (std::size_t i = 0; i < n; ++i) starts += free_run[i] >= len;
            if (starts > 0) break;
        }
        pair.span_lengths.push_back(len);
        if (len == 0) {
            ++insertions;
            continue;
        }
        std::size_t pick = rng.below(starts);
        std::size_t start = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (free_run[i] >= len && pick-- == 0) {
                start = i;
                break;
            }
        }
        for (std::size_t i = start; i < start + len; ++i) span_of[i] = next_span;
        ++next_span;
        remaining -= len;
    }

    // Zero-length spans go at token boundaries that do not split a span.
    std::vector<std::size_t> inserts_at(n + 1, 0);
    if (insertions > 0) {
        std::vector<std::size_t> boundaries;
        for (std::size_t p = 0; p <= n; ++p) {
            if (p == 0 || p == n || span_of[p] < 0 || span_of[p] != span_of[p - 1]) boundaries.push_back(p);
        }
        for (std::size_t k = 0; k < insertions; ++k) ++inserts_at[boundaries[rng.below(boundaries.size())]];
    }

    const auto& target = pair.target_ids.ids;
    pair.input_ids.doc_id = chunk.doc_id;
    auto& input = pair.input_ids.ids;
    for (std::size_t i = 0; i <= n; ++i) {
        input.insert(input.end(), inserts_at[i], vocab.mask);
        if (i == n) break;
        if (span_of[i] < 0) {
            input.push_back(target[i]);
        } else if (i == 0 || span_of[i - 1] != span_of[i]) {
            input.push_back(vocab.mask);
        }
    }
    pair.chunk_length = n;
    pair.noised_tokens = budget;
    return pair;
}

NoisedPair t5_span_corrupt(const TokenSeq& chunk, const NoiseConfig& cfg, std::uint64_t seed,
                           const NoiseVocab& vocab) {
    const std::size_t n = chunk.size();
    if (n < 2) throw DataError("chunk too short");
    const auto n_noise = static_cast<std::size_t>(
        std::clamp<double>(std::round(cfg.corruption_rate * static_cast<double>(n)), 1.0, static_cast<double>(n - 1)));
    std::size_t n_spans = std::max<std::size_t>(1, static_cast<std::size_t>(std::round(static_cast<double>(n_noise) / cfg.mean_span)));
    // Non-adjacent spans need a kept token between each pair.
    n_spans = std::min({n_spans, n_noise, n - n_noise + 1});
    if (n_spans + 1 > vocab.num_sentinels) {
        throw ConfigError("chunk of " + std::to_string(n) + " tokens needs " + std::to_string(n_spans) +
                          " spans but only " + std::to_string(vocab.num_sentinels) +
                          " sentinels exist (one ends the target); raise mean_span or lower max_len");
    }
    Rng rng(seed);
    // Noise lengths: a uniform composition of n_noise into n_spans positive parts.
    std::vector<std::size_t> noise_len(n_spans);
    {
        const auto cuts = rng.sample_sorted(n_noise - 1, n_spans - 1);
        std::size_t prev = 0;
        for (std::size_t i = 0; i + 1 < n_spans; ++i) {
            noise_len[i] = cuts[i] + 1 - prev;
            prev = cuts[i] + 1;
        }
        noise_len[n_spans - 1] = n_noise - prev;
    }
    // Kept lengths: n_spans + 1 gaps, interior gaps at least one token.
    std::vector<std::size_t> gap(n_spans + 1, 0);
    {
        const std::size_t spare = (n - n_noise) - (n_spans - 1);
        const auto bars = rng.sample_sorted(spare + n_spans, n_spans);
        std::size_t prev = 0;
        for (std::size_t i = 0; i < n_spans; ++i) {
            gap[i] = bars[i] - prev;
            prev = bars[i] + 1;
        }
        gap[n_spans] = spare + n_spans - prev;
        for (std::size_t i = 1; i < n_spans; ++i) ++gap[i];
    }

    NoisedPair pair;
    pair.doc_id = chunk.doc_id;
    pair.seed_used = seed;
    pair.chunk_length = n;
    pair.noised_tokens = n_noise;
    pair.input_ids.doc_id = pair.target_ids.doc_id = chunk.doc_id;
    auto& input = pair.input_ids.ids;
    auto& target = pair.target_ids.ids;
    std::size_t at = 0;
    for (std::size_t s = 0; s < n_spans; ++s) {
        const auto sentinel = static_cast<TokenId>(vocab.first_sentinel + s);
        input.insert(input.end(), chunk.ids.begin() + static_cast<std::ptrdiff_t>(at),
                     chunk.ids.begin() + static_cast<std::ptrdiff_t>(at + gap[s]));
        at += gap[s];
        input.push_back(sentinel);
        target.push_back(sentinel);
        target.insert(target.end(), chunk.ids.begin() + static_cast<std::ptrdiff_t>(at),
                      chunk.ids.begin() + static_cast<std::ptrdiff_t>(at + noise_len[s]));
        at += noise_len[s];
        pair.span_lengths.push_back(noise_len[s]);
    }
    input.insert(input.end(), chunk.ids.begin() + static_cast<std::ptrdiff_t>(at), chunk.ids.end());
    target.push_back(static_cast<TokenId>(vocab.first_sentinel + n_spans));
    return pair;
}

std::vector<NoisedPair> noise_document(const Document& doc, const Tokenizer& tok, const NoiseConfig& cfg,
                                       const SentenceSplitter& splitter) {
    const NoiseVocab vocab = NoiseVocab::of(tok);
    std::vector<NoisedPair> out;
    for (const auto& chunk : pack_document(doc, tok, cfg, splitter)) {
        const std::uint64_t seed = example_seed(cfg.seed, doc.id, chunk.index);
        NoisedPair pair = cfg.objective == NoiseObjective::bart
                              ? bart_noise(chunk.tokens, chunk.sentences, cfg, seed, vocab)
                              : t5_span_corrupt(chunk.tokens, cfg, seed, vocab);
        pair.chunk_index = chunk.index;
        out.push_back(std::move(pair));
    }
    return out;
}

std::string to_json(const NoisedPair& pair, NoiseObjective objective) {
    nlohmann::ordered_json j;
    j["input_ids"] = pair.input_ids.ids;
    j["target_ids"] = pair.target_ids.ids;
    j["doc_id"] = pair.doc_id;
    j["chunk_index"] = pair.chunk_index;
    j["objective"] = to_string(objective);
    j["seed"] = pair.seed_used;
    return j.dump();
}

NoiseStats noise_file(const std::filesystem::path& input, const std::filesystem::path& output,
                      const Tokenizer& tok, const NoiseConfig& cfg, unsigned workers) {
    cfg.validate();
    if (cfg.objective == NoiseObjective::t5 && tok.num_sentinels() == 0) {
        throw ConfigError("t5 objective needs a tokenizer trained with sentinel tokens");
    }
    std::ofstream out(output, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + output.string() + " for writing");
    const SentenceSplitter splitter;
    CorpusReader reader(input);
    NoiseStats stats;
    constexpr std::size_t kBatch = 512;
    std::vector<Document> batch;
    std::vector<std::string> rendered;
    std::vector<NoiseStats> partial;
    auto flush = [&] {
        rendered.assign(batch.size(), {});
        partial.assign(batch.size(), {});
        parallel_for(batch.size(), workers, [&](std::size_t i) {
            for (const auto& pair : noise_document(batch[i], tok, cfg, splitter)) {
                rendered[i] += to_json(pair, cfg.objective);
                rendered[i] += '\n';
                ++partial[i].pairs;
                partial[i].chunk_tokens += pair.chunk_length;
                partial[i].noised_tokens += pair.noised_tokens;
            }
        });
        for (std::size_t i = 0; i < batch.size(); ++i) {
            out << rendered[i];
            stats.pairs += partial[i].pairs;
            stats.chunk_tokens += partial[i].chunk_tokens;
            stats.noised_tokens += partial[i].noised_tokens;
            stats.bytes_out += rendered[i].size();
        }
        stats.docs += batch.size();
        batch.clear();
    };
    while (auto doc = reader.next()) {
        batch.push_back(std::move(*doc));
        if (batch.size() == kBatch) flush();
    }
    flush();
    out.flush();
    if (!out) throw IoError("write failed on " + output.string());
    return stats;
}

}  // namespace esprep
