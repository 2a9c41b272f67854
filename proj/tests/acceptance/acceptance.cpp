// Acceptance checks. Prints one PASS/FAIL line per criterion; exits non-zero when
// any hard criterion (1-8) fails. Criterion 9 is reported but never fails the run.
// Optional arguments select criteria by number.

#include "esprep/clean.hpp"
#include "esprep/dedup.hpp"
#include "esprep/encoding.hpp"
#include "esprep/langid.hpp"
#include "esprep/metrics.hpp"
#include "esprep/noise.hpp"
#include "esprep/pipeline.hpp"
#include "esprep/tokenizer.hpp"
#include "esprep/unicode.hpp"

#include "oracles.hpp"
#include "synth.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace esprep;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int digits = 4) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(digits);
    os << v;
    return os.str();
}

struct ScratchDir {
    fs::path path;
    ScratchDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("esprep_accept_" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~ScratchDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

TokenSeq iota_seq(std::size_t n) {
    TokenSeq s;
    for (std::size_t i = 0; i < n; ++i) s.ids.push_back(static_cast<TokenId>(1000 + i));
    return s;
}

std::vector<SentenceSpan> random_partition(std::size_t n, synth::Rng& rng) {
    const std::size_t k = synth::uniform(rng, 1, 20);
    std::set<std::size_t> cuts;
    while (cuts.size() + 1 < k) cuts.insert(synth::uniform(rng, 1, n - 1));
    std::vector<SentenceSpan> spans;
    std::size_t begin = 0;
    for (auto c : cuts) spans.push_back({begin, c}), begin = c;
    spans.push_back({begin, n});
    return spans;
}

std::string whitespace_normalized(const std::string& s) {
    std::istringstream in(s);
    std::string w, out;
    while (in >> w) out += (out.empty() ? "" : " ") + w;
    return out;
}

std::vector<std::string> split_words(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    std::string w;
    while (in >> w) out.push_back(w);
    return out;
}

std::string join_words(const std::vector<std::string>& w) {
    std::string out;
    for (const auto& x : w) out += (out.empty() ? "" : " ") + x;
    return out;
}

std::string file_sha256(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
    std::vector<char> buf(1 << 16);
    while (in.read(buf.data(), static_cast<std::streamsize>(buf.size())) || in.gcount() > 0) {
        EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md, &len);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) out += hex[md[i] >> 4], out += hex[md[i] & 15];
    return out;
}

// Five-language model shared by criteria 5 and 9.
std::shared_ptr<const LangModel> seed_language_model() {
    static std::shared_ptr<const LangModel> model = [] {
        synth::Rng rng(1001);
        std::map<std::string, std::vector<std::string>> seeds;
        for (const auto& [lang, words] : synth::language_words()) {
            auto& sents = seeds[lang];
            std::size_t chars = 0;
            while (chars < 60'000) {
                sents.push_back(synth::language_sentence(lang, rng));
                chars += sents.back().size();
            }
        }
        return std::make_shared<const LangModel>(LangModel::train(seeds));
    }();
    return model;
}

// 1. BART infilling rate and permutation conservation.
Outcome criterion_noise_rate() {
    const auto t0 = Clock::now();
    NoiseConfig cfg;
    synth::Rng rng(1);
    double covered = 0;
    std::size_t multiset_ok = 0;
    const std::size_t n = 512, examples = 1000;
    for (std::size_t i = 0; i < examples; ++i) {
        const auto chunk = iota_seq(n);
        const auto spans = random_partition(n, rng);
        const auto p = bart_noise(chunk, spans, cfg, example_seed(17, i, 0));
        covered += static_cast<double>(p.noised_tokens) / static_cast<double>(n);
        auto target = p.target_ids.ids;
        std::sort(target.begin(), target.end());
        multiset_ok += target == chunk.ids;
    }
    const double mean = covered / examples;
    const double secs = seconds_since(t0);
    const bool pass = std::abs(mean - 0.30) <= 0.02 && multiset_ok == examples && secs < 10.0;
    return {pass, "mean masked fraction " + fmt(mean) + ", target multiset preserved " + std::to_string(multiset_ok) +
                      "/" + std::to_string(examples) + ", " + fmt(secs, 2) + " s"};
}

// 2. T5 span corruption rate, span length and reconstruction.
Outcome criterion_t5() {
    NoiseConfig cfg;
    cfg.objective = NoiseObjective::t5;
    const NoiseVocab vocab{4, 5, 100};
    const auto is_sentinel = [&](TokenId id) { return id >= 5 && id < 105; };
    double covered = 0, span_total = 0, spans = 0;
    std::size_t exact = 0;
    const std::size_t n = 512, examples = 1000;
    for (std::size_t i = 0; i < examples; ++i) {
        const auto chunk = iota_seq(n);
        const auto p = t5_span_corrupt(chunk, cfg, example_seed(23, i, 0), vocab);
        covered += static_cast<double>(p.noised_tokens) / static_cast<double>(n);
        for (auto l : p.span_lengths) span_total += static_cast<double>(l), spans += 1;
        std::vector<std::vector<TokenId>> pieces;
        bool ok = !p.target_ids.empty() && is_sentinel(p.target_ids.ids.front());
        for (auto id : p.target_ids.ids) {
            if (is_sentinel(id)) pieces.emplace_back();
            else if (!pieces.empty()) pieces.back().push_back(id);
        }
        std::vector<TokenId> rebuilt;
        for (auto id : p.input_ids.ids) {
            if (!is_sentinel(id)) {
                rebuilt.push_back(id);
            } else if (id - 5u < pieces.size()) {
                rebuilt.insert(rebuilt.end(), pieces[id - 5].begin(), pieces[id - 5].end());
            } else {
                ok = false;
            }
        }
        exact += ok && rebuilt == chunk.ids;
    }
    const double rate = covered / examples, mean_span = span_total / spans;
    const bool pass = std::abs(rate - 0.15) <= 0.02 && std::abs(mean_span - 3.0) <= 0.3 && exact == examples;
    return {pass, "corrupted fraction " + fmt(rate) + ", mean span " + fmt(mean_span) + ", reconstruction " +
                      std::to_string(exact) + "/" + std::to_string(examples)};
}

// 3. Tokenizer sizes, roundtrip and Viterbi optimality.
Outcome criterion_tokenizer() {
    const std::size_t bpe_size = 50'264, unigram_size = 32'000;
    synth::Lexicon lex(60'000, 301, 0.9);
    synth::Rng rng(302);
    const auto train = synth::corpus_of_size(lex, 10'000'000, rng);
    WordCounter counts;
    for (const auto& d : train) counts.add(d);

    auto t0 = Clock::now();
    const auto bpe = train_bpe(counts, bpe_size, SpecialTokens::bart());
    const double bpe_secs = seconds_since(t0);
    t0 = Clock::now();
    const auto uni = train_unigram(counts, unigram_size, SpecialTokens::t5());
    const double uni_secs = seconds_since(t0);

    synth::Lexicon unseen(5'000, 303);
    std::size_t roundtrip_ok = 0;
    const std::size_t held_out = 10'000;
    for (std::size_t i = 0; i < held_out; ++i) {
        const std::string text = whitespace_normalized(i % 10 == 0 ? unseen.document(rng) : lex.document(rng));
        roundtrip_ok += bpe.decode(bpe.encode(text).ids) == text && uni.decode(uni.encode(text).ids) == text;
    }

    std::size_t viterbi_ok = 0, words = 0;
    while (words < 500) {
        const std::string w = lex.word(rng);
        const std::u32string cps = unicode::decode(std::string(kWordMarker) + w);
        if (cps.size() - 1 > 12) continue;
        ++words;
        double best = -std::numeric_limits<double>::infinity();
        std::function<void(std::size_t, double)> rec = [&](std::size_t pos, double score) {
            if (pos == cps.size()) {
                best = std::max(best, score);
                return;
            }
            for (std::size_t len = 1; pos + len <= cps.size(); ++len) {
                const auto id = uni.find(unicode::encode(cps.substr(pos, len)));
                if (id && uni.piece(*id).type == PieceType::normal) rec(pos + len, score + uni.piece(*id).score);
            }
        };
        rec(0, 0.0);
        const double got = uni.segmentation_score(uni.segment_unigram(cps));
        viterbi_ok += std::abs(got - best) <= 1e-9 * std::max(1.0, std::abs(best));
    }

    const bool pass = bpe.size() == bpe_size && uni.size() == unigram_size && roundtrip_ok == held_out &&
                      viterbi_ok == words;
    return {pass, "bpe " + std::to_string(bpe.size()) + "/" + std::to_string(bpe_size) + " (" + fmt(bpe_secs, 1) +
                      " s), unigram " + std::to_string(uni.size()) + "/" + std::to_string(unigram_size) + " (" +
                      fmt(uni_secs, 1) + " s), roundtrip " + std::to_string(roundtrip_ok) + "/" +
                      std::to_string(held_out) + ", viterbi optimal " + std::to_string(viterbi_ok) + "/" +
                      std::to_string(words)};
}

// 4. Dedup recall, false merges and MinHash estimation error.
Outcome criterion_dedup() {
    synth::Lexicon lex(20'000, 401);
    synth::Rng rng(402);
    std::vector<Document> docs = synth::corpus(lex, 10'000, rng);
    const DedupConfig cfg;
    DocId next_id = 100'000;

    std::vector<std::pair<DocId, DocId>> exact_planted, near_planted;  // (original, copy)
    std::set<std::size_t> used;
    while (exact_planted.size() < 100) {
        const std::size_t i = synth::uniform(rng, 0, 9'999);
        if (!used.insert(i).second) continue;
        auto w = split_words(docs[i].text);
        std::string text;
        for (const auto& x : w) text += "  " + x;
        text[2] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[2])));
        docs.push_back({next_id, "", text + " ", {}});
        exact_planted.emplace_back(docs[i].id, next_id++);
    }
    std::vector<std::pair<std::string, std::string>> near_texts;
    while (near_planted.size() < 100) {
        const std::size_t i = synth::uniform(rng, 0, 9'999);
        auto w = split_words(docs[i].text);
        if (w.size() < 120 || used.count(i)) continue;
        w[synth::uniform(rng, 0, w.size() - 1)] = "mutada" + std::to_string(next_id);
        const std::string text = join_words(w);
        if (oracle::shingle_jaccard(normalize_for_hash(docs[i].text), normalize_for_hash(text), cfg.shingle_words) < 0.9) {
            continue;
        }
        used.insert(i);
        docs.push_back({next_id, "", text, {}});
        near_texts.emplace_back(docs[i].text, text);
        near_planted.emplace_back(docs[i].id, next_id++);
    }

    std::vector<DedupEntry> entries;
    std::map<DocId, const Document*> by_id;
    for (const auto& d : docs) entries.push_back(fingerprint(d, cfg)), by_id[d.id] = &d;
    const DedupResolution res = resolve_duplicates(entries, cfg);
    std::map<DocId, DocId> kept_for(res.removed.begin(), res.removed.end());
    const auto root = [&](DocId id) {
        const auto it = kept_for.find(id);
        return it == kept_for.end() ? id : it->second;
    };

    std::size_t exact_hits = 0, near_hits = 0;
    for (const auto& [orig, copy] : exact_planted) exact_hits += kept_for.count(copy) && root(copy) == root(orig);
    for (const auto& [orig, copy] : near_planted) near_hits += kept_for.count(copy) && root(copy) == root(orig);

    std::size_t false_merges = 0;
    for (const auto& [removed, kept] : res.removed) {
        const double j = oracle::shingle_jaccard(normalize_for_hash(by_id.at(removed)->text),
                                                 normalize_for_hash(by_id.at(kept)->text), cfg.shingle_words);
        false_merges += j < cfg.threshold();
    }
    const double false_rate = res.removed.empty() ? 0.0 : static_cast<double>(false_merges) / res.removed.size();

    // 900 uniformly drawn corpus pairs plus the 100 planted near pairs.
    std::size_t within = 0;
    const auto estimate_error = [&](const std::string& a, const std::string& b) {
        const auto sa = minhash_signature(Document{0, "", a, {}}, cfg);
        const auto sb = minhash_signature(Document{1, "", b, {}}, cfg);
        const double j = oracle::shingle_jaccard(normalize_for_hash(a), normalize_for_hash(b), cfg.shingle_words);
        return std::abs(signature_agreement(*sa, *sb) - j);
    };
    for (int k = 0; k < 900; ++k) {
        const auto& a = docs[synth::uniform(rng, 0, 9'999)].text;
        const auto& b = docs[synth::uniform(rng, 0, 9'999)].text;
        within += estimate_error(a, b) <= 0.06;
    }
    for (const auto& [a, b] : near_texts) within += estimate_error(a, b) <= 0.06;
    const double coverage = within / 1000.0;

    const bool pass = exact_hits == 100 && near_hits >= 95 && false_rate <= 0.01 && coverage >= 0.95;
    return {pass, "exact recall " + std::to_string(exact_hits) + "/100, near recall " + std::to_string(near_hits) +
                      "/100, false merges " + std::to_string(false_merges) + "/" + std::to_string(res.removed.size()) +
                      ", minhash error <= 0.06 on " + fmt(coverage * 100, 1) + "% of pairs"};
}

// 5. Language identification accuracy and the Spanish gate.
Outcome criterion_langid() {
    const auto model = seed_language_model();
    synth::Rng rng(501);
    std::size_t correct = 0, total = 0;
    for (const auto& [lang, words] : synth::language_words()) {
        for (int i = 0; i < 1000; ++i) {
            const std::string s = synth::language_sentence(lang, rng, 40);
            correct += model->detect(s).code == lang;
            ++total;
        }
    }
    const double accuracy = static_cast<double>(correct) / total;

    const std::vector<std::string> langs{"es", "es", "en", "pt", "fr", "de"};
    Cleaner cleaner(CleanConfig{}, SentenceSplitter{}, model);
    std::size_t kept = 0, kept_es = 0, es_total = 0;
    for (int i = 0; i < 3000; ++i) {
        const std::string& lang = langs[synth::uniform(rng, 0, langs.size() - 1)];
        std::string text;
        for (std::size_t s = synth::uniform(rng, 3, 6); s > 0; --s) text += synth::language_sentence(lang, rng) + " ";
        Document d{static_cast<DocId>(i), "", text, {}};
        es_total += lang == "es";
        if (cleaner(d).accepted) {
            ++kept;
            kept_es += lang == "es";
        }
    }
    const double precision = kept == 0 ? 0.0 : static_cast<double>(kept_es) / kept;
    const bool pass = accuracy >= 0.97 && precision >= 0.95 && kept > 0;
    return {pass, "held-out accuracy " + fmt(accuracy) + ", gate precision " + fmt(precision) + " (kept " +
                      std::to_string(kept) + ", spanish recall " +
                      fmt(es_total ? static_cast<double>(kept_es) / es_total : 0.0) + ")"};
}

// 6. Encoding repair.
Outcome criterion_encoding() {
    synth::Rng rng(601);
    std::size_t idempotent = 0;
    for (int i = 0; i < 10'000; ++i) {
        const std::string once = fix_encoding(synth::random_text(rng, 60));
        idempotent += fix_encoding(once) == once;
    }
    static const std::vector<std::string> accents{"á", "é", "í", "ó", "ú", "ñ", "Ñ", "ü", "¿", "¡", "«", "»",
                                                  "€", "“", "”", "‘", "’", "É", "Á", "ç", "º", "ª", "°"};
    std::size_t repaired = 0, cases = 0, ambiguous = 0;
    while (cases < 2000) {
        std::string s = synth::language_sentence("es", rng, 20);
        for (std::size_t k = synth::uniform(rng, 1, 6); k > 0; --k) {
            const std::size_t at = synth::uniform(rng, 0, s.size());
            if (at < s.size() && (static_cast<unsigned char>(s[at]) & 0xC0) == 0x80) continue;
            s.insert(at, accents[synth::uniform(rng, 0, accents.size() - 1)]);
        }
        if (!unicode::is_nfkc(s) || !synth::cp1252_encodable(s)) continue;
        if (synth::reads_as_mojibake(s)) {
            ++ambiguous;
            continue;
        }
        ++cases;
        repaired += fix_encoding(synth::mojibake(s)) == s;
    }
    const std::vector<std::pair<std::string, std::string>> vectors{
        {"\xEF\xAC\x81n", "fin"}, {"\xEF\xBC\x91\xEF\xBC\x92\xEF\xBC\x93", "123"}, {"caf\x65\xCC\x81", "café"}};
    std::size_t vec_ok = 0;
    for (const auto& [in, want] : vectors) vec_ok += fix_encoding(in) == want && unicode::nfkc(in) == want;
    const bool pass = idempotent == 10'000 && repaired == cases && vec_ok == vectors.size();
    return {pass, "idempotent " + std::to_string(idempotent) + "/10000, mojibake repaired " + std::to_string(repaired) +
                      "/" + std::to_string(cases) + " (" + std::to_string(ambiguous) +
                      " ambiguous originals excluded), nfkc vectors " + std::to_string(vec_ok) + "/" +
                      std::to_string(vectors.size())};
}

// 7. Metrics against brute-force oracles.
Outcome criterion_metrics() {
    synth::Rng rng(701);
    static const char* vocab[] = {"el", "la", "gato", "perro", "come", "duerme", "casa", "grande"};
    const auto sentence = [&](std::size_t lo, std::size_t hi) {
        Tokens t(synth::uniform(rng, lo, hi));
        for (auto& w : t) w = vocab[synth::uniform(rng, 0, 7)];
        return t;
    };
    std::size_t agree = 0;
    const std::size_t cases = 100;
    const auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); };
    for (std::size_t c = 0; c < cases; ++c) {
        const Tokens src = sentence(1, 12), cand = sentence(0, 12);
        std::vector<Tokens> refs;
        for (std::size_t k = synth::uniform(rng, 1, 3); k > 0; --k) refs.push_back(sentence(1, 12));
        bool ok = true;
        for (std::size_t n = 1; n <= 2; ++n) ok &= close(rouge_n(cand, refs, n).f1, oracle::rouge_n(cand, refs, n).f);
        ok &= close(rouge_l(cand, refs).f1, oracle::rouge_l(cand, refs).f);
        std::vector<Tokens> cands{cand, sentence(1, 10)};
        std::vector<std::vector<Tokens>> ref_sets{refs, {sentence(1, 10)}};
        ok &= close(corpus_bleu(cands, ref_sets), oracle::bleu(cands, ref_sets, false));
        ok &= close(corpus_bleu(cands, ref_sets, BleuOptions{4, true}), oracle::bleu(cands, ref_sets, true));
        ok &= close(sari_sentence(src, cand, refs).score(), oracle::sari(src, cand, refs));
        const Tokens short_cand(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(cand.size(), 8)));
        const Tokens short_ref(refs[0].begin(), refs[0].begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(refs[0].size(), 8)));
        ok &= close(meteor_lite(short_cand, short_ref), oracle::meteor(short_cand, short_ref));
        ok &= close(token_f1(cand, refs[0]), oracle::token_f1(cand, refs[0]));
        agree += ok;
    }
    std::vector<Tokens> corpus;
    std::vector<std::vector<Tokens>> same;
    for (int i = 0; i < 20; ++i) corpus.push_back(sentence(4, 15)), same.push_back({corpus.back()});
    const double identical_bleu = corpus_bleu(corpus, same);
    double min_rouge = 1.0;
    for (const auto& t : corpus) {
        const std::vector<Tokens> self{t};
        min_rouge = std::min({min_rouge, rouge_n(t, self, 1).f1, rouge_n(t, self, 2).f1, rouge_l(t, self).f1});
    }
    const bool pass = agree == cases && std::abs(identical_bleu - 100.0) <= 1e-9 && std::abs(min_rouge - 1.0) <= 1e-12;
    return {pass, "oracle agreement " + std::to_string(agree) + "/" + std::to_string(cases) + ", identical BLEU " +
                      fmt(identical_bleu, 6) + ", identity ROUGE F1 " + fmt(min_rouge, 6)};
}

// Synthetic pipeline input: pseudo-Spanish documents with language annotations,
// planted duplicates, mojibake and short junk.
void write_pipeline_corpus(const fs::path& path, std::size_t bytes, std::uint64_t seed) {
    synth::Lexicon lex(15'000, seed);
    synth::Rng rng(seed + 1);
    auto docs = synth::corpus_of_size(lex, bytes, rng);
    const std::size_t base = docs.size();
    for (std::size_t i = 0; i < base; ++i) {
        auto& d = docs[i];
        const std::size_t roll = synth::uniform(rng, 0, 99);
        d.meta["lang"] = roll < 5 ? "pt" : "es";
        d.meta["lang_score"] = roll < 8 ? "0.91" : "0.99";
        if (roll == 9) d.text = synth::mojibake(d.text + " Añadió «más» información");
        if (roll == 10) d.text = "corto";
    }
    DocId next = docs.back().id + 1;
    for (std::size_t i = 0; i < base / 50; ++i) {
        Document copy = docs[synth::uniform(rng, 0, base - 1)];
        copy.id = next++;
        docs.push_back(copy);
    }
    std::ofstream out(path, std::ios::binary);
    for (const auto& d : docs) out << serialize_document(d) << '\n';
}

std::map<std::string, std::string> artifact_hashes(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().filename() == "manifest.json") continue;
        out[e.path().filename().string()] = file_sha256(e.path());
    }
    return out;
}

// 8. Worker-count determinism of the full pipeline.
Outcome criterion_determinism() {
    ScratchDir dir;
    write_pipeline_corpus(dir.path / "corpus.jsonl", 10'000'000, 801);
    std::map<std::string, std::string> hashes[2];
    std::string summary;
    const unsigned workers[2] = {1, 8};
    for (int k = 0; k < 2; ++k) {
        auto cfg = PipelineConfig::parse(
            "stages = ingest, clean, dedup, repair, tokenizer, noise\n"
            "seed = 8\n"
            "[tokenizer]\nkind = unigram\nvocab_size = 8000\n"
            "[noise]\nobjective = t5\n");
        cfg.input = dir.path / "corpus.jsonl";
        cfg.output_dir = dir.path / ("w" + std::to_string(workers[k]));
        cfg.workers = workers[k];
        const auto t0 = Clock::now();
        const auto m = run_pipeline(cfg);
        summary += "workers " + std::to_string(workers[k]) + " " + fmt(seconds_since(t0), 1) + " s; ";
        hashes[k] = artifact_hashes(cfg.output_dir);
        if (k == 0) {
            for (const auto& s : m.stages) {
                if (s.name == "noise") summary += "pairs " + s.details.at("pairs") + "; ";
            }
        }
    }
    std::size_t same = 0;
    for (const auto& [name, h] : hashes[0]) same += hashes[1].count(name) && hashes[1].at(name) == h;
    const bool pass = !hashes[0].empty() && same == hashes[0].size() && hashes[0].size() == hashes[1].size();
    return {pass, summary + std::to_string(same) + "/" + std::to_string(hashes[0].size()) + " artifacts identical"};
}

// 9. Clean-stage throughput on one worker.
Outcome criterion_throughput() {
    ScratchDir dir;
    synth::Lexicon lex(20'000, 901);
    synth::Rng rng(902);
    {
        std::ofstream out(dir.path / "big.jsonl", std::ios::binary);
        DocId id = 0;
        std::size_t bytes = 0;
        while (bytes < 100'000'000) {
            const Document d{id++, "", lex.document(rng, 5, 15), {}};
            const std::string line = serialize_document(d);
            out << line << '\n';
            bytes += line.size() + 1;
        }
    }
    const double mb = static_cast<double>(fs::file_size(dir.path / "big.jsonl")) / 1e6;
    const Cleaner cleaner(CleanConfig{}, SentenceSplitter{}, seed_language_model());
    const auto t0 = Clock::now();
    const auto stats = clean_file(dir.path / "big.jsonl", dir.path / "out.jsonl", cleaner, 1);
    const double secs = seconds_since(t0);
    const double rate = mb / secs;
    return {rate >= 10.0, fmt(mb, 1) + " MB in " + fmt(secs, 1) + " s = " + fmt(rate, 2) + " MB/s on 1 worker (" +
                              std::to_string(stats.docs_in) + " docs)"};
}

}  // namespace

int main(int argc, char** argv) {
    struct Criterion {
        int number;
        const char* name;
        bool soft;
        Outcome (*run)();
    };
    const std::vector<Criterion> criteria{
        {1, "noise-rate fidelity", false, criterion_noise_rate},
        {2, "t5 corruption fidelity", false, criterion_t5},
        {3, "tokenizer", false, criterion_tokenizer},
        {4, "dedup", false, criterion_dedup},
        {5, "language filter", false, criterion_langid},
        {6, "encoding repair", false, criterion_encoding},
        {7, "metrics", false, criterion_metrics},
        {8, "determinism", false, criterion_determinism},
        {9, "throughput (soft)", true, criterion_throughput},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

    bool hard_failure = false;
    for (const auto& c : criteria) {
        if (!selected.empty() && !selected.count(c.number)) continue;
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("criterion %d %s: %s | %s\n", c.number, c.name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass && !c.soft) hard_failure = true;
    }
    return hard_failure ? 1 : 0;
}
