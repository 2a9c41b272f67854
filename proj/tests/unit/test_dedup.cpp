#include "esprep/dedup.hpp"
#include "esprep/error.hpp"

#include "oracles.hpp"
#include "synth.hpp"
#include "temp_dir.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace esprep;

namespace {

std::vector<std::string> split_words(const std::string& s) {
    std::istringstream ss(s);
    std::vector<std::string> out;
    std::string w;
    while (ss >> w) out.push_back(w);
    return out;
}

std::string join_words(const std::vector<std::string>& w) {
    std::string out;
    for (const auto& x : w) out += (out.empty() ? "" : " ") + x;
    return out;
}

// Two texts over unique tokens whose 1-word shingle sets have Jaccard a/(a+b+c).
std::pair<std::string, std::string> jaccard_pair(std::size_t shared, std::size_t only_a, std::size_t only_b,
                                                 std::size_t salt) {
    std::vector<std::string> a, b;
    for (std::size_t i = 0; i < shared; ++i) {
        a.push_back("s" + std::to_string(salt) + "x" + std::to_string(i));
        b.push_back(a.back());
    }
    for (std::size_t i = 0; i < only_a; ++i) a.push_back("a" + std::to_string(salt) + "x" + std::to_string(i));
    for (std::size_t i = 0; i < only_b; ++i) b.push_back("b" + std::to_string(salt) + "x" + std::to_string(i));
    return {join_words(a), join_words(b)};
}

}  // namespace

TEST_SUITE("dedup") {

TEST_CASE("normalize_for_hash examples") {
    CHECK(normalize_for_hash("Hola   MUNDO ") == "hola mundo");
    CHECK(normalize_for_hash("").empty());
    CHECK(normalize_for_hash("\xEF\xAC\x81n") == "fin");
}

TEST_CASE("exact dedup keeps the lowest id and input order") {
    std::vector<Document> docs{{5, "", "x", {}}, {2, "", "y", {}}, {3, "", "x", {}}, {9, "", "Hola  mundo", {}},
                               {7, "", "hola mundo", {}}};
    const auto res = exact_dedup(docs);
    std::vector<DocId> ids;
    for (const auto& d : res.docs) ids.push_back(d.id);
    CHECK(ids == std::vector<DocId>{2, 3, 7});
    CHECK(res.report.removed_count == 2);
    REQUIRE(res.report.clusters.size() == 2);
    CHECK(res.report.clusters[0] == std::vector<DocId>{3, 5});
    CHECK(res.report.kept[0] == 3);
    CHECK(res.report.clusters[1] == std::vector<DocId>{7, 9});
}

TEST_CASE("distinct corpus is unchanged and exact dedup is idempotent") {
    synth::Lexicon lex(3000, 2);
    synth::Rng rng(1);
    auto docs = synth::corpus(lex, 200, rng);
    docs.push_back(docs[17]);
    docs.back().id = 1000;
    const auto once = exact_dedup(docs);
    CHECK(once.docs.size() == 200);
    const auto twice = exact_dedup(once.docs);
    CHECK(twice.docs == once.docs);
    CHECK(twice.report.removed_count == 0);
}

TEST_CASE("signatures are deterministic and sized") {
    DedupConfig cfg;
    const Document d{1, "", "uno dos tres cuatro cinco seis siete", {}};
    const auto a = minhash_signature(d, cfg), b = minhash_signature(d, cfg);
    REQUIRE(a);
    CHECK(a->values.size() == 128);
    CHECK(*a == *b);
    cfg.seed = 99;
    CHECK(minhash_signature(d, cfg)->values != a->values);
}

TEST_CASE("short documents bypass near dedup") {
    CHECK_FALSE(minhash_signature(Document{1, "", "solo tres palabras", {}}, DedupConfig{}).has_value());
}

TEST_CASE("disjoint shingle sets almost never agree") {
    DedupConfig cfg;
    cfg.shingle_words = 1;
    const auto [a, b] = jaccard_pair(0, 60, 60, 1);
    const auto sa = minhash_signature(Document{1, "", a, {}}, cfg), sb = minhash_signature(Document{2, "", b, {}}, cfg);
    CHECK(signature_agreement(*sa, *sb) == 0.0);
}

TEST_CASE("agreement is an unbiased Jaccard estimate with binomial spread") {
    // J = 0.5 exactly. With 128 permutations the agreement count is Binomial(128, 0.5):
    // P(|X/128 - 0.5| <= 0.06) = P(57 <= X <= 71) ~= 0.815, and the mean error vanishes.
    DedupConfig cfg;
    cfg.shingle_words = 1;
    const int pairs = 1000;
    double bias = 0;
    int within = 0;
    for (int i = 0; i < pairs; ++i) {
        const auto [a, b] = jaccard_pair(40, 20, 20, static_cast<std::size_t>(i));
        REQUIRE(oracle::shingle_jaccard(a, b, 1) == doctest::Approx(0.5));
        const auto sa = minhash_signature(Document{1, "", a, {}}, cfg);
        const auto sb = minhash_signature(Document{2, "", b, {}}, cfg);
        const double est = signature_agreement(*sa, *sb);
        bias += est - 0.5;
        within += std::abs(est - 0.5) <= 0.06 + 1e-12;
    }
    bias /= pairs;
    const double coverage = within / static_cast<double>(pairs);
    CHECK(std::abs(bias) <= 0.02);
    // Binomial coverage 0.815 with sd ~0.012 over 1000 pairs.
    CHECK(coverage >= 0.77);
    CHECK(coverage <= 0.86);
}

TEST_CASE("invalid banding is a configuration error") {
    DedupConfig cfg;
    cfg.bands = 10;
    cfg.rows = 10;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK_THROWS_AS(near_dedup({}, cfg), ConfigError);
    CHECK(DedupConfig{}.threshold() == doctest::Approx(std::pow(1.0 / 16, 1.0 / 8)));
}

TEST_CASE("planted near duplicate is clustered and the higher id removed") {
    synth::Lexicon lex(3000, 5);
    synth::Rng rng(8);
    auto docs = synth::corpus(lex, 300, rng);
    std::string base;
    while (split_words(base).size() < 200) base += lex.document(rng) + " ";
    auto words = split_words(base);
    docs.push_back({500, "", join_words(words), {}});
    words[words.size() / 2] = "palabracambiada";
    docs.push_back({400, "", join_words(words), {}});
    REQUIRE(oracle::shingle_jaccard(normalize_for_hash(docs[300].text), normalize_for_hash(docs[301].text), 5) >= 0.95);
    const auto res = near_dedup(docs, DedupConfig{});
    CHECK(res.report.removed_count == 1);
    bool found = false;
    for (const auto& c : res.report.clusters) {
        if (c == std::vector<DocId>{400, 500}) found = true;
    }
    CHECK(found);
    for (const auto& d : res.docs) CHECK(d.id != 500);
}

TEST_CASE("transitive chain collapses to one survivor") {
    synth::Lexicon lex(3000, 6);
    synth::Rng rng(9);
    std::string base;
    while (split_words(base).size() < 300) base += lex.document(rng) + " ";
    auto w = split_words(base);
    std::vector<Document> docs;
    docs.push_back({30, "", join_words(w), {}});
    w[50] = "cambiouno";
    docs.push_back({10, "", join_words(w), {}});
    w[250] = "cambiodos";
    docs.push_back({20, "", join_words(w), {}});
    const auto res = near_dedup(docs, DedupConfig{});
    REQUIRE(res.docs.size() == 1);
    CHECK(res.docs[0].id == 10);
    CHECK(res.report.kept == std::vector<DocId>{10});
}

TEST_CASE("result does not depend on input order or workers") {
    synth::Lexicon lex(2000, 7);
    synth::Rng rng(10);
    auto docs = synth::corpus(lex, 400, rng);
    for (int i = 0; i < 20; ++i) {
        Document d = docs[static_cast<std::size_t>(i * 7)];
        d.id = 1000 + static_cast<DocId>(i);
        auto words = split_words(d.text);
        if (words.size() > 30) words[words.size() - 3] = "otra";
        d.text = join_words(words);
        docs.push_back(d);
    }
    const auto a = deduplicate(docs, DedupConfig{}, 1);
    std::reverse(docs.begin(), docs.end());
    const auto b = deduplicate(docs, DedupConfig{}, 4);
    CHECK(a.report.to_json() == b.report.to_json());
}

TEST_CASE("file dedup matches in-memory dedup and annotates survivors") {
    TempDir dir;
    synth::Lexicon lex(2000, 12);
    synth::Rng rng(13);
    auto docs = synth::corpus(lex, 300, rng);
    docs.push_back({900, "", docs[3].text, {}});
    docs.push_back({901, "", "muy corto", {}});
    write_corpus(docs, dir / "in.jsonl");
    const auto res = dedup_file(dir / "in.jsonl", dir / "out.jsonl", DedupConfig{}, 2, dir / "sigs.bin");
    CHECK(res.stats.docs_in == 302);
    CHECK(res.stats.docs_out == 301);
    CHECK(res.stats.rejects_by_rule.at("exact_duplicate") == 1);
    CHECK(res.stats.balanced());
    const auto out = read_all(dir / "out.jsonl");
    bool bypass_flagged = false;
    for (const auto& d : out) {
        if (d.id == 901) bypass_flagged = d.meta.count("near_dedup") && d.meta.at("near_dedup") == "bypass";
        if (d.id == 3) CHECK(d.meta.at("dedup_cluster_size") == "2");
    }
    CHECK(bypass_flagged);
    CHECK(res.report.to_json() == deduplicate(docs, DedupConfig{}).report.to_json());
}

TEST_CASE("MHSIG1 roundtrip") {
    TempDir dir;
    std::vector<MinHashSignature> sigs{{3, {1, 2, 3, 4}}, {9, {UINT64_MAX, 0, 7, 8}}};
    write_signatures(dir / "s.bin", sigs, 4);
    CHECK(read_signatures(dir / "s.bin") == sigs);
    const std::string raw = read_file(dir / "s.bin");
    CHECK(raw.substr(0, 6) == "MHSIG1");
    CHECK(raw.size() == 6 + 8 + 4 + 2 * (8 + 4 * 8));
    write_file(dir / "bad.bin", "NOTSIG");
    CHECK_THROWS(read_signatures(dir / "bad.bin"));
}

}
