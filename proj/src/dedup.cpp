#include "esprep/dedup.hpp"

#include "esprep/error.hpp"
#include "esprep/parallel.hpp"
#include "esprep/unicode.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <unordered_map>

namespace esprep {
namespace {

constexpr char kSigMagic[6] = {'M', 'H', 'S', 'I', 'G', '1'};
constexpr std::size_t kBatch = 2048;

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    // The smaller index always becomes the root, so roots are component minima.
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (b < a) std::swap(a, b);
        parent_[b] = a;
    }

private:
    std::vector<std::size_t> parent_;
};

std::vector<std::uint64_t> permutation_keys(const DedupConfig& cfg) {
    std::vector<std::uint64_t> keys(cfg.num_perms);
    for (std::size_t i = 0; i < cfg.num_perms; ++i) keys[i] = splitmix64(cfg.seed + splitmix64(i));
    return keys;
}

template <typename T>
void put_le(std::ostream& out, T v) {
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::istream& in, const std::filesystem::path& path) {
    unsigned char buf[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) throw DataError("truncated signature file " + path.string());
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
    return v;
}

void annotate(Document& doc, const DedupResolution& res, const std::unordered_map<DocId, std::size_t>& cluster_of,
              const std::vector<DocId>& bypassed) {
    if (auto it = cluster_of.find(doc.id); it != cluster_of.end()) {
        doc.meta["dedup_cluster"] = std::to_string(doc.id);
        doc.meta["dedup_cluster_size"] = std::to_string(res.report.clusters[it->second].size());
    }
    if (std::binary_search(bypassed.begin(), bypassed.end(), doc.id)) doc.meta["near_dedup"] = "bypass";
}

struct Bookkeeping {
    std::unordered_map<DocId, std::size_t> cluster_of;
    std::vector<DocId> bypassed;
};

Bookkeeping bookkeeping(std::span<const DedupEntry> entries, const DedupResolution& res, const DedupConfig& cfg) {
    Bookkeeping b;
    for (std::size_t c = 0; c < res.report.kept.size(); ++c) b.cluster_of.emplace(res.report.kept[c], c);
    if (cfg.mode != DedupMode::exact) {
        for (const auto& e : entries) {
            if (!e.signature) b.bypassed.push_back(e.id);
        }
        std::sort(b.bypassed.begin(), b.bypassed.end());
    }
    return b;
}

std::vector<DedupEntry> fingerprint_all(std::span<const Document> docs, const DedupConfig& cfg, unsigned workers) {
    std::vector<DedupEntry> entries(docs.size());
    parallel_for(docs.size(), workers, [&](std::size_t i) { entries[i] = fingerprint(docs[i], cfg); });
    return entries;
}

DedupResult apply(std::vector<Document> docs, const DedupConfig& cfg, unsigned workers) {
    const std::vector<DedupEntry> entries = fingerprint_all(docs, cfg, workers);
    DedupResolution res = resolve_duplicates(entries, cfg);
    const Bookkeeping b = bookkeeping(entries, res, cfg);
    DedupResult out;
    out.docs.reserve(docs.size() - res.removed.size());
    for (auto& doc : docs) {
        if (res.is_removed(doc.id)) continue;
        annotate(doc, res, b.cluster_of, b.bypassed);
        out.docs.push_back(std::move(doc));
    }
    out.report = std::move(res.report);
    return out;
}

}  // namespace

std::string normalize_for_hash(std::string_view text) {
    return unicode::collapse_whitespace(unicode::to_lower(unicode::nfkc(text)));
}

DedupMode parse_dedup_mode(std::string_view name) {
    if (name == "exact") return DedupMode::exact;
    if (name == "near") return DedupMode::near;
    if (name == "both") return DedupMode::both;
    throw ConfigError("unknown dedup mode '" + std::string(name) + "' (expected exact, near or both)");
}

std::string_view to_string(DedupMode mode) {
    switch (mode) {
        case DedupMode::exact: return "exact";
        case DedupMode::near: return "near";
        case DedupMode::both: return "both";
    }
    return "both";
}

void DedupConfig::validate() const {
    if (shingle_words == 0 || num_perms == 0 || bands == 0 || rows == 0) {
        throw ConfigError("dedup shingle_words, num_perms, bands and rows must be positive");
    }
    if (bands * rows != num_perms) {
        throw ConfigError("dedup bands x rows (" + std::to_string(bands) + " x " + std::to_string(rows) +
                          ") must equal num_perms (" + std::to_string(num_perms) + ")");
    }
}

double DedupConfig::threshold() const {
    return std::pow(1.0 / static_cast<double>(bands), 1.0 / static_cast<double>(rows));
}

std::vector<std::uint64_t> shingle_hashes(std::string_view normalized, std::size_t k) {
    std::vector<std::size_t> starts;
    std::vector<std::size_t> ends;
    std::size_t pos = 0;
    while (pos < normalized.size()) {
        while (pos < normalized.size() && normalized[pos] == ' ') ++pos;
        if (pos >= normalized.size()) break;
        starts.push_back(pos);
        while (pos < normalized.size() && normalized[pos] != ' ') ++pos;
        ends.push_back(pos);
    }
    std::vector<std::uint64_t> hashes;
    if (k == 0 || starts.size() < k) return hashes;
    hashes.reserve(starts.size() - k + 1);
    for (std::size_t i = 0; i + k <= starts.size(); ++i) {
        hashes.push_back(hash64(normalized.substr(starts[i], ends[i + k - 1] - starts[i])));
    }
    std::sort(hashes.begin(), hashes.end());
    hashes.erase(std::unique(hashes.begin(), hashes.end()), hashes.end());
    return hashes;
}

std::optional<MinHashSignature> minhash_from_normalized(DocId id, std::string_view normalized,
                                                        const DedupConfig& cfg) {
    const std::vector<std::uint64_t> shingles = shingle_hashes(normalized, cfg.shingle_words);
    if (shingles.empty()) return std::nullopt;
    const std::vector<std::uint64_t> keys = permutation_keys(cfg);
    MinHashSignature sig{id, std::vector<std::uint64_t>(cfg.num_perms, std::numeric_limits<std::uint64_t>::max())};
    for (std::uint64_t h : shingles) {
        for (std::size_t i = 0; i < keys.size(); ++i) {
            const std::uint64_t v = fmix64(h ^ keys[i]);
            if (v < sig.values[i]) sig.values[i] = v;
        }
    }
    return sig;
}

std::optional<MinHashSignature> minhash_signature(const Document& doc, const DedupConfig& cfg) {
    return minhash_from_normalized(doc.id, normalize_for_hash(doc.text), cfg);
}

double signature_agreement(const MinHashSignature& a, const MinHashSignature& b) {
    if (a.values.size() != b.values.size() || a.values.empty()) {
        throw std::invalid_argument("signatures must be nonempty and of equal length");
    }
    std::size_t same = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i) same += a.values[i] == b.values[i];
    return static_cast<double>(same) / static_cast<double>(a.values.size());
}

DedupEntry fingerprint(const Document& doc, const DedupConfig& cfg) {
    DedupEntry e;
    e.id = doc.id;
    const std::string normalized = normalize_for_hash(doc.text);
    e.digest = sha256(normalized);
    if (cfg.mode != DedupMode::exact) e.signature = minhash_from_normalized(doc.id, normalized, cfg);
    return e;
}

bool DedupResolution::is_removed(DocId id) const {
    const auto it = std::lower_bound(removed.begin(), removed.end(), std::pair<DocId, DocId>{id, 0});
    return it != removed.end() && it->first == id;
}

DedupResolution resolve_duplicates(std::span<const DedupEntry> entries, const DedupConfig& cfg) {
    if (cfg.mode != DedupMode::exact) cfg.validate();

    std::vector<std::size_t> order(entries.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return entries[a].id < entries[b].id; });
    for (std::size_t i = 1; i < order.size(); ++i) {
        if (entries[order[i]].id == entries[order[i - 1]].id) {
            throw DataError("duplicate document id " + std::to_string(entries[order[i]].id));
        }
    }
    auto entry = [&](std::size_t rank) -> const DedupEntry& { return entries[order[rank]]; };

    const std::size_t n = entries.size();
    UnionFind uf(n);
    std::vector<bool> representative(n, true);
    DedupResolution res;
    res.report.mode = cfg.mode;

    if (cfg.mode != DedupMode::near) {
        std::unordered_map<std::string_view, std::size_t> first_seen;
        for (std::size_t r = 0; r < n; ++r) {
            const auto& d = entry(r).digest;
            const std::string_view key(reinterpret_cast<const char*>(d.data()), d.size());
            auto [it, inserted] = first_seen.emplace(key, r);
            if (!inserted) {
                uf.unite(it->second, r);
                representative[r] = false;
            }
        }
    }

    if (cfg.mode != DedupMode::exact) {
        const double threshold = cfg.threshold();
        std::vector<std::pair<std::uint64_t, std::size_t>> buckets;
        for (std::size_t band = 0; band < cfg.bands; ++band) {
            buckets.clear();
            for (std::size_t r = 0; r < n; ++r) {
                const auto& sig = entry(r).signature;
                if (!representative[r] || !sig) continue;
                if (sig->values.size() != cfg.num_perms) {
                    throw ConfigError("signature length " + std::to_string(sig->values.size()) +
                                      " does not match num_perms");
                }
                std::uint64_t key = splitmix64(band);
                for (std::size_t row = 0; row < cfg.rows; ++row) key = mix_seed(key, sig->values[band * cfg.rows + row]);
                buckets.emplace_back(key, r);
            }
            std::sort(buckets.begin(), buckets.end());
            for (std::size_t lo = 0; lo < buckets.size();) {
                std::size_t hi = lo + 1;
                while (hi < buckets.size() && buckets[hi].first == buckets[lo].first) ++hi;
                for (std::size_t a = lo; a < hi; ++a) {
                    for (std::size_t b = a + 1; b < hi; ++b) {
                        const std::size_t ra = buckets[a].second;
                        const std::size_t rb = buckets[b].second;
                        if (uf.find(ra) == uf.find(rb)) continue;
                        ++res.report.estimated_pairs_checked;
                        if (signature_agreement(*entry(ra).signature, *entry(rb).signature) >= threshold) {
                            uf.unite(ra, rb);
                        }
                    }
                }
                lo = hi;
            }
        }
        for (std::size_t r = 0; r < n; ++r) res.report.bypassed += !entry(r).signature;
    }

    std::vector<std::vector<std::size_t>> members(n);
    for (std::size_t r = 0; r < n; ++r) members[uf.find(r)].push_back(r);
    for (std::size_t root = 0; root < n; ++root) {
        if (members[root].size() < 2) continue;
        std::vector<DocId> cluster;
        for (std::size_t r : members[root]) cluster.push_back(entry(r).id);
        res.report.kept.push_back(cluster.front());
        for (std::size_t i = 1; i < cluster.size(); ++i) res.removed.emplace_back(cluster[i], cluster.front());
        res.report.clusters.push_back(std::move(cluster));
    }
    std::sort(res.removed.begin(), res.removed.end());
    res.report.removed_count = res.removed.size();
    return res;
}

DedupResult exact_dedup(std::vector<Document> docs) {
    DedupConfig cfg;
    cfg.mode = DedupMode::exact;
    return apply(std::move(docs), cfg, 1);
}

DedupResult near_dedup(std::vector<Document> docs, const DedupConfig& cfg, unsigned workers) {
    DedupConfig near_cfg = cfg;
    near_cfg.mode = DedupMode::near;
    near_cfg.validate();
    return apply(std::move(docs), near_cfg, workers);
}

DedupResult deduplicate(std::vector<Document> docs, const DedupConfig& cfg, unsigned workers) {
    if (cfg.mode != DedupMode::exact) cfg.validate();
    return apply(std::move(docs), cfg, workers);
}

std::string DedupReport::to_json() const {
    nlohmann::ordered_json j;
    j["mode"] = std::string(esprep::to_string(mode));
    j["removed_count"] = removed_count;
    j["estimated_pairs_checked"] = estimated_pairs_checked;
    j["bypassed"] = bypassed;
    j["kept"] = kept;
    j["clusters"] = clusters;
    return j.dump();
}

DedupFileResult dedup_file(const std::filesystem::path& input, const std::filesystem::path& output,
                           const DedupConfig& cfg, unsigned workers,
                           const std::optional<std::filesystem::path>& signatures_path) {
    if (cfg.mode != DedupMode::exact) cfg.validate();

    std::vector<DedupEntry> entries;
    std::uint64_t bytes_in = 0;
    {
        CorpusReader reader(input);
        std::vector<Document> batch;
        auto flush = [&] {
            auto fp = fingerprint_all(batch, cfg, workers);
            std::move(fp.begin(), fp.end(), std::back_inserter(entries));
            batch.clear();
        };
        while (auto doc = reader.next()) {
            batch.push_back(std::move(*doc));
            if (batch.size() == kBatch) flush();
        }
        flush();
        bytes_in = reader.bytes_read();
    }
    const DedupResolution res = resolve_duplicates(entries, cfg);
    const Bookkeeping b = bookkeeping(entries, res, cfg);

    if (signatures_path) {
        std::vector<MinHashSignature> sigs;
        for (const auto& e : entries) {
            if (e.signature) sigs.push_back(*e.signature);
        }
        write_signatures(*signatures_path, sigs, cfg.num_perms);
    }

    // Removal reason: exact when the removed text hashes identically to its keeper.
    std::unordered_map<DocId, const DedupEntry*> by_id;
    for (const auto& e : entries) by_id.emplace(e.id, &e);

    CorpusWriter writer(output);
    CorpusReader reader(input);
    CorpusStats stats;
    while (auto doc = reader.next()) {
        ++stats.docs_in;
        const auto it = std::lower_bound(res.removed.begin(), res.removed.end(), std::pair<DocId, DocId>{doc->id, 0});
        if (it != res.removed.end() && it->first == doc->id) {
            const bool exact = by_id.at(it->first)->digest == by_id.at(it->second)->digest;
            ++stats.rejects_by_rule[exact ? "exact_duplicate" : "near_duplicate"];
            continue;
        }
        annotate(*doc, res, b.cluster_of, b.bypassed);
        writer.write(*doc);
    }
    const CorpusStats written = writer.close();
    stats.docs_out = written.docs_out;
    stats.bytes_in = bytes_in;
    stats.bytes_out = written.bytes_out;
    return {res.report, stats};
}

void write_signatures(const std::filesystem::path& path, std::span<const MinHashSignature> sigs,
                      std::size_t num_perms) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write signatures to " + path.string());
    out.write(kSigMagic, sizeof kSigMagic);
    put_le<std::uint64_t>(out, sigs.size());
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(num_perms));
    for (const auto& sig : sigs) {
        if (sig.values.size() != num_perms) throw ConfigError("signature length does not match num_perms");
        put_le<std::uint64_t>(out, sig.doc_id);
        for (std::uint64_t v : sig.values) put_le<std::uint64_t>(out, v);
    }
    if (!out) throw IoError("write failure on " + path.string());
}

std::vector<MinHashSignature> read_signatures(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open signatures " + path.string());
    char magic[sizeof kSigMagic];
    if (!in.read(magic, sizeof magic) || !std::equal(magic, magic + sizeof magic, kSigMagic)) {
        throw DataError(path.string() + " is not an MHSIG1 file");
    }
    const auto count = get_le<std::uint64_t>(in, path);
    const auto num_perms = get_le<std::uint32_t>(in, path);
    std::vector<MinHashSignature> sigs;
    sigs.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 20)));
    for (std::uint64_t i = 0; i < count; ++i) {
        MinHashSignature sig;
        sig.doc_id = get_le<std::uint64_t>(in, path);
        sig.values.resize(num_perms);
        for (auto& v : sig.values) v = get_le<std::uint64_t>(in, path);
        sigs.push_back(std::move(sig));
    }
    return sigs;
}

}  // namespace esprep
