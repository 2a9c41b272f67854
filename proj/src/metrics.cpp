#include "esprep/metrics.hpp"

#include "esprep/error.hpp"
#include "esprep/unicode.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <unordered_map>

namespace esprep {

Tokens EvalTokenizer::operator()(std::string_view text) const {
    const std::u32string cps = unicode::decode(unicode::to_lower(unicode::nfkc(text)));
    Tokens out;
    std::u32string word;
    auto flush = [&] {
        if (!word.empty()) out.push_back(unicode::encode(word));
        word.clear();
    };
    for (char32_t cp : cps) {
        if (unicode::is_alnum_or_mark(cp)) {
            word += cp;
        } else {
            flush();
            if (!unicode::is_space(cp)) out.push_back(unicode::encode(std::u32string(1, cp)));
        }
    }
    flush();
    return out;
}

Tokens eval_tokenize(std::string_view text) { return EvalTokenizer{}(text); }

namespace {

using NgramCounts = std::map<std::string, double>;

NgramCounts ngrams(const Tokens& tokens, std::size_t n) {
    NgramCounts out;
    if (n == 0 || tokens.size() < n) return out;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string key = tokens[i];
        for (std::size_t k = 1; k < n; ++k) {
            key += '\x1f';
            key += tokens[i + k];
        }
        out[key] += 1.0;
    }
    return out;
}

double f1_of(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

Prf best_of(const std::vector<Prf>& scores) {
    Prf best = scores.front();
    for (const auto& s : scores) {
        if (s.f1 > best.f1) best = s;
    }
    return best;
}

void require_references(std::size_t count) {
    if (count == 0) throw ConfigError("at least one reference is required");
}

std::vector<Tokens> tokenize_all(std::span<const std::string> texts) {
    std::vector<Tokens> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(eval_tokenize(t));
    return out;
}

}  // namespace

Prf rouge_n(const Tokens& candidate, std::span<const Tokens> references, std::size_t n) {
    require_references(references.size());
    if (n == 0) throw ConfigError("rouge order must be at least 1");
    const NgramCounts cand = ngrams(candidate, n);
    double cand_total = 0.0;
    for (const auto& [g, c] : cand) cand_total += c;
    std::vector<Prf> scores;
    for (const auto& ref : references) {
        const NgramCounts r = ngrams(ref, n);
        double ref_total = 0.0, overlap = 0.0;
        for (const auto& [g, c] : r) {
            ref_total += c;
            if (const auto it = cand.find(g); it != cand.end()) overlap += std::min(c, it->second);
        }
        Prf s;
        s.precision = cand_total > 0.0 ? overlap / cand_total : 0.0;
        s.recall = ref_total > 0.0 ? overlap / ref_total : 0.0;
        s.f1 = f1_of(s.precision, s.recall);
        scores.push_back(s);
    }
    return best_of(scores);
}

Prf rouge_n(std::string_view candidate, std::span<const std::string> references, std::size_t n) {
    const auto refs = tokenize_all(references);
    return rouge_n(eval_tokenize(candidate), refs, n);
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
    std::vector<std::size_t> row(b.size() + 1, 0), prev(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            row[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], row[j - 1]);
        }
        std::swap(row, prev);
    }
    return prev[b.size()];
}

Prf rouge_l(const Tokens& candidate, std::span<const Tokens> references) {
    require_references(references.size());
    std::vector<Prf> scores;
    for (const auto& ref : references) {
        const auto lcs = static_cast<double>(lcs_length(candidate, ref));
        Prf s;
        s.precision = candidate.empty() ? 0.0 : lcs / static_cast<double>(candidate.size());
        s.recall = ref.empty() ? 0.0 : lcs / static_cast<double>(ref.size());
        s.f1 = f1_of(s.precision, s.recall);
        scores.push_back(s);
    }
    return best_of(scores);
}

Prf rouge_l(std::string_view candidate, std::span<const std::string> references) {
    const auto refs = tokenize_all(references);
    return rouge_l(eval_tokenize(candidate), refs);
}

BleuCounts bleu_counts(std::span<const Tokens> candidates, std::span<const std::vector<Tokens>> reference_sets,
                       std::size_t max_order) {
    if (candidates.empty()) throw DataError("bleu needs at least one candidate");
    if (candidates.size() != reference_sets.size()) {
        throw DataError("bleu: " + std::to_string(candidates.size()) + " candidates but " +
                        std::to_string(reference_sets.size()) + " reference sets");
    }
    if (max_order == 0) throw ConfigError("bleu order must be at least 1");
    BleuCounts counts;
    counts.matches.assign(max_order, 0);
    counts.totals.assign(max_order, 0);
    for (std::size_t s = 0; s < candidates.size(); ++s) {
        const auto& cand = candidates[s];
        const auto& refs = reference_sets[s];
        require_references(refs.size());
        counts.sys_len += cand.size();
        std::size_t closest = refs.front().size();
        for (const auto& r : refs) {
            const auto d = [&](std::size_t len) { return len > cand.size() ? len - cand.size() : cand.size() - len; };
            if (d(r.size()) < d(closest) || (d(r.size()) == d(closest) && r.size() < closest)) closest = r.size();
        }
        counts.ref_len += closest;
        for (std::size_t n = 1; n <= max_order; ++n) {
            const NgramCounts c = ngrams(cand, n);
            NgramCounts max_ref;
            for (const auto& r : refs) {
                for (const auto& [g, k] : ngrams(r, n)) max_ref[g] = std::max(max_ref[g], k);
            }
            for (const auto& [g, k] : c) {
                counts.totals[n - 1] += static_cast<std::uint64_t>(k);
                if (const auto it = max_ref.find(g); it != max_ref.end()) {
                    counts.matches[n - 1] += static_cast<std::uint64_t>(std::min(k, it->second));
                }
            }
        }
    }
    return counts;
}

double bleu_from_counts(const BleuCounts& counts, const BleuOptions& opts) {
    if (counts.sys_len == 0) return 0.0;
    double log_sum = 0.0;
    for (std::size_t n = 0; n < counts.matches.size(); ++n) {
        auto m = static_cast<double>(counts.matches[n]);
        auto t = static_cast<double>(counts.totals[n]);
        if (opts.smooth && n > 0) {
            m += 1.0;
            t += 1.0;
        }
        if (m == 0.0 || t == 0.0) return 0.0;
        log_sum += std::log(m / t);
    }
    const auto c = static_cast<double>(counts.sys_len);
    const auto r = static_cast<double>(counts.ref_len);
    const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
    return 100.0 * bp * std::exp(log_sum / static_cast<double>(counts.matches.size()));
}

double corpus_bleu(std::span<const Tokens> candidates, std::span<const std::vector<Tokens>> reference_sets,
                   const BleuOptions& opts) {
    return bleu_from_counts(bleu_counts(candidates, reference_sets, opts.max_order), opts);
}

SariComponents sari_sentence(const Tokens& source, const Tokens& candidate, std::span<const Tokens> references) {
    require_references(references.size());
    const auto numref = static_cast<double>(references.size());
    SariComponents total;
    constexpr std::size_t kOrders = 4;
    for (std::size_t n = 1; n <= kOrders; ++n) {
        NgramCounts s = ngrams(source, n);
        NgramCounts c = ngrams(candidate, n);
        NgramCounts r;
        for (const auto& ref : references) {
            for (const auto& [g, k] : ngrams(ref, n)) r[g] += k;
        }
        const auto count = [](const NgramCounts& m, const std::string& g) {
            const auto it = m.find(g);
            return it == m.end() ? 0.0 : it->second;
        };
        // Source and candidate counts are replicated once per reference.
        for (auto& [g, k] : s) k *= numref;
        for (auto& [g, k] : c) k *= numref;

        double keep_p_sum = 0.0, keep_r_sum = 0.0;
        std::size_t keep_size = 0, keep_all_size = 0;
        for (const auto& [g, sk] : s) {
            const double rk = count(r, g);
            const double kept = std::min(sk, count(c, g));
            if (std::min(sk, rk) > 0.0) ++keep_all_size;
            if (kept <= 0.0) continue;
            ++keep_size;
            const double good = std::min(kept, rk);
            keep_p_sum += good / kept;
            if (std::min(sk, rk) > 0.0) keep_r_sum += good / std::min(sk, rk);
        }
        const double keep_p = keep_size == 0 ? 1.0 : keep_p_sum / static_cast<double>(keep_size);
        const double keep_r = keep_all_size == 0 ? 1.0 : keep_r_sum / static_cast<double>(keep_all_size);

        double del_p_sum = 0.0;
        std::size_t del_size = 0;
        for (const auto& [g, sk] : s) {
            const double deleted = sk - count(c, g);
            if (deleted <= 0.0) continue;
            ++del_size;
            del_p_sum += std::max(0.0, deleted - count(r, g)) / deleted;
        }
        const double del_p = del_size == 0 ? 1.0 : del_p_sum / static_cast<double>(del_size);

        std::size_t add_size = 0, add_good = 0, add_all = 0;
        for (const auto& [g, ck] : c) {
            if (s.count(g)) continue;
            ++add_size;
            if (r.count(g)) ++add_good;
        }
        for (const auto& [g, rk] : r) {
            if (!s.count(g)) ++add_all;
        }
        const double add_p = add_size == 0 ? 0.0 : static_cast<double>(add_good) / static_cast<double>(add_size);
        const double add_r = add_all == 0 ? 0.0 : static_cast<double>(add_good) / static_cast<double>(add_all);

        total.add += f1_of(add_p, add_r);
        total.keep += f1_of(keep_p, keep_r);
        total.del += del_p;
    }
    total.add /= kOrders;
    total.keep /= kOrders;
    total.del /= kOrders;
    return total;
}

double sari(std::span<const Tokens> sources, std::span<const Tokens> candidates,
            std::span<const std::vector<Tokens>> reference_sets) {
    if (sources.size() != candidates.size() || candidates.size() != reference_sets.size()) {
        throw DataError("sari: sources, candidates and references are not aligned");
    }
    if (candidates.empty()) throw DataError("sari needs at least one candidate");
    double sum = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        sum += sari_sentence(sources[i], candidates[i], reference_sets[i]).score();
    }
    return 100.0 * sum / static_cast<double>(candidates.size());
}

namespace {

// Lexicographic objective: more matches, then fewer chunks.
struct AlignValue {
    int matches = 0;
    int chunks = 0;
    bool better_than(const AlignValue& o) const {
        return matches != o.matches ? matches > o.matches : chunks < o.chunks;
    }
};

MeteorAlignment greedy_align(const Tokens& cand, const Tokens& ref) {
    std::vector<bool> used(ref.size(), false);
    MeteorAlignment a;
    long prev = -1;
    for (const auto& w : cand) {
        long pick = -1;
        if (prev >= 0 && static_cast<std::size_t>(prev + 1) < ref.size() && !used[prev + 1] && ref[prev + 1] == w) {
            pick = prev + 1;
        } else {
            for (std::size_t j = 0; j < ref.size(); ++j) {
                if (!used[j] && ref[j] == w) {
                    pick = static_cast<long>(j);
                    break;
                }
            }
        }
        if (pick >= 0) {
            used[pick] = true;
            ++a.matches;
            if (prev < 0 || pick != prev + 1) ++a.chunks;
        }
        prev = pick;
    }
    return a;
}

class ExactAligner {
public:
    static constexpr std::size_t kMaxStates = 1u << 21;

    ExactAligner(const Tokens& cand, const Tokens& ref) : cand_(cand), ref_(ref) {
        bit_.assign(ref.size(), -1);
        const std::set<std::string> cand_words(cand.begin(), cand.end());
        int next = 0;
        for (std::size_t j = 0; j < ref.size(); ++j) {
            if (cand_words.count(ref[j])) bit_[j] = next++;
        }
        relevant_ = next;
        // live_[i]: bits of reference positions whose word still occurs in cand[i..].
        live_.assign(cand.size() + 1, 0);
        for (std::size_t i = cand.size(); i-- > 0;) {
            live_[i] = live_[i + 1];
            for (std::size_t j = 0; j < ref.size(); ++j) {
                if (bit_[j] >= 0 && ref[j] == cand[i]) live_[i] |= std::uint64_t{1} << bit_[j];
            }
        }
    }

    bool feasible() const { return relevant_ <= 64; }
    bool overflowed() const { return overflow_; }

    AlignValue solve() { return best(0, -1, 0); }

private:
    AlignValue best(std::size_t i, long prev, std::uint64_t used) {
        if (i == cand_.size() || overflow_) return {};
        used &= live_[i];
        const Key key{i, prev, used};
        if (const auto it = memo_.find(key); it != memo_.end()) return it->second;
        AlignValue result = best(i + 1, -1, used);
        for (std::size_t j = 0; j < ref_.size(); ++j) {
            if (ref_[j] != cand_[i]) continue;
            const std::uint64_t bit = std::uint64_t{1} << bit_[j];
            if (used & bit) continue;
            AlignValue v = best(i + 1, static_cast<long>(j), used | bit);
            v.matches += 1;
            v.chunks += (prev < 0 || static_cast<long>(j) != prev + 1) ? 1 : 0;
            if (v.better_than(result)) result = v;
        }
        if (memo_.size() >= kMaxStates) overflow_ = true;
        memo_.emplace(key, result);
        return result;
    }

    struct Key {
        std::size_t i;
        long prev;
        std::uint64_t used;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const {
            std::uint64_t h = k.used * 0x9e3779b97f4a7c15ULL;
            h ^= (static_cast<std::uint64_t>(k.i) << 32) ^ static_cast<std::uint64_t>(k.prev + 1);
            return static_cast<std::size_t>(h ^ (h >> 29));
        }
    };

    const Tokens& cand_;
    const Tokens& ref_;
    std::vector<int> bit_;
    int relevant_ = 0;
    std::vector<std::uint64_t> live_;
    std::unordered_map<Key, AlignValue, KeyHash> memo_;
    bool overflow_ = false;
};

}  // namespace

MeteorAlignment meteor_align(const Tokens& candidate, const Tokens& reference) {
    ExactAligner aligner(candidate, reference);
    // Very long, highly repetitive pairs fall back to the leftmost greedy alignment,
    // which still attains the maximum match count.
    if (!aligner.feasible()) return greedy_align(candidate, reference);
    const AlignValue v = aligner.solve();
    if (aligner.overflowed()) return greedy_align(candidate, reference);
    return {static_cast<std::size_t>(v.matches), static_cast<std::size_t>(v.chunks)};
}

double meteor_score(std::size_t matches, std::size_t chunks, std::size_t cand_len, std::size_t ref_len) {
    if (matches == 0) return 0.0;
    const double m = static_cast<double>(matches);
    const double p = m / static_cast<double>(cand_len);
    const double r = m / static_cast<double>(ref_len);
    const double fmean = 10.0 * p * r / (r + 9.0 * p);
    const double penalty = 0.5 * std::pow(static_cast<double>(chunks) / m, 3.0);
    return fmean * (1.0 - penalty);
}

double meteor_lite(const Tokens& candidate, const Tokens& reference) {
    const auto a = meteor_align(candidate, reference);
    return meteor_score(a.matches, a.chunks, candidate.size(), reference.size());
}

double token_f1(const Tokens& candidate, const Tokens& reference) {
    if (candidate.empty() && reference.empty()) return 1.0;
    if (candidate.empty() || reference.empty()) return 0.0;
    std::map<std::string, std::size_t> counts;
    for (const auto& t : reference) ++counts[t];
    std::size_t overlap = 0;
    for (const auto& t : candidate) {
        auto it = counts.find(t);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    const double p = static_cast<double>(overlap) / static_cast<double>(candidate.size());
    const double r = static_cast<double>(overlap) / static_cast<double>(reference.size());
    return f1_of(p, r);
}

std::string MetricReport::to_json() const {
    nlohmann::ordered_json j;
    j["metric"] = metric;
    j["score"] = score;
    j["support"] = support;
    j["per_example"] = per_example;
    return j.dump();
}

std::vector<MetricReport> evaluate(const EvalInput& input, std::span<const std::string> metrics,
                                   const BleuOptions& bleu) {
    const std::size_t n = input.predictions.size();
    if (n == 0) throw DataError("no predictions to evaluate");
    if (input.references.empty()) throw ConfigError("at least one reference file is required");
    for (const auto& refs : input.references) {
        if (refs.size() != n) {
            throw DataError("predictions and references are not aligned (" + std::to_string(n) + " vs " +
                            std::to_string(refs.size()) + " lines)");
        }
    }
    std::vector<Tokens> preds;
    std::vector<std::vector<Tokens>> refs(n);
    for (std::size_t i = 0; i < n; ++i) {
        preds.push_back(eval_tokenize(input.predictions[i]));
        for (const auto& file : input.references) refs[i].push_back(eval_tokenize(file[i]));
    }

    auto mean_report = [&](std::string name, std::vector<double> values, double scale) {
        MetricReport rep;
        rep.metric = std::move(name);
        double sum = 0.0;
        for (double v : values) sum += v;
        rep.support["sum"] = sum;
        rep.support["count"] = static_cast<double>(values.size());
        rep.score = scale * sum / static_cast<double>(values.size());
        rep.per_example = std::move(values);
        return rep;
    };

    std::vector<MetricReport> out;
    for (const auto& metric : metrics) {
        if (metric == "rouge") {
            std::vector<double> r1, r2, rl;
            for (std::size_t i = 0; i < n; ++i) {
                r1.push_back(rouge_n(preds[i], refs[i], 1).f1);
                r2.push_back(rouge_n(preds[i], refs[i], 2).f1);
                rl.push_back(rouge_l(preds[i], refs[i]).f1);
            }
            out.push_back(mean_report("rouge1", std::move(r1), 100.0));
            out.push_back(mean_report("rouge2", std::move(r2), 100.0));
            out.push_back(mean_report("rougeL", std::move(rl), 100.0));
        } else if (metric == "bleu") {
            const BleuCounts counts = bleu_counts(preds, refs, bleu.max_order);
            MetricReport rep;
            rep.metric = "bleu";
            rep.score = bleu_from_counts(counts, bleu);
            for (std::size_t k = 0; k < counts.matches.size(); ++k) {
                rep.support["matches_" + std::to_string(k + 1)] = static_cast<double>(counts.matches[k]);
                rep.support["totals_" + std::to_string(k + 1)] = static_cast<double>(counts.totals[k]);
            }
            rep.support["sys_len"] = static_cast<double>(counts.sys_len);
            rep.support["ref_len"] = static_cast<double>(counts.ref_len);
            rep.support["smooth"] = bleu.smooth ? 1.0 : 0.0;
            out.push_back(std::move(rep));
        } else if (metric == "sari") {
            if (input.sources.size() != n) throw ConfigError("sari needs one source line per prediction");
            std::vector<double> scores;
            double add = 0.0, keep = 0.0, del = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const auto c = sari_sentence(eval_tokenize(input.sources[i]), preds[i], refs[i]);
                add += c.add;
                keep += c.keep;
                del += c.del;
                scores.push_back(100.0 * c.score());
            }
            MetricReport rep = mean_report("sari", std::move(scores), 1.0);
            rep.support["add"] = 100.0 * add / static_cast<double>(n);
            rep.support["keep"] = 100.0 * keep / static_cast<double>(n);
            rep.support["del"] = 100.0 * del / static_cast<double>(n);
            out.push_back(std::move(rep));
        } else if (metric == "meteor") {
            std::vector<double> scores;
            for (std::size_t i = 0; i < n; ++i) scores.push_back(meteor_lite(preds[i], refs[i].front()));
            out.push_back(mean_report("meteor", std::move(scores), 1.0));
        } else if (metric == "f1") {
            std::vector<double> scores;
            for (std::size_t i = 0; i < n; ++i) scores.push_back(token_f1(preds[i], refs[i].front()));
            out.push_back(mean_report("f1", std::move(scores), 1.0));
        } else {
            throw ConfigError("unknown metric '" + metric + "' (expected rouge, bleu, sari, meteor or f1)");
        }
    }
    return out;
}

std::string render_table(std::span<const MetricReport> reports) {
    std::string out;
    char line[128];
    std::snprintf(line, sizeof line, "%-10s %12s %8s\n", "metric", "score", "n");
    out += line;
    for (const auto& r : reports) {
        const std::size_t count = r.per_example.empty() ? 0 : r.per_example.size();
        std::snprintf(line, sizeof line, "%-10s %12.4f %8zu\n", r.metric.c_str(), r.score, count);
        out += line;
    }
    return out;
}

}  // namespace esprep
