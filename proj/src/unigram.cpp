#include "esprep/error.hpp"
#include "esprep/tokenizer.hpp"
#include "esprep/unicode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

namespace esprep {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kMinExpectedCount = 1e-3;

double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

struct Word {
    std::u32string cps;
    double freq = 0.0;
};

struct Candidate {
    std::u32string cps;
    double log_prob = 0.0;
    bool is_char = false;
};

// Character trie over the current pieces; children live in one flat hash map.
class PieceTrie {
public:
    explicit PieceTrie(const std::vector<Candidate>& pieces) {
        piece_at_.push_back(-1);
        for (std::size_t p = 0; p < pieces.size(); ++p) {
            std::uint32_t node = 0;
            for (char32_t cp : pieces[p].cps) {
                const auto [it, inserted] = children_.emplace(edge(node, cp), static_cast<std::uint32_t>(piece_at_.size()));
                if (inserted) piece_at_.push_back(-1);
                node = it->second;
            }
            piece_at_[node] = static_cast<std::int32_t>(p);
        }
    }

    // Calls fn(length, piece) for every piece that is a prefix of s[from...].
    template <typename Fn>
    void prefixes(std::u32string_view s, std::size_t from, Fn&& fn) const {
        std::uint32_t node = 0;
        for (std::size_t i = from; i < s.size(); ++i) {
            const auto it = children_.find(edge(node, s[i]));
            if (it == children_.end()) return;
            node = it->second;
            if (piece_at_[node] >= 0) fn(i - from + 1, static_cast<std::size_t>(piece_at_[node]));
        }
    }

private:
    static std::uint64_t edge(std::uint32_t node, char32_t cp) { return (static_cast<std::uint64_t>(node) << 21) | cp; }

    std::unordered_map<std::uint64_t, std::uint32_t> children_;
    std::vector<std::int32_t> piece_at_;
};

class UnigramTrainer {
public:
    UnigramTrainer(const WordCounter& counts, std::size_t vocab_size, const SpecialTokens& specials,
                   const UnigramOptions& opts)
        : specials_(specials), opts_(opts) {
        if (counts.empty()) throw ConfigError("cannot train a tokenizer on an empty corpus");
        if (opts.max_piece_chars < 1 || opts.em_rounds < 1 || !(opts.prune_ratio > 0.0 && opts.prune_ratio < 1.0)) {
            throw ConfigError("invalid unigram trainer options");
        }
        const auto chars = counts.characters();
        const std::size_t base = specials.reserved() + chars.size();
        if (vocab_size < base) {
            throw ConfigError("vocab_size " + std::to_string(vocab_size) + " is below reserved tokens + alphabet (" +
                              std::to_string(base) + ")");
        }
        learned_budget_ = vocab_size - base;

        double total_chars = 0.0;
        for (const auto& [cp, n] : chars) total_chars += static_cast<double>(n);
        for (const auto& [cp, n] : chars) {
            pieces_.push_back({std::u32string(1, cp), std::log(static_cast<double>(n) / total_chars), true});
        }
        for (const auto& [w, n] : counts.sorted()) words_.push_back({unicode::decode(w), static_cast<double>(n)});
    }

    Tokenizer run() {
        if (learned_budget_ > 0) {
            seed();
            while (learned_count() > learned_budget_) {
                for (std::size_t r = 0; r < opts_.em_rounds; ++r) em_step();
                prune();
            }
            for (std::size_t r = 0; r < opts_.em_rounds; ++r) em_step();
        }
        return build();
    }

private:
    std::size_t learned_count() const { return pieces_.size() - std::count_if(pieces_.begin(), pieces_.end(), [](const Candidate& c) { return c.is_char; }); }

    void seed() {
        std::unordered_map<std::string, double> freq;
        for (const auto& w : words_) {
            for (std::size_t i = 0; i < w.cps.size(); ++i) {
                const std::size_t max_len = std::min(opts_.max_piece_chars, w.cps.size() - i);
                for (std::size_t len = 2; len <= max_len; ++len) {
                    freq[unicode::encode(std::u32string_view(w.cps).substr(i, len))] += w.freq;
                }
            }
        }
        if (freq.size() < learned_budget_) {
            throw ConfigError("vocab_size unreachable: corpus supplies only " + std::to_string(freq.size()) +
                              " multi-character pieces for a budget of " + std::to_string(learned_budget_));
        }
        struct Scored {
            double score;
            double freq;
            std::string text;
        };
        std::vector<Scored> scored;
        scored.reserve(freq.size());
        for (auto& [text, f] : freq) {
            scored.push_back({f * static_cast<double>(unicode::count_code_points(text)), f, text});
        }
        const std::size_t keep = std::min(scored.size(), std::max(learned_budget_, learned_budget_ * opts_.seed_factor));
        auto by_score = [](const Scored& a, const Scored& b) { return a.score != b.score ? a.score > b.score : a.text < b.text; };
        std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(), by_score);
        scored.resize(keep);

        double total = 0.0;
        for (const auto& p : pieces_) total += std::exp(p.log_prob);
        double seed_total = 0.0;
        for (const auto& s : scored) seed_total += s.freq;
        // Seed pieces share probability mass with the characters in proportion to frequency.
        const double z = 1.0 + seed_total;
        for (auto& p : pieces_) p.log_prob = std::log(std::exp(p.log_prob) / total / z);
        for (const auto& s : scored) pieces_.push_back({unicode::decode(s.text), std::log(s.freq / z), false});
    }

    void em_step() {
        const PieceTrie trie(pieces_);
        std::vector<double> expected(pieces_.size(), 0.0);
        struct Edge {
            std::size_t from, to, piece;
        };
        std::vector<Edge> edges;
        std::vector<double> alpha, beta;
        for (const auto& w : words_) {
            const std::size_t n = w.cps.size();
            edges.clear();
            for (std::size_t i = 0; i < n; ++i) {
                trie.prefixes(w.cps, i, [&](std::size_t len, std::size_t p) { edges.push_back({i, i + len, p}); });
            }
            alpha.assign(n + 1, kNegInf);
            beta.assign(n + 1, kNegInf);
            alpha[0] = 0.0;
            beta[n] = 0.0;
            // Edges are generated in ascending `from` order, which is a topological order.
            for (const auto& e : edges) alpha[e.to] = log_add(alpha[e.to], alpha[e.from] + pieces_[e.piece].log_prob);
            for (auto it = edges.rbegin(); it != edges.rend(); ++it) {
                beta[it->from] = log_add(beta[it->from], pieces_[it->piece].log_prob + beta[it->to]);
            }
            const double z = alpha[n];
            for (const auto& e : edges) {
                expected[e.piece] += w.freq * std::exp(alpha[e.from] + pieces_[e.piece].log_prob + beta[e.to] - z);
            }
        }
        double total = 0.0;
        for (double& c : expected) {
            c = std::max(c, kMinExpectedCount);
            total += c;
        }
        for (std::size_t p = 0; p < pieces_.size(); ++p) pieces_[p].log_prob = std::log(expected[p] / total);
    }

    // Best-scoring segmentation of s, optionally forbidding one piece.
    std::vector<std::size_t> viterbi(const PieceTrie& trie, std::u32string_view s, std::size_t banned) const {
        const std::size_t n = s.size();
        std::vector<double> best(n + 1, kNegInf);
        std::vector<std::size_t> back_piece(n + 1, 0), back_len(n + 1, 0);
        best[0] = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (best[i] == kNegInf) continue;
            trie.prefixes(s, i, [&](std::size_t len, std::size_t p) {
                if (p == banned) return;
                const double v = best[i] + pieces_[p].log_prob;
                if (v > best[i + len]) {
                    best[i + len] = v;
                    back_piece[i + len] = p;
                    back_len[i + len] = len;
                }
            });
        }
        std::vector<std::size_t> path;
        for (std::size_t j = n; j > 0; j -= back_len[j]) path.push_back(back_piece[j]);
        std::reverse(path.begin(), path.end());
        return path;
    }

    void prune() {
        const PieceTrie trie(pieces_);
        std::vector<double> vfreq(pieces_.size(), 0.0);
        constexpr std::size_t kNoBan = std::numeric_limits<std::size_t>::max();
        for (const auto& w : words_) {
            for (std::size_t p : viterbi(trie, w.cps, kNoBan)) vfreq[p] += w.freq;
        }
        const double sum = std::accumulate(vfreq.begin(), vfreq.end(), 0.0);
        const double log_sum = std::log(sum);

        struct Loss {
            double loss;
            std::size_t piece;
        };
        std::vector<Loss> losses;
        for (std::size_t p = 0; p < pieces_.size(); ++p) {
            if (pieces_[p].is_char) continue;
            if (vfreq[p] <= 0.0) {
                losses.push_back({kNegInf, p});
                continue;
            }
            // Likelihood change if p's occurrences were re-segmented by their best alternative.
            const std::vector<std::size_t> alt = viterbi(trie, pieces_[p].cps, p);
            const double logprob_piece = std::log(vfreq[p]) - log_sum;
            const double log_sum_alt = std::log(sum + vfreq[p] * static_cast<double>(alt.size() - 1));
            double logprob_alt = 0.0;
            for (std::size_t a : alt) logprob_alt += std::log(vfreq[a] + vfreq[p]) - log_sum_alt;
            losses.push_back({vfreq[p] * (logprob_piece - logprob_alt), p});
        }
        std::sort(losses.begin(), losses.end(), [&](const Loss& a, const Loss& b) {
            if (a.loss != b.loss) return a.loss > b.loss;
            return pieces_[a.piece].cps < pieces_[b.piece].cps;
        });
        const auto current = static_cast<double>(losses.size());
        const std::size_t target =
            std::max(learned_budget_, static_cast<std::size_t>(std::floor(current * (1.0 - opts_.prune_ratio))));
        std::vector<bool> keep(pieces_.size(), false);
        for (std::size_t p = 0; p < pieces_.size(); ++p) keep[p] = pieces_[p].is_char;
        for (std::size_t i = 0; i < std::min(target, losses.size()); ++i) keep[losses[i].piece] = true;
        std::vector<Candidate> next;
        for (std::size_t p = 0; p < pieces_.size(); ++p) {
            if (keep[p]) next.push_back(std::move(pieces_[p]));
        }
        pieces_.swap(next);
    }

    Tokenizer build() const {
        std::vector<Piece> normal;
        normal.reserve(pieces_.size());
        for (const auto& c : pieces_) normal.push_back({unicode::encode(c.cps), c.log_prob, PieceType::normal});
        std::sort(normal.begin(), normal.end(), [](const Piece& a, const Piece& b) {
            return a.score != b.score ? a.score > b.score : a.text < b.text;
        });
        return Tokenizer(TokenizerKind::unigram, specials_, std::move(normal));
    }

    SpecialTokens specials_;
    UnigramOptions opts_;
    std::size_t learned_budget_ = 0;
    std::vector<Candidate> pieces_;
    std::vector<Word> words_;
};

}  // namespace

Tokenizer train_unigram(const WordCounter& counts, std::size_t vocab_size, const SpecialTokens& specials,
                        const UnigramOptions& opts) {
    return UnigramTrainer(counts, vocab_size, specials, opts).run();
}

Tokenizer train_unigram(std::span<const Document> corpus, std::size_t vocab_size, const SpecialTokens& specials,
                        const UnigramOptions& opts) {
    WordCounter counts;
    for (const auto& doc : corpus) counts.add(doc);
    return train_unigram(counts, vocab_size, specials, opts);
}

}  // namespace esprep
