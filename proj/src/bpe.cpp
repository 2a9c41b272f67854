#include "esprep/error.hpp"
#include "esprep/tokenizer.hpp"
#include "esprep/unicode.hpp"

#include <algorithm>
#include <queue>
#include <unordered_map>

namespace esprep {
namespace {

using Sym = std::uint32_t;

std::uint64_t key_of(Sym a, Sym b) { return (static_cast<std::uint64_t>(a) << 32) | b; }
Sym left_of(std::uint64_t k) { return static_cast<Sym>(k >> 32); }
Sym right_of(std::uint64_t k) { return static_cast<Sym>(k & 0xFFFFFFFFu); }

struct Word {
    std::vector<Sym> symbols;
    std::int64_t freq = 0;
};

struct Candidate {
    std::int64_t count;
    std::uint64_t pair;
};

class BpeTrainer {
public:
    BpeTrainer(const WordCounter& counts, std::size_t vocab_size, const SpecialTokens& specials)
        : vocab_size_(vocab_size), specials_(specials) {
        const auto chars = counts.characters();
        const std::size_t base = specials.reserved() + chars.size();
        if (counts.empty()) throw ConfigError("cannot train a tokenizer on an empty corpus");
        if (vocab_size < base) {
            throw ConfigError("vocab_size " + std::to_string(vocab_size) + " is below reserved tokens + alphabet (" +
                              std::to_string(base) + ")");
        }
        std::unordered_map<char32_t, Sym> char_sym;
        for (const auto& [cp, n] : chars) {
            char_sym.emplace(cp, static_cast<Sym>(pieces_.size()));
            add_piece(unicode::encode(std::u32string(1, cp)));
        }
        for (const auto& [w, n] : counts.sorted()) {
            Word word;
            word.freq = static_cast<std::int64_t>(n);
            std::size_t pos = 0;
            while (pos < w.size()) word.symbols.push_back(char_sym.at(unicode::next_code_point(w, pos)));
            words_.push_back(std::move(word));
        }
        base_ = base;
    }

    Tokenizer run() {
        for (std::uint32_t wi = 0; wi < words_.size(); ++wi) add_pairs(wi, +1);
        for (const auto& [pair, count] : pair_counts_) {
            if (count > 0) heap_.push({count, pair});
        }
        while (specials_.reserved() + pieces_.size() < vocab_size_) {
            const auto best = pop_best();
            if (!best) {
                throw ConfigError("vocab_size " + std::to_string(vocab_size_) + " unreachable: corpus supports " +
                                  std::to_string(specials_.reserved() + pieces_.size()) + " pieces");
            }
            apply_merge(*best);
        }
        std::vector<Piece> normal;
        normal.reserve(pieces_.size());
        for (std::size_t i = 0; i < pieces_.size(); ++i) {
            normal.push_back({pieces_[i], -static_cast<double>(i), PieceType::normal});
        }
        return Tokenizer(TokenizerKind::bpe, specials_, std::move(normal), std::move(merges_));
    }

private:
    // Higher count first; ties go to the lexicographically smaller (left, right) pair.
    struct Order {
        const BpeTrainer* t;
        bool operator()(const Candidate& a, const Candidate& b) const {
            if (a.count != b.count) return a.count < b.count;
            const auto& al = t->pieces_[left_of(a.pair)];
            const auto& bl = t->pieces_[left_of(b.pair)];
            if (al != bl) return al > bl;
            return t->pieces_[right_of(a.pair)] > t->pieces_[right_of(b.pair)];
        }
    };

    Sym add_piece(const std::string& text) {
        const auto [it, inserted] = piece_index_.emplace(text, static_cast<Sym>(pieces_.size()));
        if (inserted) pieces_.push_back(text);
        return it->second;
    }

    void add_pairs(std::uint32_t wi, int sign) {
        const Word& w = words_[wi];
        for (std::size_t i = 0; i + 1 < w.symbols.size(); ++i) {
            const std::uint64_t k = key_of(w.symbols[i], w.symbols[i + 1]);
            pair_counts_[k] += sign * w.freq;
            if (sign > 0) where_[k].push_back(wi);
            touched_.push_back(k);
        }
    }

    std::optional<std::uint64_t> pop_best() {
        while (!heap_.empty()) {
            const Candidate c = heap_.top();
            heap_.pop();
            const auto it = pair_counts_.find(c.pair);
            if (it == pair_counts_.end() || it->second != c.count || c.count <= 0) continue;
            return c.pair;
        }
        return std::nullopt;
    }

    void apply_merge(std::uint64_t pair) {
        const Sym a = left_of(pair);
        const Sym b = right_of(pair);
        const std::string merged_text = pieces_[a] + pieces_[b];
        const Sym merged = add_piece(merged_text);
        merges_.emplace_back(pieces_[a], pieces_[b]);

        std::vector<std::uint32_t> affected = std::move(where_[pair]);
        where_.erase(pair);
        std::sort(affected.begin(), affected.end());
        affected.erase(std::unique(affected.begin(), affected.end()), affected.end());

        touched_.clear();
        for (std::uint32_t wi : affected) {
            Word& w = words_[wi];
            bool present = false;
            for (std::size_t i = 0; i + 1 < w.symbols.size(); ++i) {
                if (w.symbols[i] == a && w.symbols[i + 1] == b) {
                    present = true;
                    break;
                }
            }
            if (!present) continue;
            add_pairs(wi, -1);
            std::vector<Sym> next;
            next.reserve(w.symbols.size());
            for (std::size_t i = 0; i < w.symbols.size(); ++i) {
                if (i + 1 < w.symbols.size() && w.symbols[i] == a && w.symbols[i + 1] == b) {
                    next.push_back(merged);
                    ++i;
                } else {
                    next.push_back(w.symbols[i]);
                }
            }
            w.symbols.swap(next);
            add_pairs(wi, +1);
        }
        std::sort(touched_.begin(), touched_.end());
        touched_.erase(std::unique(touched_.begin(), touched_.end()), touched_.end());
        for (std::uint64_t k : touched_) {
            const auto it = pair_counts_.find(k);
            if (it == pair_counts_.end()) continue;
            if (it->second <= 0) {
                pair_counts_.erase(it);
            } else {
                heap_.push({it->second, k});
            }
        }
        pair_counts_.erase(pair);
    }

    std::size_t vocab_size_;
    SpecialTokens specials_;
    std::size_t base_ = 0;
    std::vector<std::string> pieces_;
    std::unordered_map<std::string, Sym> piece_index_;
    std::vector<Word> words_;
    std::unordered_map<std::uint64_t, std::int64_t> pair_counts_;
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> where_;
    std::vector<std::uint64_t> touched_;
    std::priority_queue<Candidate, std::vector<Candidate>, Order> heap_{Order{this}};
    std::vector<std::pair<std::string, std::string>> merges_;
};

}  // namespace

Tokenizer train_bpe(const WordCounter& counts, std::size_t vocab_size, const SpecialTokens& specials) {
    return BpeTrainer(counts, vocab_size, specials).run();
}

Tokenizer train_bpe(std::span<const Document> corpus, std::size_t vocab_size, const SpecialTokens& specials) {
    WordCounter counts;
    for (const auto& doc : corpus) counts.add(doc);
    return train_bpe(counts, vocab_size, specials);
}

}  // namespace esprep
