#pragma once

// Brute-force reference implementations used to cross-check the library.

#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace oracle {

using Toks = std::vector<std::string>;

struct PRF {
    double p = 0, r = 0, f = 0;
};

PRF rouge_n(const Toks& cand, const std::vector<Toks>& refs, std::size_t n);
/// Exhaustive over subsequences of the candidate; keep |cand| <= 16.
PRF rouge_l(const Toks& cand, const std::vector<Toks>& refs);
double bleu(const std::vector<Toks>& cands, const std::vector<std::vector<Toks>>& refs, bool smooth);
double sari(const Toks& src, const Toks& cand, const std::vector<Toks>& refs);
/// Enumerates every one-to-one exact alignment; keep sentences short.
double meteor(const Toks& cand, const Toks& ref);
double token_f1(const Toks& cand, const Toks& ref);

/// Exact Jaccard of the k-word shingle sets of two whitespace-split texts.
double shingle_jaccard(const std::string& a, const std::string& b, std::size_t k);

}  // namespace oracle
