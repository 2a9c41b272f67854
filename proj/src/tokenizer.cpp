#include "esprep/tokenizer.hpp"

#include "esprep/error.hpp"
#include "esprep/unicode.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace esprep {
namespace {

constexpr char32_t kMarkerCp = 0x2581;
constexpr const char* kFormat = "esprep-tokenizer-1";

std::string byte_piece(unsigned char b) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "<0x%02X>", b);
    return buf;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view s, std::size_t line) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw DataError("tokenizer model line " + std::to_string(line) + ": bad score '" + std::string(s) + "'");
    }
    return v;
}

std::uint64_t pair_key(TokenId a, TokenId b) { return (static_cast<std::uint64_t>(a) << 32) | b; }

}  // namespace

std::string_view to_string(TokenizerKind kind) { return kind == TokenizerKind::bpe ? "bpe" : "unigram"; }

TokenizerKind parse_tokenizer_kind(std::string_view name) {
    if (name == "bpe") return TokenizerKind::bpe;
    if (name == "unigram") return TokenizerKind::unigram;
    throw ConfigError("unknown tokenizer kind '" + std::string(name) + "' (expected bpe or unigram)");
}

std::vector<std::string> SpecialTokens::names() const {
    std::vector<std::string> out = {pad, unk, bos, eos, mask};
    for (std::size_t i = 0; i < num_sentinels; ++i) out.push_back(sentinel(i));
    return out;
}

std::vector<std::string> pre_segment(std::string_view text) {
    std::vector<std::string> words;
    for (std::string_view w : unicode::split_whitespace(text)) {
        std::string word(kWordMarker);
        word.append(w);
        words.push_back(std::move(word));
    }
    return words;
}

void WordCounter::add(std::string_view text) {
    // A literal marker inside a word is byte-encoded, so it splits the word for counting.
    for (std::string_view w : unicode::split_whitespace(text)) {
        bool first = true;
        std::size_t start = 0;
        while (true) {
            const std::size_t hit = w.find(kWordMarker, start);
            const std::string_view run = w.substr(start, hit == std::string_view::npos ? std::string_view::npos : hit - start);
            if (first) {
                ++words_[std::string(kWordMarker) + std::string(run)];
            } else if (!run.empty()) {
                ++words_[std::string(run)];
            }
            first = false;
            if (hit == std::string_view::npos) break;
            start = hit + kWordMarker.size();
        }
    }
}

void WordCounter::merge(const WordCounter& other) {
    for (const auto& [w, n] : other.words_) words_[w] += n;
}

std::vector<std::pair<std::string, std::uint64_t>> WordCounter::sorted() const {
    std::vector<std::pair<std::string, std::uint64_t>> out(words_.begin(), words_.end());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::pair<char32_t, std::uint64_t>> WordCounter::characters() const {
    std::unordered_map<char32_t, std::uint64_t> counts;
    for (const auto& [w, n] : words_) {
        std::size_t pos = 0;
        while (pos < w.size()) counts[unicode::next_code_point(w, pos)] += n;
    }
    std::vector<std::pair<char32_t, std::uint64_t>> out(counts.begin(), counts.end());
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    return out;
}

Tokenizer::Tokenizer(TokenizerKind kind, SpecialTokens specials, std::vector<Piece> normal_pieces,
                     std::vector<std::pair<std::string, std::string>> merges)
    : kind_(kind), specials_(std::move(specials)), merges_(std::move(merges)) {
    if (specials_.num_sentinels > 1000) throw ConfigError("too many sentinels");
    double min_score = 0.0;
    for (const auto& p : normal_pieces) min_score = std::min(min_score, p.score);
    fallback_score_ = min_score - 10.0;

    for (const auto& name : specials_.names()) vocab_.push_back({name, 0.0, PieceType::special});
    const double byte_score = kind_ == TokenizerKind::unigram ? fallback_score_ : 0.0;
    for (int b = 0; b < 256; ++b) vocab_.push_back({byte_piece(static_cast<unsigned char>(b)), byte_score, PieceType::byte});
    for (auto& p : normal_pieces) {
        p.type = PieceType::normal;
        vocab_.push_back(std::move(p));
    }

    for (TokenId id = 0; id < vocab_.size(); ++id) {
        if (!index_.emplace(vocab_[id].text, id).second) {
            throw DataError("duplicate tokenizer piece '" + vocab_[id].text + "'");
        }
        if (vocab_[id].type != PieceType::normal) continue;
        const std::u32string cps = unicode::decode(vocab_[id].text);
        if (cps.empty()) throw DataError("empty tokenizer piece at id " + std::to_string(id));
        if (cps.size() == 1) char_ids_.emplace(cps[0], id);
        if (kind_ == TokenizerKind::unigram) {
            unigram_pieces_.emplace(cps, id);
            max_piece_chars_ = std::max(max_piece_chars_, cps.size());
        }
    }
    for (std::uint32_t rank = 0; rank < merges_.size(); ++rank) {
        const auto& [l, r] = merges_[rank];
        const auto li = find(l);
        const auto ri = find(r);
        const auto mi = find(l + r);
        if (!li || !ri || !mi) throw DataError("merge '" + l + "' + '" + r + "' references unknown pieces");
        merge_rank_.emplace(pair_key(*li, *ri), std::pair{rank, *mi});
    }
}

std::optional<TokenId> Tokenizer::find(std::string_view piece) const {
    const auto it = index_.find(std::string(piece));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

TokenId Tokenizer::sentinel_id(std::size_t i) const {
    if (i >= specials_.num_sentinels) {
        throw ConfigError("sentinel " + std::to_string(i) + " requested but tokenizer has " +
                          std::to_string(specials_.num_sentinels));
    }
    return static_cast<TokenId>(5 + i);
}

void Tokenizer::append_bytes(char32_t cp, std::vector<TokenId>& out) const {
    std::string bytes;
    unicode::append_utf8(bytes, cp);
    for (char b : bytes) out.push_back(byte_id(static_cast<unsigned char>(b)));
}

void Tokenizer::encode_bpe(std::u32string_view run, std::vector<TokenId>& out) const {
    // Byte-fallback symbols never take part in merges.
    std::vector<TokenId> symbols;
    symbols.reserve(run.size());
    for (char32_t cp : run) {
        if (auto it = char_ids_.find(cp); it != char_ids_.end()) {
            symbols.push_back(it->second);
        } else {
            append_bytes(cp, symbols);
        }
    }
    while (symbols.size() > 1) {
        std::uint32_t best_rank = std::numeric_limits<std::uint32_t>::max();
        TokenId left = 0;
        TokenId right = 0;
        TokenId merged = 0;
        for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
            const auto it = merge_rank_.find(pair_key(symbols[i], symbols[i + 1]));
            if (it != merge_rank_.end() && it->second.first < best_rank) {
                best_rank = it->second.first;
                left = symbols[i];
                right = symbols[i + 1];
                merged = it->second.second;
            }
        }
        if (best_rank == std::numeric_limits<std::uint32_t>::max()) break;
        std::vector<TokenId> next;
        next.reserve(symbols.size());
        for (std::size_t i = 0; i < symbols.size(); ++i) {
            if (i + 1 < symbols.size() && symbols[i] == left && symbols[i + 1] == right) {
                next.push_back(merged);
                ++i;
            } else {
                next.push_back(symbols[i]);
            }
        }
        symbols.swap(next);
    }
    out.insert(out.end(), symbols.begin(), symbols.end());
}

std::vector<TokenId> Tokenizer::segment_unigram(std::u32string_view word) const {
    const std::size_t n = word.size();
    std::vector<double> best(n + 1, 0.0);
    std::vector<std::size_t> count(n + 1, 0);
    std::vector<std::size_t> step(n + 1, 0);
    std::vector<TokenId> chosen(n + 1, 0);
    std::vector<bool> fallback(n + 1, false);
    constexpr double kNone = -std::numeric_limits<double>::infinity();

    std::u32string key;
    for (std::size_t i = n; i-- > 0;) {
        best[i] = kNone;
        const std::size_t max_len = std::min(max_piece_chars_, n - i);
        for (std::size_t len = 1; len <= max_len; ++len) {
            key.assign(word.substr(i, len));
            const auto it = unigram_pieces_.find(key);
            if (it == unigram_pieces_.end()) continue;
            const double s = vocab_[it->second].score + best[i + len];
            const std::size_t c = 1 + count[i + len];
            // Ties: fewer pieces, then the longer leading piece (len only grows here).
            if (s > best[i] || (s == best[i] && c <= count[i])) {
                best[i] = s;
                count[i] = c;
                step[i] = len;
                chosen[i] = it->second;
                fallback[i] = false;
            }
        }
        if (best[i] == kNone) {
            best[i] = fallback_score_ + best[i + 1];
            count[i] = 1 + count[i + 1];
            step[i] = 1;
            fallback[i] = true;
        }
    }
    std::vector<TokenId> ids;
    for (std::size_t i = 0; i < n; i += step[i]) {
        if (fallback[i]) {
            append_bytes(word[i], ids);
        } else {
            ids.push_back(chosen[i]);
        }
    }
    return ids;
}

double Tokenizer::segmentation_score(std::span<const TokenId> ids) const {
    double s = 0.0;
    for (TokenId id : ids) s += vocab_.at(id).score;
    return s;
}

void Tokenizer::encode_run(std::u32string_view run, std::vector<TokenId>& out) const {
    if (run.empty()) return;
    if (kind_ == TokenizerKind::bpe) {
        encode_bpe(run, out);
    } else {
        const std::vector<TokenId> ids = segment_unigram(run);
        out.insert(out.end(), ids.begin(), ids.end());
    }
}

TokenSeq Tokenizer::encode(std::string_view text, DocId doc_id) const {
    TokenSeq seq;
    seq.doc_id = doc_id;
    std::u32string run;
    for (std::string_view word : unicode::split_whitespace(text)) {
        run.assign(1, kMarkerCp);
        std::size_t pos = 0;
        while (pos < word.size()) {
            const char32_t cp = unicode::next_code_point(word, pos);
            if (cp == kMarkerCp) {
                encode_run(run, seq.ids);
                append_bytes(cp, seq.ids);
                run.clear();
            } else {
                run.push_back(cp);
            }
        }
        encode_run(run, seq.ids);
    }
    return seq;
}

std::vector<std::string> Tokenizer::encode_pieces(std::string_view text) const {
    std::vector<std::string> out;
    for (TokenId id : encode(text).ids) out.push_back(vocab_[id].text);
    return out;
}

std::string Tokenizer::decode(std::span<const TokenId> ids) const {
    std::string out;
    std::string pending;
    auto flush = [&] {
        if (pending.empty()) return;
        std::size_t pos = 0;
        while (pos < pending.size()) unicode::append_utf8(out, unicode::next_code_point(pending, pos));
        pending.clear();
    };
    for (TokenId id : ids) {
        if (id >= vocab_.size()) {
            throw DataError("token id " + std::to_string(id) + " out of range (vocab " + std::to_string(vocab_.size()) + ")");
        }
        const Piece& p = vocab_[id];
        if (p.type == PieceType::special) continue;
        if (p.type == PieceType::byte) {
            pending.push_back(static_cast<char>(id - specials_.count()));
            continue;
        }
        flush();
        std::string_view text = p.text;
        std::size_t start = 0;
        while (true) {
            const std::size_t hit = text.find(kWordMarker, start);
            out.append(text.substr(start, hit == std::string_view::npos ? std::string_view::npos : hit - start));
            if (hit == std::string_view::npos) break;
            out.push_back(' ');
            start = hit + kWordMarker.size();
        }
    }
    flush();
    if (!out.empty() && out.front() == ' ') out.erase(0, 1);
    return out;
}

std::string Tokenizer::serialize() const {
    nlohmann::ordered_json header;
    header["format"] = kFormat;
    header["kind"] = std::string(to_string(kind_));
    header["word_marker"] = std::string(kWordMarker);
    header["vocab_size"] = vocab_.size();
    header["num_merges"] = merges_.size();
    header["byte_fallback"] = true;
    header["specials"] = {{"pad", specials_.pad},   {"unk", specials_.unk},   {"bos", specials_.bos},
                          {"eos", specials_.eos},   {"mask", specials_.mask}, {"num_sentinels", specials_.num_sentinels}};
    std::string out = header.dump();
    out.push_back('\n');
    for (const auto& p : vocab_) {
        out.append(p.text);
        out.push_back('\t');
        out.append(format_double(p.score));
        out.push_back('\n');
    }
    for (const auto& [l, r] : merges_) {
        out.append(l);
        out.push_back('\t');
        out.append(r);
        out.push_back('\n');
    }
    return out;
}

Tokenizer Tokenizer::deserialize(std::string_view data) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < data.size()) {
        const std::size_t nl = data.find('\n', start);
        lines.push_back(data.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start));
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }
    if (lines.empty()) throw DataError("empty tokenizer model");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(lines[0]);
    } catch (const nlohmann::json::exception&) {
        throw DataError("tokenizer model line 1: malformed header");
    }
    try {
        if (header.at("format").get<std::string>() != kFormat) throw DataError("unsupported tokenizer format");
        const TokenizerKind kind = parse_tokenizer_kind(header.at("kind").get<std::string>());
        const auto& sp = header.at("specials");
        SpecialTokens specials;
        specials.pad = sp.at("pad").get<std::string>();
        specials.unk = sp.at("unk").get<std::string>();
        specials.bos = sp.at("bos").get<std::string>();
        specials.eos = sp.at("eos").get<std::string>();
        specials.mask = sp.at("mask").get<std::string>();
        specials.num_sentinels = sp.at("num_sentinels").get<std::size_t>();
        const auto vocab_size = header.at("vocab_size").get<std::size_t>();
        const auto num_merges = header.at("num_merges").get<std::size_t>();
        if (vocab_size < specials.reserved() || lines.size() < 1 + vocab_size + num_merges) {
            throw DataError("tokenizer model is truncated");
        }
        auto split_tab = [&](std::size_t i) {
            const std::string_view line = lines[i];
            const std::size_t tab = line.find('\t');
            if (tab == std::string_view::npos) throw DataError("tokenizer model line " + std::to_string(i + 1) + ": missing tab");
            return std::pair{line.substr(0, tab), line.substr(tab + 1)};
        };
        std::vector<Piece> normal;
        for (std::size_t i = 1 + specials.reserved(); i < 1 + vocab_size; ++i) {
            const auto [piece, score] = split_tab(i);
            normal.push_back({std::string(piece), parse_double(score, i + 1), PieceType::normal});
        }
        std::vector<std::pair<std::string, std::string>> merges;
        for (std::size_t i = 1 + vocab_size; i < 1 + vocab_size + num_merges; ++i) {
            const auto [l, r] = split_tab(i);
            merges.emplace_back(std::string(l), std::string(r));
        }
        Tokenizer tok(kind, specials, std::move(normal), std::move(merges));
        for (std::size_t i = 0; i < specials.reserved(); ++i) {
            if (split_tab(i + 1).first != tok.vocab_[i].text) {
                throw DataError("tokenizer model line " + std::to_string(i + 2) + ": reserved piece mismatch");
            }
        }
        return tok;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("tokenizer model header: ") + e.what());
    }
}

void Tokenizer::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write tokenizer model " + path.string());
    const std::string data = serialize();
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw IoError("write failure on " + path.string());
}

Tokenizer Tokenizer::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open tokenizer model " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return deserialize(ss.str());
}

}  // namespace esprep
