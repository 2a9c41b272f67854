#include "esprep/filter.hpp"

#include "esprep/error.hpp"
#include "esprep/unicode.hpp"

#include <array>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace esprep {
namespace {

constexpr std::array<std::string_view, 8> kCodeMarkers = {
    "#include", "def ", "function", "var ", ";}", "</", "{", "}",
};

std::string fmt_ratio(double v) {
    std::ostringstream os;
    os.precision(3);
    os << v;
    return os.str();
}

void require_fraction(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0,1]");
}

void require_count(std::size_t v, const char* name) {
    if (v < 1) throw ConfigError(std::string(name) + " must be >= 1");
}

// Strips leading/trailing non-alphanumerics so "palabra," matches "palabra".
std::string_view trim_word(std::string_view w) {
    std::size_t b = 0;
    std::size_t e = w.size();
    while (b < e && static_cast<unsigned char>(w[b]) < 0x80 && !std::isalnum(static_cast<unsigned char>(w[b]))) ++b;
    while (e > b && static_cast<unsigned char>(w[e - 1]) < 0x80 && !std::isalnum(static_cast<unsigned char>(w[e - 1]))) --e;
    return w.substr(b, e - b);
}

}  // namespace

void CleanConfig::validate() const {
    require_count(min_chars, "min_chars");
    require_count(min_sentences, "min_sentences");
    require_count(max_char_run, "max_char_run");
    require_count(code_keyword_threshold, "code_keyword_threshold");
    require_fraction(max_symbol_ratio, "max_symbol_ratio");
    require_fraction(max_top_char_ratio, "max_top_char_ratio");
    require_fraction(lang_threshold, "lang_threshold");
    if (target_lang.empty()) throw ConfigError("target_lang must be set");
}

std::unordered_set<std::string> load_word_list(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open word list " + path.string());
    std::unordered_set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        std::string w = unicode::collapse_whitespace(line);
        if (w.empty() || w.front() == '#') continue;
        words.insert(unicode::to_lower(w));
    }
    return words;
}

bool is_allowed_punctuation(char32_t cp) noexcept {
    switch (cp) {
        case '.': case ',': case ';': case ':': case U'¿': case '?': case U'¡': case '!':
        case '"': case '\'': case '(': case ')': case '[': case ']': case '-': case U'–':
        case U'—': case '%': case U'€': case '$': case U'«': case U'»': case '/': case '&':
        case '@': case '+': case '*': case '=':
            return true;
        default:
            return false;
    }
}

std::size_t count_code_markers(std::string_view text) {
    std::size_t hits = 0;
    for (std::string_view marker : kCodeMarkers) {
        if (text.find(marker) != std::string_view::npos) ++hits;
    }
    return hits;
}

DocumentFilter::DocumentFilter(CleanConfig cfg, SentenceSplitter splitter)
    : cfg_(std::move(cfg)), splitter_(std::move(splitter)) {
    cfg_.validate();
}

FilterDecision DocumentFilter::operator()(std::string_view text) const {
    std::size_t chars = 0;
    std::size_t visible = 0;
    std::size_t symbols = 0;
    std::size_t code_punct = 0;
    std::size_t longest_run = 0;
    std::size_t run = 0;
    char32_t prev = 0;
    std::array<std::size_t, 128> ascii_freq{};
    std::unordered_map<char32_t, std::size_t> other_freq;

    std::size_t pos = 0;
    while (pos < text.size()) {
        const char32_t cp = unicode::next_code_point(text, pos);
        ++chars;
        if (unicode::is_space(cp)) {
            run = 0;
            prev = cp;
            continue;
        }
        ++visible;
        run = (cp == prev) ? run + 1 : 1;
        prev = cp;
        if (run > longest_run) longest_run = run;
        if (cp < 128) {
            ++ascii_freq[cp];
        } else {
            ++other_freq[cp];
        }
        if (cp == '{' || cp == '}' || cp == ';') ++code_punct;
        if (!unicode::is_alnum_or_mark(cp) && !is_allowed_punctuation(cp)) ++symbols;
    }

    if (chars < cfg_.min_chars) {
        return FilterDecision::reject("min_chars", std::to_string(chars) + " chars < " + std::to_string(cfg_.min_chars));
    }
    const std::size_t sentences = splitter_.count(text);
    if (sentences < cfg_.min_sentences) {
        return FilterDecision::reject("min_sentences", std::to_string(sentences) + " sentences < " +
                                                           std::to_string(cfg_.min_sentences));
    }
    if (longest_run > cfg_.max_char_run) {
        return FilterDecision::reject("char_run", "run of " + std::to_string(longest_run) + " identical chars");
    }
    std::size_t top = 0;
    for (std::size_t n : ascii_freq) top = std::max(top, n);
    for (const auto& [cp, n] : other_freq) top = std::max(top, n);
    const double top_ratio = visible == 0 ? 0.0 : static_cast<double>(top) / static_cast<double>(visible);
    if (top_ratio > cfg_.max_top_char_ratio) {
        return FilterDecision::reject("top_char_ratio", "most frequent char covers " + fmt_ratio(top_ratio));
    }
    const double symbol_ratio = visible == 0 ? 0.0 : static_cast<double>(symbols) / static_cast<double>(visible);
    if (symbol_ratio > cfg_.max_symbol_ratio) {
        return FilterDecision::reject("symbol_ratio", "symbol ratio " + fmt_ratio(symbol_ratio));
    }
    const std::size_t markers = count_code_markers(text);
    if (markers >= cfg_.code_keyword_threshold && code_punct * 100 > chars) {
        return FilterDecision::reject("code", std::to_string(markers) + " code markers, " +
                                                  std::to_string(code_punct) + " braces/semicolons");
    }
    if (!cfg_.blocklist.empty()) {
        for (std::string_view word : unicode::split_whitespace(text)) {
            const std::string w = unicode::to_lower(trim_word(word));
            if (cfg_.blocklist.contains(w)) return FilterDecision::reject("blocklist", "blocked word \"" + w + "\"");
        }
    }
    return FilterDecision::pass();
}

FilterDecision filter_document(const Document& doc, const CleanConfig& cfg) {
    return DocumentFilter(cfg)(doc);
}

}  // namespace esprep
