#include "esprep/sentences.hpp"

#include "esprep/error.hpp"
#include "esprep/unicode.hpp"

#include <fstream>

namespace esprep {
namespace {

bool is_closer(char32_t cp) {
    switch (cp) {
        case ')': case ']': case '"': case '\'':
        case U'»': case U'”': case U'’':
            return true;
        default:
            return false;
    }
}

bool is_opener(char32_t cp) {
    switch (cp) {
        case '(': case '[': case '"': case '\'':
        case U'«': case U'“': case U'‘': case U'¿': case U'¡':
            return true;
        default:
            return false;
    }
}

}  // namespace

const std::unordered_set<std::string>& SentenceSplitter::default_abbreviations() {
    static const std::unordered_set<std::string> abbrevs = {
        "sr", "sra", "srta", "sres", "sras", "dr", "dra", "drs", "dras", "d", "dña", "ud", "uds",
        "vd", "vds", "lic", "ing", "arq", "prof", "profa", "mons", "gral", "cap", "tte", "cnel",
        "av", "avda", "c", "pág", "págs", "p", "pp", "núm", "nro", "art", "arts", "cap", "vol",
        "ed", "eds", "fig", "figs", "ej", "aprox", "dpto", "depto", "cía", "admón", "apdo",
        "tel", "tlf", "st", "mr", "mrs", "ms", "vs", "a.c", "d.c", "ee.uu", "s.a", "s.l",
    };
    return abbrevs;
}

SentenceSplitter::SentenceSplitter() : abbreviations_(default_abbreviations()) {}

SentenceSplitter::SentenceSplitter(std::unordered_set<std::string> abbreviations)
    : abbreviations_(std::move(abbreviations)) {}

SentenceSplitter SentenceSplitter::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open abbreviation list " + path.string());
    std::unordered_set<std::string> abbrevs;
    std::string line;
    while (std::getline(in, line)) {
        std::string entry = unicode::collapse_whitespace(line);
        if (entry.empty() || entry.front() == '#') continue;
        if (entry.back() == '.') entry.pop_back();
        abbrevs.insert(unicode::to_lower(entry));
    }
    return SentenceSplitter(std::move(abbrevs));
}

bool SentenceSplitter::ends_sentence(std::string_view word) const {
    if (word.empty()) return false;
    const auto tail = static_cast<unsigned char>(word.back());
    if (tail < 0x80 && tail != '.' && tail != '!' && tail != '?' && tail != ')' && tail != ']' &&
        tail != '"' && tail != '\'') {
        return false;
    }
    std::u32string cps = unicode::decode(word);
    while (!cps.empty() && is_closer(cps.back())) cps.pop_back();
    if (cps.empty()) return false;
    const char32_t last = cps.back();
    if (last == '!' || last == '?' || last == U'…') return true;
    if (last != '.') return false;

    // An ellipsis written as dots always ends the sentence.
    if (cps.size() >= 2 && cps[cps.size() - 2] == '.') return true;
    cps.pop_back();
    std::size_t start = 0;
    while (start < cps.size() && is_opener(cps[start])) ++start;
    if (start == cps.size()) return true;
    const std::string stem = unicode::to_lower(unicode::encode(std::u32string_view(cps).substr(start)));
    return !abbreviations_.contains(stem);
}

std::vector<std::string> SentenceSplitter::split(std::string_view text) const {
    std::vector<std::string> sentences;
    std::string current;
    for (std::string_view word : unicode::split_whitespace(text)) {
        if (!current.empty()) current.push_back(' ');
        current.append(word);
        if (ends_sentence(word)) sentences.push_back(std::move(current)), current.clear();
    }
    if (!current.empty()) sentences.push_back(std::move(current));
    return sentences;
}

std::size_t SentenceSplitter::count(std::string_view text) const {
    std::size_t n = 0;
    bool open = false;
    for (std::string_view word : unicode::split_whitespace(text)) {
        open = true;
        if (ends_sentence(word)) ++n, open = false;
    }
    return n + (open ? 1 : 0);
}

std::vector<std::string> segment_sentences(std::string_view text) {
    static const SentenceSplitter splitter;
    return splitter.split(text);
}

}  // namespace esprep
