#include "esprep/clean.hpp"

#include "esprep/error.hpp"
#include "esprep/unicode.hpp"

#include <cstdio>

namespace esprep {

std::string format_score(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

Cleaner::Cleaner(CleanConfig cfg, SentenceSplitter splitter, std::shared_ptr<const LangModel> model,
                 bool repair_encoding)
    : filter_(std::move(cfg), std::move(splitter)), model_(std::move(model)), repair_encoding_(repair_encoding) {}

FilterDecision Cleaner::operator()(Document& doc) const {
    if (repair_encoding_) doc.text = fix_encoding(doc.text);
    FilterDecision decision = filter_(doc);
    if (decision.accepted) decision = language_gate(doc);
    doc.meta["filter"] = decision.rule;
    return decision;
}

FilterDecision Cleaner::language_gate(Document& doc) const {
    const CleanConfig& cfg = filter_.config();
    std::string code;
    double score = 0.0;
    if (model_) {
        const LanguageGuess guess = model_->detect(doc.text);
        code = guess.code;
        score = guess.confidence;
        doc.meta["lang"] = code;
        doc.meta["lang_score"] = format_score(score);
    } else {
        const auto lang = doc.meta.find("lang");
        const auto lang_score = doc.meta.find("lang_score");
        if (lang == doc.meta.end() || lang_score == doc.meta.end()) return FilterDecision::pass();
        code = lang->second;
        try {
            score = std::stod(lang_score->second);
        } catch (const std::exception&) {
            throw DataError("document " + std::to_string(doc.id) + ": unreadable lang_score '" +
                            lang_score->second + "'");
        }
    }
    if (code != cfg.target_lang) return FilterDecision::reject("lang", "detected " + code);
    if (score < cfg.lang_threshold) {
        return FilterDecision::reject("lang", "confidence " + format_score(score) + " < " +
                                                  format_score(cfg.lang_threshold));
    }
    return FilterDecision::pass();
}

}  // namespace esprep
