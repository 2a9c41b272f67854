#pragma once

#include "esprep/corpus_io.hpp"
#include "esprep/encoding.hpp"
#include "esprep/filter.hpp"
#include "esprep/langid.hpp"
#include "esprep/sentences.hpp"

#include <memory>

namespace esprep {

/// The per-document clean stage: quality rules, then the language gate.
///
/// The language gate uses the model when one is given. Otherwise it falls back to
/// an externally computed verdict in meta["lang"] / meta["lang_score"], and is
/// skipped when neither is available.
class Cleaner {
public:
    Cleaner(CleanConfig cfg, SentenceSplitter splitter = {}, std::shared_ptr<const LangModel> model = nullptr,
            bool repair_encoding = false);

    /// Judges `doc`, annotating meta["filter"] and (when available) meta["lang"],
    /// meta["lang_score"]. With repair_encoding the text is fixed before judging.
    FilterDecision operator()(Document& doc) const;

    const CleanConfig& config() const { return filter_.config(); }

private:
    FilterDecision language_gate(Document& doc) const;

    DocumentFilter filter_;
    std::shared_ptr<const LangModel> model_;
    bool repair_encoding_;
};

std::string format_score(double v);

}  // namespace esprep
