#include "esprep/langid.hpp"

#include "esprep/error.hpp"
#include "esprep/unicode.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace esprep {
namespace {

constexpr std::size_t kMaxLanguages = 64;

std::u32string unpack_trigram(std::uint64_t key) {
    constexpr std::uint64_t mask = (1u << 21) - 1;
    return {static_cast<char32_t>((key >> 42) & mask), static_cast<char32_t>((key >> 21) & mask),
            static_cast<char32_t>(key & mask)};
}

template <typename Fn>
void for_each_trigram(const std::u32string& cps, Fn&& fn) {
    for (std::size_t i = 0; i + 3 <= cps.size(); ++i) fn(pack_trigram(cps[i], cps[i + 1], cps[i + 2]));
}

}  // namespace

std::uint64_t pack_trigram(char32_t a, char32_t b, char32_t c) noexcept {
    return (static_cast<std::uint64_t>(a) << 42) | (static_cast<std::uint64_t>(b) << 21) | static_cast<std::uint64_t>(c);
}

std::u32string langid_normalize(std::string_view text) {
    const std::string lowered = unicode::to_lower(unicode::nfkc(text));
    std::u32string out;
    out.reserve(lowered.size() + 2);
    out.push_back(' ');
    std::size_t pos = 0;
    while (pos < lowered.size()) {
        const char32_t cp = unicode::next_code_point(lowered, pos);
        if (unicode::is_space(cp)) {
            if (out.back() != ' ') out.push_back(' ');
        } else {
            out.push_back(cp);
        }
    }
    if (out.back() != ' ') out.push_back(' ');
    return out;
}

LangModel LangModel::train(const std::map<std::string, std::vector<std::string>>& seeds) {
    if (seeds.size() < 2) throw ConfigError("language identification needs at least 2 seed languages");
    if (seeds.size() > kMaxLanguages) throw ConfigError("at most 64 seed languages are supported");

    LangModel model;
    std::vector<std::unordered_map<std::uint64_t, std::uint64_t>> counts;
    std::vector<std::uint64_t> totals;
    std::vector<std::uint64_t> union_grams;  // first-seen order keeps training deterministic
    std::unordered_map<std::uint64_t, std::uint32_t> index;

    for (const auto& [code, texts] : seeds) {
        std::size_t chars = 0;
        for (const auto& t : texts) chars += unicode::count_code_points(t);
        if (chars < kMinSeedChars) {
            throw ConfigError("seed corpus for '" + code + "' has " + std::to_string(chars) + " chars; need " +
                              std::to_string(kMinSeedChars));
        }
        model.languages_.push_back(code);
        auto& c = counts.emplace_back();
        std::uint64_t total = 0;
        for (const auto& t : texts) {
            if (unicode::collapse_whitespace(t).empty()) continue;
            for_each_trigram(langid_normalize(t), [&](std::uint64_t g) {
                ++c[g];
                ++total;
                if (index.emplace(g, static_cast<std::uint32_t>(union_grams.size())).second) union_grams.push_back(g);
            });
        }
        totals.push_back(total);
    }

    const std::size_t k = model.languages_.size();
    const double vocab = static_cast<double>(union_grams.size() + 1);
    model.log_prior_.assign(k, -std::log(static_cast<double>(k)));
    for (std::size_t l = 0; l < k; ++l) model.unseen_.push_back(-std::log(static_cast<double>(totals[l]) + vocab));

    model.gram_index_ = std::move(index);
    model.table_.resize(union_grams.size() * k);
    model.seen_mask_.assign(union_grams.size(), 0);
    for (std::size_t g = 0; g < union_grams.size(); ++g) {
        for (std::size_t l = 0; l < k; ++l) {
            const auto it = counts[l].find(union_grams[g]);
            const double n = it == counts[l].end() ? 0.0 : static_cast<double>(it->second);
            if (n > 0) model.seen_mask_[g] |= (std::uint64_t{1} << l);
            model.table_[g * k + l] = std::log(n + 1.0) + model.unseen_[l];
        }
    }
    return model;
}

double LangModel::log_prob(std::size_t lang, std::u32string_view gram) const {
    if (gram.size() != 3) throw std::invalid_argument("log_prob expects a 3-gram");
    const auto it = gram_index_.find(pack_trigram(gram[0], gram[1], gram[2]));
    if (it == gram_index_.end()) return unseen_[lang];
    return table_[it->second * languages_.size() + lang];
}

std::vector<double> LangModel::posteriors(std::string_view text) const {
    if (unicode::split_whitespace(text).empty()) throw DataError("empty input");
    const std::size_t k = languages_.size();
    std::vector<double> score(log_prior_);
    std::size_t unseen_count = 0;
    for_each_trigram(langid_normalize(text), [&](std::uint64_t g) {
        const auto it = gram_index_.find(g);
        if (it == gram_index_.end()) {
            ++unseen_count;
            return;
        }
        const double* row = &table_[it->second * k];
        for (std::size_t l = 0; l < k; ++l) score[l] += row[l];
    });
    for (std::size_t l = 0; l < k; ++l) score[l] += static_cast<double>(unseen_count) * unseen_[l];

    const double top = *std::max_element(score.begin(), score.end());
    double z = 0.0;
    for (double& s : score) {
        s = std::exp(s - top);
        z += s;
    }
    for (double& s : score) s /= z;
    return score;
}

LanguageGuess LangModel::detect(std::string_view text) const {
    const std::vector<double> post = posteriors(text);
    const auto best = static_cast<std::size_t>(std::max_element(post.begin(), post.end()) - post.begin());
    return {languages_[best], post[best]};
}

std::string LangModel::to_json() const {
    nlohmann::ordered_json j;
    j["format"] = "esprep-langid-1";
    j["languages"] = languages_;
    j["prior"] = nlohmann::ordered_json::object();
    j["unseen"] = nlohmann::ordered_json::object();
    j["profiles"] = nlohmann::ordered_json::object();
    const std::size_t k = languages_.size();

    // Sorted grams make the file byte-identical across runs.
    std::vector<std::pair<std::uint64_t, std::uint32_t>> grams(gram_index_.begin(), gram_index_.end());
    std::sort(grams.begin(), grams.end());
    for (std::size_t l = 0; l < k; ++l) {
        j["prior"][languages_[l]] = log_prior_[l];
        j["unseen"][languages_[l]] = unseen_[l];
        auto profile = nlohmann::ordered_json::object();
        for (const auto& [g, row] : grams) {
            if (seen_mask_[row] & (std::uint64_t{1} << l)) profile[unicode::encode(unpack_trigram(g))] = table_[row * k + l];
        }
        j["profiles"][languages_[l]] = std::move(profile);
    }
    return j.dump();
}

LangModel LangModel::from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed language model: ") + e.what());
    }
    LangModel model;
    try {
        model.languages_ = j.at("languages").get<std::vector<std::string>>();
        const std::size_t k = model.languages_.size();
        if (k < 2 || k > kMaxLanguages) throw DataError("language model must list 2..64 languages");
        for (const auto& code : model.languages_) {
            model.log_prior_.push_back(j.at("prior").at(code).get<double>());
            model.unseen_.push_back(j.at("unseen").at(code).get<double>());
        }
        std::map<std::uint64_t, std::vector<std::pair<std::size_t, double>>> grams;
        for (std::size_t l = 0; l < k; ++l) {
            const auto& profile = j.at("profiles").at(model.languages_[l]);
            if (profile.empty()) throw DataError("empty profile for " + model.languages_[l]);
            for (const auto& [key, value] : profile.items()) {
                const std::u32string cps = unicode::decode(key);
                if (cps.size() != 3) throw DataError("profile key is not a 3-gram: " + key);
                grams[pack_trigram(cps[0], cps[1], cps[2])].emplace_back(l, value.get<double>());
            }
        }
        model.table_.reserve(grams.size() * k);
        for (const auto& [g, entries] : grams) {
            const auto row = static_cast<std::uint32_t>(model.seen_mask_.size());
            model.gram_index_.emplace(g, row);
            std::uint64_t mask = 0;
            const std::size_t base = model.table_.size();
            model.table_.insert(model.table_.end(), model.unseen_.begin(), model.unseen_.end());
            for (const auto& [l, v] : entries) {
                model.table_[base + l] = v;
                mask |= std::uint64_t{1} << l;
            }
            model.seen_mask_.push_back(mask);
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed language model: ") + e.what());
    }
    return model;
}

void LangModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write language model " + path.string());
    out << to_json() << '\n';
    if (!out) throw IoError("write failure on " + path.string());
}

LangModel LangModel::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open language model " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

LangModel train_langid(const std::map<std::string, std::vector<Document>>& seed_corpora) {
    std::map<std::string, std::vector<std::string>> seeds;
    for (const auto& [code, docs] : seed_corpora) {
        auto& texts = seeds[code];
        for (const auto& d : docs) texts.push_back(d.text);
    }
    return LangModel::train(seeds);
}

LanguageGuess detect_language(const LangModel& model, std::string_view text) { return model.detect(text); }

}  // namespace esprep
