#include "esprep/taskprep.hpp"

#include "esprep/error.hpp"
#include "esprep/unicode.hpp"

#include <charconv>
#include <fstream>

namespace esprep {

std::string_view to_string(TaskKind task) {
    switch (task) {
        case TaskKind::summarization: return "summarization";
        case TaskKind::qa: return "qa";
        case TaskKind::split_rephrase: return "split_rephrase";
        case TaskKind::dialogue: return "dialogue";
        case TaskKind::translation: return "translation";
        case TaskKind::classification: return "classification";
    }
    return "?";
}

TaskKind parse_task_kind(std::string_view name) {
    for (auto t : {TaskKind::summarization, TaskKind::qa, TaskKind::split_rephrase, TaskKind::dialogue,
                   TaskKind::translation, TaskKind::classification}) {
        if (to_string(t) == name) return t;
    }
    throw ConfigError("unknown task '" + std::string(name) +
                      "' (expected summarization, qa, split_rephrase, dialogue, translation or classification)");
}

namespace {

bool blank(std::string_view s) {
    for (const auto w : unicode::split_whitespace(s)) {
        if (!w.empty()) return false;
    }
    return true;
}

std::string require_string(const nlohmann::json& fields, const std::string& name) {
    if (!fields.is_object() || !fields.contains(name)) throw SchemaError("missing field '" + name + "'");
    const auto& v = fields.at(name);
    if (!v.is_string()) throw SchemaError("field '" + name + "' must be a string");
    std::string s = v.get<std::string>();
    if (blank(s)) throw SchemaError("field '" + name + "' is empty");
    return s;
}

std::vector<std::string> require_string_list(const nlohmann::json& fields, const std::string& name) {
    if (!fields.is_object() || !fields.contains(name)) throw SchemaError("missing field '" + name + "'");
    const auto& v = fields.at(name);
    if (!v.is_array()) throw SchemaError("field '" + name + "' must be a list of strings");
    std::vector<std::string> out;
    for (const auto& item : v) {
        if (!item.is_string()) throw SchemaError("field '" + name + "' must be a list of strings");
        out.push_back(item.get<std::string>());
    }
    return out;
}

// Answers come as a string, {"text": ...}, a list of either, or {"text": [...]}.
std::string answer_text(const nlohmann::json& fields) {
    if (!fields.is_object() || !fields.contains("answer")) throw SchemaError("missing field 'answer'");
    const nlohmann::json* v = &fields.at("answer");
    for (int depth = 0; depth < 3; ++depth) {
        if (v->is_array()) {
            if (v->empty()) throw SchemaError("field 'answer' is empty");
            v = &v->front();
        } else if (v->is_object()) {
            if (!v->contains("text")) throw SchemaError("field 'answer' has no 'text'");
            v = &v->at("text");
        }
    }
    if (!v->is_string()) throw SchemaError("field 'answer' must hold text");
    std::string s = v->get<std::string>();
    if (blank(s)) throw SchemaError("field 'answer' is empty");
    return s;
}

std::string example_id(const nlohmann::json& fields) {
    if (!fields.is_object() || !fields.contains("id")) return {};
    const auto& v = fields.at("id");
    return v.is_string() ? v.get<std::string>() : v.dump();
}

}  // namespace

Pair format_summarization(const TaskExample& ex) {
    return {require_string(ex.fields, "document"), require_string(ex.fields, "summary"), example_id(ex.fields)};
}

Pair format_qa(const TaskExample& ex, std::string_view tmpl) {
    if (tmpl.find("{q}") == std::string_view::npos || tmpl.find("{c}") == std::string_view::npos) {
        throw ConfigError("qa template must contain both {q} and {c}: '" + std::string(tmpl) + "'");
    }
    const std::string q = require_string(ex.fields, "question");
    const std::string c = require_string(ex.fields, "context");
    // Fill in one pass so slot markers inside the question are left alone.
    std::string source;
    for (std::size_t i = 0; i < tmpl.size();) {
        if (tmpl.compare(i, 3, "{q}") == 0) {
            source += q;
            i += 3;
        } else if (tmpl.compare(i, 3, "{c}") == 0) {
            source += c;
            i += 3;
        } else {
            source += tmpl[i++];
        }
    }
    return {std::move(source), answer_text(ex.fields), example_id(ex.fields)};
}

Pair format_split_rephrase(const TaskExample& ex, std::string_view sep) {
    std::string source = require_string(ex.fields, "complex");
    const auto simple = require_string_list(ex.fields, "simple");
    if (simple.size() < 2) throw SchemaError("field 'simple' needs at least 2 sentences");
    std::string target;
    for (std::size_t i = 0; i < simple.size(); ++i) {
        if (blank(simple[i])) throw SchemaError("field 'simple' has an empty sentence");
        if (i > 0) {
            target += ' ';
            target += sep;
            target += ' ';
        }
        target += simple[i];
    }
    return {std::move(source), std::move(target), example_id(ex.fields)};
}

Pair format_translation(const TaskExample& ex, Direction direction) {
    std::string src = require_string(ex.fields, "src_text");
    std::string tgt = require_string(ex.fields, "tgt_text");
    if (direction == Direction::reverse) std::swap(src, tgt);
    return {std::move(src), std::move(tgt), example_id(ex.fields)};
}

std::vector<Pair> format_dialogue(const std::vector<std::string>& utterances, std::size_t history_max,
                                  std::string_view id) {
    std::vector<Pair> out;
    if (utterances.size() < 2) return out;
    for (const auto& u : utterances) {
        if (blank(u)) throw SchemaError("field 'utterances' has an empty utterance");
    }
    for (std::size_t k = 1; k < utterances.size(); ++k) {
        const std::size_t window = history_max == 0 ? k : std::min(k, history_max);
        std::string source;
        for (std::size_t i = k - window; i < k; ++i) {
            if (i > k - window) source += kDialogueJoiner;
            source += utterances[i];
        }
        std::string pair_id = id.empty() ? std::to_string(k) : std::string(id) + "-" + std::to_string(k);
        out.push_back({std::move(source), utterances[k], std::move(pair_id)});
    }
    return out;
}

std::string format_regression_score(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed);
    std::string s(buf, res.ptr);
    const bool negative = !s.empty() && s[0] == '-';
    if (negative) s.erase(0, 1);
    const std::size_t dot = s.find('.');
    std::string whole = dot == std::string::npos ? s : s.substr(0, dot);
    std::string frac = dot == std::string::npos ? "" : s.substr(dot + 1);
    std::string digits = whole + (frac.empty() ? "0" : frac.substr(0, 1));
    const std::string rest = frac.size() > 1 ? frac.substr(1) : "";
    bool up = false;
    if (!rest.empty()) {
        if (rest[0] > '5') {
            up = true;
        } else if (rest[0] == '5') {
            const bool exact_half = rest.find_first_not_of('0', 1) == std::string::npos;
            up = !exact_half || (digits.back() - '0') % 2 == 1;
        }
    }
    if (up) {
        std::size_t i = digits.size();
        while (i > 0) {
            --i;
            if (digits[i] == '9') {
                digits[i] = '0';
            } else {
                ++digits[i];
                break;
            }
            if (i == 0) digits.insert(digits.begin(), '1');
        }
    }
    std::string out = digits.substr(0, digits.size() - 1) + "." + digits.back();
    if (negative && out.find_first_not_of("0.") != std::string::npos) out.insert(out.begin(), '-');
    return out;
}

Pair format_classification_t2t(const TaskExample& ex, const ClassificationSpec& spec) {
    std::string source = spec.task_name;
    const bool paired = ex.fields.is_object() && (ex.fields.contains("premise") || ex.fields.contains("hypothesis"));
    if (paired) {
        source += " premisa: " + require_string(ex.fields, "premise");
        source += " hipótesis: " + require_string(ex.fields, "hypothesis");
    } else {
        source += " texto: " + require_string(ex.fields, "text");
    }
    std::string target;
    if (spec.regression) {
        if (!ex.fields.contains("score")) throw SchemaError("missing field 'score'");
        const auto& v = ex.fields.at("score");
        double score = 0.0;
        if (v.is_number()) {
            score = v.get<double>();
        } else if (v.is_string()) {
            const std::string s = v.get<std::string>();
            const auto res = std::from_chars(s.data(), s.data() + s.size(), score);
            if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
                throw SchemaError("field 'score' is not a number: '" + s + "'");
            }
        } else {
            throw SchemaError("field 'score' must be a number");
        }
        target = format_regression_score(score);
    } else {
        if (!ex.fields.contains("label")) throw SchemaError("missing field 'label'");
        const auto& v = ex.fields.at("label");
        const std::string label = v.is_string() ? v.get<std::string>() : v.dump();
        const auto it = spec.label_map.find(label);
        if (it == spec.label_map.end()) throw SchemaError("field 'label' has unknown value '" + label + "'");
        target = it->second;
    }
    return {std::move(source), std::move(target), example_id(ex.fields)};
}

std::vector<Pair> format_example(const TaskExample& ex, const TaskOptions& opts, TaskprepStats* stats) {
    std::vector<Pair> out;
    switch (ex.task) {
        case TaskKind::summarization: out.push_back(format_summarization(ex)); break;
        case TaskKind::qa: out.push_back(format_qa(ex, opts.qa_template)); break;
        case TaskKind::split_rephrase: out.push_back(format_split_rephrase(ex, opts.sep)); break;
        case TaskKind::translation: out.push_back(format_translation(ex, opts.direction)); break;
        case TaskKind::classification: out.push_back(format_classification_t2t(ex, opts.classification)); break;
        case TaskKind::dialogue: {
            const auto utterances = require_string_list(ex.fields, "utterances");
            out = format_dialogue(utterances, opts.history_max, example_id(ex.fields));
            if (out.empty() && stats) ++stats->warnings;
            break;
        }
    }
    return out;
}

std::string to_json(const Pair& pair) {
    nlohmann::ordered_json j;
    j["id"] = pair.id;
    j["source"] = pair.source;
    j["target"] = pair.target;
    return j.dump();
}

TaskprepStats taskprep_file(const std::filesystem::path& input, const std::filesystem::path& output,
                            const TaskOptions& opts) {
    if (opts.task == TaskKind::qa) {
        if (opts.qa_template.find("{q}") == std::string::npos || opts.qa_template.find("{c}") == std::string::npos) {
            throw ConfigError("qa template must contain both {q} and {c}: '" + opts.qa_template + "'");
        }
    }
    std::ifstream in(input, std::ios::binary);
    if (!in) throw IoError("cannot open " + input.string());
    std::ofstream out(output, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + output.string() + " for writing");
    TaskprepStats stats;
    std::string line;
    std::uint64_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (blank(line)) continue;
        TaskExample ex{opts.task, {}};
        try {
            ex.fields = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception&) {
            throw DataError("line " + std::to_string(line_number) + ": malformed record");
        }
        if (!ex.fields.is_object()) throw DataError("line " + std::to_string(line_number) + ": record is not an object");
        if (!ex.fields.contains("id")) ex.fields["id"] = std::to_string(stats.examples);
        ++stats.examples;
        std::vector<Pair> pairs;
        try {
            pairs = format_example(ex, opts, &stats);
        } catch (const SchemaError& e) {
            throw SchemaError("line " + std::to_string(line_number) + ": " + e.what());
        }
        for (const auto& p : pairs) {
            out << to_json(p) << '\n';
            ++stats.pairs;
        }
    }
    out.flush();
    if (!out) throw IoError("write failed on " + output.string());
    return stats;
}

}  // namespace esprep
