#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace esprep {

enum class TaskKind { summarization, qa, split_rephrase, dialogue, translation, classification };

std::string_view to_string(TaskKind task);
TaskKind parse_task_kind(std::string_view name);

/// One raw dataset record; `fields` is the JSON object as read.
struct TaskExample {
    TaskKind task = TaskKind::summarization;
    nlohmann::json fields;
};

struct Pair {
    std::string source;
    std::string target;
    std::string id;

    friend bool operator==(const Pair&, const Pair&) = default;
};

inline constexpr std::string_view kDefaultQaTemplate = "pregunta: {q} contexto: {c}";
inline constexpr std::string_view kDialogueJoiner = " </s> ";

enum class Direction { forward, reverse };

/// Field names: summarization {document, summary}; qa {question, context, answer};
/// split_rephrase {complex, simple[]}; translation {src_text, tgt_text}.
/// Required string fields must be present and not blank, else SchemaError naming the field.
Pair format_summarization(const TaskExample& ex);
/// Throws ConfigError when the template lacks {q} or {c}.
Pair format_qa(const TaskExample& ex, std::string_view tmpl = kDefaultQaTemplate);
Pair format_split_rephrase(const TaskExample& ex, std::string_view sep = "<s>");
Pair format_translation(const TaskExample& ex, Direction direction = Direction::forward);

/// history_max == 0 means unlimited. Sessions under two utterances yield nothing.
std::vector<Pair> format_dialogue(const std::vector<std::string>& utterances, std::size_t history_max = 0,
                                  std::string_view id = {});

struct ClassificationSpec {
    std::string task_name = "xnli";
    std::map<std::string, std::string> label_map = {
        {"entailment", "implicación"}, {"neutral", "neutral"}, {"contradiction", "contradicción"}};
    bool regression = false;  // target is `score` rounded to one decimal
};

/// Paired inputs {premise, hypothesis} or single {text}; target from `label` via the
/// label map, or from `score` for regression tasks.
Pair format_classification_t2t(const TaskExample& ex, const ClassificationSpec& spec = {});

/// Decimal round-half-even of the shortest representation of `value` to one place.
std::string format_regression_score(double value);

struct TaskOptions {
    TaskKind task = TaskKind::summarization;
    std::string qa_template = std::string(kDefaultQaTemplate);
    std::string sep = "<s>";
    std::size_t history_max = 0;
    Direction direction = Direction::forward;
    ClassificationSpec classification;
};

struct TaskprepStats {
    std::uint64_t examples = 0;
    std::uint64_t pairs = 0;
    std::uint64_t warnings = 0;  // dialogue sessions too short to yield pairs
};

/// Dialogue records carry `utterances` (list of strings); ids come from `id` or the line ordinal.
std::vector<Pair> format_example(const TaskExample& ex, const TaskOptions& opts, TaskprepStats* stats = nullptr);

/// JSON-lines in, JSON-lines {id, source, target} out. Errors name the input line.
TaskprepStats taskprep_file(const std::filesystem::path& input, const std::filesystem::path& output,
                            const TaskOptions& opts);

std::string to_json(const Pair& pair);

}  // namespace esprep
