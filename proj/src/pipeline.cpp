#include "esprep/pipeline.hpp"

#include "esprep/encoding.hpp"
#include "esprep/error.hpp"
#include "esprep/hashing.hpp"
#include "esprep/langid.hpp"
#include "esprep/parallel.hpp"
#include "esprep/unicode.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace esprep {
namespace {

constexpr std::size_t kBatch = 1024;

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string unquote(std::string_view raw) {
    std::string s = trim(raw);
    if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
        s = s.substr(1, s.size() - 2);
    }
    return s;
}

std::vector<std::string> parse_list(std::string_view raw) {
    std::string s = trim(raw);
    if (s.size() >= 2 && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
    std::vector<std::string> out;
    std::size_t at = 0;
    while (at <= s.size()) {
        const auto comma = s.find(',', at);
        const std::string item = unquote(s.substr(at, comma == std::string::npos ? std::string::npos : comma - at));
        if (!item.empty()) out.push_back(item);
        if (comma == std::string::npos) break;
        at = comma + 1;
    }
    return out;
}

template <typename T>
T parse_number(const std::string& key, std::string_view value) {
    T out{};
    const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
        throw ConfigError(key + ": invalid number '" + std::string(value) + "'");
    }
    return out;
}

std::uint64_t parse_u64(const std::string& key, std::string_view value) {
    if (value.starts_with("0x") || value.starts_with("0X")) {
        std::uint64_t out = 0;
        const auto* b = value.data() + 2;
        const auto res = std::from_chars(b, value.data() + value.size(), out, 16);
        if (res.ec != std::errc() || res.ptr != value.data() + value.size() || value.size() == 2) {
            throw ConfigError(key + ": invalid number '" + std::string(value) + "'");
        }
        return out;
    }
    return parse_number<std::uint64_t>(key, value);
}

bool parse_bool(const std::string& key, std::string_view value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError(key + ": expected true or false, got '" + std::string(value) + "'");
}

std::string fmt_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string opt_path(const std::optional<std::filesystem::path>& p) { return p ? p->string() : ""; }

std::optional<std::filesystem::path> to_opt_path(std::string_view v) {
    if (v.empty()) return std::nullopt;
    return std::filesystem::path(std::string(v));
}

struct Field {
    const char* key;
    std::function<void(PipelineConfig&, const std::string&)> set;
    std::function<std::string(const PipelineConfig&)> get;
};

std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
    return out;
}

const std::vector<Field>& fields() {
    using C = PipelineConfig;
    using S = const std::string&;
    static const std::vector<Field> table = {
        {"stages", [](C& c, S v) { c.stages = parse_list(v); }, [](const C& c) { return join(c.stages); }},
        {"input", [](C& c, S v) { c.input = v; }, [](const C& c) { return c.input.string(); }},
        {"output_dir", [](C& c, S v) { c.output_dir = v; }, [](const C& c) { return c.output_dir.string(); }},
        {"seed", [](C& c, S v) { c.seed = parse_u64("seed", v); c.noise.seed = c.seed; },
         [](const C& c) { return std::to_string(c.seed); }},
        {"workers", [](C& c, S v) { c.workers = parse_number<unsigned>("workers", v); }, nullptr},

        {"ingest.format",
         [](C& c, S v) {
             if (v == "jsonl") c.ingest.format = IngestFormat::jsonl;
             else if (v == "text") c.ingest.format = IngestFormat::text;
             else throw ConfigError("ingest.format: expected jsonl or text, got '" + v + "'");
         },
         [](const C& c) { return std::string(c.ingest.format == IngestFormat::jsonl ? "jsonl" : "text"); }},
        {"ingest.source", [](C& c, S v) { c.ingest.source = v; }, [](const C& c) { return c.ingest.source; }},

        {"clean.min_chars", [](C& c, S v) { c.clean.config.min_chars = parse_number<std::size_t>("clean.min_chars", v); },
         [](const C& c) { return std::to_string(c.clean.config.min_chars); }},
        {"clean.min_sentences",
         [](C& c, S v) { c.clean.config.min_sentences = parse_number<std::size_t>("clean.min_sentences", v); },
         [](const C& c) { return std::to_string(c.clean.config.min_sentences); }},
        {"clean.max_char_run",
         [](C& c, S v) { c.clean.config.max_char_run = parse_number<std::size_t>("clean.max_char_run", v); },
         [](const C& c) { return std::to_string(c.clean.config.max_char_run); }},
        {"clean.max_symbol_ratio",
         [](C& c, S v) { c.clean.config.max_symbol_ratio = parse_number<double>("clean.max_symbol_ratio", v); },
         [](const C& c) { return fmt_double(c.clean.config.max_symbol_ratio); }},
        {"clean.max_top_char_ratio",
         [](C& c, S v) { c.clean.config.max_top_char_ratio = parse_number<double>("clean.max_top_char_ratio", v); },
         [](const C& c) { return fmt_double(c.clean.config.max_top_char_ratio); }},
        {"clean.code_keyword_threshold",
         [](C& c, S v) {
             c.clean.config.code_keyword_threshold = parse_number<std::size_t>("clean.code_keyword_threshold", v);
         },
         [](const C& c) { return std::to_string(c.clean.config.code_keyword_threshold); }},
        {"clean.lang_threshold",
         [](C& c, S v) { c.clean.config.lang_threshold = parse_number<double>("clean.lang_threshold", v); },
         [](const C& c) { return fmt_double(c.clean.config.lang_threshold); }},
        {"clean.target_lang", [](C& c, S v) { c.clean.config.target_lang = v; },
         [](const C& c) { return c.clean.config.target_lang; }},
        {"clean.lang_model", [](C& c, S v) { c.clean.lang_model = to_opt_path(v); },
         [](const C& c) { return opt_path(c.clean.lang_model); }},
        {"clean.blocklist", [](C& c, S v) { c.clean.blocklist = to_opt_path(v); },
         [](const C& c) { return opt_path(c.clean.blocklist); }},
        {"clean.abbreviations", [](C& c, S v) { c.clean.abbreviations = to_opt_path(v); },
         [](const C& c) { return opt_path(c.clean.abbreviations); }},
        {"clean.repair", [](C& c, S v) { c.clean.repair = parse_bool("clean.repair", v); },
         [](const C& c) { return std::string(c.clean.repair ? "true" : "false"); }},

        {"dedup.mode", [](C& c, S v) { c.dedup.mode = parse_dedup_mode(v); },
         [](const C& c) { return std::string(to_string(c.dedup.mode)); }},
        {"dedup.shingle_words",
         [](C& c, S v) { c.dedup.shingle_words = parse_number<std::size_t>("dedup.shingle_words", v); },
         [](const C& c) { return std::to_string(c.dedup.shingle_words); }},
        {"dedup.num_perms", [](C& c, S v) { c.dedup.num_perms = parse_number<std::size_t>("dedup.num_perms", v); },
         [](const C& c) { return std::to_string(c.dedup.num_perms); }},
        {"dedup.bands", [](C& c, S v) { c.dedup.bands = parse_number<std::size_t>("dedup.bands", v); },
         [](const C& c) { return std::to_string(c.dedup.bands); }},
        {"dedup.rows", [](C& c, S v) { c.dedup.rows = parse_number<std::size_t>("dedup.rows", v); },
         [](const C& c) { return std::to_string(c.dedup.rows); }},
        {"dedup.seed", [](C& c, S v) { c.dedup.seed = parse_u64("dedup.seed", v); },
         [](const C& c) { return std::to_string(c.dedup.seed); }},
        {"dedup.signatures", [](C& c, S v) { c.dedup_signatures = parse_bool("dedup.signatures", v); },
         [](const C& c) { return std::string(c.dedup_signatures ? "true" : "false"); }},

        {"tokenizer.kind", [](C& c, S v) { c.tokenizer.kind = parse_tokenizer_kind(v); },
         [](const C& c) { return std::string(to_string(c.tokenizer.kind)); }},
        {"tokenizer.vocab_size",
         [](C& c, S v) { c.tokenizer.vocab_size = parse_number<std::size_t>("tokenizer.vocab_size", v); },
         [](const C& c) { return std::to_string(c.tokenizer.vocab_size); }},
        {"tokenizer.sentinels", [](C& c, S v) { c.tokenizer.sentinels = parse_bool("tokenizer.sentinels", v); },
         [](const C& c) { return std::string(c.tokenizer.sentinels ? "true" : "false"); }},
        {"tokenizer.model", [](C& c, S v) { c.tokenizer.model = to_opt_path(v); },
         [](const C& c) { return opt_path(c.tokenizer.model); }},
        {"tokenizer.max_piece_chars",
         [](C& c, S v) {
             c.tokenizer.unigram.max_piece_chars = parse_number<std::size_t>("tokenizer.max_piece_chars", v);
         },
         [](const C& c) { return std::to_string(c.tokenizer.unigram.max_piece_chars); }},
        {"tokenizer.em_rounds",
         [](C& c, S v) { c.tokenizer.unigram.em_rounds = parse_number<std::size_t>("tokenizer.em_rounds", v); },
         [](const C& c) { return std::to_string(c.tokenizer.unigram.em_rounds); }},
        {"tokenizer.prune_ratio",
         [](C& c, S v) { c.tokenizer.unigram.prune_ratio = parse_number<double>("tokenizer.prune_ratio", v); },
         [](const C& c) { return fmt_double(c.tokenizer.unigram.prune_ratio); }},
        {"tokenizer.seed_factor",
         [](C& c, S v) { c.tokenizer.unigram.seed_factor = parse_number<std::size_t>("tokenizer.seed_factor", v); },
         [](const C& c) { return std::to_string(c.tokenizer.unigram.seed_factor); }},

        {"noise.objective",
         [](C& c, S v) {
             c.noise.objective = parse_noise_objective(v);
             if (c.noise.objective == NoiseObjective::t5) c.tokenizer.sentinels = true;
         },
         [](const C& c) { return std::string(to_string(c.noise.objective)); }},
        {"noise.mask_rate", [](C& c, S v) { c.noise.mask_rate = parse_number<double>("noise.mask_rate", v); },
         [](const C& c) { return fmt_double(c.noise.mask_rate); }},
        {"noise.span_lambda", [](C& c, S v) { c.noise.span_lambda = parse_number<double>("noise.span_lambda", v); },
         [](const C& c) { return fmt_double(c.noise.span_lambda); }},
        {"noise.permute_sentences",
         [](C& c, S v) { c.noise.permute_sentences = parse_bool("noise.permute_sentences", v); },
         [](const C& c) { return std::string(c.noise.permute_sentences ? "true" : "false"); }},
        {"noise.corruption_rate",
         [](C& c, S v) { c.noise.corruption_rate = parse_number<double>("noise.corruption_rate", v); },
         [](const C& c) { return fmt_double(c.noise.corruption_rate); }},
        {"noise.mean_span", [](C& c, S v) { c.noise.mean_span = parse_number<double>("noise.mean_span", v); },
         [](const C& c) { return fmt_double(c.noise.mean_span); }},
        {"noise.max_len", [](C& c, S v) { c.noise.max_len = parse_number<std::size_t>("noise.max_len", v); },
         [](const C& c) { return std::to_string(c.noise.max_len); }},
        {"noise.min_chunk", [](C& c, S v) { c.noise.min_chunk = parse_number<std::size_t>("noise.min_chunk", v); },
         [](const C& c) { return std::to_string(c.noise.min_chunk); }},
    };
    return table;
}

void apply(PipelineConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& f : fields()) {
        if (key == f.key) {
            f.set(cfg, value);
            return;
        }
    }
    throw ConfigError("unknown config key '" + key + "'");
}

std::size_t stage_rank(std::string_view name) {
    for (std::size_t i = 0; i < std::size(kStageOrder); ++i) {
        if (kStageOrder[i] == name) return i;
    }
    throw ConfigError("unknown stage '" + std::string(name) +
                      "' (expected ingest, clean, dedup, repair, tokenizer or noise)");
}

bool has_stage(const PipelineConfig& cfg, std::string_view name) {
    return std::find(cfg.stages.begin(), cfg.stages.end(), name) != cfg.stages.end();
}

std::string file_sha256(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    Sha256 h;
    std::string buf(1 << 16, '\0');
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        h.update(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())));
    }
    return to_hex(h.finish());
}

// Applies fn to every document in batches, in parallel, then hands results to
// `emit` in input order.
template <typename Result, typename Fn, typename Emit>
void for_each_batch(CorpusReader& reader, unsigned workers, Fn&& fn, Emit&& emit) {
    std::vector<Document> batch;
    std::vector<Result> results;
    auto flush = [&] {
        results.assign(batch.size(), Result{});
        parallel_for(batch.size(), workers, [&](std::size_t i) { results[i] = fn(batch[i]); });
        for (std::size_t i = 0; i < batch.size(); ++i) emit(batch[i], results[i]);
        batch.clear();
    };
    while (auto doc = reader.next()) {
        batch.push_back(std::move(*doc));
        if (batch.size() == kBatch) flush();
    }
    flush();
}

}  // namespace

PipelineConfig PipelineConfig::parse(std::string_view text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in{std::string(text)};
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
    }
    PipelineConfig cfg;
    // Objective first, so an explicit tokenizer.sentinels later in the file wins.
    if (const auto obj = tree.get_optional<std::string>("noise.objective")) apply(cfg, "noise.objective", unquote(*obj));
    for (const auto& [section, node] : tree) {
        if (node.empty()) {
            apply(cfg, section, unquote(node.data()));
            continue;
        }
        for (const auto& [key, leaf] : node) {
            if (!leaf.empty()) throw ConfigError("config: nested section under [" + section + "]");
            const std::string full = section + "." + key;
            if (full == "noise.objective") continue;
            apply(cfg, full, unquote(leaf.data()));
        }
    }
    return cfg;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

void PipelineConfig::set(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) throw ConfigError("override '" + std::string(assignment) + "' lacks '='");
    apply(*this, trim(assignment.substr(0, eq)), unquote(assignment.substr(eq + 1)));
}

void PipelineConfig::validate() const {
    if (stages.empty()) throw ConfigError("no stages configured");
    std::size_t prev = 0;
    for (std::size_t i = 0; i < stages.size(); ++i) {
        const std::size_t rank = stage_rank(stages[i]);
        if (i > 0 && rank <= prev) {
            throw ConfigError("invalid stage order: '" + stages[i] + "' cannot follow '" + stages[i - 1] +
                              "' (required order: ingest, clean, dedup, repair, tokenizer, noise)");
        }
        prev = rank;
    }
    if (input.empty()) throw ConfigError("input path is not set");
    if (output_dir.empty()) throw ConfigError("output_dir is not set");
    clean.config.validate();
    dedup.validate();
    noise.validate();
    if (tokenizer.vocab_size == 0) throw ConfigError("tokenizer.vocab_size must be positive");
    if (has_stage(*this, "noise") && !has_stage(*this, "tokenizer") && !tokenizer.model) {
        throw ConfigError("noise stage needs a tokenizer stage or tokenizer.model");
    }
    if (has_stage(*this, "noise") && noise.objective == NoiseObjective::t5 && !tokenizer.model &&
        !tokenizer.sentinels) {
        throw ConfigError("t5 objective needs tokenizer.sentinels = true");
    }
}

std::string PipelineConfig::canonical() const {
    std::vector<std::string> lines;
    for (const auto& f : fields()) {
        if (f.get) lines.push_back(std::string(f.key) + "=" + f.get(*this));
    }
    std::sort(lines.begin(), lines.end());
    std::string out;
    for (const auto& l : lines) out += l + "\n";
    return out;
}

std::string PipelineConfig::hash() const { return to_hex(sha256(canonical())); }

std::string RunManifest::to_json() const {
    nlohmann::ordered_json j;
    j["config_hash"] = config_hash;
    j["tool_version"] = tool_version;
    j["status"] = status;
    j["stages"] = nlohmann::ordered_json::array();
    for (const auto& s : stages) {
        nlohmann::ordered_json st;
        st["name"] = s.name;
        st["status"] = s.status;
        st["docs_in"] = s.stats.docs_in;
        st["docs_out"] = s.stats.docs_out;
        st["bytes_in"] = s.stats.bytes_in;
        st["bytes_out"] = s.stats.bytes_out;
        st["rejects_by_rule"] = s.stats.rejects_by_rule;
        st["wall_seconds"] = s.wall_seconds;
        st["details"] = s.details;
        if (!s.error.empty()) st["error"] = s.error;
        j["stages"].push_back(std::move(st));
    }
    return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(std::string_view json) {
    RunManifest m;
    try {
        const auto j = nlohmann::json::parse(json);
        m.config_hash = j.at("config_hash").get<std::string>();
        m.tool_version = j.at("tool_version").get<std::string>();
        m.status = j.at("status").get<std::string>();
        for (const auto& st : j.at("stages")) {
            StageRecord s;
            s.name = st.at("name").get<std::string>();
            s.status = st.at("status").get<std::string>();
            s.stats.docs_in = st.at("docs_in").get<std::uint64_t>();
            s.stats.docs_out = st.at("docs_out").get<std::uint64_t>();
            s.stats.bytes_in = st.at("bytes_in").get<std::uint64_t>();
            s.stats.bytes_out = st.at("bytes_out").get<std::uint64_t>();
            s.stats.rejects_by_rule = st.at("rejects_by_rule").get<std::map<std::string, std::uint64_t>>();
            s.wall_seconds = st.at("wall_seconds").get<double>();
            s.details = st.at("details").get<std::map<std::string, std::string>>();
            if (st.contains("error")) s.error = st.at("error").get<std::string>();
            m.stages.push_back(std::move(s));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed manifest: ") + e.what());
    }
    return m;
}

std::string report(const RunManifest& manifest) {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof line, "%-10s %-7s %12s %12s %12s %10s\n", "stage", "status", "docs_in", "docs_out",
                  "rejected", "wall_s");
    out += line;
    for (const auto& s : manifest.stages) {
        std::snprintf(line, sizeof line, "%-10s %-7s %12llu %12llu %12llu %10.3f\n", s.name.c_str(),
                      s.status.c_str(), static_cast<unsigned long long>(s.stats.docs_in),
                      static_cast<unsigned long long>(s.stats.docs_out),
                      static_cast<unsigned long long>(s.stats.rejected()), s.wall_seconds);
        out += line;
        for (const auto& [rule, n] : s.stats.rejects_by_rule) {
            std::snprintf(line, sizeof line, "  reject %-24s %12llu\n", rule.c_str(), static_cast<unsigned long long>(n));
            out += line;
        }
        for (const auto& [key, value] : s.details) {
            if (key == "sha256" || key == "artifact") continue;
            out += "  " + key + ": " + value + "\n";
        }
    }
    return out;
}

CorpusStats ingest_file(const std::filesystem::path& input, const std::filesystem::path& output,
                        const IngestOptions& opts) {
    CorpusWriter writer(output);
    CorpusStats stats;
    if (opts.format == IngestFormat::jsonl) {
        CorpusReader reader(input);
        while (auto doc = reader.next()) {
            if (!opts.source.empty()) doc->source = opts.source;
            writer.write(*doc);
        }
        stats = writer.close();
        stats.docs_in = reader.docs_read();
        stats.bytes_in = reader.bytes_read();
        return stats;
    }
    // Plain text: documents are separated by blank lines.
    std::ifstream in(input, std::ios::binary);
    if (!in) throw IoError("cannot open " + input.string());
    std::string line, text;
    std::uint64_t line_number = 0, bytes = 0;
    DocId next_id = 0;
    auto emit = [&] {
        if (text.empty()) return;
        if (!unicode::is_valid_utf8(text)) {
            throw DataError("document " + std::to_string(next_id) + ": invalid UTF-8 (ending at line " +
                            std::to_string(line_number) + ")");
        }
        Document doc;
        doc.id = next_id++;
        doc.source = opts.source;
        doc.text = std::move(text);
        writer.write(doc);
        text.clear();
    };
    while (std::getline(in, line)) {
        ++line_number;
        bytes += line.size() + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) {
            emit();
            continue;
        }
        if (!text.empty()) text += '\n';
        text += line;
    }
    emit();
    stats = writer.close();
    stats.docs_in = stats.docs_out;
    stats.bytes_in = bytes;
    return stats;
}

CorpusStats clean_file(const std::filesystem::path& input, const std::filesystem::path& output,
                       const Cleaner& cleaner, unsigned workers) {
    CorpusReader reader(input);
    CorpusWriter writer(output);
    std::map<std::string, std::uint64_t> rejects;
    std::uint64_t docs_in = 0;
    for_each_batch<FilterDecision>(
        reader, workers, [&](Document& doc) { return cleaner(doc); },
        [&](const Document& doc, const FilterDecision& d) {
            ++docs_in;
            if (d.accepted) {
                writer.write(doc);
            } else {
                ++rejects[d.rule];
            }
        });
    CorpusStats stats = writer.close();
    stats.docs_in = docs_in;
    stats.bytes_in = reader.bytes_read();
    stats.rejects_by_rule = std::move(rejects);
    return stats;
}

CorpusStats repair_file(const std::filesystem::path& input, const std::filesystem::path& output, unsigned workers,
                        std::uint64_t* changed_docs) {
    CorpusReader reader(input);
    CorpusWriter writer(output);
    std::uint64_t changed = 0;
    for_each_batch<char>(
        reader, workers,
        [](Document& doc) -> char {
            std::string fixed = fix_encoding(doc.text);
            const bool differs = fixed != doc.text;
            doc.text = std::move(fixed);
            return differs ? 1 : 0;
        },
        [&](const Document& doc, char differs) {
            changed += static_cast<std::uint64_t>(differs);
            writer.write(doc);
        });
    CorpusStats stats = writer.close();
    stats.bytes_in = reader.bytes_read();
    if (changed_docs) *changed_docs = changed;
    return stats;
}

WordCounter count_words(const std::filesystem::path& input, unsigned workers) {
    CorpusReader reader(input);
    const unsigned w = std::max(1u, workers);
    WordCounter total;
    std::vector<Document> batch;
    auto flush = [&] {
        std::vector<WordCounter> parts(w);
        parallel_for(w, w, [&](std::size_t s) {
            const std::size_t begin = batch.size() * s / w, end = batch.size() * (s + 1) / w;
            for (std::size_t i = begin; i < end; ++i) parts[s].add(batch[i]);
        });
        for (const auto& p : parts) total.merge(p);
        batch.clear();
    };
    while (auto doc = reader.next()) {
        batch.push_back(std::move(*doc));
        if (batch.size() == kBatch * 4) flush();
    }
    flush();
    return total;
}

Tokenizer train_tokenizer(const std::filesystem::path& input, const TokenizerSettings& settings, unsigned workers) {
    const WordCounter counts = count_words(input, workers);
    return settings.kind == TokenizerKind::bpe
               ? train_bpe(counts, settings.vocab_size, settings.specials())
               : train_unigram(counts, settings.vocab_size, settings.specials(), settings.unigram);
}

Cleaner make_cleaner(const CleanSettings& settings) {
    CleanConfig cfg = settings.config;
    if (settings.blocklist) cfg.blocklist = load_word_list(*settings.blocklist);
    cfg.validate();
    SentenceSplitter splitter = settings.abbreviations ? SentenceSplitter::from_file(*settings.abbreviations)
                                                       : SentenceSplitter();
    std::shared_ptr<const LangModel> model;
    if (settings.lang_model) model = std::make_shared<const LangModel>(LangModel::load(*settings.lang_model));
    return Cleaner(std::move(cfg), std::move(splitter), std::move(model), settings.repair);
}

RunManifest run_pipeline(const PipelineConfig& cfg) {
    cfg.validate();
    const unsigned workers = resolve_workers(cfg.workers);
    if (!std::filesystem::exists(cfg.input)) throw IoError("input not found: " + cfg.input.string());
    std::error_code ec;
    std::filesystem::create_directories(cfg.output_dir, ec);
    if (ec) throw IoError("cannot create " + cfg.output_dir.string() + ": " + ec.message());

    RunManifest manifest;
    manifest.config_hash = cfg.hash();
    const auto manifest_path = cfg.output_dir / "manifest.json";
    auto write_manifest = [&] {
        std::ofstream out(manifest_path, std::ios::binary | std::ios::trunc);
        out << manifest.to_json();
        if (!out) throw IoError("cannot write " + manifest_path.string());
    };

    std::filesystem::path current = cfg.input;
    std::optional<Tokenizer> tokenizer;
    if (cfg.tokenizer.model && !has_stage(cfg, "tokenizer")) tokenizer = Tokenizer::load(*cfg.tokenizer.model);

    for (const auto& stage : cfg.stages) {
        StageRecord rec;
        rec.name = stage;
        const auto start = std::chrono::steady_clock::now();
        try {
            if (stage == "ingest") {
                const auto out = cfg.output_dir / "ingest.jsonl";
                rec.stats = ingest_file(current, out, cfg.ingest);
                rec.details["artifact"] = out.filename().string();
                current = out;
            } else if (stage == "clean") {
                const auto out = cfg.output_dir / "clean.jsonl";
                rec.stats = clean_file(current, out, make_cleaner(cfg.clean), workers);
                rec.details["artifact"] = out.filename().string();
                current = out;
            } else if (stage == "dedup") {
                const auto out = cfg.output_dir / "dedup.jsonl";
                std::optional<std::filesystem::path> sigs;
                if (cfg.dedup_signatures) sigs = cfg.output_dir / "signatures.mhsig";
                const auto res = dedup_file(current, out, cfg.dedup, workers, sigs);
                rec.stats = res.stats;
                std::ofstream rep(cfg.output_dir / "dedup_report.json", std::ios::binary | std::ios::trunc);
                rep << res.report.to_json() << '\n';
                if (!rep) throw IoError("cannot write dedup_report.json");
                rec.details["artifact"] = out.filename().string();
                rec.details["clusters"] = std::to_string(res.report.clusters.size());
                rec.details["removed"] = std::to_string(res.report.removed_count);
                rec.details["bypassed"] = std::to_string(res.report.bypassed);
                current = out;
            } else if (stage == "repair") {
                const auto out = cfg.output_dir / "repair.jsonl";
                std::uint64_t changed = 0;
                rec.stats = repair_file(current, out, workers, &changed);
                rec.details["repaired_docs"] = std::to_string(changed);
                rec.details["artifact"] = out.filename().string();
                current = out;
            } else if (stage == "tokenizer") {
                const auto out = cfg.output_dir / "tokenizer.model";
                if (cfg.tokenizer.model) {
                    tokenizer = Tokenizer::load(*cfg.tokenizer.model);
                } else {
                    const WordCounter counts = count_words(current, workers);
                    if (!counts.empty()) {
                        const auto& t = cfg.tokenizer;
                        tokenizer = t.kind == TokenizerKind::bpe
                                        ? train_bpe(counts, t.vocab_size, t.specials())
                                        : train_unigram(counts, t.vocab_size, t.specials(), t.unigram);
                    }
                }
                if (tokenizer) {
                    tokenizer->save(out);
                    rec.details["artifact"] = out.filename().string();
                    rec.details["vocab_size"] = std::to_string(tokenizer->size());
                } else {
                    rec.details["skipped"] = "empty corpus";
                }
            } else if (stage == "noise") {
                const auto out = cfg.output_dir / "pairs.jsonl";
                NoiseStats ns;
                if (tokenizer) {
                    ns = noise_file(current, out, *tokenizer, cfg.noise, workers);
                } else {
                    // Only reachable when the corpus was empty at the tokenizer stage.
                    CorpusReader reader(current);
                    if (reader.next()) throw ConfigError("noise stage has no tokenizer");
                    std::ofstream(out, std::ios::binary | std::ios::trunc);
                }
                rec.stats.docs_in = rec.stats.docs_out = ns.docs;
                rec.stats.bytes_out = ns.bytes_out;
                rec.details["artifact"] = out.filename().string();
                rec.details["pairs"] = std::to_string(ns.pairs);
                rec.details["chunk_tokens"] = std::to_string(ns.chunk_tokens);
                rec.details["noised_tokens"] = std::to_string(ns.noised_tokens);
            }
            if (const auto it = rec.details.find("artifact"); it != rec.details.end()) {
                rec.details["sha256"] = file_sha256(cfg.output_dir / it->second);
            }
            rec.status = "ok";
        } catch (const Error& e) {
            rec.status = "failed";
            rec.error = e.what();
            rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            manifest.stages.push_back(std::move(rec));
            manifest.status = "failed";
            write_manifest();
            throw;
        }
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        manifest.stages.push_back(std::move(rec));
    }
    write_manifest();
    return manifest;
}

}  // namespace esprep
