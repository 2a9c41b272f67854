#include "esprep/corpus_io.hpp"

#include "esprep/error.hpp"
#include "esprep/unicode.hpp"

#include <json.hpp>

#include <limits>
#include <numeric>
#include <regex>

namespace esprep {
namespace {

using json = nlohmann::json;

std::string located(std::uint64_t line_number, const std::string& what) {
    return "line " + std::to_string(line_number) + ": " + what;
}

// Best effort id recovery for error messages on lines that cannot be parsed.
std::string guess_id(std::string_view line, DocId ordinal) {
    static const std::regex id_re(R"re("id"\s*:\s*([0-9]+))re");
    std::cmatch m;
    if (std::regex_search(line.data(), line.data() + line.size(), m, id_re)) return m[1].str();
    return std::to_string(ordinal);
}

std::string meta_value(const json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
}

}  // namespace

std::uint64_t CorpusStats::rejected() const {
    return std::accumulate(rejects_by_rule.begin(), rejects_by_rule.end(), std::uint64_t{0},
                           [](std::uint64_t acc, const auto& kv) { return acc + kv.second; });
}

void CorpusStats::merge(const CorpusStats& other) {
    docs_in += other.docs_in;
    docs_out += other.docs_out;
    bytes_in += other.bytes_in;
    bytes_out += other.bytes_out;
    for (const auto& [rule, n] : other.rejects_by_rule) rejects_by_rule[rule] += n;
}

Document parse_document(std::string_view line, std::uint64_t line_number, DocId ordinal) {
    if (!unicode::is_valid_utf8(line)) {
        throw DataError(located(line_number, "document " + guess_id(line, ordinal) + " has invalid UTF-8"));
    }
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        if (std::string_view(e.what()).find("surrogate") != std::string_view::npos) {
            throw DataError(located(line_number, "document " + guess_id(line, ordinal) + " has a lone surrogate"));
        }
        throw DataError(located(line_number, "malformed record"));
    }
    if (!j.is_object() || !j.contains("text") || !j["text"].is_string()) {
        throw DataError(located(line_number, "malformed record (object with string \"text\" required)"));
    }

    Document doc;
    if (auto it = j.find("id"); it != j.end() && !it->is_null()) {
        if (!it->is_number_unsigned()) throw DataError(located(line_number, "malformed record (id must be unsigned)"));
        doc.id = it->get<DocId>();
    } else {
        doc.id = ordinal;
    }
    if (auto it = j.find("source"); it != j.end() && it->is_string()) doc.source = it->get<std::string>();
    doc.text = j["text"].get<std::string>();
    if (doc.text.find('\0') != std::string::npos) {
        throw DataError(located(line_number, "document " + std::to_string(doc.id) + " contains NUL"));
    }
    if (auto it = j.find("meta"); it != j.end()) {
        if (!it->is_object()) throw DataError(located(line_number, "malformed record (meta must be an object)"));
        for (const auto& [k, v] : it->items()) doc.meta.emplace(k, meta_value(v));
    }
    return doc;
}

std::string serialize_document(const Document& doc) {
    nlohmann::ordered_json j;
    j["id"] = doc.id;
    j["source"] = doc.source;
    j["text"] = doc.text;
    j["meta"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : doc.meta) j["meta"][k] = v;
    return j.dump(-1, ' ', false, json::error_handler_t::strict);
}

CorpusReader::CorpusReader(const std::filesystem::path& path)
    : CorpusReader(path, 0, std::numeric_limits<std::uint64_t>::max(), 0) {}

CorpusReader::CorpusReader(const std::filesystem::path& path, std::uint64_t begin, std::uint64_t end,
                           DocId first_ordinal)
    : path_(path), in_(path, std::ios::binary), offset_(begin), end_(end),
      first_ordinal_(first_ordinal), ordinal_(first_ordinal) {
    if (!in_) throw IoError("cannot open corpus " + path.string());
    if (begin > 0) in_.seekg(static_cast<std::streamoff>(begin));
}

std::optional<Document> CorpusReader::next() {
    std::string line;
    while (offset_ < end_ && std::getline(in_, line)) {
        ++line_number_;
        const std::uint64_t consumed = line.size() + (in_.eof() ? 0 : 1);
        offset_ += consumed;
        bytes_read_ += consumed;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Document doc = parse_document(line, line_number_, ordinal_);
        ++ordinal_;
        if (!seen_ids_.insert(doc.id).second) {
            throw DataError(located(line_number_, "duplicate document id " + std::to_string(doc.id)));
        }
        return doc;
    }
    if (in_.bad()) throw IoError("read failure on " + path_.string());
    return std::nullopt;
}

CorpusReader read_corpus(const std::filesystem::path& path) { return CorpusReader(path); }

std::vector<Document> read_all(const std::filesystem::path& path) {
    std::vector<Document> docs;
    CorpusReader reader(path);
    while (auto doc = reader.next()) docs.push_back(std::move(*doc));
    return docs;
}

CorpusWriter::CorpusWriter(const std::filesystem::path& path)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot open " + path.string() + " for writing");
}

void CorpusWriter::write(const Document& doc) {
    std::string line = serialize_document(doc);
    line.push_back('\n');
    out_.write(line.data(), static_cast<std::streamsize>(line.size()));
    if (!out_) throw IoError("write failure on " + path_.string());
    ++stats_.docs_in;
    ++stats_.docs_out;
    stats_.bytes_in += line.size();
    stats_.bytes_out += line.size();
}

CorpusStats CorpusWriter::close() {
    if (out_.is_open()) {
        out_.close();
        if (out_.fail()) throw IoError("failed to close " + path_.string());
    }
    return stats_;
}

CorpusStats write_corpus(std::span<const Document> docs, const std::filesystem::path& path) {
    CorpusWriter writer(path);
    for (const auto& doc : docs) writer.write(doc);
    return writer.close();
}

}  // namespace esprep
