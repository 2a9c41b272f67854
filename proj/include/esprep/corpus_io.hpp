#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace esprep {

using DocId = std::uint64_t;

/// One corpus record. `meta` carries per-stage annotations (language score,
/// filter verdict, dedup cluster) as plain strings.
struct Document {
    DocId id = 0;
    std::string source;
    std::string text;
    std::map<std::string, std::string> meta;

    friend bool operator==(const Document&, const Document&) = default;
};

/// Accounting for one stage. For filtering stages docs_out + sum(rejects) == docs_in.
struct CorpusStats {
    std::uint64_t docs_in = 0;
    std::uint64_t docs_out = 0;
    std::uint64_t bytes_in = 0;
    std::uint64_t bytes_out = 0;
    std::map<std::string, std::uint64_t> rejects_by_rule;

    std::uint64_t rejected() const;
    bool balanced() const { return docs_out + rejected() == docs_in; }
    void merge(const CorpusStats& other);
};

/// Parses one JSON-lines record. `ordinal` supplies the id when the record has none.
Document parse_document(std::string_view line, std::uint64_t line_number, DocId ordinal);
std::string serialize_document(const Document& doc);

/// Lazy single-consumer stream over a JSON-lines corpus.
///
/// A reader may be restricted to a byte range [begin, end) for parallel ingestion;
/// `begin` must sit on a line boundary and lines are attributed to the range their
/// first byte falls in. Ids absent from the file are assigned from `first_ordinal`
/// in record order.
class CorpusReader {
public:
    explicit CorpusReader(const std::filesystem::path& path);
    CorpusReader(const std::filesystem::path& path, std::uint64_t begin, std::uint64_t end,
                 DocId first_ordinal = 0);

    std::optional<Document> next();

    std::uint64_t bytes_read() const { return bytes_read_; }
    std::uint64_t docs_read() const { return ordinal_ - first_ordinal_; }
    const std::filesystem::path& path() const { return path_; }

    class iterator {
    public:
        using value_type = Document;
        using difference_type = std::ptrdiff_t;

        iterator() = default;
        explicit iterator(CorpusReader* reader) : reader_(reader) { ++*this; }

        const Document& operator*() const { return *current_; }
        const Document* operator->() const { return &*current_; }
        iterator& operator++() {
            current_ = reader_->next();
            if (!current_) reader_ = nullptr;
            return *this;
        }
        void operator++(int) { ++*this; }
        bool operator==(const iterator& other) const { return reader_ == other.reader_; }

    private:
        CorpusReader* reader_ = nullptr;
        std::optional<Document> current_;
    };

    iterator begin() { return iterator(this); }
    iterator end() { return iterator(); }

private:
    std::filesystem::path path_;
    std::ifstream in_;
    std::uint64_t offset_ = 0;
    std::uint64_t end_;
    std::uint64_t line_number_ = 0;
    DocId first_ordinal_ = 0;
    DocId ordinal_ = 0;
    std::uint64_t bytes_read_ = 0;
    std::unordered_set<DocId> seen_ids_;
};

CorpusReader read_corpus(const std::filesystem::path& path);
std::vector<Document> read_all(const std::filesystem::path& path);

/// Exclusive writer for one output file.
class CorpusWriter {
public:
    explicit CorpusWriter(const std::filesystem::path& path);

    void write(const Document& doc);
    /// Flushes and closes; throws IoError if any write failed.
    CorpusStats close();

    const CorpusStats& stats() const { return stats_; }

private:
    std::filesystem::path path_;
    std::ofstream out_;
    CorpusStats stats_;
};

CorpusStats write_corpus(std::span<const Document> docs, const std::filesystem::path& path);

}  // namespace esprep
