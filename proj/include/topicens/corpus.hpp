#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace topicens {

using TermId = std::uint32_t;

/// Half-open byte range [begin, end) into a document's raw text.
struct ByteSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const ByteSpan&, const ByteSpan&) = default;
};

struct Token {
  std::string surface;
  std::string normalized;
  ByteSpan span;
  /// Stopwords and too-short tokens stay in the stream so the document view
  /// can still render them; they never reach the vocabulary.
  bool filtered = false;
};

struct Document {
  std::string id;
  std::string title;
  std::string raw_text;
  std::vector<Token> tokens;
};

struct PreprocessConfig {
  bool lowercase = true;
  std::unordered_set<std::string> stopwords;
  /// Minimum token length in code points.
  std::size_t min_length = 1;
  /// Optional normalizer applied after lowercasing (e.g. a stemmer). No-op when empty.
  std::function<std::string(std::string_view)> normalizer;
};

class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> terms);

  std::size_t size() const noexcept { return terms_.size(); }
  bool empty() const noexcept { return terms_.empty(); }
  const std::string& term(TermId id) const { return terms_.at(id); }
  std::optional<TermId> lookup(std::string_view term) const;
  const std::vector<std::string>& terms() const noexcept { return terms_; }

  /// Appends `term` if absent and returns its id.
  TermId add(std::string_view term);

  /// SHA-256 (hex) over the newline-joined term list; identifies the term space.
  std::string content_hash() const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.terms_ == b.terms_; }

 private:
  std::vector<std::string> terms_;
  std::unordered_map<std::string, TermId> index_;
};

/// Sparse document-term counts, one row per document. Each row lists
/// (term id, count) pairs with strictly increasing term ids and positive counts.
class DocTermMatrix {
 public:
  struct Entry {
    TermId term;
    std::uint32_t count;

    friend bool operator==(const Entry&, const Entry&) = default;
  };

  DocTermMatrix() = default;
  DocTermMatrix(std::size_t num_terms, std::vector<std::string> doc_ids,
                std::vector<std::vector<Entry>> rows);

  std::size_t num_docs() const noexcept { return rows_.size(); }
  std::size_t num_terms() const noexcept { return num_terms_; }
  std::span<const Entry> row(std::size_t doc) const { return rows_.at(doc); }
  const std::vector<std::string>& doc_ids() const noexcept { return doc_ids_; }

  std::uint32_t count(std::size_t doc, TermId term) const;
  std::uint64_t row_sum(std::size_t doc) const;
  std::uint64_t total() const;

  friend bool operator==(const DocTermMatrix&, const DocTermMatrix&) = default;

 private:
  std::size_t num_terms_ = 0;
  std::vector<std::string> doc_ids_;
  std::vector<std::vector<Entry>> rows_;
};

/// Splits `raw_text` on non-letter boundaries (UTF-8 aware). Deterministic;
/// spans index into `raw_text`.
std::vector<Token> tokenize(std::string_view raw_text, const PreprocessConfig& config);

/// Builds the vocabulary (terms sorted by byte order) and counts.
/// Throws Error if no term survives filtering.
std::pair<Vocabulary, DocTermMatrix> build_matrix(std::span<const Document> documents,
                                                  std::size_t min_doc_freq = 1);

/// Tokenizes every document in place (in parallel).
void tokenize_all(std::span<Document> documents, const PreprocessConfig& config);

/// Reads a directory of *.txt files (stem = id, sorted by id) or a JSON-lines
/// file with {"id","title","text"} objects. Documents come back untokenized.
std::vector<Document> load_corpus(const std::filesystem::path& path);

/// One term per line, '#' starts a comment, blank lines ignored.
std::unordered_set<std::string> load_stopwords(const std::filesystem::path& path);

/// Stopword-file parsing on an in-memory string.
std::unordered_set<std::string> parse_stopwords(std::string_view text);

namespace utf8 {
/// Decodes one code point at `pos`, advancing `pos`. Invalid bytes decode as U+FFFD.
char32_t decode(std::string_view text, std::size_t& pos);
void append(std::string& out, char32_t cp);
bool is_letter(char32_t cp);
char32_t to_lower(char32_t cp);
}  // namespace utf8

}  // namespace topicens
