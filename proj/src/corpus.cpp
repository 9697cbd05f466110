#include "topicens/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "hashing.hpp"
#include "json.hpp"
#include "topicens/error.hpp"
#include "topicens/parallel.hpp"

namespace topicens {

namespace utf8 {

char32_t decode(std::string_view text, std::size_t& pos) {
  constexpr char32_t kReplacement = 0xFFFD;
  const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(text[i]); };
  const unsigned char lead = byte(pos);
  std::size_t len = 0;
  char32_t cp = 0;
  if (lead < 0x80) {
    ++pos;
    return lead;
  } else if ((lead & 0xE0) == 0xC0) {
    len = 2;
    cp = lead & 0x1F;
  } else if ((lead & 0xF0) == 0xE0) {
    len = 3;
    cp = lead & 0x0F;
  } else if ((lead & 0xF8) == 0xF0) {
    len = 4;
    cp = lead & 0x07;
  } else {
    ++pos;
    return kReplacement;
  }
  if (pos + len > text.size()) {
    ++pos;
    return kReplacement;
  }
  for (std::size_t i = 1; i < len; ++i) {
    const unsigned char b = byte(pos + i);
    if ((b & 0xC0) != 0x80) {
      ++pos;
      return kReplacement;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  pos += len;
  return cp;
}

void append(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Letter classification covers the alphabetic scripts (Latin, Greek, Cyrillic,
// Armenian, Hebrew, Arabic) and the CJK blocks. Combining marks count as
// letters so decomposed accents stay inside their word.
bool is_letter(char32_t cp) {
  if (cp < 0x80) return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
  if (cp == 0xAA || cp == 0xB5 || cp == 0xBA) return true;
  if (cp >= 0xC0 && cp <= 0xFF) return cp != 0xD7 && cp != 0xF7;
  if (cp >= 0x100 && cp <= 0x2AF) return true;
  if (cp >= 0x300 && cp <= 0x36F) return true;
  if (cp >= 0x370 && cp <= 0x3FF) return cp != 0x37E && cp != 0x387 && cp != 0x375;
  if (cp >= 0x400 && cp <= 0x52F) return cp < 0x482 || cp > 0x489;
  if (cp >= 0x531 && cp <= 0x587) return cp < 0x557 || cp > 0x560;
  if (cp >= 0x5D0 && cp <= 0x5EA) return true;
  if (cp >= 0x620 && cp <= 0x64A) return true;
  if (cp >= 0x1E00 && cp <= 0x1FFF) return true;
  if (cp >= 0x3040 && cp <= 0x30FF) return cp != 0x30FB;
  if (cp >= 0x3400 && cp <= 0x9FFF) return true;
  if (cp >= 0xAC00 && cp <= 0xD7AF) return true;
  return false;
}

char32_t to_lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
  if (cp < 0xC0) return cp;
  if (cp <= 0xDE) return cp == 0xD7 ? cp : cp + 0x20;
  if (cp == 0x130) return U'i';
  if (cp == 0x178) return 0xFF;
  if ((cp >= 0x100 && cp <= 0x137) || (cp >= 0x14A && cp <= 0x177)) return cp | 1;
  if ((cp >= 0x139 && cp <= 0x148) || (cp >= 0x179 && cp <= 0x17E)) return (cp & 1) ? cp + 1 : cp;
  if (cp >= 0x391 && cp <= 0x3AB && cp != 0x3A2) return cp + 0x20;
  if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;
  if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;
  if (cp >= 0x1E00 && cp <= 0x1E95) return cp | 1;
  return cp;
}

}  // namespace utf8

Vocabulary::Vocabulary(std::vector<std::string> terms) {
  terms_.reserve(terms.size());
  for (auto& t : terms) {
    if (index_.contains(t)) throw StructureError("duplicate vocabulary term '" + t + "'");
    index_.emplace(t, static_cast<TermId>(terms_.size()));
    terms_.push_back(std::move(t));
  }
}

std::optional<TermId> Vocabulary::lookup(std::string_view term) const {
  const auto it = index_.find(std::string(term));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TermId Vocabulary::add(std::string_view term) {
  const auto [it, inserted] = index_.emplace(std::string(term), static_cast<TermId>(terms_.size()));
  if (inserted) terms_.emplace_back(term);
  return it->second;
}

std::string Vocabulary::content_hash() const {
  detail::Sha256 h;
  for (const auto& t : terms_) {
    h.update(t);
    h.update("\n");
  }
  return h.hex_digest();
}

DocTermMatrix::DocTermMatrix(std::size_t num_terms, std::vector<std::string> doc_ids,
                             std::vector<std::vector<Entry>> rows)
    : num_terms_(num_terms), doc_ids_(std::move(doc_ids)), rows_(std::move(rows)) {
  if (doc_ids_.size() != rows_.size()) {
    throw StructureError("document id count does not match row count");
  }
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (row[i].term >= num_terms_) throw StructureError("term id out of range");
      if (row[i].count == 0) throw StructureError("zero count stored in sparse row");
      if (i > 0 && row[i - 1].term >= row[i].term) {
        throw StructureError("sparse row term ids must be strictly increasing");
      }
    }
  }
}

std::uint32_t DocTermMatrix::count(std::size_t doc, TermId term) const {
  const auto& r = rows_.at(doc);
  const auto it = std::lower_bound(r.begin(), r.end(), term,
                                   [](const Entry& e, TermId t) { return e.term < t; });
  return (it != r.end() && it->term == term) ? it->count : 0;
}

std::uint64_t DocTermMatrix::row_sum(std::size_t doc) const {
  std::uint64_t s = 0;
  for (const auto& e : rows_.at(doc)) s += e.count;
  return s;
}

std::uint64_t DocTermMatrix::total() const {
  std::uint64_t s = 0;
  for (std::size_t d = 0; d < rows_.size(); ++d) s += row_sum(d);
  return s;
}

std::vector<Token> tokenize(std::string_view raw_text, const PreprocessConfig& config) {
  std::vector<Token> tokens;
  std::size_t pos = 0;
  while (pos < raw_text.size()) {
    std::size_t start = pos;
    char32_t cp = utf8::decode(raw_text, pos);
    if (!utf8::is_letter(cp)) continue;

    Token tok;
    std::size_t code_points = 0;
    std::size_t end = pos;
    for (;;) {
      utf8::append(tok.normalized, config.lowercase ? utf8::to_lower(cp) : cp);
      ++code_points;
      end = pos;
      if (pos >= raw_text.size()) break;
      std::size_t next = pos;
      cp = utf8::decode(raw_text, next);
      if (!utf8::is_letter(cp)) break;
      pos = next;
    }
    tok.span = {start, end};
    tok.surface = std::string(raw_text.substr(start, end - start));
    if (config.normalizer) tok.normalized = config.normalizer(tok.normalized);
    tok.filtered = tok.normalized.empty() || code_points < config.min_length ||
                   config.stopwords.contains(tok.normalized);
    tokens.push_back(std::move(tok));
  }
  return tokens;
}

void tokenize_all(std::span<Document> documents, const PreprocessConfig& config) {
  parallel_for(documents.size(), [&](std::size_t i) {
    documents[i].tokens = tokenize(documents[i].raw_text, config);
  });
}

std::pair<Vocabulary, DocTermMatrix> build_matrix(std::span<const Document> documents,
                                                  std::size_t min_doc_freq) {
  if (min_doc_freq < 1) throw std::invalid_argument("min_doc_freq must be >= 1");

  std::map<std::string, std::size_t> doc_freq;
  for (const auto& doc : documents) {
    std::vector<std::string_view> seen;
    for (const auto& tok : doc.tokens) {
      if (!tok.filtered) seen.push_back(tok.normalized);
    }
    std::sort(seen.begin(), seen.end());
    seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
    for (auto term : seen) ++doc_freq[std::string(term)];
  }

  std::vector<std::string> terms;
  for (const auto& [term, df] : doc_freq) {
    if (df >= min_doc_freq) terms.push_back(term);
  }
  if (terms.empty()) throw Error("empty vocabulary: every term was filtered out");
  Vocabulary vocab(std::move(terms));

  std::vector<std::string> ids;
  std::vector<std::vector<DocTermMatrix::Entry>> rows;
  ids.reserve(documents.size());
  rows.reserve(documents.size());
  for (const auto& doc : documents) {
    std::map<TermId, std::uint32_t> counts;
    for (const auto& tok : doc.tokens) {
      if (tok.filtered) continue;
      if (auto id = vocab.lookup(tok.normalized)) ++counts[*id];
    }
    std::vector<DocTermMatrix::Entry> row;
    row.reserve(counts.size());
    for (const auto& [term, c] : counts) row.push_back({term, c});
    ids.push_back(doc.id);
    rows.push_back(std::move(row));
  }
  DocTermMatrix matrix(vocab.size(), std::move(ids), std::move(rows));
  return {std::move(vocab), std::move(matrix)};
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<Document> load_corpus(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  std::vector<Document> docs;
  if (fs::is_directory(path)) {
    for (const auto& entry : fs::directory_iterator(path)) {
      if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
      Document d;
      d.id = entry.path().stem().string();
      d.title = d.id;
      d.raw_text = read_file(entry.path());
      docs.push_back(std::move(d));
    }
    std::sort(docs.begin(), docs.end(), [](const Document& a, const Document& b) { return a.id < b.id; });
    return docs;
  }
  if (!fs::is_regular_file(path)) throw Error("corpus path not found: " + path.string());

  std::ifstream in(path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j.contains("text") || !j["id"].is_string() ||
        !j["text"].is_string()) {
      throw ParseError(path.string(), line_no, "expected an object with string \"id\" and \"text\"");
    }
    Document d;
    d.id = j["id"].get<std::string>();
    d.title = j.value("title", d.id);
    d.raw_text = j["text"].get<std::string>();
    docs.push_back(std::move(d));
  }
  return docs;
}

std::unordered_set<std::string> parse_stopwords(std::string_view text) {
  std::unordered_set<std::string> words;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    words.insert(line.substr(b, e - b + 1));
  }
  return words;
}

std::unordered_set<std::string> load_stopwords(const std::filesystem::path& path) {
  return parse_stopwords(read_file(path));
}

}  // namespace topicens
