#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "topicens/ensemble.hpp"

namespace topicens {

/// Files produced by one MALLET run (one ensemble member).
struct MalletMemberFiles {
  std::filesystem::path topic_word_weights;
  std::optional<std::filesystem::path> doc_topics;
};

struct TopicWordWeights {
  struct Line {
    std::size_t topic;
    std::string term;
    double weight;
  };
  std::size_t num_topics = 0;
  std::vector<Line> lines;
};

/// Parses "topic<TAB>term<TAB>weight" lines. Topic ids must cover 0..k-1.
/// `source` names the input in ParseError messages.
TopicWordWeights parse_topic_word_weights(std::istream& in, const std::string& source);

struct DocTopics {
  std::vector<std::string> doc_names;
  /// One row per document, normalised to sum to 1.
  DenseMatrix theta;
  bool sparse_format = false;
};

/// Parses a doc-topics file for a model with `num_topics` topics. Accepts the
/// dense layout (index, name, k proportions) and the older sparse layout
/// (index, name, then topic/proportion pairs), chosen per file: a
/// "#doc name topic proportion" header or a column count other than k + 2
/// selects the pair layout.
DocTopics parse_doc_topics(std::istream& in, const std::string& source, std::size_t num_topics);

/// Builds an ensemble from one set of MALLET files per member. The vocabulary
/// is the union of all terms in file order. Terms a topic does not list get the
/// member's smoothing floor: the smallest listed weight when every listed
/// weight is positive (MALLET writes count + beta), zero otherwise. Each topic
/// row is then normalised.
Ensemble import_mallet(std::span<const MalletMemberFiles> members);

/// Writes member i as `<dir>/member-<i>.topic-word-weights.txt` and (when
/// theta is present) `<dir>/member-<i>.doc-topics.txt`, full precision.
std::vector<MalletMemberFiles> export_mallet(const Ensemble& ensemble, const std::filesystem::path& dir);

/// "file:/x/y/doc1.txt" -> "doc1": strips a file: scheme, directories and a .txt suffix.
std::string mallet_doc_id(std::string_view name);

}  // namespace topicens
