#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "topicens/corpus.hpp"
#include "topicens/ensemble.hpp"

namespace topicens {

struct DocRankingRow {
  std::size_t doc_index = 0;
  std::string doc_id;
  std::vector<double> theta;
};

/// Documents with the largest share of one topic, descending.
struct DocRanking {
  TopicRef topic;
  std::vector<DocRankingRow> rows;
};

/// Top `limit` documents by theta[d][topic]; ties go to the smaller doc id.
/// Throws CapabilityError when the member carries no document-topic data.
DocRanking rank_documents(TopicRef topic, const Ensemble& ensemble, std::size_t limit = 20);

enum class HighlightRule {
  /// argmax_t theta[d][t] * phi[t][w]
  document_contextual,
  /// argmax_t phi[t][w]
  global,
};

struct HighlightSpan {
  ByteSpan span;
  std::size_t topic = 0;
  /// Palette slot; the client maps it to a colour.
  std::size_t color = 0;
};

struct HighlightedDocument {
  std::string doc_id;
  std::string raw_text;
  std::vector<HighlightSpan> spans;
};

/// Assigns every retained in-vocabulary token of `doc` to a topic of `model`.
/// `doc_index` selects the theta row (needed for the contextual rule only).
/// Ties go to the lower topic index.
HighlightedDocument highlight(const Document& doc, std::size_t doc_index, const TopicModel& model,
                              const Vocabulary& vocabulary, HighlightRule rule = HighlightRule::document_contextual);

}  // namespace topicens
