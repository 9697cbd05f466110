#include "topicens/docviews.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "topicens/error.hpp"

namespace topicens {

DocRanking rank_documents(TopicRef topic, const Ensemble& ensemble, std::size_t limit) {
  if (!ensemble.contains(topic)) throw std::out_of_range("unknown topic");
  const auto& model = ensemble.members[topic.model_index];
  if (!model.has_theta()) {
    throw CapabilityError("member " + std::to_string(topic.model_index) +
                          " has no document-topic proportions; the topic-document view is unavailable");
  }
  const std::size_t docs = model.theta.rows();
  std::vector<std::size_t> order(docs);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto id_of = [&](std::size_t d) -> const std::string& { return ensemble.doc_ids.at(d); };
  const auto before = [&](std::size_t a, std::size_t b) {
    const double ta = model.theta(a, topic.topic_index);
    const double tb = model.theta(b, topic.topic_index);
    return ta != tb ? ta > tb : id_of(a) < id_of(b);
  };
  const std::size_t n = std::min(limit, docs);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(), before);

  DocRanking out;
  out.topic = topic;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = model.theta.row(order[i]);
    out.rows.push_back({order[i], id_of(order[i]), std::vector<double>(row.begin(), row.end())});
  }
  return out;
}

HighlightedDocument highlight(const Document& doc, std::size_t doc_index, const TopicModel& model,
                              const Vocabulary& vocabulary, HighlightRule rule) {
  if (model.num_terms() != vocabulary.size()) throw StructureError("model and vocabulary sizes differ");
  if (rule == HighlightRule::document_contextual) {
    if (!model.has_theta()) throw CapabilityError("model has no document-topic proportions");
    if (doc_index >= model.theta.rows()) throw std::out_of_range("document index out of range");
  }
  HighlightedDocument out;
  out.doc_id = doc.id;
  out.raw_text = doc.raw_text;
  const std::size_t k = model.num_topics();
  for (const auto& tok : doc.tokens) {
    if (tok.filtered) continue;
    const auto term = vocabulary.lookup(tok.normalized);
    if (!term) continue;
    if (tok.span.end > doc.raw_text.size() || tok.span.begin >= tok.span.end) {
      throw StructureError("token span lies outside the document text");
    }
    std::size_t best = 0;
    double best_score = -1.0;
    for (std::size_t t = 0; t < k; ++t) {
      double score = model.phi(t, *term);
      if (rule == HighlightRule::document_contextual) score *= model.theta(doc_index, t);
      if (score > best_score) {
        best_score = score;
        best = t;
      }
    }
    out.spans.push_back({tok.span, best, best});
  }
  return out;
}

}  // namespace topicens
