#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "topicens/ensemble.hpp"
#include "topicens/matrix.hpp"

namespace topicens {

/// Cosine similarity; in [0, 1] for non-negative inputs.
/// Throws std::invalid_argument on dimension mismatch, std::domain_error on a zero vector.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Kullback-Leibler divergence KL(a || b) in nats with 0 log 0 = 0.
/// Throws std::domain_error when a(x) > 0 but b(x) = 0.
double kl_divergence(std::span<const double> a, std::span<const double> b);

/// Jensen-Shannon divergence in nats: symmetric, within [0, ln 2].
double js_divergence(std::span<const double> a, std::span<const double> b);

/// Shannon entropy in nats.
double entropy(std::span<const double> p);

/// Pairwise cosine similarities of every topic in an ensemble (member-major
/// order). Symmetric with a unit diagonal.
struct SimilarityMatrix {
  std::vector<TopicRef> refs;
  DenseMatrix values;

  std::size_t size() const noexcept { return refs.size(); }
  double operator()(std::size_t i, std::size_t j) const { return values(i, j); }
};

SimilarityMatrix similarity_matrix(const Ensemble& ensemble);

/// Raised when a topic has zero similarity to every topic of a target model.
class DegenerateMatch : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Normalised similarities of one topic to all topics of another member.
struct MatchDistribution {
  TopicRef source;
  std::size_t target_model = 0;
  std::vector<double> s;
};

MatchDistribution match_distribution(TopicRef source, std::size_t target_model, const Ensemble& ensemble,
                                     const SimilarityMatrix& sim);

/// 1 - KL(s || uniform) / KL(one-hot || uniform). Defined as 0 for a single-topic target.
double matching_uncertainty_pair(const MatchDistribution& s);
double matching_uncertainty_pair(std::span<const double> s);

/// Mean pairwise matching uncertainty against every other member. A
/// degenerate (all-zero) match row counts as 1.
double matching_uncertainty(TopicRef ref, const Ensemble& ensemble, const SimilarityMatrix& sim);

/// 1 - mean over other members of the best similarity to any of their topics.
double existence_uncertainty(TopicRef ref, const Ensemble& ensemble, const SimilarityMatrix& sim);

struct UncertaintyRecord {
  TopicRef ref;
  double u_match = 0.0;
  double u_exist = 0.0;
  /// Pairs scored 1 because no topic of the target member shared any support.
  std::uint32_t degenerate_pairs = 0;
  /// Pairs scored 0 because the target member has a single topic.
  std::uint32_t single_topic_pairs = 0;
};

struct EnsembleMetrics {
  SimilarityMatrix similarity;
  std::vector<UncertaintyRecord> records;
};

/// Similarity matrix plus one record per topic, in ensemble refs() order.
EnsembleMetrics compute_all(const Ensemble& ensemble);

/// CSV: model_index,topic_index,u_match,u_exist
void write_uncertainty_csv(std::ostream& out, std::span<const UncertaintyRecord> records);
/// CSV with a header row and column of "model/topic" labels.
void write_similarity_csv(std::ostream& out, const SimilarityMatrix& sim);

/// Binary sidecar: 8-byte magic "TOPSIM01", uint64 LE dimension n, then n*n
/// little-endian IEEE-754 float64 values, row-major.
void write_similarity_binary(std::ostream& out, const DenseMatrix& values);
DenseMatrix read_similarity_binary(std::istream& in);

}  // namespace topicens
