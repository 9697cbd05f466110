#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "topicens/analysis.hpp"
#include "topicens/corpus.hpp"
#include "topicens/ensemble.hpp"
#include "topicens/matrix.hpp"

namespace topicens {

/// Ground-truth LDA used to sample a synthetic corpus.
///
/// Each topic owns an exclusive block of floor(separation * V / true_k)
/// terms carrying `separation` of its mass; the rest of its mass goes to the
/// pool of terms no topic owns. separation = 1 gives disjoint topics.
struct SyntheticSpec {
  std::size_t true_k = 10;
  std::size_t vocabulary_size = 500;
  std::size_t documents = 200;
  /// Document lengths are uniform on [min_doc_length, max_doc_length].
  std::size_t min_doc_length = 60;
  std::size_t max_doc_length = 140;
  double separation = 0.8;
  /// Symmetric Dirichlet parameter of the document-topic proportions.
  double doc_alpha = 0.1;
  /// Symmetric Dirichlet parameter of the within-block term weights.
  double term_concentration = 1.0;
  std::uint64_t seed = 1;

  std::size_t exclusive_terms() const;
  /// Throws std::invalid_argument.
  void validate() const;
};

struct SyntheticCorpus {
  std::vector<Document> documents;  // tokenized with the default config
  std::vector<std::string> terms;   // ground-truth term names, index = column of phi
  DenseMatrix phi;                  // true_k x V
  DenseMatrix theta;                // D x true_k
};

/// Term names are letters only so they survive tokenization unchanged.
std::string synthetic_term(std::size_t index, std::size_t vocabulary_size);

SyntheticCorpus generate_corpus(const SyntheticSpec& spec);

/// Ground-truth phi re-expressed over `vocabulary` (terms that never occurred
/// in the corpus are dropped, so rows may sum to slightly less than one).
DenseMatrix truth_in_vocabulary(const SyntheticCorpus& corpus, const Vocabulary& vocabulary);

struct ExperimentConfig {
  std::string preset = "E1";
  SyntheticSpec corpus;
  /// Topics per member for E1/E3/E4 (E5 uses its own k list). Defaults to the preset's 20.
  std::optional<std::size_t> k;
  std::size_t iterations = 500;
  std::uint64_t seed = 1;
  /// Minimum cosine for a trained topic to count as a ground-truth match.
  double match_threshold = 0.7;
  /// A cluster is complete when at least this fraction of members has a match.
  double complete_at = 0.8;
};

/// Trained topics matched to one ground-truth topic, at most one per member.
struct ClusterCandidate {
  std::size_t truth_topic = 0;
  std::vector<TopicRef> members;
  std::vector<double> similarities;  // cosine to the ground truth, aligned with members
  double completeness = 0.0;
  double mean_u_match = 0.0;
  double mean_u_exist = 0.0;
  bool complete = false;
};

struct ExperimentReport {
  ExperimentConfig config;
  EnsembleSpec ensemble_spec;
  std::size_t documents = 0;
  std::size_t vocabulary_size = 0;
  std::size_t total_topics = 0;
  EnsembleSummary summary;
  std::optional<Correlation> correlation;
  std::vector<ClusterCandidate> clusters;
  std::size_t recovered = 0;
  /// Mean U_E over the topics of complete clusters.
  double recovered_mean_u_exist = 0.0;
  /// Topics matched to no ground-truth topic.
  std::size_t isolated_topics = 0;
  double isolated_mean_u_exist = 0.0;
  /// Per member: mean cosine similarity over its distinct topic pairs.
  std::vector<double> member_mean_similarity;
  double seconds = 0.0;

  bool similarity_strictly_increasing() const;
  nlohmann::json to_json() const;
  std::string to_text() const;
};

/// Greedy one-to-one matching of one member's topics to the ground truth: all
/// (truth, topic) pairs in decreasing cosine order, each side used once, pairs
/// below `threshold` discarded. Returns the matched topic per truth row.
std::vector<std::optional<std::size_t>> greedy_match(const DenseMatrix& truth, const TopicModel& model,
                                                     double threshold);

/// The preset's ensemble spec adapted to the experiment (k, iterations, seed).
EnsembleSpec experiment_spec(const ExperimentConfig& config);

/// Samples the corpus, trains the ensemble, computes metrics and scores the
/// recovered clusters. Deterministic for fixed seeds.
ExperimentReport run_experiment(const ExperimentConfig& config);

}  // namespace topicens
