#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "json.hpp"
#include "topicens/corpus.hpp"
#include "topicens/matrix.hpp"

namespace topicens {

struct LdaConfig {
  std::size_t k = 20;
  double alpha = 5.0 / 20.0;
  double beta = 0.01;
  std::size_t iterations = 10'000;
  std::uint64_t seed = 0;

  /// alpha = 5/k, beta = 0.01, 10,000 sweeps.
  static LdaConfig defaults(std::size_t k, std::uint64_t seed = 0);

  /// Throws std::invalid_argument on k < 1, non-positive priors or zero iterations.
  void validate() const;

  friend bool operator==(const LdaConfig&, const LdaConfig&) = default;
};

/// Topic-term (phi, k x V) and document-topic (theta, D x k) distributions.
/// theta is empty for imported models that came without doc-topic data.
struct TopicModel {
  DenseMatrix phi;
  DenseMatrix theta;
  LdaConfig config;
  std::size_t model_id = 0;

  std::size_t num_topics() const noexcept { return phi.rows(); }
  std::size_t num_terms() const noexcept { return phi.cols(); }
  bool has_theta() const noexcept { return !theta.empty(); }

  /// Checks non-negativity and unit row sums (within `tolerance`) of phi and theta.
  void check_invariants(double tolerance = 1e-9) const;
};

/// Sampler state exposed to sweep observers. Tokens are laid out document-major
/// in the order of the matrix rows (each entry expanded `count` times).
struct GibbsState {
  std::size_t num_topics = 0;
  std::size_t num_terms = 0;
  std::vector<std::uint32_t> token_doc;
  std::vector<TermId> token_term;
  std::vector<std::uint32_t> assignment;
  std::vector<std::uint32_t> doc_topic;    // D x k
  std::vector<std::uint32_t> topic_term;   // k x V
  std::vector<std::uint32_t> topic_total;  // k
  std::vector<std::uint32_t> doc_length;   // D
};

/// Called after initialisation (sweep 0) and after every completed sweep.
using SweepObserver = std::function<void(std::size_t sweep, const GibbsState& state)>;

/// Collapsed Gibbs sampling for LDA with symmetric priors. Each token's topic
/// is resampled every sweep with probability proportional to
/// (n_dt + alpha) (n_tw + beta) / (n_t + V beta), counts excluding the token.
/// Initial assignments are uniform. The point estimate is taken from the final
/// state. Same (matrix, config) gives a bit-identical model.
TopicModel train(const DocTermMatrix& matrix, const LdaConfig& config,
                 const SweepObserver& observer = {});

/// Smoothed estimates from a sampler state.
TopicModel estimate_model(const GibbsState& state, const LdaConfig& config);

/// Sum over documents and terms of count * log(sum_t theta_dt phi_tw).
double log_likelihood(const TopicModel& model, const DocTermMatrix& matrix);

/// Verifies the count-conservation invariants of a sampler state. Throws
/// StructureError on the first violation.
void check_count_conservation(const GibbsState& state);

/// JSON export: config, vocabulary hash, dense phi and theta rows.
nlohmann::json model_to_json(const TopicModel& model, const Vocabulary& vocabulary);
TopicModel model_from_json(const nlohmann::json& j);

nlohmann::json config_to_json(const LdaConfig& config);
LdaConfig config_from_json(const nlohmann::json& j);

}  // namespace topicens
