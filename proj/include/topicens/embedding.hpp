#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "topicens/ensemble.hpp"
#include "topicens/matrix.hpp"
#include "topicens/metrics.hpp"

namespace topicens {

struct EmbeddingConfig {
  double perplexity = 30.0;
  std::size_t iterations = 1000;
  double learning_rate = 200.0;
  double early_exaggeration = 12.0;
  std::size_t exaggeration_iterations = 250;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  std::size_t momentum_switch_iteration = 250;
  /// Standard deviation of the Gaussian initial layout.
  double init_scale = 1e-4;
  std::uint64_t seed = 0;
};

using Point2 = std::array<double, 2>;

struct Embedding {
  std::vector<TopicRef> refs;
  std::vector<Point2> coords;
  double initial_kl = 0.0;
  double final_kl = 0.0;
};

/// d_ij = 1 - S_ij with an exact zero diagonal.
DenseMatrix similarity_to_distance(const SimilarityMatrix& sim);
DenseMatrix similarity_to_distance(const DenseMatrix& sim);

/// Row-conditional Gaussian affinities p_{j|i} with per-row bandwidths found
/// by bisection so that each row's entropy H (bits) satisfies 2^H = perplexity.
struct ConditionalAffinities {
  DenseMatrix p;
  std::vector<double> entropy_bits;
  std::vector<double> precision;  // beta_i = 1 / (2 sigma_i^2)
};

/// Entropy tolerance of the bandwidth search, in bits.
inline constexpr double kPerplexityTolerance = 1e-5;
inline constexpr int kMaxBisectionSteps = 50;

/// Gaussian kernel on squared distances: p_{j|i} proportional to exp(-beta_i d_ij^2).
ConditionalAffinities conditional_affinities(const DenseMatrix& distances, double perplexity);

/// p_ij = (p_{j|i} + p_{i|j}) / 2n: symmetric, sums to 1.
DenseMatrix joint_probabilities(const DenseMatrix& conditional);

/// KL(P || Q) over i != j with Student-t (one degree of freedom) Q.
double kl_objective(const DenseMatrix& p, const std::vector<Point2>& coords);

/// Analytic gradient of kl_objective with respect to every coordinate.
std::vector<Point2> kl_gradient(const DenseMatrix& p, const std::vector<Point2>& coords);

/// Exact t-SNE on a precomputed distance matrix. Throws std::invalid_argument
/// for non-square, asymmetric or negative input, n < 4, or a perplexity above
/// (n - 1) / 3. The result is mean-centred and deterministic for a fixed seed.
Embedding tsne(const DenseMatrix& distances, const EmbeddingConfig& config);

/// Embeds an ensemble's similarity matrix; refs follow the matrix order.
Embedding embed_topics(const SimilarityMatrix& sim, const EmbeddingConfig& config);

/// CSV: model_index,topic_index,x,y
void write_embedding_csv(std::ostream& out, const Embedding& embedding);

}  // namespace topicens
