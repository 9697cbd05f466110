#include "topicens/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "topicens/parallel.hpp"
#include "topicens/random.hpp"

namespace topicens {

DenseMatrix similarity_to_distance(const DenseMatrix& sim) {
  DenseMatrix d(sim.rows(), sim.cols());
  for (std::size_t i = 0; i < sim.rows(); ++i) {
    for (std::size_t j = 0; j < sim.cols(); ++j) d(i, j) = i == j ? 0.0 : 1.0 - sim(i, j);
  }
  return d;
}

DenseMatrix similarity_to_distance(const SimilarityMatrix& sim) { return similarity_to_distance(sim.values); }

namespace {

void validate_distances(const DenseMatrix& d) {
  const std::size_t n = d.rows();
  if (d.cols() != n) throw std::invalid_argument("distance matrix must be square");
  for (std::size_t i = 0; i < n; ++i) {
    if (d(i, i) != 0.0) throw std::invalid_argument("distance matrix must have a zero diagonal");
    for (std::size_t j = 0; j < n; ++j) {
      if (!(d(i, j) >= 0.0) || !std::isfinite(d(i, j))) {
        throw std::invalid_argument("distances must be finite and non-negative");
      }
      if (std::abs(d(i, j) - d(j, i)) > 1e-12) throw std::invalid_argument("distance matrix is not symmetric");
    }
  }
}

// Row entropy (nats) and normalised kernel exp(-beta d^2) for bandwidth beta;
// squared distances are shifted by the row minimum so large beta does not
// underflow the sum.
double row_kernel(std::span<const double> sq, std::size_t self, double shift, double beta,
                  std::span<double> out) {
  double sum = 0.0;
  double weighted = 0.0;
  for (std::size_t j = 0; j < sq.size(); ++j) {
    if (j == self) {
      out[j] = 0.0;
      continue;
    }
    const double shifted = sq[j] - shift;
    out[j] = std::exp(-beta * shifted);
    sum += out[j];
    weighted += shifted * out[j];
  }
  for (double& v : out) v /= sum;
  return std::log(sum) + beta * weighted / sum;
}

}  // namespace

ConditionalAffinities conditional_affinities(const DenseMatrix& distances, double perplexity) {
  validate_distances(distances);
  if (!(perplexity > 0.0)) throw std::invalid_argument("perplexity must be positive");
  const std::size_t n = distances.rows();
  if (n < 2) throw std::invalid_argument("need at least 2 points");

  ConditionalAffinities out;
  out.p = DenseMatrix(n, n);
  out.entropy_bits.resize(n);
  out.precision.resize(n);
  const double target_bits = std::log2(perplexity);

  parallel_for(n, [&](std::size_t i) {
    std::vector<double> sq(n);
    double shift = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      const double d = distances(i, j);
      sq[j] = d * d;
      if (j != i) shift = std::min(shift, sq[j]);
    }
    auto row = out.p.row(i);
    double beta = 1.0;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    double h_bits = row_kernel(sq, i, shift, beta, row) / std::numbers::ln2;
    for (int step = 0; step < kMaxBisectionSteps; ++step) {
      const double diff = h_bits - target_bits;
      if (std::abs(diff) < kPerplexityTolerance) break;
      if (diff > 0.0) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = std::isinf(lo) ? beta / 2.0 : 0.5 * (beta + lo);
      }
      h_bits = row_kernel(sq, i, shift, beta, row) / std::numbers::ln2;
    }
    out.entropy_bits[i] = h_bits;
    out.precision[i] = beta;
  });
  return out;
}

DenseMatrix joint_probabilities(const DenseMatrix& conditional) {
  const std::size_t n = conditional.rows();
  DenseMatrix p(n, n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      p(i, j) = conditional(i, j) + conditional(j, i);
      total += p(i, j);
    }
  }
  for (double& v : p.data()) v /= total;
  return p;
}

namespace {

// Unnormalised Student-t kernel 1 / (1 + |y_i - y_j|^2) and its off-diagonal sum.
double student_kernel(const std::vector<Point2>& y, DenseMatrix& num) {
  const std::size_t n = y.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num(i, i) = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = y[i][0] - y[j][0];
      const double dy = y[i][1] - y[j][1];
      const double v = 1.0 / (1.0 + dx * dx + dy * dy);
      num(i, j) = v;
      num(j, i) = v;
      total += 2.0 * v;
    }
  }
  return total;
}

void gradient_into(const DenseMatrix& p, double exaggeration, const std::vector<Point2>& y, DenseMatrix& num,
                   std::vector<Point2>& grad) {
  const std::size_t n = y.size();
  const double total = student_kernel(y, num);
  for (std::size_t i = 0; i < n; ++i) {
    double gx = 0.0;
    double gy = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double q = num(i, j) / total;
      const double mult = (exaggeration * p(i, j) - q) * num(i, j);
      gx += mult * (y[i][0] - y[j][0]);
      gy += mult * (y[i][1] - y[j][1]);
    }
    grad[i] = {4.0 * gx, 4.0 * gy};
  }
}

void check_shapes(const DenseMatrix& p, const std::vector<Point2>& coords) {
  if (p.rows() != p.cols() || p.rows() != coords.size()) {
    throw std::invalid_argument("P must be square and match the number of coordinates");
  }
}

}  // namespace

double kl_objective(const DenseMatrix& p, const std::vector<Point2>& coords) {
  check_shapes(p, coords);
  const std::size_t n = coords.size();
  DenseMatrix num(n, n);
  const double total = student_kernel(coords, num);
  double kl = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || p(i, j) <= 0.0) continue;
      kl += p(i, j) * std::log(p(i, j) / (num(i, j) / total));
    }
  }
  return kl;
}

std::vector<Point2> kl_gradient(const DenseMatrix& p, const std::vector<Point2>& coords) {
  check_shapes(p, coords);
  DenseMatrix num(coords.size(), coords.size());
  std::vector<Point2> grad(coords.size());
  gradient_into(p, 1.0, coords, num, grad);
  return grad;
}

Embedding tsne(const DenseMatrix& distances, const EmbeddingConfig& config) {
  const std::size_t n = distances.rows();
  if (n < 4) throw std::invalid_argument("t-SNE needs at least 4 points");
  if (!(config.perplexity > 0.0)) throw std::invalid_argument("perplexity must be positive");
  if (3.0 * config.perplexity > static_cast<double>(n - 1)) {
    throw std::invalid_argument("perplexity " + std::to_string(config.perplexity) + " is too large for " +
                                std::to_string(n) + " points (needs 3 * perplexity <= n - 1)");
  }
  if (!(config.learning_rate > 0.0) || config.iterations == 0 || !(config.early_exaggeration > 0.0)) {
    throw std::invalid_argument("learning rate, iterations and exaggeration must be positive");
  }

  const DenseMatrix p = joint_probabilities(conditional_affinities(distances, config.perplexity).p);

  Rng rng(config.seed);
  std::vector<Point2> y(n);
  for (auto& pt : y) pt = {config.init_scale * standard_normal(rng), config.init_scale * standard_normal(rng)};

  Embedding out;
  out.initial_kl = kl_objective(p, y);

  std::vector<Point2> grad(n);
  std::vector<Point2> update(n, Point2{0.0, 0.0});
  std::vector<Point2> gains(n, Point2{1.0, 1.0});
  DenseMatrix num(n, n);

  for (std::size_t iter = 0; iter < config.iterations; ++iter) {
    const double exaggeration = iter < config.exaggeration_iterations ? config.early_exaggeration : 1.0;
    const double momentum = iter < config.momentum_switch_iteration ? config.initial_momentum : config.final_momentum;
    if (iter == config.exaggeration_iterations && iter > 0) {
      // second stage starts fresh; carrying the exaggerated step sizes over
      // throws clusters outward and leaves duplicates at a finite gap
      std::fill(update.begin(), update.end(), Point2{0.0, 0.0});
      std::fill(gains.begin(), gains.end(), Point2{1.0, 1.0});
    }
    gradient_into(p, exaggeration, y, num, grad);
    for (std::size_t i = 0; i < n; ++i) {
      for (int d = 0; d < 2; ++d) {
        const bool same_sign = (grad[i][d] > 0.0) == (update[i][d] > 0.0);
        gains[i][d] = same_sign ? gains[i][d] * 0.8 : gains[i][d] + 0.2;
        gains[i][d] = std::max(gains[i][d], 0.01);
        update[i][d] = momentum * update[i][d] - config.learning_rate * gains[i][d] * grad[i][d];
        y[i][d] += update[i][d];
      }
    }
    Point2 mean{0.0, 0.0};
    for (const auto& pt : y) {
      mean[0] += pt[0];
      mean[1] += pt[1];
    }
    for (auto& pt : y) {
      pt[0] -= mean[0] / static_cast<double>(n);
      pt[1] -= mean[1] / static_cast<double>(n);
    }
  }

  out.final_kl = kl_objective(p, y);
  out.coords = std::move(y);
  return out;
}

Embedding embed_topics(const SimilarityMatrix& sim, const EmbeddingConfig& config) {
  Embedding e = tsne(similarity_to_distance(sim), config);
  e.refs = sim.refs;
  return e;
}

void write_embedding_csv(std::ostream& out, const Embedding& embedding) {
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  out << "model_index,topic_index,x,y\n";
  for (std::size_t i = 0; i < embedding.coords.size(); ++i) {
    const TopicRef ref = i < embedding.refs.size() ? embedding.refs[i] : TopicRef{0, i};
    out << ref.model_index << ',' << ref.topic_index << ',' << embedding.coords[i][0] << ','
        << embedding.coords[i][1] << '\n';
  }
  out.precision(old_precision);
}

}  // namespace topicens
