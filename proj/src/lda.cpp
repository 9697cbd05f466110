#include "topicens/lda.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "topicens/error.hpp"
#include "topicens/random.hpp"

namespace topicens {

LdaConfig LdaConfig::defaults(std::size_t k, std::uint64_t seed) {
  LdaConfig c;
  c.k = k;
  c.alpha = 5.0 / static_cast<double>(k);
  c.beta = 0.01;
  c.iterations = 10'000;
  c.seed = seed;
  return c;
}

void LdaConfig::validate() const {
  if (k < 1) throw std::invalid_argument("LDA config: k must be >= 1");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("LDA config: alpha must be > 0");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("LDA config: beta must be > 0");
  if (iterations < 1) throw std::invalid_argument("LDA config: iterations must be >= 1");
}

namespace {

void check_distribution_rows(const DenseMatrix& m, const char* name, double tolerance) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double sum = 0.0;
    for (double v : m.row(r)) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw StructureError(std::string(name) + " row " + std::to_string(r) + " has an invalid entry");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > tolerance) {
      throw StructureError(std::string(name) + " row " + std::to_string(r) + " sums to " +
                           std::to_string(sum));
    }
  }
}

}  // namespace

void TopicModel::check_invariants(double tolerance) const {
  check_distribution_rows(phi, "phi", tolerance);
  check_distribution_rows(theta, "theta", tolerance);
  if (has_theta() && theta.cols() != phi.rows()) {
    throw StructureError("theta column count differs from topic count");
  }
}

void check_count_conservation(const GibbsState& s) {
  const std::size_t k = s.num_topics;
  const std::size_t docs = s.doc_length.size();
  for (std::size_t d = 0; d < docs; ++d) {
    std::uint64_t sum = 0;
    for (std::size_t t = 0; t < k; ++t) sum += s.doc_topic[d * k + t];
    if (sum != s.doc_length[d]) {
      throw StructureError("doc " + std::to_string(d) + ": topic counts do not sum to its length");
    }
  }
  for (std::size_t t = 0; t < k; ++t) {
    std::uint64_t sum = 0;
    for (std::size_t w = 0; w < s.num_terms; ++w) sum += s.topic_term[t * s.num_terms + w];
    if (sum != s.topic_total[t]) {
      throw StructureError("topic " + std::to_string(t) + ": term counts do not sum to its total");
    }
  }
  // Recount from the assignments themselves.
  std::vector<std::uint32_t> totals(k, 0);
  for (auto z : s.assignment) {
    if (z >= k) throw StructureError("assignment out of range");
    ++totals[z];
  }
  if (totals != s.topic_total) throw StructureError("topic totals disagree with assignments");
}

TopicModel estimate_model(const GibbsState& s, const LdaConfig& config) {
  const std::size_t k = s.num_topics;
  const std::size_t vocab = s.num_terms;
  const std::size_t docs = s.doc_length.size();
  TopicModel model;
  model.config = config;
  model.phi = DenseMatrix(k, vocab);
  model.theta = DenseMatrix(docs, k);
  const double v_beta = static_cast<double>(vocab) * config.beta;
  for (std::size_t t = 0; t < k; ++t) {
    const double denom = static_cast<double>(s.topic_total[t]) + v_beta;
    for (std::size_t w = 0; w < vocab; ++w) {
      model.phi(t, w) = (static_cast<double>(s.topic_term[t * vocab + w]) + config.beta) / denom;
    }
  }
  const double k_alpha = static_cast<double>(k) * config.alpha;
  for (std::size_t d = 0; d < docs; ++d) {
    const double denom = static_cast<double>(s.doc_length[d]) + k_alpha;
    for (std::size_t t = 0; t < k; ++t) {
      model.theta(d, t) = (static_cast<double>(s.doc_topic[d * k + t]) + config.alpha) / denom;
    }
  }
  return model;
}

TopicModel train(const DocTermMatrix& matrix, const LdaConfig& config, const SweepObserver& observer) {
  config.validate();
  if (matrix.num_docs() == 0 || matrix.num_terms() == 0) throw Error("cannot train on an empty matrix");
  if (matrix.total() == 0) throw Error("cannot train: the matrix has no retained tokens");

  const std::size_t k = config.k;
  const std::size_t vocab = matrix.num_terms();
  const std::size_t docs = matrix.num_docs();

  GibbsState s;
  s.num_topics = k;
  s.num_terms = vocab;
  s.doc_topic.assign(docs * k, 0);
  s.topic_term.assign(k * vocab, 0);
  s.topic_total.assign(k, 0);
  s.doc_length.assign(docs, 0);
  const auto total_tokens = static_cast<std::size_t>(matrix.total());
  s.token_doc.reserve(total_tokens);
  s.token_term.reserve(total_tokens);
  s.assignment.reserve(total_tokens);

  Rng rng(config.seed);
  for (std::size_t d = 0; d < docs; ++d) {
    for (const auto& e : matrix.row(d)) {
      for (std::uint32_t c = 0; c < e.count; ++c) {
        const auto z = static_cast<std::uint32_t>(uniform_index(rng, k));
        s.token_doc.push_back(static_cast<std::uint32_t>(d));
        s.token_term.push_back(e.term);
        s.assignment.push_back(z);
        ++s.doc_topic[d * k + z];
        ++s.topic_term[z * vocab + e.term];
        ++s.topic_total[z];
        ++s.doc_length[d];
      }
    }
  }
  if (observer) observer(0, s);

  const double beta = config.beta;
  const double alpha = config.alpha;
  const double v_beta = static_cast<double>(vocab) * beta;
  std::vector<double> cumulative(k);

  for (std::size_t sweep = 1; sweep <= config.iterations; ++sweep) {
    for (std::size_t i = 0; i < s.assignment.size(); ++i) {
      const std::size_t d = s.token_doc[i];
      const std::size_t w = s.token_term[i];
      std::uint32_t z = s.assignment[i];
      std::uint32_t* dt = &s.doc_topic[d * k];

      --dt[z];
      --s.topic_term[z * vocab + w];
      --s.topic_total[z];

      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) {
        acc += (dt[t] + alpha) * (s.topic_term[t * vocab + w] + beta) / (s.topic_total[t] + v_beta);
        cumulative[t] = acc;
      }
      const double u = uniform01(rng) * acc;
      std::size_t chosen = 0;
      while (chosen + 1 < k && cumulative[chosen] <= u) ++chosen;
      z = static_cast<std::uint32_t>(chosen);

      s.assignment[i] = z;
      ++dt[z];
      ++s.topic_term[z * vocab + w];
      ++s.topic_total[z];
    }
    if (observer) observer(sweep, s);
  }

  return estimate_model(s, config);
}

double log_likelihood(const TopicModel& model, const DocTermMatrix& matrix) {
  if (model.num_terms() != matrix.num_terms()) throw StructureError("model and matrix vocabularies differ in size");
  if (!model.has_theta() || model.theta.rows() != matrix.num_docs()) {
    throw StructureError("model theta does not cover the matrix documents");
  }
  const std::size_t k = model.num_topics();
  double ll = 0.0;
  for (std::size_t d = 0; d < matrix.num_docs(); ++d) {
    const auto theta = model.theta.row(d);
    for (const auto& e : matrix.row(d)) {
      double p = 0.0;
      for (std::size_t t = 0; t < k; ++t) p += theta[t] * model.phi(t, e.term);
      ll += e.count * std::log(p);
    }
  }
  return ll;
}

nlohmann::json config_to_json(const LdaConfig& c) {
  return {{"k", c.k}, {"alpha", c.alpha}, {"beta", c.beta}, {"iterations", c.iterations}, {"seed", c.seed}};
}

LdaConfig config_from_json(const nlohmann::json& j) {
  LdaConfig c;
  c.k = j.at("k").get<std::size_t>();
  c.alpha = j.at("alpha").get<double>();
  c.beta = j.at("beta").get<double>();
  c.iterations = j.at("iterations").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

namespace {

nlohmann::json matrix_rows_to_json(const DenseMatrix& m) {
  auto rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

DenseMatrix matrix_rows_from_json(const nlohmann::json& rows, std::size_t expected_cols) {
  if (!rows.is_array()) throw StructureError("expected an array of rows");
  DenseMatrix m(rows.size(), rows.empty() ? expected_cols : rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols()) throw StructureError("ragged matrix rows");
    for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c].get<double>();
  }
  return m;
}

}  // namespace

nlohmann::json model_to_json(const TopicModel& model, const Vocabulary& vocabulary) {
  return {{"model_id", model.model_id},
          {"config", config_to_json(model.config)},
          {"vocabulary_hash", vocabulary.content_hash()},
          {"num_terms", model.num_terms()},
          {"phi", matrix_rows_to_json(model.phi)},
          {"theta", matrix_rows_to_json(model.theta)}};
}

TopicModel model_from_json(const nlohmann::json& j) {
  TopicModel m;
  m.model_id = j.at("model_id").get<std::size_t>();
  m.config = config_from_json(j.at("config"));
  const auto terms = j.at("num_terms").get<std::size_t>();
  m.phi = matrix_rows_from_json(j.at("phi"), terms);
  m.theta = matrix_rows_from_json(j.at("theta"), m.phi.rows());
  if (m.theta.rows() == 0) m.theta = DenseMatrix();
  return m;
}

}  // namespace topicens
