#include "topicens/metrics.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>

#include "topicens/error.hpp"
#include "topicens/parallel.hpp"

namespace topicens {

namespace {

void require_same_size(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("dimension mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// sqrt(aa * aa) == aa exactly, so identical vectors score exactly 1.
double cosine_from(double ab, double aa, double bb) {
  const double prod = aa * bb;
  const double denom = std::isnormal(prod) ? std::sqrt(prod) : std::sqrt(aa) * std::sqrt(bb);
  return std::clamp(ab / denom, 0.0, 1.0);
}

}  // namespace

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  require_same_size(a, b);
  const double aa = dot(a, a);
  const double bb = dot(b, b);
  if (aa == 0.0 || bb == 0.0) throw std::domain_error("cosine similarity of a zero vector");
  return cosine_from(dot(a, b), aa, bb);
}

double kl_divergence(std::span<const double> a, std::span<const double> b) {
  require_same_size(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) continue;
    if (b[i] == 0.0) throw std::domain_error("KL divergence is infinite: reference has zero mass where a does not");
    s += a[i] * std::log(a[i] / b[i]);
  }
  return s;
}

double js_divergence(std::span<const double> a, std::span<const double> b) {
  require_same_size(a, b);
  std::vector<double> m(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) m[i] = 0.5 * (a[i] + b[i]);
  return 0.5 * kl_divergence(a, m) + 0.5 * kl_divergence(b, m);
}

double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

SimilarityMatrix similarity_matrix(const Ensemble& ensemble) {
  SimilarityMatrix sim;
  sim.refs = ensemble.refs();
  const std::size_t n = sim.refs.size();
  sim.values = DenseMatrix(n, n);

  std::vector<std::span<const double>> rows;
  std::vector<double> squares;
  rows.reserve(n);
  squares.reserve(n);
  for (const auto& r : sim.refs) {
    rows.push_back(ensemble.phi(r));
    squares.push_back(dot(rows.back(), rows.back()));
    if (squares.back() == 0.0) throw std::domain_error("topic has an all-zero term distribution");
  }
  parallel_for(n, [&](std::size_t i) {
    sim.values(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      sim.values(i, j) = cosine_from(dot(rows[i], rows[j]), squares[i], squares[j]);
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) sim.values(i, j) = sim.values(j, i);
  }
  return sim;
}

MatchDistribution match_distribution(TopicRef source, std::size_t target_model, const Ensemble& ensemble,
                                     const SimilarityMatrix& sim) {
  if (target_model == source.model_index) throw std::invalid_argument("target model must differ from the source model");
  if (target_model >= ensemble.size()) throw std::out_of_range("target model out of range");
  const std::size_t k = ensemble.members[target_model].num_topics();
  if (k == 0) throw std::invalid_argument("target model has no topics");

  const std::size_t row = ensemble.flat_index(source);
  const std::size_t offset = ensemble.flat_index({target_model, 0});
  MatchDistribution md{source, target_model, std::vector<double>(k)};
  double total = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    md.s[j] = sim(row, offset + j);
    total += md.s[j];
  }
  if (!(total > 0.0)) throw DegenerateMatch("topic has zero similarity to every topic of the target model");
  for (double& v : md.s) v /= total;
  return md;
}

double matching_uncertainty_pair(std::span<const double> s) {
  const std::size_t k = s.size();
  if (k == 0) throw std::invalid_argument("empty match distribution");
  if (k == 1) return 0.0;
  const std::vector<double> s_max(k, 1.0 / static_cast<double>(k));
  std::vector<double> s_min(k, 0.0);
  s_min[0] = 1.0;
  const double u = 1.0 - kl_divergence(s, s_max) / kl_divergence(s_min, s_max);
  return std::clamp(u, 0.0, 1.0);
}

double matching_uncertainty_pair(const MatchDistribution& s) { return matching_uncertainty_pair(s.s); }

namespace {

struct MatchScore {
  double value = 0.0;
  std::uint32_t degenerate = 0;
  std::uint32_t single_topic = 0;
};

MatchScore matching_score(TopicRef ref, const Ensemble& ensemble, const SimilarityMatrix& sim) {
  if (ensemble.size() < 2) throw std::invalid_argument("matching uncertainty needs at least 2 members");
  MatchScore score;
  double sum = 0.0;
  for (std::size_t l = 0; l < ensemble.size(); ++l) {
    if (l == ref.model_index) continue;
    if (ensemble.members[l].num_topics() == 1) ++score.single_topic;
    try {
      sum += matching_uncertainty_pair(match_distribution(ref, l, ensemble, sim));
    } catch (const DegenerateMatch&) {
      sum += 1.0;
      ++score.degenerate;
    }
  }
  score.value = sum / static_cast<double>(ensemble.size() - 1);
  return score;
}

}  // namespace

double matching_uncertainty(TopicRef ref, const Ensemble& ensemble, const SimilarityMatrix& sim) {
  return matching_score(ref, ensemble, sim).value;
}

double existence_uncertainty(TopicRef ref, const Ensemble& ensemble, const SimilarityMatrix& sim) {
  if (ensemble.size() < 2) throw std::invalid_argument("existence uncertainty needs at least 2 members");
  const std::size_t row = ensemble.flat_index(ref);
  double sum = 0.0;
  for (std::size_t l = 0; l < ensemble.size(); ++l) {
    if (l == ref.model_index) continue;
    const std::size_t offset = ensemble.flat_index({l, 0});
    double best = 0.0;
    for (std::size_t j = 0; j < ensemble.members[l].num_topics(); ++j) best = std::max(best, sim(row, offset + j));
    sum += best;
  }
  return std::clamp(1.0 - sum / static_cast<double>(ensemble.size() - 1), 0.0, 1.0);
}

EnsembleMetrics compute_all(const Ensemble& ensemble) {
  if (ensemble.size() < 2) throw std::invalid_argument("uncertainty measures need at least 2 members");
  EnsembleMetrics out;
  out.similarity = similarity_matrix(ensemble);
  const auto& refs = out.similarity.refs;
  out.records.resize(refs.size());
  parallel_for(refs.size(), [&](std::size_t i) {
    const auto score = matching_score(refs[i], ensemble, out.similarity);
    out.records[i] = {refs[i], score.value, existence_uncertainty(refs[i], ensemble, out.similarity), score.degenerate,
                      score.single_topic};
  });
  return out;
}

void write_uncertainty_csv(std::ostream& out, std::span<const UncertaintyRecord> records) {
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  out << "model_index,topic_index,u_match,u_exist\n";
  for (const auto& r : records) {
    out << r.ref.model_index << ',' << r.ref.topic_index << ',' << r.u_match << ',' << r.u_exist << '\n';
  }
  out.precision(old_precision);
}

void write_similarity_csv(std::ostream& out, const SimilarityMatrix& sim) {
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  out << "topic";
  for (const auto& r : sim.refs) out << ',' << r.model_index << '/' << r.topic_index;
  out << '\n';
  for (std::size_t i = 0; i < sim.size(); ++i) {
    out << sim.refs[i].model_index << '/' << sim.refs[i].topic_index;
    for (std::size_t j = 0; j < sim.size(); ++j) out << ',' << sim(i, j);
    out << '\n';
  }
  out.precision(old_precision);
}

namespace {

constexpr std::array<char, 8> kSimilarityMagic = {'T', 'O', 'P', 'S', 'I', 'M', '0', '1'};

void put_u64_le(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(bytes, 8);
}

std::uint64_t get_u64_le(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw StructureError("truncated similarity sidecar");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[i];
  return v;
}

}  // namespace

void write_similarity_binary(std::ostream& out, const DenseMatrix& values) {
  if (values.rows() != values.cols()) throw std::invalid_argument("similarity matrix must be square");
  out.write(kSimilarityMagic.data(), kSimilarityMagic.size());
  put_u64_le(out, values.rows());
  for (double v : values.data()) put_u64_le(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw Error("failed writing similarity sidecar");
}

DenseMatrix read_similarity_binary(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kSimilarityMagic) {
    throw StructureError("similarity sidecar has a bad magic header");
  }
  const std::uint64_t n = get_u64_le(in);
  if (n > (1u << 20)) throw StructureError("similarity sidecar dimension is implausible");
  DenseMatrix m(n, n);
  for (double& v : m.data()) v = std::bit_cast<double>(get_u64_le(in));
  return m;
}

}  // namespace topicens
