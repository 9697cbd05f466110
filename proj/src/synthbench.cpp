#include "topicens/synthbench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "topicens/metrics.hpp"
#include "topicens/random.hpp"

namespace topicens {

using nlohmann::json;

std::size_t SyntheticSpec::exclusive_terms() const {
  if (true_k == 0) return 0;
  return static_cast<std::size_t>(std::floor(separation * static_cast<double>(vocabulary_size) /
                                             static_cast<double>(true_k) + 1e-9));
}

void SyntheticSpec::validate() const {
  if (true_k == 0 || vocabulary_size == 0 || documents == 0) {
    throw std::invalid_argument("synthetic spec needs positive true_k, vocabulary size and document count");
  }
  if (min_doc_length == 0 || min_doc_length > max_doc_length) {
    throw std::invalid_argument("document lengths need 0 < min <= max");
  }
  if (!(separation > 0.0 && separation <= 1.0)) throw std::invalid_argument("separation must lie in (0, 1]");
  if (!(doc_alpha > 0.0) || !(term_concentration > 0.0)) {
    throw std::invalid_argument("Dirichlet parameters must be positive");
  }
  const std::size_t exclusive = exclusive_terms();
  if (exclusive == 0) throw std::invalid_argument("separation leaves no exclusive terms per topic");
  if (true_k * exclusive > vocabulary_size) throw std::invalid_argument("exclusive blocks exceed the vocabulary");
  if (separation < 1.0 && true_k * exclusive == vocabulary_size) {
    throw std::invalid_argument("separation below 1 needs a non-empty shared pool");
  }
}

std::string synthetic_term(std::size_t index, std::size_t vocabulary_size) {
  std::size_t width = 1;
  for (std::size_t cap = 26; cap < vocabulary_size; cap *= 26) ++width;
  std::string letters(width, 'a');
  for (std::size_t i = width; i-- > 0;) {
    letters[i] = static_cast<char>('a' + index % 26);
    index /= 26;
  }
  return "w" + letters;
}

namespace {

void dirichlet(Rng& rng, double concentration, std::span<double> out, double mass = 1.0) {
  double sum = 0.0;
  for (auto& v : out) {
    v = gamma_variate(rng, concentration);
    sum += v;
  }
  if (sum <= 0.0) {
    // every draw underflowed; fall back to a single uniformly chosen atom
    std::fill(out.begin(), out.end(), 0.0);
    out[uniform_index(rng, out.size())] = mass;
    return;
  }
  for (auto& v : out) v = v / sum * mass;
}

std::size_t draw(Rng& rng, std::span<const double> cumulative) {
  const double u = uniform01(rng) * cumulative.back();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

}  // namespace

SyntheticCorpus generate_corpus(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const std::size_t k = spec.true_k;
  const std::size_t v = spec.vocabulary_size;
  const std::size_t block = spec.exclusive_terms();
  const std::size_t pool_begin = k * block;

  SyntheticCorpus out;
  out.terms.reserve(v);
  for (std::size_t w = 0; w < v; ++w) out.terms.push_back(synthetic_term(w, v));

  out.phi = DenseMatrix(k, v);
  for (std::size_t t = 0; t < k; ++t) {
    auto row = out.phi.row(t);
    dirichlet(rng, spec.term_concentration, row.subspan(t * block, block), spec.separation);
    if (spec.separation < 1.0) {
      dirichlet(rng, spec.term_concentration, row.subspan(pool_begin), 1.0 - spec.separation);
    }
  }

  std::vector<std::vector<double>> cumulative(k, std::vector<double>(v));
  for (std::size_t t = 0; t < k; ++t) {
    const auto row = out.phi.row(t);
    std::partial_sum(row.begin(), row.end(), cumulative[t].begin());
  }

  out.theta = DenseMatrix(spec.documents, k);
  out.documents.reserve(spec.documents);
  const PreprocessConfig config;
  std::size_t id_width = std::to_string(spec.documents).size();
  std::vector<double> theta_cum(k);
  for (std::size_t d = 0; d < spec.documents; ++d) {
    auto theta = out.theta.row(d);
    dirichlet(rng, spec.doc_alpha, theta);
    std::partial_sum(theta.begin(), theta.end(), theta_cum.begin());
    const std::size_t length =
        spec.min_doc_length + uniform_index(rng, spec.max_doc_length - spec.min_doc_length + 1);

    Document doc;
    std::string id = std::to_string(d);
    doc.id = "doc" + std::string(id_width - id.size(), '0') + id;
    doc.title = "Synthetic document " + std::to_string(d);
    for (std::size_t i = 0; i < length; ++i) {
      const std::size_t topic = draw(rng, theta_cum);
      const std::size_t term = draw(rng, cumulative[topic]);
      if (i > 0) doc.raw_text += (i % 12 == 0) ? '\n' : ' ';
      doc.raw_text += out.terms[term];
    }
    doc.tokens = tokenize(doc.raw_text, config);
    out.documents.push_back(std::move(doc));
  }
  return out;
}

DenseMatrix truth_in_vocabulary(const SyntheticCorpus& corpus, const Vocabulary& vocabulary) {
  DenseMatrix out(corpus.phi.rows(), vocabulary.size());
  std::unordered_map<std::string_view, std::size_t> index;
  for (std::size_t w = 0; w < corpus.terms.size(); ++w) index.emplace(corpus.terms[w], w);
  for (std::size_t id = 0; id < vocabulary.size(); ++id) {
    const auto it = index.find(vocabulary.term(static_cast<TermId>(id)));
    if (it == index.end()) continue;
    for (std::size_t t = 0; t < corpus.phi.rows(); ++t) out(t, id) = corpus.phi(t, it->second);
  }
  return out;
}

std::vector<std::optional<std::size_t>> greedy_match(const DenseMatrix& truth, const TopicModel& model,
                                                     double threshold) {
  if (truth.cols() != model.num_terms()) throw std::invalid_argument("truth and model term spaces differ");
  struct Pair {
    double sim;
    std::size_t truth;
    std::size_t topic;
  };
  std::vector<Pair> pairs;
  for (std::size_t g = 0; g < truth.rows(); ++g) {
    for (std::size_t t = 0; t < model.num_topics(); ++t) {
      const double s = cosine_similarity(truth.row(g), model.phi.row(t));
      if (s >= threshold) pairs.push_back({s, g, t});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.sim != b.sim) return a.sim > b.sim;
    return a.truth != b.truth ? a.truth < b.truth : a.topic < b.topic;
  });
  std::vector<std::optional<std::size_t>> match(truth.rows());
  std::vector<bool> used(model.num_topics(), false);
  for (const auto& p : pairs) {
    if (match[p.truth] || used[p.topic]) continue;
    match[p.truth] = p.topic;
    used[p.topic] = true;
  }
  return match;
}

EnsembleSpec experiment_spec(const ExperimentConfig& config) {
  EnsembleSpec spec = preset(config.preset, config.iterations, config.seed);
  if (config.k && spec.mode != EnsembleMode::vary_k) {
    const double old_k = static_cast<double>(spec.base_config.k);
    spec.base_config = LdaConfig::defaults(*config.k, config.seed);
    spec.base_config.iterations = config.iterations;
    // alpha presets are expressed as multiples of 1/k
    if (spec.mode == EnsembleMode::vary_alpha) {
      for (auto& a : spec.parameter_values) a = a * old_k / static_cast<double>(*config.k);
    }
  }
  spec.validate();
  return spec;
}

namespace {

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.config = config;
  report.ensemble_spec = experiment_spec(config);

  const auto corpus = generate_corpus(config.corpus);
  const auto [vocabulary, matrix] = build_matrix(corpus.documents);
  const Ensemble ensemble = generate(matrix, vocabulary, report.ensemble_spec);
  const EnsembleMetrics metrics = compute_all(ensemble);
  report.documents = matrix.num_docs();
  report.vocabulary_size = vocabulary.size();
  report.total_topics = ensemble.total_topics();
  report.summary = ensemble_summary(metrics.records);
  try {
    report.correlation = correlation(metrics.records);
  } catch (const std::exception&) {
    report.correlation.reset();
  }

  const DenseMatrix truth = truth_in_vocabulary(corpus, vocabulary);
  std::vector<bool> matched(ensemble.total_topics(), false);
  report.clusters.resize(truth.rows());
  for (std::size_t g = 0; g < truth.rows(); ++g) report.clusters[g].truth_topic = g;
  for (std::size_t m = 0; m < ensemble.size(); ++m) {
    const auto match = greedy_match(truth, ensemble.members[m], config.match_threshold);
    for (std::size_t g = 0; g < match.size(); ++g) {
      if (!match[g]) continue;
      const TopicRef ref{m, *match[g]};
      auto& c = report.clusters[g];
      c.members.push_back(ref);
      c.similarities.push_back(cosine_similarity(truth.row(g), ensemble.phi(ref)));
      matched[ensemble.flat_index(ref)] = true;
    }
  }

  std::vector<double> recovered_ue;
  for (auto& c : report.clusters) {
    c.completeness = completeness(c.members, ensemble.size());
    c.complete = c.completeness >= config.complete_at;
    std::vector<double> um;
    std::vector<double> ue;
    for (const auto& ref : c.members) {
      const auto& rec = metrics.records[ensemble.flat_index(ref)];
      um.push_back(rec.u_match);
      ue.push_back(rec.u_exist);
    }
    c.mean_u_match = mean_of(um);
    c.mean_u_exist = mean_of(ue);
    if (c.complete) {
      ++report.recovered;
      recovered_ue.insert(recovered_ue.end(), ue.begin(), ue.end());
    }
  }
  report.recovered_mean_u_exist = mean_of(recovered_ue);

  std::vector<double> isolated_ue;
  for (std::size_t i = 0; i < matched.size(); ++i) {
    if (!matched[i]) isolated_ue.push_back(metrics.records[i].u_exist);
  }
  report.isolated_topics = isolated_ue.size();
  report.isolated_mean_u_exist = mean_of(isolated_ue);

  for (std::size_t m = 0; m < ensemble.size(); ++m) {
    const std::size_t k = ensemble.members[m].num_topics();
    const std::size_t offset = ensemble.flat_index({m, 0});
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = a + 1; b < k; ++b) {
        sum += metrics.similarity(offset + a, offset + b);
        ++pairs;
      }
    }
    report.member_mean_similarity.push_back(pairs ? sum / static_cast<double>(pairs) : std::nan(""));
  }

  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

bool ExperimentReport::similarity_strictly_increasing() const {
  for (std::size_t i = 1; i < member_mean_similarity.size(); ++i) {
    if (!(member_mean_similarity[i] > member_mean_similarity[i - 1])) return false;
  }
  return member_mean_similarity.size() >= 2;
}

json ExperimentReport::to_json() const {
  const auto& c = config.corpus;
  json j;
  j["preset"] = config.preset;
  j["corpus"] = {{"true_k", c.true_k},
                 {"vocabulary_size", c.vocabulary_size},
                 {"documents", c.documents},
                 {"min_doc_length", c.min_doc_length},
                 {"max_doc_length", c.max_doc_length},
                 {"separation", c.separation},
                 {"doc_alpha", c.doc_alpha},
                 {"term_concentration", c.term_concentration},
                 {"seed", c.seed}};
  j["ensemble"] = spec_to_json(ensemble_spec);
  j["match_threshold"] = config.match_threshold;
  j["complete_at"] = config.complete_at;
  j["observed"] = {{"documents", documents}, {"vocabulary_size", vocabulary_size}, {"topics", total_topics}};
  const auto measure = [](const MeasureSummary& s) {
    return json{{"mean", s.mean}, {"median", s.median}, {"stable", s.stable}, {"grey", s.grey}, {"unstable", s.unstable}};
  };
  j["summary"] = {{"u_match", measure(summary.u_match)}, {"u_exist", measure(summary.u_exist)}};
  j["correlation"] = correlation ? json{{"pearson", correlation->pearson}, {"spearman", correlation->spearman}}
                                 : json(nullptr);
  json clusters = json::array();
  for (const auto& cl : this->clusters) {
    json members = json::array();
    for (std::size_t i = 0; i < cl.members.size(); ++i) {
      members.push_back({{"model_index", cl.members[i].model_index},
                         {"topic_index", cl.members[i].topic_index},
                         {"similarity", cl.similarities[i]}});
    }
    clusters.push_back({{"truth_topic", cl.truth_topic},
                        {"members", members},
                        {"completeness", cl.completeness},
                        {"complete", cl.complete},
                        {"mean_u_match", number_or_null(cl.mean_u_match)},
                        {"mean_u_exist", number_or_null(cl.mean_u_exist)}});
  }
  j["clusters"] = clusters;
  j["recovered"] = recovered;
  j["recovered_mean_u_exist"] = number_or_null(recovered_mean_u_exist);
  j["isolated_topics"] = isolated_topics;
  j["isolated_mean_u_exist"] = number_or_null(isolated_mean_u_exist);
  json sims = json::array();
  for (double s : member_mean_similarity) sims.push_back(number_or_null(s));
  j["member_mean_similarity"] = sims;
  j["similarity_strictly_increasing"] = similarity_strictly_increasing();
  j["seconds"] = seconds;
  return j;
}

std::string ExperimentReport::to_text() const {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(3);
  const auto& c = config.corpus;
  out << "preset " << config.preset << " (" << to_string(ensemble_spec.mode) << ", " << ensemble_spec.members
      << " members, " << ensemble_spec.base_config.iterations << " sweeps)\n";
  out << "corpus: true_k=" << c.true_k << " V=" << vocabulary_size << " D=" << documents
      << " separation=" << c.separation << " seed=" << c.seed << "\n";
  out << "topics: " << total_topics << "\n";
  const auto line = [&](const char* name, const MeasureSummary& s) {
    out << "  " << name << ": mean " << s.mean << ", median " << s.median << "; stable " << s.stable << ", grey "
        << s.grey << ", unstable " << s.unstable << "\n";
  };
  line("U_M", summary.u_match);
  line("U_E", summary.u_exist);
  if (correlation) {
    out << "  correlation U_M/U_E: pearson " << correlation->pearson << ", spearman " << correlation->spearman << "\n";
  }
  out << "ground-truth clusters (cosine >= " << config.match_threshold << "):\n";
  for (const auto& cl : clusters) {
    out << "  truth " << cl.truth_topic << ": " << cl.members.size() << " topics, completeness " << cl.completeness
        << (cl.complete ? " complete" : "") << ", mean U_E " << cl.mean_u_exist << "\n";
  }
  out << "recovered " << recovered << "/" << clusters.size() << " (mean U_E " << recovered_mean_u_exist << ")\n";
  out << "isolated topics " << isolated_topics << " (mean U_E " << isolated_mean_u_exist << ")\n";
  out << "mean within-member similarity:";
  for (double s : member_mean_similarity) out << " " << s;
  out << (similarity_strictly_increasing() ? " (strictly increasing)" : "") << "\n";
  out << "elapsed " << seconds << " s\n";
  return out.str();
}

}  // namespace topicens
