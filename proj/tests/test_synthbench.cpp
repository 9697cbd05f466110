#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "support.hpp"
#include "topicens/lda.hpp"
#include "topicens/synthbench.hpp"

using namespace topicens;

namespace {

std::map<std::string, std::size_t> term_index(const SyntheticCorpus& c) {
  std::map<std::string, std::size_t> idx;
  for (std::size_t w = 0; w < c.terms.size(); ++w) idx[c.terms[w]] = w;
  return idx;
}

struct FrequencyError {
  double observed = 0;  // relative L2 error of empirical term counts against the ground-truth mixture
  double noise = 0;     // its expected size from multinomial sampling alone
};

FrequencyError frequency_error(const SyntheticSpec& spec) {
  const auto c = generate_corpus(spec);
  const auto idx = term_index(c);
  const std::size_t v = c.terms.size();
  std::vector<double> seen(v, 0.0), expected(v, 0.0), variance(v, 0.0);
  for (std::size_t d = 0; d < c.documents.size(); ++d) {
    const double len = static_cast<double>(c.documents[d].tokens.size());
    for (const auto& tok : c.documents[d].tokens) seen[idx.at(tok.normalized)] += 1;
    for (std::size_t w = 0; w < v; ++w) {
      double p = 0;
      for (std::size_t t = 0; t < spec.true_k; ++t) p += c.theta(d, t) * c.phi(t, w);
      expected[w] += len * p;
      variance[w] += len * p * (1 - p);
    }
  }
  double num = 0, den = 0, var = 0;
  for (std::size_t w = 0; w < v; ++w) {
    num += (seen[w] - expected[w]) * (seen[w] - expected[w]);
    den += expected[w] * expected[w];
    var += variance[w];
  }
  return {std::sqrt(num / den), std::sqrt(var / den)};
}

}  // namespace

TEST_CASE("spec validation") {
  SyntheticSpec s;
  CHECK_NOTHROW(s.validate());
  CHECK(s.exclusive_terms() == 40);
  auto bad = s;
  bad.true_k = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = s;
  bad.min_doc_length = 200;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = s;
  bad.separation = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = s;
  bad.separation = 1.2;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = s;
  bad.doc_alpha = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = s;
  bad.true_k = 600;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = s;
  bad.vocabulary_size = 10;
  bad.true_k = 10;
  bad.separation = 0.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(generate_corpus(bad), std::invalid_argument);
}

TEST_CASE("ground truth is well formed") {
  SyntheticSpec s;
  const auto c = generate_corpus(s);
  CHECK(c.documents.size() == s.documents);
  CHECK(c.phi.rows() == s.true_k);
  CHECK(c.phi.cols() == s.vocabulary_size);
  CHECK(c.theta.rows() == s.documents);
  for (std::size_t t = 0; t < s.true_k; ++t) {
    double sum = 0, exclusive = 0;
    for (std::size_t w = 0; w < s.vocabulary_size; ++w) {
      sum += c.phi(t, w);
      if (w / s.exclusive_terms() == t) exclusive += c.phi(t, w);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(exclusive == doctest::Approx(s.separation).epsilon(1e-12));
  }
  for (std::size_t d = 0; d < s.documents; ++d) {
    double sum = 0;
    for (std::size_t t = 0; t < s.true_k; ++t) sum += c.theta(d, t);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    const auto n = c.documents[d].tokens.size();
    CHECK(n >= s.min_doc_length);
    CHECK(n <= s.max_doc_length);
  }
  std::set<std::string> names(c.terms.begin(), c.terms.end());
  CHECK(names.size() == s.vocabulary_size);
  for (const auto& doc : c.documents) {
    for (const auto& tok : doc.tokens) CHECK(tok.normalized == doc.raw_text.substr(tok.span.begin, tok.span.end - tok.span.begin));
  }
}

TEST_CASE("a fixed seed reproduces the corpus") {
  SyntheticSpec s;
  s.documents = 50;
  const auto a = generate_corpus(s);
  const auto b = generate_corpus(s);
  for (std::size_t d = 0; d < a.documents.size(); ++d) CHECK(a.documents[d].raw_text == b.documents[d].raw_text);
  CHECK(a.phi == b.phi);
  CHECK(a.theta == b.theta);
  s.seed = 2;
  CHECK_FALSE(generate_corpus(s).documents[0].raw_text == a.documents[0].raw_text);
}

TEST_CASE("full separation gives disjoint term pools") {
  SyntheticSpec s;
  s.true_k = 2;
  s.separation = 1.0;
  s.vocabulary_size = 100;
  s.documents = 40;
  const auto c = generate_corpus(s);
  const auto idx = term_index(c);
  const std::size_t block = s.exclusive_terms();
  CHECK(block == 50);
  for (std::size_t t = 0; t < 2; ++t) {
    for (std::size_t w = 0; w < 100; ++w) CHECK((c.phi(t, w) > 0) == (w / block == t));
  }
  // tokens only from pools of topics the document actually uses
  for (std::size_t d = 0; d < c.documents.size(); ++d) {
    for (const auto& tok : c.documents[d].tokens) CHECK(c.theta(d, idx.at(tok.normalized) / block) > 0);
  }
}

TEST_CASE("term frequency error tracks sampling noise and shrinks with D") {
  double prev = 1e9;
  for (std::size_t docs : {50, 200, 500, 2000}) {
    double observed = 0, noise = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      SyntheticSpec s;
      s.seed = seed;
      s.documents = docs;
      const auto e = frequency_error(s);
      observed += e.observed / 5;
      noise += e.noise / 5;
    }
    CHECK(observed == doctest::Approx(noise).epsilon(0.1));
    CHECK(observed < prev);
    prev = observed;
  }
}

// Known failure with the default generator (about 100 tokens per document):
// multinomial noise alone is about 7.4% at D = 500. See the README.
TEST_CASE("term frequencies at D = 500 are within 5% of the ground-truth mixture") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SyntheticSpec s;
    s.seed = seed;
    s.documents = 500;
    CHECK(frequency_error(s).observed < 0.05);
  }
}

TEST_CASE("greedy matching is one to one and respects the threshold") {
  // truth rows e0, e1, e2; the model has a near copy of e1, a blend and a copy of e0
  DenseMatrix truth(3, 3);
  for (std::size_t i = 0; i < 3; ++i) truth(i, i) = 1.0;
  const auto e = testutil::make_ensemble({{{0.05, 0.9, 0.05}, {0.5, 0.5, 0.0}, {1.0, 0.0, 0.0}}, {{1, 0, 0}}});
  const auto m = greedy_match(truth, e.members[0], 0.7);
  REQUIRE(m.size() == 3);
  CHECK(m[0] == std::optional<std::size_t>(2));
  CHECK(m[1] == std::optional<std::size_t>(0));
  CHECK_FALSE(m[2]);
  const auto loose = greedy_match(truth, e.members[0], 0.0);
  CHECK(loose[2] == std::optional<std::size_t>(1));
  CHECK_THROWS_AS(greedy_match(DenseMatrix(3, 4), e.members[0], 0.7), std::invalid_argument);
}

TEST_CASE("disjoint ground truth is recovered") {
  // best trained topic per truth topic above 0.9 cosine in at least 90% of seeds
  std::size_t good = 0;
  const std::size_t seeds = 10;
  for (std::uint64_t seed = 1; seed <= seeds; ++seed) {
    SyntheticSpec s;
    s.true_k = 5;
    s.vocabulary_size = 200;
    s.documents = 150;
    s.separation = 1.0;
    s.seed = seed;
    const auto c = generate_corpus(s);
    const auto [vocabulary, matrix] = build_matrix(c.documents);
    auto cfg = LdaConfig::defaults(5, seed);
    cfg.iterations = 300;
    const auto model = train(matrix, cfg);
    const auto truth = truth_in_vocabulary(c, vocabulary);
    bool all = true;
    for (std::size_t t = 0; t < 5; ++t) {
      double best = 0;
      for (std::size_t j = 0; j < 5; ++j) {
        best = std::max(best, cosine_similarity(truth.row(t), model.phi.row(j)));
      }
      all = all && best > 0.9;
    }
    good += all;
  }
  CHECK(good * 10 >= seeds * 9);
}

TEST_CASE("experiments are deterministic and reported") {
  ExperimentConfig cfg;
  cfg.corpus = SyntheticSpec{};
  cfg.corpus.true_k = 4;
  cfg.corpus.vocabulary_size = 120;
  cfg.corpus.documents = 60;
  cfg.k = 4;
  cfg.iterations = 60;
  const auto a = run_experiment(cfg);
  const auto b = run_experiment(cfg);
  auto ja = a.to_json(), jb = b.to_json();
  ja.erase("seconds");
  jb.erase("seconds");
  CHECK(ja == jb);
  CHECK(a.total_topics == 40);
  CHECK(a.clusters.size() == 4);
  CHECK(a.member_mean_similarity.size() == 10);
  for (const auto& cl : a.clusters) {
    CHECK(cl.members.size() == cl.similarities.size());
    CHECK(cl.completeness == doctest::Approx(cl.members.size() / 10.0));
    CHECK(cl.complete == (cl.completeness >= 0.8));
    for (double s : cl.similarities) CHECK(s >= 0.7);
  }
  std::size_t matched = 0;
  for (const auto& cl : a.clusters) matched += cl.members.size();
  CHECK(a.isolated_topics == a.total_topics - matched);
  CHECK(a.to_text().find("recovered") != std::string::npos);
  cfg.preset = "E2";
  CHECK_THROWS(run_experiment(cfg));
}

TEST_CASE("experiment specs follow the preset") {
  ExperimentConfig cfg;
  cfg.preset = "E4";
  cfg.iterations = 7;
  cfg.seed = 3;
  const auto spec = experiment_spec(cfg);
  CHECK(spec.base_config.iterations == 7);
  CHECK(spec.base_config.k == 20);
  cfg.preset = "E5";
  CHECK(experiment_spec(cfg).parameter_values.size() == 10);
}
