#include <algorithm>
#include <set>

#include "doctest.h"
#include "support.hpp"
#include "topicens/analysis.hpp"

using namespace topicens;

namespace {

struct Fixture {
  std::vector<oracle::Model> models;
  Ensemble ensemble;
  EnsembleMetrics metrics;
};

Fixture random_fixture(std::mt19937_64& rng) {
  Fixture f;
  f.models = testutil::random_models(rng);
  f.ensemble = testutil::make_ensemble(f.models);
  f.metrics = compute_all(f.ensemble);
  return f;
}

// Straight-line reading of each criterion, evaluated per topic.
std::vector<TopicRef> brute_filter(const FilterSpec& spec, const Fixture& f) {
  std::vector<TopicRef> out;
  const auto refs = f.ensemble.refs();
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto r = refs[i];
    if (spec.selected && std::find(spec.selected->begin(), spec.selected->end(), r) == spec.selected->end()) continue;
    bool terms_ok = true;
    for (const auto& t : spec.terms) {
      const auto id = *f.ensemble.vocabulary.lookup(t);
      // t is in the top n iff fewer than n terms beat it (ties to the lower id)
      const auto& row = f.models[r.model_index][r.topic_index];
      std::size_t better = 0;
      for (std::size_t w = 0; w < row.size(); ++w) {
        if (row[w] > row[id] || (row[w] == row[id] && w < id)) ++better;
      }
      terms_ok = terms_ok && better < spec.top_n;
    }
    if (!terms_ok) continue;
    if (spec.uncertainty) {
      const auto& u = *spec.uncertainty;
      const double v = u.measure == Measure::u_match ? oracle::u_match(f.models, r.model_index, r.topic_index)
                                                     : oracle::u_exist(f.models, r.model_index, r.topic_index);
      if (u.max_value && !(v < *u.max_value)) continue;
      if (u.min_value && !(v > *u.min_value)) continue;
    }
    if (spec.similar_to) {
      const auto& s = *spec.similar_to;
      if (r == s.anchor) continue;
      const auto& a = f.models[s.anchor.model_index][s.anchor.topic_index];
      const double here = oracle::cosine(a, f.models[r.model_index][r.topic_index]);
      if (s.best_per_model) {
        if (r.model_index == s.anchor.model_index) continue;
        bool best = true;
        for (std::size_t t = 0; t < f.models[r.model_index].size(); ++t) {
          const double other = oracle::cosine(a, f.models[r.model_index][t]);
          if (other > here + 1e-12 || (std::abs(other - here) <= 1e-12 && t < r.topic_index)) best = false;
        }
        if (!best) continue;
      }
      if (here < s.min_similarity) continue;
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST_CASE("stability classes at and around the thresholds") {
  CHECK(classify(0.0) == StabilityClass::stable);
  CHECK(classify(0.2999999) == StabilityClass::stable);
  CHECK(classify(0.3) == StabilityClass::grey);
  CHECK(classify(0.4) == StabilityClass::grey);
  CHECK(classify(0.5) == StabilityClass::grey);
  CHECK(classify(0.5000001) == StabilityClass::unstable);
  CHECK(classify(0.35, {0.4, 0.6}) == StabilityClass::stable);
  const std::vector<UncertaintyRecord> recs{{{0, 0}, 0.1, 0.45, 0, 0}, {{0, 1}, 0.9, 0.2, 0, 0}};
  CHECK(classify_stability(recs, Measure::u_exist) == std::vector<StabilityClass>{StabilityClass::grey, StabilityClass::stable});
  CHECK(classify_stability(recs, Measure::u_match) == std::vector<StabilityClass>{StabilityClass::stable, StabilityClass::unstable});
  CHECK_THROWS_AS(classify_stability(recs, Measure::u_match, {0.6, 0.4}), std::invalid_argument);
  CHECK(to_string(StabilityClass::grey) == "grey");
  CHECK(measure_from_string(to_string(Measure::u_match)) == Measure::u_match);
  CHECK_THROWS_AS(measure_from_string("u_other"), std::invalid_argument);
}

TEST_CASE("summary counts and median") {
  const std::vector<double> v{0.1, 0.2, 0.7};
  const auto s = summarize(v);
  CHECK(s.stable == 2);
  CHECK(s.grey == 0);
  CHECK(s.unstable == 1);
  CHECK(s.median == 0.2);
  CHECK(s.mean == doctest::Approx(1.0 / 3));
  CHECK(summarize(std::vector<double>{0.1, 0.4, 0.6, 0.9}).median == doctest::Approx(0.5));
  CHECK_THROWS_AS(summarize(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("completeness counts distinct models") {
  const std::vector<TopicRef> refs{{0, 1}, {0, 2}, {1, 0}, {2, 0}, {3, 1}, {4, 0}, {5, 0}, {6, 2}, {7, 0}};
  CHECK(completeness(refs, 10) == 0.8);
  CHECK(completeness(std::vector<TopicRef>{{0, 0}, {0, 1}}, 4) == 0.25);
  CHECK_THROWS_AS(completeness(std::vector<TopicRef>{}, 4), std::invalid_argument);
}

TEST_CASE("convex hull and area") {
  std::vector<Point2> square{{0, 0}, {2, 0}, {2, 2}, {0, 2}, {1, 1}, {1, 0}};
  const auto hull = convex_hull(square);
  CHECK(hull.size() == 4);
  CHECK(polygon_area(hull) == 4.0);
  CHECK(convex_hull({{3, 4}}).size() == 1);
  const auto line = convex_hull({{0, 0}, {1, 1}, {2, 2}, {0.5, 0.5}});
  REQUIRE(line.size() == 2);
  CHECK(polygon_area(line) == 0.0);
  CHECK_THROWS_AS(convex_hull({}), std::invalid_argument);

  // every input point lies inside or on the hull; the hull is counter-clockwise
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Point2> pts(3 + rng() % 40);
    for (auto& p : pts) p = {g(rng), g(rng)};
    const auto h = convex_hull(pts);
    for (std::size_t i = 0; i < h.size(); ++i) {
      const auto& a = h[i];
      const auto& b = h[(i + 1) % h.size()];
      for (const auto& p : pts) CHECK((b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= -1e-12);
    }
    CHECK(polygon_area(h) > 0);
  }
}

TEST_CASE("make_group dedupes, sorts and validates") {
  const auto e = testutil::make_ensemble({{{1, 0}, {0, 1}}, {{1, 0}, {0, 1}}, {{0.5, 0.5}}});
  Embedding emb;
  emb.refs = e.refs();
  emb.coords = {{0, 0}, {1, 0}, {0, 1}, {1, 1}, {5, 0}};
  const auto g = make_group("g1", "label", {{1, 1}, {0, 0}, {1, 1}, {2, 0}}, e, emb);
  CHECK(g.members == std::vector<TopicRef>{{0, 0}, {1, 1}, {2, 0}});
  CHECK(g.completeness == 1.0);
  CHECK(g.hull.size() == 3);
  CHECK_THROWS_AS(make_group("g", "", {{3, 0}}, e, emb), std::out_of_range);
  CHECK_THROWS_AS(make_group("g", "", {}, e, emb), std::invalid_argument);
}

TEST_CASE("top terms break ties by term id") {
  const auto e = testutil::make_ensemble({{{0.1, 0.3, 0.3, 0.3}}, {{0.25, 0.25, 0.25, 0.25}}});
  CHECK(top_terms(e, {0, 0}, 2) == std::vector<TermId>{1, 2});
  CHECK(top_terms(e, {1, 0}, 10) == std::vector<TermId>{0, 1, 2, 3});
}

TEST_CASE("filter spec validation") {
  FilterSpec s;
  CHECK_FALSE(s.has_criterion());
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.uncertainty = UncertaintyFilter{Measure::u_exist, 1.5, std::nullopt};
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.uncertainty = UncertaintyFilter{Measure::u_exist, std::nullopt, std::nullopt};
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.uncertainty = UncertaintyFilter{Measure::u_exist, 0.3, std::nullopt};
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("filters agree with a brute-force reading of each criterion") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const auto f = random_fixture(rng);
    const auto refs = f.ensemble.refs();
    FilterSpec spec;
    spec.top_n = 1 + rng() % 4;
    if (rng() % 3 == 0) {
      std::vector<TopicRef> chosen;
      for (const auto& r : refs) {
        if (rng() % 2) chosen.push_back(r);
      }
      spec.selected = chosen;
    }
    if (rng() % 3 == 0) spec.terms = {f.ensemble.vocabulary.term(static_cast<TermId>(rng() % f.ensemble.vocabulary.size()))};
    if (rng() % 2 == 0 || !spec.has_criterion()) {
      UncertaintyFilter uf;
      uf.measure = rng() % 2 ? Measure::u_match : Measure::u_exist;
      if (rng() % 2) uf.max_value = u(rng);
      if (rng() % 2 || !uf.max_value) uf.min_value = u(rng) * 0.5;
      spec.uncertainty = uf;
    }
    if (rng() % 2 == 0) spec.similar_to = SimilarityFilter{refs[rng() % refs.size()], u(rng) * 0.8, rng() % 2 == 0};
    const auto got = apply_filter(spec, f.ensemble, f.metrics.records, f.metrics.similarity);
    CHECK(got.warnings.empty());
    CHECK(got.refs == brute_filter(spec, f));
  }
}

TEST_CASE("tightening a bound never adds topics") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const auto f = random_fixture(rng);
    const auto refs = f.ensemble.refs();
    FilterSpec loose;
    loose.uncertainty = UncertaintyFilter{Measure::u_exist, 0.8, std::nullopt};
    loose.similar_to = SimilarityFilter{refs[0], 0.1, rng() % 2 == 0};
    FilterSpec tight = loose;
    tight.uncertainty->max_value = 0.4;
    tight.similar_to->min_similarity = 0.5;
    const auto a = apply_filter(loose, f.ensemble, f.metrics.records, f.metrics.similarity).refs;
    const auto b = apply_filter(tight, f.ensemble, f.metrics.records, f.metrics.similarity).refs;
    CHECK(std::includes(a.begin(), a.end(), b.begin(), b.end()));
  }
}

TEST_CASE("per-model best returns one topic per other member") {
  std::mt19937_64 rng(7);
  std::vector<oracle::Model> models(10);
  for (auto& m : models) {
    for (int t = 0; t < 3; ++t) m.push_back(testutil::random_distribution(rng, 12, 0.0));
  }
  const auto e = testutil::make_ensemble(models);
  const auto metrics = compute_all(e);
  FilterSpec spec;
  spec.similar_to = SimilarityFilter{{4, 1}, 0.0, true};
  const auto got = apply_filter(spec, e, metrics.records, metrics.similarity).refs;
  REQUIRE(got.size() == 9);
  std::set<std::size_t> models_seen;
  for (const auto& r : got) models_seen.insert(r.model_index);
  CHECK(models_seen.size() == 9);
  CHECK_FALSE(models_seen.contains(4));
}

TEST_CASE("unknown terms give an empty result and a warning") {
  std::mt19937_64 rng(8);
  const auto f = random_fixture(rng);
  FilterSpec spec;
  spec.terms = {"no-such-term"};
  const auto got = apply_filter(spec, f.ensemble, f.metrics.records, f.metrics.similarity);
  CHECK(got.refs.empty());
  REQUIRE(got.warnings.size() == 1);
  CHECK(got.warnings[0].find("no-such-term") != std::string::npos);
}

TEST_CASE("correlations match the reference") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(3 + rng() % 30), y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      // coarse values force ties
      x[i] = std::round(u(rng) * 5) / 5;
      y[i] = 0.5 * x[i] + std::round(u(rng) * 4) / 4;
    }
    if (oracle::pearson(x, x) != oracle::pearson(x, x) || oracle::pearson(y, y) != oracle::pearson(y, y)) continue;
    CHECK(pearson_correlation(x, y) == doctest::Approx(oracle::pearson(x, y)).epsilon(1e-12));
    CHECK(spearman_correlation(x, y) == doctest::Approx(oracle::spearman(x, y)).epsilon(1e-12));
    CHECK(average_ranks(x) == oracle::ranks(x));
  }
  CHECK(pearson_correlation(std::vector<double>{1, 2, 3}, std::vector<double>{2, 4, 6}) == 1.0);
  CHECK(spearman_correlation(std::vector<double>{1, 2, 3}, std::vector<double>{9, 4, 1}) == -1.0);
  CHECK_THROWS_AS(pearson_correlation(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), std::domain_error);
  CHECK_THROWS_AS(pearson_correlation(std::vector<double>{1, 2}, std::vector<double>{1, 2}), std::invalid_argument);
}

TEST_CASE("heatmap columns are the union of top terms by mean probability") {
  const auto e = testutil::make_ensemble({{{0.5, 0.3, 0.1, 0.1, 0.0}}, {{0.0, 0.1, 0.2, 0.3, 0.4}}});
  const std::vector<TopicRef> rows{{0, 0}, {1, 0}};
  const auto h = heatmap(e, rows, 2);
  // top-2: {0, 1} and {4, 3}; means 0.25, 0.2, 0.2, 0.2 -> ties to the lower id
  CHECK(h.columns == std::vector<TermId>{0, 1, 3, 4});
  CHECK(h.rows == rows);
  REQUIRE(h.values.rows() == 2);
  CHECK(h.values(1, 3) == 0.4);
  CHECK(h.values(0, 2) == 0.1);
}
