#include "topicens/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace topicens {

std::string_view to_string(Measure m) { return m == Measure::u_match ? "u_match" : "u_exist"; }

Measure measure_from_string(std::string_view name) {
  if (name == "u_match" || name == "U_M" || name == "match") return Measure::u_match;
  if (name == "u_exist" || name == "U_E" || name == "exist") return Measure::u_exist;
  throw std::invalid_argument("unknown uncertainty measure '" + std::string(name) + "'");
}

double measure_value(const UncertaintyRecord& record, Measure m) {
  return m == Measure::u_match ? record.u_match : record.u_exist;
}

std::string_view to_string(StabilityClass c) {
  switch (c) {
    case StabilityClass::stable:
      return "stable";
    case StabilityClass::grey:
      return "grey";
    case StabilityClass::unstable:
      return "unstable";
  }
  return "grey";
}

StabilityClass classify(double u, const StabilityThresholds& t) {
  if (u < t.stable_below) return StabilityClass::stable;
  if (u > t.unstable_above) return StabilityClass::unstable;
  return StabilityClass::grey;
}

std::vector<StabilityClass> classify_stability(std::span<const UncertaintyRecord> records, Measure measure,
                                               const StabilityThresholds& thresholds) {
  if (!(thresholds.stable_below <= thresholds.unstable_above)) {
    throw std::invalid_argument("stability thresholds must be ordered");
  }
  std::vector<StabilityClass> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(classify(measure_value(r, measure), thresholds));
  return out;
}

double completeness(std::span<const TopicRef> members, std::size_t ensemble_size) {
  if (members.empty()) throw std::invalid_argument("completeness of an empty group");
  if (ensemble_size == 0) throw std::invalid_argument("empty ensemble");
  std::set<std::size_t> models;
  for (const auto& r : members) models.insert(r.model_index);
  return static_cast<double>(models.size()) / static_cast<double>(ensemble_size);
}

TopicGroup make_group(std::string id, std::string label, std::vector<TopicRef> members, const Ensemble& ensemble,
                      const Embedding& embedding) {
  if (members.empty()) throw std::invalid_argument("a group needs at least one topic");
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  for (const auto& r : members) {
    if (!ensemble.contains(r)) {
      throw std::out_of_range("unknown topic " + std::to_string(r.model_index) + "/" + std::to_string(r.topic_index));
    }
  }
  TopicGroup g;
  g.id = std::move(id);
  g.label = std::move(label);
  g.completeness = completeness(members, ensemble.size());
  if (embedding.coords.size() == ensemble.total_topics()) {
    std::vector<Point2> pts;
    pts.reserve(members.size());
    for (const auto& r : members) pts.push_back(embedding.coords[ensemble.flat_index(r)]);
    g.hull = convex_hull(std::move(pts));
  }
  g.members = std::move(members);
  return g;
}

namespace {

double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

}  // namespace

std::vector<Point2> convex_hull(std::vector<Point2> points) {
  if (points.empty()) throw std::invalid_argument("convex hull of an empty point set");
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  if (points.size() <= 2) return points;

  std::vector<Point2> hull(2 * points.size());
  std::size_t k = 0;
  for (const auto& p : points) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = points.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], points[i]) <= 0.0) --k;
    hull[k++] = points[i];
  }
  hull.resize(k - 1);
  // All points collinear: the chain collapses to the two extremes.
  if (hull.size() < 3) return {points.front(), points.back()};
  return hull;
}

double polygon_area(std::span<const Point2> polygon) {
  if (polygon.size() < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    const auto& a = polygon[i];
    const auto& b = polygon[(i + 1) % polygon.size()];
    twice += a[0] * b[1] - b[0] * a[1];
  }
  return std::abs(twice) / 2.0;
}

std::vector<TermId> top_terms(const Ensemble& ensemble, TopicRef ref, std::size_t n) {
  const auto phi = ensemble.phi(ref);
  std::vector<TermId> ids(phi.size());
  std::iota(ids.begin(), ids.end(), TermId{0});
  n = std::min(n, ids.size());
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n), ids.end(), [&](TermId a, TermId b) {
    return phi[a] != phi[b] ? phi[a] > phi[b] : a < b;
  });
  ids.resize(n);
  return ids;
}

bool FilterSpec::has_criterion() const {
  return selected.has_value() || !terms.empty() || uncertainty.has_value() || similar_to.has_value();
}

void FilterSpec::validate() const {
  if (!has_criterion()) throw std::invalid_argument("filter has no criterion");
  const auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (uncertainty) {
    if (!uncertainty->max_value && !uncertainty->min_value) {
      throw std::invalid_argument("uncertainty filter needs a min or max threshold");
    }
    if ((uncertainty->max_value && !in_unit(*uncertainty->max_value)) ||
        (uncertainty->min_value && !in_unit(*uncertainty->min_value))) {
      throw std::invalid_argument("uncertainty thresholds must lie in [0, 1]");
    }
  }
  if (similar_to && !in_unit(similar_to->min_similarity)) {
    throw std::invalid_argument("similarity threshold must lie in [0, 1]");
  }
  if (!terms.empty() && top_n == 0) throw std::invalid_argument("term filter needs top_n >= 1");
}

FilterResult apply_filter(const FilterSpec& spec, const Ensemble& ensemble, std::span<const UncertaintyRecord> records,
                          const SimilarityMatrix& sim) {
  spec.validate();
  const auto refs = ensemble.refs();
  if (records.size() != refs.size() || sim.size() != refs.size()) {
    throw std::invalid_argument("records and similarity matrix must cover the whole ensemble");
  }
  std::vector<bool> keep(refs.size(), true);
  FilterResult result;

  if (spec.selected) {
    std::set<TopicRef> chosen;
    for (const auto& r : *spec.selected) {
      if (!ensemble.contains(r)) throw std::out_of_range("selected topic is not part of the ensemble");
      chosen.insert(r);
    }
    for (std::size_t i = 0; i < refs.size(); ++i) keep[i] = keep[i] && chosen.contains(refs[i]);
  }

  if (!spec.terms.empty()) {
    std::vector<TermId> wanted;
    for (const auto& t : spec.terms) {
      if (auto id = ensemble.vocabulary.lookup(t)) {
        wanted.push_back(*id);
      } else {
        result.warnings.push_back("unknown term '" + t + "'");
      }
    }
    if (!result.warnings.empty()) return result;
    for (std::size_t i = 0; i < refs.size(); ++i) {
      if (!keep[i]) continue;
      const auto top = top_terms(ensemble, refs[i], spec.top_n);
      keep[i] = std::all_of(wanted.begin(), wanted.end(),
                            [&](TermId w) { return std::find(top.begin(), top.end(), w) != top.end(); });
    }
  }

  if (spec.uncertainty) {
    const auto& u = *spec.uncertainty;
    for (std::size_t i = 0; i < refs.size(); ++i) {
      const double v = measure_value(records[i], u.measure);
      if (u.max_value && !(v < *u.max_value)) keep[i] = false;
      if (u.min_value && !(v > *u.min_value)) keep[i] = false;
    }
  }

  if (spec.similar_to) {
    const auto& s = *spec.similar_to;
    if (!ensemble.contains(s.anchor)) throw std::out_of_range("similarity anchor is not part of the ensemble");
    const std::size_t anchor = ensemble.flat_index(s.anchor);
    std::vector<bool> similar(refs.size(), false);
    if (s.best_per_model) {
      for (std::size_t l = 0; l < ensemble.size(); ++l) {
        if (l == s.anchor.model_index) continue;
        const std::size_t offset = ensemble.flat_index({l, 0});
        std::size_t best = offset;
        for (std::size_t j = 1; j < ensemble.members[l].num_topics(); ++j) {
          if (sim(anchor, offset + j) > sim(anchor, best)) best = offset + j;
        }
        similar[best] = sim(anchor, best) >= s.min_similarity;
      }
    } else {
      for (std::size_t i = 0; i < refs.size(); ++i) similar[i] = i != anchor && sim(anchor, i) >= s.min_similarity;
    }
    for (std::size_t i = 0; i < refs.size(); ++i) keep[i] = keep[i] && similar[i];
  }

  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (keep[i]) result.refs.push_back(refs[i]);
  }
  return result;
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("correlation inputs differ in length");
  if (x.size() < 3) throw std::invalid_argument("correlation needs at least 3 observations");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw std::domain_error("correlation is undefined for zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman_correlation(std::span<const double> x, std::span<const double> y) {
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson_correlation(rx, ry);
}

Correlation correlation(std::span<const UncertaintyRecord> records) {
  std::vector<double> um;
  std::vector<double> ue;
  for (const auto& r : records) {
    um.push_back(r.u_match);
    ue.push_back(r.u_exist);
  }
  return {pearson_correlation(um, ue), spearman_correlation(um, ue)};
}

MeasureSummary summarize(std::span<const double> values, const StabilityThresholds& thresholds) {
  if (values.empty()) throw std::invalid_argument("summary of an empty set");
  MeasureSummary s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  s.median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  for (double v : values) {
    switch (classify(v, thresholds)) {
      case StabilityClass::stable:
        ++s.stable;
        break;
      case StabilityClass::grey:
        ++s.grey;
        break;
      case StabilityClass::unstable:
        ++s.unstable;
        break;
    }
  }
  return s;
}

EnsembleSummary ensemble_summary(std::span<const UncertaintyRecord> records, const StabilityThresholds& thresholds) {
  if (records.empty()) throw std::invalid_argument("summary of an empty set");
  std::vector<double> um;
  std::vector<double> ue;
  for (const auto& r : records) {
    um.push_back(r.u_match);
    ue.push_back(r.u_exist);
  }
  return {records.size(), summarize(um, thresholds), summarize(ue, thresholds)};
}

Heatmap heatmap(const Ensemble& ensemble, std::span<const TopicRef> refs, std::size_t top_n) {
  Heatmap h;
  h.rows.assign(refs.begin(), refs.end());
  std::set<TermId> columns;
  for (const auto& r : refs) {
    for (TermId t : top_terms(ensemble, r, top_n)) columns.insert(t);
  }
  std::vector<std::pair<double, TermId>> ordered;
  for (TermId t : columns) {
    double mean = 0.0;
    for (const auto& r : refs) mean += ensemble.phi(r)[t];
    ordered.emplace_back(mean / static_cast<double>(refs.size()), t);
  }
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  for (const auto& [mean, t] : ordered) h.columns.push_back(t);
  h.values = DenseMatrix(refs.size(), h.columns.size());
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto phi = ensemble.phi(refs[i]);
    for (std::size_t c = 0; c < h.columns.size(); ++c) h.values(i, c) = phi[h.columns[c]];
  }
  return h;
}

}  // namespace topicens
