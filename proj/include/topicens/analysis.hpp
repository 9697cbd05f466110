#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "topicens/embedding.hpp"
#include "topicens/ensemble.hpp"
#include "topicens/metrics.hpp"

namespace topicens {

enum class Measure { u_match, u_exist };

std::string_view to_string(Measure m);
Measure measure_from_string(std::string_view name);
double measure_value(const UncertaintyRecord& record, Measure m);

enum class StabilityClass { stable, grey, unstable };

std::string_view to_string(StabilityClass c);

/// stable iff U < stable_below, unstable iff U > unstable_above, grey otherwise.
struct StabilityThresholds {
  double stable_below = 0.3;
  double unstable_above = 0.5;
};

StabilityClass classify(double u, const StabilityThresholds& thresholds = {});
std::vector<StabilityClass> classify_stability(std::span<const UncertaintyRecord> records, Measure measure,
                                               const StabilityThresholds& thresholds = {});

/// Analyst-labelled cluster of topics.
struct TopicGroup {
  std::string id;
  std::string label;
  std::vector<TopicRef> members;  // sorted, unique
  double completeness = 0.0;
  std::vector<Point2> hull;
};

/// Distinct member models represented in `members` divided by the ensemble size.
double completeness(std::span<const TopicRef> members, std::size_t ensemble_size);

/// Validates the refs against the ensemble, dedupes them and fills in
/// completeness and the hull over the embedding coordinates.
TopicGroup make_group(std::string id, std::string label, std::vector<TopicRef> members, const Ensemble& ensemble,
                      const Embedding& embedding);

/// Andrew's monotone chain. Counter-clockwise, collinear points dropped; one
/// point yields itself and collinear input yields the two extreme points.
std::vector<Point2> convex_hull(std::vector<Point2> points);

/// Shoelace area of a simple polygon (absolute value).
double polygon_area(std::span<const Point2> polygon);

/// Top-n term ids of a topic by probability (ties to the lower term id).
std::vector<TermId> top_terms(const Ensemble& ensemble, TopicRef ref, std::size_t n);

struct UncertaintyFilter {
  Measure measure = Measure::u_exist;
  /// Keeps U < max_value.
  std::optional<double> max_value;
  /// Keeps U > min_value.
  std::optional<double> min_value;
};

struct SimilarityFilter {
  TopicRef anchor;
  /// Keeps S >= min_similarity.
  double min_similarity = 0.0;
  /// Keep only the single most similar topic of each other member.
  bool best_per_model = false;
};

struct FilterSpec {
  std::optional<std::vector<TopicRef>> selected;
  std::vector<std::string> terms;
  std::size_t top_n = 10;
  std::optional<UncertaintyFilter> uncertainty;
  std::optional<SimilarityFilter> similar_to;

  bool has_criterion() const;
  /// Throws std::invalid_argument when no criterion is set or a threshold lies outside [0, 1].
  void validate() const;
};

struct FilterResult {
  std::vector<TopicRef> refs;  // ensemble order
  std::vector<std::string> warnings;
};

/// Conjunction of every active criterion. Unknown terms produce an empty
/// result plus a warning. The similarity anchor itself is never returned.
FilterResult apply_filter(const FilterSpec& spec, const Ensemble& ensemble, std::span<const UncertaintyRecord> records,
                          const SimilarityMatrix& sim);

struct Correlation {
  double pearson = 0.0;
  double spearman = 0.0;
};

double pearson_correlation(std::span<const double> x, std::span<const double> y);
/// Pearson correlation of average ranks (ties share their mean rank).
double spearman_correlation(std::span<const double> x, std::span<const double> y);
std::vector<double> average_ranks(std::span<const double> values);

/// Correlation between U_M and U_E. Needs >= 3 records and non-zero variance.
Correlation correlation(std::span<const UncertaintyRecord> records);

struct MeasureSummary {
  double mean = 0.0;
  double median = 0.0;
  std::size_t stable = 0;
  std::size_t grey = 0;
  std::size_t unstable = 0;
};

struct EnsembleSummary {
  std::size_t topics = 0;
  MeasureSummary u_match;
  MeasureSummary u_exist;
};

MeasureSummary summarize(std::span<const double> values, const StabilityThresholds& thresholds = {});
EnsembleSummary ensemble_summary(std::span<const UncertaintyRecord> records,
                                 const StabilityThresholds& thresholds = {});

/// Topic view data: one row per topic, columns are the union of the rows'
/// top-n terms sorted by mean probability over the rows, descending.
struct Heatmap {
  std::vector<TopicRef> rows;
  std::vector<TermId> columns;
  DenseMatrix values;
};

Heatmap heatmap(const Ensemble& ensemble, std::span<const TopicRef> refs, std::size_t top_n = 10);

}  // namespace topicens
