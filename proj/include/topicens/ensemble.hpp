#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "topicens/corpus.hpp"
#include "topicens/lda.hpp"

namespace topicens {

enum class EnsembleMode { sampling, vary_alpha, vary_beta, vary_k };

std::string_view to_string(EnsembleMode mode);
EnsembleMode ensemble_mode_from_string(std::string_view name);

/// How an ensemble is built. In vary_k mode the member alpha is
/// `base_config.alpha * base_config.k / k_member`, i.e. alpha is held as a
/// multiple of 1/k so the 5/k default follows k.
struct EnsembleSpec {
  EnsembleMode mode = EnsembleMode::sampling;
  LdaConfig base_config;
  std::size_t members = 10;
  /// One value per member in vary_* modes, strictly increasing; unused in sampling mode.
  std::vector<double> parameter_values;
  /// Member i uses seed base_config.seed + i unless pinned, in which case all share base_config.seed.
  bool pin_seed = false;

  void validate() const;
  /// The LdaConfig of member `index`.
  LdaConfig member_config(std::size_t index) const;
};

/// Named presets mirroring the reference experiments. `iterations` overrides
/// the 10,000-sweep default for desk-scale runs. E2 (sampler-side
/// hyperparameter optimisation) cannot be generated; asking for it throws.
EnsembleSpec preset(std::string_view name, std::optional<std::size_t> iterations = std::nullopt,
                    std::uint64_t base_seed = 1);

/// Default k list for E5: round(linspace(20, 50, 10)).
std::vector<double> preset_e5_k_values();

/// Identifies topic `topic_index` of ensemble member `model_index`.
struct TopicRef {
  std::size_t model_index = 0;
  std::size_t topic_index = 0;

  friend bool operator==(const TopicRef&, const TopicRef&) = default;
  friend auto operator<=>(const TopicRef&, const TopicRef&) = default;
};

/// Where an ensemble member came from.
struct MemberProvenance {
  std::string source = "generated";  // "generated" or "mallet"
  /// Weight given to terms absent from an imported topic before normalisation.
  double smoothing_floor = 0.0;
  std::string topic_word_weights_path;
  std::string doc_topics_path;
};

struct Ensemble {
  std::vector<TopicModel> members;
  EnsembleSpec spec;
  Vocabulary vocabulary;
  std::vector<MemberProvenance> provenance;
  /// Document ids aligned with the theta rows.
  std::vector<std::string> doc_ids;
  /// True for imports; spec.mode / parameter values are then descriptive only.
  bool imported = false;

  std::size_t size() const noexcept { return members.size(); }
  std::size_t total_topics() const;
  /// All topic refs, member-major.
  std::vector<TopicRef> refs() const;
  /// Position of `ref` in refs(); throws std::out_of_range for unknown refs.
  std::size_t flat_index(TopicRef ref) const;
  bool contains(TopicRef ref) const;
  std::span<const double> phi(TopicRef ref) const;

  /// Shared vocabulary, per-model row sums and index bounds.
  void check_invariants(double tolerance = 1e-9) const;
};

/// Trains spec.members models (in parallel) and assembles them.
Ensemble generate(const DocTermMatrix& matrix, const Vocabulary& vocabulary, const EnsembleSpec& spec);

/// Names of the LDA parameters (k, alpha_scale = alpha * k, beta) that are not
/// identical across `configs`. Seeds are ignored.
std::vector<std::string> varied_parameters(std::span<const LdaConfig> configs);

nlohmann::json spec_to_json(const EnsembleSpec& spec);
EnsembleSpec spec_from_json(const nlohmann::json& j);

}  // namespace topicens
