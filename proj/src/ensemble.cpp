#include "topicens/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "topicens/error.hpp"
#include "topicens/parallel.hpp"

namespace topicens {

std::string_view to_string(EnsembleMode mode) {
  switch (mode) {
    case EnsembleMode::sampling:
      return "sampling";
    case EnsembleMode::vary_alpha:
      return "vary_alpha";
    case EnsembleMode::vary_beta:
      return "vary_beta";
    case EnsembleMode::vary_k:
      return "vary_k";
  }
  return "sampling";
}

EnsembleMode ensemble_mode_from_string(std::string_view name) {
  if (name == "sampling") return EnsembleMode::sampling;
  if (name == "vary_alpha") return EnsembleMode::vary_alpha;
  if (name == "vary_beta") return EnsembleMode::vary_beta;
  if (name == "vary_k") return EnsembleMode::vary_k;
  throw std::invalid_argument("unknown ensemble mode '" + std::string(name) + "'");
}

void EnsembleSpec::validate() const {
  base_config.validate();
  if (members < 2) throw std::invalid_argument("an ensemble needs at least 2 members");
  if (mode == EnsembleMode::sampling) return;
  if (parameter_values.size() != members) {
    throw std::invalid_argument("parameter_values has " + std::to_string(parameter_values.size()) +
                                " entries but the ensemble has " + std::to_string(members) + " members");
  }
  for (std::size_t i = 0; i < parameter_values.size(); ++i) {
    const double v = parameter_values[i];
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("parameter values must be positive");
    if (i > 0 && !(parameter_values[i - 1] < v)) {
      throw std::invalid_argument("parameter values must be strictly increasing");
    }
    if (mode == EnsembleMode::vary_k && v != std::floor(v)) {
      throw std::invalid_argument("k values must be integers");
    }
  }
}

LdaConfig EnsembleSpec::member_config(std::size_t index) const {
  LdaConfig c = base_config;
  c.seed = pin_seed ? base_config.seed : base_config.seed + index;
  switch (mode) {
    case EnsembleMode::sampling:
      break;
    case EnsembleMode::vary_alpha:
      c.alpha = parameter_values.at(index);
      break;
    case EnsembleMode::vary_beta:
      c.beta = parameter_values.at(index);
      break;
    case EnsembleMode::vary_k: {
      const double alpha_scale = base_config.alpha * static_cast<double>(base_config.k);
      c.k = static_cast<std::size_t>(parameter_values.at(index));
      c.alpha = alpha_scale / static_cast<double>(c.k);
      break;
    }
  }
  return c;
}

std::vector<double> preset_e5_k_values() {
  std::vector<double> ks;
  for (int i = 0; i < 10; ++i) ks.push_back(std::round(20.0 + 30.0 * i / 9.0));
  return ks;
}

EnsembleSpec preset(std::string_view name, std::optional<std::size_t> iterations, std::uint64_t base_seed) {
  EnsembleSpec spec;
  spec.members = 10;
  spec.base_config = LdaConfig::defaults(20, base_seed);
  if (iterations) spec.base_config.iterations = *iterations;
  const double k = 20.0;

  if (name == "E1") {
    spec.mode = EnsembleMode::sampling;
  } else if (name == "E3") {
    spec.mode = EnsembleMode::vary_alpha;
    const double lo = std::log(0.5 / k);
    const double hi = std::log(20.0 / k);
    for (int i = 0; i < 10; ++i) spec.parameter_values.push_back(std::exp(lo + (hi - lo) * i / 9.0));
    spec.parameter_values.front() = 0.5 / k;
    spec.parameter_values.back() = 20.0 / k;
  } else if (name == "E4") {
    spec.mode = EnsembleMode::vary_beta;
    for (int i = 0; i < 10; ++i) spec.parameter_values.push_back(0.01 + (0.23 - 0.01) * i / 9.0);
  } else if (name == "E5") {
    spec.mode = EnsembleMode::vary_k;
    spec.parameter_values = preset_e5_k_values();
  } else if (name == "E2") {
    throw std::invalid_argument("preset E2 relies on sampler-side hyperparameter optimisation; import it instead");
  } else {
    throw std::invalid_argument("unknown preset '" + std::string(name) + "'");
  }
  return spec;
}

std::size_t Ensemble::total_topics() const {
  std::size_t n = 0;
  for (const auto& m : members) n += m.num_topics();
  return n;
}

std::vector<TopicRef> Ensemble::refs() const {
  std::vector<TopicRef> out;
  out.reserve(total_topics());
  for (std::size_t m = 0; m < members.size(); ++m) {
    for (std::size_t t = 0; t < members[m].num_topics(); ++t) out.push_back({m, t});
  }
  return out;
}

bool Ensemble::contains(TopicRef ref) const {
  return ref.model_index < members.size() && ref.topic_index < members[ref.model_index].num_topics();
}

std::size_t Ensemble::flat_index(TopicRef ref) const {
  if (!contains(ref)) throw std::out_of_range("topic ref out of range");
  std::size_t offset = 0;
  for (std::size_t m = 0; m < ref.model_index; ++m) offset += members[m].num_topics();
  return offset + ref.topic_index;
}

std::span<const double> Ensemble::phi(TopicRef ref) const {
  if (!contains(ref)) throw std::out_of_range("topic ref out of range");
  return members[ref.model_index].phi.row(ref.topic_index);
}

void Ensemble::check_invariants(double tolerance) const {
  if (provenance.size() != members.size()) throw StructureError("provenance count differs from member count");
  for (std::size_t m = 0; m < members.size(); ++m) {
    const auto& model = members[m];
    if (model.num_terms() != vocabulary.size()) {
      throw StructureError("member " + std::to_string(m) + " does not share the ensemble vocabulary");
    }
    if (model.has_theta() && model.theta.rows() != doc_ids.size()) {
      throw StructureError("member " + std::to_string(m) + " theta rows do not match the document list");
    }
    model.check_invariants(tolerance);
  }
}

Ensemble generate(const DocTermMatrix& matrix, const Vocabulary& vocabulary, const EnsembleSpec& spec) {
  spec.validate();
  if (matrix.num_terms() != vocabulary.size()) throw StructureError("matrix and vocabulary sizes differ");

  Ensemble ens;
  ens.spec = spec;
  ens.vocabulary = vocabulary;
  ens.doc_ids = matrix.doc_ids();
  ens.members.resize(spec.members);
  ens.provenance.resize(spec.members);
  parallel_for(spec.members, [&](std::size_t i) {
    ens.members[i] = train(matrix, spec.member_config(i));
    ens.members[i].model_id = i;
  });
  return ens;
}

std::vector<std::string> varied_parameters(std::span<const LdaConfig> configs) {
  std::vector<std::string> varied;
  if (configs.empty()) return varied;
  const auto& first = configs.front();
  const auto scale = [](const LdaConfig& c) { return c.alpha * static_cast<double>(c.k); };
  const auto differs = [&](auto&& get) {
    return std::any_of(configs.begin(), configs.end(), [&](const LdaConfig& c) {
      return std::abs(get(c) - get(first)) > 1e-12 * std::max(1.0, std::abs(get(first)));
    });
  };
  if (differs([](const LdaConfig& c) { return static_cast<double>(c.k); })) varied.emplace_back("k");
  if (differs(scale)) varied.emplace_back("alpha_scale");
  if (differs([](const LdaConfig& c) { return c.beta; })) varied.emplace_back("beta");
  return varied;
}

nlohmann::json spec_to_json(const EnsembleSpec& spec) {
  return {{"mode", to_string(spec.mode)},
          {"base_config", config_to_json(spec.base_config)},
          {"members", spec.members},
          {"parameter_values", spec.parameter_values},
          {"pin_seed", spec.pin_seed}};
}

EnsembleSpec spec_from_json(const nlohmann::json& j) {
  EnsembleSpec spec;
  spec.mode = ensemble_mode_from_string(j.at("mode").get<std::string>());
  spec.base_config = config_from_json(j.at("base_config"));
  spec.members = j.at("members").get<std::size_t>();
  spec.parameter_values = j.at("parameter_values").get<std::vector<double>>();
  spec.pin_seed = j.value("pin_seed", false);
  return spec;
}

}  // namespace topicens
