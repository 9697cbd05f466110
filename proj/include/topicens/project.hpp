#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "topicens/analysis.hpp"
#include "topicens/corpus.hpp"
#include "topicens/embedding.hpp"
#include "topicens/ensemble.hpp"
#include "topicens/metrics.hpp"

namespace topicens {

inline constexpr int kProjectFormatVersion = 1;

/// Where the raw corpus lives and how it was preprocessed; enough to rebuild
/// the tokens for the document view.
struct CorpusReference {
  std::string path;
  bool lowercase = true;
  std::size_t min_length = 1;
  std::size_t min_doc_freq = 1;
  std::vector<std::string> stopwords;  // sorted

  PreprocessConfig preprocess_config() const;
};

struct ViewConfig {
  std::size_t top_n = 10;
  StabilityThresholds thresholds;
  /// "categorical" for sampling ensembles, "sequential" for parameter sweeps.
  std::string color_map = "categorical";
};

struct Project {
  std::string id = "project";
  std::uint64_t revision = 0;
  std::optional<CorpusReference> corpus;
  std::optional<Ensemble> ensemble;
  std::optional<EnsembleMetrics> metrics;
  std::optional<EmbeddingConfig> embedding_config;
  std::optional<Embedding> embedding;
  std::vector<TopicGroup> groups;
  std::uint64_t next_group_id = 1;
  ViewConfig view;

  /// Tokenised corpus documents (not persisted; reloaded from `corpus`).
  std::vector<Document> documents;

  bool documents_available() const { return !documents.empty(); }
  /// Index of a document id in ensemble->doc_ids, if present.
  std::optional<std::size_t> doc_index(const std::string& doc_id) const;
  const Document* find_document(const std::string& doc_id) const;

  /// Every group / embedding ref exists in the ensemble, records and matrix
  /// align with the ensemble order. Throws StructureError.
  void check_consistency() const;
};

/// Loads and tokenises the corpus referenced by `ref`.
std::vector<Document> load_reference_corpus(const CorpusReference& ref);

/// Ingest, generate the ensemble, compute metrics and the embedding.
Project create_project(const CorpusReference& corpus, const EnsembleSpec& spec,
                       const EmbeddingConfig& embedding_config);

/// Fills in metrics and embedding for a project that has an ensemble.
void compute_metrics(Project& project);
void compute_embedding(Project& project, const EmbeddingConfig& config);

/// Writes `path` (JSON) and `<path>.sim.bin` (similarity sidecar, when metrics exist).
void save_project(const Project& project, const std::filesystem::path& path);

/// Reads a project. A missing corpus leaves documents empty (document views
/// then report a capability error). Throws Error on a format version mismatch
/// or a sidecar whose content hash differs from the recorded one.
Project open_project(const std::filesystem::path& path);

nlohmann::json project_to_json(const Project& project);

nlohmann::json group_to_json(const TopicGroup& group);

}  // namespace topicens
