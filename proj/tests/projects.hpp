#pragma once
// Fixture projects shared by the project, API and acceptance tests.

#include <filesystem>
#include <fstream>

#include "support.hpp"
#include "topicens/mallet.hpp"
#include "topicens/project.hpp"
#include "topicens/synthbench.hpp"

namespace testutil {

inline std::vector<topicens::MalletMemberFiles> mallet_fixture_files() {
  const auto dir = fixtures() / "mallet";
  return {{dir / "member0.topic-word-weights.txt", dir / "member0.doc-topics.dense.txt"},
          {dir / "member1.topic-word-weights.txt", dir / "member1.doc-topics.sparse.txt"}};
}

/// Two imported 3-topic members over the four-document fixture corpus.
inline topicens::Project mallet_project(bool with_corpus = true) {
  using namespace topicens;
  Project p;
  p.id = "mallet-fixture";
  p.ensemble = import_mallet(mallet_fixture_files());
  CorpusReference ref;
  ref.path = (fixtures() / (with_corpus ? "corpus" : "no-such-corpus")).string();
  p.corpus = ref;
  if (with_corpus) p.documents = load_reference_corpus(ref);
  compute_metrics(p);
  EmbeddingConfig ec;
  ec.perplexity = 1.5;
  ec.iterations = 300;
  ec.seed = 3;
  compute_embedding(p, ec);
  return p;
}

/// Writes a synthetic corpus as one .txt file per document.
inline void write_corpus(const topicens::SyntheticCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& d : corpus.documents) std::ofstream(dir / (d.id + ".txt")) << d.raw_text;
}

inline topicens::SyntheticSpec small_synthetic_spec() {
  topicens::SyntheticSpec s;
  s.true_k = 4;
  s.vocabulary_size = 120;
  s.documents = 60;
  s.min_doc_length = 40;
  s.max_doc_length = 60;
  s.separation = 0.9;
  s.seed = 11;
  return s;
}

/// A 10-member E1-style project (k = 4) created end to end from a synthetic
/// corpus written under `dir`.
inline topicens::Project synthetic_project(const std::filesystem::path& dir, std::size_t iterations = 100) {
  using namespace topicens;
  const auto corpus = generate_corpus(small_synthetic_spec());
  write_corpus(corpus, dir / "corpus");
  CorpusReference ref;
  ref.path = (dir / "corpus").string();
  EnsembleSpec spec = preset("E1", iterations, 1);
  spec.base_config = LdaConfig::defaults(4, 1);
  spec.base_config.iterations = iterations;
  EmbeddingConfig ec;
  ec.perplexity = 5.0;
  ec.iterations = 300;
  Project p = create_project(ref, spec, ec);
  p.id = "synthetic";
  return p;
}

}  // namespace testutil
