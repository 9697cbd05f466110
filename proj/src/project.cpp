#include "topicens/project.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "hashing.hpp"
#include "topicens/error.hpp"

namespace topicens {

namespace fs = std::filesystem;
using nlohmann::json;

PreprocessConfig CorpusReference::preprocess_config() const {
  PreprocessConfig c;
  c.lowercase = lowercase;
  c.min_length = min_length;
  c.stopwords.insert(stopwords.begin(), stopwords.end());
  return c;
}

std::optional<std::size_t> Project::doc_index(const std::string& doc_id) const {
  if (!ensemble) return std::nullopt;
  const auto& ids = ensemble->doc_ids;
  const auto it = std::find(ids.begin(), ids.end(), doc_id);
  if (it == ids.end()) return std::nullopt;
  return static_cast<std::size_t>(it - ids.begin());
}

const Document* Project::find_document(const std::string& doc_id) const {
  const auto it = std::find_if(documents.begin(), documents.end(), [&](const Document& d) { return d.id == doc_id; });
  return it == documents.end() ? nullptr : &*it;
}

void Project::check_consistency() const {
  if (!ensemble) {
    if (metrics || embedding || !groups.empty()) throw StructureError("project has derived data but no ensemble");
    return;
  }
  ensemble->check_invariants();
  const auto refs = ensemble->refs();
  if (metrics) {
    if (metrics->similarity.refs != refs) throw StructureError("similarity matrix order differs from the ensemble");
    if (metrics->similarity.values.rows() != refs.size() || metrics->similarity.values.cols() != refs.size()) {
      throw StructureError("similarity matrix has the wrong dimension");
    }
    if (metrics->records.size() != refs.size()) throw StructureError("uncertainty record count differs from topic count");
    for (std::size_t i = 0; i < refs.size(); ++i) {
      if (metrics->records[i].ref != refs[i]) throw StructureError("uncertainty records are out of order");
    }
  }
  if (embedding && (embedding->refs != refs || embedding->coords.size() != refs.size())) {
    throw StructureError("embedding does not cover the ensemble topics");
  }
  for (const auto& g : groups) {
    if (g.members.empty()) throw StructureError("group " + g.id + " is empty");
    for (const auto& r : g.members) {
      if (!ensemble->contains(r)) throw StructureError("group " + g.id + " references an unknown topic");
    }
  }
}

std::vector<Document> load_reference_corpus(const CorpusReference& ref) {
  auto docs = load_corpus(ref.path);
  tokenize_all(docs, ref.preprocess_config());
  return docs;
}

void compute_metrics(Project& project) {
  if (!project.ensemble) throw Error("project has no ensemble");
  project.metrics = compute_all(*project.ensemble);
}

void compute_embedding(Project& project, const EmbeddingConfig& config) {
  if (!project.metrics) compute_metrics(project);
  project.embedding = embed_topics(project.metrics->similarity, config);
  project.embedding_config = config;
  for (auto& g : project.groups) g = make_group(g.id, g.label, g.members, *project.ensemble, *project.embedding);
}

Project create_project(const CorpusReference& corpus, const EnsembleSpec& spec,
                       const EmbeddingConfig& embedding_config) {
  Project p;
  p.corpus = corpus;
  p.documents = load_reference_corpus(corpus);
  auto [vocab, matrix] = build_matrix(p.documents, corpus.min_doc_freq);
  p.ensemble = generate(matrix, vocab, spec);
  p.view.color_map = spec.mode == EnsembleMode::sampling ? "categorical" : "sequential";
  compute_metrics(p);
  compute_embedding(p, embedding_config);
  return p;
}

namespace {

json corpus_to_json(const CorpusReference& c) {
  return {{"path", c.path},
          {"lowercase", c.lowercase},
          {"min_length", c.min_length},
          {"min_doc_freq", c.min_doc_freq},
          {"stopwords", c.stopwords}};
}

CorpusReference corpus_from_json(const json& j) {
  CorpusReference c;
  c.path = j.at("path").get<std::string>();
  c.lowercase = j.value("lowercase", true);
  c.min_length = j.value("min_length", std::size_t{1});
  c.min_doc_freq = j.value("min_doc_freq", std::size_t{1});
  c.stopwords = j.value("stopwords", std::vector<std::string>{});
  return c;
}

json ensemble_to_json(const Ensemble& e) {
  json members = json::array();
  for (const auto& m : e.members) members.push_back(model_to_json(m, e.vocabulary));
  json provenance = json::array();
  for (const auto& p : e.provenance) {
    provenance.push_back({{"source", p.source},
                          {"smoothing_floor", p.smoothing_floor},
                          {"topic_word_weights_path", p.topic_word_weights_path},
                          {"doc_topics_path", p.doc_topics_path}});
  }
  return {{"spec", spec_to_json(e.spec)}, {"imported", e.imported},   {"vocabulary", e.vocabulary.terms()},
          {"doc_ids", e.doc_ids},         {"provenance", provenance}, {"members", members}};
}

Ensemble ensemble_from_json(const json& j) {
  Ensemble e;
  e.spec = spec_from_json(j.at("spec"));
  e.imported = j.value("imported", false);
  e.vocabulary = Vocabulary(j.at("vocabulary").get<std::vector<std::string>>());
  e.doc_ids = j.at("doc_ids").get<std::vector<std::string>>();
  const auto hash = e.vocabulary.content_hash();
  for (const auto& m : j.at("members")) {
    if (m.at("vocabulary_hash").get<std::string>() != hash) {
      throw StructureError("member vocabulary hash does not match the ensemble vocabulary");
    }
    e.members.push_back(model_from_json(m));
  }
  for (const auto& p : j.at("provenance")) {
    MemberProvenance mp;
    mp.source = p.at("source").get<std::string>();
    mp.smoothing_floor = p.at("smoothing_floor").get<double>();
    mp.topic_word_weights_path = p.value("topic_word_weights_path", "");
    mp.doc_topics_path = p.value("doc_topics_path", "");
    e.provenance.push_back(std::move(mp));
  }
  return e;
}

json embedding_config_to_json(const EmbeddingConfig& c) {
  return {{"perplexity", c.perplexity},
          {"iterations", c.iterations},
          {"learning_rate", c.learning_rate},
          {"early_exaggeration", c.early_exaggeration},
          {"exaggeration_iterations", c.exaggeration_iterations},
          {"initial_momentum", c.initial_momentum},
          {"final_momentum", c.final_momentum},
          {"momentum_switch_iteration", c.momentum_switch_iteration},
          {"init_scale", c.init_scale},
          {"seed", c.seed}};
}

EmbeddingConfig embedding_config_from_json(const json& j) {
  EmbeddingConfig c;
  c.perplexity = j.at("perplexity").get<double>();
  c.iterations = j.at("iterations").get<std::size_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.early_exaggeration = j.at("early_exaggeration").get<double>();
  c.exaggeration_iterations = j.at("exaggeration_iterations").get<std::size_t>();
  c.initial_momentum = j.at("initial_momentum").get<double>();
  c.final_momentum = j.at("final_momentum").get<double>();
  c.momentum_switch_iteration = j.at("momentum_switch_iteration").get<std::size_t>();
  c.init_scale = j.at("init_scale").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

json ref_to_json(const TopicRef& r) { return {{"model", r.model_index}, {"topic", r.topic_index}}; }

TopicRef ref_from_json(const json& j) { return {j.at("model").get<std::size_t>(), j.at("topic").get<std::size_t>()}; }

std::string sidecar_name(const fs::path& project_path) { return project_path.filename().string() + ".sim.bin"; }

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

json group_to_json(const TopicGroup& g) {
  json members = json::array();
  for (const auto& r : g.members) members.push_back(ref_to_json(r));
  json hull = json::array();
  for (const auto& p : g.hull) hull.push_back({p[0], p[1]});
  return {{"id", g.id}, {"label", g.label}, {"members", members}, {"completeness", g.completeness}, {"hull", hull}};
}

json project_to_json(const Project& p) {
  json j;
  j["format"] = "topicens-project";
  j["version"] = kProjectFormatVersion;
  j["id"] = p.id;
  j["revision"] = p.revision;
  j["next_group_id"] = p.next_group_id;
  j["view"] = {{"top_n", p.view.top_n},
               {"stable_below", p.view.thresholds.stable_below},
               {"unstable_above", p.view.thresholds.unstable_above},
               {"color_map", p.view.color_map}};
  j["corpus"] = p.corpus ? corpus_to_json(*p.corpus) : json(nullptr);
  j["ensemble"] = p.ensemble ? ensemble_to_json(*p.ensemble) : json(nullptr);
  if (p.metrics) {
    json records = json::array();
    for (const auto& r : p.metrics->records) {
      records.push_back({{"model", r.ref.model_index},
                         {"topic", r.ref.topic_index},
                         {"u_match", r.u_match},
                         {"u_exist", r.u_exist},
                         {"degenerate_pairs", r.degenerate_pairs},
                         {"single_topic_pairs", r.single_topic_pairs}});
    }
    j["uncertainty"] = records;
  } else {
    j["uncertainty"] = nullptr;
  }
  if (p.embedding) {
    json coords = json::array();
    for (const auto& c : p.embedding->coords) coords.push_back({c[0], c[1]});
    j["embedding"] = {{"config", embedding_config_to_json(p.embedding_config.value_or(EmbeddingConfig{}))},
                      {"initial_kl", p.embedding->initial_kl},
                      {"final_kl", p.embedding->final_kl},
                      {"coords", coords}};
  } else {
    j["embedding"] = nullptr;
  }
  json groups = json::array();
  for (const auto& g : p.groups) groups.push_back(group_to_json(g));
  j["groups"] = groups;
  return j;
}

void save_project(const Project& project, const fs::path& path) {
  project.check_consistency();
  json j = project_to_json(project);
  if (project.metrics) {
    std::ostringstream bin;
    write_similarity_binary(bin, project.metrics->similarity.values);
    const std::string bytes = bin.str();
    const auto sidecar = sidecar_name(path);
    const auto sidecar_path = path.parent_path() / sidecar;
    std::ofstream out(sidecar_path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("failed writing " + sidecar_path.string());
    j["similarity"] = {{"path", sidecar}, {"sha256", detail::sha256_hex(bytes)}};
  } else {
    j["similarity"] = nullptr;
  }
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp);
    out << j.dump(1) << '\n';
    if (!out) throw Error("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

Project open_project(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open project " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error("project " + path.string() + " is not valid JSON: " + e.what());
  }
  if (j.value("format", "") != "topicens-project") throw Error(path.string() + " is not a project file");
  const int version = j.value("version", 0);
  if (version != kProjectFormatVersion) {
    throw Error("project format version " + std::to_string(version) + " is not supported (expected " +
                std::to_string(kProjectFormatVersion) + ")");
  }

  Project p;
  p.id = j.at("id").get<std::string>();
  p.revision = j.at("revision").get<std::uint64_t>();
  p.next_group_id = j.at("next_group_id").get<std::uint64_t>();
  const auto& v = j.at("view");
  p.view.top_n = v.at("top_n").get<std::size_t>();
  p.view.thresholds = {v.at("stable_below").get<double>(), v.at("unstable_above").get<double>()};
  p.view.color_map = v.at("color_map").get<std::string>();
  if (!j.at("corpus").is_null()) p.corpus = corpus_from_json(j["corpus"]);
  if (!j.at("ensemble").is_null()) p.ensemble = ensemble_from_json(j["ensemble"]);

  if (!j.at("uncertainty").is_null()) {
    if (!p.ensemble) throw StructureError("uncertainty records without an ensemble");
    const auto& sim_ref = j.at("similarity");
    if (sim_ref.is_null()) throw StructureError("uncertainty records without a similarity sidecar");
    const auto sidecar_path = path.parent_path() / sim_ref.at("path").get<std::string>();
    const std::string bytes = read_bytes(sidecar_path);
    if (detail::sha256_hex(bytes) != sim_ref.at("sha256").get<std::string>()) {
      throw Error("similarity sidecar " + sidecar_path.string() + " does not match its recorded hash");
    }
    EnsembleMetrics m;
    std::istringstream bin(bytes);
    m.similarity.values = read_similarity_binary(bin);
    m.similarity.refs = p.ensemble->refs();
    for (const auto& r : j["uncertainty"]) {
      UncertaintyRecord rec;
      rec.ref = ref_from_json(r);
      rec.u_match = r.at("u_match").get<double>();
      rec.u_exist = r.at("u_exist").get<double>();
      rec.degenerate_pairs = r.value("degenerate_pairs", 0u);
      rec.single_topic_pairs = r.value("single_topic_pairs", 0u);
      m.records.push_back(rec);
    }
    p.metrics = std::move(m);
  }
  if (!j.at("embedding").is_null()) {
    if (!p.ensemble) throw StructureError("embedding without an ensemble");
    const auto& e = j["embedding"];
    Embedding emb;
    emb.refs = p.ensemble->refs();
    emb.initial_kl = e.at("initial_kl").get<double>();
    emb.final_kl = e.at("final_kl").get<double>();
    for (const auto& c : e.at("coords")) emb.coords.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
    p.embedding = std::move(emb);
    p.embedding_config = embedding_config_from_json(e.at("config"));
  }
  for (const auto& g : j.at("groups")) {
    TopicGroup grp;
    grp.id = g.at("id").get<std::string>();
    grp.label = g.at("label").get<std::string>();
    for (const auto& r : g.at("members")) grp.members.push_back(ref_from_json(r));
    grp.completeness = g.at("completeness").get<double>();
    for (const auto& h : g.at("hull")) grp.hull.push_back({h.at(0).get<double>(), h.at(1).get<double>()});
    p.groups.push_back(std::move(grp));
  }
  p.check_consistency();

  if (p.corpus) {
    fs::path corpus_path = p.corpus->path;
    if (corpus_path.is_relative()) corpus_path = path.parent_path() / corpus_path;
    if (fs::exists(corpus_path)) {
      CorpusReference resolved = *p.corpus;
      resolved.path = corpus_path.string();
      p.documents = load_reference_corpus(resolved);
    }
  }
  return p;
}

}  // namespace topicens
