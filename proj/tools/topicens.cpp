// Command-line front end: build, inspect, export and serve a project file.

#include <algorithm>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "topicens/api.hpp"
#include "topicens/error.hpp"
#include "topicens/mallet.hpp"
#include "topicens/project.hpp"
#include "topicens/synthbench.hpp"

namespace fs = std::filesystem;
using namespace topicens;

namespace {

HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

Project load(const fs::path& path) {
  auto p = open_project(path);
  if (!p.documents_available() && p.corpus) {
    std::cerr << "note: corpus at " << p.corpus->path << " not found; document views disabled\n";
  }
  return p;
}

void save(const Project& p, const fs::path& path) {
  save_project(p, path);
  std::cerr << "wrote " << path.string() << " (revision " << p.revision << ")\n";
}

Project& need_ensemble(Project& p) {
  if (!p.ensemble) throw Error("project has no ensemble; use `run` or `import-mallet` first");
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Topic model ensemble uncertainty workbench"};
  app.require_subcommand(1);
  std::string project_path = "project.json";

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Register a corpus (directory of .txt files or JSON lines)");
  std::string corpus_dir;
  std::string stopwords_file;
  std::size_t min_doc_freq = 1;
  std::size_t min_length = 1;
  bool keep_case = false;
  ingest->add_option("corpus", corpus_dir, "Corpus directory or .jsonl file")->required();
  ingest->add_option("--stopwords", stopwords_file, "Stopword list, one term per line");
  ingest->add_option("--min-doc-freq", min_doc_freq, "Drop terms in fewer documents")->check(CLI::PositiveNumber);
  ingest->add_option("--min-length", min_length, "Minimum token length in code points");
  ingest->add_flag("--keep-case", keep_case, "Do not lowercase tokens");
  ingest->add_option("--project", project_path, "Project file")->capture_default_str();

  // run
  auto* run = app.add_subcommand("run", "Train an ensemble on the ingested corpus");
  std::string preset_name;
  std::string mode_name = "sampling";
  std::size_t members = 10;
  std::string values_text;
  std::size_t k = 20;
  std::optional<double> alpha;
  double beta = 0.01;
  std::size_t iterations = 10'000;
  std::uint64_t seed = 1;
  auto* preset_opt =
      run->add_option("--preset", preset_name, "E1, E3, E4 or E5")->check(CLI::IsMember({"E1", "E3", "E4", "E5"}));
  auto* k_opt = run->add_option("--k", k, "Topics per model (also overrides a preset's k, except E5)");
  // the rest of the spec comes from the preset
  for (auto* o : {run->add_option("--mode", mode_name, "sampling, vary_alpha, vary_beta or vary_k")
                      ->check(CLI::IsMember({"sampling", "vary_alpha", "vary_beta", "vary_k"})),
                  run->add_option("--members", members, "Ensemble size"),
                  run->add_option("--values", values_text, "Comma-separated parameter values for vary_* modes"),
                  run->add_option("--alpha", alpha, "Document-topic prior (default 5/k)"),
                  run->add_option("--beta", beta, "Topic-term prior")}) {
    o->excludes(preset_opt);
  }
  run->add_option("--iterations", iterations, "Gibbs sweeps per model")->capture_default_str();
  run->add_option("--seed", seed, "Base seed (member i uses seed + i)")->capture_default_str();
  run->add_option("--project", project_path, "Project file")->capture_default_str();

  // import-mallet
  auto* imp = app.add_subcommand("import-mallet", "Import MALLET runs as an ensemble, one pair of files per member");
  std::vector<std::string> tww_files;
  std::vector<std::string> dt_files;
  std::string import_corpus;
  imp->add_option("--topic-word-weights", tww_files, "--topic-word-weights-file output, repeat per member")->required();
  imp->add_option("--doc-topics", dt_files, "--output-doc-topics output, repeat per member (optional)");
  imp->add_option("--corpus", import_corpus, "Raw corpus for the document views");
  imp->add_option("--project", project_path, "Project file")->capture_default_str();

  // metrics
  auto* met = app.add_subcommand("metrics", "Compute similarity and uncertainty");
  met->add_option("--project", project_path, "Project file")->capture_default_str();

  // embed
  auto* emb = app.add_subcommand("embed", "Compute the 2D topic embedding");
  EmbeddingConfig emb_config;
  emb->add_option("--perplexity", emb_config.perplexity, "t-SNE perplexity")->capture_default_str();
  emb->add_option("--seed", emb_config.seed, "Layout seed")->capture_default_str();
  emb->add_option("--iterations", emb_config.iterations, "Optimisation steps")->capture_default_str();
  emb->add_option("--project", project_path, "Project file")->capture_default_str();

  // serve
  auto* srv = app.add_subcommand("serve", "Serve the JSON API");
  int port = default_port();
  std::string host = "127.0.0.1";
  srv->add_option("--port", port, "Port (default $TOPICENS_PORT or 8080)");
  srv->add_option("--host", host, "Bind address")->capture_default_str();
  srv->add_option("--project", project_path, "Project file")->capture_default_str();

  // export
  auto* exp = app.add_subcommand("export", "Export project data");
  std::string format = "json";
  std::string out_dir = "export";
  exp->add_option("--format", format, "csv, json or mallet")->check(CLI::IsMember({"csv", "json", "mallet"}));
  exp->add_option("--out", out_dir, "Output directory")->capture_default_str();
  exp->add_option("--project", project_path, "Project file")->capture_default_str();

  // bench
  auto* bench = app.add_subcommand("bench", "Run a preset on a synthetic corpus with known topics");
  ExperimentConfig bench_config;
  std::string bench_json;
  bench->add_option("--preset", bench_config.preset, "E1, E3, E4 or E5")
      ->check(CLI::IsMember({"E1", "E3", "E4", "E5"}))
      ->capture_default_str();
  bench->add_option("--true-k", bench_config.corpus.true_k, "Ground-truth topics")->capture_default_str();
  bench->add_option("--vocabulary", bench_config.corpus.vocabulary_size, "Vocabulary size")->capture_default_str();
  bench->add_option("--documents", bench_config.corpus.documents, "Documents")->capture_default_str();
  bench->add_option("--separation", bench_config.corpus.separation, "Exclusive vocabulary fraction")
      ->capture_default_str();
  bench->add_option("--corpus-seed", bench_config.corpus.seed, "Corpus seed")->capture_default_str();
  bench->add_option("--k", bench_config.k, "Topics per model (E1/E3/E4)");
  bench->add_option("--iterations", bench_config.iterations, "Gibbs sweeps")->capture_default_str();
  bench->add_option("--seed", bench_config.seed, "Ensemble base seed")->capture_default_str();
  bench->add_option("--json", bench_json, "Also write the report as JSON here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest->parsed()) {
      CorpusReference ref;
      const fs::path project_dir = fs::absolute(fs::path(project_path)).parent_path();
      ref.path = fs::relative(fs::absolute(corpus_dir), project_dir).string();
      ref.lowercase = !keep_case;
      ref.min_length = min_length;
      ref.min_doc_freq = min_doc_freq;
      if (!stopwords_file.empty()) {
        const auto sw = load_stopwords(stopwords_file);
        ref.stopwords.assign(sw.begin(), sw.end());
        std::sort(ref.stopwords.begin(), ref.stopwords.end());
      }
      Project p;
      p.id = fs::path(project_path).stem().string();
      p.corpus = ref;
      CorpusReference resolved = ref;
      resolved.path = (project_dir / ref.path).string();
      const auto docs = load_reference_corpus(resolved);
      const auto [vocab, matrix] = build_matrix(docs, ref.min_doc_freq);
      std::cout << docs.size() << " documents, " << vocab.size() << " terms, " << matrix.total() << " tokens\n";
      save(p, project_path);
    } else if (run->parsed()) {
      Project p = load(project_path);
      if (!p.corpus) throw Error("project has no corpus; run `ingest` first");
      if (!p.documents_available()) throw Error("corpus at " + p.corpus->path + " cannot be read");
      EnsembleSpec spec;
      if (!preset_name.empty()) {
        ExperimentConfig ec;
        ec.preset = preset_name;
        ec.iterations = iterations;
        ec.seed = seed;
        if (k_opt->count() > 0) {
          if (preset_name == "E5") throw Error("E5 varies k; --k does not apply");
          ec.k = k;
        }
        spec = experiment_spec(ec);
      } else {
        spec.mode = ensemble_mode_from_string(mode_name);
        spec.members = members;
        spec.base_config = LdaConfig::defaults(k, seed);
        if (alpha) spec.base_config.alpha = *alpha;
        spec.base_config.beta = beta;
        spec.base_config.iterations = iterations;
        spec.parameter_values = parse_values(values_text);
      }
      spec.validate();
      const auto [vocab, matrix] = build_matrix(p.documents, p.corpus->min_doc_freq);
      std::cerr << "training " << spec.members << " models (" << to_string(spec.mode) << ", "
                << spec.base_config.iterations << " sweeps)\n";
      p.ensemble = generate(matrix, vocab, spec);
      p.view.color_map = spec.mode == EnsembleMode::sampling ? "categorical" : "sequential";
      p.metrics.reset();
      p.embedding.reset();
      p.groups.clear();
      compute_metrics(p);
      compute_embedding(p, p.embedding_config.value_or(EmbeddingConfig{}));
      ++p.revision;
      save(p, project_path);
    } else if (imp->parsed()) {
      if (!dt_files.empty() && dt_files.size() != tww_files.size()) {
        throw Error("give either no --doc-topics or one per --topic-word-weights");
      }
      std::vector<MalletMemberFiles> files;
      for (std::size_t i = 0; i < tww_files.size(); ++i) {
        MalletMemberFiles f{tww_files[i], std::nullopt};
        if (!dt_files.empty()) f.doc_topics = dt_files[i];
        files.push_back(std::move(f));
      }
      Project p;
      if (fs::exists(project_path)) p = load(project_path);
      p.ensemble = import_mallet(files);
      p.view.color_map = "categorical";
      if (!import_corpus.empty()) {
        const fs::path project_dir = fs::absolute(fs::path(project_path)).parent_path();
        CorpusReference ref = p.corpus.value_or(CorpusReference{});
        ref.path = fs::relative(fs::absolute(import_corpus), project_dir).string();
        p.corpus = ref;
      }
      p.metrics.reset();
      p.embedding.reset();
      p.groups.clear();
      compute_metrics(p);
      compute_embedding(p, p.embedding_config.value_or(EmbeddingConfig{}));
      ++p.revision;
      std::cerr << "imported " << p.ensemble->size() << " members, " << p.ensemble->total_topics() << " topics\n";
      save(p, project_path);
    } else if (met->parsed()) {
      Project p = load(project_path);
      need_ensemble(p);
      compute_metrics(p);
      if (p.embedding) compute_embedding(p, p.embedding_config.value_or(EmbeddingConfig{}));
      ++p.revision;
      const auto s = ensemble_summary(p.metrics->records, p.view.thresholds);
      std::cout << "U_M mean " << s.u_match.mean << ", U_E mean " << s.u_exist.mean << " over " << s.topics
                << " topics\n";
      save(p, project_path);
    } else if (emb->parsed()) {
      Project p = load(project_path);
      need_ensemble(p);
      compute_embedding(p, emb_config);
      ++p.revision;
      std::cout << "KL " << p.embedding->initial_kl << " -> " << p.embedding->final_kl << "\n";
      save(p, project_path);
    } else if (srv->parsed()) {
      Api api(load(project_path), fs::path(project_path));
      HttpServer server(api);
      const int bound = server.bind(host, port);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on http://" << host << ":" << bound << "\n";
      server.listen();
      g_server = nullptr;
    } else if (exp->parsed()) {
      Project p = load(project_path);
      need_ensemble(p);
      fs::create_directories(out_dir);
      const fs::path dir(out_dir);
      if (format == "mallet") {
        export_mallet(*p.ensemble, dir);
      } else if (format == "json") {
        std::ofstream(dir / "project.json") << project_to_json(p).dump(1) << '\n';
      } else {
        if (!p.metrics) compute_metrics(p);
        std::ofstream u(dir / "uncertainty.csv");
        write_uncertainty_csv(u, p.metrics->records);
        std::ofstream s(dir / "similarity.csv");
        write_similarity_csv(s, p.metrics->similarity);
        if (p.embedding) {
          std::ofstream e(dir / "embedding.csv");
          write_embedding_csv(e, *p.embedding);
        }
      }
      std::cerr << "exported " << format << " to " << dir.string() << "\n";
    } else if (bench->parsed()) {
      const auto report = run_experiment(bench_config);
      std::cout << report.to_text();
      if (!bench_json.empty()) std::ofstream(bench_json) << report.to_json().dump(2) << '\n';
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
