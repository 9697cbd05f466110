#include "topicens/mallet.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include "topicens/error.hpp"

namespace topicens {

namespace {

std::vector<std::string> split_columns(const std::string& line) {
  std::vector<std::string> cols;
  if (line.find('\t') != std::string::npos) {
    std::size_t start = 0;
    for (;;) {
      const auto tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    while (!cols.empty() && cols.back().empty()) cols.pop_back();
  } else {
    std::istringstream ss(line);
    std::string c;
    while (ss >> c) cols.push_back(c);
  }
  return cols;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

bool blank(const std::string& line) { return line.find_first_not_of(" \t") == std::string::npos; }

double parse_number(const std::string& text, const std::string& source, std::size_t line, const char* what) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw ParseError(source, line, std::string("non-numeric ") + what + " '" + text + "'");
  }
  return v;
}

std::size_t parse_index(const std::string& text, const std::string& source, std::size_t line, const char* what) {
  std::size_t v = 0;
  const char* first = text.data();
  const char* last = first + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw ParseError(source, line, std::string("invalid ") + what + " '" + text + "'");
  }
  return v;
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

std::string format_double(double v) {
  std::ostringstream ss;
  ss << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return ss.str();
}

}  // namespace

std::string mallet_doc_id(std::string_view name) {
  std::string s(name);
  if (s.rfind("file:", 0) == 0) s.erase(0, 5);
  if (const auto slash = s.find_last_of('/'); slash != std::string::npos) s.erase(0, slash + 1);
  if (s.size() > 4 && s.compare(s.size() - 4, 4, ".txt") == 0) s.erase(s.size() - 4);
  return s;
}

TopicWordWeights parse_topic_word_weights(std::istream& in, const std::string& source) {
  TopicWordWeights out;
  std::map<std::pair<std::size_t, std::string>, std::size_t> seen;
  std::string line;
  std::size_t line_no = 0;
  std::size_t max_topic = 0;
  std::vector<bool> present;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(std::move(line));
    if (blank(line) || line.front() == '#') continue;
    const auto cols = split_columns(line);
    if (cols.size() != 3) {
      throw ParseError(source, line_no, "expected 3 columns (topic, term, weight), found " + std::to_string(cols.size()));
    }
    TopicWordWeights::Line entry;
    entry.topic = parse_index(cols[0], source, line_no, "topic id");
    entry.term = cols[1];
    entry.weight = parse_number(cols[2], source, line_no, "weight");
    if (entry.weight < 0.0) throw ParseError(source, line_no, "negative weight");
    if (!seen.emplace(std::make_pair(entry.topic, entry.term), line_no).second) {
      throw ParseError(source, line_no, "duplicate entry for topic " + cols[0] + " term '" + entry.term + "'");
    }
    if (entry.topic >= present.size()) present.resize(entry.topic + 1, false);
    present[entry.topic] = true;
    max_topic = std::max(max_topic, entry.topic);
    out.lines.push_back(std::move(entry));
  }
  if (out.lines.empty()) throw StructureError(source + ": no topic-word weights found");
  for (std::size_t t = 0; t < present.size(); ++t) {
    if (!present[t]) {
      throw StructureError(source + ": topic ids are not contiguous (topic " + std::to_string(t) + " missing)");
    }
  }
  out.num_topics = max_topic + 1;
  return out;
}

DocTopics parse_doc_topics(std::istream& in, const std::string& source, std::size_t num_topics) {
  DocTopics out;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool header_says_sparse = false;
  std::optional<bool> sparse;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(std::move(line));
    if (blank(line)) continue;
    if (line.front() == '#') {
      if (line.find("topic") != std::string::npos && line.find("proportion") != std::string::npos) {
        header_says_sparse = true;
      }
      continue;
    }
    const auto cols = split_columns(line);
    if (cols.size() < 3) throw ParseError(source, line_no, "expected at least 3 columns");
    const std::size_t values = cols.size() - 2;
    const bool line_sparse = header_says_sparse || values != num_topics;
    if (line_sparse && values % 2 != 0) {
      throw ParseError(source, line_no,
                       "found " + std::to_string(values) + " value columns: neither " + std::to_string(num_topics) +
                           " proportions nor topic/proportion pairs");
    }
    if (sparse && *sparse != line_sparse) throw ParseError(source, line_no, "mixed dense and sparse rows");
    sparse = line_sparse;

    parse_index(cols[0], source, line_no, "document index");
    std::vector<double> row(num_topics, 0.0);
    if (!line_sparse) {
      for (std::size_t t = 0; t < num_topics; ++t) row[t] = parse_number(cols[2 + t], source, line_no, "proportion");
    } else {
      for (std::size_t p = 2; p + 1 < cols.size(); p += 2) {
        const auto topic = parse_index(cols[p], source, line_no, "topic id");
        if (topic >= num_topics) {
          throw StructureError(source + ":" + std::to_string(line_no) + ": topic " + std::to_string(topic) +
                               " exceeds the member's " + std::to_string(num_topics) + " topics");
        }
        row[topic] += parse_number(cols[p + 1], source, line_no, "proportion");
      }
    }
    double sum = 0.0;
    for (double v : row) {
      if (v < 0.0) throw ParseError(source, line_no, "negative proportion");
      sum += v;
    }
    if (!(sum > 0.0)) throw ParseError(source, line_no, "all proportions are zero");
    for (double& v : row) v /= sum;
    out.doc_names.push_back(cols[1]);
    rows.push_back(std::move(row));
  }
  out.sparse_format = sparse.value_or(header_says_sparse);
  out.theta = DenseMatrix(rows.size(), num_topics);
  for (std::size_t d = 0; d < rows.size(); ++d) std::copy(rows[d].begin(), rows[d].end(), out.theta.row(d).begin());
  return out;
}

Ensemble import_mallet(std::span<const MalletMemberFiles> files) {
  if (files.size() < 2) throw std::invalid_argument("an imported ensemble needs at least 2 members");

  std::vector<TopicWordWeights> weights;
  Ensemble ens;
  ens.imported = true;
  for (const auto& f : files) {
    auto in = open_or_throw(f.topic_word_weights);
    weights.push_back(parse_topic_word_weights(in, f.topic_word_weights.string()));
    for (const auto& l : weights.back().lines) ens.vocabulary.add(l.term);
  }
  const std::size_t vocab = ens.vocabulary.size();

  bool have_docs = false;
  for (std::size_t m = 0; m < files.size(); ++m) {
    const auto& w = weights[m];
    MemberProvenance prov;
    prov.source = "mallet";
    prov.topic_word_weights_path = files[m].topic_word_weights.string();

    const bool all_positive =
        std::all_of(w.lines.begin(), w.lines.end(), [](const auto& l) { return l.weight > 0.0; });
    double floor = 0.0;
    if (all_positive) {
      floor = std::min_element(w.lines.begin(), w.lines.end(), [](const auto& a, const auto& b) {
                return a.weight < b.weight;
              })->weight;
    }
    prov.smoothing_floor = floor;

    TopicModel model;
    model.model_id = m;
    model.config.k = w.num_topics;
    model.config.alpha = 0.0;
    model.config.beta = 0.0;
    model.config.iterations = 0;
    model.phi = DenseMatrix(w.num_topics, vocab, floor);
    for (const auto& l : w.lines) {
      const auto id = *ens.vocabulary.lookup(l.term);
      model.phi(l.topic, id) = l.weight;
    }
    for (std::size_t t = 0; t < w.num_topics; ++t) {
      auto row = model.phi.row(t);
      double sum = 0.0;
      for (double v : row) sum += v;
      if (!(sum > 0.0)) {
        throw StructureError(files[m].topic_word_weights.string() + ": topic " + std::to_string(t) +
                             " has zero total weight");
      }
      for (double& v : row) v /= sum;
    }

    if (files[m].doc_topics) {
      prov.doc_topics_path = files[m].doc_topics->string();
      auto in = open_or_throw(*files[m].doc_topics);
      auto dt = parse_doc_topics(in, files[m].doc_topics->string(), w.num_topics);
      std::vector<std::string> ids;
      ids.reserve(dt.doc_names.size());
      for (const auto& n : dt.doc_names) ids.push_back(mallet_doc_id(n));
      if (!have_docs) {
        ens.doc_ids = std::move(ids);
        have_docs = true;
      } else if (ids != ens.doc_ids) {
        throw StructureError(files[m].doc_topics->string() + ": document list differs from earlier members");
      }
      model.theta = std::move(dt.theta);
    }
    ens.members.push_back(std::move(model));
    ens.provenance.push_back(std::move(prov));
  }

  ens.spec.mode = EnsembleMode::sampling;
  ens.spec.members = ens.members.size();
  ens.spec.base_config.k = ens.members.front().num_topics();
  ens.spec.base_config.iterations = 1;
  ens.check_invariants();
  return ens;
}

std::vector<MalletMemberFiles> export_mallet(const Ensemble& ensemble, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<MalletMemberFiles> out;
  for (std::size_t m = 0; m < ensemble.members.size(); ++m) {
    const auto& model = ensemble.members[m];
    MalletMemberFiles files;
    files.topic_word_weights = dir / ("member-" + std::to_string(m) + ".topic-word-weights.txt");
    {
      std::ofstream w(files.topic_word_weights);
      for (std::size_t t = 0; t < model.num_topics(); ++t) {
        for (std::size_t v = 0; v < model.num_terms(); ++v) {
          w << t << '\t' << ensemble.vocabulary.term(static_cast<TermId>(v)) << '\t' << format_double(model.phi(t, v))
            << '\n';
        }
      }
      if (!w) throw Error("failed writing " + files.topic_word_weights.string());
    }
    if (model.has_theta()) {
      files.doc_topics = dir / ("member-" + std::to_string(m) + ".doc-topics.txt");
      std::ofstream d(*files.doc_topics);
      for (std::size_t doc = 0; doc < model.theta.rows(); ++doc) {
        d << doc << '\t' << ensemble.doc_ids.at(doc);
        for (double v : model.theta.row(doc)) d << '\t' << format_double(v);
        d << '\n';
      }
      if (!d) throw Error("failed writing " + files.doc_topics->string());
    }
    out.push_back(std::move(files));
  }
  return out;
}

}  // namespace topicens
