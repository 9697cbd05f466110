#pragma once
// Shared helpers for the test binaries: brute-force reference implementations
// written independently of the library code, and small ensemble builders.

#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "topicens/ensemble.hpp"
#include "topicens/lda.hpp"
#include "topicens/matrix.hpp"

namespace oracle {

using Vec = std::vector<double>;

inline double cosine(const Vec& a, const Vec& b) {
  long double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += static_cast<long double>(a[i]) * b[i];
    aa += static_cast<long double>(a[i]) * a[i];
    bb += static_cast<long double>(b[i]) * b[i];
  }
  return static_cast<double>(ab / std::sqrt(aa * bb));
}

inline double kl(const Vec& p, const Vec& q) {
  long double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0) s += static_cast<long double>(p[i]) * std::log(static_cast<long double>(p[i]) / q[i]);
  }
  return static_cast<double>(s);
}

inline double js(const Vec& p, const Vec& q) {
  Vec m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m[i] = (p[i] + q[i]) / 2;
  return kl(p, m) / 2 + kl(q, m) / 2;
}

inline double shannon(const Vec& p) {
  long double h = 0;
  for (double v : p) {
    if (v > 0) h -= static_cast<long double>(v) * std::log(static_cast<long double>(v));
  }
  return static_cast<double>(h);
}

/// Normalised similarities of `topic` to every row of `target`.
inline Vec match(const Vec& topic, const std::vector<Vec>& target) {
  Vec s;
  double total = 0;
  for (const auto& t : target) {
    s.push_back(cosine(topic, t));
    total += s.back();
  }
  for (auto& v : s) v /= total;
  return s;
}

/// 1 - KL(s || uniform) / KL(one-hot || uniform), literally.
inline double u_match_pair(const Vec& s) {
  const std::size_t k = s.size();
  if (k == 1) return 0.0;
  const Vec uniform(k, 1.0 / static_cast<double>(k));
  Vec onehot(k, 0.0);
  onehot[0] = 1.0;
  return 1.0 - kl(s, uniform) / kl(onehot, uniform);
}

using Model = std::vector<Vec>;

inline double u_match(const std::vector<Model>& models, std::size_t m, std::size_t t) {
  double sum = 0;
  for (std::size_t l = 0; l < models.size(); ++l) {
    if (l == m) continue;
    double total = 0;
    for (const auto& other : models[l]) total += cosine(models[m][t], other);
    sum += total > 0 ? u_match_pair(match(models[m][t], models[l])) : 1.0;
  }
  return sum / static_cast<double>(models.size() - 1);
}

inline double u_exist(const std::vector<Model>& models, std::size_t m, std::size_t t) {
  double sum = 0;
  for (std::size_t l = 0; l < models.size(); ++l) {
    if (l == m) continue;
    double best = 0;
    for (const auto& other : models[l]) best = std::max(best, cosine(models[m][t], other));
    sum += best;
  }
  return 1.0 - sum / static_cast<double>(models.size() - 1);
}

/// Ranks starting at 1, ties share the mean rank.
inline Vec ranks(const Vec& x) {
  Vec r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double less = 0, equal = 0;
    for (double y : x) {
      if (y < x[i]) ++less;
      if (y == x[i]) ++equal;
    }
    r[i] = less + (equal + 1) / 2;
  }
  return r;
}

inline double pearson(const Vec& x, const Vec& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double cxy = 0, cxx = 0, cyy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    cxy += (x[i] - mx) * (y[i] - my);
    cxx += (x[i] - mx) * (x[i] - mx);
    cyy += (y[i] - my) * (y[i] - my);
  }
  return cxy / std::sqrt(cxx * cyy);
}

inline double spearman(const Vec& x, const Vec& y) { return pearson(ranks(x), ranks(y)); }

}  // namespace oracle

namespace testutil {

inline topicens::Vocabulary numbered_vocabulary(std::size_t v) {
  std::vector<std::string> terms;
  for (std::size_t i = 0; i < v; ++i) {
    std::string s;
    std::size_t x = i;
    do {
      s.insert(s.begin(), static_cast<char>('a' + x % 26));
      x /= 26;
    } while (x > 0);
    terms.push_back("t" + s);
  }
  return topicens::Vocabulary(std::move(terms));
}

inline topicens::DenseMatrix to_matrix(const oracle::Model& rows) {
  topicens::DenseMatrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

/// Ensemble over `models` (rows need not be normalised for metric tests).
inline topicens::Ensemble make_ensemble(const std::vector<oracle::Model>& models) {
  topicens::Ensemble e;
  const std::size_t v = models.at(0).at(0).size();
  e.vocabulary = numbered_vocabulary(v);
  for (std::size_t m = 0; m < models.size(); ++m) {
    topicens::TopicModel tm;
    tm.phi = to_matrix(models[m]);
    tm.config = topicens::LdaConfig::defaults(models[m].size(), m);
    tm.model_id = m;
    e.members.push_back(std::move(tm));
    e.provenance.emplace_back();
  }
  e.spec.members = models.size();
  return e;
}

/// Random probability vector with some exact zeros (never all zero).
inline oracle::Vec random_distribution(std::mt19937_64& rng, std::size_t v, double zero_rate = 0.25) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  oracle::Vec p(v);
  double total = 0;
  for (auto& x : p) {
    x = u(rng) < zero_rate ? 0.0 : -std::log(1.0 - u(rng));
    total += x;
  }
  if (total == 0) {
    p[rng() % v] = 1.0;
    total = 1.0;
  }
  for (auto& x : p) x /= total;
  return p;
}

/// 2..4 members with 1..5 topics each over 3..8 terms.
inline std::vector<oracle::Model> random_models(std::mt19937_64& rng) {
  const std::size_t members = 2 + rng() % 3;
  const std::size_t v = 3 + rng() % 6;
  std::vector<oracle::Model> models(members);
  for (auto& m : models) {
    const std::size_t k = 1 + rng() % 5;
    for (std::size_t t = 0; t < k; ++t) m.push_back(random_distribution(rng, v));
  }
  return models;
}

/// Pure-document corpus over two disjoint vocabularies (a* and b* terms).
struct TwoBlockCorpus {
  topicens::Vocabulary vocabulary;
  topicens::DocTermMatrix matrix;
  std::size_t half = 0;  // terms [0, half) belong to block A
};

inline TwoBlockCorpus two_block_corpus(std::uint64_t seed, std::size_t docs_per_block = 25, std::size_t terms_per_block = 100,
                                       std::size_t doc_length = 80) {
  std::mt19937_64 rng(seed);
  TwoBlockCorpus c;
  std::vector<std::string> terms;
  for (char block : {'a', 'b'}) {
    for (std::size_t i = 0; i < terms_per_block; ++i) {
      terms.push_back(std::string(1, block) + std::string(1, static_cast<char>('a' + i / 26)) +
                      std::string(1, static_cast<char>('a' + i % 26)));
    }
  }
  c.vocabulary = topicens::Vocabulary(terms);
  c.half = terms_per_block;
  std::vector<std::string> ids;
  std::vector<std::vector<topicens::DocTermMatrix::Entry>> rows;
  for (std::size_t d = 0; d < 2 * docs_per_block; ++d) {
    const std::size_t block = d < docs_per_block ? 0 : 1;
    std::map<topicens::TermId, std::uint32_t> counts;
    for (std::size_t i = 0; i < doc_length; ++i) {
      // Zipf-like skew inside the block so top terms are well defined
      const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      const auto w = static_cast<std::size_t>(std::pow(u, 2.0) * static_cast<double>(terms_per_block));
      ++counts[static_cast<topicens::TermId>(block * terms_per_block + std::min(w, terms_per_block - 1))];
    }
    std::vector<topicens::DocTermMatrix::Entry> row;
    for (auto [t, n] : counts) row.push_back({t, n});
    rows.push_back(std::move(row));
    ids.push_back("d" + std::to_string(d));
  }
  c.matrix = topicens::DocTermMatrix(2 * terms_per_block, ids, rows);
  return c;
}

/// `members` noisy copies of `k` sparse Dirichlet topics over `v` terms; topic 0
/// of member 1 is then overwritten with an exact copy of topic 0 of member 0,
/// so flat indices 0 and k are duplicates.
inline topicens::Ensemble duplicated_topic_ensemble(std::uint64_t seed, std::size_t members = 10, std::size_t k = 20,
                                                    std::size_t v = 500, double noise = 0.2) {
  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> gamma(0.05, 1.0);
  const auto dirichlet = [&] {
    oracle::Vec p(v);
    double total = 0;
    for (auto& x : p) {
      x = gamma(rng);
      total += x;
    }
    for (auto& x : p) x /= total;
    return p;
  };
  std::vector<oracle::Vec> truth(k);
  for (auto& t : truth) t = dirichlet();
  std::vector<oracle::Model> models(members);
  for (auto& m : models) {
    for (std::size_t t = 0; t < k; ++t) {
      const auto n = dirichlet();
      oracle::Vec row(v);
      for (std::size_t w = 0; w < v; ++w) row[w] = (1 - noise) * truth[t][w] + noise * n[w];
      m.push_back(std::move(row));
    }
  }
  models[1][0] = models[0][0];
  return make_ensemble(models);
}

inline std::filesystem::path fixtures() { return TOPICENS_FIXTURES; }

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("topicens-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testutil
