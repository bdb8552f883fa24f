#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace oracles {

using namespace hyperadapt;

double mi_from_table(long a, long b, long c, long d) {
  const long n = a + b + c + d;
  auto cell = [n](long count, long row, long col) -> double {
    if (count == 0) return 0.0;
    const double p = static_cast<double>(count) / static_cast<double>(n);
    return p * std::log2(static_cast<double>(count) * static_cast<double>(n) /
                         (static_cast<double>(row) * static_cast<double>(col)));
  };
  double mi = 0.0;
  mi += cell(a, a + b, a + c);
  mi += cell(b, a + b, b + d);
  mi += cell(c, c + d, a + c);
  mi += cell(d, c + d, b + d);
  return mi < 0.0 ? 0.0 : mi;
}

double mi_brute(const std::vector<bool>& presence, const std::vector<bool>& labels) {
  long a = 0, b = 0, c = 0, d = 0;
  for (size_t i = 0; i < presence.size(); ++i) {
    if (presence[i] && labels[i]) ++a;
    if (presence[i] && !labels[i]) ++b;
    if (!presence[i] && labels[i]) ++c;
    if (!presence[i] && !labels[i]) ++d;
  }
  return mi_from_table(a, b, c, d);
}

DrfSet drf_set_oracle(const std::vector<DomainCorpus>& corpora, const std::string& domain,
                      const DrfConfig& cfg) {
  // Flatten all train sentences once.
  struct Sentence {
    std::vector<std::string> tokens;
    bool in_domain;
  };
  std::vector<Sentence> sentences;
  for (const auto& corpus : corpora)
    for (const auto& ex : corpus.train)
      sentences.push_back({tokenize(ex.text), corpus.domain == domain});

  std::set<std::string> vocabulary;
  for (const auto& s : sentences)
    for (const auto& t : s.tokens) vocabulary.insert(t);

  struct Scored {
    std::string word;
    double mi;
    long cnt_in, cnt_out;
  };
  std::vector<Scored> scored;
  for (const auto& word : vocabulary) {
    std::vector<bool> presence, labels;
    long cnt_in = 0, cnt_out = 0;
    for (const auto& s : sentences) {
      bool present = false;
      long occurrences = 0;
      for (const auto& t : s.tokens)
        if (t == word) {
          present = true;
          ++occurrences;
        }
      presence.push_back(present);
      labels.push_back(s.in_domain);
      (s.in_domain ? cnt_in : cnt_out) += occurrences;
    }
    scored.push_back({word, mi_brute(presence, labels), cnt_in, cnt_out});
  }

  std::stable_sort(scored.begin(), scored.end(), [](const Scored& x, const Scored& y) {
    if (x.mi != y.mi) return x.mi > y.mi;
    return x.word < y.word;
  });
  if (scored.size() > static_cast<size_t>(cfg.top_l)) scored.resize(cfg.top_l);

  DrfSet set;
  set.domain = domain;
  for (const auto& s : scored) {
    if (s.cnt_in > 0 &&
        static_cast<double>(s.cnt_out) / static_cast<double>(s.cnt_in) <= cfg.rho)
      set.entries.push_back({s.word, s.mi, s.cnt_in, s.cnt_out});
  }
  return set;
}

namespace {

struct Pair {
  std::string word;
  std::string domain;
  double score;
};

std::vector<Pair> score_all_pairs(const Example& example, const std::vector<DrfSet>& sets,
                                  const EmbeddingTable& table) {
  std::vector<Eigen::RowVectorXd> covered;
  for (const auto& tok : tokenize(example.text))
    if (table.contains(tok)) covered.push_back(table.row(tok));
  std::vector<Pair> pairs;
  if (covered.empty()) return pairs;
  for (const auto& set : sets)
    for (const auto& entry : set.entries) {
      if (!table.contains(entry.word)) continue;
      const Eigen::RowVectorXd r = table.row(entry.word);
      double best = std::numeric_limits<double>::infinity();
      for (const auto& w : covered) best = std::min(best, (r - w).squaredNorm());
      pairs.push_back({entry.word, set.domain, best});
    }
  return pairs;
}

Signature count_fallback(const std::vector<DrfSet>& sets, int k) {
  std::map<std::string, long> freq;
  for (const auto& set : sets)
    for (const auto& e : set.entries) freq[e.word] += e.count_in;
  std::vector<std::pair<long, std::string>> order;  // (-count, word) ascending
  for (const auto& [w, c] : freq) order.emplace_back(-c, w);
  std::sort(order.begin(), order.end());
  Signature sig;
  sig.fallback = true;
  sig.domain = sets.front().domain;
  for (const auto& set : sets) sig.domain = std::min(sig.domain, set.domain);
  for (size_t i = 0; i < order.size() && i < static_cast<size_t>(k); ++i)
    sig.drfs.push_back(order[i].second);
  return sig;
}

}  // namespace

Signature annotate_oracle(const Example& example, const DrfSet& drf_set,
                          const EmbeddingTable& table, int k) {
  auto pairs = score_all_pairs(example, {drf_set}, table);
  if (pairs.size() < static_cast<size_t>(k)) {
    // Count fallback within the single set.
    std::vector<std::pair<long, std::string>> order;
    for (const auto& e : drf_set.entries) order.emplace_back(-e.count_in, e.word);
    std::sort(order.begin(), order.end());
    Signature sig;
    sig.fallback = true;
    sig.domain = drf_set.domain;
    for (size_t i = 0; i < order.size() && i < static_cast<size_t>(k); ++i)
      sig.drfs.push_back(order[i].second);
    return sig;
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.score != b.score) return a.score < b.score;
    return a.word < b.word;
  });
  Signature sig;
  sig.domain = drf_set.domain;
  for (int i = 0; i < k; ++i) sig.drfs.push_back(pairs[static_cast<size_t>(i)].word);
  return sig;
}

Signature ranker_oracle(const Example& example, const std::vector<DrfSet>& drf_sets,
                        const EmbeddingTable& table, int k) {
  auto pairs = score_all_pairs(example, drf_sets, table);
  // Deduplicate words: sort by (word, score, domain) and keep the first of
  // each word.
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.word != b.word) return a.word < b.word;
    if (a.score != b.score) return a.score < b.score;
    return a.domain < b.domain;
  });
  std::vector<Pair> unique;
  for (const auto& p : pairs)
    if (unique.empty() || unique.back().word != p.word) unique.push_back(p);
  if (unique.size() < static_cast<size_t>(k)) return count_fallback(drf_sets, k);

  std::sort(unique.begin(), unique.end(), [](const Pair& a, const Pair& b) {
    if (a.score != b.score) return a.score < b.score;
    return a.word < b.word;
  });
  Signature sig;
  sig.domain = unique.front().domain;
  for (int i = 0; i < k; ++i) sig.drfs.push_back(unique[static_cast<size_t>(i)].word);
  return sig;
}

double diversity_oracle(const std::vector<GeneratedClassifier>& classifiers) {
  std::vector<std::vector<double>> flat;  // per classifier
  for (const auto& gc : classifiers) {
    std::vector<double> coords;
    for (Eigen::Index r = 0; r < gc.W.rows(); ++r)
      for (Eigen::Index c = 0; c < gc.W.cols(); ++c) coords.push_back(gc.W(r, c));
    for (Eigen::Index i = 0; i < gc.b.size(); ++i) coords.push_back(gc.b(i));
    flat.push_back(std::move(coords));
  }
  const size_t n = flat.size(), m = flat.front().size();
  double sum_sd = 0.0;
  for (size_t j = 0; j < m; ++j) {
    double mean = 0.0;
    for (size_t i = 0; i < n; ++i) mean += flat[i][j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (size_t i = 0; i < n; ++i) var += (flat[i][j] - mean) * (flat[i][j] - mean);
    sum_sd += std::sqrt(var / static_cast<double>(n));
  }
  return sum_sd / static_cast<double>(m);
}

double macro_f1_oracle(const std::vector<std::string>& preds,
                       const std::vector<std::string>& golds,
                       const std::vector<std::string>& labels) {
  // Full confusion matrix, then per-class precision/recall/F1.
  const size_t c = labels.size();
  auto index = [&](const std::string& l) -> size_t {
    for (size_t i = 0; i < c; ++i)
      if (labels[i] == l) return i;
    return c;
  };
  std::vector<std::vector<long>> confusion(c, std::vector<long>(c, 0));
  for (size_t i = 0; i < preds.size(); ++i) confusion[index(golds[i])][index(preds[i])] += 1;

  double total = 0.0;
  for (size_t i = 0; i < c; ++i) {
    long tp = confusion[i][i], fp = 0, fn = 0;
    for (size_t j = 0; j < c; ++j) {
      if (j == i) continue;
      fp += confusion[j][i];
      fn += confusion[i][j];
    }
    const double precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp);
    const double recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn);
    total += precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
  }
  return total / static_cast<double>(c);
}

}  // namespace oracles
