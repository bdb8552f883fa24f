#include "hyperadapt/drf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

#include "hyperadapt/errors.hpp"

namespace hyperadapt {

void DrfConfig::validate() const {
  if (!(rho > 0.0)) throw ConfigError("drf: rho must be > 0");
  if (k < 1) throw ConfigError("drf: k must be >= 1");
  if (top_l < k) throw ConfigError("drf: top_l must be >= k");
}

bool DrfSet::contains(const std::string& word) const {
  for (const auto& e : entries)
    if (e.word == word) return true;
  return false;
}

namespace {

// One cell of the 2x2 empirical table: (count/n) * log2(count*n / (row*col)).
// Kept in this exact form, accumulated in cell order (1,1),(1,0),(0,1),(0,0),
// so that independently written checkers computing the same expression get
// bit-identical values.
double mi_cell(long count, long row_total, long col_total, long n) {
  if (count == 0) return 0.0;
  const double p = static_cast<double>(count) / static_cast<double>(n);
  return p * std::log2(static_cast<double>(count) * static_cast<double>(n) /
                       (static_cast<double>(row_total) * static_cast<double>(col_total)));
}

double binary_mi(long a, long b, long c, long d) {
  const long n = a + b + c + d;
  const long pres = a + b, abs = c + d;
  const long pos = a + c, neg = b + d;
  double mi = 0.0;
  mi += mi_cell(a, pres, pos, n);
  mi += mi_cell(b, pres, neg, n);
  mi += mi_cell(c, abs, pos, n);
  mi += mi_cell(d, abs, neg, n);
  return mi < 0.0 ? 0.0 : mi;  // clamp -0.0 / rounding residue
}

struct WordStats {
  long pres_in = 0, pres_out = 0;  // sentence presence
  long cnt_in = 0, cnt_out = 0;    // token counts
};

}  // namespace

double mutual_information(const std::vector<bool>& presence, const std::vector<bool>& labels) {
  if (presence.size() != labels.size() || presence.empty())
    throw ConfigError("mutual_information: sequences must have equal length >= 1");
  long a = 0, b = 0, c = 0, d = 0;
  for (size_t i = 0; i < presence.size(); ++i) {
    if (presence[i] && labels[i]) ++a;
    else if (presence[i]) ++b;
    else if (labels[i]) ++c;
    else ++d;
  }
  return binary_mi(a, b, c, d);
}

DrfSet build_drf_set(const std::vector<DomainCorpus>& corpora, const std::string& domain,
                     const DrfConfig& cfg) {
  cfg.validate();
  if (corpora.size() < 2) throw DataError("build_drf_set: need at least 2 domains");
  const DomainCorpus* own = find_domain(corpora, domain);
  if (!own) throw DataError("build_drf_set: domain not present: " + domain);
  if (own->train.empty()) throw DataError("build_drf_set: empty train split for " + domain);

  std::map<std::string, WordStats> stats;  // ordered: deterministic iteration
  long n_in = 0, n_out = 0;
  for (const auto& corpus : corpora) {
    const bool in_domain = corpus.domain == domain;
    for (const auto& ex : corpus.train) {
      const auto tokens = tokenize(ex.text);
      (in_domain ? n_in : n_out) += 1;
      std::map<std::string, long> counts;
      for (const auto& t : tokens) counts[t] += 1;
      for (const auto& [word, cnt] : counts) {
        auto& ws = stats[word];
        if (in_domain) {
          ws.pres_in += 1;
          ws.cnt_in += cnt;
        } else {
          ws.pres_out += 1;
          ws.cnt_out += cnt;
        }
      }
    }
  }
  if (stats.empty()) throw DataError("build_drf_set: empty vocabulary");

  struct Scored {
    const std::string* word;
    const WordStats* ws;
    double mi;
  };
  std::vector<Scored> scored;
  scored.reserve(stats.size());
  for (const auto& [word, ws] : stats) {
    const long a = ws.pres_in, b = ws.pres_out;
    const long c = n_in - ws.pres_in, d = n_out - ws.pres_out;
    scored.push_back({&word, &ws, binary_mi(a, b, c, d)});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& x, const Scored& y) {
    if (x.mi != y.mi) return x.mi > y.mi;
    return *x.word < *y.word;
  });
  if (scored.size() > static_cast<size_t>(cfg.top_l)) scored.resize(cfg.top_l);

  DrfSet set;
  set.domain = domain;
  for (const auto& s : scored) {
    if (s.ws->cnt_in <= 0) continue;
    const double ratio = static_cast<double>(s.ws->cnt_out) / static_cast<double>(s.ws->cnt_in);
    if (ratio <= cfg.rho)
      set.entries.push_back({*s.word, s.mi, s.ws->cnt_in, s.ws->cnt_out});
  }
  return set;
}

Signature annotate_signature(const Example& example, const DrfSet& drf_set,
                             const EmbeddingTable& table, int k) {
  if (drf_set.entries.empty()) throw DataError("annotate_signature: empty DRF set");
  if (k < 1) throw ConfigError("annotate_signature: k must be >= 1");

  std::vector<Eigen::RowVectorXd> covered;
  for (const auto& tok : tokenize(example.text))
    if (auto idx = table.find(tok)) covered.push_back(table.vectors.row(*idx));

  struct ScoredDrf {
    const DrfEntry* entry;
    double score;
  };
  std::vector<ScoredDrf> scorable;
  if (!covered.empty()) {
    for (const auto& entry : drf_set.entries) {
      auto idx = table.find(entry.word);
      if (!idx) continue;
      const Eigen::RowVectorXd r = table.vectors.row(*idx);
      double best = std::numeric_limits<double>::infinity();
      for (const auto& w : covered) best = std::min(best, (r - w).squaredNorm());
      scorable.push_back({&entry, best});
    }
  }

  Signature sig;
  sig.domain = drf_set.domain;
  if (covered.empty() || scorable.size() < static_cast<size_t>(k)) {
    // Fallback: k highest-count_in DRFs.
    std::vector<const DrfEntry*> by_count;
    for (const auto& e : drf_set.entries) by_count.push_back(&e);
    std::sort(by_count.begin(), by_count.end(), [](const DrfEntry* x, const DrfEntry* y) {
      if (x->count_in != y->count_in) return x->count_in > y->count_in;
      return x->word < y->word;
    });
    const size_t take = std::min<size_t>(k, by_count.size());
    for (size_t i = 0; i < take; ++i) sig.drfs.push_back(by_count[i]->word);
    sig.fallback = true;
    return sig;
  }

  std::sort(scorable.begin(), scorable.end(), [](const ScoredDrf& x, const ScoredDrf& y) {
    if (x.score != y.score) return x.score < y.score;
    return x.entry->word < y.entry->word;
  });
  for (int i = 0; i < k; ++i) sig.drfs.push_back(scorable[i].entry->word);
  return sig;
}

std::string render_signature(const Signature& sig) {
  if (sig.domain.empty()) throw DataError("render_signature: empty domain");
  if (sig.drfs.empty()) throw DataError("render_signature: no DRFs");
  std::string out = sig.domain + ":";
  for (size_t i = 0; i < sig.drfs.size(); ++i) {
    out += (i == 0) ? " " : ", ";
    out += sig.drfs[i];
  }
  return out;
}

Signature parse_signature(const std::string& s) {
  const size_t colon = s.find(": ");
  if (colon == std::string::npos || colon == 0)
    throw DataError("parse_signature: missing 'D: ' prefix in '" + s + "'");
  Signature sig;
  sig.domain = s.substr(0, colon);
  size_t pos = colon + 2;
  while (true) {
    const size_t comma = s.find(", ", pos);
    const std::string piece =
        comma == std::string::npos ? s.substr(pos) : s.substr(pos, comma - pos);
    if (piece.empty()) throw DataError("parse_signature: empty DRF in '" + s + "'");
    sig.drfs.push_back(piece);
    if (comma == std::string::npos) break;
    pos = comma + 2;
  }
  return sig;
}

void save_drf_set(const DrfSet& set, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write DRF set: " + path);
  for (const auto& e : set.entries) {
    nlohmann::ordered_json rec;
    rec["domain"] = set.domain;
    rec["word"] = e.word;
    rec["mi"] = e.mi;
    rec["count_in"] = e.count_in;
    rec["count_out"] = e.count_out;
    out << rec.dump() << "\n";
  }
}

DrfSet load_drf_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open DRF set: " + path);
  DrfSet set;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + " line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
    }
    DrfEntry entry;
    try {
      const std::string domain = rec.at("domain").get<std::string>();
      if (set.entries.empty()) set.domain = domain;
      else if (domain != set.domain)
        throw DataError(path + ": mixed domains '" + set.domain + "' and '" + domain + "'");
      entry.word = rec.at("word").get<std::string>();
      entry.mi = rec.at("mi").get<double>();
      entry.count_in = rec.at("count_in").get<long>();
      entry.count_out = rec.at("count_out").get<long>();
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + " line " + std::to_string(line_no) + ": " + e.what());
    }
    if (entry.count_in <= 0)
      throw DataError(path + " line " + std::to_string(line_no) + ": count_in must be > 0");
    set.entries.push_back(std::move(entry));
  }
  if (set.entries.empty()) throw DataError(path + ": empty DRF set");
  return set;
}

}  // namespace hyperadapt
