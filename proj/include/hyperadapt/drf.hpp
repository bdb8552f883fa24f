#pragma once

#include <string>
#include <vector>

#include "hyperadapt/corpus.hpp"
#include "hyperadapt/text.hpp"

namespace hyperadapt {

struct DrfConfig {
  double rho = 1.5;  // domain-specificity ratio bound
  int top_l = 1000;  // MI cutoff
  int k = 5;         // signature size

  void validate() const;
};

struct DrfEntry {
  std::string word;
  double mi = 0.0;        // bits, sentence-presence MI against the domain label
  long count_in = 0;      // token count inside the domain
  long count_out = 0;     // token count in the other source domains
};

// Per-domain DRF lexicon, sorted by MI descending with lexicographic
// tie-breaking.
struct DrfSet {
  std::string domain;
  std::vector<DrfEntry> entries;

  bool contains(const std::string& word) const;
};

// Per-example signature "D: T_1, T_2, ..., T_k". The fallback flag records
// that the count-based fallback produced the DRFs (zero token coverage or
// too few scorable DRFs); it is not part of the rendered form.
struct Signature {
  std::string domain;
  std::vector<std::string> drfs;
  bool fallback = false;

  friend bool operator==(const Signature& a, const Signature& b) {
    return a.domain == b.domain && a.drfs == b.drfs;
  }
};

// MI in bits between two binary sequences under their empirical joint
// distribution. Cells with zero mass contribute zero. Symmetric, >= 0.
double mutual_information(const std::vector<bool>& presence, const std::vector<bool>& labels);

// Builds the DRF set of `domain` from the train splits of all given corpora:
// sentence-presence MI against the domain/other label, top_l cutoff
// (ties lexicographic), then the count-ratio filter
// count_out/count_in <= rho with count_in > 0.
DrfSet build_drf_set(const std::vector<DomainCorpus>& corpora, const std::string& domain,
                     const DrfConfig& cfg);

// Scores each table-covered DRF by its minimum squared Euclidean embedding
// distance to the example's covered tokens and keeps the k lowest
// (ties: lower score, then lexicographic). Falls back to the k
// highest-count_in DRFs (flagged) when no token is covered or fewer than k
// DRFs are scorable.
Signature annotate_signature(const Example& example, const DrfSet& drf_set,
                             const EmbeddingTable& table, int k);

std::string render_signature(const Signature& sig);
Signature parse_signature(const std::string& s);

// JSON-lines persistence, one entry object per line.
void save_drf_set(const DrfSet& set, const std::string& path);
DrfSet load_drf_set(const std::string& path);

}  // namespace hyperadapt
