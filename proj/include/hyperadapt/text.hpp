#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace hyperadapt {

// A token is a lowercased, whitespace-free surface string.
using Token = std::string;

// Lowercase (ASCII + Latin-1 range), split on Unicode whitespace, strip
// leading/trailing punctuation from each piece, drop empties. Internal
// punctuation (hyphens, apostrophes) is kept. Deterministic; empty input
// yields an empty list.
std::vector<Token> tokenize(const std::string& text);

// Joins tokens with single spaces; tokenize(join(ts)) == ts for tokenizer
// output.
std::string join_tokens(const std::vector<Token>& tokens);

// The static word-embedding map used for signature annotation, hypernetwork
// conditioning, and encoder initialization. Lookups never fabricate vectors:
// misses are reported to the caller via coverage counts.
struct EmbeddingTable {
  int dim = 0;
  std::vector<std::string> words;              // file order, duplicates dropped
  std::unordered_map<std::string, int> index;  // word -> row in vectors
  Eigen::MatrixXd vectors;                     // one row per word

  bool contains(const std::string& w) const { return index.count(w) != 0; }
  std::optional<int> find(const std::string& w) const {
    auto it = index.find(w);
    if (it == index.end()) return std::nullopt;
    return it->second;
  }
  Eigen::RowVectorXd row(const std::string& w) const;
  size_t size() const { return words.size(); }
};

// Text format: "word v1 v2 ... vd" per line, constant d across lines.
// Duplicate words keep the first occurrence (a warning is emitted on stderr).
// Throws DataError on inconsistent dimension or non-numeric fields, with the
// offending line number.
EmbeddingTable load_embeddings(const std::string& path);

struct MeanEmbedding {
  Eigen::RowVectorXd vec;  // zero vector when coverage == 0
  int coverage = 0;        // how many tokens were found in the table
};

// Arithmetic mean of the embeddings of covered tokens; skips OOV tokens.
MeanEmbedding embed_mean(const std::vector<Token>& tokens, const EmbeddingTable& table);

}  // namespace hyperadapt
