#include "hyperadapt/text.hpp"

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>

#include "hyperadapt/errors.hpp"

namespace hyperadapt {

namespace {

// Minimal UTF-8 decoding: returns the codepoint starting at i and advances i.
// Malformed bytes are passed through as single codepoints so tokenization
// never fails on dirty input.
uint32_t decode_utf8(const std::string& s, size_t& i) {
  const unsigned char b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    i += 1;
    return b0;
  }
  auto cont = [&](size_t off) -> int {
    if (i + off >= s.size()) return -1;
    const unsigned char b = static_cast<unsigned char>(s[i + off]);
    return (b & 0xc0) == 0x80 ? (b & 0x3f) : -1;
  };
  if ((b0 & 0xe0) == 0xc0) {
    const int c1 = cont(1);
    if (c1 >= 0) {
      i += 2;
      return (static_cast<uint32_t>(b0 & 0x1f) << 6) | c1;
    }
  } else if ((b0 & 0xf0) == 0xe0) {
    const int c1 = cont(1), c2 = cont(2);
    if (c1 >= 0 && c2 >= 0) {
      i += 3;
      return (static_cast<uint32_t>(b0 & 0x0f) << 12) | (c1 << 6) | c2;
    }
  } else if ((b0 & 0xf8) == 0xf0) {
    const int c1 = cont(1), c2 = cont(2), c3 = cont(3);
    if (c1 >= 0 && c2 >= 0 && c3 >= 0) {
      i += 4;
      return (static_cast<uint32_t>(b0 & 0x07) << 18) | (c1 << 12) | (c2 << 6) | c3;
    }
  }
  i += 1;
  return b0;
}

void encode_utf8(uint32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else {
    out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  }
}

bool is_whitespace(uint32_t cp) {
  switch (cp) {
    case 0x09: case 0x0a: case 0x0b: case 0x0c: case 0x0d: case 0x20:
    case 0x85: case 0xa0: case 0x1680:
    case 0x2028: case 0x2029: case 0x202f: case 0x205f: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200a;
  }
}

bool is_punct(uint32_t cp) {
  if (cp < 0x80) {
    const char c = static_cast<char>(cp);
    return (c >= '!' && c <= '/') || (c >= ':' && c <= '@') ||
           (c >= '[' && c <= '`') || (c >= '{' && c <= '~');
  }
  switch (cp) {
    case 0xa1: case 0xab: case 0xbb: case 0xbf:         // inverted marks, guillemets
    case 0x2013: case 0x2014: case 0x2015:              // dashes
    case 0x2018: case 0x2019: case 0x201a:              // single quotes
    case 0x201c: case 0x201d: case 0x201e:              // double quotes
    case 0x2022: case 0x2026: case 0x2032: case 0x2033: // bullet, ellipsis, primes
    case 0x3001: case 0x3002: case 0xff01: case 0xff0c: // CJK comma/stop, fullwidth
    case 0xff0e: case 0xff1f:
      return true;
    default:
      return false;
  }
}

uint32_t to_lower(uint32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  // Latin-1 supplement letters, skipping the multiplication sign.
  if (cp >= 0xc0 && cp <= 0xde && cp != 0xd7) return cp + 32;
  return cp;
}

}  // namespace

std::vector<Token> tokenize(const std::string& text) {
  std::vector<std::vector<uint32_t>> pieces;
  std::vector<uint32_t> cur;
  size_t i = 0;
  while (i < text.size()) {
    const uint32_t cp = decode_utf8(text, i);
    if (is_whitespace(cp)) {
      if (!cur.empty()) {
        pieces.push_back(std::move(cur));
        cur.clear();
      }
    } else {
      cur.push_back(to_lower(cp));
    }
  }
  if (!cur.empty()) pieces.push_back(std::move(cur));

  std::vector<Token> out;
  out.reserve(pieces.size());
  for (auto& piece : pieces) {
    size_t b = 0, e = piece.size();
    while (b < e && is_punct(piece[b])) ++b;
    while (e > b && is_punct(piece[e - 1])) --e;
    if (b == e) continue;
    Token tok;
    for (size_t j = b; j < e; ++j) encode_utf8(piece[j], tok);
    out.push_back(std::move(tok));
  }
  return out;
}

std::string join_tokens(const std::vector<Token>& tokens) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

Eigen::RowVectorXd EmbeddingTable::row(const std::string& w) const {
  auto it = index.find(w);
  if (it == index.end()) throw DataError("embedding lookup miss: '" + w + "'");
  return vectors.row(it->second);
}

EmbeddingTable load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file: " + path);

  EmbeddingTable table;
  std::vector<std::vector<double>> rows;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word.empty()) continue;
    std::vector<double> vals;
    std::string field;
    while (ls >> field) {
      try {
        size_t pos = 0;
        const double v = std::stod(field, &pos);
        if (pos != field.size()) throw std::invalid_argument(field);
        vals.push_back(v);
      } catch (const std::exception&) {
        throw DataError("embedding file " + path + " line " + std::to_string(line_no) +
                        ": non-numeric field '" + field + "'");
      }
    }
    if (vals.empty())
      throw DataError("embedding file " + path + " line " + std::to_string(line_no) +
                      ": no vector components");
    if (table.dim == 0) {
      table.dim = static_cast<int>(vals.size());
    } else if (static_cast<int>(vals.size()) != table.dim) {
      throw DataError("embedding file " + path + " line " + std::to_string(line_no) +
                      ": dimension " + std::to_string(vals.size()) + " != " +
                      std::to_string(table.dim));
    }
    if (table.index.count(word)) {
      std::cerr << "warning: duplicate embedding for '" << word << "' at line " << line_no
                << ", keeping first\n";
      continue;
    }
    table.index.emplace(word, static_cast<int>(table.words.size()));
    table.words.push_back(word);
    rows.push_back(std::move(vals));
  }
  table.vectors.resize(static_cast<Eigen::Index>(rows.size()), table.dim);
  for (size_t r = 0; r < rows.size(); ++r)
    for (int c = 0; c < table.dim; ++c) table.vectors(static_cast<Eigen::Index>(r), c) = rows[r][c];
  return table;
}

MeanEmbedding embed_mean(const std::vector<Token>& tokens, const EmbeddingTable& table) {
  MeanEmbedding out;
  out.vec = Eigen::RowVectorXd::Zero(table.dim);
  for (const auto& tok : tokens) {
    if (auto idx = table.find(tok)) {
      out.vec += table.vectors.row(*idx);
      ++out.coverage;
    }
  }
  if (out.coverage > 0) out.vec /= static_cast<double>(out.coverage);
  return out;
}

}  // namespace hyperadapt
