#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "hyperadapt/drf.hpp"
#include "hyperadapt/errors.hpp"
#include "hyperadapt/rng.hpp"
#include "oracles.hpp"

using namespace hyperadapt;

namespace {

const std::string kData = HYPERADAPT_TEST_DATA_DIR;

DomainCorpus corpus_of(const std::string& domain, const std::vector<std::string>& sentences) {
  DomainCorpus corpus;
  corpus.domain = domain;
  for (size_t i = 0; i < sentences.size(); ++i) {
    Example ex;
    ex.id = domain + std::to_string(i);
    ex.text = sentences[i];
    ex.domain = domain;
    ex.label = "x";
    corpus.train.push_back(ex);
  }
  return corpus;
}

bool same_drf_set(const DrfSet& a, const DrfSet& b) {
  if (a.domain != b.domain || a.entries.size() != b.entries.size()) return false;
  for (size_t i = 0; i < a.entries.size(); ++i) {
    const auto& x = a.entries[i];
    const auto& y = b.entries[i];
    if (x.word != y.word || x.mi != y.mi || x.count_in != y.count_in ||
        x.count_out != y.count_out)
      return false;
  }
  return true;
}

// Random micro-corpus over a small vocabulary; used for oracle equivalence.
std::vector<DomainCorpus> random_micro_corpus(Rng& rng) {
  const int n_domains = 2 + static_cast<int>(rng.below(2));
  std::vector<std::string> vocab;
  for (int i = 0; i < 12; ++i) vocab.push_back("w" + std::to_string(i));
  std::vector<DomainCorpus> corpora;
  for (int d = 0; d < n_domains; ++d) {
    std::vector<std::string> sentences;
    const int n_sentences = 2 + static_cast<int>(rng.below(5));
    for (int s = 0; s < n_sentences; ++s) {
      std::string text;
      const int len = 1 + static_cast<int>(rng.below(6));
      for (int t = 0; t < len; ++t) text += (t ? " " : "") + vocab[rng.below(vocab.size())];
      sentences.push_back(text);
    }
    corpora.push_back(corpus_of("d" + std::to_string(d), sentences));
  }
  return corpora;
}

}  // namespace

TEST_CASE("mutual_information: perfect dependence is one bit") {
  CHECK(mutual_information({true, true, false, false}, {true, true, false, false}) ==
        doctest::Approx(1.0));
}

TEST_CASE("mutual_information: constant presence carries no information") {
  CHECK(mutual_information({true, true, true, true}, {true, false, true, false}) ==
        doctest::Approx(0.0));
}

TEST_CASE("mutual_information: hand case against the brute-force oracle") {
  const std::vector<bool> presence = {1, 1, 0, 0, 0, 0};
  const std::vector<bool> labels = {1, 1, 1, 0, 0, 0};
  const double mi = mutual_information(presence, labels);
  CHECK(mi == doctest::Approx(0.4591).epsilon(1e-4));
  CHECK(mi == oracles::mi_brute(presence, labels));
}

TEST_CASE("mutual_information: symmetric and zero iff the table factorizes") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const size_t n = 2 + rng.below(20);
    std::vector<bool> x, y;
    for (size_t i = 0; i < n; ++i) {
      x.push_back(rng.below(2) == 1);
      y.push_back(rng.below(2) == 1);
    }
    CHECK(mutual_information(x, y) == mutual_information(y, x));
    CHECK(mutual_information(x, y) >= 0.0);
  }
  // A factorizing table: presence independent of labels by construction.
  std::vector<bool> x = {1, 1, 0, 0, 1, 1, 0, 0};
  std::vector<bool> y = {1, 0, 1, 0, 1, 0, 1, 0};
  CHECK(mutual_information(x, y) == doctest::Approx(0.0));
}

TEST_CASE("build_drf_set: sole-domain word is retained") {
  std::vector<DomainCorpus> corpora = {corpus_of("a", {"zonal word", "zonal again"}),
                                       corpus_of("b", {"other text", "more text"})};
  DrfConfig cfg;
  cfg.rho = 1.5;
  cfg.top_l = 100;
  cfg.k = 1;
  const DrfSet set = build_drf_set(corpora, "a", cfg);
  CHECK(set.contains("zonal"));
  for (const auto& e : set.entries)
    if (e.word == "zonal") {
      CHECK(e.count_in == 2);
      CHECK(e.count_out == 0);
    }
}

TEST_CASE("build_drf_set: words absent from the domain are excluded") {
  // "bword" has maximal MI magnitude with the (negated) domain label but
  // never occurs inside domain a.
  std::vector<DomainCorpus> corpora = {corpus_of("a", {"plain one", "plain two"}),
                                       corpus_of("b", {"bword bword", "bword plain"})};
  DrfConfig cfg;
  cfg.rho = 10.0;
  cfg.top_l = 100;
  cfg.k = 1;
  const DrfSet set = build_drf_set(corpora, "a", cfg);
  CHECK_FALSE(set.contains("bword"));
}

TEST_CASE("build_drf_set: six-sentence two-domain fixture equals the oracle") {
  std::vector<DomainCorpus> corpora = {
      corpus_of("travel", {"the city is old", "a modern city", "island town"}),
      corpus_of("music", {"the sound is loud", "rock history", "sound of story"})};
  DrfConfig cfg;
  cfg.rho = 1.5;
  cfg.top_l = 1000;
  cfg.k = 1;
  for (const char* domain : {"travel", "music"}) {
    const DrfSet got = build_drf_set(corpora, domain, cfg);
    const DrfSet want = oracles::drf_set_oracle(corpora, domain, cfg);
    CHECK(same_drf_set(got, want));
    CHECK_FALSE(got.entries.empty());
  }
}

TEST_CASE("build_drf_set: random micro-corpora match the oracle exactly") {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    auto corpora = random_micro_corpus(rng);
    DrfConfig cfg;
    cfg.rho = 0.5 + rng.next_double() * 2.0;
    cfg.top_l = 1 + static_cast<int>(rng.below(20));
    cfg.k = 1;
    const std::string domain = corpora[rng.below(corpora.size())].domain;
    const DrfSet got = build_drf_set(corpora, domain, cfg);
    const DrfSet want = oracles::drf_set_oracle(corpora, domain, cfg);
    CHECK(same_drf_set(got, want));
    // Every retained word really occurs in the domain's train split.
    for (const auto& e : got.entries) {
      long count = 0;
      for (const auto& ex : find_domain(corpora, domain)->train)
        for (const auto& t : tokenize(ex.text))
          if (t == e.word) ++count;
      CHECK(count == e.count_in);
      CHECK(count > 0);
    }
  }
}

TEST_CASE("build_drf_set: input validation") {
  std::vector<DomainCorpus> one = {corpus_of("a", {"x"})};
  DrfConfig cfg;
  CHECK_THROWS_AS(build_drf_set(one, "a", cfg), DataError);
  std::vector<DomainCorpus> with_empty = {corpus_of("a", {}), corpus_of("b", {"x"})};
  CHECK_THROWS_AS(build_drf_set(with_empty, "a", cfg), DataError);
  DrfConfig bad;
  bad.rho = -1.0;
  std::vector<DomainCorpus> two = {corpus_of("a", {"x"}), corpus_of("b", {"y"})};
  CHECK_THROWS_AS(build_drf_set(two, "a", bad), ConfigError);
}

TEST_CASE("annotate_signature: zero-distance DRF ranks first") {
  EmbeddingTable table;
  table.dim = 2;
  table.words = {"hit", "far", "tok"};
  table.index = {{"hit", 0}, {"far", 1}, {"tok", 2}};
  table.vectors.resize(3, 2);
  table.vectors << 1, 0, 9, 9, 1, 0;  // hit == tok exactly
  DrfSet set;
  set.domain = "d";
  set.entries = {{"hit", 0.9, 3, 0}, {"far", 0.8, 2, 0}};
  Example ex;
  ex.text = "tok";
  const Signature sig = annotate_signature(ex, set, table, 2);
  CHECK(sig.drfs == std::vector<std::string>{"hit", "far"});
  CHECK_FALSE(sig.fallback);
}

TEST_CASE("annotate_signature: table-1 regression fixture") {
  const EmbeddingTable table = load_embeddings(kData + "/table1/embeddings.txt");
  const DrfSet travel = load_drf_set(kData + "/table1/annotate_travel.drf.jsonl");
  TaskSchema schema;
  const auto corpora = load_corpus(kData + "/table1/example.jsonl", schema);
  const Example& ex = corpora[0].train[0];
  const Signature sig = annotate_signature(ex, travel, table, 5);
  CHECK(render_signature(sig) == "travel: city, area, town, reports, modern");
  CHECK_FALSE(sig.fallback);
}

TEST_CASE("annotate_signature: matches the exhaustive oracle on random fixtures") {
  Rng rng(555);
  for (int trial = 0; trial < 30; ++trial) {
    const int dim = 2 + static_cast<int>(rng.below(4));
    EmbeddingTable table;
    table.dim = dim;
    const int vocab = 12;
    table.vectors.resize(vocab, dim);
    for (int i = 0; i < vocab; ++i) {
      table.words.push_back("w" + std::to_string(i));
      table.index.emplace(table.words.back(), i);
      for (int j = 0; j < dim; ++j) table.vectors(i, j) = rng.next_double() * 4.0 - 2.0;
    }
    DrfSet set;
    set.domain = "d";
    for (int i = 0; i < 3 + static_cast<int>(rng.below(5)); ++i) {
      const std::string w = "w" + std::to_string(rng.below(vocab));
      if (!set.contains(w))
        set.entries.push_back({w, 1.0 - 0.05 * i, static_cast<long>(1 + rng.below(9)), 0});
    }
    Example ex;
    std::string text;
    for (int t = 0; t < 1 + static_cast<int>(rng.below(4)); ++t)
      text += (t ? " " : "") + ("w" + std::to_string(rng.below(vocab)));
    ex.text = text;
    const int k = 1 + static_cast<int>(rng.below(3));
    const Signature got = annotate_signature(ex, set, table, k);
    const Signature want = oracles::annotate_oracle(ex, set, table, k);
    CHECK(got == want);
    CHECK(got.fallback == want.fallback);
  }
}

TEST_CASE("annotate_signature: fallback on zero coverage and short sets") {
  EmbeddingTable table;
  table.dim = 2;
  table.words = {"a"};
  table.index = {{"a", 0}};
  table.vectors.resize(1, 2);
  table.vectors << 1, 0;
  DrfSet set;
  set.domain = "d";
  set.entries = {{"high", 0.9, 30, 0}, {"mid", 0.8, 20, 0}, {"low", 0.7, 10, 0}};

  Example oov;
  oov.text = "nothing covered here";
  const Signature fb = annotate_signature(oov, set, table, 2);
  CHECK(fb.fallback);
  CHECK(fb.drfs == std::vector<std::string>{"high", "mid"});  // count_in order

  // Covered tokens but no scorable DRFs (none in the table).
  Example covered;
  covered.text = "a";
  const Signature fb2 = annotate_signature(covered, set, table, 2);
  CHECK(fb2.fallback);
  CHECK(fb2.drfs == std::vector<std::string>{"high", "mid"});
}

TEST_CASE("annotate_signature: embedding scale leaves the ranking unchanged") {
  Rng rng(404);
  EmbeddingTable table;
  table.dim = 3;
  table.vectors.resize(8, 3);
  for (int i = 0; i < 8; ++i) {
    table.words.push_back("w" + std::to_string(i));
    table.index.emplace(table.words.back(), i);
    for (int j = 0; j < 3; ++j) table.vectors(i, j) = rng.next_double() * 2.0 - 1.0;
  }
  DrfSet set;
  set.domain = "d";
  for (int i = 0; i < 5; ++i)
    set.entries.push_back({"w" + std::to_string(i), 1.0 - 0.1 * i, 5, 0});
  Example ex;
  ex.text = "w5 w6 w7";
  const Signature base = annotate_signature(ex, set, table, 3);
  EmbeddingTable scaled = table;
  scaled.vectors *= 3.7;
  const Signature after = annotate_signature(ex, set, scaled, 3);
  CHECK(base == after);
}

TEST_CASE("render/parse: exact inverse pair") {
  Signature one;
  one.domain = "travel";
  one.drfs = {"city"};
  CHECK(render_signature(one) == "travel: city");
  CHECK(parse_signature("travel: city") == one);

  const Signature music = parse_signature("music: history, rock, sound, story");
  CHECK(music.domain == "music");
  CHECK(music.drfs == std::vector<std::string>{"history", "rock", "sound", "story"});
}

TEST_CASE("render/parse: identity on random signatures") {
  Rng rng(808);
  for (int trial = 0; trial < 100; ++trial) {
    Signature sig;
    sig.domain = "dom" + std::to_string(rng.below(50));
    const int k = 1 + static_cast<int>(rng.below(8));
    for (int i = 0; i < k; ++i) sig.drfs.push_back("word" + std::to_string(rng.below(100)));
    CHECK(parse_signature(render_signature(sig)) == sig);
  }
}

TEST_CASE("parse_signature: malformed strings") {
  CHECK_THROWS_AS(parse_signature("no separator"), DataError);
  CHECK_THROWS_AS(parse_signature(": city"), DataError);
  CHECK_THROWS_AS(parse_signature("travel: city, , town"), DataError);
}

TEST_CASE("drf set save/load round trip") {
  std::vector<DomainCorpus> corpora = {
      corpus_of("a", {"alpha beta gamma", "alpha alpha"}),
      corpus_of("b", {"delta epsilon", "gamma delta"}),
  };
  DrfConfig cfg;
  const DrfSet set = build_drf_set(corpora, "a", cfg);
  const auto path = std::filesystem::temp_directory_path() / "drf_rt.jsonl";
  save_drf_set(set, path.string());
  const DrfSet loaded = load_drf_set(path.string());
  CHECK(same_drf_set(set, loaded));
}
