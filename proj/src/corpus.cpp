#include "hyperadapt/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "hyperadapt/errors.hpp"
#include "hyperadapt/rng.hpp"

namespace hyperadapt {

const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "?";
}

const char* metric_name(Metric m) {
  return m == Metric::accuracy ? "accuracy" : "macro_f1";
}

Metric parse_metric(const std::string& name) {
  if (name == "accuracy") return Metric::accuracy;
  if (name == "macro_f1") return Metric::macro_f1;
  throw ConfigError("unknown metric: " + name);
}

int TaskSchema::label_index(const std::string& label) const {
  for (size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) return static_cast<int>(i);
  return -1;
}

const std::vector<Example>& DomainCorpus::split(Split s) const {
  switch (s) {
    case Split::train: return train;
    case Split::dev: return dev;
    case Split::test: return test;
  }
  return train;
}

std::vector<Example>& DomainCorpus::split(Split s) {
  switch (s) {
    case Split::train: return train;
    case Split::dev: return dev;
    case Split::test: return test;
  }
  return train;
}

namespace {

std::string trimmed(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

Split parse_split(const std::string& s, size_t line_no) {
  if (s == "train") return Split::train;
  if (s == "dev") return Split::dev;
  if (s == "test") return Split::test;
  throw DataError("line " + std::to_string(line_no) + ": unknown split '" + s + "'");
}

}  // namespace

namespace {

std::vector<std::pair<Example, Split>> parse_records(const std::string& path,
                                                     TaskSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file: " + path);

  std::vector<std::pair<Example, Split>> records;
  std::unordered_set<std::string> seen_ids;
  std::set<std::string> seen_labels;
  const bool declared = !schema.labels.empty();

  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trimmed(line).empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
    }
    auto field = [&](const char* name, bool required) -> std::string {
      if (!rec.contains(name)) {
        if (required)
          throw DataError("line " + std::to_string(line_no) + ": missing field '" + name + "'");
        return "";
      }
      if (!rec[name].is_string())
        throw DataError("line " + std::to_string(line_no) + ": field '" + name +
                        "' must be a string");
      return rec[name].get<std::string>();
    };

    Example ex;
    ex.id = field("id", true);
    if (rec.contains("text")) {
      ex.text = field("text", true);
    } else if (rec.contains("premise") && rec.contains("hypothesis")) {
      ex.text = field("premise", true) + " </s> " + field("hypothesis", true);
    } else {
      throw DataError("line " + std::to_string(line_no) +
                      ": need 'text' or 'premise'+'hypothesis'");
    }
    if (trimmed(ex.text).empty())
      throw DataError("line " + std::to_string(line_no) + ": empty text");
    ex.domain = field("domain", true);
    ex.label = field("label", true);
    ex.language = field("language", false);
    ex.signature = field("signature", false);
    const std::string split_field = field("split", false);
    const Split split = split_field.empty() ? Split::train : parse_split(split_field, line_no);

    if (!seen_ids.insert(ex.id).second)
      throw DataError("line " + std::to_string(line_no) + ": duplicate id '" + ex.id + "'");
    if (declared && schema.label_index(ex.label) < 0)
      throw DataError("line " + std::to_string(line_no) + ": unknown label '" + ex.label + "'");
    seen_labels.insert(ex.label);
    records.emplace_back(std::move(ex), split);
  }

  if (!declared) schema.labels.assign(seen_labels.begin(), seen_labels.end());
  return records;
}

}  // namespace

std::vector<DomainCorpus> load_corpus(const std::string& path, TaskSchema& schema) {
  std::vector<DomainCorpus> corpora;
  std::unordered_map<std::string, size_t> domain_index;
  for (auto& [ex, split] : parse_records(path, schema)) {
    auto it = domain_index.find(ex.domain);
    if (it == domain_index.end()) {
      domain_index.emplace(ex.domain, corpora.size());
      corpora.push_back(DomainCorpus{ex.domain, {}, {}, {}});
      it = domain_index.find(ex.domain);
    }
    corpora[it->second].split(split).push_back(std::move(ex));
  }
  return corpora;
}

std::vector<Example> load_examples(const std::string& path, TaskSchema& schema) {
  std::vector<Example> out;
  for (auto& [ex, split] : parse_records(path, schema)) out.push_back(std::move(ex));
  return out;
}

std::string corpus_to_jsonl(const std::vector<DomainCorpus>& corpora) {
  std::string out;
  for (const auto& corpus : corpora) {
    for (Split s : {Split::train, Split::dev, Split::test}) {
      for (const auto& ex : corpus.split(s)) {
        nlohmann::ordered_json rec;
        rec["id"] = ex.id;
        rec["text"] = ex.text;
        rec["domain"] = ex.domain;
        rec["label"] = ex.label;
        if (!ex.language.empty()) rec["language"] = ex.language;
        rec["split"] = split_name(s);
        if (!ex.signature.empty()) rec["signature"] = ex.signature;
        out += rec.dump();
        out.push_back('\n');
      }
    }
  }
  return out;
}

void save_corpus(const std::vector<DomainCorpus>& corpora, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write corpus file: " + path);
  out << corpus_to_jsonl(corpora);
}

namespace {

std::vector<Example> sample_split(const std::vector<Example>& split, std::optional<size_t> cap,
                                  bool strict, uint64_t seed, const std::string& stream) {
  if (!cap || *cap >= split.size()) {
    if (cap && *cap > split.size() && strict)
      throw DataError("downsample cap " + std::to_string(*cap) + " exceeds split size " +
                      std::to_string(split.size()) + " (" + stream + ")");
    return split;
  }
  Rng rng(derive_seed(seed, stream));
  std::vector<Example> out;
  out.reserve(*cap);
  for (size_t idx : rng.sample_indices(split.size(), *cap)) out.push_back(split[idx]);
  return out;
}

}  // namespace

DomainCorpus downsample(const DomainCorpus& corpus, const SplitCaps& caps, uint64_t seed) {
  DomainCorpus out;
  out.domain = corpus.domain;
  out.train = sample_split(corpus.train, caps.train, caps.strict, seed, corpus.domain + "/train");
  out.dev = sample_split(corpus.dev, caps.dev, caps.strict, seed, corpus.domain + "/dev");
  out.test = sample_split(corpus.test, caps.test, caps.strict, seed, corpus.domain + "/test");
  return out;
}

const DomainCorpus* find_domain(const std::vector<DomainCorpus>& corpora,
                                const std::string& domain) {
  for (const auto& c : corpora)
    if (c.domain == domain) return &c;
  return nullptr;
}

SplitPools make_split(const std::vector<DomainCorpus>& corpora, const std::string& target,
                      double train_fraction, uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0))
    throw ConfigError("train_fraction must lie in (0,1], got " + std::to_string(train_fraction));
  const DomainCorpus* target_corpus = find_domain(corpora, target);
  if (!target_corpus) throw DataError("target domain not present: " + target);

  SplitPools pools;
  pools.plan.target_domain = target;
  pools.plan.train_fraction = train_fraction;
  pools.plan.seed = seed;

  for (const auto& corpus : corpora) {
    if (corpus.domain == target) continue;
    pools.plan.source_domains.push_back(corpus.domain);
    for (Split s : {Split::train, Split::dev}) {
      const auto& full = corpus.split(s);
      const size_t keep =
          static_cast<size_t>(std::ceil(train_fraction * static_cast<double>(full.size())));
      std::optional<size_t> cap;
      if (keep < full.size()) cap = keep;
      auto sampled = sample_split(full, cap, false, seed,
                                  std::string("fraction/") + split_name(s) + "/" + corpus.domain);
      auto& pool = (s == Split::train) ? pools.train : pools.dev;
      pool.insert(pool.end(), sampled.begin(), sampled.end());
    }
  }
  if (pools.plan.source_domains.empty())
    throw DataError("no source domains besides target '" + target + "'");
  pools.test = target_corpus->test;

  // Leakage guard: the target domain must never reach the training pools.
  for (const auto* pool : {&pools.train, &pools.dev})
    for (const auto& ex : *pool)
      if (ex.domain == target)
        throw DataError("target-domain example leaked into source pools: " + ex.id);
  return pools;
}

}  // namespace hyperadapt
