#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hyperadapt {

// Which split a record belongs to. Records without an explicit split are
// treated as training data.
enum class Split { train, dev, test };

const char* split_name(Split s);

enum class Metric { accuracy, macro_f1 };

const char* metric_name(Metric m);
Metric parse_metric(const std::string& name);

// Task descriptor: declared label set (empty = infer from data, sorted
// lexicographically) and the evaluation metric.
struct TaskSchema {
  std::vector<std::string> labels;
  Metric metric = Metric::accuracy;

  int label_index(const std::string& label) const;  // -1 when absent
  int n_classes() const { return static_cast<int>(labels.size()); }
};

// One labeled, domain-tagged text instance. Pair tasks arrive as
// premise/hypothesis fields and are flattened at load time with the
// literal separator " </s> ". The signature field is empty until an
// annotation pass fills it.
struct Example {
  std::string id;
  std::string text;
  std::string domain;
  std::string label;
  std::string language;   // optional, empty = absent
  std::string signature;  // optional rendered DRF signature
};

struct DomainCorpus {
  std::string domain;
  std::vector<Example> train, dev, test;

  const std::vector<Example>& split(Split s) const;
  std::vector<Example>& split(Split s);
};

struct SplitPlan {
  std::string target_domain;
  std::vector<std::string> source_domains;
  double train_fraction = 1.0;
  uint64_t seed = 0;
};

// Merged leave-one-out pools. train/dev contain only source-domain
// examples; test is the untouched target test split.
struct SplitPools {
  SplitPlan plan;
  std::vector<Example> train, dev, test;
};

// Per-split downsampling caps; absent cap = keep all. In strict mode a cap
// larger than the split is an error instead of a no-op.
struct SplitCaps {
  std::optional<size_t> train, dev, test;
  bool strict = false;
};

// JSON-lines loader. One object per line with fields
// {id, text | (premise, hypothesis), domain, label, language?, split?,
//  signature?}. Records are grouped by domain in order of first appearance;
// example order within a split is file order. If schema.labels is empty the
// label set is inferred (sorted); otherwise labels are validated against it.
// Throws DataError with a line number on malformed records, unknown labels,
// or duplicate ids.
std::vector<DomainCorpus> load_corpus(const std::string& path, TaskSchema& schema);

// Same record format and validation, but keeps the flat file order (used by
// `predict`, which scores whatever it is given).
std::vector<Example> load_examples(const std::string& path, TaskSchema& schema);

// Canonical serializer: domains in stored order, splits in train/dev/test
// order, fixed key order per record. load -> save -> load is byte-stable.
void save_corpus(const std::vector<DomainCorpus>& corpora, const std::string& path);
std::string corpus_to_jsonl(const std::vector<DomainCorpus>& corpora);

// Uniform sampling without replacement per split, preserving the relative
// order of survivors. Stable for a fixed seed; a cap equal to the split size
// is the identity.
DomainCorpus downsample(const DomainCorpus& corpus, const SplitCaps& caps, uint64_t seed);

// Leave-one-out pools: each source domain's train/dev split is independently
// subsampled to ceil(fraction * n) and concatenated in corpus order; the
// target's test split is untouched. Throws ConfigError for fraction outside
// (0,1], DataError for an unknown target.
SplitPools make_split(const std::vector<DomainCorpus>& corpora, const std::string& target,
                      double train_fraction, uint64_t seed);

const DomainCorpus* find_domain(const std::vector<DomainCorpus>& corpora,
                                const std::string& domain);

}  // namespace hyperadapt
