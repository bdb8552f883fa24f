#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hyperadapt/corpus.hpp"
#include "hyperadapt/hypernet.hpp"
#include "hyperadapt/models.hpp"
#include "hyperadapt/trainer.hpp"

namespace hyperadapt {

struct MetricsResult {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

// Accuracy and macro-F1 over label strings. Macro-F1 averages per-class F1
// over the full label set; classes absent from both preds and golds
// contribute F1 = 0.
MetricsResult metrics(const std::vector<std::string>& preds,
                      const std::vector<std::string>& golds,
                      const std::vector<std::string>& labels);

double metric_value(const MetricsResult& m, Metric metric);

// Exact two-sided McNemar: b = #(A right, B wrong), c = #(A wrong, B right),
// binomial tail at p = 0.5, doubled and clamped to 1. b + c = 0 gives 1.
double mcnemar(const std::vector<std::string>& preds_a, const std::vector<std::string>& preds_b,
               const std::vector<std::string>& golds);

using MetricFn = std::function<double(const std::vector<std::string>& preds,
                                      const std::vector<std::string>& golds)>;

// Paired bootstrap, one-sided "A better than B": resamples example indices
// with replacement and returns (#{delta* <= 0} + 1) / (B + 1).
double bootstrap_test(const MetricFn& metric_fn, const std::vector<std::string>& preds_a,
                      const std::vector<std::string>& preds_b,
                      const std::vector<std::string>& golds, int n_resamples = 1000,
                      uint64_t seed = 0);

// Mean over flattened (W, b) coordinates of the per-coordinate population SD
// across the given classifiers. Requires >= 2 classifiers of a common shape.
double weight_diversity(const std::vector<GeneratedClassifier>& classifiers);

struct DiversityRecord {
  std::string target;
  double diversity = 0.0;    // weight diversity of Hyper-PADA on target test
  double improvement = 0.0;  // Hyper-PADA metric minus PADA-lite metric
};

struct CorrelationSummary {
  std::optional<double> pearson;   // nullopt: undefined (zero variance)
  std::optional<double> spearman;
};

// Pearson on raw values; Spearman is Pearson on average ranks (ties
// averaged). Needs >= 3 records.
CorrelationSummary correlations(const std::vector<DiversityRecord>& records);

enum class CampaignMode { standard, seen, upper, fractions };

const char* campaign_mode_name(CampaignMode m);
CampaignMode parse_campaign_mode(const std::string& name);

struct CampaignConfig {
  CampaignMode mode = CampaignMode::standard;
  std::vector<VariantKind> variants;
  TrainConfig train;
  double train_fraction = 1.0;
  std::vector<double> fractions = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  uint64_t seed = 0;
  int jobs = 1;
};

struct EvalRow {
  std::string target;
  VariantKind variant = VariantKind::NoDA;
  double fraction = 1.0;
  double value = 0.0;
  size_t n_test = 0;
  bool failed = false;
  std::string error;
  std::string sig_marks;  // subset of "ehp", see run_campaign
};

struct AverageRow {
  VariantKind variant = VariantKind::NoDA;
  double fraction = 1.0;
  double value = 0.0;
};

struct EvalReport {
  Metric metric = Metric::accuracy;
  std::vector<std::pair<std::string, std::string>> config_echo;  // sorted keys
  std::vector<std::string> substitutions;
  std::vector<EvalRow> rows;
  std::vector<AverageRow> averages;  // recomputed from non-failed rows
};

struct CampaignResult {
  EvalReport report;
  std::vector<DiversityRecord> diversity;
  CorrelationSummary diversity_correlation;
};

// Leave-one-out campaign over every domain as target. Per cell: build the
// split, train the variant, evaluate on the target test split (standard /
// upper / fractions) or on the source dev splits (seen). Training failures
// are recorded per cell and the campaign continues. Significance marks on
// hyper-pada rows: 'e' vs the best domain-expert baseline, 'p' vs pada-lite,
// 'h' vs the best of hyper-dn/hyper-drf (p < 0.05; McNemar for accuracy
// tasks, bootstrap for macro-F1 tasks).
CampaignResult run_campaign(const std::vector<DomainCorpus>& corpora, const TaskSchema& schema,
                            std::shared_ptr<const EmbeddingTable> table,
                            const CampaignConfig& cfg);

std::string report_to_csv(const CampaignResult& result);
std::string report_to_markdown(const CampaignResult& result);
std::string diversity_to_csv(const CampaignResult& result);

// Writes report.csv, report.md, diversity.csv and config.json under out_dir.
void write_campaign_outputs(const CampaignResult& result, const std::string& out_dir);

}  // namespace hyperadapt
