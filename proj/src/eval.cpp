#include "hyperadapt/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <thread>

#include <json.hpp>

#include "hyperadapt/errors.hpp"
#include "hyperadapt/rng.hpp"

namespace hyperadapt {

MetricsResult metrics(const std::vector<std::string>& preds,
                      const std::vector<std::string>& golds,
                      const std::vector<std::string>& labels) {
  if (preds.size() != golds.size() || preds.empty())
    throw ConfigError("metrics: preds/golds must have equal length >= 1");
  MetricsResult out;
  size_t correct = 0;
  for (size_t i = 0; i < preds.size(); ++i)
    if (preds[i] == golds[i]) ++correct;
  out.accuracy = static_cast<double>(correct) / static_cast<double>(preds.size());

  double f1_sum = 0.0;
  for (const auto& cls : labels) {
    long tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < preds.size(); ++i) {
      const bool p = preds[i] == cls, g = golds[i] == cls;
      if (p && g) ++tp;
      else if (p) ++fp;
      else if (g) ++fn;
    }
    // Classes absent from both sides contribute F1 = 0.
    const double f1 = (2 * tp + fp + fn) == 0
                          ? 0.0
                          : 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
    f1_sum += f1;
  }
  out.macro_f1 = labels.empty() ? 0.0 : f1_sum / static_cast<double>(labels.size());
  return out;
}

double metric_value(const MetricsResult& m, Metric metric) {
  return metric == Metric::accuracy ? m.accuracy : m.macro_f1;
}

double mcnemar(const std::vector<std::string>& preds_a, const std::vector<std::string>& preds_b,
               const std::vector<std::string>& golds) {
  if (preds_a.size() != preds_b.size() || preds_a.size() != golds.size())
    throw ConfigError("mcnemar: length mismatch");
  long b = 0, c = 0;
  for (size_t i = 0; i < golds.size(); ++i) {
    const bool a_ok = preds_a[i] == golds[i], b_ok = preds_b[i] == golds[i];
    if (a_ok && !b_ok) ++b;
    else if (!a_ok && b_ok) ++c;
  }
  const long n = b + c;
  if (n == 0) return 1.0;
  const long k = std::min(b, c);
  // Two-sided exact binomial at p = 1/2: 2 * P(X <= k), log-space for large n.
  std::vector<double> lt(static_cast<size_t>(k) + 1);
  const double log_half = std::log(0.5);
  for (long i = 0; i <= k; ++i)
    lt[static_cast<size_t>(i)] = std::lgamma(static_cast<double>(n) + 1.0) -
                                 std::lgamma(static_cast<double>(i) + 1.0) -
                                 std::lgamma(static_cast<double>(n - i) + 1.0) +
                                 static_cast<double>(n) * log_half;
  const double m = *std::max_element(lt.begin(), lt.end());
  double sum = 0.0;
  for (double v : lt) sum += std::exp(v - m);
  const double p = 2.0 * std::exp(m) * sum;
  return std::min(1.0, p);
}

double bootstrap_test(const MetricFn& metric_fn, const std::vector<std::string>& preds_a,
                      const std::vector<std::string>& preds_b,
                      const std::vector<std::string>& golds, int n_resamples, uint64_t seed) {
  if (preds_a.size() != preds_b.size() || preds_a.size() != golds.size() || golds.empty())
    throw ConfigError("bootstrap_test: length mismatch or empty input");
  if (n_resamples < 1) throw ConfigError("bootstrap_test: need >= 1 resamples");
  const size_t n = golds.size();
  Rng rng(seed);
  long not_better = 0;
  std::vector<std::string> ra(n), rb(n), rg(n);
  for (int t = 0; t < n_resamples; ++t) {
    for (size_t i = 0; i < n; ++i) {
      const size_t j = static_cast<size_t>(rng.below(n));
      ra[i] = preds_a[j];
      rb[i] = preds_b[j];
      rg[i] = golds[j];
    }
    const double delta = metric_fn(ra, rg) - metric_fn(rb, rg);
    if (delta <= 0.0) ++not_better;
  }
  // Add-one estimator so p never reaches 0.
  return static_cast<double>(not_better + 1) / static_cast<double>(n_resamples + 1);
}

double weight_diversity(const std::vector<GeneratedClassifier>& classifiers) {
  if (classifiers.size() < 2) throw ConfigError("weight_diversity: need >= 2 classifiers");
  const Eigen::Index rows = classifiers[0].W.rows(), cols = classifiers[0].W.cols();
  const Eigen::Index bs = classifiers[0].b.size();
  const Eigen::Index coords = rows * cols + bs;
  const double n = static_cast<double>(classifiers.size());

  auto coord = [&](const GeneratedClassifier& gc, Eigen::Index i) -> double {
    if (gc.W.rows() != rows || gc.W.cols() != cols || gc.b.size() != bs)
      throw ShapeError("weight_diversity: classifiers disagree on shape");
    return i < rows * cols ? gc.W(i / cols, i % cols) : gc.b(i - rows * cols);
  };

  double sd_sum = 0.0;
  for (Eigen::Index i = 0; i < coords; ++i) {
    double mean = 0.0;
    for (const auto& gc : classifiers) mean += coord(gc, i);
    mean /= n;
    double var = 0.0;
    for (const auto& gc : classifiers) {
      const double d = coord(gc, i) - mean;
      var += d * d;
    }
    sd_sum += std::sqrt(var / n);  // population SD
  }
  return sd_sum / static_cast<double>(coords);
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& values) {
  const size_t n = values.size();
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

CorrelationSummary correlations(const std::vector<DiversityRecord>& records) {
  if (records.size() < 3) throw ConfigError("correlations: need >= 3 records");
  std::vector<double> x, y;
  for (const auto& r : records) {
    x.push_back(r.diversity);
    y.push_back(r.improvement);
  }
  CorrelationSummary out;
  out.pearson = pearson(x, y);
  out.spearman = pearson(average_ranks(x), average_ranks(y));
  return out;
}

const char* campaign_mode_name(CampaignMode m) {
  switch (m) {
    case CampaignMode::standard: return "standard";
    case CampaignMode::seen: return "seen";
    case CampaignMode::upper: return "upper";
    case CampaignMode::fractions: return "fractions";
  }
  return "?";
}

CampaignMode parse_campaign_mode(const std::string& name) {
  for (CampaignMode m : {CampaignMode::standard, CampaignMode::seen, CampaignMode::upper,
                         CampaignMode::fractions})
    if (name == campaign_mode_name(m)) return m;
  throw ConfigError("unknown campaign mode: " + name);
}

namespace {

std::string fmt(double v, const char* spec = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

struct CellOutput {
  double value = 0.0;
  size_t n_test = 0;
  bool failed = false;
  std::string error;
  std::vector<std::string> preds;
  std::vector<GeneratedClassifier> classifiers;  // hyper-pada, for diversity
};

std::vector<std::pair<std::string, std::string>> echo_config(const CampaignConfig& cfg,
                                                             const TaskSchema& schema) {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("alpha_unk", fmt(cfg.train.alpha_unk, "%.3f"));
  kv.emplace_back("attn_trials", std::to_string(cfg.train.attn_trials));
  kv.emplace_back("batch_size", std::to_string(cfg.train.batch_size));
  kv.emplace_back("drf_k", std::to_string(cfg.train.drf.k));
  kv.emplace_back("drf_rho", fmt(cfg.train.drf.rho, "%.3f"));
  kv.emplace_back("drf_top_l", std::to_string(cfg.train.drf.top_l));
  kv.emplace_back("epochs_disc", std::to_string(cfg.train.epochs_disc));
  kv.emplace_back("epochs_gen", std::to_string(cfg.train.epochs_gen));
  std::string fr;
  if (cfg.mode == CampaignMode::fractions) {
    for (size_t i = 0; i < cfg.fractions.size(); ++i)
      fr += (i ? "|" : "") + fmt(cfg.fractions[i], "%.2f");
  } else {
    fr = fmt(cfg.train_fraction, "%.2f");
  }
  kv.emplace_back("fractions", fr);
  kv.emplace_back("generator_mode", generator_mode_name(cfg.train.generator_mode));
  kv.emplace_back("hn_layers", std::to_string(cfg.train.hn_layers));
  kv.emplace_back("jobs", std::to_string(cfg.jobs));
  kv.emplace_back("lr", fmt(cfg.train.lr, "%.6g"));
  kv.emplace_back("lr_full_lm_reference", "5e-06");
  kv.emplace_back("max_tokens", std::to_string(cfg.train.max_tokens));
  kv.emplace_back("metric", metric_name(schema.metric));
  kv.emplace_back("mode", campaign_mode_name(cfg.mode));
  kv.emplace_back("seed", std::to_string(cfg.seed));
  kv.emplace_back("trainable_embeddings", cfg.train.trainable_embeddings ? "true" : "false");
  std::string vs;
  for (size_t i = 0; i < cfg.variants.size(); ++i)
    vs += std::string(i ? "|" : "") + variant_name(cfg.variants[i]);
  kv.emplace_back("variants", vs);
  return kv;
}

const char* kSubstitutionNotes[] = {
    "encoder: pooled static word embeddings + 2-layer MLP stand in for a fine-tuned "
    "pretrained LM encoder; published full-LM scores are not reproducible at this scale",
    "signature generator: deterministic DRF ranking (or a linear multi-label scorer) "
    "stands in for seq2seq decoding",
    "learning rate: desk-scale default 1e-3; the full-LM reference setting is 5e-6",
};

}  // namespace

CampaignResult run_campaign(const std::vector<DomainCorpus>& corpora, const TaskSchema& schema,
                            std::shared_ptr<const EmbeddingTable> table,
                            const CampaignConfig& cfg) {
  if (corpora.size() < 2) throw DataError("campaign: need >= 2 domains");
  if (cfg.variants.empty()) throw ConfigError("campaign: no variants selected");
  cfg.train.validate();

  const std::vector<double> fractions =
      cfg.mode == CampaignMode::fractions ? cfg.fractions : std::vector<double>{cfg.train_fraction};
  if (fractions.empty()) throw ConfigError("campaign: empty fraction grid");

  struct Cell {
    size_t frac_idx, target_idx, variant_idx;
  };
  std::vector<Cell> cells;
  for (size_t f = 0; f < fractions.size(); ++f)
    for (size_t t = 0; t < corpora.size(); ++t)
      for (size_t v = 0; v < cfg.variants.size(); ++v) cells.push_back({f, t, v});

  std::vector<CellOutput> outputs(cells.size());

  auto compute_cell = [&](const Cell& cell, CellOutput& out) {
    const std::string& target = corpora[cell.target_idx].domain;
    const VariantKind kind = cfg.variants[cell.variant_idx];
    const double fraction = fractions[cell.frac_idx];
    const std::string frac_tag = std::to_string(cell.frac_idx);
    try {
      const uint64_t split_seed =
          derive_seed(derive_seed(cfg.seed, "split/" + target), frac_tag);
      SplitPools pools = make_split(corpora, target, fraction, split_seed);
      if (cfg.mode == CampaignMode::upper) {
        // Upper bound: the target's own train split joins the pool.
        const DomainCorpus* tc = find_domain(corpora, target);
        SplitCaps caps;
        const size_t keep = static_cast<size_t>(
            std::ceil(fraction * static_cast<double>(tc->train.size())));
        if (keep < tc->train.size()) caps.train = keep;
        DomainCorpus sampled = downsample(*tc, caps, derive_seed(split_seed, "upper"));
        pools.train.insert(pools.train.end(), sampled.train.begin(), sampled.train.end());
      }

      const uint64_t cell_seed = derive_seed(derive_seed(cfg.seed, "target/" + target),
                                             std::string(variant_name(kind)) + "/" + frac_tag);
      ModelConfig mc;
      mc.kind = kind;
      mc.schema = schema;
      mc.source_domains = pools.plan.source_domains;
      mc.hn_layers = cfg.train.hn_layers;
      mc.k = cfg.train.drf.k;
      mc.generator_mode = cfg.train.generator_mode;
      mc.trainable_embeddings = cfg.train.trainable_embeddings;
      mc.max_tokens = cfg.train.max_tokens;
      mc.seed = cell_seed;
      TaskModel model = make_task_model(mc, table);
      TrainConfig tcfg = cfg.train;
      tcfg.seed = cell_seed;
      train(model, pools, tcfg);

      if (cfg.mode == CampaignMode::seen) {
        // Seen-domain evaluation: mean metric over the source dev splits.
        const auto groups = regroup_by_domain({}, pools.dev);
        double sum = 0.0;
        size_t counted = 0;
        for (const auto& g : groups) {
          if (g.dev.empty()) continue;
          sum += evaluate_model(model, g.dev);
          ++counted;
        }
        out.value = counted ? sum / static_cast<double>(counted) : 0.0;
        out.n_test = pools.dev.size();
      } else {
        std::vector<std::string> golds;
        golds.reserve(pools.test.size());
        out.preds.reserve(pools.test.size());
        for (const auto& ex : pools.test) {
          Prediction pred = predict(model, ex);
          out.preds.push_back(pred.label);
          golds.push_back(ex.label);
          if (kind == VariantKind::HyperPADA && pred.classifier)
            out.classifiers.push_back(std::move(*pred.classifier));
        }
        out.value = metric_value(metrics(out.preds, golds, schema.labels), schema.metric);
        out.n_test = pools.test.size();
      }
    } catch (const std::exception& e) {
      out.failed = true;
      out.error = e.what();
    }
  };

  const int jobs = std::max(1, cfg.jobs);
  if (jobs == 1) {
    for (size_t i = 0; i < cells.size(); ++i) compute_cell(cells[i], outputs[i]);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> workers;
    for (int w = 0; w < jobs; ++w)
      workers.emplace_back([&] {
        for (;;) {
          const size_t i = next.fetch_add(1);
          if (i >= cells.size()) break;
          compute_cell(cells[i], outputs[i]);
        }
      });
    for (auto& w : workers) w.join();
  }

  CampaignResult result;
  result.report.metric = schema.metric;
  result.report.config_echo = echo_config(cfg, schema);
  for (const char* note : kSubstitutionNotes) result.report.substitutions.push_back(note);

  auto cell_at = [&](size_t f, size_t t, size_t v) -> const CellOutput& {
    return outputs[(f * corpora.size() + t) * cfg.variants.size() + v];
  };

  for (size_t i = 0; i < cells.size(); ++i) {
    const Cell& cell = cells[i];
    EvalRow row;
    row.target = corpora[cell.target_idx].domain;
    row.variant = cfg.variants[cell.variant_idx];
    row.fraction = fractions[cell.frac_idx];
    row.value = outputs[i].value;
    row.n_test = outputs[i].n_test;
    row.failed = outputs[i].failed;
    row.error = outputs[i].error;
    result.report.rows.push_back(row);
  }

  // Significance marks on hyper-pada rows (single-fraction modes with a
  // target test evaluation).
  const bool marks_apply = cfg.mode == CampaignMode::standard || cfg.mode == CampaignMode::upper;
  auto variant_pos = [&](VariantKind k) -> int {
    for (size_t v = 0; v < cfg.variants.size(); ++v)
      if (cfg.variants[v] == k) return static_cast<int>(v);
    return -1;
  };
  const int hp = variant_pos(VariantKind::HyperPADA);
  if (marks_apply && hp >= 0) {
    const MetricFn f1_fn = [&](const std::vector<std::string>& p,
                               const std::vector<std::string>& g) {
      return metrics(p, g, schema.labels).macro_f1;
    };
    for (size_t f = 0; f < fractions.size(); ++f) {
      for (size_t t = 0; t < corpora.size(); ++t) {
        const CellOutput& hp_cell = cell_at(f, t, static_cast<size_t>(hp));
        if (hp_cell.failed) continue;
        std::vector<std::string> golds;
        const std::string& target = corpora[t].domain;
        const DomainCorpus* tc = find_domain(corpora, target);
        for (const auto& ex : tc->test) golds.push_back(ex.label);
        if (golds.size() != hp_cell.preds.size()) continue;

        struct Group {
          char mark;
          std::vector<VariantKind> members;
        };
        const Group groups[] = {
            {'e', {VariantKind::NoDA, VariantKind::MoEIndAvg, VariantKind::MoEIndAttn,
                   VariantKind::MoEAvg}},
            {'p', {VariantKind::PADALite}},
            {'h', {VariantKind::HyperDN, VariantKind::HyperDRF}},
        };
        std::string marks;
        for (const auto& group : groups) {
          const CellOutput* best = nullptr;
          for (VariantKind member : group.members) {
            const int v = variant_pos(member);
            if (v < 0) continue;
            const CellOutput& c = cell_at(f, t, static_cast<size_t>(v));
            if (c.failed || c.preds.size() != golds.size()) continue;
            if (!best || c.value > best->value) best = &c;
          }
          if (!best) continue;
          const double p =
              schema.metric == Metric::accuracy
                  ? mcnemar(hp_cell.preds, best->preds, golds)
                  : bootstrap_test(f1_fn, hp_cell.preds, best->preds, golds, 1000,
                                   derive_seed(cfg.seed, "bootstrap/" + target));
          if (p < 0.05) marks.push_back(group.mark);
        }
        for (auto& row : result.report.rows)
          if (row.target == target && row.variant == VariantKind::HyperPADA &&
              row.fraction == fractions[f])
            row.sig_marks = marks;
      }
    }
  }

  // Per-variant averages over targets (per fraction), from non-failed rows.
  for (size_t f = 0; f < fractions.size(); ++f) {
    for (size_t v = 0; v < cfg.variants.size(); ++v) {
      double sum = 0.0;
      size_t count = 0;
      for (size_t t = 0; t < corpora.size(); ++t) {
        const CellOutput& c = cell_at(f, t, v);
        if (c.failed) continue;
        sum += c.value;
        ++count;
      }
      if (count)
        result.report.averages.push_back(
            {cfg.variants[v], fractions[f], sum / static_cast<double>(count)});
    }
  }

  // Diversity records: one per target where both hyper-pada and pada-lite
  // completed (single-fraction target-test modes).
  const int pl = variant_pos(VariantKind::PADALite);
  if (marks_apply && hp >= 0 && pl >= 0) {
    for (size_t t = 0; t < corpora.size(); ++t) {
      const CellOutput& hp_cell = cell_at(0, t, static_cast<size_t>(hp));
      const CellOutput& pl_cell = cell_at(0, t, static_cast<size_t>(pl));
      if (hp_cell.failed || pl_cell.failed || hp_cell.classifiers.size() < 2) continue;
      DiversityRecord rec;
      rec.target = corpora[t].domain;
      rec.diversity = weight_diversity(hp_cell.classifiers);
      rec.improvement = hp_cell.value - pl_cell.value;
      result.diversity.push_back(rec);
    }
    if (result.diversity.size() >= 3)
      result.diversity_correlation = correlations(result.diversity);
  }

  return result;
}

std::string report_to_csv(const CampaignResult& result) {
  std::string out = "# hyperadapt campaign report\n";
  for (const auto& [k, v] : result.report.config_echo) out += "# config: " + k + "=" + v + "\n";
  for (const auto& s : result.report.substitutions) out += "# substitution: " + s + "\n";
  out += "target,variant,fraction,metric,value,n_test,status,significance\n";
  const char* metric = metric_name(result.report.metric);
  for (const auto& row : result.report.rows) {
    out += row.target + "," + variant_name(row.variant) + "," + fmt(row.fraction, "%.2f") + "," +
           metric + ",";
    out += row.failed ? "" : fmt(row.value);
    out += "," + std::to_string(row.n_test) + "," + (row.failed ? "failed" : "ok") + "," +
           row.sig_marks + "\n";
  }
  for (const auto& avg : result.report.averages) {
    out += std::string("(average),") + variant_name(avg.variant) + "," +
           fmt(avg.fraction, "%.2f") + "," + metric + "," + fmt(avg.value) + ",0,ok,\n";
  }
  return out;
}

std::string diversity_to_csv(const CampaignResult& result) {
  std::string out = "# hyperadapt diversity records\n";
  out += "target,diversity,improvement\n";
  for (const auto& rec : result.diversity)
    out += rec.target + "," + fmt(rec.diversity) + "," + fmt(rec.improvement) + "\n";
  const auto& cs = result.diversity_correlation;
  out += "# pearson=" + (cs.pearson ? fmt(*cs.pearson) : "undefined") + "\n";
  out += "# spearman=" + (cs.spearman ? fmt(*cs.spearman) : "undefined") + "\n";
  return out;
}

std::string report_to_markdown(const CampaignResult& result) {
  std::string out = "# Campaign report\n\n";
  out += "## Configuration\n\n";
  for (const auto& [k, v] : result.report.config_echo) out += "- " + k + ": " + v + "\n";
  out += "\n## Substitutions\n\n";
  for (const auto& s : result.report.substitutions) out += "- " + s + "\n";

  // One table per fraction: variants as rows, targets as columns.
  std::vector<double> fracs;
  std::vector<std::string> targets;
  std::vector<VariantKind> variants;
  for (const auto& row : result.report.rows) {
    if (std::find(fracs.begin(), fracs.end(), row.fraction) == fracs.end())
      fracs.push_back(row.fraction);
    if (std::find(targets.begin(), targets.end(), row.target) == targets.end())
      targets.push_back(row.target);
    if (std::find(variants.begin(), variants.end(), row.variant) == variants.end())
      variants.push_back(row.variant);
  }
  const char* metric = metric_name(result.report.metric);
  for (double frac : fracs) {
    out += "\n## Results (" + std::string(metric) + ", fraction " + fmt(frac, "%.2f") + ")\n\n";
    out += "| variant |";
    for (const auto& t : targets) out += " " + t + " |";
    out += " avg |\n|---|";
    for (size_t i = 0; i <= targets.size(); ++i) out += "---|";
    out += "\n";
    for (VariantKind v : variants) {
      out += "| " + std::string(variant_name(v)) + " |";
      for (const auto& t : targets) {
        const EvalRow* found = nullptr;
        for (const auto& row : result.report.rows)
          if (row.fraction == frac && row.variant == v && row.target == t) found = &row;
        if (!found) {
          out += " - |";
        } else if (found->failed) {
          out += " (failed) |";
        } else {
          out += " " + fmt(found->value, "%.4f");
          if (!found->sig_marks.empty()) out += " ^" + found->sig_marks;
          out += " |";
        }
      }
      const AverageRow* avg = nullptr;
      for (const auto& a : result.report.averages)
        if (a.fraction == frac && a.variant == v) avg = &a;
      out += avg ? " " + fmt(avg->value, "%.4f") + " |\n" : " - |\n";
    }
  }
  bool any_failed = false;
  for (const auto& row : result.report.rows) any_failed |= row.failed;
  if (any_failed) {
    out += "\n## Failed cells\n\n";
    for (const auto& row : result.report.rows)
      if (row.failed)
        out += "- " + row.target + " / " + variant_name(row.variant) + ": " + row.error + "\n";
  }
  if (!result.diversity.empty()) {
    out += "\n## Weight diversity (hyper-pada vs pada-lite)\n\n";
    out += "| target | diversity | improvement |\n|---|---|---|\n";
    for (const auto& rec : result.diversity)
      out += "| " + rec.target + " | " + fmt(rec.diversity) + " | " + fmt(rec.improvement) +
             " |\n";
    const auto& cs = result.diversity_correlation;
    out += "\nPearson: " + (cs.pearson ? fmt(*cs.pearson) : "undefined") +
           ", Spearman: " + (cs.spearman ? fmt(*cs.spearman) : "undefined") + "\n";
  }
  return out;
}

void write_campaign_outputs(const CampaignResult& result, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream f(out_dir + "/" + name, std::ios::binary);
    if (!f) throw DataError("cannot write " + out_dir + "/" + name);
    f << content;
  };
  write("report.csv", report_to_csv(result));
  write("report.md", report_to_markdown(result));
  write("diversity.csv", diversity_to_csv(result));
  nlohmann::ordered_json cfg;
  for (const auto& [k, v] : result.report.config_echo) cfg[k] = v;
  write("config.json", cfg.dump(2) + "\n");
}

}  // namespace hyperadapt
