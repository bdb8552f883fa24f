// hyperadapt command line: DRF extraction, signature annotation, training,
// prediction, and the leave-one-out evaluation campaign.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hyperadapt/checkpoint.hpp"
#include "hyperadapt/corpus.hpp"
#include "hyperadapt/drf.hpp"
#include "hyperadapt/errors.hpp"
#include "hyperadapt/eval.hpp"
#include "hyperadapt/gradsuite.hpp"
#include "hyperadapt/models.hpp"
#include "hyperadapt/text.hpp"
#include "hyperadapt/trainer.hpp"

namespace {

using namespace hyperadapt;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct CommonOpts {
  std::string data;
  std::string embeddings;
  std::vector<std::string> labels;
  std::string metric = "accuracy";
  uint64_t seed = 0;
  long cap_train = -1, cap_dev = -1, cap_test = -1;
  bool strict_caps = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool needs_embeddings) {
  cmd->add_option("--data", opts.data, "corpus JSONL file")->required();
  auto* emb = cmd->add_option("--embeddings", opts.embeddings, "embedding text file");
  if (needs_embeddings) emb->required();
  cmd->add_option("--labels", opts.labels, "label set (default: infer)")->delimiter(',');
  cmd->add_option("--metric", opts.metric, "accuracy|macro_f1")->default_val("accuracy");
  cmd->add_option("--seed", opts.seed, "PRNG seed")->default_val(0);
  cmd->add_option("--cap-train", opts.cap_train, "per-domain train cap")->default_val(-1);
  cmd->add_option("--cap-dev", opts.cap_dev, "per-domain dev cap")->default_val(-1);
  cmd->add_option("--cap-test", opts.cap_test, "per-domain test cap")->default_val(-1);
  cmd->add_flag("--strict-caps", opts.strict_caps, "error when a cap exceeds a split");
}

std::vector<DomainCorpus> load_and_cap(const CommonOpts& opts, TaskSchema& schema) {
  schema.labels = opts.labels;
  schema.metric = parse_metric(opts.metric);
  auto corpora = load_corpus(opts.data, schema);
  SplitCaps caps;
  if (opts.cap_train >= 0) caps.train = static_cast<size_t>(opts.cap_train);
  if (opts.cap_dev >= 0) caps.dev = static_cast<size_t>(opts.cap_dev);
  if (opts.cap_test >= 0) caps.test = static_cast<size_t>(opts.cap_test);
  caps.strict = opts.strict_caps;
  if (caps.train || caps.dev || caps.test)
    for (auto& corpus : corpora) corpus = downsample(corpus, caps, opts.seed);
  return corpora;
}

void add_train_opts(CLI::App* cmd, TrainConfig& tc) {
  cmd->add_option("--alpha-unk", tc.alpha_unk)->default_val(0.1);
  cmd->add_option("--lr", tc.lr)->default_val(1e-3);
  cmd->add_option("--batch-size", tc.batch_size)->default_val(16);
  cmd->add_option("--epochs-gen", tc.epochs_gen)->default_val(3);
  cmd->add_option("--epochs-disc", tc.epochs_disc)->default_val(5);
  cmd->add_option("--rho", tc.drf.rho)->default_val(1.5);
  cmd->add_option("--drf-top-l", tc.drf.top_l)->default_val(1000);
  cmd->add_option("--k", tc.drf.k)->default_val(5);
  cmd->add_option("--hn-layers", tc.hn_layers)->default_val(2);
  cmd->add_option("--max-tokens", tc.max_tokens)->default_val(128);
  cmd->add_option("--trials", tc.attn_trials)->default_val(100);
  std::string gen = "ranker";
  cmd->add_option_function<std::string>(
         "--generator", [&tc](const std::string& v) { tc.generator_mode = parse_generator_mode(v); },
         "ranker|learned")
      ->default_val("ranker");
  cmd->add_flag_function(
      "--freeze-embeddings",
      [&tc](int64_t count) { tc.trainable_embeddings = count == 0; },
      "freeze the encoder embedding matrix");
}

std::vector<std::pair<std::string, std::string>> echo_opts(const CLI::App* cmd) {
  std::vector<std::pair<std::string, std::string>> echo;
  for (const auto* opt : cmd->get_options()) {
    const std::string name = opt->get_lnames().empty() ? opt->get_name() : opt->get_lnames()[0];
    if (name == "help" || name == "config") continue;
    std::string value;
    if (!opt->results().empty()) {
      for (const auto& r : opt->results()) value += (value.empty() ? "" : "|") + r;
    } else {
      value = opt->get_default_str();
    }
    echo.emplace_back(name, value);
  }
  std::sort(echo.begin(), echo.end());
  return echo;
}

void write_config_sidecar(const std::string& path,
                          const std::vector<std::pair<std::string, std::string>>& echo) {
  nlohmann::ordered_json js;
  for (const auto& [k, v] : echo) js[k] = v;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write config echo: " + path);
  out << js.dump(2) << "\n";
}

// Plain key=value config file support: values become extra command-line
// arguments unless the same flag was given explicitly, so flags always win.
std::vector<std::string> expand_config_args(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  std::string config_path;
  for (size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
  }
  if (config_path.empty()) return args;

  std::ifstream in(config_path);
  if (!in) throw ConfigError("cannot open config file: " + config_path);
  std::set<std::string> given;
  for (const auto& a : args)
    if (a.rfind("--", 0) == 0) given.insert(a.substr(0, a.find('=')));

  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t h = line.find('#');
    if (h != std::string::npos) line = line.substr(0, h);
    const size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const size_t e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);
    const size_t eq = line.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError(config_path + " line " + std::to_string(line_no) +
                        ": expected key=value");
    const std::string key = "--" + line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (given.count(key)) continue;
    args.push_back(key);
    args.push_back(value);
  }
  return args;
}

// ---------------------------------------------------------------------------
// subcommand bodies
// ---------------------------------------------------------------------------

int cmd_extract_drfs(const CommonOpts& common, const std::string& target, double rho, int top_l,
                     const std::string& out_dir,
                     const std::vector<std::pair<std::string, std::string>>& echo) {
  TaskSchema schema;
  auto corpora = load_and_cap(common, schema);
  if (!target.empty()) {
    if (!find_domain(corpora, target)) throw DataError("target domain not present: " + target);
    std::vector<DomainCorpus> sources;
    for (auto& c : corpora)
      if (c.domain != target) sources.push_back(std::move(c));
    corpora = std::move(sources);
  }
  DrfConfig cfg;
  cfg.rho = rho;
  cfg.top_l = top_l;
  cfg.k = 1;  // extraction does not need a signature size
  std::filesystem::create_directories(out_dir);
  std::optional<EmbeddingTable> table;
  if (!common.embeddings.empty()) table = load_embeddings(common.embeddings);
  for (const auto& corpus : corpora) {
    const DrfSet set = build_drf_set(corpora, corpus.domain, cfg);
    save_drf_set(set, out_dir + "/" + corpus.domain + ".drf.jsonl");
    size_t covered = 0;
    if (table)
      for (const auto& e : set.entries) covered += table->contains(e.word) ? 1 : 0;
    std::printf("%s: %zu DRFs%s\n", corpus.domain.c_str(), set.entries.size(),
                table ? (" (" + std::to_string(covered) + " with embeddings)").c_str() : "");
  }
  write_config_sidecar(out_dir + "/config.json", echo);
  return kExitOk;
}

int cmd_annotate(const CommonOpts& common, const std::string& drf_dir, int k,
                 const std::string& out_path,
                 const std::vector<std::pair<std::string, std::string>>& echo) {
  TaskSchema schema;
  auto corpora = load_and_cap(common, schema);
  const EmbeddingTable table = load_embeddings(common.embeddings);

  std::map<std::string, DrfSet> sets;
  for (const auto& entry : std::filesystem::directory_iterator(drf_dir)) {
    if (entry.path().extension() != ".jsonl") continue;
    DrfSet set = load_drf_set(entry.path().string());
    sets.emplace(set.domain, std::move(set));
  }
  if (sets.empty()) throw DataError("no .jsonl DRF sets under " + drf_dir);

  size_t fallbacks = 0;
  for (auto& corpus : corpora) {
    auto it = sets.find(corpus.domain);
    if (it == sets.end()) throw DataError("no DRF set for domain " + corpus.domain);
    for (Split s : {Split::train, Split::dev, Split::test})
      for (auto& ex : corpus.split(s)) {
        Signature sig = annotate_signature(ex, it->second, table, k);
        if (sig.fallback) ++fallbacks;
        ex.signature = render_signature(sig);
      }
  }
  save_corpus(corpora, out_path);
  write_config_sidecar(out_path + ".config.json", echo);
  std::printf("annotated %s (%zu fallback signatures)\n", out_path.c_str(), fallbacks);
  return kExitOk;
}

int cmd_train(const CommonOpts& common, const std::string& variant, const std::string& target,
              double fraction, TrainConfig tc, const std::string& out_prefix,
              const std::vector<std::pair<std::string, std::string>>& echo) {
  TaskSchema schema;
  auto corpora = load_and_cap(common, schema);
  auto table = std::make_shared<EmbeddingTable>(load_embeddings(common.embeddings));
  tc.seed = common.seed;

  SplitPools pools = make_split(corpora, target, fraction, derive_seed(common.seed, "split"));
  ModelConfig mc;
  mc.kind = parse_variant(variant);
  mc.schema = schema;
  mc.source_domains = pools.plan.source_domains;
  mc.hn_layers = tc.hn_layers;
  mc.k = tc.drf.k;
  mc.generator_mode = tc.generator_mode;
  mc.trainable_embeddings = tc.trainable_embeddings;
  mc.max_tokens = tc.max_tokens;
  mc.seed = common.seed;
  TaskModel model = make_task_model(mc, table);

  TrainLog log = train(model, pools, tc);
  save_model(model, out_prefix, echo);
  write_train_log_csv(log, out_prefix + ".log.csv");
  std::printf("trained %s: best epoch %d (dev %s=%.4f), checkpoint %s.json\n", variant.c_str(),
              log.best_epoch, metric_name(schema.metric), log.best_dev_metric,
              out_prefix.c_str());
  return kExitOk;
}

int cmd_predict(const std::string& checkpoint, const std::string& data,
                const std::string& out_path,
                const std::vector<std::pair<std::string, std::string>>& echo) {
  TaskModel model = load_model(checkpoint);
  TaskSchema schema = model.cfg.schema;  // labels fixed by the checkpoint
  auto examples = load_examples(data, schema);

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw DataError("cannot write predictions: " + out_path);
  for (const auto& ex : examples) {
    Prediction pred = predict(model, ex);
    nlohmann::ordered_json rec;
    rec["id"] = ex.id;
    std::vector<double> probs(pred.probs.data(), pred.probs.data() + pred.probs.size());
    rec["probs"] = probs;
    rec["predicted_label"] = pred.label;
    if (pred.signature) rec["signature"] = render_signature(*pred.signature);
    out << rec.dump() << "\n";
  }
  write_config_sidecar(out_path + ".config.json", echo);
  std::printf("wrote %zu predictions to %s\n", examples.size(), out_path.c_str());
  return kExitOk;
}

int cmd_campaign(const CommonOpts& common, const std::vector<std::string>& variants,
                 const std::string& mode, double fraction, int jobs, TrainConfig tc,
                 const std::string& out_dir,
                 const std::vector<std::pair<std::string, std::string>>& echo) {
  TaskSchema schema;
  auto corpora = load_and_cap(common, schema);
  auto table = std::make_shared<EmbeddingTable>(load_embeddings(common.embeddings));

  CampaignConfig cc;
  cc.mode = parse_campaign_mode(mode);
  for (const auto& v : variants) cc.variants.push_back(parse_variant(v));
  cc.train = tc;
  cc.train_fraction = fraction;
  cc.seed = common.seed;
  cc.jobs = jobs;

  CampaignResult result = run_campaign(corpora, schema, table, cc);
  write_campaign_outputs(result, out_dir);
  write_config_sidecar(out_dir + "/cli_config.json", echo);

  size_t failed = 0;
  for (const auto& row : result.report.rows) failed += row.failed ? 1 : 0;
  std::printf("campaign complete: %zu cells (%zu failed), outputs under %s\n",
              result.report.rows.size(), failed, out_dir.c_str());
  return failed == 0 ? kExitOk : kExitNumeric;
}

int cmd_gradcheck(int instances, double tolerance, uint64_t seed) {
  GradSuiteResult result = run_gradient_suite(instances, tolerance, seed, true);
  std::printf("%s\n", result.all_pass ? "gradient suite: all checks passed"
                                      : "gradient suite: FAILURES detected");
  return result.all_pass ? kExitOk : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"example-conditioned hypernetwork domain adaptation toolkit"};
  app.require_subcommand(1);

  // extract-drfs
  CommonOpts drf_common;
  std::string drf_target, drf_out;
  double drf_rho = 1.5;
  int drf_top_l = 1000;
  auto* sc_drfs = app.add_subcommand("extract-drfs", "build per-domain DRF sets");
  add_common(sc_drfs, drf_common, false);
  sc_drfs->add_option("--target-domain", drf_target, "held-out domain to exclude");
  sc_drfs->add_option("--rho", drf_rho)->default_val(1.5);
  sc_drfs->add_option("--drf-top-l", drf_top_l)->default_val(1000);
  sc_drfs->add_option("--out", drf_out, "output directory")->required();
  std::string drf_cfg_file;
  sc_drfs->add_option("--config", drf_cfg_file, "key=value config file");

  // annotate
  CommonOpts ann_common;
  std::string ann_drfs, ann_out;
  int ann_k = 5;
  auto* sc_ann = app.add_subcommand("annotate", "attach DRF signatures to a corpus");
  add_common(sc_ann, ann_common, true);
  sc_ann->add_option("--drfs", ann_drfs, "directory of DRF set files")->required();
  sc_ann->add_option("--k", ann_k)->default_val(5);
  sc_ann->add_option("--out", ann_out, "output corpus file")->required();
  std::string ann_cfg_file;
  sc_ann->add_option("--config", ann_cfg_file, "key=value config file");

  // train
  CommonOpts train_common;
  std::string train_variant, train_target, train_out;
  double train_fraction = 1.0;
  TrainConfig train_tc;
  auto* sc_train = app.add_subcommand("train", "train one variant on a leave-one-out split");
  add_common(sc_train, train_common, true);
  sc_train
      ->add_option("--variant", train_variant,
                   "noda|hyper-dn|hyper-drf|hyper-pada|pada-lite|moe-ind-avg|moe-ind-attn|moe-avg")
      ->required();
  sc_train->add_option("--target-domain", train_target)->required();
  sc_train->add_option("--train-fraction", train_fraction)->default_val(1.0);
  add_train_opts(sc_train, train_tc);
  sc_train->add_option("--out", train_out, "checkpoint prefix")->required();
  std::string train_cfg_file;
  sc_train->add_option("--config", train_cfg_file, "key=value config file");

  // predict
  std::string pred_checkpoint, pred_data, pred_out;
  auto* sc_pred = app.add_subcommand("predict", "score a corpus with a checkpoint");
  sc_pred->add_option("--checkpoint", pred_checkpoint, "manifest .json path")->required();
  sc_pred->add_option("--data", pred_data)->required();
  sc_pred->add_option("--out", pred_out)->required();
  std::string pred_cfg_file;
  sc_pred->add_option("--config", pred_cfg_file, "key=value config file");

  // campaign
  CommonOpts camp_common;
  std::vector<std::string> camp_variants;
  std::string camp_mode = "standard", camp_out;
  double camp_fraction = 1.0;
  int camp_jobs = 1;
  TrainConfig camp_tc;
  auto* sc_camp = app.add_subcommand("campaign", "leave-one-out evaluation campaign");
  add_common(sc_camp, camp_common, true);
  sc_camp->add_option("--variants", camp_variants, "comma-separated variant list")
      ->delimiter(',')
      ->required();
  sc_camp->add_option("--mode", camp_mode, "standard|seen|upper|fractions")
      ->default_val("standard");
  sc_camp->add_option("--train-fraction", camp_fraction)->default_val(1.0);
  sc_camp->add_option("--jobs", camp_jobs, "parallel campaign cells")->default_val(1);
  add_train_opts(sc_camp, camp_tc);
  sc_camp->add_option("--out-dir", camp_out)->required();
  std::string camp_cfg_file;
  sc_camp->add_option("--config", camp_cfg_file, "key=value config file");

  // gradcheck
  int gc_instances = 4;
  double gc_tolerance = 1e-4;
  uint64_t gc_seed = 99;
  auto* sc_gc = app.add_subcommand("gradcheck", "composite finite-difference suite");
  sc_gc->add_option("--instances", gc_instances, "instances per variant")->default_val(4);
  sc_gc->add_option("--tolerance", gc_tolerance)->default_val(1e-4);
  sc_gc->add_option("--seed", gc_seed)->default_val(99);

  std::vector<std::string> args;
  try {
    args = expand_config_args(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  std::vector<const char*> argv2;
  argv2.reserve(args.size());
  for (const auto& a : args) argv2.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv2.size()), argv2.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (sc_drfs->parsed())
      return cmd_extract_drfs(drf_common, drf_target, drf_rho, drf_top_l, drf_out,
                              echo_opts(sc_drfs));
    if (sc_ann->parsed())
      return cmd_annotate(ann_common, ann_drfs, ann_k, ann_out, echo_opts(sc_ann));
    if (sc_train->parsed())
      return cmd_train(train_common, train_variant, train_target, train_fraction, train_tc,
                       train_out, echo_opts(sc_train));
    if (sc_pred->parsed())
      return cmd_predict(pred_checkpoint, pred_data, pred_out, echo_opts(sc_pred));
    if (sc_camp->parsed())
      return cmd_campaign(camp_common, camp_variants, camp_mode, camp_fraction, camp_jobs,
                          camp_tc, camp_out, echo_opts(sc_camp));
    if (sc_gc->parsed()) return cmd_gradcheck(gc_instances, gc_tolerance, gc_seed);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitConfig;
}
