#include "hyperadapt/checkpoint.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "hyperadapt/errors.hpp"

namespace hyperadapt {

namespace {

using TensorList = std::vector<std::pair<std::string, Eigen::MatrixXd*>>;

void collect_encoder(Encoder& enc, const std::string& prefix, TensorList& out) {
  out.emplace_back(prefix + "encoder/embedding", &enc.embedding.data());
  out.emplace_back(prefix + "encoder/w1", &enc.w1.data());
  out.emplace_back(prefix + "encoder/b1", &enc.b1.data());
  out.emplace_back(prefix + "encoder/w2", &enc.w2.data());
  out.emplace_back(prefix + "encoder/b2", &enc.b2.data());
}

void collect_model(TaskModel& model, const std::string& prefix, TensorList& out) {
  if (model.encoder) collect_encoder(*model.encoder, prefix, out);
  if (model.hn) {
    for (size_t i = 0; i < model.hn->trunk_w.size(); ++i) {
      out.emplace_back(prefix + "hn/trunk" + std::to_string(i) + "_w",
                       &model.hn->trunk_w[i].data());
      out.emplace_back(prefix + "hn/trunk" + std::to_string(i) + "_b",
                       &model.hn->trunk_b[i].data());
    }
    out.emplace_back(prefix + "hn/weight_w", &model.hn->weight_w.data());
    out.emplace_back(prefix + "hn/weight_b", &model.hn->weight_b.data());
    out.emplace_back(prefix + "hn/bias_w", &model.hn->bias_w.data());
    out.emplace_back(prefix + "hn/bias_b", &model.hn->bias_b.data());
    out.emplace_back(prefix + "hn/unk", &model.hn->unk.data());
  }
  if (model.cls) {
    out.emplace_back(prefix + "cls/w", &model.cls->W.data());
    out.emplace_back(prefix + "cls/b", &model.cls->b.data());
  }
  if (model.generator && model.generator->learned) {
    LearnedGenerator& lg = *model.generator->learned;
    out.emplace_back(prefix + "gen/scorer_w", &lg.scorer_w.data());
    out.emplace_back(prefix + "gen/scorer_b", &lg.scorer_b.data());
    out.emplace_back(prefix + "gen/domain_w", &lg.domain_w.data());
    out.emplace_back(prefix + "gen/domain_b", &lg.domain_b.data());
  }
  for (auto& expert : model.experts)
    collect_model(expert, prefix + "expert/" + expert.cfg.source_domains.at(0) + "/", out);
  if (model.general) collect_model(*model.general, prefix + "general/", out);
}

nlohmann::ordered_json drf_sets_json(const std::vector<DrfSet>& sets) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& set : sets) {
    nlohmann::ordered_json js;
    js["domain"] = set.domain;
    nlohmann::ordered_json entries = nlohmann::ordered_json::array();
    for (const auto& e : set.entries) {
      nlohmann::ordered_json je;
      je["word"] = e.word;
      je["mi"] = e.mi;
      je["count_in"] = e.count_in;
      je["count_out"] = e.count_out;
      entries.push_back(je);
    }
    js["entries"] = entries;
    arr.push_back(js);
  }
  return arr;
}

std::vector<DrfSet> drf_sets_from_json(const nlohmann::json& arr) {
  std::vector<DrfSet> sets;
  for (const auto& js : arr) {
    DrfSet set;
    set.domain = js.at("domain").get<std::string>();
    for (const auto& je : js.at("entries")) {
      DrfEntry e;
      e.word = je.at("word").get<std::string>();
      e.mi = je.at("mi").get<double>();
      e.count_in = je.at("count_in").get<long>();
      e.count_out = je.at("count_out").get<long>();
      set.entries.push_back(std::move(e));
    }
    sets.push_back(std::move(set));
  }
  return sets;
}

}  // namespace

void save_model(TaskModel& model, const std::string& prefix,
                const std::vector<std::pair<std::string, std::string>>& config_echo) {
  Eigen::MatrixXd static_table = model.table->vectors;
  TensorList tensors;
  tensors.emplace_back("static/table", &static_table);
  collect_model(model, "", tensors);

  nlohmann::ordered_json manifest;
  manifest["format"] = "hyperadapt-checkpoint/1";
  manifest["variant"] = variant_name(model.cfg.kind);
  manifest["schema"] = {{"labels", model.cfg.schema.labels},
                        {"metric", metric_name(model.cfg.schema.metric)}};
  manifest["source_domains"] = model.cfg.source_domains;
  manifest["dim"] = model.table->dim;
  manifest["hn_layers"] = model.cfg.hn_layers;
  manifest["k"] = model.cfg.k;
  manifest["generator_mode"] = generator_mode_name(model.cfg.generator_mode);
  manifest["trainable_embeddings"] = model.cfg.trainable_embeddings;
  manifest["max_tokens"] = model.cfg.max_tokens;
  manifest["seed"] = model.cfg.seed;
  manifest["static_vocab"] = model.table->words;
  if (model.generator) manifest["drf_sets"] = drf_sets_json(model.generator->drf_sets);
  if (model.moe_weights.size() > 0) {
    std::vector<double> w(model.moe_weights.data(),
                          model.moe_weights.data() + model.moe_weights.size());
    manifest["moe_weights"] = w;
  }
  std::vector<std::string> expert_domains;
  for (const auto& e : model.experts) expert_domains.push_back(e.cfg.source_domains.at(0));
  if (!expert_domains.empty()) manifest["experts"] = expert_domains;
  manifest["has_general"] = static_cast<bool>(model.general);
  nlohmann::ordered_json echo;
  for (const auto& [k, v] : config_echo) echo[k] = v;
  manifest["config_echo"] = echo;

  const std::string bin_name = std::filesystem::path(prefix).filename().string() + ".bin";
  manifest["data_file"] = bin_name;
  nlohmann::ordered_json tensor_meta = nlohmann::ordered_json::array();
  size_t offset = 0;
  for (const auto& [name, mat] : tensors) {
    nlohmann::ordered_json tm;
    tm["name"] = name;
    tm["rows"] = mat->rows();
    tm["cols"] = mat->cols();
    tm["offset"] = offset;
    tensor_meta.push_back(tm);
    offset += static_cast<size_t>(mat->size()) * sizeof(double);
  }
  manifest["tensors"] = tensor_meta;

  std::ofstream bin(prefix + ".bin", std::ios::binary);
  if (!bin) throw DataError("cannot write checkpoint data: " + prefix + ".bin");
  for (const auto& [name, mat] : tensors) {
    for (Eigen::Index r = 0; r < mat->rows(); ++r)
      for (Eigen::Index c = 0; c < mat->cols(); ++c) {
        const double v = (*mat)(r, c);
        bin.write(reinterpret_cast<const char*>(&v), sizeof(double));
      }
  }
  std::ofstream js(prefix + ".json", std::ios::binary);
  if (!js) throw DataError("cannot write checkpoint manifest: " + prefix + ".json");
  js << manifest.dump(2) << "\n";
}

TaskModel load_model(const std::string& manifest_path) {
  std::ifstream js(manifest_path);
  if (!js) throw DataError("cannot open checkpoint manifest: " + manifest_path);
  nlohmann::json manifest;
  try {
    js >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint manifest parse error: " + std::string(e.what()));
  }
  if (manifest.value("format", "") != std::string("hyperadapt-checkpoint/1"))
    throw DataError("unsupported checkpoint format in " + manifest_path);

  const std::string bin_path =
      (std::filesystem::path(manifest_path).parent_path() /
       manifest.at("data_file").get<std::string>())
          .string();
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw DataError("cannot open checkpoint data: " + bin_path);

  // Pull every tensor into memory first; the model is wired up afterwards.
  std::map<std::string, Eigen::MatrixXd> loaded;
  for (const auto& tm : manifest.at("tensors")) {
    const std::string name = tm.at("name").get<std::string>();
    const Eigen::Index rows = tm.at("rows").get<Eigen::Index>();
    const Eigen::Index cols = tm.at("cols").get<Eigen::Index>();
    Eigen::MatrixXd mat(rows, cols);
    bin.seekg(static_cast<std::streamoff>(tm.at("offset").get<size_t>()));
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) {
        double v = 0.0;
        bin.read(reinterpret_cast<char*>(&v), sizeof(double));
        if (!bin) throw DataError("checkpoint data truncated at tensor " + name);
        mat(r, c) = v;
      }
    loaded.emplace(name, std::move(mat));
  }

  ModelConfig mc;
  mc.kind = parse_variant(manifest.at("variant").get<std::string>());
  mc.schema.labels = manifest.at("schema").at("labels").get<std::vector<std::string>>();
  mc.schema.metric = parse_metric(manifest.at("schema").at("metric").get<std::string>());
  mc.source_domains = manifest.at("source_domains").get<std::vector<std::string>>();
  mc.hn_layers = manifest.at("hn_layers").get<int>();
  mc.k = manifest.at("k").get<int>();
  mc.generator_mode = parse_generator_mode(manifest.at("generator_mode").get<std::string>());
  mc.trainable_embeddings = manifest.at("trainable_embeddings").get<bool>();
  mc.max_tokens = manifest.at("max_tokens").get<int>();
  mc.seed = manifest.at("seed").get<uint64_t>();

  auto table = std::make_shared<EmbeddingTable>();
  table->dim = manifest.at("dim").get<int>();
  table->words = manifest.at("static_vocab").get<std::vector<std::string>>();
  for (size_t i = 0; i < table->words.size(); ++i)
    table->index.emplace(table->words[i], static_cast<int>(i));
  auto st = loaded.find("static/table");
  if (st == loaded.end()) throw DataError("checkpoint missing tensor: static/table");
  if (st->second.rows() != static_cast<Eigen::Index>(table->words.size()) ||
      st->second.cols() != table->dim)
    throw DataError("checkpoint static table shape mismatch");
  table->vectors = st->second;
  loaded.erase(st);

  TaskModel model = make_task_model(mc, table);
  if (manifest.contains("drf_sets")) {
    model.generator = make_signature_generator(mc.generator_mode,
                                               drf_sets_from_json(manifest.at("drf_sets")), mc.k,
                                               table->dim, mc.seed);
  }
  if (manifest.contains("experts")) {
    for (const auto& domain : manifest.at("experts").get<std::vector<std::string>>()) {
      ModelConfig ec;
      ec.kind = VariantKind::NoDA;
      ec.schema = mc.schema;
      ec.source_domains = {domain};
      ec.trainable_embeddings = mc.trainable_embeddings;
      ec.max_tokens = mc.max_tokens;
      ec.seed = derive_seed(mc.seed, "expert/" + domain);
      model.experts.push_back(make_task_model(ec, table));
    }
  }
  if (manifest.value("has_general", false)) {
    ModelConfig gc;
    gc.kind = VariantKind::NoDA;
    gc.schema = mc.schema;
    gc.source_domains = mc.source_domains;
    gc.trainable_embeddings = mc.trainable_embeddings;
    gc.max_tokens = mc.max_tokens;
    gc.seed = derive_seed(mc.seed, "expert/general");
    model.general = std::make_unique<TaskModel>(make_task_model(gc, table));
  }
  if (manifest.contains("moe_weights")) {
    const auto w = manifest.at("moe_weights").get<std::vector<double>>();
    model.moe_weights = Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
  }

  TensorList tensors;
  collect_model(model, "", tensors);
  for (auto& [name, mat] : tensors) {
    auto it = loaded.find(name);
    if (it == loaded.end()) throw DataError("checkpoint missing tensor: " + name);
    if (it->second.rows() != mat->rows() || it->second.cols() != mat->cols())
      throw DataError("checkpoint tensor " + name + " has shape " +
                      std::to_string(it->second.rows()) + "x" +
                      std::to_string(it->second.cols()) + ", expected " +
                      std::to_string(mat->rows()) + "x" + std::to_string(mat->cols()));
    *mat = it->second;
    loaded.erase(it);
  }
  if (!loaded.empty())
    throw DataError("checkpoint tensor has no slot: " + loaded.begin()->first);
  return model;
}

}  // namespace hyperadapt
