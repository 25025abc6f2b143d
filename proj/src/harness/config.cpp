#include "lossreg/config.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

namespace lossreg::config {

using nlohmann::json;
using harness::DatasetKind;
using harness::ExperimentConfig;
using harness::LrSchedule;

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"dataset",
       {"kind", "name", "path", "target_column", "task", "images", "labels", "test_images", "test_labels", "limit",
        "samples", "features", "informative", "noise_std", "classes", "separation", "seed"}},
      {"network", {"hidden", "dropout_rate", "l2_lambda"}},
      {"regularizer", {"method", "alpha_pct", "sigma", "rho", "noise", "schedule", "anneal", "confidence_threshold"}},
      {"optimizer", {"kind", "lr", "momentum", "beta1", "beta2", "eps", "schedule"}},
      {"protocol", {"epochs", "batch_size", "runs", "seed", "train_fraction"}},
  };
  return keys;
}

const std::set<std::string> kTopLevelScalars = {"label"};

void check_keys(const json& doc) {
  if (!doc.is_object()) throw ConstraintError("config must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (kTopLevelScalars.count(key)) continue;
    const auto section = schema().find(key);
    if (section == schema().end()) throw UnknownKeyError(fmt::format("unknown config key '{}'", key));
    if (!value.is_object()) throw ConstraintError(fmt::format("config section '{}' must be an object", key));
    for (const auto& [field, _] : value.items())
      if (!section->second.count(field)) throw UnknownKeyError(fmt::format("unknown config key '{}.{}'", key, field));
  }
}

std::size_t line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

class Reader {
 public:
  Reader(const json& doc, std::string section) : section_(std::move(section)) {
    if (doc.contains(section_)) obj_ = &doc.at(section_);
  }

  const json* find(const char* key) const {
    if (obj_ == nullptr || !obj_->contains(key)) return nullptr;
    return &obj_->at(key);
  }

  void real(const char* key, double& out) const {
    if (const auto* v = find(key)) {
      if (!v->is_number()) fail(key, "a number");
      out = v->get<double>();
    }
  }
  template <typename Int>
  void count(const char* key, Int& out) const {
    if (const auto* v = find(key)) {
      if (!v->is_number_integer() || v->get<long long>() < 0) fail(key, "a non-negative integer");
      out = static_cast<Int>(v->get<long long>());
    }
  }
  void text(const char* key, std::string& out) const {
    if (const auto* v = find(key)) {
      if (!v->is_string()) fail(key, "a string");
      out = v->get<std::string>();
    }
  }
  void path(const char* key, std::filesystem::path& out) const {
    std::string s = out.string();
    text(key, s);
    out = s;
  }
  void sizes(const char* key, std::vector<std::size_t>& out) const {
    if (const auto* v = find(key)) {
      if (!v->is_array()) fail(key, "an array of positive integers");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number_integer() || e.get<long long>() < 1) fail(key, "an array of positive integers");
        out.push_back(static_cast<std::size_t>(e.get<long long>()));
      }
    }
  }
  template <typename Enum, typename Parse>
  void choice(const char* key, Enum& out, Parse parse) const {
    std::string s;
    text(key, s);
    if (s.empty()) return;
    try {
      out = parse(s);
    } catch (const ConfigError& e) {
      throw ConstraintError(fmt::format("{}.{}: {}", section_, key, e.what()));
    }
  }

 private:
  [[noreturn]] void fail(const char* key, const char* expected) const {
    throw ConstraintError(fmt::format("{}.{} must be {}", section_, key, expected));
  }

  std::string section_;
  const json* obj_ = nullptr;
};

DatasetKind parse_dataset_kind(const std::string& s) {
  if (s == "csv") return DatasetKind::csv;
  if (s == "idx") return DatasetKind::idx;
  if (s == "synthetic_regression") return DatasetKind::synthetic_regression;
  if (s == "synthetic_classification") return DatasetKind::synthetic_classification;
  throw ConfigError(fmt::format("unknown dataset kind '{}'", s));
}

const char* to_string(DatasetKind k) {
  switch (k) {
    case DatasetKind::csv: return "csv";
    case DatasetKind::idx: return "idx";
    case DatasetKind::synthetic_regression: return "synthetic_regression";
    case DatasetKind::synthetic_classification: return "synthetic_classification";
  }
  return "?";
}

nn::OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "adam") return nn::OptimizerKind::adam;
  if (s == "sgd_momentum") return nn::OptimizerKind::sgd_momentum;
  throw ConfigError(fmt::format("unknown optimizer '{}'", s));
}

LrSchedule parse_lr_schedule(const std::string& s) {
  if (s == "constant") return LrSchedule::constant;
  if (s == "step_decay") return LrSchedule::step_decay;
  throw ConfigError(fmt::format("unknown learning-rate schedule '{}'", s));
}

void apply_override(json& doc, const Override& ov) {
  const auto dot = ov.first.find('.');
  if (dot == std::string::npos) {
    if (!kTopLevelScalars.count(ov.first)) throw UnknownKeyError(fmt::format("unknown override key '{}'", ov.first));
    doc[ov.first] = ov.second;
    return;
  }
  const auto section = ov.first.substr(0, dot);
  const auto field = ov.first.substr(dot + 1);
  const auto it = schema().find(section);
  if (it == schema().end() || !it->second.count(field))
    throw UnknownKeyError(fmt::format("unknown override key '{}'", ov.first));
  // Values that parse as JSON (numbers, booleans, arrays) keep their type;
  // anything else is taken as a bare string.
  json value = json::parse(ov.second, nullptr, false);
  if (value.is_discarded()) value = ov.second;
  doc[section][field] = std::move(value);
}

ExperimentConfig from_json(const json& doc, const std::filesystem::path& base_dir) {
  check_keys(doc);
  const Reader ds(doc, "dataset");

  DatasetKind kind = DatasetKind::synthetic_regression;
  ds.choice("kind", kind, parse_dataset_kind);
  data::Task task = kind == DatasetKind::idx || kind == DatasetKind::synthetic_classification
                        ? data::Task::classification
                        : data::Task::regression;
  if (kind == DatasetKind::csv) ds.choice("task", task, data::parse_task);

  ExperimentConfig cfg = ExperimentConfig::defaults_for(task);
  auto& src = cfg.dataset;
  src.kind = kind;
  src.task = task;
  src.base_dir = base_dir;
  ds.text("name", src.name);
  ds.path("path", src.path);
  ds.text("target_column", src.target_column);
  ds.path("images", src.images);
  ds.path("labels", src.labels);
  ds.path("test_images", src.test_images);
  ds.path("test_labels", src.test_labels);
  ds.count("limit", src.limit);
  ds.count("samples", src.samples);
  ds.count("features", src.features);
  ds.count("informative", src.informative);
  ds.real("noise_std", src.noise_std);
  ds.count("classes", src.classes);
  ds.real("separation", src.separation);
  ds.count("seed", src.data_seed);

  const Reader net(doc, "network");
  net.sizes("hidden", cfg.network.hidden);
  net.real("dropout_rate", cfg.network.dropout_rate);
  net.real("l2_lambda", cfg.network.l2_lambda);

  const Reader reg(doc, "regularizer");
  reg.choice("method", cfg.regularizer.method, disturb::parse_method);
  reg.real("alpha_pct", cfg.regularizer.alpha_pct);
  reg.real("sigma", cfg.regularizer.sigma);
  reg.real("rho", cfg.regularizer.rho);
  reg.choice("noise", cfg.regularizer.noise, disturb::parse_noise_kind);
  reg.choice("schedule", cfg.regularizer.schedule, disturb::parse_schedule);
  reg.choice("anneal", cfg.regularizer.anneal_target, disturb::parse_anneal_target);
  reg.real("confidence_threshold", cfg.regularizer.confidence_threshold);

  const Reader opt(doc, "optimizer");
  opt.choice("kind", cfg.optimizer.kind, parse_optimizer);
  opt.real("lr", cfg.optimizer.lr);
  opt.real("momentum", cfg.optimizer.momentum);
  opt.real("beta1", cfg.optimizer.beta1);
  opt.real("beta2", cfg.optimizer.beta2);
  opt.real("eps", cfg.optimizer.eps);
  opt.choice("schedule", cfg.optimizer.schedule, parse_lr_schedule);

  const Reader proto(doc, "protocol");
  proto.count("epochs", cfg.epochs);
  proto.count("batch_size", cfg.batch_size);
  proto.count("runs", cfg.runs);
  proto.count("seed", cfg.base_seed);
  proto.real("train_fraction", cfg.train_fraction);

  if (doc.contains("label")) {
    if (!doc.at("label").is_string()) throw ConstraintError("label must be a string");
    cfg.label = doc.at("label").get<std::string>();
  }
  cfg.validate();
  return cfg;
}

}  // namespace

Override parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError(fmt::format("override '{}' is not key=value", text));
  return {text.substr(0, eq), text.substr(eq + 1)};
}

ExperimentConfig parse_config_text(const std::string& text, const std::vector<Override>& overrides,
                                   const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto line = line_of(text, e.byte == 0 ? 0 : e.byte - 1);
    throw SyntaxError(fmt::format("config syntax error at line {}: {}", line, e.what()), line);
  }
  check_keys(doc);
  for (const auto& ov : overrides) apply_override(doc, ov);
  return from_json(doc, base_dir);
}

ExperimentConfig parse_config(const std::filesystem::path& path, const std::vector<Override>& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open config '{}'", path.string()));
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_config_text(text, overrides, path.parent_path());
}

std::string canonical_json(const ExperimentConfig& cfg) {
  json doc;  // std::map-backed: keys come out sorted
  const auto& src = cfg.dataset;
  json& ds = doc["dataset"];
  ds["kind"] = to_string(src.kind);
  ds["name"] = src.display_name();
  switch (src.kind) {
    case DatasetKind::csv:
      ds["path"] = src.path.generic_string();
      ds["target_column"] = src.target_column;
      ds["task"] = std::string(data::to_string(src.task));
      break;
    case DatasetKind::idx:
      ds["images"] = src.images.generic_string();
      ds["labels"] = src.labels.generic_string();
      ds["test_images"] = src.test_images.generic_string();
      ds["test_labels"] = src.test_labels.generic_string();
      break;
    case DatasetKind::synthetic_regression:
      ds["samples"] = src.samples;
      ds["features"] = src.features;
      ds["informative"] = src.informative;
      ds["noise_std"] = src.noise_std;
      ds["seed"] = src.data_seed;
      break;
    case DatasetKind::synthetic_classification:
      ds["samples"] = src.samples;
      ds["features"] = src.features;
      ds["classes"] = src.classes;
      ds["separation"] = src.separation;
      ds["seed"] = src.data_seed;
      break;
  }
  ds["limit"] = src.limit;

  doc["network"] = {{"hidden", cfg.network.hidden},
                    {"dropout_rate", cfg.network.dropout_rate},
                    {"l2_lambda", cfg.network.l2_lambda}};
  const auto& r = cfg.regularizer;
  doc["regularizer"] = {{"method", std::string(disturb::to_string(r.method))},
                        {"alpha_pct", r.alpha_pct},
                        {"sigma", r.sigma},
                        {"rho", r.rho},
                        {"noise", std::string(disturb::to_string(r.noise))},
                        {"schedule", std::string(disturb::to_string(r.schedule))},
                        {"anneal", std::string(disturb::to_string(r.anneal_target))},
                        {"confidence_threshold", r.confidence_threshold}};
  const auto& o = cfg.optimizer;
  doc["optimizer"] = {{"kind", o.kind == nn::OptimizerKind::adam ? "adam" : "sgd_momentum"},
                      {"lr", o.lr},
                      {"momentum", o.momentum},
                      {"beta1", o.beta1},
                      {"beta2", o.beta2},
                      {"eps", o.eps},
                      {"schedule", o.schedule == LrSchedule::constant ? "constant" : "step_decay"}};
  doc["protocol"] = {{"epochs", cfg.epochs},
                     {"batch_size", cfg.batch_size},
                     {"runs", cfg.runs},
                     {"seed", cfg.base_seed},
                     {"train_fraction", cfg.train_fraction}};
  doc["label"] = cfg.method_label();
  return doc.dump();
}

std::string config_digest(const ExperimentConfig& cfg) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_json(cfg)) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", hash);
}

}  // namespace lossreg::config
