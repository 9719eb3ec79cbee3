#include <cmath>
#include <fstream>
#include <functional>
#include <map>

#include "dmvcr/cli.hpp"
#include "dmvcr/errors.hpp"

namespace dmvcr {

using nlohmann::json;

namespace {

std::size_t read_count(const json& j, const std::string& key) {
  if (!j.is_number_integer()) throw ConfigError(key, "expected an integer, got " + j.dump());
  if (j.is_number_unsigned()) return j.get<std::size_t>();
  const auto v = j.get<std::int64_t>();
  if (v < 0) throw ConfigError(key, "expected a non-negative integer, got " + std::to_string(v));
  return static_cast<std::size_t>(v);
}

void read(const json& j, const std::string& key, std::size_t& out) { out = read_count(j, key); }

void read(const json& j, const std::string& key, double& out) {
  if (!j.is_number()) throw ConfigError(key, "expected a number, got " + j.dump());
  out = j.get<double>();
}

void read(const json& j, const std::string& key, bool& out) {
  if (!j.is_boolean()) throw ConfigError(key, "expected true or false, got " + j.dump());
  out = j.get<bool>();
}

void read(const json& j, const std::string& key, std::string& out) {
  if (!j.is_string()) throw ConfigError(key, "expected a string, got " + j.dump());
  out = j.get<std::string>();
}

void read(const json& j, const std::string& key, std::vector<std::uint64_t>& out) {
  if (!j.is_array()) throw ConfigError(key, "expected a list of integers, got " + j.dump());
  out.clear();
  for (const auto& v : j) out.push_back(read_count(v, key));
}

struct KeySpec {
  std::string name;
  std::function<void(RunConfig&, const json&)> set;
  std::function<json(const RunConfig&)> get;
};

template <class T>
KeySpec key(const char* name, T RunConfig::*member) {
  return {name, [=](RunConfig& c, const json& j) { read(j, name, c.*member); },
          [=](const RunConfig& c) { return json(c.*member); }};
}

const std::vector<KeySpec>& specs() {
  static const std::vector<KeySpec> table = {
      key("word_dim", &RunConfig::word_dim),
      key("object_dim", &RunConfig::object_dim),
      key("hidden_dim", &RunConfig::hidden_dim),
      key("encoder_hidden_answering", &RunConfig::encoder_hidden_answering),
      key("encoder_hidden_rationale", &RunConfig::encoder_hidden_rationale),
      key("dict_size", &RunConfig::dict_size),
      key("mlp_hidden", &RunConfig::mlp_hidden),
      key("dictionary_enabled", &RunConfig::dictionary_enabled),
      key("encoder_input", &RunConfig::encoder_input),
      key("zero_head_output", &RunConfig::zero_head_output),
      key("lr_dict", &RunConfig::lr_dict),
      key("lr_base", &RunConfig::lr_base),
      key("epochs", &RunConfig::epochs),
      key("batch_size", &RunConfig::batch_size),
      key("seed", &RunConfig::seed),
      key("task", &RunConfig::task),
      key("attributes", &RunConfig::attributes),
      key("relations", &RunConfig::relations),
      key("noise", &RunConfig::noise),
      key("world_seed", &RunConfig::world_seed),
      key("max_objects", &RunConfig::max_objects),
      key("n", &RunConfig::n),
      key("n_val", &RunConfig::n_val),
      key("ablation_seeds", &RunConfig::ablation_seeds),
      key("data", &RunConfig::data),
      key("val_data", &RunConfig::val_data),
      key("checkpoint", &RunConfig::checkpoint),
      key("loss_log", &RunConfig::loss_log),
      key("qa_checkpoint", &RunConfig::qa_checkpoint),
      key("qar_checkpoint", &RunConfig::qar_checkpoint),
      key("metrics", &RunConfig::metrics),
      key("out", &RunConfig::out),
      key("out_dir", &RunConfig::out_dir),
  };
  return table;
}

}  // namespace

void RunConfig::validate() const {
  const std::pair<const char*, std::size_t> positive[] = {
      {"word_dim", word_dim},
      {"object_dim", object_dim},
      {"hidden_dim", hidden_dim},
      {"encoder_hidden_answering", encoder_hidden_answering},
      {"encoder_hidden_rationale", encoder_hidden_rationale},
      {"dict_size", dict_size},
      {"mlp_hidden", mlp_hidden},
      {"epochs", epochs},
      {"batch_size", batch_size},
      {"attributes", attributes},
      {"relations", relations},
      {"n", n},
      {"n_val", n_val},
  };
  for (const auto& [name, value] : positive) {
    if (value < 1) throw ConfigError(name, "must be >= 1");
  }
  if (!(lr_dict >= 0.0) || !std::isfinite(lr_dict)) throw ConfigError("lr_dict", "must be >= 0");
  if (!(lr_base >= 0.0) || !std::isfinite(lr_base)) throw ConfigError("lr_base", "must be >= 0");
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw ConfigError("noise", "must be >= 0");
  if (encoder_input != "query_objects" && encoder_input != "query_twice") {
    throw ConfigError("encoder_input", "expected query_objects or query_twice, got '" +
                                           encoder_input + "'");
  }
  if (task != "answering" && task != "rationale") {
    throw ConfigError("task", "expected answering or rationale, got '" + task + "'");
  }
  if (ablation_seeds.empty()) throw ConfigError("ablation_seeds", "must not be empty");
  // The world constructor owns the remaining cross-field checks.
  SyntheticWorld{world_config()};
}

TaskKind RunConfig::task_kind() const {
  if (task == "answering") return TaskKind::kAnswering;
  if (task == "rationale") return TaskKind::kRationale;
  throw ConfigError("task", "expected answering or rationale, got '" + task + "'");
}

ModelConfig RunConfig::model_config(TaskKind kind) const {
  ModelConfig c;
  c.word_dim = word_dim;
  c.object_dim = object_dim;
  c.hidden_dim = hidden_dim;
  c.encoder_hidden =
      kind == TaskKind::kAnswering ? encoder_hidden_answering : encoder_hidden_rationale;
  c.dict_size = dict_size;
  c.mlp_hidden = mlp_hidden;
  c.dictionary_enabled = dictionary_enabled;
  c.encoder_input =
      encoder_input == "query_twice" ? EncoderInput::kQueryTwice : EncoderInput::kQueryThenObjects;
  c.zero_head_output = zero_head_output;
  return c;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig c;
  c.epochs = epochs;
  c.batch_size = batch_size;
  c.lr = {lr_dict, lr_base};
  c.seed = seed;
  return c;
}

WorldConfig RunConfig::world_config() const {
  WorldConfig w;
  w.attributes = attributes;
  w.relations = relations;
  w.noise = noise;
  w.feature_dim = object_dim;
  w.max_objects = max_objects;
  w.seed = world_seed;
  return w;
}

json RunConfig::to_json() const {
  json j = json::object();
  for (const auto& s : specs()) j[s.name] = s.get(*this);
  return j;
}

RunConfig RunConfig::from_json(const json& j, RunConfig base) {
  if (!j.is_object()) throw ConfigError("config", "expected a JSON object");
  static const auto index = [] {
    std::map<std::string, const KeySpec*> m;
    for (const auto& s : specs()) m[s.name] = &s;
    return m;
  }();
  for (const auto& [name, value] : j.items()) {
    const auto it = index.find(name);
    if (it == index.end()) throw ConfigError(name, "unknown configuration key");
    it->second->set(base, value);
  }
  return base;
}

RunConfig RunConfig::load(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", path.string() + ": " + e.what());
  }
  return from_json(j, std::move(base));
}

RunConfig RunConfig::from_json(const json& j) { return from_json(j, RunConfig{}); }

RunConfig RunConfig::load(const std::filesystem::path& path) { return load(path, RunConfig{}); }

const std::vector<std::string>& RunConfig::keys() {
  static const auto names = [] {
    std::vector<std::string> out;
    for (const auto& s : specs()) out.push_back(s.name);
    return out;
  }();
  return names;
}

}  // namespace dmvcr
