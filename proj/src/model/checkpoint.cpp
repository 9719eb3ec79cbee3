#include "dmvcr/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "dmvcr/errors.hpp"

namespace dmvcr {

using nlohmann::json;

json model_config_to_json(const ModelConfig& c) {
  return {{"word_dim", c.word_dim},
          {"object_dim", c.object_dim},
          {"hidden_dim", c.hidden_dim},
          {"encoder_hidden", c.encoder_hidden},
          {"dict_size", c.dict_size},
          {"mlp_hidden", c.mlp_hidden},
          {"dictionary_enabled", c.dictionary_enabled},
          {"encoder_input",
           c.encoder_input == EncoderInput::kQueryThenObjects ? "query_objects" : "query_twice"},
          {"zero_head_output", c.zero_head_output}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  c.word_dim = j.at("word_dim").get<std::size_t>();
  c.object_dim = j.at("object_dim").get<std::size_t>();
  c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  c.encoder_hidden = j.at("encoder_hidden").get<std::size_t>();
  c.dict_size = j.at("dict_size").get<std::size_t>();
  c.mlp_hidden = j.at("mlp_hidden").get<std::size_t>();
  c.dictionary_enabled = j.at("dictionary_enabled").get<bool>();
  const auto layout = j.at("encoder_input").get<std::string>();
  if (layout == "query_objects") {
    c.encoder_input = EncoderInput::kQueryThenObjects;
  } else if (layout == "query_twice") {
    c.encoder_input = EncoderInput::kQueryTwice;
  } else {
    throw ParseError("unknown encoder_input '" + layout + "'");
  }
  c.zero_head_output = j.at("zero_head_output").get<bool>();
  c.validate();
  return c;
}

json checkpoint_json(const Model& model, const json& run_config) {
  json params = json::object();
  for (const auto& p : model.params().named()) {
    params[p.name] = {{"shape", p.tensor.shape()},
                      {"data", std::vector<double>(p.tensor.data().begin(), p.tensor.data().end())}};
  }
  json doc = {{"format_version", kCheckpointFormatVersion},
              {"config", model_config_to_json(model.config())},
              {"vocab", model.vocab().words()},
              {"max_objects", model.vocab().max_objects()},
              {"params", std::move(params)}};
  if (!run_config.is_null()) doc["run_config"] = run_config;
  return doc;
}

std::string serialize_checkpoint(const Model& model, const json& run_config) {
  return checkpoint_json(model, run_config).dump() + "\n";
}

void save_checkpoint(const Model& model, const std::filesystem::path& path, const json& run_config) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << serialize_checkpoint(model, run_config);
}

Model model_from_checkpoint(const json& doc) {
  try {
    const int version = doc.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
      throw ParseError("unsupported checkpoint format_version " + std::to_string(version));
    }
    const ModelConfig config = model_config_from_json(doc.at("config"));
    Vocabulary vocab(doc.at("vocab").get<std::vector<std::string>>(),
                     doc.at("max_objects").get<std::size_t>());
    if (vocab.words() != doc.at("vocab").get<std::vector<std::string>>()) {
      throw ParseError("checkpoint vocabulary is not in canonical order");
    }
    Model model(config, std::move(vocab), std::uint64_t{0});
    const auto& params = doc.at("params");
    const auto named = model.params().named();
    if (params.size() != named.size()) {
      throw ParseError("checkpoint holds " + std::to_string(params.size()) +
                       " parameters, model expects " + std::to_string(named.size()));
    }
    for (auto p : named) {
      const auto& entry = params.at(p.name);
      const auto shape = entry.at("shape").get<Shape>();
      if (shape != p.tensor.shape()) {
        throw ParseError("parameter " + p.name + " has shape " + to_string(shape) +
                         ", expected " + to_string(p.tensor.shape()));
      }
      const auto data = entry.at("data").get<std::vector<double>>();
      if (data.size() != p.tensor.numel()) throw ParseError("parameter " + p.name + " truncated");
      std::copy(data.begin(), data.end(), p.tensor.mutable_data().begin());
    }
    return model;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what());
  }
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return model_from_checkpoint(json::parse(buffer.str()));
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace dmvcr
