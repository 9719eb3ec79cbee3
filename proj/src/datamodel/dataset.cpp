#include "dmvcr/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dmvcr/errors.hpp"

namespace dmvcr {

using nlohmann::json;

std::string to_string(TaskKind kind) {
  return kind == TaskKind::kAnswering ? "answering" : "rationale";
}

TaskKind parse_task_kind(const std::string& text) {
  if (text == "answering") return TaskKind::kAnswering;
  if (text == "rationale") return TaskKind::kRationale;
  throw ParseError("unknown task kind '" + text + "'");
}

void TaggedSequence::validate(std::size_t object_count) const {
  if (tokens.empty()) throw ContractError("tagged sequence is empty");
  if (tags.size() != tokens.size()) {
    throw ContractError("tag list length " + std::to_string(tags.size()) +
                        " differs from token count " + std::to_string(tokens.size()));
  }
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    if (tags[t] && *tags[t] >= object_count) {
      throw IndexError("tag " + std::to_string(*tags[t]) + " at position " + std::to_string(t) +
                       " but scene has " + std::to_string(object_count) + " objects");
    }
    if (auto tag = Vocabulary::parse_tag_word(tokens[t]); tag && tags[t] != tag) {
      throw ContractError("tag word " + tokens[t] + " at position " + std::to_string(t) +
                          " does not carry its own tag");
    }
  }
}

void TaskInstance::validate(std::size_t max_objects) const {
  if (objects.empty() || objects.size() > max_objects) {
    throw ContractError("scene has " + std::to_string(objects.size()) +
                        " objects; expected 1.." + std::to_string(max_objects));
  }
  for (const auto& o : objects) {
    if (o.size() != objects.front().size()) {
      throw DimensionError("object feature vectors have differing widths");
    }
  }
  if (gold >= kNumCandidates) throw IndexError("gold label " + std::to_string(gold) + " > 3");
  query.validate(objects.size());
  for (const auto& r : responses) r.validate(objects.size());
}

std::vector<ScenePair> pair_instances(const std::vector<TaskInstance>& instances) {
  if (instances.size() % 2 != 0) {
    throw ContractError("odd number of instances; every scene needs an answering and a "
                        "rationale instance");
  }
  std::vector<ScenePair> pairs;
  pairs.reserve(instances.size() / 2);
  for (std::size_t i = 0; i < instances.size(); i += 2) {
    const auto& a = instances[i];
    const auto& r = instances[i + 1];
    if (a.kind != TaskKind::kAnswering || r.kind != TaskKind::kRationale) {
      throw ContractError("instances " + std::to_string(i) + "," + std::to_string(i + 1) +
                          " are not an (answering, rationale) pair");
    }
    if (a.objects != r.objects) {
      throw ContractError("instances " + std::to_string(i) + "," + std::to_string(i + 1) +
                          " come from different scenes");
    }
    pairs.push_back({a, r});
  }
  return pairs;
}

std::vector<TaskInstance> flatten_pairs(const std::vector<ScenePair>& pairs) {
  std::vector<TaskInstance> out;
  out.reserve(pairs.size() * 2);
  for (const auto& p : pairs) {
    out.push_back(p.answering);
    out.push_back(p.rationale);
  }
  return out;
}

namespace {

json sequence_to_json(const TaggedSequence& s) {
  json tags = json::array();
  for (const auto& t : s.tags) tags.push_back(t ? json(*t) : json(nullptr));
  return {{"tokens", s.tokens}, {"tags", std::move(tags)}};
}

TaggedSequence sequence_from_json(const json& j) {
  TaggedSequence s;
  s.tokens = j.at("tokens").get<std::vector<std::string>>();
  for (const auto& t : j.at("tags")) {
    if (t.is_null()) {
      s.tags.emplace_back(std::nullopt);
    } else {
      s.tags.emplace_back(t.get<std::size_t>());
    }
  }
  return s;
}

json instance_to_json(const TaskInstance& inst) {
  json responses = json::array();
  for (const auto& r : inst.responses) responses.push_back(sequence_to_json(r));
  return {{"objects", inst.objects},
          {"query", sequence_to_json(inst.query)},
          {"responses", std::move(responses)},
          {"gold", inst.gold},
          {"kind", to_string(inst.kind)}};
}

TaskInstance instance_from_json(const json& j) {
  static const std::vector<std::string> kFields = {"objects", "query", "responses", "gold",
                                                   "kind"};
  if (!j.is_object()) throw ParseError("record is not a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(kFields.begin(), kFields.end(), key) == kFields.end()) {
      throw ParseError("unknown field '" + key + "'");
    }
  }
  TaskInstance inst;
  inst.objects = j.at("objects").get<ObjectSet>();
  inst.query = sequence_from_json(j.at("query"));
  const auto& responses = j.at("responses");
  if (!responses.is_array() || responses.size() != kNumCandidates) {
    throw ParseError("expected exactly 4 responses");
  }
  for (std::size_t i = 0; i < kNumCandidates; ++i) {
    inst.responses[i] = sequence_from_json(responses[i]);
  }
  inst.gold = j.at("gold").get<std::size_t>();
  inst.kind = parse_task_kind(j.at("kind").get<std::string>());
  inst.validate();
  return inst;
}

std::vector<TaskInstance> read_lines(const std::filesystem::path& path,
                                     const Vocabulary* vocab, std::size_t* unknown) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read dataset " + path.string());
  std::vector<TaskInstance> out;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(instance_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (vocab) {
      auto fix = [&](TaggedSequence& s) {
        for (auto& w : s.tokens) {
          if (!vocab->find(w)) {
            w = Vocabulary::unk_word();
            ++*unknown;
          }
        }
      };
      fix(out.back().query);
      for (auto& r : out.back().responses) fix(r);
    }
  }
  return out;
}

}  // namespace

std::string serialize_dataset(const std::vector<TaskInstance>& instances) {
  std::string out;
  for (const auto& inst : instances) {
    out += instance_to_json(inst).dump();
    out += '\n';
  }
  return out;
}

void save_dataset(const std::vector<TaskInstance>& instances, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset " + path.string());
  out << serialize_dataset(instances);
}

std::vector<TaskInstance> load_dataset(const std::filesystem::path& path) {
  return read_lines(path, nullptr, nullptr);
}

std::vector<TaskInstance> load_dataset(const std::filesystem::path& path, const Vocabulary& vocab,
                                       std::size_t& unknown_tokens) {
  unknown_tokens = 0;
  return read_lines(path, &vocab, &unknown_tokens);
}

}  // namespace dmvcr
