#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dmvcr/vocabulary.hpp"

namespace dmvcr {

inline constexpr std::size_t kNumCandidates = 4;

enum class TaskKind { kAnswering, kRationale };

std::string to_string(TaskKind kind);
TaskKind parse_task_kind(const std::string& text);

/// Token strings with a parallel tag list. A tag is the index of the object a
/// position refers to, or nullopt.
struct TaggedSequence {
  std::vector<std::string> tokens;
  std::vector<std::optional<std::size_t>> tags;

  std::size_t size() const { return tokens.size(); }
  /// Throws ContractError / IndexError when the sequence is malformed for a
  /// scene with `object_count` objects.
  void validate(std::size_t object_count) const;

  bool operator==(const TaggedSequence&) const = default;
};

/// Per-object feature vectors, all of one width.
using ObjectSet = std::vector<std::vector<double>>;

struct TaskInstance {
  ObjectSet objects;
  TaggedSequence query;
  std::array<TaggedSequence, kNumCandidates> responses;
  std::size_t gold = 0;
  TaskKind kind = TaskKind::kAnswering;

  void validate(std::size_t max_objects = kDefaultMaxObjects) const;

  bool operator==(const TaskInstance&) const = default;
};

/// An answering instance and the rationale instance built from the same scene.
struct ScenePair {
  TaskInstance answering;
  TaskInstance rationale;
};

/// Groups a flat list into consecutive (answering, rationale) pairs that share
/// a scene. Throws ContractError on anything unpaired.
std::vector<ScenePair> pair_instances(const std::vector<TaskInstance>& instances);
std::vector<TaskInstance> flatten_pairs(const std::vector<ScenePair>& pairs);

/// Writes one JSON object per line.
void save_dataset(const std::vector<TaskInstance>& instances, const std::filesystem::path& path);
std::string serialize_dataset(const std::vector<TaskInstance>& instances);

/// Reads a dataset file. Throws ParseError naming the 1-based line on any
/// malformed record.
std::vector<TaskInstance> load_dataset(const std::filesystem::path& path);

/// As above, but maps every token missing from `vocab` to the UNK word and
/// reports how many substitutions were made.
std::vector<TaskInstance> load_dataset(const std::filesystem::path& path, const Vocabulary& vocab,
                                       std::size_t& unknown_tokens);

}  // namespace dmvcr
