#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dmvcr/dataset.hpp"

namespace dmvcr {

struct WorldConfig {
  std::size_t attributes = 6;
  std::size_t relations = 4;
  /// Std-dev of Gaussian noise added to every object feature coordinate.
  double noise = 0.0;
  /// Width of object feature vectors; the attribute one-hot occupies the
  /// first `attributes` coordinates.
  std::size_t feature_dim = 16;
  std::size_t max_objects = kDefaultMaxObjects;
  /// Upper bound on filler words appended to a question.
  std::size_t max_filler = 3;
  /// Seeds the fact table (not the instances).
  std::uint64_t seed = 0;
};

/// A global table of facts: every (attribute, relation) pair has one answer
/// word and one fact identifier, shared by all scenes. Question scenes refer
/// to one object by tag; the correct answer is the fact for that object's
/// attribute under the asked relation.
class SyntheticWorld {
 public:
  explicit SyntheticWorld(WorldConfig config);

  const WorldConfig& config() const { return config_; }
  std::size_t fact_count() const { return config_.attributes * config_.relations; }
  std::size_t fact_index(std::size_t attribute, std::size_t relation) const;

  const std::string& answer_word(std::size_t attribute, std::size_t relation) const;
  const std::string& fact_word(std::size_t attribute, std::size_t relation) const;
  static std::string relation_word(std::size_t relation);
  static const std::vector<std::string>& filler_words();
  static const std::string& because_word();

 private:
  WorldConfig config_;
  std::vector<std::string> answers_;
  std::vector<std::string> facts_;
};

/// Generates `n` scenes and derives both instance kinds from each. The
/// rationale query is the question, SEP, then the correct answer tokens.
std::vector<ScenePair> generate_scene_pairs(const SyntheticWorld& world, std::size_t n,
                                            std::uint64_t seed);

/// The `kind` half of generate_scene_pairs(world, n, seed).
std::vector<TaskInstance> generate_synthetic(const SyntheticWorld& world, std::size_t n,
                                             std::uint64_t seed,
                                             TaskKind kind = TaskKind::kAnswering);

}  // namespace dmvcr
