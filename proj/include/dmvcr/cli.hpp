#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dmvcr/model.hpp"
#include "dmvcr/synthetic.hpp"
#include "dmvcr/trainer.hpp"

namespace dmvcr {

/// Every setting a command can read. Defaults are the desk preset. A config
/// file sets any subset of keys and each key has a same-named flag (with '-'
/// for '_') that overrides it.
struct RunConfig {
  std::size_t word_dim = 32;
  std::size_t object_dim = 16;
  std::size_t hidden_dim = 32;
  std::size_t encoder_hidden_answering = 64;
  std::size_t encoder_hidden_rationale = 64;
  std::size_t dict_size = 64;
  std::size_t mlp_hidden = 64;
  bool dictionary_enabled = true;
  std::string encoder_input = "query_objects";
  bool zero_head_output = true;

  double lr_dict = 0.02;
  double lr_base = 0.002;
  std::size_t epochs = 50;
  std::size_t batch_size = 16;
  std::uint64_t seed = 1;

  std::string task = "answering";
  std::size_t attributes = 6;
  std::size_t relations = 4;
  double noise = 0.0;
  std::uint64_t world_seed = 0;
  std::size_t max_objects = 4;
  std::size_t n = 200;
  std::size_t n_val = 200;
  std::vector<std::uint64_t> ablation_seeds = {1, 2, 3, 4, 5};

  std::string data;
  std::string val_data;
  std::string checkpoint = "model.json";
  std::string loss_log = "loss.csv";
  std::string qa_checkpoint;
  std::string qar_checkpoint;
  std::string metrics;
  std::string out;
  std::string out_dir = ".";

  /// Throws ConfigError naming the first offending key.
  void validate() const;

  TaskKind task_kind() const;
  ModelConfig model_config(TaskKind kind) const;
  TrainConfig train_config() const;
  WorldConfig world_config() const;

  nlohmann::json to_json() const;
  /// Overlays `j` onto `base`. Unknown keys and wrongly typed values are
  /// ConfigErrors naming the key.
  static RunConfig from_json(const nlohmann::json& j, RunConfig base);
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path, RunConfig base);
  static RunConfig load(const std::filesystem::path& path);
  /// Every key accepted by from_json, in declaration order.
  static const std::vector<std::string>& keys();
};

struct AblationRow {
  std::uint64_t seed = 0;
  double qa_dict = 0.0;
  double qa_nodict = 0.0;
  double gap() const { return qa_dict - qa_nodict; }
};

struct AblationResult {
  std::vector<AblationRow> rows;
  double mean_dict() const;
  double mean_nodict() const;
  double mean_gap() const { return mean_dict() - mean_nodict(); }
};

/// For each ablation seed: builds the world with that seed, draws n training
/// and n_val validation answering instances from disjoint streams (or reads
/// `data` / `val_data` when set), trains the dictionary and no-dictionary
/// twins from the same initialization, and records validation accuracy.
AblationResult run_ablation(const RunConfig& config, std::ostream* progress = nullptr);

inline constexpr const char* kAblationHeader = "seed,qa_dict,qa_nodict,gap";
std::string format_ablation_csv(const AblationResult& result);

/// Line chart of per-batch loss with the epoch means overlaid.
std::string render_loss_svg(const TrainingLog& log);
/// Bar chart of named values in [0, 1].
std::string render_bars_svg(const std::vector<std::pair<std::string, double>>& bars,
                            const std::string& title);

/// Parses a loss log written by write_loss_log.
TrainingLog read_loss_log(const std::filesystem::path& path);

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name. Returns 0 on success, 1 on validation or runtime failure,
/// 2 on bad usage.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dmvcr
