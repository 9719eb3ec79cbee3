#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "dmvcr/model.hpp"
#include "dmvcr/optimizer.hpp"

namespace dmvcr {

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 16;
  LearningRates lr{};
  std::uint64_t seed = 1;
  /// Abort when an epoch's mean loss exceeds this multiple of the first batch loss.
  double divergence_factor = 10.0;

  void validate() const;
};

struct LogRecord {
  std::size_t epoch = 0;  // 1-based
  std::size_t batch = 0;  // 1-based within the epoch
  double loss = 0.0;      // mean over the batch, before the update
  /// Held-out accuracy, filled on the last batch of each epoch.
  std::optional<double> val_qa_acc;
};

struct TrainingLog {
  std::vector<LogRecord> records;
  std::vector<double> epoch_losses;
};

/// Mini-batch Adam over shuffled data. The shuffle order and every update
/// are fully determined by the config seed and the model's initial state.
class Trainer {
 public:
  Trainer(Model& model, TrainConfig config);

  /// Accumulates the batch-mean gradient in index order, applies one Adam
  /// update, and returns the batch-mean loss measured before the update.
  double step(std::span<const TaskInstance* const> batch);

  /// One pass over `train`; appends to `log`. `val` may be empty.
  double run_epoch(std::span<const TaskInstance> train, std::span<const TaskInstance> val,
                   TrainingLog& log);

  /// config.epochs passes.
  TrainingLog train(std::span<const TaskInstance> train, std::span<const TaskInstance> val);

  std::size_t epochs_run() const { return epoch_; }
  const AdamState& optimizer() const { return adam_; }

 private:
  Model& model_;
  TrainConfig config_;
  AdamState adam_;
  std::mt19937_64 rng_;
  std::vector<NamedTensor> params_;
  std::size_t epoch_ = 0;
  std::optional<double> initial_loss_;
};

TrainingLog train(Model& model, std::span<const TaskInstance> train_set,
                  std::span<const TaskInstance> val_set, const TrainConfig& config);

inline constexpr const char* kLossLogHeader = "epoch,batch,loss,val_qa_acc";

std::string format_loss_log(const TrainingLog& log);
void write_loss_log(const TrainingLog& log, const std::filesystem::path& path);

}  // namespace dmvcr
