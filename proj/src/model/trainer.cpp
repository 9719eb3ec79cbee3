#include "dmvcr/trainer.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "dmvcr/errors.hpp"
#include "dmvcr/ops.hpp"

namespace dmvcr {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs", "must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size", "must be >= 1");
  if (!(lr.dictionary >= 0.0)) throw ConfigError("lr_dict", "must be >= 0");
  if (!(lr.base >= 0.0)) throw ConfigError("lr_base", "must be >= 0");
  if (!(divergence_factor > 0.0)) throw ConfigError("divergence_factor", "must be > 0");
}

Trainer::Trainer(Model& model, TrainConfig config)
    : model_(model), config_(config), rng_(config.seed), params_(model.params().named()) {
  config_.validate();
}

double Trainer::step(std::span<const TaskInstance* const> batch) {
  if (batch.empty()) throw ContractError("Trainer::step: empty batch");
  const double weight = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (const TaskInstance* inst : batch) {
    const Tensor loss = instance_loss(model_, *inst);
    total += loss.item();
    backward(scale(loss, weight));
  }
  adam_step(params_, adam_, config_.lr);
  return total * weight;
}

double Trainer::run_epoch(std::span<const TaskInstance> train, std::span<const TaskInstance> val,
                          TrainingLog& log) {
  if (train.empty()) throw ContractError("train: empty dataset");
  ++epoch_;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng_);

  double epoch_total = 0.0;
  std::size_t batches = 0;
  std::vector<const TaskInstance*> batch;
  for (std::size_t start = 0; start < order.size(); start += config_.batch_size) {
    batch.clear();
    const std::size_t end = std::min(order.size(), start + config_.batch_size);
    for (std::size_t i = start; i < end; ++i) batch.push_back(&train[order[i]]);
    const double loss = step(batch);
    if (!initial_loss_) initial_loss_ = loss;
    epoch_total += loss;
    ++batches;
    log.records.push_back({epoch_, batches, loss, std::nullopt});
  }
  const double mean = epoch_total / static_cast<double>(batches);
  log.epoch_losses.push_back(mean);
  if (!val.empty()) log.records.back().val_qa_acc = accuracy(model_, val);
  if (mean > config_.divergence_factor * *initial_loss_) {
    char msg[160];
    std::snprintf(msg, sizeof msg,
                  "training diverged in epoch %zu: mean loss %.6g exceeds %.3g x initial %.6g",
                  epoch_, mean, config_.divergence_factor, *initial_loss_);
    throw DivergenceError(msg);
  }
  return mean;
}

TrainingLog Trainer::train(std::span<const TaskInstance> train, std::span<const TaskInstance> val) {
  TrainingLog log;
  for (std::size_t e = 0; e < config_.epochs; ++e) run_epoch(train, val, log);
  return log;
}

TrainingLog train(Model& model, std::span<const TaskInstance> train_set,
                  std::span<const TaskInstance> val_set, const TrainConfig& config) {
  Trainer trainer(model, config);
  return trainer.train(train_set, val_set);
}

std::string format_loss_log(const TrainingLog& log) {
  std::string out = std::string(kLossLogHeader) + "\n";
  char line[128];
  for (const auto& r : log.records) {
    std::snprintf(line, sizeof line, "%zu,%zu,%.17g,", r.epoch, r.batch, r.loss);
    out += line;
    if (r.val_qa_acc) {
      std::snprintf(line, sizeof line, "%.6f", *r.val_qa_acc);
      out += line;
    }
    out += '\n';
  }
  return out;
}

void write_loss_log(const TrainingLog& log, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write loss log " + path.string());
  out << format_loss_log(log);
}

}  // namespace dmvcr
