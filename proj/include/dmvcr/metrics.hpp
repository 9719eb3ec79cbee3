#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dmvcr/dataset.hpp"
#include "dmvcr/model.hpp"

namespace dmvcr {

/// Accuracies for answering (Q->A), rationale (QA->R) and both jointly
/// (Q->AR: a scene counts only if both of its predictions are right).
struct Metrics {
  double qa = 0.0;
  double qar = 0.0;
  double joint = 0.0;
  std::vector<bool> qa_correct;
  std::vector<bool> qar_correct;
  std::vector<bool> joint_correct;
};

/// Builds Metrics from per-scene correctness flags of equal length.
Metrics join_metrics(const std::vector<bool>& qa_correct, const std::vector<bool>& qar_correct);

/// Runs `qa_model` on the answering half and `qar_model` on the rationale half
/// of every scene, then joins. Throws ContractError on unpaired input.
Metrics evaluate(const Model& qa_model, const Model& qar_model, const std::vector<ScenePair>& pairs);

inline constexpr const char* kMetricsHeader = "qa,qar,joint";

/// "qa,qar,joint" with four decimals, e.g. "0.6667,0.6667,0.3333".
std::string format_metrics_row(const Metrics& metrics);
void write_metrics_csv(const Metrics& metrics, const std::filesystem::path& path);

}  // namespace dmvcr
