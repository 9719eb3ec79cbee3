#include "dmvcr/metrics.hpp"

#include <cstdio>
#include <fstream>

#include "dmvcr/errors.hpp"

namespace dmvcr {
namespace {

double fraction(const std::vector<bool>& flags) {
  std::size_t hits = 0;
  for (bool f : flags) hits += f ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(flags.size());
}

}  // namespace

Metrics join_metrics(const std::vector<bool>& qa_correct, const std::vector<bool>& qar_correct) {
  if (qa_correct.size() != qar_correct.size()) {
    throw ContractError("join_metrics: " + std::to_string(qa_correct.size()) + " answering vs " +
                        std::to_string(qar_correct.size()) + " rationale results");
  }
  if (qa_correct.empty()) throw ContractError("join_metrics: no scenes");
  Metrics m;
  m.qa_correct = qa_correct;
  m.qar_correct = qar_correct;
  m.joint_correct.resize(qa_correct.size());
  for (std::size_t i = 0; i < qa_correct.size(); ++i) {
    m.joint_correct[i] = qa_correct[i] && qar_correct[i];
  }
  m.qa = fraction(m.qa_correct);
  m.qar = fraction(m.qar_correct);
  m.joint = fraction(m.joint_correct);
  return m;
}

Metrics evaluate(const Model& qa_model, const Model& qar_model, const std::vector<ScenePair>& pairs) {
  std::vector<bool> qa, qar;
  qa.reserve(pairs.size());
  qar.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    if (p.answering.kind != TaskKind::kAnswering || p.rationale.kind != TaskKind::kRationale ||
        p.answering.objects != p.rationale.objects) {
      throw ContractError("evaluate: scene " + std::to_string(i) + " is not a matched pair");
    }
    qa.push_back(predict(qa_model, p.answering).choice == p.answering.gold);
    qar.push_back(predict(qar_model, p.rationale).choice == p.rationale.gold);
  }
  return join_metrics(qa, qar);
}

std::string format_metrics_row(const Metrics& metrics) {
  char line[96];
  std::snprintf(line, sizeof line, "%.4f,%.4f,%.4f", metrics.qa, metrics.qar, metrics.joint);
  return line;
}

void write_metrics_csv(const Metrics& metrics, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write metrics to " + path.string());
  out << kMetricsHeader << '\n' << format_metrics_row(metrics) << '\n';
}

}  // namespace dmvcr
