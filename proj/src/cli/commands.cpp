#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "dmvcr/checkpoint.hpp"
#include "dmvcr/cli.hpp"
#include "dmvcr/errors.hpp"
#include "dmvcr/gradient_suite.hpp"
#include "dmvcr/metrics.hpp"

namespace dmvcr {

using nlohmann::json;

namespace {

// Malformed flag values are usage errors, not validation failures.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string flag_name(const std::string& key) {
  std::string f = key;
  std::replace(f.begin(), f.end(), '_', '-');
  return "--" + f;
}

json parse_integer(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw UsageError(flag_name(key) + ": expected an integer, got '" + text + "'");
  }
  return v;
}

// Flags arrive as text; the default value's JSON type says how to read them.
json flag_to_json(const std::string& key, const std::string& text, const json& like) {
  if (like.is_number_integer()) return parse_integer(key, text);
  if (like.is_number_float()) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != text.size()) {
      throw UsageError(flag_name(key) + ": expected a number, got '" + text + "'");
    }
    return v;
  }
  if (like.is_boolean()) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw UsageError(flag_name(key) + ": expected true or false, got '" + text + "'");
  }
  if (like.is_array()) {
    json list = json::array();
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) list.push_back(parse_integer(key, item));
    return list;
  }
  return text;
}

std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv("DMVCR_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  const std::string text = raw;
  if (text.find_first_not_of("0123456789") != std::string::npos) {
    throw ConfigError("seed", "DMVCR_SEED must be a non-negative integer, got '" + text + "'");
  }
  return std::stoull(text);
}

struct Parsed {
  std::string command;
  std::string config_path;
  std::map<std::string, std::string> flags;
};

// Seed precedence: flag, then config file, then DMVCR_SEED, then the default.
RunConfig resolve(const Parsed& p) {
  const json defaults = RunConfig{}.to_json();
  RunConfig base;
  if (auto seed = env_seed()) base.seed = *seed;
  RunConfig cfg = p.config_path.empty() ? base : RunConfig::load(p.config_path, base);
  json overrides = json::object();
  for (const auto& [key, text] : p.flags) overrides[key] = flag_to_json(key, text, defaults.at(key));
  cfg = RunConfig::from_json(overrides, cfg);
  cfg.validate();
  return cfg;
}

std::string required_path(const std::string& value, const char* key) {
  if (value.empty()) throw ConfigError(key, "a path is required (" + flag_name(key) + ")");
  return value;
}

std::vector<TaskInstance> of_kind(std::vector<TaskInstance> all, TaskKind kind, const std::string& path) {
  std::erase_if(all, [&](const TaskInstance& inst) { return inst.kind != kind; });
  if (all.empty()) {
    throw ContractError(path + " holds no " + to_string(kind) + " instances");
  }
  return all;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

int cmd_gen_data(const RunConfig& cfg, std::ostream& out) {
  const SyntheticWorld world(cfg.world_config());
  const auto instances = flatten_pairs(generate_scene_pairs(world, cfg.n, cfg.seed));
  const std::string path = cfg.out.empty() ? "data.jsonl" : cfg.out;
  write_text(path, serialize_dataset(instances));
  out << "wrote " << instances.size() << " instances (" << cfg.n << " scenes) to " << path << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const TaskKind kind = cfg.task_kind();
  const std::string data = required_path(cfg.data, "data");
  const auto train_set = of_kind(load_dataset(data), kind, data);
  const Vocabulary vocab = build_vocab(train_set, cfg.max_objects);
  std::vector<TaskInstance> val_set;
  if (!cfg.val_data.empty()) {
    val_set = of_kind(load_dataset(cfg.val_data), kind, cfg.val_data);
    std::size_t unknown = 0;
    for (const auto& inst : val_set) {
      vocab.encode(inst.query, &unknown);
      for (const auto& r : inst.responses) vocab.encode(r, &unknown);
    }
    if (unknown > 0) err << "warning: " << unknown << " validation tokens mapped to <unk>\n";
  }

  Model model(cfg.model_config(kind), vocab, cfg.seed);
  Trainer trainer(model, cfg.train_config());
  TrainingLog log;
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    const double loss = trainer.run_epoch(train_set, val_set, log);
    char line[128];
    std::snprintf(line, sizeof line, "epoch %zu loss %.6f", e + 1, loss);
    out << line;
    if (log.records.back().val_qa_acc) {
      std::snprintf(line, sizeof line, " val_acc %.4f", *log.records.back().val_qa_acc);
      out << line;
    }
    out << "\n";
  }
  save_checkpoint(model, cfg.checkpoint, cfg.to_json());
  write_text(cfg.loss_log, format_loss_log(log));
  char line[128];
  std::snprintf(line, sizeof line, "train_acc %.4f\n", accuracy(model, train_set));
  out << line << "wrote " << cfg.checkpoint << " and " << cfg.loss_log << "\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out) {
  const Model qa = load_checkpoint(required_path(cfg.qa_checkpoint, "qa_checkpoint"));
  const Model qar = load_checkpoint(required_path(cfg.qar_checkpoint, "qar_checkpoint"));
  const auto pairs = pair_instances(load_dataset(required_path(cfg.data, "data")));
  const Metrics m = evaluate(qa, qar, pairs);
  const std::string path = cfg.out.empty() ? "metrics.csv" : cfg.out;
  write_metrics_csv(m, path);
  out << kMetricsHeader << "\n" << format_metrics_row(m) << "\n";
  return 0;
}

int cmd_gradcheck(std::ostream& out) {
  bool ok = true;
  for (const auto& check : run_gradient_suite()) {
    char line[160];
    std::snprintf(line, sizeof line, "%-28s %.3e  (< %.0e)  %s\n", check.name.c_str(), check.error,
                  check.tolerance, check.passed() ? "ok" : "FAIL");
    out << line;
    ok = ok && check.passed();
  }
  return ok ? 0 : 1;
}

int cmd_ablate(const RunConfig& cfg, std::ostream& out) {
  const AblationResult result = run_ablation(cfg, &out);
  const std::string path = cfg.out.empty() ? "ablation.csv" : cfg.out;
  const std::string csv = format_ablation_csv(result);
  write_text(path, csv);
  out << csv;
  return 0;
}

std::vector<std::pair<std::string, double>> read_bars(const std::filesystem::path& path,
                                                      std::string& title) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string header, line, last;
  std::getline(in, header);
  while (std::getline(in, line)) {
    if (!line.empty()) last = line;
  }
  std::vector<std::string> cells;
  std::stringstream row(last);
  std::string cell;
  while (std::getline(row, cell, ',')) cells.push_back(cell);
  auto number = [&](std::size_t i) {
    try {
      return std::stod(cells.at(i));
    } catch (const std::exception&) {
      throw ParseError(path.string() + ": malformed row '" + last + "'");
    }
  };
  if (header == kMetricsHeader) {
    title = "Accuracy";
    return {{"Q->A", number(0)}, {"QA->R", number(1)}, {"Q->AR", number(2)}};
  }
  if (header == kAblationHeader) {
    title = "Validation Q->A, " + (cells.empty() ? std::string() : cells[0]) + " over seeds";
    return {{"dictionary", number(1)}, {"no dictionary", number(2)}};
  }
  throw ParseError(path.string() + ":1: unrecognized header '" + header + "'");
}

int cmd_report(const RunConfig& cfg, std::ostream& out) {
  const std::filesystem::path dir = cfg.out_dir;
  std::filesystem::create_directories(dir);
  const auto log = read_loss_log(required_path(cfg.loss_log, "loss_log"));
  write_text(dir / "loss.svg", render_loss_svg(log));
  out << "wrote " << (dir / "loss.svg").string() << "\n";
  if (!cfg.metrics.empty()) {
    std::string title;
    const auto bars = read_bars(cfg.metrics, title);
    write_text(dir / "metrics.svg", render_bars_svg(bars, title));
    out << "wrote " << (dir / "metrics.svg").string() << "\n";
  }
  return 0;
}

const char* kCommands[][2] = {
    {"gen-data", "Generate a synthetic dataset of paired answering/rationale instances"},
    {"train", "Train one task and write a checkpoint and loss log"},
    {"eval", "Score answering and rationale checkpoints and join the metrics"},
    {"gradcheck", "Run the finite-difference gradient suite"},
    {"ablate", "Train dictionary and no-dictionary twins over several seeds"},
    {"report", "Render loss curves and metric bars as SVG"},
};

}  // namespace

double AblationResult::mean_dict() const {
  double total = 0.0;
  for (const auto& r : rows) total += r.qa_dict;
  return rows.empty() ? 0.0 : total / static_cast<double>(rows.size());
}

double AblationResult::mean_nodict() const {
  double total = 0.0;
  for (const auto& r : rows) total += r.qa_nodict;
  return rows.empty() ? 0.0 : total / static_cast<double>(rows.size());
}

AblationResult run_ablation(const RunConfig& config, std::ostream* progress) {
  config.validate();
  const TaskKind kind = config.task_kind();
  AblationResult result;
  for (const std::uint64_t seed : config.ablation_seeds) {
    WorldConfig wc = config.world_config();
    wc.seed = config.world_seed + seed;
    const SyntheticWorld world(wc);
    const auto train_set = config.data.empty()
                               ? generate_synthetic(world, config.n, 1000 + seed, kind)
                               : of_kind(load_dataset(config.data), kind, config.data);
    const auto val_set = config.val_data.empty()
                             ? generate_synthetic(world, config.n_val, 5000 + seed, kind)
                             : of_kind(load_dataset(config.val_data), kind, config.val_data);
    const Vocabulary vocab = build_vocab(train_set, config.max_objects);

    AblationRow row;
    row.seed = seed;
    for (bool enabled : {true, false}) {
      ModelConfig mc = config.model_config(kind);
      mc.dictionary_enabled = enabled;
      Model model(mc, vocab, seed);
      TrainConfig tc = config.train_config();
      tc.seed = seed;
      train(model, train_set, {}, tc);
      (enabled ? row.qa_dict : row.qa_nodict) = accuracy(model, val_set);
    }
    if (progress != nullptr) {
      char line[128];
      std::snprintf(line, sizeof line, "seed %llu: dictionary %.4f, none %.4f\n",
                    static_cast<unsigned long long>(seed), row.qa_dict, row.qa_nodict);
      *progress << line;
    }
    result.rows.push_back(row);
  }
  return result;
}

std::string format_ablation_csv(const AblationResult& result) {
  std::string out = std::string(kAblationHeader) + "\n";
  char line[128];
  for (const auto& r : result.rows) {
    std::snprintf(line, sizeof line, "%llu,%.4f,%.4f,%.4f\n", static_cast<unsigned long long>(r.seed),
                  r.qa_dict, r.qa_nodict, r.gap());
    out += line;
  }
  std::snprintf(line, sizeof line, "mean,%.4f,%.4f,%.4f\n", result.mean_dict(),
                result.mean_nodict(), result.mean_gap());
  out += line;
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dictionary-memory visual commonsense reasoning on synthetic scenes", "dmvcr"};
  app.require_subcommand(1);
  Parsed parsed;
  std::map<std::string, std::string> raw;
  for (const auto& [name, help] : kCommands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", parsed.config_path, "JSON config file");
    for (const auto& key : RunConfig::keys()) {
      sub->add_option(flag_name(key), raw[key], "overrides config key " + key);
    }
    sub->callback([&parsed, name = std::string(name)] { parsed.command = name; });
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }
  for (const auto& [key, value] : raw) {
    const auto* sub = app.get_subcommand(parsed.command);
    if (sub->count(flag_name(key)) > 0) parsed.flags[key] = value;
  }

  try {
    const RunConfig cfg = resolve(parsed);
    if (parsed.command == "gen-data") return cmd_gen_data(cfg, out);
    if (parsed.command == "train") return cmd_train(cfg, out, err);
    if (parsed.command == "eval") return cmd_eval(cfg, out);
    if (parsed.command == "gradcheck") return cmd_gradcheck(out);
    if (parsed.command == "ablate") return cmd_ablate(cfg, out);
    return cmd_report(cfg, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "error: invalid " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace dmvcr
