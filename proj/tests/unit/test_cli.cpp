#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "dmvcr/checkpoint.hpp"
#include "dmvcr/cli.hpp"
#include "dmvcr/errors.hpp"
#include "dmvcr/gradient_suite.hpp"
#include "support/temp_dir.hpp"

using namespace dmvcr;

namespace {

const std::filesystem::path kConfigs = std::filesystem::path(DMVCR_SOURCE_DIR) / "configs";

struct Result {
  int code;
  std::string out, err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string s(const std::filesystem::path& p) { return p.string(); }

// Small dimensions so end-to-end commands stay fast.
std::vector<std::string> tiny_flags() {
  return {"--word-dim", "4", "--object-dim", "6", "--hidden-dim", "3",
          "--encoder-hidden-answering", "5", "--encoder-hidden-rationale", "5",
          "--dict-size", "4", "--mlp-hidden", "4", "--batch-size", "4"};
}

std::vector<std::string> concat_args(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

struct EnvSeed {
  explicit EnvSeed(const char* value) { ::setenv("DMVCR_SEED", value, 1); }
  ~EnvSeed() { ::unsetenv("DMVCR_SEED"); }
};

}  // namespace

TEST_CASE("run config json round trip and validation") {
  const RunConfig defaults;
  CHECK_NOTHROW(defaults.validate());
  CHECK(RunConfig::from_json(defaults.to_json()).to_json() == defaults.to_json());
  CHECK(RunConfig::keys().size() == defaults.to_json().size());

  CHECK_THROWS_WITH_AS(RunConfig::from_json({{"wrod_dim", 3}}), doctest::Contains("wrod_dim"), ConfigError);
  try {
    RunConfig::from_json({{"lr_base", "fast"}});
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "lr_base");
  }
  auto bad = RunConfig::from_json({{"hidden_dim", 0}});
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("hidden_dim"), ConfigError);
  bad = RunConfig::from_json({{"lr_dict", -0.5}});
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("lr_dict"), ConfigError);
  bad = RunConfig::from_json({{"attributes", 1}, {"relations", 2}});
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json({{"epochs", -3}}), ConfigError);
}

TEST_CASE("presets load and wire the learning-rate groups") {
  const auto desk = RunConfig::load(kConfigs / "desk.json");
  CHECK_NOTHROW(desk.validate());
  CHECK(desk.model_config(TaskKind::kAnswering).encoder_hidden == 64);
  CHECK(desk.model_config(TaskKind::kAnswering).dict_size == 64);

  const auto paper = RunConfig::load(kConfigs / "paper.json");
  CHECK_NOTHROW(paper.validate());
  CHECK(paper.word_dim == 768);
  CHECK(paper.object_dim == 512);
  CHECK(paper.model_config(TaskKind::kAnswering).encoder_hidden == 512);
  CHECK(paper.model_config(TaskKind::kRationale).encoder_hidden == 64);
  CHECK(paper.dict_size == 800);
  const auto rates = paper.train_config().lr;
  CHECK(rates.for_group(ParamGroup::kDictionary) == 0.02);
  CHECK(rates.for_group(ParamGroup::kBase) == 0.0002);
}

TEST_CASE("seed precedence is flag, config, environment, default") {
  test::TempDir dir;
  const auto data = dir.path() / "d.jsonl";
  CHECK(cli({"gen-data", "--n", "3", "--out", s(data)}).code == 0);
  const std::string by_default = slurp(data);
  CHECK(cli({"gen-data", "--n", "3", "--seed", "1", "--out", s(data)}).code == 0);
  CHECK(slurp(data) == by_default);
  {
    EnvSeed env("5");
    CHECK(cli({"gen-data", "--n", "3", "--out", s(data)}).code == 0);
    const std::string from_env = slurp(data);
    CHECK(from_env != by_default);
    CHECK(cli({"gen-data", "--n", "3", "--seed", "5", "--out", s(data)}).code == 0);
    CHECK(slurp(data) == from_env);

    std::ofstream(dir.path() / "c.json") << R"({"seed": 1})";
    CHECK(cli({"gen-data", "--config", s(dir.path() / "c.json"), "--n", "3", "--out", s(data)}).code == 0);
    CHECK(slurp(data) == by_default);
    CHECK(cli({"gen-data", "--config", s(dir.path() / "c.json"), "--seed", "5", "--n", "3", "--out",
               s(data)}).code == 0);
    CHECK(slurp(data) == from_env);
  }
  EnvSeed junk("abc");
  const auto r = cli({"gen-data", "--n", "3", "--out", s(data)});
  CHECK(r.code == 1);
  CHECK(r.err.find("seed") != std::string::npos);
}

TEST_CASE("gen-data is reproducible") {
  test::TempDir dir;
  CHECK(cli({"gen-data", "--n", "100", "--seed", "7", "--out", s(dir.path() / "a.jsonl")}).code == 0);
  CHECK(cli({"gen-data", "--n", "100", "--seed", "7", "--out", s(dir.path() / "b.jsonl")}).code == 0);
  CHECK(slurp(dir.path() / "a.jsonl") == slurp(dir.path() / "b.jsonl"));
  CHECK(load_dataset(dir.path() / "a.jsonl").size() == 200);
}

TEST_CASE("exit codes") {
  CHECK(cli({}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"train", "--no-such-flag", "1"}).code == 2);
  CHECK(cli({"train", "--epochs", "many"}).code == 2);
  const auto invalid = cli({"train", "--epochs", "0", "--data", "x.jsonl"});
  CHECK(invalid.code == 1);
  CHECK(invalid.err.find("epochs") != std::string::npos);
  const auto missing = cli({"train"});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("data") != std::string::npos);
  test::TempDir dir;
  std::ofstream(dir.path() / "bad.json") << R"({"dict_sise": 3})";
  const auto unknown = cli({"gradcheck", "--config", s(dir.path() / "bad.json")});
  CHECK(unknown.code == 1);
  CHECK(unknown.err.find("dict_sise") != std::string::npos);
  CHECK(cli({"gradcheck", "--help"}).code == 0);
}

TEST_CASE("gradcheck with the desk preset") {
  const auto r = cli({"gradcheck", "--config", s(kConfigs / "desk.json")});
  CHECK(r.code == 0);
  CHECK(r.out.find("score_candidate") != std::string::npos);
  CHECK(r.out.find("FAIL") == std::string::npos);
}

TEST_CASE("eval joins a correctness fixture") {
  // Zero-head models tie everywhere and pick candidate 0, so gold labels of 0
  // mark correct scenes: answering [1,1,0], rationale [1,0,1].
  test::TempDir dir;
  const SyntheticWorld world(tiny_world_config());
  auto pairs = generate_scene_pairs(world, 3, 1);
  const std::array<std::size_t, 3> qa_gold = {0, 0, 2}, qar_gold = {0, 3, 0};
  for (std::size_t i = 0; i < 3; ++i) {
    for (auto [inst, gold] : {std::pair{&pairs[i].answering, qa_gold[i]},
                              std::pair{&pairs[i].rationale, qar_gold[i]}}) {
      std::swap(inst->responses[inst->gold], inst->responses[gold]);
      inst->gold = gold;
    }
  }
  const auto data = dir.path() / "fixture.jsonl";
  save_dataset(flatten_pairs(pairs), data);
  auto config = tiny_model_config();
  config.zero_head_output = true;
  const auto vocab = build_vocab(flatten_pairs(pairs), world.config().max_objects);
  save_checkpoint(Model(config, vocab, 1), dir.path() / "qa.json");
  save_checkpoint(Model(config, vocab, 2), dir.path() / "qar.json");

  const auto metrics = dir.path() / "metrics.csv";
  const auto r = cli({"eval", "--qa-checkpoint", s(dir.path() / "qa.json"), "--qar-checkpoint",
                      s(dir.path() / "qar.json"), "--data", s(data), "--out", s(metrics)});
  CHECK(r.code == 0);
  CHECK(slurp(metrics) == "qa,qar,joint\n0.6667,0.6667,0.3333\n");
}

TEST_CASE("train is reproducible and report renders") {
  test::TempDir dir;
  const auto data = dir.path() / "train.jsonl";
  const auto val = dir.path() / "val.jsonl";
  CHECK(cli({"gen-data", "--n", "24", "--seed", "3", "--object-dim", "6", "--out", s(data)}).code == 0);
  CHECK(cli({"gen-data", "--n", "8", "--seed", "4", "--object-dim", "6", "--out", s(val)}).code == 0);
  auto train_args = [&](const std::string& tag) {
    return concat_args({"train", "--data", s(data), "--val-data", s(val), "--epochs", "2",
                        "--seed", "9", "--checkpoint", s(dir.path() / (tag + ".json")),
                        "--loss-log", s(dir.path() / (tag + ".csv"))},
                       tiny_flags());
  };
  CHECK(cli(train_args("a")).code == 0);
  CHECK(cli(train_args("b")).code == 0);
  // The run_config echo records the differing output paths.
  auto params = [&](const std::string& tag) {
    auto j = nlohmann::json::parse(slurp(dir.path() / (tag + ".json")));
    j.erase("run_config");
    return j.dump();
  };
  CHECK(params("a") == params("b"));
  CHECK(slurp(dir.path() / "a.csv") == slurp(dir.path() / "b.csv"));
  CHECK(slurp(dir.path() / "a.csv").rfind(kLossLogHeader, 0) == 0);

  const auto ckpt = nlohmann::json::parse(slurp(dir.path() / "a.json"));
  CHECK(ckpt.at("run_config").at("seed") == 9);
  const auto log = read_loss_log(dir.path() / "a.csv");
  CHECK(log.records.size() == 2 * 6);
  CHECK(log.epoch_losses.size() == 2);
  CHECK(log.records.back().val_qa_acc.has_value());

  CHECK(cli(concat_args({"train", "--task", "rationale", "--data", s(data), "--epochs", "1",
                         "--checkpoint", s(dir.path() / "r.json"), "--loss-log",
                         s(dir.path() / "r.csv")},
                        tiny_flags()))
            .code == 0);
  CHECK(cli({"eval", "--qa-checkpoint", s(dir.path() / "a.json"), "--qar-checkpoint",
             s(dir.path() / "r.json"), "--data", s(val), "--out", s(dir.path() / "m.csv")})
            .code == 0);

  auto report = [&](const std::string& out_dir) {
    return cli({"report", "--loss-log", s(dir.path() / "a.csv"), "--metrics",
                s(dir.path() / "m.csv"), "--out-dir", s(dir.path() / out_dir)});
  };
  CHECK(report("r1").code == 0);
  CHECK(report("r2").code == 0);
  for (const char* file : {"loss.svg", "metrics.svg"}) {
    const std::string svg = slurp(dir.path() / "r1" / file);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg == slurp(dir.path() / "r2" / file));
  }
}

TEST_CASE("ablate writes paired rows and a mean") {
  test::TempDir dir;
  auto args = concat_args({"ablate", "--n", "12", "--n-val", "8", "--epochs", "1",
                           "--ablation-seeds", "1,2"},
                          tiny_flags());
  args.insert(args.end(), {"--out", s(dir.path() / "abl.csv")});
  const auto first = cli(args);
  INFO(first.err);
  REQUIRE(first.code == 0);
  const std::string csv = slurp(dir.path() / "abl.csv");
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  CHECK(line == kAblationHeader);
  std::getline(lines, line);
  CHECK(line.rfind("1,", 0) == 0);
  std::getline(lines, line);
  CHECK(line.rfind("2,", 0) == 0);
  std::getline(lines, line);
  CHECK(line.rfind("mean,", 0) == 0);

  args.back() = s(dir.path() / "again.csv");
  REQUIRE(cli(args).code == 0);
  CHECK(slurp(dir.path() / "again.csv") == csv);

  CHECK(cli({"report", "--loss-log", s(dir.path() / "none.csv")}).code == 1);
}
