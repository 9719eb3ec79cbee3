#include "dmvcr/synthetic.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "dmvcr/errors.hpp"

namespace dmvcr {
namespace {

constexpr std::size_t kMaxSequenceLength = 12;

std::size_t draw(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// Three distinct facts other than `gold`, in sampling order.
std::array<std::size_t, kNumCandidates - 1> draw_distractors(std::mt19937_64& rng,
                                                             std::size_t fact_count,
                                                             std::size_t gold) {
  std::vector<std::size_t> pool;
  pool.reserve(fact_count - 1);
  for (std::size_t f = 0; f < fact_count; ++f) {
    if (f != gold) pool.push_back(f);
  }
  std::array<std::size_t, kNumCandidates - 1> out{};
  for (std::size_t k = 0; k < out.size(); ++k) {
    const std::size_t pick = draw(rng, k, pool.size() - 1);
    std::swap(pool[k], pool[pick]);
    out[k] = pool[k];
  }
  return out;
}

}  // namespace

SyntheticWorld::SyntheticWorld(WorldConfig config) : config_(config) {
  if (config_.attributes == 0) throw ConfigError("attributes", "must be >= 1");
  if (config_.relations == 0) throw ConfigError("relations", "must be >= 1");
  if (fact_count() < kNumCandidates) {
    throw ConfigError("attributes", "attributes * relations = " + std::to_string(fact_count()) +
                                        " cannot supply 4 distinct choices");
  }
  if (config_.feature_dim < config_.attributes) {
    throw ConfigError("object_dim", "feature width " + std::to_string(config_.feature_dim) +
                                        " is smaller than the attribute count " +
                                        std::to_string(config_.attributes));
  }
  if (config_.max_objects < 2) throw ConfigError("max_objects", "must be >= 2");
  if (!(config_.noise >= 0.0)) throw ConfigError("noise", "must be >= 0");
  if (config_.max_filler + 5 > kMaxSequenceLength) {
    throw ConfigError("max_filler", "queries would exceed 12 tokens");
  }

  std::mt19937_64 rng(config_.seed);
  std::vector<std::size_t> answer_ids(fact_count());
  std::vector<std::size_t> fact_ids(fact_count());
  std::iota(answer_ids.begin(), answer_ids.end(), 0);
  std::iota(fact_ids.begin(), fact_ids.end(), 0);
  std::shuffle(answer_ids.begin(), answer_ids.end(), rng);
  std::shuffle(fact_ids.begin(), fact_ids.end(), rng);
  for (std::size_t f = 0; f < fact_count(); ++f) {
    answers_.push_back("ans" + std::to_string(answer_ids[f]));
    facts_.push_back("fact" + std::to_string(fact_ids[f]));
  }
}

std::size_t SyntheticWorld::fact_index(std::size_t attribute, std::size_t relation) const {
  if (attribute >= config_.attributes || relation >= config_.relations) {
    throw IndexError("fact (" + std::to_string(attribute) + ", " + std::to_string(relation) +
                     ") outside the table");
  }
  return attribute * config_.relations + relation;
}

const std::string& SyntheticWorld::answer_word(std::size_t attribute, std::size_t relation) const {
  return answers_[fact_index(attribute, relation)];
}

const std::string& SyntheticWorld::fact_word(std::size_t attribute, std::size_t relation) const {
  return facts_[fact_index(attribute, relation)];
}

std::string SyntheticWorld::relation_word(std::size_t relation) {
  return "rel" + std::to_string(relation);
}

const std::vector<std::string>& SyntheticWorld::filler_words() {
  static const std::vector<std::string> words = {"what", "is", "the", "about", "of", "this"};
  return words;
}

const std::string& SyntheticWorld::because_word() {
  static const std::string w = "because";
  return w;
}

std::vector<ScenePair> generate_scene_pairs(const SyntheticWorld& world, std::size_t n,
                                            std::uint64_t seed) {
  if (n == 0) throw ContractError("generate_synthetic: n must be >= 1");
  const auto& cfg = world.config();
  const auto& fillers = SyntheticWorld::filler_words();
  std::vector<ScenePair> out;
  out.reserve(n);
  for (std::size_t index = 0; index < n; ++index) {
    // One stream per scene so that generation can be sharded by index range.
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> gauss(0.0, cfg.noise > 0.0 ? cfg.noise : 1.0);

    const std::size_t m = draw(rng, 2, cfg.max_objects);
    std::vector<std::size_t> attributes(m);
    ObjectSet objects(m, std::vector<double>(cfg.feature_dim, 0.0));
    for (std::size_t i = 0; i < m; ++i) {
      attributes[i] = draw(rng, 0, cfg.attributes - 1);
      objects[i][attributes[i]] = 1.0;
      if (cfg.noise > 0.0) {
        for (double& v : objects[i]) v += gauss(rng);
      }
    }
    const std::size_t target = draw(rng, 0, m - 1);
    const std::size_t relation = draw(rng, 0, cfg.relations - 1);
    const std::string tag = Vocabulary::tag_word(target);

    TaggedSequence question;
    question.tokens = {SyntheticWorld::relation_word(relation), tag};
    question.tags = {std::nullopt, target};
    const std::size_t filler_count = draw(rng, 0, cfg.max_filler);
    for (std::size_t k = 0; k < filler_count; ++k) {
      question.tokens.push_back(fillers[draw(rng, 0, fillers.size() - 1)]);
      question.tags.emplace_back(std::nullopt);
    }

    const std::size_t gold_fact = world.fact_index(attributes[target], relation);
    auto fact_parts = [&](std::size_t f) {
      return std::pair{f / cfg.relations, f % cfg.relations};
    };
    auto answer_for = [&](std::size_t f) {
      auto [a, r] = fact_parts(f);
      return TaggedSequence{{world.answer_word(a, r), tag}, {std::nullopt, target}};
    };
    auto rationale_for = [&](std::size_t f) {
      auto [a, r] = fact_parts(f);
      return TaggedSequence{{SyntheticWorld::because_word(), world.fact_word(a, r), tag},
                            {std::nullopt, std::nullopt, target}};
    };
    auto build = [&](TaskKind kind, const TaggedSequence& query, auto make_response) {
      TaskInstance inst;
      inst.objects = objects;
      inst.query = query;
      inst.kind = kind;
      inst.gold = draw(rng, 0, kNumCandidates - 1);
      const auto distractors = draw_distractors(rng, world.fact_count(), gold_fact);
      std::size_t next = 0;
      for (std::size_t c = 0; c < kNumCandidates; ++c) {
        inst.responses[c] = make_response(c == inst.gold ? gold_fact : distractors[next++]);
      }
      return inst;
    };

    ScenePair pair;
    pair.answering = build(TaskKind::kAnswering, question, answer_for);

    TaggedSequence rationale_query = question;
    const TaggedSequence gold_answer = answer_for(gold_fact);
    rationale_query.tokens.push_back(Vocabulary::sep_word());
    rationale_query.tags.emplace_back(std::nullopt);
    rationale_query.tokens.insert(rationale_query.tokens.end(), gold_answer.tokens.begin(),
                                  gold_answer.tokens.end());
    rationale_query.tags.insert(rationale_query.tags.end(), gold_answer.tags.begin(),
                                gold_answer.tags.end());
    pair.rationale = build(TaskKind::kRationale, rationale_query, rationale_for);
    out.push_back(std::move(pair));
  }
  return out;
}

std::vector<TaskInstance> generate_synthetic(const SyntheticWorld& world, std::size_t n,
                                             std::uint64_t seed, TaskKind kind) {
  auto pairs = generate_scene_pairs(world, n, seed);
  std::vector<TaskInstance> out;
  out.reserve(pairs.size());
  for (auto& p : pairs) {
    out.push_back(kind == TaskKind::kAnswering ? std::move(p.answering) : std::move(p.rationale));
  }
  return out;
}

}  // namespace dmvcr
