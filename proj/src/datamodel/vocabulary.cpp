#include "dmvcr/vocabulary.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>

#include "dmvcr/dataset.hpp"
#include "dmvcr/errors.hpp"

namespace dmvcr {

const std::string& Vocabulary::pad_word() {
  static const std::string w = "<pad>";
  return w;
}

const std::string& Vocabulary::unk_word() {
  static const std::string w = "<unk>";
  return w;
}

const std::string& Vocabulary::sep_word() {
  static const std::string w = "<sep>";
  return w;
}

std::string Vocabulary::tag_word(std::size_t object) { return "[" + std::to_string(object) + "]"; }

std::optional<std::size_t> Vocabulary::parse_tag_word(const std::string& word) {
  if (word.size() < 3 || word.front() != '[' || word.back() != ']') return std::nullopt;
  std::size_t value = 0;
  const char* first = word.data() + 1;
  const char* last = word.data() + word.size() - 1;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) return std::nullopt;
  // Reject "[01]" so the mapping stays one-to-one.
  if (tag_word(value) != word) return std::nullopt;
  return value;
}

Vocabulary::Vocabulary(std::size_t max_objects) : Vocabulary({}, max_objects) {}

Vocabulary::Vocabulary(std::vector<std::string> words, std::size_t max_objects)
    : max_objects_(max_objects) {
  words_ = {pad_word(), unk_word(), sep_word()};
  for (std::size_t i = 0; i < max_objects_; ++i) words_.push_back(tag_word(i));
  std::set<std::string> reserved(words_.begin(), words_.end());
  std::set<std::string> ordinary;
  for (auto& w : words) {
    if (!reserved.count(w)) ordinary.insert(std::move(w));
  }
  words_.insert(words_.end(), ordinary.begin(), ordinary.end());
  index_words();
}

void Vocabulary::index_words() {
  index_.clear();
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (!index_.emplace(words_[i], i).second) {
      throw ParseError("duplicate vocabulary word '" + words_[i] + "'");
    }
  }
}

const std::string& Vocabulary::word(std::size_t index) const {
  if (index >= words_.size()) {
    throw IndexError("vocabulary index " + std::to_string(index) + " out of range (size " +
                     std::to_string(words_.size()) + ")");
  }
  return words_[index];
}

std::optional<std::size_t> Vocabulary::find(const std::string& word) const {
  auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Vocabulary::lookup(const std::string& word) const { return find(word).value_or(kUnk); }

std::size_t Vocabulary::tag_token(std::size_t object) const {
  if (object >= max_objects_) {
    throw IndexError("tag " + std::to_string(object) + " exceeds max_objects " +
                     std::to_string(max_objects_));
  }
  return kFirstTag + object;
}

std::vector<std::size_t> Vocabulary::encode(const TaggedSequence& seq,
                                            std::size_t* unknown) const {
  std::vector<std::size_t> ids;
  ids.reserve(seq.tokens.size());
  for (const auto& w : seq.tokens) {
    auto found = find(w);
    if (!found && unknown) ++*unknown;
    ids.push_back(found.value_or(kUnk));
  }
  return ids;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write vocabulary to " + path.string());
  for (const auto& w : words_) out << w << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read vocabulary from " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);

  std::size_t max_objects = 0;
  while (kFirstTag + max_objects < lines.size() &&
         lines[kFirstTag + max_objects] == tag_word(max_objects)) {
    ++max_objects;
  }
  Vocabulary vocab(max_objects);
  if (lines.size() < vocab.reserved_count() ||
      !std::equal(vocab.words_.begin(), vocab.words_.end(), lines.begin())) {
    throw ParseError(path.string() + ": reserved words missing or out of order");
  }
  vocab.words_ = std::move(lines);
  vocab.index_words();
  return vocab;
}

Vocabulary build_vocab(const std::vector<TaskInstance>& instances, std::size_t max_objects) {
  std::vector<std::string> words;
  auto collect = [&words](const TaggedSequence& s) {
    words.insert(words.end(), s.tokens.begin(), s.tokens.end());
  };
  for (const auto& inst : instances) {
    collect(inst.query);
    for (const auto& r : inst.responses) collect(r);
  }
  return Vocabulary(std::move(words), max_objects);
}

}  // namespace dmvcr
