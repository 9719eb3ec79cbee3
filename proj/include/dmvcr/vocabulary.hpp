#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace dmvcr {

inline constexpr std::size_t kDefaultMaxObjects = 4;

struct TaggedSequence;
struct TaskInstance;

/// Dense word <-> index map. Reserved words come first: PAD (index 0), UNK,
/// SEP, then one tag word "[i]" per object slot. Ordinary words follow in
/// sorted order.
class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::size_t kSep = 2;
  static constexpr std::size_t kFirstTag = 3;

  static const std::string& pad_word();
  static const std::string& unk_word();
  static const std::string& sep_word();
  static std::string tag_word(std::size_t object);
  /// Object index encoded by a tag word, if `word` is one.
  static std::optional<std::size_t> parse_tag_word(const std::string& word);

  explicit Vocabulary(std::size_t max_objects = kDefaultMaxObjects);
  /// Reserved words followed by `words` (deduplicated, sorted; reserved
  /// words among them are ignored).
  Vocabulary(std::vector<std::string> words, std::size_t max_objects);

  std::size_t size() const { return words_.size(); }
  std::size_t max_objects() const { return max_objects_; }
  std::size_t reserved_count() const { return kFirstTag + max_objects_; }
  const std::string& word(std::size_t index) const;
  const std::vector<std::string>& words() const { return words_; }

  std::optional<std::size_t> find(const std::string& word) const;
  /// Index of `word`, or kUnk when absent.
  std::size_t lookup(const std::string& word) const;
  std::size_t tag_token(std::size_t object) const;

  /// Token indices of `seq`; unknown words map to UNK and bump `unknown`.
  std::vector<std::size_t> encode(const TaggedSequence& seq, std::size_t* unknown = nullptr) const;

  /// One word per line, index = line number.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  bool operator==(const Vocabulary& other) const { return words_ == other.words_; }

 private:
  void index_words();

  std::size_t max_objects_;
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Collects every token appearing in queries and responses.
Vocabulary build_vocab(const std::vector<TaskInstance>& instances,
                       std::size_t max_objects = kDefaultMaxObjects);

}  // namespace dmvcr
