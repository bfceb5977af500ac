#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lstma {

// Reserved word indices. Reserved tokens always occupy the first slots.
inline constexpr std::size_t kBos = 0;
inline constexpr std::size_t kEos = 1;
inline constexpr std::size_t kUnk = 2;
inline constexpr std::size_t kNumReserved = 3;

inline constexpr std::string_view kBosToken = "<bos>";
inline constexpr std::string_view kEosToken = "<eos>";
inline constexpr std::string_view kUnkToken = "<unk>";

/// Encoded sentence [w_0 ... w_N]: w_0 is the start sign, w_N the end sign.
struct TokenSequence {
  std::vector<std::size_t> ids;

  /// Number of predicted words N (everything after the start sign).
  std::size_t num_targets() const { return ids.empty() ? 0 : ids.size() - 1; }

  bool operator==(const TokenSequence&) const = default;
};

/// Lowercases, strips ASCII punctuation and splits on whitespace.
std::vector<std::string> tokenize(std::string_view caption);

class Vocabulary {
 public:
  /// Vocabulary holding only the reserved tokens.
  Vocabulary();

  /// `tokens` must start with the reserved tokens in index order.
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }

  /// Index of `token`, or kUnk when it is not in the vocabulary.
  std::size_t index_of(std::string_view token) const;
  bool contains(std::string_view token) const;

  /// Throws std::out_of_range for an invalid index.
  const std::string& token(std::size_t index) const;

  const std::vector<std::string>& tokens() const { return tokens_; }

  /// FNV-1a over the newline-joined token list; stored in checkpoints.
  std::uint64_t hash() const;

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Keeps tokens occurring at least `min_count` times, ordered by descending
/// frequency then lexicographically.
Vocabulary build_vocab(const std::vector<std::string>& corpus, std::size_t min_count = 5);

struct AttributeVocab {
  std::vector<std::string> tokens;

  std::size_t size() const { return tokens.size(); }
  bool operator==(const AttributeVocab&) const = default;
};

/// The K most frequent tokens, ties broken lexicographically. Throws if K is
/// zero or exceeds the number of distinct tokens.
AttributeVocab select_attribute_vocab(const std::vector<std::string>& corpus, std::size_t k);

/// {0,1} presence of each attribute across the captions.
std::vector<double> attributes_from_captions(const std::vector<std::string>& captions,
                                             const AttributeVocab& attributes);

/// Wraps the caption with start/end signs; unknown words become kUnk.
TokenSequence encode(std::string_view caption, const Vocabulary& vocab);

/// Space-joined words with the start/end signs dropped.
std::string decode(const TokenSequence& sequence, const Vocabulary& vocab);

}  // namespace lstma
