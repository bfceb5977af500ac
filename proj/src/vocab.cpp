#include "lstma/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>
#include <stdexcept>

#include "lstma/io.hpp"

namespace lstma {

namespace {

std::map<std::string, std::size_t> count_tokens(const std::vector<std::string>& corpus) {
  std::map<std::string, std::size_t> counts;
  for (const auto& caption : corpus) {
    for (auto& tok : tokenize(caption)) ++counts[std::move(tok)];
  }
  return counts;
}

// Descending count, then lexicographic.
std::vector<std::pair<std::string, std::size_t>> rank_by_frequency(
    const std::map<std::string, std::size_t>& counts) {
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return ranked;
}

bool is_reserved(std::string_view tok) {
  return tok == kBosToken || tok == kEosToken || tok == kUnkToken;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view caption) {
  std::vector<std::string> out;
  std::string current;
  for (char ch : caption) {
    const auto u = static_cast<unsigned char>(ch);
    if (std::isspace(u)) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else if (!std::ispunct(u)) {
      current.push_back(static_cast<char>(std::tolower(u)));
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

Vocabulary::Vocabulary()
    : tokens_{std::string(kBosToken), std::string(kEosToken), std::string(kUnkToken)} {
  for (std::size_t i = 0; i < tokens_.size(); ++i) index_.emplace(tokens_[i], i);
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < kNumReserved || tokens[kBos] != kBosToken || tokens[kEos] != kEosToken ||
      tokens[kUnk] != kUnkToken) {
    throw std::invalid_argument("Vocabulary: reserved tokens missing from the first slots");
  }
  Vocabulary v;
  v.tokens_ = std::move(tokens);
  v.index_.clear();
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    if (v.tokens_[i].empty()) throw std::invalid_argument("Vocabulary: empty token");
    if (!v.index_.emplace(v.tokens_[i], i).second) {
      throw std::invalid_argument("Vocabulary: duplicate token '" + v.tokens_[i] + "'");
    }
  }
  return v;
}

std::size_t Vocabulary::index_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.contains(std::string(token));
}

const std::string& Vocabulary::token(std::size_t index) const {
  if (index >= tokens_.size()) {
    throw std::out_of_range("word index " + std::to_string(index) + " outside vocabulary of " +
                            std::to_string(tokens_.size()));
  }
  return tokens_[index];
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](unsigned char byte) {
    h ^= byte;
    h *= 1099511628211ULL;
  };
  for (const auto& tok : tokens_) {
    for (char ch : tok) mix(static_cast<unsigned char>(ch));
    mix('\n');
  }
  return h;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::string text;
  for (const auto& tok : tokens_) {
    text += tok;
    text += '\n';
  }
  write_file_atomic(path, text);
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    tokens.push_back(line);
  }
  return from_tokens(std::move(tokens));
}

Vocabulary build_vocab(const std::vector<std::string>& corpus, std::size_t min_count) {
  if (min_count < 1) throw std::invalid_argument("build_vocab: min_count must be >= 1");
  std::vector<std::string> tokens{std::string(kBosToken), std::string(kEosToken),
                                  std::string(kUnkToken)};
  for (auto& [tok, count] : rank_by_frequency(count_tokens(corpus))) {
    if (count >= min_count && !is_reserved(tok)) tokens.push_back(tok);
  }
  return Vocabulary::from_tokens(std::move(tokens));
}

AttributeVocab select_attribute_vocab(const std::vector<std::string>& corpus, std::size_t k) {
  if (k < 1) throw std::invalid_argument("select_attribute_vocab: K must be >= 1");
  auto ranked = rank_by_frequency(count_tokens(corpus));
  std::erase_if(ranked, [](const auto& entry) { return is_reserved(entry.first); });
  if (k > ranked.size()) {
    throw std::invalid_argument("select_attribute_vocab: K=" + std::to_string(k) + " exceeds " +
                                std::to_string(ranked.size()) + " distinct tokens");
  }
  AttributeVocab out;
  for (std::size_t i = 0; i < k; ++i) out.tokens.push_back(ranked[i].first);
  return out;
}

std::vector<double> attributes_from_captions(const std::vector<std::string>& captions,
                                             const AttributeVocab& attributes) {
  std::vector<double> presence(attributes.size(), 0.0);
  for (const auto& caption : captions) {
    for (const auto& tok : tokenize(caption)) {
      auto it = std::find(attributes.tokens.begin(), attributes.tokens.end(), tok);
      if (it != attributes.tokens.end()) presence[it - attributes.tokens.begin()] = 1.0;
    }
  }
  return presence;
}

TokenSequence encode(std::string_view caption, const Vocabulary& vocab) {
  TokenSequence seq;
  seq.ids.push_back(kBos);
  for (const auto& tok : tokenize(caption)) seq.ids.push_back(vocab.index_of(tok));
  seq.ids.push_back(kEos);
  return seq;
}

std::string decode(const TokenSequence& sequence, const Vocabulary& vocab) {
  std::string out;
  for (std::size_t id : sequence.ids) {
    const std::string& tok = vocab.token(id);
    if (id == kBos || id == kEos) continue;
    if (!out.empty()) out += ' ';
    out += tok;
  }
  return out;
}

}  // namespace lstma
