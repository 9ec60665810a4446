#include "alsent/text/vocabulary.hpp"

#include <algorithm>
#include <unordered_map>

#include "alsent/error.hpp"

namespace alsent::text {

Vocabulary Vocabulary::build(const std::vector<ProcessedSample>& corpus, std::size_t max_size) {
  if (corpus.empty()) throw Error("EmptyCorpus", "cannot build a vocabulary from an empty corpus");
  if (max_size < 2) throw Error("SpecError", "vocabulary max_size must be at least 2");
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& sample : corpus) {
    for (const auto& token : sample.tokens) ++counts[token];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> words;
  words.reserve(std::min(ranked.size(), max_size - 2));
  for (std::size_t i = 0; i < ranked.size() && words.size() < max_size - 2; ++i) {
    words.push_back(ranked[i].first);
  }
  return from_words(words, max_size);
}

Vocabulary Vocabulary::from_words(const std::vector<std::string>& ranked_words, std::size_t max_size) {
  if (ranked_words.size() + 2 > max_size) {
    throw Error("SpecError", "vocabulary holds more words than max_size allows");
  }
  Vocabulary vocab;
  vocab.max_size_ = max_size;
  vocab.ranked_ = ranked_words;
  for (std::size_t i = 0; i < ranked_words.size(); ++i) {
    if (!vocab.index_.emplace(ranked_words[i], static_cast<int>(i) + 2).second) {
      throw Error("SpecError", "duplicate vocabulary word: " + ranked_words[i]);
    }
  }
  return vocab;
}

int Vocabulary::index_of(const std::string& word) const {
  const auto it = index_.find(word);
  return it == index_.end() ? kOovIndex : it->second;
}

std::uint64_t Vocabulary::fingerprint() const {
  // FNV-1a over "max_size\n" followed by each ranked word and a newline.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto mix = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  mix(std::to_string(max_size_));
  mix("\n");
  for (const auto& w : ranked_) {
    mix(w);
    mix("\n");
  }
  return h;
}

std::vector<int> encode(const Tokens& tokens, const Vocabulary& vocab, std::size_t length) {
  std::vector<int> ids(length, Vocabulary::kPadIndex);
  const std::size_t keep = std::min(tokens.size(), length);
  const std::size_t skip = tokens.size() - keep;
  for (std::size_t i = 0; i < keep; ++i) {
    ids[length - keep + i] = vocab.index_of(tokens[skip + i]);
  }
  return ids;
}

}  // namespace alsent::text
