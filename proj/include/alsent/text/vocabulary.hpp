#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "alsent/text/preprocess.hpp"

namespace alsent::text {

inline constexpr std::size_t kDefaultVocabSize = 2000;
inline constexpr std::size_t kSequenceLength = 100;

// Word -> index mapping. Index 0 is padding, 1 is out-of-vocabulary, and
// corpus words occupy 2.. in order of descending frequency (ties by byte order).
class Vocabulary {
 public:
  static constexpr int kPadIndex = 0;
  static constexpr int kOovIndex = 1;

  Vocabulary() = default;

  // Throws Error("EmptyCorpus") when `corpus` is empty.
  static Vocabulary build(const std::vector<ProcessedSample>& corpus, std::size_t max_size = kDefaultVocabSize);
  static Vocabulary from_words(const std::vector<std::string>& ranked_words, std::size_t max_size);

  int index_of(const std::string& word) const;
  // Number of distinct ids an encoded sequence may contain (pad + oov + words).
  std::size_t size() const { return ranked_.size() + 2; }
  std::size_t max_size() const { return max_size_; }
  const std::vector<std::string>& ranked_words() const { return ranked_; }
  const std::map<std::string, int>& word_to_index() const { return index_; }

  // Stable content hash, used to tie checkpoints to the vocabulary they saw.
  std::uint64_t fingerprint() const;

 private:
  std::size_t max_size_ = kDefaultVocabSize;
  std::vector<std::string> ranked_;
  std::map<std::string, int> index_;
};

// Maps tokens to ids, pre-pads with kPadIndex and pre-truncates (keeps the
// last `length` ids).
std::vector<int> encode(const Tokens& tokens, const Vocabulary& vocab, std::size_t length = kSequenceLength);

}  // namespace alsent::text
