#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace alsent::text {

using Tokens = std::vector<std::string>;

struct ProcessedSample {
  std::string id;
  Tokens tokens;
};

// Character-level cleaning steps. Each is total and works on UTF-8 text.
std::string remove_digits(std::string_view text);
std::string strip_non_arabic(std::string_view text);
std::string strip_punctuation(std::string_view text);
// Drops diacritics and tatweel. Letters are never folded into one another.
std::string normalize(std::string_view text);

// Splits on runs of Unicode whitespace.
Tokens tokenize(std::string_view text);

class StopWords {
 public:
  StopWords() = default;
  explicit StopWords(std::unordered_set<std::string> words) : words_(std::move(words)) {}

  // One word per line; `#` starts a comment; blank lines ignored.
  static StopWords parse(std::string_view contents);
  static StopWords load(const std::filesystem::path& path);

  bool contains(const std::string& word) const { return words_.count(word) != 0; }
  std::size_t size() const { return words_.size(); }
  const std::unordered_set<std::string>& words() const { return words_; }

 private:
  std::unordered_set<std::string> words_;
};

struct StemRule {
  enum class Affix { kPrefix, kSuffix };
  Affix affix = Affix::kPrefix;
  std::u32string pattern;
  std::size_t min_remaining = 0;
};

// Rule-driven light stemmer. One pass walks the rule table top to bottom and
// applies every rule that matches, at most once each. Passes repeat until a
// pass changes nothing, so stem(stem(w)) == stem(w). Words of three letters or
// fewer are returned unchanged, and a rule is skipped when its result would be
// one of the protected words (the stop-word list inside a Preprocessor).
class Stemmer {
 public:
  Stemmer() = default;
  explicit Stemmer(std::vector<StemRule> rules, std::unordered_set<std::string> protected_words = {})
      : rules_(std::move(rules)), protected_(std::move(protected_words)) {}

  // Tab separated `prefix|suffix  pattern  min_remaining_length` lines.
  static std::vector<StemRule> parse_rules(std::string_view contents);
  static std::vector<StemRule> load_rules(const std::filesystem::path& path);

  std::string stem_word(std::string_view word) const;
  const std::vector<StemRule>& rules() const { return rules_; }

 private:
  std::vector<StemRule> rules_;
  std::unordered_set<std::string> protected_;
};

Tokens remove_stopwords(const Tokens& tokens, const StopWords& stopwords);
Tokens stem(const Tokens& tokens, const Stemmer& stemmer);
Tokens dedupe(const Tokens& tokens);

// Directory holding stopwords.txt and stem_rules.tsv. Honors the
// ALSENT_RESOURCE_DIR environment variable, else the install-time default.
std::filesystem::path default_resource_dir();

class Preprocessor {
 public:
  Preprocessor(StopWords stopwords, std::vector<StemRule> rules);

  static Preprocessor from_directory(const std::filesystem::path& dir);
  static Preprocessor from_default_resources() { return from_directory(default_resource_dir()); }

  // remove_digits -> strip_non_arabic -> strip_punctuation -> normalize ->
  // tokenize -> remove_stopwords -> stem -> dedupe.
  Tokens operator()(std::string_view text) const;
  ProcessedSample process(const std::string& id, std::string_view text) const {
    return {id, (*this)(text)};
  }

  const StopWords& stopwords() const { return stopwords_; }
  const Stemmer& stemmer() const { return stemmer_; }

 private:
  StopWords stopwords_;
  Stemmer stemmer_;
};

}  // namespace alsent::text
