#include "alsent/text/preprocess.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "alsent/error.hpp"
#include "alsent/text/utf8.hpp"

#ifndef ALSENT_DEFAULT_RESOURCE_DIR
#define ALSENT_DEFAULT_RESOURCE_DIR "data"
#endif

namespace alsent::text {

namespace {

bool is_digit(char32_t c) {
  return (c >= U'0' && c <= U'9') || (c >= U'\u0660' && c <= U'\u0669') ||
         (c >= U'\u06F0' && c <= U'\u06F9');
}

bool is_punctuation(char32_t c) {
  if (c < 0x80) {
    return (c >= U'!' && c <= U'/') || (c >= U':' && c <= U'@') || (c >= U'[' && c <= U'`') ||
           (c >= U'{' && c <= U'~');
  }
  switch (c) {
    case U'\u060C':  // comma
    case U'\u060D':  // date separator
    case U'\u061B':  // semicolon
    case U'\u061E':  // triple dot
    case U'\u061F':  // question mark
    case U'\u066A':  // percent
    case U'\u066B':  // decimal separator
    case U'\u066C':  // thousands separator
    case U'\u066D':  // five pointed star
    case U'\u06D4':  // full stop
    case U'\u00A1': case U'\u00AB': case U'\u00B7': case U'\u00BB': case U'\u00BF':
    case U'\uFD3E': case U'\uFD3F':  // ornate parentheses
      return true;
    default:
      // General punctuation block, excluding the space characters in it.
      return (c >= U'\u2010' && c <= U'\u2027') || (c >= U'\u2030' && c <= U'\u205E');
  }
}

template <typename Keep>
std::string filter(std::string_view text, Keep keep) {
  const std::u32string cps = decode_utf8(text);
  std::u32string out;
  out.reserve(cps.size());
  for (char32_t c : cps) {
    if (keep(c)) out.push_back(c);
  }
  return encode_utf8(out);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("ResourceError", "cannot open resource file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_lines(std::string_view contents) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= contents.size()) {
    const auto end = contents.find('\n', start);
    if (end == std::string_view::npos) {
      lines.push_back(contents.substr(start));
      break;
    }
    lines.push_back(contents.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

}  // namespace

std::string remove_digits(std::string_view text) {
  return filter(text, [](char32_t c) { return !is_digit(c); });
}

std::string strip_non_arabic(std::string_view text) {
  return filter(text, [](char32_t c) {
    return is_arabic_letter(c) || is_arabic_diacritic(c) || c == kTatweel ||
           is_unicode_whitespace(c);
  });
}

std::string strip_punctuation(std::string_view text) {
  return filter(text, [](char32_t c) { return !is_punctuation(c); });
}

std::string normalize(std::string_view text) {
  return filter(text, [](char32_t c) { return !is_arabic_diacritic(c) && c != kTatweel; });
}

Tokens tokenize(std::string_view text) {
  const std::u32string cps = decode_utf8(text);
  Tokens tokens;
  std::u32string current;
  for (char32_t c : cps) {
    if (is_unicode_whitespace(c)) {
      if (!current.empty()) {
        tokens.push_back(encode_utf8(current));
        current.clear();
      }
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) tokens.push_back(encode_utf8(current));
  return tokens;
}

StopWords StopWords::parse(std::string_view contents) {
  std::unordered_set<std::string> words;
  for (std::string_view line : split_lines(contents)) {
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (!line.empty()) words.emplace(line);
  }
  return StopWords(std::move(words));
}

StopWords StopWords::load(const std::filesystem::path& path) { return parse(read_file(path)); }

std::vector<StemRule> Stemmer::parse_rules(std::string_view contents) {
  std::vector<StemRule> rules;
  int line_no = 0;
  for (std::string_view line : split_lines(contents)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty() || trim(line).front() == '#') continue;
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    const auto bad = [&](const std::string& why) {
      return Error("ResourceError", "stem rules line " + std::to_string(line_no) + ": " + why);
    };
    if (fields.size() != 3) throw bad("expected 3 tab-separated fields");
    StemRule rule;
    if (fields[0] == "prefix") {
      rule.affix = StemRule::Affix::kPrefix;
    } else if (fields[0] == "suffix") {
      rule.affix = StemRule::Affix::kSuffix;
    } else {
      throw bad("affix must be 'prefix' or 'suffix'");
    }
    rule.pattern = decode_utf8(trim(fields[1]));
    if (rule.pattern.empty()) throw bad("empty pattern");
    const std::string count(trim(fields[2]));
    char* end = nullptr;
    const long min_len = std::strtol(count.c_str(), &end, 10);
    if (count.empty() || *end != '\0' || min_len < 1) throw bad("min_remaining_length must be a positive integer");
    rule.min_remaining = static_cast<std::size_t>(min_len);
    rules.push_back(std::move(rule));
  }
  return rules;
}

std::vector<StemRule> Stemmer::load_rules(const std::filesystem::path& path) {
  return parse_rules(read_file(path));
}

std::string Stemmer::stem_word(std::string_view word) const {
  std::u32string current = decode_utf8(word);
  constexpr std::size_t kPassThroughLength = 3;
  bool changed = true;
  while (changed && current.size() > kPassThroughLength) {
    changed = false;
    for (const StemRule& rule : rules_) {
      const std::size_t plen = rule.pattern.size();
      if (current.size() < plen + rule.min_remaining) continue;
      std::u32string candidate;
      if (rule.affix == StemRule::Affix::kPrefix) {
        if (current.compare(0, plen, rule.pattern) != 0) continue;
        candidate = current.substr(plen);
      } else {
        if (current.compare(current.size() - plen, plen, rule.pattern) != 0) continue;
        candidate = current.substr(0, current.size() - plen);
      }
      if (!protected_.empty() && protected_.count(encode_utf8(candidate)) != 0) continue;
      current = std::move(candidate);
      changed = true;
      if (current.size() <= kPassThroughLength) break;
    }
  }
  return encode_utf8(current);
}

Tokens remove_stopwords(const Tokens& tokens, const StopWords& stopwords) {
  Tokens out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (!stopwords.contains(t)) out.push_back(t);
  }
  return out;
}

Tokens stem(const Tokens& tokens, const Stemmer& stemmer) {
  Tokens out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(stemmer.stem_word(t));
  return out;
}

Tokens dedupe(const Tokens& tokens) {
  std::unordered_set<std::string> seen;
  Tokens out;
  for (const auto& t : tokens) {
    if (seen.insert(t).second) out.push_back(t);
  }
  return out;
}

std::filesystem::path default_resource_dir() {
  if (const char* env = std::getenv("ALSENT_RESOURCE_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return ALSENT_DEFAULT_RESOURCE_DIR;
}

Preprocessor::Preprocessor(StopWords stopwords, std::vector<StemRule> rules)
    : stopwords_(std::move(stopwords)), stemmer_(std::move(rules), stopwords_.words()) {}

Preprocessor Preprocessor::from_directory(const std::filesystem::path& dir) {
  return Preprocessor(StopWords::load(dir / "stopwords.txt"), Stemmer::load_rules(dir / "stem_rules.tsv"));
}

Tokens Preprocessor::operator()(std::string_view text) const {
  std::string cleaned = remove_digits(text);
  cleaned = strip_non_arabic(cleaned);
  cleaned = strip_punctuation(cleaned);
  cleaned = normalize(cleaned);
  return dedupe(stem(remove_stopwords(tokenize(cleaned), stopwords_), stemmer_));
}

}  // namespace alsent::text
