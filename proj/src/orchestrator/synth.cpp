#include "alsent/orchestrator/synth.hpp"

#include <cstdio>
#include <set>

#include "alsent/error.hpp"
#include "alsent/nn/rng.hpp"
#include "alsent/text/utf8.hpp"

namespace alsent::orchestrator {

namespace {

const std::u32string kLetters = U"بتثجحخدذرزسشصضطظعغفقكلمنهي";
const std::vector<std::string> kLatin{"ok", "wow", "app", "delivery", "super", "lol"};
const std::vector<std::string> kEmoji{"😀", "😡", "👍", "🔥", "💔"};
const std::vector<std::string> kPunct{"!", "،", "؟", ".", "...", "؛"};
const std::u32string kDiacritics = U"ًَُِّْ";
const std::u32string kArabicDigits = U"٠١٢٣٤٥٦٧٨٩";
constexpr char32_t kTatweel = U'ـ';

template <typename T>
const T& pick(nn::RngStream& rng, const std::vector<T>& items) {
  return items[static_cast<std::size_t>(rng.below(items.size()))];
}

std::string digits(nn::RngStream& rng) {
  const std::size_t len = 1 + static_cast<std::size_t>(rng.below(4));
  const bool arabic_indic = rng.uniform() < 0.5;
  std::u32string out;
  for (std::size_t i = 0; i < len; ++i) {
    const auto d = static_cast<std::size_t>(rng.below(10));
    out += arabic_indic ? kArabicDigits[d] : static_cast<char32_t>(U'0' + d);
  }
  return text::encode_utf8(out);
}

// Inserts a tatweel or a diacritic after the first letter.
std::string decorate(nn::RngStream& rng, const std::string& word) {
  std::u32string w = text::decode_utf8(word);
  const char32_t mark = rng.uniform() < 0.5 ? kTatweel : kDiacritics[static_cast<std::size_t>(rng.below(kDiacritics.size()))];
  w.insert(w.begin() + 1, mark);
  return text::encode_utf8(w);
}

}  // namespace

SynthLexicon synth_lexicon(const SynthOptions& options, const text::StopWords& stopwords) {
  nn::RngStream rng(nn::derive_seed(options.seed, 1));
  std::set<std::string> used;
  const auto fresh = [&] {
    while (true) {
      std::u32string w;
      for (int i = 0; i < 3; ++i) w += kLetters[static_cast<std::size_t>(rng.below(kLetters.size()))];
      const std::string word = text::encode_utf8(w);
      if (!stopwords.contains(word) && used.insert(word).second) return word;
    }
  };
  SynthLexicon lex;
  for (std::size_t i = 0; i < options.cue_words; ++i) lex.positive.push_back(fresh());
  for (std::size_t i = 0; i < options.cue_words; ++i) lex.negative.push_back(fresh());
  for (std::size_t i = 0; i < options.filler_words; ++i) lex.filler.push_back(fresh());
  return lex;
}

text::Dataset generate_synthetic(const SynthOptions& options, const text::StopWords& stopwords) {
  if (options.samples < 2 || options.cue_words == 0 || options.filler_words == 0) {
    throw Error("InvalidArgument", "synthetic corpus needs at least 2 samples and non-empty word lists");
  }
  const SynthLexicon lex = synth_lexicon(options, stopwords);
  nn::RngStream rng(nn::derive_seed(options.seed, 2));

  std::vector<text::Label> labels;
  for (std::size_t i = 0; i < options.samples; ++i) {
    labels.push_back(i < options.samples / 2 ? text::Label::kPositive : text::Label::kNegative);
  }
  rng.shuffle(labels);

  text::Dataset out;
  out.name = "synthetic";
  out.label_set = text::LabelSet({text::Label::kNegative, text::Label::kPositive});
  for (std::size_t i = 0; i < options.samples; ++i) {
    const bool positive = labels[i] == text::Label::kPositive;
    const auto& own = positive ? lex.positive : lex.negative;
    const auto& other = positive ? lex.negative : lex.positive;

    std::vector<std::string> words;
    const std::size_t fillers = 6 + static_cast<std::size_t>(rng.below(9));
    for (std::size_t k = 0; k < fillers; ++k) words.push_back(pick(rng, lex.filler));
    const auto insert_at_random = [&](const std::string& w) {
      words.insert(words.begin() + static_cast<long>(rng.below(words.size() + 1)), w);
    };
    const std::size_t cues = 1 + static_cast<std::size_t>(rng.below(3));
    std::vector<std::string> own_pool = own;
    rng.shuffle(own_pool);
    for (std::size_t k = 0; k < cues; ++k) insert_at_random(own_pool[k]);
    if (cues >= 2 && rng.uniform() < options.conflict_rate) insert_at_random(pick(rng, other));

    if (rng.uniform() < 0.1) insert_at_random(words[static_cast<std::size_t>(rng.below(words.size()))]);
    for (auto& w : words) {
      if (rng.uniform() < 0.05) w = decorate(rng, w);
    }
    if (rng.uniform() < 0.3) insert_at_random(digits(rng));
    if (rng.uniform() < 0.2) insert_at_random(pick(rng, kLatin));
    if (rng.uniform() < 0.1) insert_at_random(pick(rng, kEmoji));

    std::string text;
    for (std::size_t k = 0; k < words.size(); ++k) {
      if (k > 0) text += ' ';
      text += words[k];
      if (rng.uniform() < 0.08) text += pick(rng, kPunct);
    }
    char id[32];
    std::snprintf(id, sizeof id, "syn-%05zu", i + 1);
    out.samples.push_back({id, text, labels[i]});
  }
  return out;
}

}  // namespace alsent::orchestrator
