#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "alsent/text/dataset.hpp"
#include "alsent/text/preprocess.hpp"

namespace alsent::orchestrator {

// Synthetic balanced binary corpus of Arabic-script reviews.
//
// The lexicon is drawn once from the seed: three-letter pseudo-words over
// Arabic consonants (never stop words, and short enough that the light
// stemmer leaves them alone), split into `cue_words` positive cues,
// `cue_words` negative cues and `filler_words` neutral fillers.
//
// Each review has 6..14 fillers and 1..3 distinct cues of its own class
// placed at random positions. A review with two or more own cues receives one cue of
// the other class with probability `conflict_rate`, so the label is always
// the majority class among the cues present. Surface noise that the
// preprocessing removes is added independently: digit runs in either
// script, Latin words, punctuation, emoji, tatweel, diacritics and repeated
// tokens. Exactly half the reviews are Positive; ids are "syn-NNNNN".
struct SynthOptions {
  std::size_t samples = 2000;
  std::uint64_t seed = 2024;
  std::size_t cue_words = 20;
  std::size_t filler_words = 300;
  double conflict_rate = 0.1;
};

struct SynthLexicon {
  std::vector<std::string> positive, negative, filler;
};

SynthLexicon synth_lexicon(const SynthOptions& options, const text::StopWords& stopwords);
text::Dataset generate_synthetic(const SynthOptions& options, const text::StopWords& stopwords);

}  // namespace alsent::orchestrator
