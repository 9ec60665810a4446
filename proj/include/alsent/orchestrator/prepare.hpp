#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "alsent/models/split.hpp"
#include "alsent/models/trainer.hpp"
#include "alsent/text/dataset.hpp"
#include "alsent/text/preprocess.hpp"
#include "alsent/text/vocabulary.hpp"

namespace alsent::orchestrator {

struct PreparedSample {
  std::string id;
  std::string raw_text;
  text::Tokens tokens;
  std::vector<int> ids;
  int label = 0;  // index into the label set
};

// A gold-labeled dataset after preprocessing, splitting and encoding. The
// vocabulary is built from the training split only.
struct PreparedData {
  std::string name;
  std::string content_sha256;
  text::LabelSet label_set;
  models::SplitSpec split;
  text::Vocabulary vocab;
  std::size_t seq_len = text::kSequenceLength;
  std::size_t dropped_unlabeled = 0;
  std::vector<PreparedSample> train, val, test;

  // Hash over ids, encodings and labels of the test split.
  std::string test_sha256() const;
  models::EncodedSet encoded(const std::vector<PreparedSample>& part) const;
  std::vector<std::string> label_names() const { return label_set.names(); }
};

struct PrepareOptions {
  models::SplitSpec split;
  std::size_t vocab_size = text::kDefaultVocabSize;
  std::size_t seq_len = text::kSequenceLength;
};

// Rows without a gold label are dropped and counted.
PreparedData prepare(const text::Dataset& dataset, const std::string& content_sha256,
                     const text::Preprocessor& preprocessor, const PrepareOptions& options);

// Loads, hashes and prepares a dataset file.
PreparedData prepare_file(const std::filesystem::path& path, const text::Preprocessor& preprocessor,
                          const PrepareOptions& options);

// Summary written by `prep`: split membership, tokens and vocabulary.
nlohmann::ordered_json prepared_to_json(const PreparedData& data);

}  // namespace alsent::orchestrator
