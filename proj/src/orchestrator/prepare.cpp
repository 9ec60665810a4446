#include "alsent/orchestrator/prepare.hpp"

#include "alsent/io.hpp"

namespace alsent::orchestrator {

std::string PreparedData::test_sha256() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const PreparedSample& s : test) rows.push_back({s.id, s.ids, s.label});
  return sha256_hex(rows.dump());
}

models::EncodedSet PreparedData::encoded(const std::vector<PreparedSample>& part) const {
  models::EncodedSet out;
  for (const PreparedSample& s : part) out.add(s.ids, s.label);
  return out;
}

PreparedData prepare(const text::Dataset& dataset, const std::string& content_sha256,
                     const text::Preprocessor& preprocessor, const PrepareOptions& options) {
  options.split.validate();
  PreparedData out;
  out.name = dataset.name;
  out.content_sha256 = content_sha256;
  out.label_set = dataset.label_set;
  out.split = options.split;
  out.seq_len = options.seq_len;

  std::vector<PreparedSample> labeled;
  for (const text::RawSample& raw : dataset.samples) {
    if (!raw.gold_label) {
      ++out.dropped_unlabeled;
      continue;
    }
    labeled.push_back({raw.id, raw.text, preprocessor(raw.text), {}, dataset.label_set.index_of(*raw.gold_label)});
  }
  auto parts = models::split_dataset(labeled, options.split);
  out.train = std::move(parts.train);
  out.val = std::move(parts.val);
  out.test = std::move(parts.test);
  if (out.train.empty() || out.val.empty() || out.test.empty()) {
    throw Error("DatasetTooSmall", "every split needs at least one sample");
  }

  std::vector<text::ProcessedSample> corpus;
  for (const PreparedSample& s : out.train) corpus.push_back({s.id, s.tokens});
  out.vocab = text::Vocabulary::build(corpus, options.vocab_size);
  for (auto* part : {&out.train, &out.val, &out.test}) {
    for (PreparedSample& s : *part) s.ids = text::encode(s.tokens, out.vocab, options.seq_len);
  }
  return out;
}

PreparedData prepare_file(const std::filesystem::path& path, const text::Preprocessor& preprocessor,
                          const PrepareOptions& options) {
  const std::string contents = read_file(path);
  const text::Dataset dataset = text::parse_dataset(contents, path.stem().string());
  return prepare(dataset, sha256_hex(contents), preprocessor, options);
}

nlohmann::ordered_json prepared_to_json(const PreparedData& data) {
  nlohmann::ordered_json j;
  j["dataset"] = data.name;
  j["sha256"] = data.content_sha256;
  j["label_set"] = data.label_names();
  j["split"] = {{"train_frac", data.split.train_frac},
                {"val_frac", data.split.val_frac},
                {"test_frac", data.split.test_frac},
                {"seed", data.split.seed}};
  j["dropped_unlabeled"] = data.dropped_unlabeled;
  j["test_sha256"] = data.test_sha256();
  j["vocabulary"] = data.vocab.ranked_words();
  const auto part_json = [&](const std::vector<PreparedSample>& part) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const PreparedSample& s : part) {
      rows.push_back({{"id", s.id}, {"label", data.label_set.names()[static_cast<std::size_t>(s.label)]}, {"tokens", s.tokens}});
    }
    return rows;
  };
  j["train"] = part_json(data.train);
  j["val"] = part_json(data.val);
  j["test"] = part_json(data.test);
  return j;
}

}  // namespace alsent::orchestrator
