#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace alsent::text {

enum class Label { kNegative, kNeutral, kPositive };

std::string_view label_name(Label label);
// Exact, case-sensitive match against "Negative", "Neutral", "Positive".
std::optional<Label> parse_label_name(std::string_view name);

// Ordered label set of a dataset, always in Negative < Neutral < Positive order
// so label indices are stable regardless of file row order.
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::vector<Label> labels);

  std::size_t size() const { return labels_.size(); }
  const std::vector<Label>& labels() const { return labels_; }
  std::vector<std::string> names() const;
  // Throws Error("LabelError") when the label is not a member.
  int index_of(Label label) const;
  Label at(std::size_t index) const { return labels_.at(index); }
  bool contains(Label label) const;

 private:
  std::vector<Label> labels_;
};

struct RawSample {
  std::string id;
  std::string text;
  std::optional<Label> gold_label;
};

struct Dataset {
  std::string name;
  LabelSet label_set;
  std::vector<RawSample> samples;
};

// RFC 4180 CSV reader returning rows of fields. Accepts LF or CRLF endings.
std::vector<std::vector<std::string>> parse_csv(std::string_view contents);
std::string csv_escape(std::string_view field);

// Reads a dataset file with header `id,text,label`. An empty label cell means
// unlabeled. The label set is the set of labels present unless `declared` is
// given, in which case every label must belong to it. Ids must be unique.
Dataset load_dataset(const std::filesystem::path& path, std::optional<LabelSet> declared = std::nullopt);
Dataset parse_dataset(std::string_view contents, std::string name, std::optional<LabelSet> declared = std::nullopt);
void write_dataset(const std::filesystem::path& path, const Dataset& dataset);

}  // namespace alsent::text
