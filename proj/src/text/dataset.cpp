#include "alsent/text/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "alsent/error.hpp"

namespace alsent::text {

std::string_view label_name(Label label) {
  switch (label) {
    case Label::kNegative: return "Negative";
    case Label::kNeutral: return "Neutral";
    case Label::kPositive: return "Positive";
  }
  return "";
}

std::optional<Label> parse_label_name(std::string_view name) {
  if (name == "Negative") return Label::kNegative;
  if (name == "Neutral") return Label::kNeutral;
  if (name == "Positive") return Label::kPositive;
  return std::nullopt;
}

LabelSet::LabelSet(std::vector<Label> labels) : labels_(std::move(labels)) {
  std::sort(labels_.begin(), labels_.end());
  labels_.erase(std::unique(labels_.begin(), labels_.end()), labels_.end());
}

std::vector<std::string> LabelSet::names() const {
  std::vector<std::string> out;
  for (Label l : labels_) out.emplace_back(label_name(l));
  return out;
}

int LabelSet::index_of(Label label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) {
    throw Error("LabelError", "label " + std::string(label_name(label)) + " is not in the label set");
  }
  return static_cast<int>(it - labels_.begin());
}

bool LabelSet::contains(Label label) const {
  return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

std::vector<std::vector<std::string>> parse_csv(std::string_view contents) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t i = 0;
  // Skip a UTF-8 byte order mark.
  if (contents.substr(0, 3) == "\xEF\xBB\xBF") i = 3;
  const auto end_row = [&] {
    row.push_back(std::move(field));
    field.clear();
    rows.push_back(std::move(row));
    row.clear();
    field_started = false;
  };
  for (; i < contents.size(); ++i) {
    const char c = contents[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < contents.size() && contents[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty()) throw Error("DatasetError", "stray quote inside unquoted CSV field");
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        if (i + 1 < contents.size() && contents[i + 1] == '\n') ++i;
        end_row();
        break;
      case '\n':
        end_row();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw Error("DatasetError", "unterminated quoted CSV field");
  if (field_started || !row.empty()) end_row();
  return rows;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

Dataset parse_dataset(std::string_view contents, std::string name, std::optional<LabelSet> declared) {
  const auto rows = parse_csv(contents);
  if (rows.empty()) throw Error("DatasetError", "dataset file is empty");
  const auto& header = rows.front();
  if (header.size() != 3 || header[0] != "id" || header[1] != "text" || header[2] != "label") {
    throw Error("DatasetError", "dataset header must be exactly id,text,label");
  }
  Dataset ds;
  ds.name = std::move(name);
  std::unordered_set<std::string> ids;
  std::set<Label> present;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != 3) {
      throw Error("DatasetError", "row " + std::to_string(r + 1) + " has " + std::to_string(row.size()) + " fields");
    }
    RawSample s{row[0], row[1], std::nullopt};
    if (s.id.empty()) throw Error("DatasetError", "row " + std::to_string(r + 1) + " has an empty id");
    if (!ids.insert(s.id).second) throw Error("DatasetError", "duplicate sample id " + s.id);
    if (!row[2].empty()) {
      const auto label = parse_label_name(row[2]);
      if (!label) throw Error("DatasetError", "unknown label '" + row[2] + "' in row " + std::to_string(r + 1));
      if (declared && !declared->contains(*label)) {
        throw Error("DatasetError", "label '" + row[2] + "' is outside the declared label set");
      }
      present.insert(*label);
      s.gold_label = label;
    }
    ds.samples.push_back(std::move(s));
  }
  ds.label_set = declared ? *declared : LabelSet(std::vector<Label>(present.begin(), present.end()));
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path, std::optional<LabelSet> declared) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("DatasetError", "cannot open dataset " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str(), path.stem().string(), std::move(declared));
}

void write_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("IoError", "cannot write " + path.string());
  out << "id,text,label\n";
  for (const auto& s : dataset.samples) {
    out << csv_escape(s.id) << ',' << csv_escape(s.text) << ','
        << (s.gold_label ? label_name(*s.gold_label) : std::string_view{}) << '\n';
  }
}

}  // namespace alsent::text
