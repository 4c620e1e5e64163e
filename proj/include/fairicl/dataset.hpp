#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fairicl {

using RecordId = std::uint64_t;

/// Column roles for a tabular binary-classification dataset with one binary
/// protected attribute.
///
/// The sensitive column may also be listed as a feature (Adult's `sex` is
/// both). Features listed in `numeric_features` are min-max scaled by the
/// local embedder; everything else is treated as categorical.
struct Schema {
  std::string name;
  std::vector<std::string> feature_names;
  std::vector<std::string> numeric_features;
  std::string label_name;
  std::string label_positive_value;
  std::string label_negative_value;
  std::string sensitive_name;
  std::string sensitive_reference_value;  // maps to z = 1
  std::string task_instruction;

  bool is_numeric(std::string_view feature) const;
  const std::string& label_surface(int y) const;

  // Throws SchemaError when a required field is empty, a feature is
  // duplicated, or the label column is also a feature.
  void validate() const;
};

Schema parse_schema(std::string_view text);
Schema load_schema(const std::filesystem::path& path);

/// Directory holding the shipped `<name>.schema` presets. Honours the
/// FAIRICL_PRESET_DIR environment variable.
std::filesystem::path preset_directory();
Schema schema_preset(std::string_view name);

struct Record {
  RecordId id = 0;
  std::map<std::string, std::string> features;
  int y = 0;
  int z = 0;
};

/// Immutable, id-indexed collection of records sharing a schema.
class Dataset {
 public:
  Dataset() = default;
  Dataset(Schema schema, std::vector<Record> records);

  const Schema& schema() const { return schema_; }
  std::span<const Record> records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  bool contains(RecordId id) const { return index_.contains(id); }

  // Throws std::out_of_range for unknown ids.
  const Record& at(RecordId id) const;

 private:
  Schema schema_;
  std::vector<Record> records_;
  std::unordered_map<RecordId, std::size_t> index_;
};

struct RowError {
  std::size_t line = 0;  // 1-based line in the source file
  std::string message;
};

struct LoadResult {
  Dataset dataset;
  std::vector<RowError> errors;
};

// Rows whose label or sensitive value cannot be mapped are skipped and
// reported in LoadResult::errors. Extra CSV columns are ignored.
LoadResult load_csv(const std::filesystem::path& path, const Schema& schema);
LoadResult parse_csv(std::string_view text, const Schema& schema);

/// Splits one CSV line (RFC 4180 quoting, unquoted fields trimmed).
std::vector<std::string> split_csv_line(std::string_view line);

// True for the values treated as missing: empty (after trimming) or "?".
bool is_null_value(std::string_view value);

// Drops rows with a missing value in any schema feature and renumbers ids
// densely from 0, preserving order.
Dataset clean(const Dataset& dataset);

struct Split {
  Dataset train;
  Dataset test;
};

// Seeded Fisher-Yates shuffle; the first n_test rows become the test set.
// Record ids are kept, so train and test ids are disjoint.
Split split(const Dataset& dataset, std::uint64_t seed, std::size_t n_test);

/// "feature is value, feature is value[, label is surface]" in schema order.
std::string to_text(const Record& record, const Schema& schema, bool include_label);
std::string to_text(const std::map<std::string, std::string>& features, const Schema& schema,
                    std::optional<int> label);

struct ParsedText {
  std::map<std::string, std::string> features;
  std::optional<int> label;
};

// Inverse of to_text for text produced with the same schema. Returns nullopt
// when the text does not follow the layout.
std::optional<ParsedText> parse_text(std::string_view text, const Schema& schema);

}  // namespace fairicl
