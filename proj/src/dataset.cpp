#include "fairicl/dataset.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>
#include <stdexcept>

#include "fairicl/errors.hpp"
#include "fairicl/keyvalue.hpp"
#include "fairicl/rng.hpp"

#ifndef FAIRICL_PRESET_DIR
#define FAIRICL_PRESET_DIR "presets"
#endif

namespace fairicl {

bool Schema::is_numeric(std::string_view feature) const {
  return std::find(numeric_features.begin(), numeric_features.end(), feature) !=
         numeric_features.end();
}

const std::string& Schema::label_surface(int y) const {
  return y == 1 ? label_positive_value : label_negative_value;
}

void Schema::validate() const {
  if (feature_names.empty()) throw SchemaError("schema '" + name + "' has no features");
  if (label_name.empty()) throw SchemaError("schema '" + name + "' has no label column");
  if (sensitive_name.empty()) throw SchemaError("schema '" + name + "' has no sensitive column");
  if (label_positive_value.empty() || label_negative_value.empty()) {
    throw SchemaError("schema '" + name + "' needs both label_positive and label_negative");
  }
  if (sensitive_reference_value.empty()) {
    throw SchemaError("schema '" + name + "' has no sensitive_reference value");
  }
  std::set<std::string> seen;
  for (const auto& f : feature_names) {
    if (!seen.insert(f).second) throw SchemaError("duplicate feature '" + f + "'");
    if (f == label_name) throw SchemaError("label '" + f + "' cannot also be a feature");
  }
  for (const auto& f : numeric_features) {
    if (!seen.contains(f)) throw SchemaError("numeric feature '" + f + "' is not a feature");
  }
}

Schema parse_schema(std::string_view text) {
  Schema schema;
  for (const auto& kv : parse_key_values(text)) {
    if (kv.key == "name") {
      schema.name = kv.value;
    } else if (kv.key == "features") {
      schema.feature_names = split_list(kv.value);
    } else if (kv.key == "numeric") {
      schema.numeric_features = split_list(kv.value);
    } else if (kv.key == "label") {
      schema.label_name = kv.value;
    } else if (kv.key == "label_positive") {
      schema.label_positive_value = kv.value;
    } else if (kv.key == "label_negative") {
      schema.label_negative_value = kv.value;
    } else if (kv.key == "sensitive") {
      schema.sensitive_name = kv.value;
    } else if (kv.key == "sensitive_reference") {
      schema.sensitive_reference_value = kv.value;
    } else if (kv.key == "instruction") {
      schema.task_instruction = kv.value;
    } else {
      throw SchemaError("line " + std::to_string(kv.line) + ": unknown schema key '" + kv.key +
                        "'");
    }
  }
  schema.validate();
  return schema;
}

Schema load_schema(const std::filesystem::path& path) {
  try {
    return parse_schema(read_file(path.string()));
  } catch (const ConfigError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  } catch (const std::runtime_error& e) {
    if (dynamic_cast<const SchemaError*>(&e)) throw;
    throw SchemaError(e.what());
  }
}

std::filesystem::path preset_directory() {
  if (const char* env = std::getenv("FAIRICL_PRESET_DIR"); env && *env) return env;
  return FAIRICL_PRESET_DIR;
}

Schema schema_preset(std::string_view name) {
  return load_schema(preset_directory() / (std::string(name) + ".schema"));
}

Dataset::Dataset(Schema schema, std::vector<Record> records)
    : schema_(std::move(schema)), records_(std::move(records)) {
  index_.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (!index_.emplace(records_[i].id, i).second) {
      throw std::invalid_argument("duplicate record id " + std::to_string(records_[i].id));
    }
  }
}

const Record& Dataset::at(RecordId id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw std::out_of_range("unknown record id " + std::to_string(id));
  return records_[it->second];
}

bool is_null_value(std::string_view value) {
  const auto v = trim(value);
  return v.empty() || v == "?";
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
      was_quoted = true;
      field = trim(field);
    } else if (c == ',') {
      fields.push_back(was_quoted ? field : trim(field));
      field.clear();
      was_quoted = false;
    } else if (!(was_quoted && (c == ' ' || c == '\t'))) {
      field += c;
    }
  }
  fields.push_back(was_quoted ? field : trim(field));
  return fields;
}

namespace {

// Adult's test split spells labels with a trailing period (">50K.").
bool label_matches(const std::string& value, const std::string& surface) {
  return value == surface || value == surface + ".";
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = end + 1;
  }
  return lines;
}

}  // namespace

LoadResult parse_csv(std::string_view text, const Schema& schema) {
  schema.validate();
  const auto lines = split_lines(text);
  std::size_t header_line = 0;
  while (header_line < lines.size() && trim(lines[header_line]).empty()) ++header_line;
  if (header_line == lines.size()) throw SchemaError("CSV has no header row");

  const auto header = split_csv_line(lines[header_line]);
  auto column_of = [&](const std::string& name) {
    std::size_t found = header.size();
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] != name) continue;
      if (found != header.size()) throw SchemaError("column '" + name + "' appears twice");
      found = c;
    }
    if (found == header.size()) throw SchemaError("missing column '" + name + "'");
    return found;
  };
  std::vector<std::size_t> feature_cols;
  for (const auto& f : schema.feature_names) feature_cols.push_back(column_of(f));
  const auto label_col = column_of(schema.label_name);
  const auto sensitive_col = column_of(schema.sensitive_name);

  LoadResult result;
  std::vector<Record> records;
  for (std::size_t li = header_line + 1; li < lines.size(); ++li) {
    if (trim(lines[li]).empty()) continue;
    const auto fields = split_csv_line(lines[li]);
    const auto line_no = li + 1;
    if (fields.size() != header.size()) {
      result.errors.push_back({line_no, "expected " + std::to_string(header.size()) +
                                            " fields, found " + std::to_string(fields.size())});
      continue;
    }
    const auto& label = fields[label_col];
    const auto& sensitive = fields[sensitive_col];
    Record record;
    if (label_matches(label, schema.label_positive_value)) {
      record.y = 1;
    } else if (label_matches(label, schema.label_negative_value)) {
      record.y = 0;
    } else {
      result.errors.push_back({line_no, "unmappable label '" + label + "'"});
      continue;
    }
    if (is_null_value(sensitive)) {
      result.errors.push_back({line_no, "missing sensitive value"});
      continue;
    }
    record.z = sensitive == schema.sensitive_reference_value ? 1 : 0;
    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
      record.features.emplace(schema.feature_names[f], fields[feature_cols[f]]);
    }
    record.id = records.size();
    records.push_back(std::move(record));
  }
  result.dataset = Dataset(schema, std::move(records));
  return result;
}

LoadResult load_csv(const std::filesystem::path& path, const Schema& schema) {
  if (!std::filesystem::exists(path)) throw SchemaError("no such file: " + path.string());
  return parse_csv(read_file(path.string()), schema);
}

Dataset clean(const Dataset& dataset) {
  const auto& schema = dataset.schema();
  std::vector<Record> kept;
  for (const auto& record : dataset.records()) {
    const bool complete = std::all_of(
        schema.feature_names.begin(), schema.feature_names.end(), [&](const std::string& f) {
          const auto it = record.features.find(f);
          return it != record.features.end() && !is_null_value(it->second);
        });
    if (!complete) continue;
    Record copy = record;
    copy.id = kept.size();
    kept.push_back(std::move(copy));
  }
  return Dataset(schema, std::move(kept));
}

Split split(const Dataset& dataset, std::uint64_t seed, std::size_t n_test) {
  if (n_test > dataset.size()) {
    throw std::invalid_argument("n_test " + std::to_string(n_test) + " exceeds dataset size " +
                                std::to_string(dataset.size()));
  }
  const auto order = rng::permutation(dataset.size(), seed);
  std::vector<Record> test;
  std::vector<Record> train;
  test.reserve(n_test);
  train.reserve(dataset.size() - n_test);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& record = dataset.records()[order[i]];
    (i < n_test ? test : train).push_back(record);
  }
  return {Dataset(dataset.schema(), std::move(train)), Dataset(dataset.schema(), std::move(test))};
}

std::string to_text(const std::map<std::string, std::string>& features, const Schema& schema,
                    std::optional<int> label) {
  std::string out;
  for (const auto& name : schema.feature_names) {
    if (!out.empty()) out += ", ";
    out += name;
    out += " is ";
    if (const auto it = features.find(name); it != features.end()) out += it->second;
  }
  if (label) {
    out += ", ";
    out += schema.label_name;
    out += " is ";
    out += schema.label_surface(*label);
  }
  return out;
}

std::string to_text(const Record& record, const Schema& schema, bool include_label) {
  return to_text(record.features, schema,
                 include_label ? std::optional<int>(record.y) : std::nullopt);
}

std::optional<ParsedText> parse_text(std::string_view text, const Schema& schema) {
  ParsedText parsed;
  std::size_t pos = 0;
  const auto& names = schema.feature_names;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const std::string prefix = (i == 0 ? "" : ", ") + names[i] + " is ";
    if (text.substr(pos, prefix.size()) != prefix) return std::nullopt;
    pos += prefix.size();
    std::size_t end = text.size();
    if (i + 1 < names.size()) {
      end = text.find(", " + names[i + 1] + " is ", pos);
      if (end == std::string_view::npos) return std::nullopt;
    } else {
      const auto label_at = text.rfind(", " + schema.label_name + " is ");
      if (label_at != std::string_view::npos && label_at >= pos) end = label_at;
    }
    parsed.features.emplace(names[i], std::string(text.substr(pos, end - pos)));
    pos = end;
  }
  if (pos == text.size()) return parsed;
  const std::string label_prefix = ", " + schema.label_name + " is ";
  if (text.substr(pos, label_prefix.size()) != label_prefix) return std::nullopt;
  const auto surface = text.substr(pos + label_prefix.size());
  if (surface == schema.label_positive_value) {
    parsed.label = 1;
  } else if (surface == schema.label_negative_value) {
    parsed.label = 0;
  } else {
    return std::nullopt;
  }
  return parsed;
}

}  // namespace fairicl
