#include "fairicl/embedder.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "fairicl/errors.hpp"
#include "fairicl/keyvalue.hpp"

namespace fairicl {

std::vector<Embedding> Embedder::embed_many(std::span<const std::string> texts) const {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed(t));
  return out;
}

std::optional<double> parse_number(std::string_view text) {
  const auto trimmed = trim(text);
  if (trimmed.empty()) return std::nullopt;
  const char* first = trimmed.data();
  const char* last = first + trimmed.size();
  if (*first == '+') ++first;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

LocalEmbedder::LocalEmbedder(Schema schema, const Dataset& train) : schema_(std::move(schema)) {
  for (const auto& feature : schema_.feature_names) {
    dimension_ += width_of(feature);
    if (!schema_.is_numeric(feature)) continue;
    Bounds b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& record : train.records()) {
      const auto it = record.features.find(feature);
      if (it == record.features.end()) continue;
      if (const auto v = parse_number(it->second)) {
        b.min = std::min(b.min, *v);
        b.max = std::max(b.max, *v);
      }
    }
    if (b.min > b.max) b = {0.0, 0.0};
    bounds_.emplace(feature, b);
  }
  std::string fingerprint = schema_.name;
  for (const auto& feature : schema_.feature_names) {
    fingerprint += '|' + feature;
    if (const auto it = bounds_.find(feature); it != bounds_.end()) {
      fingerprint += ':' + std::to_string(it->second.min) + ':' + std::to_string(it->second.max);
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(fnv1a64(fingerprint)));
  id_ = "local-hash16-" + std::string(hex);
}

std::size_t LocalEmbedder::width_of(const std::string& feature) const {
  return schema_.is_numeric(feature) ? 1 : kBuckets;
}

Embedding LocalEmbedder::embed_features(const std::map<std::string, std::string>& features) const {
  Embedding e;
  e.values.assign(dimension_, 0.0);
  std::size_t offset = 0;
  for (const auto& feature : schema_.feature_names) {
    const auto it = features.find(feature);
    const std::string_view value = it == features.end() ? std::string_view{} : it->second;
    if (schema_.is_numeric(feature)) {
      const auto& b = bounds_.at(feature);
      const auto v = parse_number(value);
      if (v && b.max > b.min) {
        e.values[offset] = std::clamp((*v - b.min) / (b.max - b.min), 0.0, 1.0);
      }
    } else {
      e.values[offset + fnv1a64(value) % kBuckets] = 1.0;
    }
    offset += width_of(feature);
  }
  return e;
}

Embedding LocalEmbedder::embed(std::string_view text) const {
  if (text.empty()) throw std::invalid_argument("cannot embed empty text");
  const auto parsed = parse_text(text, schema_);
  if (!parsed) {
    throw std::invalid_argument("text does not follow the '" + schema_.name +
                                "' serialization: " + std::string(text.substr(0, 120)));
  }
  return embed_features(parsed->features);
}

RemoteEmbedder::RemoteEmbedder(HttpEndpoint endpoint, std::string model, std::size_t batch_size)
    : endpoint_(std::move(endpoint)), model_(std::move(model)), batch_size_(std::max<std::size_t>(1, batch_size)) {}

std::size_t RemoteEmbedder::dimension() const {
  std::lock_guard lock(mutex_);
  return dimension_;
}

Embedding RemoteEmbedder::embed(std::string_view text) const {
  const std::string one(text);
  return embed_many(std::span<const std::string>(&one, 1)).front();
}

std::vector<Embedding> RemoteEmbedder::embed_many(std::span<const std::string> texts) const {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (std::size_t start = 0; start < texts.size(); start += batch_size_) {
    const auto chunk = texts.subspan(start, std::min(batch_size_, texts.size() - start));
    for (const auto& t : chunk) {
      if (t.empty()) throw std::invalid_argument("cannot embed empty text");
    }
    nlohmann::json body{{"model", model_}, {"input", chunk}};
    const auto response = post_json(endpoint_, body);
    if (!response.contains("data") || !response["data"].is_array() ||
        response["data"].size() != chunk.size()) {
      throw BackendError("embedding response missing data[" + std::to_string(chunk.size()) + "]");
    }
    for (const auto& item : response["data"]) {
      Embedding e;
      try {
        e.values = item.at("embedding").get<std::vector<double>>();
      } catch (const nlohmann::json::exception& ex) {
        throw BackendError(std::string("malformed embedding: ") + ex.what());
      }
      if (e.values.empty() ||
          !std::all_of(e.values.begin(), e.values.end(), [](double v) { return std::isfinite(v); })) {
        throw BackendError("embedding is empty or not finite");
      }
      {
        std::lock_guard lock(mutex_);
        if (dimension_ == 0) dimension_ = e.values.size();
        if (e.values.size() != dimension_) {
          throw BackendError("embedding width " + std::to_string(e.values.size()) +
                             " differs from " + std::to_string(dimension_));
        }
      }
      out.push_back(std::move(e));
    }
  }
  return out;
}

}  // namespace fairicl
