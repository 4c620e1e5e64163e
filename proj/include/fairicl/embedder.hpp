#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairicl/dataset.hpp"
#include "fairicl/http.hpp"

namespace fairicl {

struct Embedding {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  bool operator==(const Embedding&) const = default;
};

/// Maps serialized record text to a fixed-length vector. Implementations are
/// deterministic: identical text yields an identical embedding.
class Embedder {
 public:
  virtual ~Embedder() = default;

  virtual std::string id() const = 0;
  // 0 until known for embedders that learn their width from the first call.
  virtual std::size_t dimension() const = 0;
  virtual Embedding embed(std::string_view text) const = 0;
  virtual std::vector<Embedding> embed_many(std::span<const std::string> texts) const;
};

/// Offline embedder over the record's feature values: each categorical value
/// is hashed into one of kBuckets one-hot slots for its feature, each numeric
/// value is min-max scaled with bounds taken from the training set (and
/// clamped to [0, 1]). Text must follow the schema's to_text layout; a trailing
/// label clause is ignored.
class LocalEmbedder final : public Embedder {
 public:
  static constexpr std::size_t kBuckets = 16;

  LocalEmbedder(Schema schema, const Dataset& train);

  // Includes a fingerprint of the schema and numeric bounds, so caches keyed
  // on it never mix embedders fitted on different training sets.
  std::string id() const override { return id_; }
  std::size_t dimension() const override { return dimension_; }
  Embedding embed(std::string_view text) const override;

  Embedding embed_features(const std::map<std::string, std::string>& features) const;
  std::size_t width_of(const std::string& feature) const;

  struct Bounds {
    double min = 0.0;
    double max = 0.0;
  };
  const std::map<std::string, Bounds>& numeric_bounds() const { return bounds_; }

 private:
  Schema schema_;
  std::map<std::string, Bounds> bounds_;
  std::size_t dimension_ = 0;
  std::string id_;
};

/// OpenAI-embeddings-compatible client: POST {"model", "input": [text...]},
/// reads data[i].embedding.
class RemoteEmbedder final : public Embedder {
 public:
  RemoteEmbedder(HttpEndpoint endpoint, std::string model, std::size_t batch_size = 64);

  std::string id() const override { return "remote:" + model_; }
  std::size_t dimension() const override;
  Embedding embed(std::string_view text) const override;
  std::vector<Embedding> embed_many(std::span<const std::string> texts) const override;

 private:
  HttpEndpoint endpoint_;
  std::string model_;
  std::size_t batch_size_;
  mutable std::mutex mutex_;
  mutable std::size_t dimension_ = 0;
};

// Parses a number with std::from_chars; nullopt when the whole string is not
// a finite number.
std::optional<double> parse_number(std::string_view text);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace fairicl
