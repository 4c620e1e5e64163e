#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairicl/dataset.hpp"
#include "fairicl/embedder.hpp"

namespace fairicl {

struct StoreEntry {
  RecordId id = 0;
  int z = 0;
  Embedding embedding;
};

struct ScoredId {
  RecordId id = 0;
  double similarity = 0.0;
};

// dot(a, b) / (|a| |b|); 0 when either vector has zero norm.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Exact cosine k-NN over training-record embeddings, filtered by the binary
/// sensitive attribute. Immutable after construction.
class VectorStore {
 public:
  static constexpr int kFormatVersion = 1;

  VectorStore(std::size_t dimension, std::vector<StoreEntry> entries, std::string embedder_id = {});

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return entries_.size(); }
  std::span<const StoreEntry> entries() const { return entries_; }
  const std::string& embedder_id() const { return embedder_id_; }
  std::size_t count_with_z(int z) const;

  // The k entries with z == z_filter closest to q, by descending cosine
  // similarity, ties broken by ascending id. Throws InsufficientSupportError
  // when fewer than k entries match the filter.
  std::vector<ScoredId> query_scored(const Embedding& q, std::size_t k, int z_filter) const;
  std::vector<RecordId> query(const Embedding& q, std::size_t k, int z_filter) const;

  nlohmann::json to_json() const;
  static VectorStore from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static VectorStore load(const std::filesystem::path& path);

 private:
  std::size_t dimension_;
  std::vector<StoreEntry> entries_;
  std::vector<double> norms_;
  std::string embedder_id_;
};

// Embeds every training record (without its label) in record order.
VectorStore build_store(const Dataset& train, const Embedder& embedder);

}  // namespace fairicl
