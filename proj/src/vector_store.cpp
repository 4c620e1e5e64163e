#include "fairicl/vector_store.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "fairicl/errors.hpp"

namespace fairicl {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

double similarity_from(double dot_product, double norm_a, double norm_b) {
  if (norm_a == 0.0 || norm_b == 0.0) return 0.0;
  return dot_product / (norm_a * norm_b);
}

}  // namespace

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine_similarity: length mismatch");
  return similarity_from(dot(a, b), std::sqrt(dot(a, a)), std::sqrt(dot(b, b)));
}

VectorStore::VectorStore(std::size_t dimension, std::vector<StoreEntry> entries,
                         std::string embedder_id)
    : dimension_(dimension), entries_(std::move(entries)), embedder_id_(std::move(embedder_id)) {
  norms_.reserve(entries_.size());
  for (const auto& e : entries_) {
    if (e.embedding.size() != dimension_) {
      throw std::invalid_argument("entry " + std::to_string(e.id) + " has width " +
                                  std::to_string(e.embedding.size()) + ", store expects " +
                                  std::to_string(dimension_));
    }
    if (e.z != 0 && e.z != 1) throw std::invalid_argument("entry z must be 0 or 1");
    norms_.push_back(std::sqrt(dot(e.embedding.values, e.embedding.values)));
  }
}

std::size_t VectorStore::count_with_z(int z) const {
  return static_cast<std::size_t>(
      std::count_if(entries_.begin(), entries_.end(), [z](const StoreEntry& e) { return e.z == z; }));
}

std::vector<ScoredId> VectorStore::query_scored(const Embedding& q, std::size_t k,
                                                int z_filter) const {
  if (k == 0) throw std::invalid_argument("query: k must be at least 1");
  if (q.size() != dimension_) {
    throw std::invalid_argument("query width " + std::to_string(q.size()) +
                                " does not match store dimension " + std::to_string(dimension_));
  }
  const double q_norm = std::sqrt(dot(q.values, q.values));
  std::vector<ScoredId> candidates;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].z != z_filter) continue;
    candidates.push_back(
        {entries_[i].id, similarity_from(dot(q.values, entries_[i].embedding.values), q_norm, norms_[i])});
  }
  if (candidates.size() < k) {
    throw InsufficientSupportError("need " + std::to_string(k) + " entries with z=" +
                                       std::to_string(z_filter) + ", store has " +
                                       std::to_string(candidates.size()) + " (short by " +
                                       std::to_string(k - candidates.size()) + ")",
                                   k, candidates.size());
  }
  const auto closer = [](const ScoredId& a, const ScoredId& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.id < b.id;
  };
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                    candidates.end(), closer);
  candidates.resize(k);
  return candidates;
}

std::vector<RecordId> VectorStore::query(const Embedding& q, std::size_t k, int z_filter) const {
  std::vector<RecordId> ids;
  for (const auto& s : query_scored(q, k, z_filter)) ids.push_back(s.id);
  return ids;
}

nlohmann::json VectorStore::to_json() const {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : entries_) {
    entries.push_back({{"id", e.id}, {"z", e.z}, {"vector", e.embedding.values}});
  }
  return {{"format", "fairicl-vector-store"},
          {"version", kFormatVersion},
          {"embedder", embedder_id_},
          {"dimension", dimension_},
          {"entries", std::move(entries)}};
}

VectorStore VectorStore::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "fairicl-vector-store" || j.value("version", 0) != kFormatVersion) {
    throw std::runtime_error("not a version " + std::to_string(kFormatVersion) + " vector store");
  }
  std::vector<StoreEntry> entries;
  for (const auto& e : j.at("entries")) {
    entries.push_back({e.at("id").get<RecordId>(), e.at("z").get<int>(),
                       Embedding{e.at("vector").get<std::vector<double>>()}});
  }
  return VectorStore(j.at("dimension").get<std::size_t>(), std::move(entries),
                     j.value("embedder", ""));
}

void VectorStore::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json().dump() << '\n';
}

VectorStore VectorStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return from_json(nlohmann::json::parse(in));
}

VectorStore build_store(const Dataset& train, const Embedder& embedder) {
  if (train.empty()) throw std::invalid_argument("build_store: training set is empty");
  std::vector<std::string> texts;
  texts.reserve(train.size());
  for (const auto& r : train.records()) texts.push_back(to_text(r, train.schema(), false));

  std::vector<Embedding> embeddings;
  try {
    embeddings = embedder.embed_many(texts);
  } catch (const BackendError& e) {
    throw BackendError(std::string("embedding training records: ") + e.what(), e.attempts());
  }
  std::vector<StoreEntry> entries;
  entries.reserve(train.size());
  std::size_t dimension = embeddings.empty() ? 0 : embeddings.front().size();
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto& record = train.records()[i];
    if (embeddings[i].size() != dimension) {
      throw std::runtime_error("record " + std::to_string(record.id) + " embedded with width " +
                               std::to_string(embeddings[i].size()));
    }
    entries.push_back({record.id, record.z, std::move(embeddings[i])});
  }
  return VectorStore(dimension, std::move(entries), embedder.id());
}

}  // namespace fairicl
