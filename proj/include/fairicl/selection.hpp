#pragma once

#include <cstddef>
#include <vector>

#include <json.hpp>

#include "fairicl/dataset.hpp"
#include "fairicl/embedder.hpp"
#include "fairicl/vector_store.hpp"

namespace fairicl {

struct TestPosition {
  std::size_t batch = 0;
  std::size_t position = 0;
  bool operator==(const TestPosition&) const = default;
};

/// The k nearest same-z training records of one test example; ranked_ids[0]
/// is the closest (rank 1).
struct SupportSet {
  TestPosition position;
  std::vector<RecordId> ranked_ids;
};

/// A contiguous slice of the test set. Holds the full test records, labels
/// included; only the harness's evaluation step may read `y`.
struct Batch {
  std::size_t index = 0;
  std::vector<Record> records;
};

/// Everything selection needs for one batch:
///   proxy[j]        rank-1 neighbour of test position j (duplicates allowed)
///   candidate_pool  union of all support sets minus the proxy ids, sorted
struct BatchContext {
  std::size_t batch_index = 0;
  std::vector<RecordId> test_ids;
  std::vector<RecordId> proxy;
  std::vector<SupportSet> support;
  std::vector<RecordId> candidate_pool;

  std::size_t size() const { return test_ids.size(); }
  bool is_proxy(RecordId id) const;
  // Deduplicated proxy ids in first-position order.
  std::vector<RecordId> unique_proxy() const;
};

// Contiguous batches of size m in test order. Throws std::invalid_argument
// when m is 0 or does not divide |test|.
std::vector<Batch> partition(const Dataset& test, std::size_t m);

SupportSet build_support(const VectorStore& store, const Embedding& query, int z, std::size_t k,
                         TestPosition position = {});

// Embeds each test record without its label and retrieves its support set.
// InsufficientSupportError is rethrown annotated with batch and position.
BatchContext build_batch_context(const Batch& batch, const VectorStore& store,
                                 const Embedder& embedder, const Schema& schema, std::size_t k);

nlohmann::json to_json(const BatchContext& context);

}  // namespace fairicl
