#include "fairicl/selection.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "fairicl/errors.hpp"

namespace fairicl {

bool BatchContext::is_proxy(RecordId id) const {
  return std::find(proxy.begin(), proxy.end(), id) != proxy.end();
}

std::vector<RecordId> BatchContext::unique_proxy() const {
  std::vector<RecordId> out;
  for (auto id : proxy) {
    if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
  }
  return out;
}

std::vector<Batch> partition(const Dataset& test, std::size_t m) {
  if (m == 0) throw std::invalid_argument("partition: batch size m must be positive");
  if (test.size() % m != 0) {
    throw std::invalid_argument("partition: " + std::to_string(test.size()) +
                                " test records are not divisible into batches of " +
                                std::to_string(m));
  }
  std::vector<Batch> batches(test.size() / m);
  for (std::size_t i = 0; i < test.size(); ++i) {
    auto& b = batches[i / m];
    b.index = i / m;
    b.records.push_back(test.records()[i]);
  }
  return batches;
}

SupportSet build_support(const VectorStore& store, const Embedding& query, int z, std::size_t k,
                         TestPosition position) {
  return SupportSet{position, store.query(query, k, z)};
}

BatchContext build_batch_context(const Batch& batch, const VectorStore& store,
                                 const Embedder& embedder, const Schema& schema, std::size_t k) {
  BatchContext ctx;
  ctx.batch_index = batch.index;
  std::set<RecordId> support_union;
  for (std::size_t j = 0; j < batch.records.size(); ++j) {
    const auto& record = batch.records[j];
    const TestPosition pos{batch.index, j};
    SupportSet support;
    try {
      support = build_support(store, embedder.embed(to_text(record, schema, false)), record.z, k, pos);
    } catch (const InsufficientSupportError& e) {
      throw InsufficientSupportError("batch " + std::to_string(batch.index) + " position " +
                                         std::to_string(j) + ": " + e.what(),
                                     e.requested(), e.available());
    }
    ctx.test_ids.push_back(record.id);
    ctx.proxy.push_back(support.ranked_ids.front());
    support_union.insert(support.ranked_ids.begin(), support.ranked_ids.end());
    ctx.support.push_back(std::move(support));
  }
  for (auto id : support_union) {
    if (!ctx.is_proxy(id)) ctx.candidate_pool.push_back(id);
  }
  return ctx;
}

nlohmann::json to_json(const BatchContext& context) {
  nlohmann::json support = nlohmann::json::array();
  for (const auto& s : context.support) {
    support.push_back({{"position", s.position.position}, {"ranked_ids", s.ranked_ids}});
  }
  return {{"batch", context.batch_index},
          {"test_ids", context.test_ids},
          {"proxy", context.proxy},
          {"candidate_pool", context.candidate_pool},
          {"support", std::move(support)}};
}

}  // namespace fairicl
