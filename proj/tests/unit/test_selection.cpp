#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "fairicl/embedder.hpp"
#include "fairicl/errors.hpp"
#include "fairicl/selection.hpp"
#include "fixtures.hpp"

using namespace fairicl;
using fairicl::testing::random_toy_dataset;
using fairicl::testing::toy_schema;

namespace {

// Brute-force k-NN: score every same-z training record, sort by
// (-similarity, id), keep k.
std::vector<RecordId> naive_knn(const Dataset& train, const LocalEmbedder& embedder,
                                const Record& query, std::size_t k) {
  const auto q = embedder.embed(to_text(query, train.schema(), false));
  std::vector<std::pair<double, RecordId>> scored;
  for (const auto& r : train.records()) {
    if (r.z != query.z) continue;
    const auto e = embedder.embed(to_text(r, train.schema(), false));
    scored.emplace_back(-cosine_similarity(q.values, e.values), r.id);
  }
  std::sort(scored.begin(), scored.end());
  std::vector<RecordId> out;
  for (std::size_t i = 0; i < k && i < scored.size(); ++i) out.push_back(scored[i].second);
  return out;
}

// Splits a random toy dataset into train (ids kept) and a test slice.
struct Split {
  Dataset train;
  Dataset test;
};

Split toy_split(std::size_t n_train, std::size_t n_test, std::uint64_t seed) {
  const auto all = random_toy_dataset(n_train + n_test, seed);
  std::vector<Record> train(all.records().begin(), all.records().begin() + n_train);
  std::vector<Record> test(all.records().begin() + n_train, all.records().end());
  return {Dataset(toy_schema(), std::move(train)), Dataset(toy_schema(), std::move(test))};
}

BatchContext hand_context(std::vector<std::vector<RecordId>> supports) {
  BatchContext ctx;
  std::set<RecordId> all;
  for (std::size_t j = 0; j < supports.size(); ++j) {
    ctx.test_ids.push_back(1000 + j);
    ctx.proxy.push_back(supports[j].front());
    all.insert(supports[j].begin(), supports[j].end());
    ctx.support.push_back({{0, j}, std::move(supports[j])});
  }
  for (auto id : all) {
    if (!ctx.is_proxy(id)) ctx.candidate_pool.push_back(id);
  }
  return ctx;
}

}  // namespace

TEST_CASE("partition") {
  const auto test = random_toy_dataset(12, 1);
  const auto batches = partition(test, 4);
  REQUIRE(batches.size() == 3);
  for (std::size_t b = 0; b < 3; ++b) {
    CHECK(batches[b].index == b);
    REQUIRE(batches[b].records.size() == 4);
    for (std::size_t j = 0; j < 4; ++j) CHECK(batches[b].records[j].id == test.records()[4 * b + j].id);
  }
  CHECK(partition(test, 1).size() == 12);
  CHECK(partition(test, 12).size() == 1);
  CHECK_THROWS_AS(partition(test, 5), std::invalid_argument);
  CHECK_THROWS_AS(partition(test, 0), std::invalid_argument);
}

TEST_CASE("shared rank-1 neighbour appears twice in the proxy list") {
  const auto ctx = hand_context({{7, 3, 9}, {7, 9, 4}, {2, 7, 3}});
  CHECK(ctx.proxy == std::vector<RecordId>{7, 7, 2});
  CHECK(ctx.unique_proxy() == std::vector<RecordId>{7, 2});
  CHECK(ctx.candidate_pool == std::vector<RecordId>{3, 4, 9});
  CHECK(ctx.is_proxy(7));
  CHECK_FALSE(ctx.is_proxy(3));
}

TEST_CASE("build_batch_context matches a brute-force oracle") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    const auto split = toy_split(80, 12, seed);
    const LocalEmbedder embedder(toy_schema(), split.train);
    const auto store = build_store(split.train, embedder);
    for (std::size_t k : {2u, 4u, 7u}) {
      for (const auto& batch : partition(split.test, 4)) {
        CAPTURE(seed);
        CAPTURE(k);
        const auto ctx = build_batch_context(batch, store, embedder, toy_schema(), k);
        REQUIRE(ctx.size() == 4);
        std::set<RecordId> support_union;
        for (std::size_t j = 0; j < 4; ++j) {
          const auto& record = batch.records[j];
          CHECK(ctx.test_ids[j] == record.id);
          CHECK(ctx.support[j].position == TestPosition{batch.index, j});
          const auto expected = naive_knn(split.train, embedder, record, k);
          CHECK(ctx.support[j].ranked_ids == expected);
          CHECK(ctx.proxy[j] == expected.front());
          for (auto id : ctx.support[j].ranked_ids) {
            CHECK(split.train.at(id).z == record.z);
            support_union.insert(id);
          }
        }
        // Candidates are the support union minus the proxy, sorted, and
        // disjoint from the proxy.
        CHECK(std::is_sorted(ctx.candidate_pool.begin(), ctx.candidate_pool.end()));
        std::set<RecordId> expected_pool;
        for (auto id : support_union) {
          if (std::find(ctx.proxy.begin(), ctx.proxy.end(), id) == ctx.proxy.end()) {
            expected_pool.insert(id);
          }
        }
        CHECK(std::vector<RecordId>(expected_pool.begin(), expected_pool.end()) == ctx.candidate_pool);
        for (auto id : ctx.candidate_pool) CHECK_FALSE(ctx.is_proxy(id));
        // Test ids never leak into selection.
        for (auto id : ctx.test_ids) CHECK(support_union.count(id) == 0);
      }
    }
  }
}

TEST_CASE("context does not depend on training-record order") {
  const auto split = toy_split(60, 8, 11);
  const LocalEmbedder embedder(toy_schema(), split.train);
  const auto store = build_store(split.train, embedder);

  std::vector<StoreEntry> shuffled(store.entries().begin(), store.entries().end());
  std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937_64(5));
  const VectorStore reordered(store.dimension(), std::move(shuffled), store.embedder_id());

  for (const auto& batch : partition(split.test, 4)) {
    const auto a = build_batch_context(batch, store, embedder, toy_schema(), 5);
    const auto b = build_batch_context(batch, reordered, embedder, toy_schema(), 5);
    CHECK(to_json(a) == to_json(b));
  }
}

TEST_CASE("smallest batch with the smallest support") {
  const auto split = toy_split(30, 3, 8);
  const LocalEmbedder embedder(toy_schema(), split.train);
  const auto store = build_store(split.train, embedder);
  for (const auto& batch : partition(split.test, 1)) {
    const auto ctx = build_batch_context(batch, store, embedder, toy_schema(), 2);
    CHECK(ctx.proxy.size() == 1);
    CHECK(ctx.candidate_pool == std::vector<RecordId>{ctx.support[0].ranked_ids[1]});
  }
}

TEST_CASE("insufficient support is annotated with the position") {
  std::vector<Record> records;
  for (RecordId i = 0; i < 6; ++i) records.push_back(testing::toy_record(i, "red", int(i), i < 5, 0));
  const Dataset train(toy_schema(), records);
  const LocalEmbedder embedder(toy_schema(), train);
  const auto store = build_store(train, embedder);
  Batch batch;
  batch.index = 3;
  batch.records = {testing::toy_record(50, "red", 1, true, 0), testing::toy_record(51, "red", 1, false, 0)};
  try {
    build_batch_context(batch, store, embedder, toy_schema(), 2);
    FAIL("expected InsufficientSupportError");
  } catch (const InsufficientSupportError& e) {
    CHECK(e.requested() == 2);
    CHECK(e.available() == 1);
    CHECK(std::string(e.what()).find("batch 3 position 1") != std::string::npos);
  }
}

TEST_CASE("context JSON") {
  const auto ctx = hand_context({{7, 3}, {5, 7}});
  const auto j = to_json(ctx);
  CHECK(j.at("proxy") == nlohmann::json({7, 5}));
  CHECK(j.at("candidate_pool") == nlohmann::json({3}));
  CHECK(j.at("support")[1].at("ranked_ids") == nlohmann::json({5, 7}));
}
