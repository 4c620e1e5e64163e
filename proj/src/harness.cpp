#include "fairicl/harness.hpp"

#include <algorithm>
#include <chrono>
#include <memory>
#include <set>

#include "fairicl/errors.hpp"
#include "fairicl/rng.hpp"
#include "fairicl/vector_store.hpp"

namespace fairicl {

namespace {

std::vector<const Record*> pointers(const std::vector<Record>& records) {
  std::vector<const Record*> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(&r);
  return out;
}

std::vector<const Record*> lookup(const Dataset& train, const std::vector<RecordId>& ids) {
  std::vector<const Record*> out;
  out.reserve(ids.size());
  for (auto id : ids) out.push_back(&train.at(id));
  return out;
}

// Classifies one batch with the given demonstrations and appends the labels.
void infer(const Batch& batch, const Schema& schema, const Dataset* train,
           const std::vector<RecordId>& ice_ids, Predictor& predictor, MethodOutput& out) {
  const auto before = predictor.stats().requests;
  const auto ices = train ? lookup(*train, ice_ids) : std::vector<const Record*>{};
  const auto spec = make_prompt_spec(schema, ices, pointers(batch.records));
  const auto result = predictor.predict(spec, CallPhase::Inference);
  out.labels.insert(out.labels.end(), result.labels.begin(), result.labels.end());
  out.batch_ices.push_back(ice_ids);
  out.batch_requests.push_back(predictor.stats().requests - before);
}

void check_contexts(const std::vector<BatchContext>& contexts) {
  for (const auto& ctx : contexts) {
    for (auto id : ctx.candidate_pool) {
      if (ctx.is_proxy(id)) {
        throw InvariantError("batch " + std::to_string(ctx.batch_index) + ": id " +
                             std::to_string(id) + " is in both the proxy and candidate pool");
      }
    }
  }
}

std::shared_ptr<const Embedder> make_embedder(const ExperimentConfig& config, const Schema& schema,
                                              const Dataset& train) {
  if (config.embedder == "remote") {
    return std::make_shared<RemoteEmbedder>(config.embedding, config.embedding_model);
  }
  return std::make_shared<LocalEmbedder>(schema, train);
}

bool store_matches(const VectorStore& store, const Dataset& train, const Embedder& embedder) {
  if (store.embedder_id() != embedder.id() || store.size() != train.size()) return false;
  const auto records = train.records();
  const auto entries = store.entries();
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (entries[i].id != records[i].id || entries[i].z != records[i].z) return false;
  }
  return true;
}

VectorStore obtain_store(const ExperimentConfig& config, const Dataset& train,
                         const Embedder& embedder, std::uint64_t seed) {
  if (config.store_dir.empty()) return build_store(train, embedder);
  const auto path = std::filesystem::path(config.store_dir) /
                    (train.schema().name + "-seed" + std::to_string(seed) + ".json");
  if (std::filesystem::exists(path)) {
    auto store = VectorStore::load(path);
    if (store_matches(store, train, embedder)) return store;
  }
  auto store = build_store(train, embedder);
  std::filesystem::create_directories(path.parent_path());
  store.save(path);
  return store;
}

}  // namespace

MethodOutput run_zero_shot(const std::vector<Batch>& batches, const Schema& schema,
                           Predictor& predictor) {
  MethodOutput out;
  for (const auto& batch : batches) infer(batch, schema, nullptr, {}, predictor, out);
  return out;
}

MethodOutput run_random_ice(const std::vector<Batch>& batches, const Dataset& train,
                            std::size_t count, std::uint64_t seed, Predictor& predictor) {
  if (count > train.size()) {
    throw ConfigError("random_ice_count " + std::to_string(count) + " exceeds the " +
                      std::to_string(train.size()) + " training records");
  }
  MethodOutput out;
  const auto records = train.records();
  for (const auto& batch : batches) {
    const auto picks =
        rng::sample_without_replacement(train.size(), count, rng::derive_seed(seed, {batch.index}));
    std::vector<RecordId> ids;
    ids.reserve(picks.size());
    for (auto i : picks) ids.push_back(records[i].id);
    infer(batch, train.schema(), &train, ids, predictor, out);
  }
  return out;
}

MethodOutput run_rag(const std::vector<Batch>& batches, const std::vector<BatchContext>& contexts,
                     const Dataset& train, Predictor& predictor) {
  MethodOutput out;
  for (std::size_t b = 0; b < batches.size(); ++b) {
    infer(batches[b], train.schema(), &train, contexts.at(b).unique_proxy(), predictor, out);
  }
  return out;
}

MethodOutput run_smite(const std::vector<Batch>& batches, const std::vector<BatchContext>& contexts,
                       const Dataset& train, const SmiteParams& params, Predictor& predictor) {
  MethodOutput out;
  for (std::size_t b = 0; b < batches.size(); ++b) {
    const auto& ctx = contexts.at(b);
    const auto before = predictor.stats().requests;
    auto selected = icd_select(ctx, train, params, predictor);
    for (auto id : selected.icd) {
      if (ctx.is_proxy(id)) {
        throw InvariantError("batch " + std::to_string(ctx.batch_index) +
                             ": selected demonstration " + std::to_string(id) +
                             " is a proxy record");
      }
    }
    infer(batches[b], train.schema(), &train, selected.icd, predictor, out);
    out.batch_requests.back() = predictor.stats().requests - before;
    out.traces.push_back(std::move(selected.trace));
  }
  return out;
}

bool RunReport::all_ok() const {
  return std::all_of(cells.begin(), cells.end(), [](const CellReport& c) { return c.ok; });
}

RunReport run_experiment(const ExperimentConfig& config, const RunHooks& hooks) {
  using Clock = std::chrono::steady_clock;
  const auto started = Clock::now();
  config.validate();

  RunReport report;
  report.config = config;
  const auto dataset = load_experiment_dataset(config);
  const auto& schema = dataset.schema();
  if (config.n_test >= dataset.size()) {
    throw ConfigError("n_test " + std::to_string(config.n_test) + " leaves no training data (" +
                      std::to_string(dataset.size()) + " rows)");
  }

  auto cache = config.cache_path.empty() ? std::make_shared<ResponseCache>()
                                         : std::make_shared<ResponseCache>(config.cache_path);
  std::shared_ptr<Backend> http;
  if (config.backend == "http") {
    http = std::make_shared<HttpChatBackend>(config.llm, config.llm_model, config.sampling);
  }

  const bool needs_context = config.uses(Method::Rag) || config.uses(Method::Smite);
  const SmiteParams smite_params{config.alpha, config.l, config.rho};

  for (auto seed : config.seeds) {
    const auto parts = split(dataset, seed, config.n_test);
    const auto embedder = make_embedder(config, schema, parts.train);
    const auto batches = partition(parts.test, config.m);

    std::vector<BatchContext> contexts;
    if (needs_context) {
      const auto store = obtain_store(config, parts.train, *embedder, seed);
      for (const auto& batch : batches) {
        contexts.push_back(build_batch_context(batch, store, *embedder, schema, config.k));
      }
      check_contexts(contexts);
    }

    std::shared_ptr<Backend> backend =
        http ? http : std::make_shared<MockKnnBackend>(schema, embedder, config.vote_k);
    Predictor predictor(backend, schema, cache);
    if (hooks.observer) predictor.set_observer(hooks.observer);

    for (std::size_t repeat = 0; repeat < config.repeats; ++repeat) {
      for (auto method : config.methods) {
        const auto cell_started = Clock::now();
        CellReport cell;
        cell.seed = seed;
        cell.repeat = repeat;
        cell.method = method;
        const auto before = predictor.stats().requests;
        MethodOutput out;
        try {
          switch (method) {
            case Method::ZeroShot: out = run_zero_shot(batches, schema, predictor); break;
            case Method::RandomIce:
              out = run_random_ice(batches, parts.train, config.ice_count(),
                                   rng::derive_seed(seed, {repeat, 0x1CE}), predictor);
              break;
            case Method::Rag: out = run_rag(batches, contexts, parts.train, predictor); break;
            case Method::Smite:
              out = run_smite(batches, contexts, parts.train, smite_params, predictor);
              break;
          }
        } catch (const BackendError& e) {
          cell.ok = false;
          cell.error = e.what();
        }
        cell.requests = predictor.stats().requests - before;

        if (cell.ok) {
          for (const auto& r : parts.test.records()) {
            cell.test_ids.push_back(r.id);
            cell.y.push_back(r.y);
            cell.z.push_back(r.z);
          }
          cell.y_hat = out.labels;
          cell.metrics = classification_report({cell.y, cell.y_hat, cell.z}, config.alpha, config.rho);
          for (std::size_t b = 0; b < batches.size(); ++b) {
            const auto lo = static_cast<std::ptrdiff_t>(b * config.m);
            const auto hi = lo + static_cast<std::ptrdiff_t>(config.m);
            LabeledOutcomes slice{{cell.y.begin() + lo, cell.y.begin() + hi},
                                  {cell.y_hat.begin() + lo, cell.y_hat.begin() + hi},
                                  {cell.z.begin() + lo, cell.z.begin() + hi}};
            cell.batches.push_back({b, out.batch_ices[b], out.batch_requests[b],
                                    classification_report(slice, config.alpha, config.rho)});
          }
          cell.traces = std::move(out.traces);
        }
        const std::chrono::duration<double> elapsed = Clock::now() - cell_started;
        report.stats.cell_seconds[std::to_string(seed) + "/" + std::to_string(repeat) + "/" +
                                  std::string(to_string(method))] = elapsed.count();
        report.cells.push_back(std::move(cell));
      }
    }
    const auto stats = predictor.stats();
    report.stats.cache_hits += stats.cache_hits;
    report.stats.backend_calls += stats.backend_calls;
    report.contexts.push_back(std::move(contexts));
  }
  const std::chrono::duration<double> elapsed = Clock::now() - started;
  report.stats.seconds = elapsed.count();
  return report;
}

}  // namespace fairicl
