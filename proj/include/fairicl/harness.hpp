#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fairicl/dataset.hpp"
#include "fairicl/http.hpp"
#include "fairicl/metrics.hpp"
#include "fairicl/predictor.hpp"
#include "fairicl/selection.hpp"
#include "fairicl/smite.hpp"

namespace fairicl {

enum class Method { ZeroShot, RandomIce, Rag, Smite };

std::string_view to_string(Method method);
// Accepts zero_shot, random_ice, rag, smite; throws ConfigError otherwise.
Method method_from_string(std::string_view name);

/// One experiment: a dataset, a set of split seeds, and the methods to
/// compare. Defaults are the reference setup (1000 test rows in batches of
/// 20, 15 neighbours, 10 SMITE rounds, alpha 0.5, three seeds and three
/// repeats).
struct ExperimentConfig {
  std::string dataset = "synthetic";  // adult | compas | synthetic | custom
  std::string data_path;
  std::string schema_path;  // custom only
  std::size_t synthetic_rows = 700;
  std::uint64_t synthetic_seed = 7;

  std::vector<std::uint64_t> seeds{20, 25, 42};
  std::size_t repeats = 3;
  std::size_t n_test = 1000;
  std::size_t m = 20;
  std::size_t k = 15;
  std::size_t l = 10;
  double alpha = 0.5;
  double rho = kDefaultRho;
  std::size_t vote_k = 3;
  std::optional<std::size_t> random_ice_count;  // defaults to m
  std::vector<Method> methods{Method::ZeroShot, Method::RandomIce, Method::Rag, Method::Smite};

  std::string backend = "mock";    // mock | http
  std::string embedder = "local";  // local | remote
  HttpEndpoint llm;
  std::string llm_model;
  SamplingParams sampling;
  HttpEndpoint embedding;
  std::string embedding_model;

  std::string cache_path;  // empty: in-memory cache only
  std::string store_dir;   // empty: vector stores are rebuilt every run
  std::string out_dir = "out";

  std::size_t ice_count() const { return random_ice_count.value_or(m); }
  bool uses(Method method) const;
  // Throws ConfigError.
  void validate() const;
};

// Relative paths in the file are resolved against `base_dir`. Endpoint and
// key environment overrides: FAIRICL_LLM_ENDPOINT, FAIRICL_LLM_API_KEY,
// FAIRICL_EMBED_ENDPOINT, FAIRICL_EMBED_API_KEY.
ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
// API keys are never serialized.
nlohmann::json to_json(const ExperimentConfig& config);

// Loads (and cleans) or generates the configured dataset.
Dataset load_experiment_dataset(const ExperimentConfig& config);

/// Labels for every test record in batch order, plus what each batch was
/// shown.
struct MethodOutput {
  std::vector<Label> labels;
  std::vector<std::vector<RecordId>> batch_ices;
  std::vector<std::uint64_t> batch_requests;
  std::vector<SmiteTrace> traces;
};

MethodOutput run_zero_shot(const std::vector<Batch>& batches, const Schema& schema,
                           Predictor& predictor);
// `count` training records per batch, sampled without replacement with a
// seed derived from (seed, batch index).
MethodOutput run_random_ice(const std::vector<Batch>& batches, const Dataset& train,
                            std::size_t count, std::uint64_t seed, Predictor& predictor);
// Demonstrations are the batch's deduplicated proxy records.
MethodOutput run_rag(const std::vector<Batch>& batches, const std::vector<BatchContext>& contexts,
                     const Dataset& train, Predictor& predictor);
MethodOutput run_smite(const std::vector<Batch>& batches, const std::vector<BatchContext>& contexts,
                       const Dataset& train, const SmiteParams& params, Predictor& predictor);

struct BatchReport {
  std::size_t batch = 0;
  std::vector<RecordId> ice_ids;
  std::uint64_t requests = 0;
  MetricsBundle metrics;
};

struct CellReport {
  std::uint64_t seed = 0;
  std::size_t repeat = 0;
  Method method = Method::ZeroShot;
  bool ok = true;
  std::string error;
  MetricsBundle metrics;
  std::vector<BatchReport> batches;
  std::uint64_t requests = 0;
  // Test-set rows in evaluation order, for the prediction dump.
  std::vector<RecordId> test_ids;
  std::vector<int> y;
  std::vector<int> z;
  std::vector<Label> y_hat;
  std::vector<SmiteTrace> traces;
};

// Wall-clock and cache figures; kept apart from the report because they vary
// between otherwise identical runs.
struct RunStats {
  double seconds = 0.0;
  std::uint64_t cache_hits = 0;
  std::uint64_t backend_calls = 0;
  std::map<std::string, double> cell_seconds;
};

struct RunReport {
  ExperimentConfig config;
  std::vector<CellReport> cells;
  std::vector<std::vector<BatchContext>> contexts;  // per seed, when built
  RunStats stats;

  bool all_ok() const;
};

struct RunHooks {
  CallObserver observer;  // attached to every predictor the run creates
};

/// Runs every (seed, repeat, method) cell. Backend failures are recorded on
/// the cell rather than thrown; selection invariant breaches throw
/// InvariantError.
RunReport run_experiment(const ExperimentConfig& config, const RunHooks& hooks = {});

nlohmann::json to_json(const CellReport& cell);
nlohmann::json report_json(const RunReport& report);

// report.json, predictions.csv, traces.json, contexts.json, summary.json,
// summary.txt and run_stats.json under `dir`.
void write_outputs(const RunReport& report, const std::filesystem::path& dir);

struct MetricSummary {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation; 0 for a single cell
  std::size_t n = 0;
};

struct MethodSummary {
  Method method = Method::ZeroShot;
  std::map<std::string, MetricSummary> metrics;
  std::size_t cells = 0;
  std::size_t failed_cells = 0;
  std::size_t degenerate_cells = 0;
  std::size_t degenerate_batches = 0;
};

// Mean and standard deviation per (method, metric) over successful cells.
std::vector<MethodSummary> aggregate(const std::vector<CellReport>& cells);
std::vector<MethodSummary> aggregate_report(const nlohmann::json& report);
nlohmann::json to_json(const std::vector<MethodSummary>& summary);
std::string format_summary_table(const std::vector<MethodSummary>& summary);

std::string predictions_csv(const std::vector<CellReport>& cells);

struct DumpCheckResult {
  std::size_t cells_checked = 0;
  std::vector<std::string> diffs;
};

// Recomputes every cell's test metrics from predictions.csv and compares
// them with report.json in `dir`.
DumpCheckResult dump_check(const std::filesystem::path& dir);

}  // namespace fairicl
