#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fairicl/dataset.hpp"
#include "fairicl/embedder.hpp"
#include "fairicl/http.hpp"

namespace fairicl {

enum class Label : std::int8_t { Negative = 0, Positive = 1, Invalid = -1 };

std::string_view to_string(Label label);
// Accepts "0", "1" and "INVALID"; throws std::invalid_argument otherwise.
Label label_from_string(std::string_view text);

/// What goes into one LLM call. The id vectors record provenance for
/// auditing and never reach the prompt text.
struct PromptSpec {
  std::string task_instruction;
  std::vector<std::string> ice_texts;    // labeled
  std::vector<std::string> query_texts;  // unlabeled
  std::vector<RecordId> ice_ids;
  std::vector<RecordId> query_ids;
};

PromptSpec make_prompt_spec(const Schema& schema, const std::vector<const Record*>& ices,
                            const std::vector<const Record*>& queries);

std::string build_prompt(const PromptSpec& spec);

// Line-wise, case-insensitive: a line naming a surface label (longest match
// wins) maps to it, otherwise the first standalone "1"/"0" token decides,
// otherwise INVALID. Blank lines are skipped; the result is padded with
// INVALID or truncated to `expected`.
std::vector<Label> parse_response(std::string_view raw, std::size_t expected,
                                  const Schema& schema);

struct PredictionResult {
  std::vector<Label> labels;
  std::string raw_response;
  std::string backend_id;
  bool cache_hit = false;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string id() const = 0;
  // Returns the raw completion for `prompt` (== build_prompt(spec)).
  virtual std::string complete(const PromptSpec& spec, const std::string& prompt) = 0;
};

/// Offline stand-in for an LLM: each query gets the majority label of its
/// vote_k cosine-nearest ICEs (similarity ties go to the earlier ICE, vote
/// ties to label 0). With no ICEs every query is labelled 0. Answers with the
/// schema's surface labels, one per line.
class MockKnnBackend final : public Backend {
 public:
  MockKnnBackend(Schema schema, std::shared_ptr<const Embedder> embedder, std::size_t vote_k = 3);

  std::string id() const override;
  std::string complete(const PromptSpec& spec, const std::string& prompt) override;

  std::vector<int> vote(const PromptSpec& spec);

 private:
  const Embedding& embedding_of(const std::string& feature_text);

  Schema schema_;
  std::shared_ptr<const Embedder> embedder_;
  std::size_t vote_k_;
  std::mutex memo_mutex_;
  std::unordered_map<std::string, Embedding> memo_;
};

struct SamplingParams {
  double temperature = 0.0;
  double top_p = 0.9;
  int max_tokens = 8192;
};

/// OpenAI-chat-compatible completion client.
class HttpChatBackend final : public Backend {
 public:
  HttpChatBackend(HttpEndpoint endpoint, std::string model, SamplingParams sampling = {});

  std::string id() const override { return "http:" + model_; }
  std::string complete(const PromptSpec& spec, const std::string& prompt) override;

  nlohmann::json request_body(const std::string& prompt) const;

 private:
  HttpEndpoint endpoint_;
  std::string model_;
  SamplingParams sampling_;
};

/// Content-addressed response cache, optionally persisted as append-only JSON
/// lines: {"key", "backend", "prompt", "response", "ts"}.
class ResponseCache {
 public:
  ResponseCache() = default;
  explicit ResponseCache(std::filesystem::path file);

  static std::string key_for(std::string_view backend_id, std::string_view prompt);

  std::optional<std::string> get(const std::string& key) const;
  void put(const std::string& key, const std::string& backend, const std::string& prompt,
           const std::string& response);
  std::size_t size() const;

 private:
  std::optional<std::filesystem::path> file_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, std::string> entries_;
};

enum class CallPhase { Selection, Inference };

struct CallStats {
  std::uint64_t requests = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t backend_calls = 0;
};

using CallObserver = std::function<void(const PromptSpec&, CallPhase)>;

/// Backend + cache + parsing. Duplicate query texts are sent once and the
/// parsed labels fanned back to every position that asked.
class Predictor {
 public:
  Predictor(std::shared_ptr<Backend> backend, Schema schema,
            std::shared_ptr<ResponseCache> cache = nullptr);

  PredictionResult predict(const PromptSpec& spec, CallPhase phase = CallPhase::Inference);

  // Sees every request (cache hits included) before it is served.
  void set_observer(CallObserver observer) { observer_ = std::move(observer); }
  CallStats stats() const;
  void reset_stats();

  const Schema& schema() const { return schema_; }
  std::string backend_id() const { return backend_->id(); }

 private:
  std::shared_ptr<Backend> backend_;
  Schema schema_;
  std::shared_ptr<ResponseCache> cache_;
  CallObserver observer_;
  std::atomic<std::uint64_t> requests_{0};
  std::atomic<std::uint64_t> cache_hits_{0};
  std::atomic<std::uint64_t> backend_calls_{0};
};

}  // namespace fairicl
