#include <algorithm>
#include <charconv>
#include <cstdlib>

#include "fairicl/errors.hpp"
#include "fairicl/harness.hpp"
#include "fairicl/keyvalue.hpp"
#include "fairicl/synthetic.hpp"

namespace fairicl {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::ZeroShot: return "zero_shot";
    case Method::RandomIce: return "random_ice";
    case Method::Rag: return "rag";
    case Method::Smite: return "smite";
  }
  return "unknown";
}

Method method_from_string(std::string_view name) {
  if (name == "zero_shot") return Method::ZeroShot;
  if (name == "random_ice") return Method::RandomIce;
  if (name == "rag") return Method::Rag;
  if (name == "smite") return Method::Smite;
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

bool ExperimentConfig::uses(Method method) const {
  return std::find(methods.begin(), methods.end(), method) != methods.end();
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& message) { throw ConfigError(message); };
  if (dataset != "adult" && dataset != "compas" && dataset != "synthetic" && dataset != "custom") {
    fail("dataset must be adult, compas, synthetic or custom");
  }
  if (dataset != "synthetic" && data_path.empty()) fail("data_path is required for " + dataset);
  if (dataset == "custom" && schema_path.empty()) fail("schema_path is required for custom");
  if (seeds.empty()) fail("at least one seed is required");
  if (repeats == 0) fail("repeats must be at least 1");
  if (m == 0) fail("m must be positive");
  if (n_test == 0 || n_test % m != 0) {
    fail("n_test (" + std::to_string(n_test) + ") must be a positive multiple of m (" +
         std::to_string(m) + ")");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) fail("alpha must be in [0, 1]");
  if (!(rho > 0.0)) fail("rho must be positive");
  if (vote_k == 0) fail("vote_k must be positive");
  if (methods.empty()) fail("no methods selected");
  if ((uses(Method::Smite) || uses(Method::Rag)) && k < 2) fail("k must be at least 2");
  if (uses(Method::Smite) && l == 0) fail("l must be at least 1");
  if (backend != "mock" && backend != "http") fail("backend must be mock or http");
  if (embedder != "local" && embedder != "remote") fail("embedder must be local or remote");
  if (backend == "http" && (llm.url.empty() || llm_model.empty())) {
    fail("http backend needs llm.endpoint and llm.model");
  }
  if (embedder == "remote" && (embedding.url.empty() || embedding_model.empty())) {
    fail("remote embedder needs embedding.endpoint and embedding.model");
  }
}

namespace {

template <typename T>
T parse_integer(const KeyValue& kv) {
  T value{};
  const auto* first = kv.value.data();
  const auto* last = first + kv.value.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw ConfigError("line " + std::to_string(kv.line) + ": '" + kv.key +
                      "' expects a non-negative integer, got '" + kv.value + "'");
  }
  return value;
}

double parse_real(const KeyValue& kv) {
  char* end = nullptr;
  const double value = std::strtod(kv.value.c_str(), &end);
  if (kv.value.empty() || end != kv.value.c_str() + kv.value.size()) {
    throw ConfigError("line " + std::to_string(kv.line) + ": '" + kv.key +
                      "' expects a number, got '" + kv.value + "'");
  }
  return value;
}

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : std::move(fallback);
}

std::string resolve(const std::filesystem::path& base, const std::string& path) {
  if (path.empty() || base.empty() || std::filesystem::path(path).is_absolute()) return path;
  return (base / path).lexically_normal().string();
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  std::string llm_key_env = "FAIRICL_LLM_API_KEY";
  std::string embed_key_env = "FAIRICL_EMBED_API_KEY";
  for (const auto& kv : parse_key_values(text)) {
    const auto& key = kv.key;
    if (key == "dataset") c.dataset = kv.value;
    else if (key == "data_path") c.data_path = resolve(base_dir, kv.value);
    else if (key == "schema_path") c.schema_path = resolve(base_dir, kv.value);
    else if (key == "synthetic_rows") c.synthetic_rows = parse_integer<std::size_t>(kv);
    else if (key == "synthetic_seed") c.synthetic_seed = parse_integer<std::uint64_t>(kv);
    else if (key == "seeds") {
      c.seeds.clear();
      for (const auto& s : split_list(kv.value)) c.seeds.push_back(parse_integer<std::uint64_t>({key, s, kv.line}));
    }
    else if (key == "repeats") c.repeats = parse_integer<std::size_t>(kv);
    else if (key == "n_test") c.n_test = parse_integer<std::size_t>(kv);
    else if (key == "m") c.m = parse_integer<std::size_t>(kv);
    else if (key == "k") c.k = parse_integer<std::size_t>(kv);
    else if (key == "l") c.l = parse_integer<std::size_t>(kv);
    else if (key == "alpha") c.alpha = parse_real(kv);
    else if (key == "rho") c.rho = parse_real(kv);
    else if (key == "vote_k") c.vote_k = parse_integer<std::size_t>(kv);
    else if (key == "random_ice_count") c.random_ice_count = parse_integer<std::size_t>(kv);
    else if (key == "methods") {
      c.methods.clear();
      for (const auto& m : split_list(kv.value)) c.methods.push_back(method_from_string(m));
    }
    else if (key == "backend") c.backend = kv.value;
    else if (key == "embedder") c.embedder = kv.value;
    else if (key == "cache") c.cache_path = resolve(base_dir, kv.value);
    else if (key == "store_dir") c.store_dir = resolve(base_dir, kv.value);
    else if (key == "out") c.out_dir = resolve(base_dir, kv.value);
    else if (key == "llm.endpoint") c.llm.url = kv.value;
    else if (key == "llm.model") c.llm_model = kv.value;
    else if (key == "llm.api_key_env") llm_key_env = kv.value;
    else if (key == "llm.max_attempts") c.llm.max_attempts = parse_integer<int>(kv);
    else if (key == "llm.timeout_seconds") c.llm.timeout_seconds = parse_integer<int>(kv);
    else if (key == "llm.temperature") c.sampling.temperature = parse_real(kv);
    else if (key == "llm.top_p") c.sampling.top_p = parse_real(kv);
    else if (key == "llm.max_tokens") c.sampling.max_tokens = parse_integer<int>(kv);
    else if (key == "embedding.endpoint") c.embedding.url = kv.value;
    else if (key == "embedding.model") c.embedding_model = kv.value;
    else if (key == "embedding.api_key_env") embed_key_env = kv.value;
    else if (key == "embedding.max_attempts") c.embedding.max_attempts = parse_integer<int>(kv);
    else throw ConfigError("line " + std::to_string(kv.line) + ": unknown key '" + key + "'");
  }
  c.llm.url = env_or("FAIRICL_LLM_ENDPOINT", c.llm.url);
  c.llm.api_key = env_or(llm_key_env.c_str(), "");
  c.embedding.url = env_or("FAIRICL_EMBED_ENDPOINT", c.embedding.url);
  c.embedding.api_key = env_or(embed_key_env.c_str(), "");
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path.string());
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
  try {
    return parse_config(text, path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json methods = nlohmann::json::array();
  for (auto m : c.methods) methods.push_back(std::string(to_string(m)));
  nlohmann::json j{{"dataset", c.dataset},
                   {"seeds", c.seeds},
                   {"repeats", c.repeats},
                   {"n_test", c.n_test},
                   {"m", c.m},
                   {"k", c.k},
                   {"l", c.l},
                   {"alpha", c.alpha},
                   {"rho", c.rho},
                   {"vote_k", c.vote_k},
                   {"random_ice_count", c.ice_count()},
                   {"methods", std::move(methods)},
                   {"backend", c.backend},
                   {"embedder", c.embedder}};
  if (c.dataset == "synthetic") {
    j["synthetic_rows"] = c.synthetic_rows;
    j["synthetic_seed"] = c.synthetic_seed;
  } else {
    j["data_path"] = c.data_path;
  }
  if (c.dataset == "custom") j["schema_path"] = c.schema_path;
  if (c.backend == "http") {
    j["llm"] = {{"endpoint", c.llm.url},
                {"model", c.llm_model},
                {"temperature", c.sampling.temperature},
                {"top_p", c.sampling.top_p},
                {"max_tokens", c.sampling.max_tokens}};
  }
  if (c.embedder == "remote") {
    j["embedding"] = {{"endpoint", c.embedding.url}, {"model", c.embedding_model}};
  }
  return j;
}

Dataset load_experiment_dataset(const ExperimentConfig& config) {
  if (config.dataset == "synthetic") {
    return generate_synthetic(config.synthetic_rows, config.synthetic_seed);
  }
  const auto schema =
      config.dataset == "custom" ? load_schema(config.schema_path) : schema_preset(config.dataset);
  auto loaded = load_csv(config.data_path, schema);
  return clean(loaded.dataset);
}

}  // namespace fairicl
