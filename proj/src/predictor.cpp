#include "fairicl/predictor.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <ctime>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <openssl/evp.h>

#include "fairicl/errors.hpp"
#include "fairicl/keyvalue.hpp"
#include "fairicl/vector_store.hpp"

namespace fairicl {

std::string_view to_string(Label label) {
  switch (label) {
    case Label::Negative: return "0";
    case Label::Positive: return "1";
    case Label::Invalid: return "INVALID";
  }
  return "INVALID";
}

Label label_from_string(std::string_view text) {
  if (text == "0") return Label::Negative;
  if (text == "1") return Label::Positive;
  if (text == "INVALID") return Label::Invalid;
  throw std::invalid_argument("not a label: '" + std::string(text) + "'");
}

PromptSpec make_prompt_spec(const Schema& schema, const std::vector<const Record*>& ices,
                            const std::vector<const Record*>& queries) {
  PromptSpec spec;
  spec.task_instruction = schema.task_instruction;
  for (const auto* r : ices) {
    spec.ice_texts.push_back(to_text(*r, schema, true));
    spec.ice_ids.push_back(r->id);
  }
  for (const auto* r : queries) {
    spec.query_texts.push_back(to_text(*r, schema, false));
    spec.query_ids.push_back(r->id);
  }
  return spec;
}

std::string build_prompt(const PromptSpec& spec) {
  std::string prompt = spec.task_instruction;
  prompt += "\n\n";
  if (!spec.ice_texts.empty()) {
    prompt += "Examples:\n";
    for (const auto& ice : spec.ice_texts) {
      prompt += ice;
      prompt += '\n';
    }
    prompt += '\n';
  }
  prompt += "Classify the following; answer with one label per line, labels only:\n";
  for (std::size_t i = 0; i < spec.query_texts.size(); ++i) {
    prompt += std::to_string(i + 1);
    prompt += ". ";
    prompt += spec.query_texts[i];
    prompt += '\n';
  }
  return prompt;
}

namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

// Length of the surface label if it occurs in `line` not glued to other
// alphanumerics, else 0.
std::size_t bounded_match(const std::string& line, const std::string& surface) {
  if (surface.empty()) return 0;
  for (auto at = line.find(surface); at != std::string::npos; at = line.find(surface, at + 1)) {
    const auto end = at + surface.size();
    const bool left_ok = at == 0 || !is_alnum(line[at - 1]) || !is_alnum(surface.front());
    const bool right_ok = end == line.size() || !is_alnum(line[end]) || !is_alnum(surface.back());
    if (left_ok && right_ok) return surface.size();
  }
  return 0;
}

Label classify_line(const std::string& raw_line, const std::string& positive,
                    const std::string& negative) {
  const auto line = to_lower(raw_line);
  const auto pos_len = bounded_match(line, positive);
  const auto neg_len = bounded_match(line, negative);
  if (pos_len > 0 || neg_len > 0) return pos_len > neg_len ? Label::Positive : Label::Negative;
  std::size_t i = 0;
  while (i < line.size()) {
    if (!is_alnum(line[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < line.size() && is_alnum(line[j])) ++j;
    const auto token = std::string_view(line).substr(i, j - i);
    if (token == "1") return Label::Positive;
    if (token == "0") return Label::Negative;
    i = j;
  }
  return Label::Invalid;
}

}  // namespace

std::vector<Label> parse_response(std::string_view raw, std::size_t expected,
                                  const Schema& schema) {
  const auto positive = to_lower(schema.label_positive_value);
  const auto negative = to_lower(schema.label_negative_value);
  std::vector<Label> labels;
  std::size_t pos = 0;
  while (pos < raw.size() && labels.size() < expected) {
    auto end = raw.find('\n', pos);
    if (end == std::string_view::npos) end = raw.size();
    const auto line = trim(raw.substr(pos, end - pos));
    pos = end + 1;
    if (line.empty()) continue;
    labels.push_back(classify_line(line, positive, negative));
  }
  labels.resize(expected, Label::Invalid);
  return labels;
}

MockKnnBackend::MockKnnBackend(Schema schema, std::shared_ptr<const Embedder> embedder,
                               std::size_t vote_k)
    : schema_(std::move(schema)), embedder_(std::move(embedder)), vote_k_(vote_k) {
  if (!embedder_) throw std::invalid_argument("MockKnnBackend needs an embedder");
  if (vote_k_ == 0) throw std::invalid_argument("MockKnnBackend: vote_k must be positive");
}

std::string MockKnnBackend::id() const {
  return "mock-knn:k" + std::to_string(vote_k_) + ":" + embedder_->id();
}

const Embedding& MockKnnBackend::embedding_of(const std::string& feature_text) {
  std::lock_guard lock(memo_mutex_);
  auto it = memo_.find(feature_text);
  if (it == memo_.end()) it = memo_.emplace(feature_text, embedder_->embed(feature_text)).first;
  return it->second;
}

std::vector<int> MockKnnBackend::vote(const PromptSpec& spec) {
  std::vector<int> out(spec.query_texts.size(), 0);
  if (spec.ice_texts.empty()) return out;

  std::vector<const Embedding*> ice_vectors;
  std::vector<int> ice_labels;
  for (const auto& text : spec.ice_texts) {
    const auto parsed = parse_text(text, schema_);
    if (!parsed || !parsed->label) {
      throw std::invalid_argument("mock backend: ICE is not a labeled record: " + text);
    }
    ice_vectors.push_back(&embedding_of(to_text(parsed->features, schema_, std::nullopt)));
    ice_labels.push_back(*parsed->label);
  }
  const auto voters = std::min(vote_k_, ice_vectors.size());
  std::vector<std::size_t> order(ice_vectors.size());
  std::vector<double> similarity(ice_vectors.size());
  for (std::size_t q = 0; q < spec.query_texts.size(); ++q) {
    const auto& query = embedding_of(spec.query_texts[q]);
    for (std::size_t i = 0; i < ice_vectors.size(); ++i) {
      similarity[i] = cosine_similarity(query.values, ice_vectors[i]->values);
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return similarity[a] > similarity[b]; });
    std::size_t positives = 0;
    for (std::size_t v = 0; v < voters; ++v) positives += ice_labels[order[v]] == 1 ? 1 : 0;
    out[q] = 2 * positives > voters ? 1 : 0;
  }
  return out;
}

std::string MockKnnBackend::complete(const PromptSpec& spec, const std::string& /*prompt*/) {
  std::string response;
  for (int label : vote(spec)) {
    response += schema_.label_surface(label);
    response += '\n';
  }
  return response;
}

HttpChatBackend::HttpChatBackend(HttpEndpoint endpoint, std::string model, SamplingParams sampling)
    : endpoint_(std::move(endpoint)), model_(std::move(model)), sampling_(sampling) {}

nlohmann::json HttpChatBackend::request_body(const std::string& prompt) const {
  return {{"model", model_},
          {"temperature", sampling_.temperature},
          {"top_p", sampling_.top_p},
          {"max_tokens", sampling_.max_tokens},
          {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})}};
}

std::string HttpChatBackend::complete(const PromptSpec& /*spec*/, const std::string& prompt) {
  const auto response = post_json(endpoint_, request_body(prompt));
  try {
    const auto& content = response.at("choices").at(0).at("message").at("content");
    return content.is_null() ? std::string{} : content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("chat response has no choices[0].message.content: ") + e.what());
  }
}

namespace {

std::string iso8601_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buffer;
}

}  // namespace

ResponseCache::ResponseCache(std::filesystem::path file) : file_(std::move(file)) {
  if (file_->has_parent_path()) std::filesystem::create_directories(file_->parent_path());
  std::ifstream in(*file_);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      entries_[j.at("key").get<std::string>()] = j.at("response").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(file_->string() + ":" + std::to_string(line_no) +
                               ": bad cache line: " + e.what());
    }
  }
}

std::string ResponseCache::key_for(std::string_view backend_id, std::string_view prompt) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  const char separator = '\0';
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), backend_id.data(), backend_id.size()) != 1 ||
      EVP_DigestUpdate(ctx.get(), &separator, 1) != 1 ||
      EVP_DigestUpdate(ctx.get(), prompt.data(), prompt.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &length) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xf];
  }
  return hex;
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
  std::shared_lock lock(mutex_);
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::put(const std::string& key, const std::string& backend,
                        const std::string& prompt, const std::string& response) {
  std::unique_lock lock(mutex_);
  if (!entries_.emplace(key, response).second) return;
  if (!file_) return;
  std::ofstream out(*file_, std::ios::app | std::ios::binary);
  if (!out) throw std::runtime_error("cannot append to cache " + file_->string());
  const nlohmann::json line{{"key", key},
                            {"backend", backend},
                            {"prompt", prompt},
                            {"response", response},
                            {"ts", iso8601_now()}};
  out << line.dump() << '\n';
}

std::size_t ResponseCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

Predictor::Predictor(std::shared_ptr<Backend> backend, Schema schema,
                     std::shared_ptr<ResponseCache> cache)
    : backend_(std::move(backend)), schema_(std::move(schema)), cache_(std::move(cache)) {
  if (!backend_) throw std::invalid_argument("Predictor needs a backend");
}

PredictionResult Predictor::predict(const PromptSpec& spec, CallPhase phase) {
  if (spec.query_texts.empty()) throw std::invalid_argument("predict: no queries");
  ++requests_;
  if (observer_) observer_(spec, phase);

  PromptSpec unique = spec;
  unique.query_texts.clear();
  unique.query_ids.clear();
  std::vector<std::size_t> slot_of(spec.query_texts.size());
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t q = 0; q < spec.query_texts.size(); ++q) {
    const auto [it, inserted] = seen.emplace(spec.query_texts[q], unique.query_texts.size());
    if (inserted) {
      unique.query_texts.push_back(spec.query_texts[q]);
      if (q < spec.query_ids.size()) unique.query_ids.push_back(spec.query_ids[q]);
    }
    slot_of[q] = it->second;
  }

  PredictionResult result;
  result.backend_id = backend_->id();
  const auto prompt = build_prompt(unique);
  const auto key = ResponseCache::key_for(result.backend_id, prompt);
  if (auto cached = cache_ ? cache_->get(key) : std::nullopt) {
    ++cache_hits_;
    result.cache_hit = true;
    result.raw_response = std::move(*cached);
  } else {
    ++backend_calls_;
    result.raw_response = backend_->complete(unique, prompt);
    if (cache_) cache_->put(key, result.backend_id, prompt, result.raw_response);
  }
  const auto parsed = parse_response(result.raw_response, unique.query_texts.size(), schema_);
  result.labels.reserve(slot_of.size());
  for (auto slot : slot_of) result.labels.push_back(parsed[slot]);
  return result;
}

CallStats Predictor::stats() const {
  return {requests_.load(), cache_hits_.load(), backend_calls_.load()};
}

void Predictor::reset_stats() {
  requests_ = 0;
  cache_hits_ = 0;
  backend_calls_ = 0;
}

}  // namespace fairicl
