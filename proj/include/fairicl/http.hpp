#pragma once

#include <chrono>
#include <string>

#include <json.hpp>

namespace fairicl {

struct HttpEndpoint {
  std::string url;  // full URL, e.g. https://api.openai.com/v1/chat/completions
  std::string api_key;
  int max_attempts = 4;
  std::chrono::milliseconds backoff{500};
  int timeout_seconds = 120;
};

struct ParsedUrl {
  std::string scheme_host_port;  // "https://host:443"
  std::string path;              // "/v1/chat/completions"
};

// Throws ConfigError on anything but http:// or https:// URLs.
ParsedUrl parse_url(const std::string& url);

// POSTs `body` as JSON with bearer authentication and returns the parsed JSON
// response. Transport errors, 429 and 5xx are retried with exponential
// backoff; other 4xx responses fail immediately. Throws BackendError.
nlohmann::json post_json(const HttpEndpoint& endpoint, const nlohmann::json& body);

}  // namespace fairicl
