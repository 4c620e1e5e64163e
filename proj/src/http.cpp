#include "fairicl/http.hpp"

#include <thread>

#include <httplib.h>

#include "fairicl/errors.hpp"

namespace fairicl {

ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("URL without scheme: " + url);
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw ConfigError("unsupported scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl parsed;
  parsed.scheme_host_port = url.substr(0, path_start);
  parsed.path = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (parsed.scheme_host_port.size() <= scheme_end + 3) throw ConfigError("URL without host: " + url);
  return parsed;
}

nlohmann::json post_json(const HttpEndpoint& endpoint, const nlohmann::json& body) {
  const auto url = parse_url(endpoint.url);
  httplib::Client client(url.scheme_host_port);
  client.set_connection_timeout(endpoint.timeout_seconds, 0);
  client.set_read_timeout(endpoint.timeout_seconds, 0);
  client.set_write_timeout(endpoint.timeout_seconds, 0);

  httplib::Headers headers;
  if (!endpoint.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + endpoint.api_key);
  }
  const auto payload = body.dump();
  const int attempts = std::max(1, endpoint.max_attempts);
  std::string last_error;
  auto delay = endpoint.backoff;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    auto response = client.Post(url.path, headers, payload, "application/json");
    if (!response) {
      last_error = "transport error: " + httplib::to_string(response.error());
    } else if (response->status >= 200 && response->status < 300) {
      try {
        return nlohmann::json::parse(response->body);
      } catch (const nlohmann::json::exception& e) {
        throw BackendError("malformed JSON from " + endpoint.url + ": " + e.what(), attempt);
      }
    } else if (response->status == 429 || response->status >= 500) {
      last_error = "HTTP " + std::to_string(response->status);
    } else {
      throw BackendError("HTTP " + std::to_string(response->status) + " from " + endpoint.url +
                             ": " + response->body.substr(0, 500),
                         attempt);
    }
    if (attempt < attempts) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
  }
  throw BackendError(endpoint.url + " failed after " + std::to_string(attempts) +
                         " attempts: " + last_error,
                     attempts);
}

}  // namespace fairicl
