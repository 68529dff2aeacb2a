#pragma once

// Chat-completions client. One POST per call, retried with exponential backoff
// on 429, 5xx and connection/timeout failures. The bearer token comes from
// LERA_API_KEY and never reaches the log sink.

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <semaphore>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "lera/backend.hpp"
#include "lera/png.hpp"

namespace lera {

inline constexpr const char* kApiKeyVariable = "LERA_API_KEY";

struct HttpConfig {
  std::string endpoint;  // e.g. https://api.example.com/v1/chat/completions
  std::string model;
  double timeout_s = 60.0;
  int max_retries = 3;
  int max_concurrency = 4;
  double backoff_base_s = 1.0;
  int raster_size = 256;
  bool send_raster = true;
};

/// Splits "scheme://host[:port]/path" into the origin and the path.
inline std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
  const auto scheme = endpoint.find("://");
  if (scheme == std::string::npos) throw ConfigError("endpoint needs a scheme: " + endpoint);
  const auto slash = endpoint.find('/', scheme + 3);
  if (slash == std::string::npos) return {endpoint, "/"};
  return {endpoint.substr(0, slash), endpoint.substr(slash)};
}

class HttpBackend : public Backend {
 public:
  using LogSink = std::function<void(const std::string&)>;

  /// Throws ConfigError if the endpoint, model or LERA_API_KEY is missing.
  explicit HttpBackend(HttpConfig cfg, LogSink log = {})
      : cfg_(std::move(cfg)), log_(std::move(log)), slots_(std::max(1, cfg_.max_concurrency)) {
    if (cfg_.endpoint.empty()) throw ConfigError("http backend needs an endpoint");
    if (cfg_.model.empty()) throw ConfigError("http backend needs a model name");
    const char* key = std::getenv(kApiKeyVariable);
    if (!key || !*key) throw ConfigError(std::string(kApiKeyVariable) + " is not set");
    token_ = key;
    std::tie(origin_, path_) = split_endpoint(cfg_.endpoint);
  }

  /// The JSON body sent for `request`.
  std::string request_body(const BackendRequest& request) const {
    using nlohmann::json;
    std::string user = request.user_text;
    if (request.attachment && !request.attachment->text.empty())
      user += "\n\nObservation:\n" + request.attachment->text;
    json content = user;
    if (request.attachment && cfg_.send_raster && !request.attachment->raster.empty()) {
      const std::string png = ppm_to_png(request.attachment->raster, cfg_.raster_size);
      content = json::array(
          {{{"type", "text"}, {"text", user}},
           {{"type", "image_url"},
            {"image_url", {{"url", "data:image/png;base64," + httplib::detail::base64_encode(png)}}}}});
    }
    json body = {{"model", cfg_.model},
                 {"temperature", DecodeOptions::temperature},
                 {"max_tokens", request.decode.max_tokens},
                 {"messages",
                  json::array({{{"role", "system"}, {"content", request.system_text}},
                               {{"role", "user"}, {"content", content}}})}};
    return body.dump();
  }

  std::string complete(const BackendRequest& request) override {
    const std::string body = request_body(request);
    slots_.acquire();
    struct Release {
      std::counting_semaphore<>& s;
      ~Release() { s.release(); }
    } release{slots_};

    httplib::Client client(origin_);
    const auto timeout = std::chrono::duration<double>(cfg_.timeout_s);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    const httplib::Headers headers{{"Authorization", "Bearer " + token_}};

    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
      if (attempt > 0) {
        const double wait = cfg_.backoff_base_s * static_cast<double>(1 << (attempt - 1));
        log("retrying in " + std::to_string(wait) + " s");
        std::this_thread::sleep_for(std::chrono::duration<double>(wait));
      }
      ++attempts_;
      auto res = client.Post(path_, headers, body, "application/json");
      if (!res) {
        last_error = "request failed: " + httplib::to_string(res.error());
        log("attempt " + std::to_string(attempt + 1) + ": " + last_error);
        continue;
      }
      log("attempt " + std::to_string(attempt + 1) + ": HTTP " + std::to_string(res->status));
      if (res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) throw TransportError("HTTP " + std::to_string(res->status) + ": " + res->body);
      return extract_text(res->body);
    }
    throw TransportError("giving up after " + std::to_string(cfg_.max_retries + 1) +
                         " attempts: " + last_error);
  }

  /// Total HTTP attempts made by this backend, retries included.
  int attempts() const { return attempts_.load(); }

  static std::string extract_text(const std::string& body) {
    try {
      const auto j = nlohmann::json::parse(body);
      const auto& content = j.at("choices").at(0).at("message").at("content");
      if (content.is_string()) return content.get<std::string>();
      std::string text;
      for (const auto& part : content)
        if (part.value("type", "") == "text") text += part.at("text").get<std::string>();
      return text;
    } catch (const std::exception& e) {
      throw TransportError(std::string("unexpected response body: ") + e.what());
    }
  }

 private:
  void log(const std::string& line) const {
    if (log_) log_("[http " + cfg_.model + "] " + line);
  }

  HttpConfig cfg_;
  LogSink log_;
  std::counting_semaphore<> slots_;
  std::string token_;
  std::string origin_;
  std::string path_;
  std::atomic<int> attempts_{0};
};

}  // namespace lera
