#pragma once

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <semaphore>
#include <string>
#include <string_view>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "traitsim/backend.hpp"
#include "traitsim/error.hpp"
#include "traitsim/text.hpp"

namespace traitsim {

struct Endpoint {
  std::string scheme;  // "http" or "https"
  std::string host;
  int port = 0;
  std::string path;

  std::string origin() const { return scheme + "://" + host + ":" + std::to_string(port); }

  static Endpoint parse(std::string_view url) {
    Endpoint ep;
    auto sep = url.find("://");
    if (sep == std::string_view::npos) throw ConfigError("endpoint needs a scheme: " + std::string(url));
    ep.scheme = text::to_lower(url.substr(0, sep));
    if (ep.scheme != "http" && ep.scheme != "https") {
      throw ConfigError("unsupported endpoint scheme: " + ep.scheme);
    }
    const std::string rest(url.substr(sep + 3));
    auto slash = rest.find('/');
    const std::string authority = rest.substr(0, slash);
    ep.path = slash == std::string::npos ? "/" : rest.substr(slash);
    auto colon = authority.rfind(':');
    if (colon != std::string::npos && authority.find(']') == std::string::npos) {
      ep.host = authority.substr(0, colon);
      ep.port = static_cast<int>(text::parse_int(authority.substr(colon + 1)));
    } else {
      ep.host = authority;
      ep.port = ep.scheme == "https" ? 443 : 80;
    }
    if (ep.host.empty()) throw ConfigError("endpoint has no host: " + std::string(url));
    return ep;
  }
};

namespace detail {

inline const char* env_either(const char* lower, const char* upper) {
  const char* v = std::getenv(lower);
  return v && *v ? v : std::getenv(upper);
}

inline bool host_bypasses_proxy(const std::string& host) {
  const char* np = env_either("no_proxy", "NO_PROXY");
  if (!np) return false;
  std::string_view list(np);
  std::size_t start = 0;
  while (start <= list.size()) {
    auto comma = list.find(',', start);
    auto entry = text::trim(list.substr(start, comma == std::string_view::npos ? list.npos : comma - start));
    if (entry == "*") return true;
    if (!entry.empty()) {
      if (entry.front() == '.') entry.remove_prefix(1);
      if (host == entry ||
          (host.size() > entry.size() && host.ends_with(entry) &&
           host[host.size() - entry.size() - 1] == '.')) {
        return true;
      }
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return false;
}

}  // namespace detail

// Chat-completions client: one user message per request, bounded retries
// with exponential backoff on transport failures, 429 and 5xx.
class HttpChatBackend final : public ChatBackend {
 public:
  explicit HttpChatBackend(HttpChatConfig config)
      : config_(std::move(config)),
        endpoint_(Endpoint::parse(config_.endpoint)),
        in_flight_(config_.max_in_flight > 0 ? config_.max_in_flight : 1) {}

  std::string label() const override { return "http:" + config_.model; }

  RawCompletion complete(const CompletionRequest& request) override {
    const std::string key = credential();
    const std::string body = request_body(request).dump();

    auto delay = config_.initial_backoff;
    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(delay);
        delay = std::chrono::milliseconds(
            static_cast<long long>(std::llround(delay.count() * config_.backoff_factor)));
      }
      auto start = std::chrono::steady_clock::now();
      httplib::Result res = post(body, key);
      auto latency = std::chrono::steady_clock::now() - start;

      if (!res) {
        last_error = "transport failure: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 401 || res->status == 403) {
        throw CredentialError("endpoint rejected credential (HTTP " +
                              std::to_string(res->status) + ")");
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) {
        throw TransportError("HTTP " + std::to_string(res->status) + ": " + res->body);
      }
      return RawCompletion{message_content(res->body),
                           std::chrono::duration_cast<std::chrono::nanoseconds>(latency),
                           label()};
    }
    throw TransportError("request failed after " + std::to_string(config_.max_retries) +
                         " retries: " + last_error);
  }

  nlohmann::json request_body(const CompletionRequest& request) const {
    return {
        {"model", config_.model},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
        {"temperature", request.temperature},
        {"max_tokens", request.max_output_tokens},
    };
  }

 private:
  std::string credential() const {
    if (config_.api_key_env.empty()) return {};
    const char* v = std::getenv(config_.api_key_env.c_str());
    if (!v || !*v) {
      throw CredentialError("environment variable " + config_.api_key_env + " is not set");
    }
    return v;
  }

  httplib::Result post(const std::string& body, const std::string& key) {
    std::counting_semaphore<>& gate = in_flight_;
    gate.acquire();
    struct Release {
      std::counting_semaphore<>& g;
      ~Release() { g.release(); }
    } release{gate};

    httplib::Client client(endpoint_.origin());
    client.set_connection_timeout(config_.connect_timeout);
    client.set_read_timeout(config_.read_timeout);
    apply_proxy(client);
    httplib::Headers headers;
    if (!key.empty()) headers.emplace(config_.auth_header, "Bearer " + key);
    return client.Post(endpoint_.path, headers, body, "application/json");
  }

  void apply_proxy(httplib::Client& client) const {
    if (detail::host_bypasses_proxy(endpoint_.host)) return;
    const char* proxy = endpoint_.scheme == "https"
                            ? detail::env_either("https_proxy", "HTTPS_PROXY")
                            : detail::env_either("http_proxy", "HTTP_PROXY");
    if (!proxy || !*proxy) return;
    std::string_view p(proxy);
    if (p.find("://") == std::string_view::npos) {
      client.set_proxy(std::string(p.substr(0, p.rfind(':'))),
                       static_cast<int>(text::parse_int(p.substr(p.rfind(':') + 1))));
      return;
    }
    Endpoint pe = Endpoint::parse(p);
    client.set_proxy(pe.host, pe.port);
  }

  static std::string message_content(const std::string& body) {
    auto parsed = nlohmann::json::parse(body, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("choices") || !parsed["choices"].is_array() ||
        parsed["choices"].empty()) {
      throw TransportError("malformed chat-completions response");
    }
    const auto& msg = parsed["choices"][0]["message"];
    if (!msg.is_object() || !msg.contains("content") || !msg["content"].is_string()) {
      throw TransportError("chat-completions response has no message content");
    }
    return msg["content"].get<std::string>();
  }

  HttpChatConfig config_;
  Endpoint endpoint_;
  std::counting_semaphore<> in_flight_;
};

}  // namespace traitsim
