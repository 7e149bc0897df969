#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <variant>

#include "traitsim/error.hpp"

namespace traitsim {

struct CompletionRequest {
  std::string prompt;
  double temperature = 0.7;
  int max_output_tokens = 1024;
  int attempt = 1;  // 1 for the first ask, incremented on each repair re-ask
};

// OpenAI-compatible chat-completions endpoint. The credential is referenced
// by the name of an environment variable and is never stored.
struct HttpChatConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4";
  std::string api_key_env = "OPENAI_API_KEY";
  std::string auth_header = "Authorization";
  double temperature = 0.7;
  int max_output_tokens = 1024;
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{1000};
  double backoff_factor = 2.0;
  int max_in_flight = 4;
  std::chrono::seconds connect_timeout{10};
  std::chrono::seconds read_timeout{120};
};

struct MockPolicyConfig {
  std::uint64_t seed = 7;
};

using BackendKind = std::variant<HttpChatConfig, MockPolicyConfig>;

struct RawCompletion {
  std::string text;
  std::chrono::nanoseconds latency{0};
  std::string backend;  // e.g. "mock:7" or "http:gpt-4"
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  // Implementations must be safe to call concurrently.
  virtual RawCompletion complete(const CompletionRequest& request) = 0;
  virtual std::string label() const = 0;
};

// Request counter shared by every backend of one run.
class RequestBudget {
 public:
  // `already_used` carries over calls made by earlier invocations of a run.
  explicit RequestBudget(std::size_t max_requests, std::size_t already_used = 0)
      : max_(max_requests), used_(already_used) {}

  // Claims one request slot; throws BudgetExceeded once the cap is reached.
  void claim() {
    if (used_.fetch_add(1) >= max_) {
      used_.fetch_sub(1);
      throw BudgetExceeded("request budget of " + std::to_string(max_) + " exhausted");
    }
  }
  std::size_t used() const noexcept { return used_.load(); }
  std::size_t max() const noexcept { return max_; }

 private:
  std::size_t max_;
  std::atomic<std::size_t> used_;
};

// Forwards to `inner` while the shared budget allows; once it is spent every
// call throws BudgetExceeded without touching the backend.
class BudgetedBackend final : public ChatBackend {
 public:
  BudgetedBackend(std::shared_ptr<ChatBackend> inner, std::shared_ptr<RequestBudget> budget)
      : inner_(std::move(inner)), budget_(std::move(budget)) {}
  BudgetedBackend(std::shared_ptr<ChatBackend> inner, std::size_t max_requests)
      : BudgetedBackend(std::move(inner), std::make_shared<RequestBudget>(max_requests)) {}

  RawCompletion complete(const CompletionRequest& request) override {
    budget_->claim();
    return inner_->complete(request);
  }

  std::string label() const override { return inner_->label(); }
  std::size_t used() const noexcept { return budget_->used(); }

 private:
  std::shared_ptr<ChatBackend> inner_;
  std::shared_ptr<RequestBudget> budget_;
};

}  // namespace traitsim
