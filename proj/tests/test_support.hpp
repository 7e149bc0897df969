#pragma once

#include <atomic>
#include <deque>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "traitsim/backend.hpp"

namespace traitsim::testing {

// Replies from a callback; records every prompt it sees.
class ScriptedBackend final : public ChatBackend {
 public:
  using Script = std::function<std::string(const CompletionRequest&, int call)>;

  explicit ScriptedBackend(Script script) : script_(std::move(script)) {}

  // Fixed replies in order; the last one repeats.
  static std::shared_ptr<ScriptedBackend> replies(std::vector<std::string> rs) {
    return std::make_shared<ScriptedBackend>([rs](const CompletionRequest&, int call) {
      return rs[std::min<std::size_t>(static_cast<std::size_t>(call), rs.size() - 1)];
    });
  }

  RawCompletion complete(const CompletionRequest& req) override {
    int call;
    {
      std::lock_guard lock(mu_);
      call = static_cast<int>(prompts_.size());
      prompts_.push_back(req.prompt);
    }
    return {script_(req, call), {}, label()};
  }
  std::string label() const override { return "scripted"; }

  std::vector<std::string> prompts() const {
    std::lock_guard lock(mu_);
    return prompts_;
  }
  std::size_t calls() const {
    std::lock_guard lock(mu_);
    return prompts_.size();
  }

 private:
  Script script_;
  mutable std::mutex mu_;
  std::vector<std::string> prompts_;
};

// Wraps another backend and counts calls.
class CountingWrapper final : public ChatBackend {
 public:
  explicit CountingWrapper(std::shared_ptr<ChatBackend> inner) : inner_(std::move(inner)) {}
  RawCompletion complete(const CompletionRequest& req) override {
    ++calls;
    return inner_->complete(req);
  }
  std::string label() const override { return inner_->label(); }
  std::atomic<int> calls{0};

 private:
  std::shared_ptr<ChatBackend> inner_;
};

}  // namespace traitsim::testing
