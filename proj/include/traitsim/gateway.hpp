#pragma once

#include <memory>

#include "traitsim/backend.hpp"
#include "traitsim/http_backend.hpp"
#include "traitsim/mock_policy.hpp"

namespace traitsim {

inline std::shared_ptr<ChatBackend> make_backend(const BackendKind& kind) {
  struct Visitor {
    std::shared_ptr<ChatBackend> operator()(const HttpChatConfig& c) const {
      return std::make_shared<HttpChatBackend>(c);
    }
    std::shared_ptr<ChatBackend> operator()(const MockPolicyConfig& c) const {
      return std::make_shared<MockPolicyBackend>(c.seed);
    }
  };
  return std::visit(Visitor{}, kind);
}

inline RawCompletion complete(const CompletionRequest& request, ChatBackend& backend) {
  if (request.prompt.empty()) throw ConfigError("completion prompt is empty");
  return backend.complete(request);
}

inline RawCompletion complete(const CompletionRequest& request, const BackendKind& kind) {
  auto backend = make_backend(kind);
  return complete(request, *backend);
}

}  // namespace traitsim
