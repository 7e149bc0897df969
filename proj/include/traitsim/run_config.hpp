#pragma once

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "traitsim/backend.hpp"
#include "traitsim/error.hpp"
#include "traitsim/persona.hpp"
#include "traitsim/text.hpp"

namespace traitsim {

enum class Phase { Survey, Bfi, Simulation };

constexpr std::string_view phase_name(Phase p) noexcept {
  switch (p) {
    case Phase::Survey: return "survey";
    case Phase::Bfi: return "bfi";
    case Phase::Simulation: return "sim";
  }
  return "?";
}

inline Phase parse_phase(std::string_view s) {
  if (s == "survey") return Phase::Survey;
  if (s == "bfi") return Phase::Bfi;
  if (s == "sim" || s == "simulate" || s == "simulation") return Phase::Simulation;
  throw ConfigError("unknown phase '" + std::string(s) + "'");
}

struct RunConfig {
  std::string backend = "mock";  // "mock" or "http"
  HttpChatConfig http;
  std::uint64_t seed = 7;
  int concurrency = 4;
  int repair_limit = 3;
  double alpha = 0.05;
  std::string out_dir = "run";
  std::set<Phase> phases = {Phase::Survey, Phase::Bfi, Phase::Simulation};
  std::string catalog_path;  // empty: embedded default catalog
  bool resume = false;
  int replicates = 1;
  std::size_t max_requests = kGridSize * 30;
  // Stop after this many personas have been worked on in this invocation;
  // 0 means no limit. Used to produce partial, resumable runs.
  std::size_t persona_limit = 0;

  void validate() const {
    if (backend != "mock" && backend != "http") throw ConfigError("backend must be mock or http");
    if (concurrency < 1) throw ConfigError("concurrency must be at least 1");
    if (repair_limit < 0) throw ConfigError("repair limit must be non-negative");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    if (replicates < 1) throw ConfigError("replicates must be at least 1");
    if (out_dir.empty()) throw ConfigError("output directory is empty");
    if (phases.empty()) throw ConfigError("no phases selected");
    if (max_requests == 0) throw ConfigError("max_requests must be positive");
    if (http.temperature < 0.0) throw ConfigError("temperature must be non-negative");
    if (http.max_output_tokens < 1) throw ConfigError("max_output_tokens must be positive");
  }

  BackendKind backend_kind() const {
    if (backend == "http") return http;
    return MockPolicyConfig{seed};
  }

  // Full resolved configuration. Credentials appear only as the name of
  // their environment variable.
  nlohmann::json to_json() const {
    nlohmann::json phases_json = nlohmann::json::array();
    for (Phase p : phases) phases_json.push_back(phase_name(p));
    return {
        {"schema_version", 1},
        {"backend", backend},
        {"endpoint", http.endpoint},
        {"model", http.model},
        {"api_key_env", http.api_key_env},
        {"temperature", http.temperature},
        {"max_output_tokens", http.max_output_tokens},
        {"http_retries", http.max_retries},
        {"http_initial_backoff_ms", http.initial_backoff.count()},
        {"seed", seed},
        {"concurrency", concurrency},
        {"repair_limit", repair_limit},
        {"alpha", alpha},
        {"out", out_dir},
        {"phases", phases_json},
        {"catalog", catalog_path},
        {"replicates", replicates},
        {"max_requests", max_requests},
    };
  }

  // Settings that change what the backend is asked or how answers are
  // judged. A resumed run must agree on all of them.
  nlohmann::json identity() const {
    nlohmann::json id = {{"backend", backend},   {"seed", seed},
                         {"repair_limit", repair_limit}, {"replicates", replicates},
                         {"catalog", catalog_path}};
    if (backend == "http") {
      id["endpoint"] = http.endpoint;
      id["model"] = http.model;
      id["temperature"] = http.temperature;
      id["max_output_tokens"] = http.max_output_tokens;
    }
    return id;
  }

  std::string run_id() const { return text::hex64(text::fnv1a64(identity().dump())); }

  // Overlays keys present in `j` (config-file format, same keys as to_json).
  void merge_json(const nlohmann::json& j) {
    try {
      if (j.contains("backend")) backend = j["backend"].get<std::string>();
      if (j.contains("endpoint")) http.endpoint = j["endpoint"].get<std::string>();
      if (j.contains("model")) http.model = j["model"].get<std::string>();
      if (j.contains("api_key_env")) http.api_key_env = j["api_key_env"].get<std::string>();
      if (j.contains("temperature")) http.temperature = j["temperature"].get<double>();
      if (j.contains("max_output_tokens")) http.max_output_tokens = j["max_output_tokens"].get<int>();
      if (j.contains("http_retries")) http.max_retries = j["http_retries"].get<int>();
      if (j.contains("http_initial_backoff_ms")) {
        http.initial_backoff = std::chrono::milliseconds(j["http_initial_backoff_ms"].get<long long>());
      }
      if (j.contains("seed")) seed = j["seed"].get<std::uint64_t>();
      if (j.contains("concurrency")) concurrency = j["concurrency"].get<int>();
      if (j.contains("repair_limit")) repair_limit = j["repair_limit"].get<int>();
      if (j.contains("alpha")) alpha = j["alpha"].get<double>();
      if (j.contains("out")) out_dir = j["out"].get<std::string>();
      if (j.contains("phases")) {
        phases.clear();
        for (const auto& p : j["phases"]) phases.insert(parse_phase(p.get<std::string>()));
      }
      if (j.contains("catalog")) catalog_path = j["catalog"].get<std::string>();
      if (j.contains("replicates")) replicates = j["replicates"].get<int>();
      if (j.contains("max_requests")) max_requests = j["max_requests"].get<std::size_t>();
      if (j.contains("resume")) resume = j["resume"].get<bool>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("bad configuration value: ") + e.what());
    }
  }

  void merge_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ConfigError("config file is not a JSON object: " + path);
    merge_json(j);
  }

  // TRAITSIM_<KEY> variables, e.g. TRAITSIM_SEED=11. `getenv` is injectable
  // for tests.
  void merge_env(const std::function<const char*(const char*)>& getenv_fn =
                     [](const char* k) { return std::getenv(k); }) {
    auto get = [&](const char* k) -> std::optional<std::string> {
      const char* v = getenv_fn(k);
      if (!v || !*v) return std::nullopt;
      return std::string(v);
    };
    try {
      if (auto v = get("TRAITSIM_BACKEND")) backend = *v;
      if (auto v = get("TRAITSIM_ENDPOINT")) http.endpoint = *v;
      if (auto v = get("TRAITSIM_MODEL")) http.model = *v;
      if (auto v = get("TRAITSIM_API_KEY_ENV")) http.api_key_env = *v;
      if (auto v = get("TRAITSIM_SEED")) seed = static_cast<std::uint64_t>(text::parse_int(*v));
      if (auto v = get("TRAITSIM_CONCURRENCY")) concurrency = static_cast<int>(text::parse_int(*v));
      if (auto v = get("TRAITSIM_ALPHA")) alpha = text::parse_double(*v);
      if (auto v = get("TRAITSIM_OUT")) out_dir = *v;
      if (auto v = get("TRAITSIM_CATALOG")) catalog_path = *v;
      if (auto v = get("TRAITSIM_MAX_REQUESTS")) max_requests = static_cast<std::size_t>(text::parse_int(*v));
    } catch (const ParseError& e) {
      throw ConfigError(std::string("bad environment value: ") + e.what());
    }
  }
};

}  // namespace traitsim
