#pragma once

// Uniform access to text-generation, structured-output and embedding
// services. Every other module talks to models through `Gateway`; the
// `MockBackend` makes all of them testable offline.

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vapt/error.hpp"
#include "vapt/time.hpp"

namespace vapt {

using nlohmann::json;

struct ProviderProfile {
  std::string name;
  std::string endpoint;          // https://... or mock:<anything>
  std::string model_id;
  std::string auth_env_var;      // empty allowed for mock profiles
  int max_output_tokens = 3000;
  int thinking_budget_tokens = 0;
  double timeout_seconds = 60.0;
  int retry_limit = 2;
  double requests_per_minute = 0.0;  // 0 disables rate limiting
  std::size_t embedding_dim = 1536;

  bool is_mock() const { return endpoint.rfind("mock:", 0) == 0; }
  void validate() const;
};

void to_json(json& j, const ProviderProfile& p);
void from_json(const json& j, ProviderProfile& p);

ProviderProfile mock_profile(std::string name = "mock");

enum class TurnRole { user, agent };

struct Turn {
  TurnRole role;
  std::string text;
};

struct GenerationParams {
  double temperature = 0.7;
  int max_tokens = 0;  // 0 = profile default
};

struct PromptBundle {
  std::string system_text;
  std::vector<Turn> turns;
  GenerationParams params;
  // Opaque stable key used for call logs and keyed mock scripts.
  std::string request_key;

  void validate() const;
};

struct StructuredRequest {
  std::string system_text;
  std::string prompt;
  std::string schema_name;
  std::string request_key;
  json hints = json::object();  // machine-readable context, ignored by remote backends
};

enum class EmbeddingOrigin { remote, pseudo };

struct EmbeddingVector {
  std::vector<double> values;
  EmbeddingOrigin origin = EmbeddingOrigin::remote;

  std::size_t dim() const { return values.size(); }
};

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

// Counter-mode SHA-256 stream over the UTF-8 bytes of `text`, 8-byte blocks
// mapped to [-1, 1], truncated to `dim`, L2-normalised. Case and whitespace
// sensitive.
EmbeddingVector pseudo_embed(std::string_view text, std::size_t dim);

// ---------------------------------------------------------------------------
// Call log

struct CallRecord {
  Instant ts;
  std::string profile;
  std::string op;
  double duration_ms = 0.0;
  bool ok = false;
  int attempt = 1;
  std::string request_key;
};

json to_json(const CallRecord& r);

class CallLog {
 public:
  CallLog() = default;
  explicit CallLog(std::filesystem::path jsonl_path);

  void append(const CallRecord& record);
  std::vector<CallRecord> records() const;
  std::size_t attempts(std::string_view op) const;

 private:
  mutable std::mutex mu_;
  std::filesystem::path path_;
  std::vector<CallRecord> records_;
};

// ---------------------------------------------------------------------------
// Schemas

class SchemaRegistry {
 public:
  // Returns an error message, or nullopt when the record is valid.
  using Validator = std::function<std::optional<std::string>(const json&)>;

  SchemaRegistry();  // registers the built-in schemas

  void add(std::string name, Validator validator);
  bool contains(std::string_view name) const;
  std::optional<std::string> validate(std::string_view name, const json& record) const;

 private:
  std::map<std::string, Validator, std::less<>> validators_;
};

namespace schema {
inline constexpr std::string_view kStrategy = "strategy";
inline constexpr std::string_view kTopicExtraction = "topic-extraction";
inline constexpr std::string_view kValueNode = "value-node";
inline constexpr std::string_view kPvqItemAnswer = "pvq-item-answer";
}  // namespace schema

// ---------------------------------------------------------------------------
// Backends

class Backend {
 public:
  virtual ~Backend() = default;

  virtual std::string chat(const ProviderProfile& profile, const PromptBundle& bundle) = 0;
  // `correction` is empty on the first attempt; on a reprompt it carries the
  // validation error of the previous answer.
  virtual std::string structured(const ProviderProfile& profile, const StructuredRequest& request,
                                 const std::string& correction) = 0;
  virtual EmbeddingVector embed(const ProviderProfile& profile, std::string_view text) = 0;
};

// Failure raised by backends. Refusals are never retried; network and
// availability failures are retried up to the profile's retry_limit.
class ProviderFailure : public std::runtime_error {
 public:
  ProviderFailure(Errc code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}
  Errc code() const noexcept { return code_; }
  bool retryable() const noexcept { return code_ != Errc::provider_refusal; }

 private:
  Errc code_;
};

// Script-driven offline backend.
//
// Script JSON:
//   {
//     "seed": 7,
//     "synthesize": false,          // fabricate schema-valid answers when no entry applies
//     "completion_shuffle_seed": 3, // optional per-call jitter to scramble completion order
//     "chat": ["hi there", ...],                 // ordered queue
//     "chat_keyed": {"<request_key>": [...]},
//     "structured": {"<schema>": [<record>, ...]},
//     "structured_keyed": {"<request_key>": [<record>, ...]},
//     "embeddings": {"<text>": [0.1, ...]},
//     "embeddings_unavailable": false
//   }
// A queue entry may be {"$error": "network"|"refusal"|"unavailable"} to
// inject a failure, or {"$raw": "..."} to return text verbatim.
struct MockScript {
  std::uint64_t seed = 0;
  bool synthesize = false;
  std::optional<std::uint64_t> completion_shuffle_seed;
  std::deque<json> chat;
  std::map<std::string, std::deque<json>> chat_keyed;
  std::map<std::string, std::deque<json>> structured;
  std::map<std::string, std::deque<json>> structured_keyed;
  std::map<std::string, std::vector<double>> embeddings;
  bool embeddings_unavailable = false;

  static MockScript from_json(const json& j);
  static MockScript load(const std::filesystem::path& path);
};

struct MockCall {
  std::string op;
  std::string request_key;
  std::string system_text;
  std::string prompt;
};

class MockBackend final : public Backend {
 public:
  explicit MockBackend(MockScript script);

  std::string chat(const ProviderProfile& profile, const PromptBundle& bundle) override;
  std::string structured(const ProviderProfile& profile, const StructuredRequest& request,
                         const std::string& correction) override;
  EmbeddingVector embed(const ProviderProfile& profile, std::string_view text) override;

  std::vector<MockCall> calls() const;

 private:
  std::optional<json> pop(std::deque<json>& queue);
  std::optional<json> pop_keyed(std::map<std::string, std::deque<json>>& table, const std::string& key);
  void jitter(const std::string& key) const;

  mutable std::mutex mu_;
  MockScript script_;
  std::vector<MockCall> calls_;
};

// OpenAI-compatible HTTP backend (chat/completions + embeddings).
class HttpBackend final : public Backend {
 public:
  std::string chat(const ProviderProfile& profile, const PromptBundle& bundle) override;
  std::string structured(const ProviderProfile& profile, const StructuredRequest& request,
                         const std::string& correction) override;
  EmbeddingVector embed(const ProviderProfile& profile, std::string_view text) override;
};

// ---------------------------------------------------------------------------
// Gateway

class Gateway {
 public:
  explicit Gateway(std::shared_ptr<CallLog> log = nullptr);
  ~Gateway();
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  // Backend used for every profile whose endpoint is mock:...
  void set_mock_backend(std::shared_ptr<Backend> backend);
  // Explicit backend for one profile name (overrides endpoint routing).
  void attach(const std::string& profile_name, std::shared_ptr<Backend> backend);

  std::string complete_chat(const ProviderProfile& profile, const PromptBundle& bundle);
  json generate_structured(const ProviderProfile& profile, const StructuredRequest& request);
  EmbeddingVector embed_text(const ProviderProfile& profile, std::string_view text);

  SchemaRegistry& schemas() { return schemas_; }
  const std::shared_ptr<CallLog>& call_log() const { return log_; }

 private:
  class RateLimiter;

  Backend& backend_for(const ProviderProfile& profile);
  RateLimiter& limiter_for(const ProviderProfile& profile);
  void check_credentials(const ProviderProfile& profile) const;

  template <typename F>
  auto with_retries(const ProviderProfile& profile, std::string_view op, const std::string& key, F&& call)
      -> decltype(call());

  std::shared_ptr<CallLog> log_;
  SchemaRegistry schemas_;
  mutable std::mutex mu_;
  std::shared_ptr<Backend> mock_;
  std::shared_ptr<Backend> http_;
  std::map<std::string, std::shared_ptr<Backend>> attached_;
  std::map<std::string, std::unique_ptr<RateLimiter>> limiters_;
};

// Strips optional ```json fences and parses. Throws Errc::parse.
json parse_model_json(std::string_view raw);

}  // namespace vapt
