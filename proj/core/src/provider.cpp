#include "vapt/provider.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "vapt/crypto.hpp"
#include "vapt/error.hpp"

namespace vapt {

// ---------------------------------------------------------------------------
// Profiles and bundles

void ProviderProfile::validate() const {
  require(!name.empty(), Errc::invalid_argument, "provider profile needs a name");
  require(!model_id.empty(), Errc::invalid_argument, "profile '" + name + "': model_id must be non-empty");
  require(!endpoint.empty(), Errc::invalid_argument, "profile '" + name + "': endpoint must be set");
  require(timeout_seconds > 0, Errc::invalid_argument, "profile '" + name + "': timeout must be > 0");
  require(retry_limit >= 0 && retry_limit <= 5, Errc::invalid_argument,
          "profile '" + name + "': retry_limit must be within 0..5");
  require(max_output_tokens > 0, Errc::invalid_argument, "profile '" + name + "': max_output_tokens must be > 0");
  require(thinking_budget_tokens >= 0, Errc::invalid_argument,
          "profile '" + name + "': thinking_budget_tokens must be >= 0");
  require(embedding_dim > 0, Errc::invalid_argument, "profile '" + name + "': embedding_dim must be > 0");
  require(requests_per_minute >= 0, Errc::invalid_argument,
          "profile '" + name + "': requests_per_minute must be >= 0");
}

void to_json(json& j, const ProviderProfile& p) {
  j = json{{"name", p.name},
           {"endpoint", p.endpoint},
           {"model_id", p.model_id},
           {"auth_env_var", p.auth_env_var},
           {"max_output_tokens", p.max_output_tokens},
           {"thinking_budget_tokens", p.thinking_budget_tokens},
           {"timeout", p.timeout_seconds},
           {"retry_limit", p.retry_limit},
           {"requests_per_minute", p.requests_per_minute},
           {"embedding_dim", p.embedding_dim}};
}

void from_json(const json& j, ProviderProfile& p) {
  p = ProviderProfile{};
  p.name = j.at("name").get<std::string>();
  p.endpoint = j.at("endpoint").get<std::string>();
  p.model_id = j.at("model_id").get<std::string>();
  p.auth_env_var = j.value("auth_env_var", "");
  p.max_output_tokens = j.value("max_output_tokens", p.max_output_tokens);
  p.thinking_budget_tokens = j.value("thinking_budget_tokens", p.thinking_budget_tokens);
  p.timeout_seconds = j.value("timeout", p.timeout_seconds);
  p.retry_limit = j.value("retry_limit", p.retry_limit);
  p.requests_per_minute = j.value("requests_per_minute", p.requests_per_minute);
  p.embedding_dim = j.value("embedding_dim", p.embedding_dim);
  p.validate();
}

ProviderProfile mock_profile(std::string name) {
  ProviderProfile p;
  p.name = std::move(name);
  p.endpoint = "mock:" + p.name;
  p.model_id = "mock-model";
  p.retry_limit = 1;
  return p;
}

void PromptBundle::validate() const {
  require(!system_text.empty(), Errc::invalid_argument, "invalid bundle: system_text is empty");
  for (const Turn& t : turns)
    require(!t.text.empty(), Errc::invalid_argument, "invalid bundle: empty turn text");
}

// ---------------------------------------------------------------------------
// Embeddings

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  require(a.dim() == b.dim(), Errc::length_mismatch, "embedding dimensions differ");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

EmbeddingVector pseudo_embed(std::string_view text, std::size_t dim) {
  require(!text.empty(), Errc::invalid_argument, "pseudo_embed: empty text");
  require(dim >= 8, Errc::invalid_argument, "pseudo_embed: dim must be >= 8");

  EmbeddingVector out;
  out.origin = EmbeddingOrigin::pseudo;
  out.values.reserve(dim);

  std::string block_input(text);
  block_input.append(8, '\0');
  const std::size_t counter_at = text.size();
  for (std::uint64_t counter = 0; out.values.size() < dim; ++counter) {
    for (int i = 0; i < 8; ++i)
      block_input[counter_at + i] = static_cast<char>((counter >> (56 - 8 * i)) & 0xFF);
    crypto::Digest d = crypto::sha256(block_input);
    for (std::size_t off = 0; off + 8 <= d.size() && out.values.size() < dim; off += 8) {
      std::uint64_t word = 0;
      for (int i = 0; i < 8; ++i) word = (word << 8) | d[off + i];
      double unit = static_cast<double>(word >> 11) * 0x1.0p-53;  // [0, 1)
      out.values.push_back(2.0 * unit - 1.0);
    }
  }

  double norm = 0;
  for (double v : out.values) norm += v * v;
  norm = std::sqrt(norm);
  require(norm > 0, Errc::degenerate, "pseudo_embed produced a zero vector");
  for (double& v : out.values) v /= norm;
  return out;
}

// ---------------------------------------------------------------------------
// Call log

json to_json(const CallRecord& r) {
  json j{{"ts", format_rfc3339(r.ts)},
         {"profile", r.profile},
         {"op", r.op},
         {"duration_ms", r.duration_ms},
         {"ok", r.ok},
         {"attempt", r.attempt}};
  if (!r.request_key.empty()) j["request_key"] = r.request_key;
  return j;
}

CallLog::CallLog(std::filesystem::path jsonl_path) : path_(std::move(jsonl_path)) {}

void CallLog::append(const CallRecord& record) {
  std::lock_guard lock(mu_);
  records_.push_back(record);
  if (!path_.empty()) {
    std::ofstream out(path_, std::ios::app);
    out << to_json(record).dump() << '\n';
  }
}

std::vector<CallRecord> CallLog::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

std::size_t CallLog::attempts(std::string_view op) const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& r : records_)
    if (r.op == op) ++n;
  return n;
}

// ---------------------------------------------------------------------------
// Gateway

class Gateway::RateLimiter {
 public:
  explicit RateLimiter(double per_minute) : per_minute_(per_minute) {}

  // Token bucket with capacity one: callers are spaced 60/rpm seconds apart.
  void acquire() {
    if (per_minute_ <= 0) return;
    using clock = std::chrono::steady_clock;
    auto spacing = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(60.0 / per_minute_));
    clock::time_point slot;
    {
      std::lock_guard lock(mu_);
      auto now = clock::now();
      slot = std::max(now, next_);
      next_ = slot + spacing;
    }
    std::this_thread::sleep_until(slot);
  }

 private:
  double per_minute_;
  std::mutex mu_;
  std::chrono::steady_clock::time_point next_{};
};

Gateway::Gateway(std::shared_ptr<CallLog> log) : log_(std::move(log)) {
  if (!log_) log_ = std::make_shared<CallLog>();
}

Gateway::~Gateway() = default;

void Gateway::set_mock_backend(std::shared_ptr<Backend> backend) {
  std::lock_guard lock(mu_);
  mock_ = std::move(backend);
}

void Gateway::attach(const std::string& profile_name, std::shared_ptr<Backend> backend) {
  std::lock_guard lock(mu_);
  attached_[profile_name] = std::move(backend);
}

Backend& Gateway::backend_for(const ProviderProfile& profile) {
  std::lock_guard lock(mu_);
  if (auto it = attached_.find(profile.name); it != attached_.end()) return *it->second;
  if (profile.is_mock()) {
    if (!mock_) fail(Errc::provider_unavailable, "no mock backend configured for profile '" + profile.name + "'");
    return *mock_;
  }
  if (!http_) http_ = std::make_shared<HttpBackend>();
  return *http_;
}

Gateway::RateLimiter& Gateway::limiter_for(const ProviderProfile& profile) {
  std::lock_guard lock(mu_);
  auto& slot = limiters_[profile.name];
  if (!slot) slot = std::make_unique<RateLimiter>(profile.requests_per_minute);
  return *slot;
}

void Gateway::check_credentials(const ProviderProfile& profile) const {
  if (profile.is_mock()) return;
  {
    std::lock_guard lock(mu_);
    if (attached_.count(profile.name)) return;
  }
  require(!profile.auth_env_var.empty(), Errc::credential_missing,
          "profile '" + profile.name + "' declares no credential variable");
  const char* value = std::getenv(profile.auth_env_var.c_str());
  require(value != nullptr && *value != '\0', Errc::credential_missing,
          "credential variable " + profile.auth_env_var + " is not set");
}

template <typename F>
auto Gateway::with_retries(const ProviderProfile& profile, std::string_view op, const std::string& key, F&& call)
    -> decltype(call()) {
  profile.validate();
  check_credentials(profile);
  RateLimiter& limiter = limiter_for(profile);
  const int max_attempts = profile.retry_limit + 1;
  for (int attempt = 1;; ++attempt) {
    limiter.acquire();
    auto started = std::chrono::steady_clock::now();
    CallRecord rec{now_utc(), profile.name, std::string(op), 0.0, false, attempt, key};
    auto finish = [&](bool ok) {
      rec.ok = ok;
      rec.duration_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
      log_->append(rec);
    };
    try {
      auto result = call();
      finish(true);
      return result;
    } catch (const ProviderFailure& e) {
      finish(false);
      if (!e.retryable() || attempt >= max_attempts)
        throw Error(e.code(), std::string(op) + ": failed after " + std::to_string(attempt) +
                                  " attempt(s): " + e.what());
    } catch (const Error&) {
      finish(false);
      throw;
    }
  }
}

std::string Gateway::complete_chat(const ProviderProfile& profile, const PromptBundle& bundle) {
  bundle.validate();
  Backend& backend = backend_for(profile);
  std::string text = with_retries(profile, "complete_chat", bundle.request_key,
                                   [&] { return backend.chat(profile, bundle); });
  require(!text.empty(), Errc::provider_refusal, "complete_chat: provider returned empty text");
  return text;
}

json Gateway::generate_structured(const ProviderProfile& profile, const StructuredRequest& request) {
  require(schemas_.contains(request.schema_name), Errc::invalid_argument,
          "unknown schema '" + request.schema_name + "'");
  require(!request.prompt.empty(), Errc::invalid_argument, "generate_structured: empty prompt");
  Backend& backend = backend_for(profile);

  std::string correction;
  std::string raw;
  std::string problem;
  for (int round = 0; round < 2; ++round) {
    raw = with_retries(profile, "generate_structured", request.request_key,
                       [&] { return backend.structured(profile, request, correction); });
    try {
      json record = parse_model_json(raw);
      auto err = schemas_.validate(request.schema_name, record);
      if (!err) return record;
      problem = *err;
    } catch (const Error& e) {
      problem = e.what();
    }
    correction = "Your previous answer was rejected: " + problem +
                 ". Reply again with a single JSON object that satisfies the schema.";
  }
  throw Error(Errc::schema_violation, "schema '" + request.schema_name + "' violated after reprompt: " + problem,
              raw);
}

EmbeddingVector Gateway::embed_text(const ProviderProfile& profile, std::string_view text) {
  require(!text.empty(), Errc::invalid_argument, "embed_text: empty text");
  Backend& backend = backend_for(profile);
  EmbeddingVector v = with_retries(profile, "embed_text", std::string(text),
                                   [&] { return backend.embed(profile, text); });
  require(v.dim() == profile.embedding_dim, Errc::length_mismatch,
          "embedding has dim " + std::to_string(v.dim()) + ", profile expects " +
              std::to_string(profile.embedding_dim));
  return v;
}

json parse_model_json(std::string_view raw) {
  std::string_view body = raw;
  auto fence = body.find("```");
  if (fence != std::string_view::npos) {
    auto start = body.find('\n', fence);
    auto end = body.rfind("```");
    if (start != std::string_view::npos && end > start) body = body.substr(start + 1, end - start - 1);
  }
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) throw Error(Errc::parse, "response is not valid JSON", std::string(raw));
  return j;
}

}  // namespace vapt
