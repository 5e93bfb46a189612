#include <cstdlib>

#include <httplib.h>

#include "vapt/provider.hpp"

namespace vapt {

namespace {

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash
};

Url split_url(const std::string& endpoint) {
  auto scheme_end = endpoint.find("://");
  require(scheme_end != std::string::npos, Errc::invalid_argument, "endpoint '" + endpoint + "' has no scheme");
  auto path_start = endpoint.find('/', scheme_end + 3);
  Url u;
  u.origin = endpoint.substr(0, path_start);
  u.prefix = path_start == std::string::npos ? "" : endpoint.substr(path_start);
  while (!u.prefix.empty() && u.prefix.back() == '/') u.prefix.pop_back();
  return u;
}

json post(const ProviderProfile& profile, const std::string& path, const json& body) {
  Url url = split_url(profile.endpoint);
  httplib::Client client(url.origin);
  auto secs = static_cast<time_t>(profile.timeout_seconds);
  auto usecs = static_cast<time_t>((profile.timeout_seconds - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  httplib::Headers headers;
  if (!profile.auth_env_var.empty())
    if (const char* token = std::getenv(profile.auth_env_var.c_str()))
      headers.emplace("Authorization", std::string("Bearer ") + token);

  auto res = client.Post(url.prefix + path, headers, body.dump(), "application/json");
  if (!res) throw ProviderFailure(Errc::network, "http: " + httplib::to_string(res.error()));
  if (res->status == 401 || res->status == 403)
    fail(Errc::credential_missing, "http " + std::to_string(res->status) + ": credential rejected");
  if (res->status == 429 || res->status >= 500)
    throw ProviderFailure(res->status == 503 ? Errc::provider_unavailable : Errc::network,
                          "http " + std::to_string(res->status));
  if (res->status >= 400)
    throw ProviderFailure(Errc::provider_refusal, "http " + std::to_string(res->status) + ": " + res->body);

  json reply = json::parse(res->body, nullptr, false);
  if (reply.is_discarded()) throw ProviderFailure(Errc::network, "http: response body is not JSON");
  return reply;
}

std::string first_choice_text(const json& reply) {
  if (!reply.contains("choices") || reply["choices"].empty())
    throw ProviderFailure(Errc::network, "http: response has no choices");
  const json& choice = reply["choices"][0];
  if (choice.value("finish_reason", "") == "content_filter")
    throw ProviderFailure(Errc::provider_refusal, "provider filtered the response");
  const json& message = choice.at("message");
  if (message.contains("refusal") && message["refusal"].is_string())
    throw ProviderFailure(Errc::provider_refusal, message["refusal"].get<std::string>());
  if (!message.contains("content") || !message["content"].is_string())
    throw ProviderFailure(Errc::provider_refusal, "provider returned no content");
  return message["content"].get<std::string>();
}

json base_body(const ProviderProfile& profile, int max_tokens) {
  json body{{"model", profile.model_id},
            {"max_tokens", max_tokens > 0 ? max_tokens : profile.max_output_tokens}};
  if (profile.thinking_budget_tokens > 0)
    body["thinking"] = {{"type", "enabled"}, {"budget_tokens", profile.thinking_budget_tokens}};
  return body;
}

}  // namespace

std::string HttpBackend::chat(const ProviderProfile& profile, const PromptBundle& bundle) {
  json body = base_body(profile, bundle.params.max_tokens);
  body["temperature"] = bundle.params.temperature;
  json messages = json::array({{{"role", "system"}, {"content", bundle.system_text}}});
  for (const Turn& t : bundle.turns)
    messages.push_back({{"role", t.role == TurnRole::user ? "user" : "assistant"}, {"content", t.text}});
  body["messages"] = std::move(messages);
  return first_choice_text(post(profile, "/chat/completions", body));
}

std::string HttpBackend::structured(const ProviderProfile& profile, const StructuredRequest& request,
                                    const std::string& correction) {
  json body = base_body(profile, 0);
  body["temperature"] = 0.0;
  body["response_format"] = {{"type", "json_object"}};
  json messages = json::array();
  if (!request.system_text.empty()) messages.push_back({{"role", "system"}, {"content", request.system_text}});
  messages.push_back({{"role", "user"}, {"content", request.prompt}});
  if (!correction.empty()) messages.push_back({{"role", "user"}, {"content", correction}});
  body["messages"] = std::move(messages);
  return first_choice_text(post(profile, "/chat/completions", body));
}

EmbeddingVector HttpBackend::embed(const ProviderProfile& profile, std::string_view text) {
  json body{{"model", profile.model_id}, {"input", std::string(text)}};
  if (profile.embedding_dim > 0) body["dimensions"] = profile.embedding_dim;
  json reply = post(profile, "/embeddings", body);
  if (!reply.contains("data") || reply["data"].empty())
    throw ProviderFailure(Errc::provider_unavailable, "http: embedding response has no data");
  return EmbeddingVector{reply["data"][0].at("embedding").get<std::vector<double>>(), EmbeddingOrigin::remote};
}

}  // namespace vapt
