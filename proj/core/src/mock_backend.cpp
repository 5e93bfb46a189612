#include <array>
#include <fstream>
#include <thread>

#include "vapt/provider.hpp"
#include "vapt/rng.hpp"

namespace vapt {

namespace {

constexpr std::array<std::string_view, 24> kTopicVocabulary{
    "work life balance", "public napping",     "family dinners",    "career growth",   "morning routines",
    "friendship",        "travel",             "online learning",   "music",           "local festivals",
    "personal finance",  "exercise",           "cooking at home",   "religious holidays", "team deadlines",
    "graduate school",   "volunteering",       "video games",       "sleep",           "moving abroad",
    "social media",      "language learning",  "hiking",            "respect for elders"};

constexpr std::array<std::string_view, 6> kContextNames{"People", "Lifestyle", "Education",
                                                        "Work",   "Culture",   "Leisure"};

void raise_scripted_error(const std::string& kind) {
  if (kind == "refusal") throw ProviderFailure(Errc::provider_refusal, "mock: scripted refusal");
  if (kind == "unavailable") throw ProviderFailure(Errc::provider_unavailable, "mock: scripted unavailability");
  throw ProviderFailure(Errc::network, "mock: scripted network failure");
}

// Turns a script entry into response text, raising scripted failures.
std::string render_entry(const json& entry) {
  if (entry.is_object() && entry.contains("$error")) raise_scripted_error(entry["$error"].get<std::string>());
  if (entry.is_object() && entry.contains("$raw")) return entry["$raw"].get<std::string>();
  if (entry.is_string()) return entry.get<std::string>();
  return entry.dump();
}

std::deque<json> to_queue(const json& j, const char* what) {
  require(j.is_array(), Errc::parse, std::string("mock script: ") + what + " must be an array");
  return {j.begin(), j.end()};
}

std::map<std::string, std::deque<json>> to_table(const json& j, const char* what) {
  require(j.is_object(), Errc::parse, std::string("mock script: ") + what + " must be an object");
  std::map<std::string, std::deque<json>> out;
  for (const auto& [key, value] : j.items()) out[key] = to_queue(value, what);
  return out;
}

json synth_strategy(SeededRng& rng) {
  json j;
  j["insights"] = json::array();
  std::size_t n_insights = 3 + rng.below(3);
  for (std::size_t i = 0; i < n_insights; ++i)
    j["insights"].push_back({{"pattern", "recurring theme " + std::to_string(rng.below(100))},
                             {"approach", "ask an open follow-up about it"}});
  j["shared_memories"] = json::array();
  for (int i = 0; i < 3; ++i)
    j["shared_memories"].push_back({{"what_happened", std::string(kTopicVocabulary[rng.below(kTopicVocabulary.size())])},
                                    {"when_it_happened", "session " + std::to_string(1 + i)},
                                    {"how_to_reference", "mention it in passing"},
                                    {"memory_type", i == 0 ? "story" : "detail"}});
  j["user_profile"] = "Synthetic profile. Enjoys " + std::string(kTopicVocabulary[rng.below(kTopicVocabulary.size())]) + ".";
  j["conversation_goals"] = json::array({"follow up on a past story", "explore a new area", "ask about priorities"});
  return j;
}

json synth_topics(SeededRng& rng) {
  json topics = json::array();
  std::size_t n = rng.below(3);
  for (std::size_t i = 0; i < n; ++i) {
    std::string label(kTopicVocabulary[rng.below(kTopicVocabulary.size())]);
    json contexts = json::array({std::string(kContextNames[rng.below(6)])});
    if (rng.below(3) == 0) {
      std::string second(kContextNames[rng.below(6)]);
      if (second != contexts[0].get<std::string>()) contexts.push_back(second);
    }
    topics.push_back({{"label", label}, {"contexts", contexts}});
  }
  return {{"topics", topics}};
}

json synth_value_node(SeededRng& rng, const json& hints) {
  json j;
  j["sentiment"] = rng.between(-7, 7);
  j["reasoning"] = "Tone of the referenced exchanges.";
  json evidence = json::array();
  if (hints.contains("evidence") && hints["evidence"].is_array() && !hints["evidence"].empty())
    evidence.push_back(hints["evidence"][rng.below(hints["evidence"].size())]);
  j["evidence"] = evidence;
  return j;
}

json synth_item_answer(SeededRng& rng, const json& hints) {
  json j;
  int score = rng.between(1, 6);
  j["score"] = score;
  j["confidence"] = static_cast<double>(rng.between(50, 100)) / 100.0;
  j["embodied_response"] = "That is " + std::string(score >= 4 ? "quite" : "not really") + " like me.";
  json snippets = json::array();
  if (hints.contains("snippets") && hints["snippets"].is_array())
    for (std::size_t i = 0; i < hints["snippets"].size() && i < 2; ++i) snippets.push_back(hints["snippets"][i]);
  j["evidence_snippets"] = snippets;
  j["reasoning"] = "Inferred from the transcript.";
  return j;
}

}  // namespace

MockScript MockScript::from_json(const json& j) {
  require(j.is_object(), Errc::parse, "mock script must be a JSON object");
  MockScript s;
  s.seed = j.value("seed", std::uint64_t{0});
  s.synthesize = j.value("synthesize", false);
  if (j.contains("completion_shuffle_seed")) s.completion_shuffle_seed = j["completion_shuffle_seed"].get<std::uint64_t>();
  if (j.contains("chat")) s.chat = to_queue(j["chat"], "chat");
  if (j.contains("chat_keyed")) s.chat_keyed = to_table(j["chat_keyed"], "chat_keyed");
  if (j.contains("structured")) s.structured = to_table(j["structured"], "structured");
  if (j.contains("structured_keyed")) s.structured_keyed = to_table(j["structured_keyed"], "structured_keyed");
  if (j.contains("embeddings")) {
    require(j["embeddings"].is_object(), Errc::parse, "mock script: embeddings must be an object");
    for (const auto& [text, values] : j["embeddings"].items()) s.embeddings[text] = values.get<std::vector<double>>();
  }
  s.embeddings_unavailable = j.value("embeddings_unavailable", false);
  return s;
}

MockScript MockScript::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), Errc::io, "cannot open mock script " + path.string());
  json j = json::parse(in, nullptr, false);
  require(!j.is_discarded(), Errc::parse, "mock script " + path.string() + " is not valid JSON");
  return from_json(j);
}

MockBackend::MockBackend(MockScript script) : script_(std::move(script)) {}

std::optional<json> MockBackend::pop(std::deque<json>& queue) {
  if (queue.empty()) return std::nullopt;
  json front = std::move(queue.front());
  queue.pop_front();
  return front;
}

std::optional<json> MockBackend::pop_keyed(std::map<std::string, std::deque<json>>& table, const std::string& key) {
  auto it = table.find(key);
  if (it == table.end()) return std::nullopt;
  return pop(it->second);
}

void MockBackend::jitter(const std::string& key) const {
  if (!script_.completion_shuffle_seed) return;
  auto ms = derive_seed(*script_.completion_shuffle_seed, key) % 7;
  std::this_thread::sleep_for(std::chrono::milliseconds(ms));
}

std::vector<MockCall> MockBackend::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::string MockBackend::chat(const ProviderProfile&, const PromptBundle& bundle) {
  jitter(bundle.request_key);
  std::optional<json> entry;
  {
    std::lock_guard lock(mu_);
    std::string last_user;
    for (const Turn& t : bundle.turns)
      if (t.role == TurnRole::user) last_user = t.text;
    calls_.push_back({"chat", bundle.request_key, bundle.system_text, last_user});
    entry = pop_keyed(script_.chat_keyed, bundle.request_key);
    if (!entry) entry = pop(script_.chat);
    if (!entry && script_.synthesize) {
      // Depends on the system text so distinct persona contexts give distinct replies.
      SeededRng rng(derive_seed(script_.seed, "chat|" + bundle.request_key + "|" + bundle.system_text));
      return "Reply " + std::to_string(rng.below(1000000)) + ": I would weigh that carefully.";
    }
  }
  require(entry.has_value(), Errc::script_exhausted, "mock: chat script exhausted");
  return render_entry(*entry);
}

std::string MockBackend::structured(const ProviderProfile&, const StructuredRequest& request,
                                    const std::string& correction) {
  jitter(request.request_key);
  std::optional<json> entry;
  {
    std::lock_guard lock(mu_);
    calls_.push_back({"structured", request.request_key, request.system_text,
                      correction.empty() ? request.prompt : request.prompt + "\n\n" + correction});
    entry = pop_keyed(script_.structured_keyed, request.request_key);
    if (!entry) {
      auto it = script_.structured.find(request.schema_name);
      if (it != script_.structured.end()) entry = pop(it->second);
    }
    if (!entry && script_.synthesize) {
      SeededRng rng(derive_seed(script_.seed, request.schema_name + "|" + request.request_key));
      if (request.schema_name == schema::kStrategy) return synth_strategy(rng).dump();
      if (request.schema_name == schema::kTopicExtraction) return synth_topics(rng).dump();
      if (request.schema_name == schema::kValueNode) return synth_value_node(rng, request.hints).dump();
      if (request.schema_name == schema::kPvqItemAnswer) return synth_item_answer(rng, request.hints).dump();
    }
  }
  require(entry.has_value(), Errc::script_exhausted, "mock: no scripted record for schema '" + request.schema_name + "'");
  return render_entry(*entry);
}

EmbeddingVector MockBackend::embed(const ProviderProfile& profile, std::string_view text) {
  std::lock_guard lock(mu_);
  calls_.push_back({"embed", std::string(text), {}, std::string(text)});
  if (script_.embeddings_unavailable) throw ProviderFailure(Errc::provider_unavailable, "mock: embeddings unavailable");
  if (auto it = script_.embeddings.find(std::string(text)); it != script_.embeddings.end())
    return EmbeddingVector{it->second, EmbeddingOrigin::remote};
  return pseudo_embed(text, profile.embedding_dim);
}

}  // namespace vapt
