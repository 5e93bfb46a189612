#include <algorithm>
#include <array>

#include "vapt/provider.hpp"
#include "vapt/text.hpp"

namespace vapt {

namespace {

using Result = std::optional<std::string>;

bool non_empty_string(const json& j, const char* key) {
  return j.contains(key) && j.at(key).is_string() && !text::trim(j.at(key).get<std::string>()).empty();
}

Result check_array(const json& j, const char* key, std::size_t lo, std::size_t hi) {
  if (!j.contains(key) || !j.at(key).is_array()) return std::string("\"") + key + "\" must be an array";
  std::size_t n = j.at(key).size();
  if (n < lo || n > hi)
    return std::string("\"") + key + "\" must hold " + std::to_string(lo) + ".." +
           (hi == SIZE_MAX ? std::string("n") : std::to_string(hi)) + " entries, got " + std::to_string(n);
  return std::nullopt;
}

Result validate_strategy(const json& j) {
  if (!j.is_object()) return "strategy must be an object";
  if (auto e = check_array(j, "insights", 3, 7)) return e;
  for (const auto& i : j["insights"])
    if (!i.is_object() || !non_empty_string(i, "pattern") || !non_empty_string(i, "approach"))
      return "each insight needs non-empty \"pattern\" and \"approach\"";
  if (auto e = check_array(j, "shared_memories", 3, 5)) return e;
  for (const auto& m : j["shared_memories"])
    if (!m.is_object() || !non_empty_string(m, "what_happened") || !non_empty_string(m, "when_it_happened") ||
        !non_empty_string(m, "how_to_reference") || !non_empty_string(m, "memory_type"))
      return "each shared memory needs what_happened, when_it_happened, how_to_reference, memory_type";
  if (!non_empty_string(j, "user_profile")) return "missing \"user_profile\"";
  if (auto e = check_array(j, "conversation_goals", 3, SIZE_MAX)) return e;
  for (const auto& g : j["conversation_goals"])
    if (!g.is_string() || text::trim(g.get<std::string>()).empty()) return "conversation goals must be non-empty strings";
  return std::nullopt;
}

Result validate_topic_extraction(const json& j) {
  static constexpr std::array<std::string_view, 6> kContexts{"people", "lifestyle", "education",
                                                             "work",   "culture",   "leisure"};
  if (!j.is_object()) return "topic extraction must be an object";
  if (!j.contains("topics") || !j["topics"].is_array()) return "\"topics\" must be an array";
  if (j["topics"].size() > 2) return "max two topics per window, got " + std::to_string(j["topics"].size());
  for (const auto& t : j["topics"]) {
    if (!t.is_object() || !non_empty_string(t, "label")) return "each topic needs a non-empty \"label\"";
    if (auto e = check_array(t, "contexts", 1, 2)) return e;
    for (const auto& c : t["contexts"]) {
      if (!c.is_string()) return "contexts must be strings";
      std::string name = text::to_lower(c.get<std::string>());
      if (std::find(kContexts.begin(), kContexts.end(), name) == kContexts.end())
        return "unknown life context \"" + c.get<std::string>() + "\"";
    }
  }
  return std::nullopt;
}

Result validate_value_node(const json& j) {
  if (!j.is_object()) return "value node must be an object";
  if (!j.contains("sentiment") || !j["sentiment"].is_number_integer()) return "\"sentiment\" must be an integer";
  if (!non_empty_string(j, "reasoning")) return "missing \"reasoning\"";
  if (j.contains("evidence")) {
    if (!j["evidence"].is_array()) return "\"evidence\" must be an array";
    for (const auto& e : j["evidence"])
      if (!e.is_object() || !e.contains("window") || !e["window"].is_number_unsigned() || !e.contains("offset") ||
          !e["offset"].is_number_unsigned())
        return "evidence entries need unsigned \"window\" and \"offset\"";
  }
  return std::nullopt;
}

Result validate_pvq_item_answer(const json& j) {
  if (!j.is_object()) return "item answer must be an object";
  if (!non_empty_string(j, "embodied_response")) return "missing \"embodied_response\"";
  if (!j.contains("score") || !j["score"].is_number_integer()) return "\"score\" must be an integer";
  auto score = j["score"].get<long long>();
  if (score < 1 || score > 6) return "score " + std::to_string(score) + " out of range 1..6";
  if (!j.contains("confidence") || !j["confidence"].is_number()) return "\"confidence\" must be a number";
  double c = j["confidence"].get<double>();
  if (!(c >= 0.0 && c <= 1.0)) return "confidence out of range 0..1";
  if (!j.contains("evidence_snippets") || !j["evidence_snippets"].is_array())
    return "\"evidence_snippets\" must be an array";
  for (const auto& e : j["evidence_snippets"])
    if (!e.is_string()) return "evidence snippet ids must be strings";
  if (j.contains("reasoning") && !j["reasoning"].is_string()) return "\"reasoning\" must be a string";
  return std::nullopt;
}

}  // namespace

SchemaRegistry::SchemaRegistry() {
  add(std::string(schema::kStrategy), validate_strategy);
  add(std::string(schema::kTopicExtraction), validate_topic_extraction);
  add(std::string(schema::kValueNode), validate_value_node);
  add(std::string(schema::kPvqItemAnswer), validate_pvq_item_answer);
}

void SchemaRegistry::add(std::string name, Validator validator) { validators_[std::move(name)] = std::move(validator); }

bool SchemaRegistry::contains(std::string_view name) const { return validators_.find(name) != validators_.end(); }

std::optional<std::string> SchemaRegistry::validate(std::string_view name, const json& record) const {
  auto it = validators_.find(name);
  if (it == validators_.end()) return "unknown schema '" + std::string(name) + "'";
  return it->second(record);
}

}  // namespace vapt
