#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vapt/chat.hpp"
#include "vapt/crypto.hpp"
#include "vapt/provider.hpp"
#include "vapt/pvq.hpp"

namespace vapt {

enum class PersonaCondition { ChatPersona, SchwartzPersona, AntiPersona, RandomPersona };

inline constexpr std::array<PersonaCondition, 4> kPersonaConditions{
    PersonaCondition::ChatPersona, PersonaCondition::SchwartzPersona, PersonaCondition::AntiPersona,
    PersonaCondition::RandomPersona};

std::string_view to_string(PersonaCondition c);
PersonaCondition persona_condition_from_string(std::string_view s);

enum class ScenarioKind { dilemma, personal_filter };
enum class ScenarioOrigin { fixed, participant };

struct Scenario {
  ScenarioKind kind = ScenarioKind::dilemma;
  std::string text;
  ScenarioOrigin origin = ScenarioOrigin::fixed;
  std::string group;  // "wealth", "community" or "personal"

  bool operator==(const Scenario&) const = default;
};

void to_json(json& j, const Scenario& s);
void from_json(const json& j, Scenario& s);

std::vector<Scenario> fixed_dilemmas();
// Two fixed dilemmas followed by the participant's three filter questions.
std::vector<Scenario> session_scenarios(const std::vector<std::string>& filter_questions);

struct PersonaInputs {
  std::vector<Message> transcript;
  std::optional<Strategy> strategy;
  std::optional<ValueProfile> manual_profile;
  std::optional<ValueProfile> random_profile;
};

struct ConditionContext {
  PersonaCondition condition;
  std::string system_text;
  std::size_t transcript_excerpts = 0;
  std::size_t profile_values = 0;
};

ConditionContext build_condition_context(PersonaCondition condition, const PersonaInputs& inputs);

std::string generate_persona_response(Gateway& gateway, const ProviderProfile& profile, const ConditionContext& context,
                                      const Scenario& scenario, const std::string& request_key);

struct PersonaResponse {
  PersonaCondition condition;
  std::string text;
};

struct BlindSlot {
  std::string slot_id;
  std::string text;
  bool operator==(const BlindSlot&) const = default;
};

struct BlindRound {
  int round_index = 0;
  Scenario scenario;
  std::array<BlindSlot, 4> slots;
  std::map<std::string, int> ratings;  // slot_id -> 1..6
  bool revealed = false;
  // {"key_id", "label", "ciphertext"} over {"shuffle_seed", "conditions"}.
  json sealed;
  // Filled by reveal_round, in slot order.
  std::optional<std::array<PersonaCondition, 4>> conditions;

  bool fully_rated() const { return ratings.size() == 4; }
  bool operator==(const BlindRound&) const = default;
};

// Public serialization. Conditions appear only once revealed.
json to_json(const BlindRound& r);
BlindRound blind_round_from_json(const json& j);

BlindRound assemble_blind_round(int round_index, const Scenario& scenario, const std::vector<PersonaResponse>& responses,
                                std::uint64_t shuffle_seed, const crypto::Key& key);

BlindRound record_rating(BlindRound round, const std::string& slot_id, int score);

// slot_id -> condition; the round comes back with revealed = true.
std::map<std::string, PersonaCondition> reveal_round(BlindRound& round, const crypto::Key& key);

// (mean - 1) / 5 * 100
double alignment_percentage(double mean);
// Rounded half away from zero.
int alignment_percentage_rounded(double mean);

struct ConditionScore {
  PersonaCondition condition;
  std::string group;  // wealth, community, personal or overall
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;
  double alignment_pct = 0.0;
  int alignment_pct_rounded = 0;
};

json to_json(const ConditionScore& s);

// Rows for each condition x {wealth, community, personal, overall} that has ratings.
std::vector<ConditionScore> aggregate_condition_scores(const std::vector<BlindRound>& rounds);

// participant,scenario_kind,condition,score
std::string ratings_csv(const std::string& participant, const std::vector<BlindRound>& rounds);

struct PersonaRunResult {
  std::vector<BlindRound> rounds;
  std::vector<std::string> missing;
};

// One blind round per scenario; the four conditions of a scenario are generated concurrently.
PersonaRunResult generate_persona_rounds(Gateway& gateway, const ProviderProfile& profile, const PersonaInputs& inputs,
                                         const std::vector<Scenario>& scenarios, std::uint64_t seed,
                                         const crypto::Key& key, const std::string& request_scope = "persona");

}  // namespace vapt
