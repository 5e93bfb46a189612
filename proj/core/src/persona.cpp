#include "vapt/persona.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "vapt/parallel.hpp"
#include "vapt/prompts.hpp"
#include "vapt/rng.hpp"
#include "vapt/sealed.hpp"
#include "vapt/text.hpp"

namespace vapt {

std::string_view to_string(PersonaCondition c) {
  switch (c) {
    case PersonaCondition::ChatPersona: return "ChatPersona";
    case PersonaCondition::SchwartzPersona: return "SchwartzPersona";
    case PersonaCondition::AntiPersona: return "AntiPersona";
    case PersonaCondition::RandomPersona: return "RandomPersona";
  }
  return "ChatPersona";
}

PersonaCondition persona_condition_from_string(std::string_view s) {
  for (auto c : kPersonaConditions)
    if (to_string(c) == s) return c;
  fail(Errc::invalid_argument, "unknown persona condition '" + std::string(s) + "'");
}

void to_json(json& j, const Scenario& s) {
  j = json{{"kind", s.kind == ScenarioKind::dilemma ? "dilemma" : "personal_filter"},
           {"text", s.text},
           {"origin", s.origin == ScenarioOrigin::fixed ? "fixed" : "participant"},
           {"group", s.group}};
}

void from_json(const json& j, Scenario& s) {
  auto kind = j.at("kind").get<std::string>();
  require(kind == "dilemma" || kind == "personal_filter", Errc::parse, "unknown scenario kind '" + kind + "'");
  s.kind = kind == "dilemma" ? ScenarioKind::dilemma : ScenarioKind::personal_filter;
  s.text = j.at("text").get<std::string>();
  s.origin = j.value("origin", "fixed") == "fixed" ? ScenarioOrigin::fixed : ScenarioOrigin::participant;
  s.group = j.value("group", s.kind == ScenarioKind::dilemma ? "" : "personal");
}

std::vector<Scenario> fixed_dilemmas() {
  return {
      {ScenarioKind::dilemma, "What are your thoughts on wealth? What responsibility do the wealthy have to society?",
       ScenarioOrigin::fixed, "wealth"},
      {ScenarioKind::dilemma,
       "What is more important for a thriving society: strong, cohesive community bonds or the freedom of the "
       "individual?",
       ScenarioOrigin::fixed, "community"},
  };
}

std::vector<Scenario> session_scenarios(const std::vector<std::string>& filter_questions) {
  require(filter_questions.size() == 3, Errc::invalid_argument,
          "expected 3 personal filter questions, got " + std::to_string(filter_questions.size()));
  auto out = fixed_dilemmas();
  for (const auto& q : filter_questions) {
    require(!text::trim(q).empty(), Errc::invalid_argument, "personal filter question is empty");
    out.push_back({ScenarioKind::personal_filter, q, ScenarioOrigin::participant, "personal"});
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::string render_profile(const ValueProfile& p) {
  std::string out = "VALUE PROFILE (centered):\n";
  char buf[32];
  for (const auto& info : value_table()) {
    std::snprintf(buf, sizeof buf, "%+.2f", p.centered[static_cast<std::size_t>(info.value)]);
    out += std::string(info.name) + " (" + std::string(info.code) + "): " + buf + "\n";
  }
  return out;
}

std::string render_strategy(const Strategy& s) {
  std::string out = "INSIGHTS:\n";
  for (const auto& i : s.insights) out += "- " + i.pattern + ": " + i.approach + "\n";
  out += "\nSHARED MEMORIES:\n";
  for (const auto& m : s.shared_memories) out += "- " + m.what_happened + " (" + m.when_it_happened + ")\n";
  out += "\nPROFILE:\n" + s.user_profile + "\n";
  return out;
}

std::size_t render_excerpts(const std::vector<Message>& transcript, std::string& out) {
  out += "\nTHEIR OWN MESSAGES:\n";
  std::size_t n = 0;
  for (const auto& m : transcript)
    if (m.role == MessageRole::participant) {
      out += "- " + m.text + "\n";
      ++n;
    }
  return n;
}

}  // namespace

ConditionContext build_condition_context(PersonaCondition condition, const PersonaInputs& inputs) {
  ConditionContext ctx{condition, {}, 0, 0};
  switch (condition) {
    case PersonaCondition::ChatPersona:
    case PersonaCondition::AntiPersona: {
      bool has = std::any_of(inputs.transcript.begin(), inputs.transcript.end(),
                             [](const Message& m) { return m.role == MessageRole::participant; });
      require(has, Errc::invalid_argument,
              std::string(to_string(condition)) + " requires a transcript with participant messages");
      ctx.system_text = std::string(condition == PersonaCondition::ChatPersona ? prompts::persona_chat_history()
                                                                               : prompts::persona_anti());
      ctx.system_text += "\n\n";
      if (inputs.strategy) ctx.system_text += render_strategy(*inputs.strategy);
      ctx.transcript_excerpts = render_excerpts(inputs.transcript, ctx.system_text);
      break;
    }
    case PersonaCondition::SchwartzPersona:
      require(inputs.manual_profile.has_value(), Errc::invalid_argument, "SchwartzPersona requires the manual profile");
      ctx.system_text = std::string(prompts::persona_survey()) + "\n\n" + render_profile(*inputs.manual_profile);
      ctx.profile_values = kValueCount;
      break;
    case PersonaCondition::RandomPersona:
      require(inputs.random_profile.has_value(), Errc::invalid_argument, "RandomPersona requires a random profile");
      ctx.system_text = std::string(prompts::persona_random()) + "\n\n" + render_profile(*inputs.random_profile);
      ctx.profile_values = kValueCount;
      break;
  }
  return ctx;
}

std::string generate_persona_response(Gateway& gateway, const ProviderProfile& profile, const ConditionContext& context,
                                      const Scenario& scenario, const std::string& request_key) {
  require(!text::trim(scenario.text).empty(), Errc::invalid_argument, "scenario text is empty");
  PromptBundle bundle;
  bundle.system_text = context.system_text;
  bundle.turns.push_back({TurnRole::user, scenario.text});
  bundle.request_key = request_key;
  return gateway.complete_chat(profile, bundle);
}

// ---------------------------------------------------------------------------

json to_json(const BlindRound& r) {
  json slots = json::array();
  for (const auto& s : r.slots) slots.push_back({{"slot_id", s.slot_id}, {"text", s.text}});
  json j{{"round", r.round_index},
         {"scenario", r.scenario},
         {"slots", slots},
         {"ratings", r.ratings},
         {"revealed", r.revealed},
         {"sealed", r.sealed}};
  if (r.conditions) {
    json c = json::array();
    for (auto cond : *r.conditions) c.push_back(to_string(cond));
    j["conditions"] = c;
  }
  return j;
}

BlindRound blind_round_from_json(const json& j) {
  BlindRound r;
  try {
    r.round_index = j.at("round").get<int>();
    r.scenario = j.at("scenario").get<Scenario>();
    const auto& slots = j.at("slots");
    require(slots.size() == 4, Errc::parse, "blind round must have 4 slots");
    for (std::size_t i = 0; i < 4; ++i)
      r.slots[i] = {slots[i].at("slot_id").get<std::string>(), slots[i].at("text").get<std::string>()};
    r.ratings = j.at("ratings").get<std::map<std::string, int>>();
    r.revealed = j.at("revealed").get<bool>();
    r.sealed = j.at("sealed");
    if (j.contains("conditions")) {
      std::array<PersonaCondition, 4> c{};
      for (std::size_t i = 0; i < 4; ++i) c[i] = persona_condition_from_string(j["conditions"][i].get<std::string>());
      r.conditions = c;
    }
  } catch (const json::exception& e) {
    fail(Errc::parse, std::string("blind round: ") + e.what());
  }
  return r;
}

BlindRound assemble_blind_round(int round_index, const Scenario& scenario, const std::vector<PersonaResponse>& responses,
                                std::uint64_t shuffle_seed, const crypto::Key& key) {
  require(responses.size() == 4, Errc::incomplete,
          "blind round needs 4 responses, got " + std::to_string(responses.size()));
  std::set<PersonaCondition> seen;
  for (const auto& r : responses) {
    require(seen.insert(r.condition).second, Errc::duplicate,
            "duplicate condition " + std::string(to_string(r.condition)));
    require(!r.text.empty(), Errc::invalid_argument, "empty persona response");
  }

  std::array<std::size_t, 4> order{0, 1, 2, 3};
  SeededRng rng(derive_seed(shuffle_seed, "round/" + std::to_string(round_index)));
  rng.shuffle(std::span<std::size_t>(order));

  BlindRound round;
  round.round_index = round_index;
  round.scenario = scenario;
  json conditions = json::array();
  for (std::size_t pos = 0; pos < 4; ++pos) {
    const auto& resp = responses[order[pos]];
    auto mac = crypto::hmac_sha256(key, "slot/" + std::to_string(round_index) + "/" + std::to_string(shuffle_seed) +
                                            "/" + std::to_string(pos));
    round.slots[pos] = {crypto::to_hex(std::span<const std::uint8_t>(mac.data(), 8)), resp.text};
    conditions.push_back(to_string(resp.condition));
  }
  round.sealed = seal_section(key, "round-" + std::to_string(round_index),
                              {{"shuffle_seed", shuffle_seed}, {"conditions", conditions}});
  return round;
}

BlindRound record_rating(BlindRound round, const std::string& slot_id, int score) {
  require(!round.revealed, Errc::illegal_transition, "round " + std::to_string(round.round_index) + " is already revealed");
  require(score >= 1 && score <= 6, Errc::out_of_range, "rating " + std::to_string(score) + " outside 1..6");
  bool known = std::any_of(round.slots.begin(), round.slots.end(), [&](const BlindSlot& s) { return s.slot_id == slot_id; });
  require(known, Errc::not_found, "unknown slot '" + slot_id + "'");
  round.ratings[slot_id] = score;
  return round;
}

std::map<std::string, PersonaCondition> reveal_round(BlindRound& round, const crypto::Key& key) {
  require(round.fully_rated(), Errc::incomplete,
          "reveal needs 4 ratings, have " + std::to_string(round.ratings.size()));
  json content = unseal_section(key, round.sealed);
  std::array<PersonaCondition, 4> conditions{};
  std::set<PersonaCondition> seen;
  for (std::size_t i = 0; i < 4; ++i) {
    conditions[i] = persona_condition_from_string(content.at("conditions").at(i).get<std::string>());
    seen.insert(conditions[i]);
  }
  require(seen.size() == 4, Errc::sealed, "sealed conditions are not a permutation");
  round.conditions = conditions;
  round.revealed = true;
  std::map<std::string, PersonaCondition> mapping;
  for (std::size_t i = 0; i < 4; ++i) mapping[round.slots[i].slot_id] = conditions[i];
  return mapping;
}

// ---------------------------------------------------------------------------

double alignment_percentage(double mean) {
  require(mean >= 1.0 && mean <= 6.0, Errc::out_of_range, "mean rating outside [1, 6]");
  return (mean - 1.0) / 5.0 * 100.0;
}

int alignment_percentage_rounded(double mean) { return static_cast<int>(std::round(alignment_percentage(mean))); }

json to_json(const ConditionScore& s) {
  return {{"condition", to_string(s.condition)},
          {"group", s.group},
          {"n", s.n},
          {"mean", s.mean},
          {"sd", s.sd},
          {"alignment_pct", s.alignment_pct},
          {"alignment_pct_rounded", s.alignment_pct_rounded}};
}

std::vector<ConditionScore> aggregate_condition_scores(const std::vector<BlindRound>& rounds) {
  require(!rounds.empty(), Errc::invalid_argument, "no rounds to aggregate");
  static const std::array<std::string, 4> kGroups{"wealth", "community", "personal", "overall"};
  struct Acc {
    long long n = 0, sum = 0, sumsq = 0;
  };
  std::map<std::pair<PersonaCondition, std::string>, Acc> acc;
  for (const auto& r : rounds) {
    require(r.revealed && r.conditions, Errc::incomplete, "round " + std::to_string(r.round_index) + " is not revealed");
    for (std::size_t i = 0; i < 4; ++i) {
      auto it = r.ratings.find(r.slots[i].slot_id);
      require(it != r.ratings.end(), Errc::incomplete, "revealed round lacks a rating");
      for (const std::string& g : {r.scenario.group, std::string("overall")}) {
        Acc& a = acc[{(*r.conditions)[i], g}];
        a.n += 1;
        a.sum += it->second;
        a.sumsq += static_cast<long long>(it->second) * it->second;
      }
    }
  }
  std::vector<ConditionScore> out;
  for (auto cond : kPersonaConditions)
    for (const auto& g : kGroups) {
      auto it = acc.find({cond, g});
      if (it == acc.end()) continue;
      const Acc& a = it->second;
      ConditionScore s;
      s.condition = cond;
      s.group = g;
      s.n = static_cast<std::size_t>(a.n);
      s.mean = static_cast<double>(a.sum) / static_cast<double>(a.n);
      if (a.n > 1)
        s.sd = std::sqrt(static_cast<double>(a.n * a.sumsq - a.sum * a.sum) / static_cast<double>(a.n * (a.n - 1)));
      s.alignment_pct = alignment_percentage(s.mean);
      s.alignment_pct_rounded = alignment_percentage_rounded(s.mean);
      out.push_back(s);
    }
  return out;
}

std::string ratings_csv(const std::string& participant, const std::vector<BlindRound>& rounds) {
  std::string out = "participant,scenario_kind,condition,score\n";
  for (const auto& r : rounds) {
    require(r.revealed && r.conditions, Errc::incomplete, "ratings export needs revealed rounds");
    for (std::size_t i = 0; i < 4; ++i) {
      auto it = r.ratings.find(r.slots[i].slot_id);
      if (it == r.ratings.end()) continue;
      out += participant + "," + (r.scenario.kind == ScenarioKind::dilemma ? "dilemma" : "personal_filter") + "," +
             std::string(to_string((*r.conditions)[i])) + "," + std::to_string(it->second) + "\n";
    }
  }
  return out;
}

PersonaRunResult generate_persona_rounds(Gateway& gateway, const ProviderProfile& profile, const PersonaInputs& inputs,
                                         const std::vector<Scenario>& scenarios, std::uint64_t seed,
                                         const crypto::Key& key, const std::string& request_scope) {
  PersonaRunResult result;
  std::array<std::optional<ConditionContext>, 4> contexts;
  for (std::size_t c = 0; c < 4; ++c) {
    try {
      contexts[c] = build_condition_context(kPersonaConditions[c], inputs);
    } catch (const Error& e) {
      result.missing.push_back(std::string(to_string(kPersonaConditions[c])) + ": " + e.what());
    }
  }
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    int round_index = static_cast<int>(i + 1);
    std::array<std::optional<std::string>, 4> texts;
    std::array<std::string, 4> errors;
    parallel_for(4, 4, [&](std::size_t c) {
      if (!contexts[c]) return;
      try {
        texts[c] = generate_persona_response(gateway, profile, *contexts[c], scenarios[i],
                                             request_scope + "/round/" + std::to_string(round_index) + "/" +
                                                 std::string(to_string(kPersonaConditions[c])));
      } catch (const Error& e) {
        errors[c] = e.what();
      }
    });
    std::vector<PersonaResponse> responses;
    for (std::size_t c = 0; c < 4; ++c) {
      if (texts[c])
        responses.push_back({kPersonaConditions[c], *texts[c]});
      else if (contexts[c])
        result.missing.push_back("round " + std::to_string(round_index) + " " +
                                 std::string(to_string(kPersonaConditions[c])) + ": " + errors[c]);
    }
    if (responses.size() != 4) {
      result.missing.push_back("round " + std::to_string(round_index) + ": incomplete");
      continue;
    }
    result.rounds.push_back(assemble_blind_round(round_index, scenarios[i], responses, seed, key));
  }
  return result;
}

}  // namespace vapt
