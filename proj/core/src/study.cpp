#include "vapt/study.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>

#include "vapt/error.hpp"

namespace vapt {

namespace {

constexpr std::array<std::string_view, 7> kStageNames{"Phase1Chat",     "BaselineSurvey", "Stage1Graph", "Stage2Personas",
                                                      "Stage3Charts",   "Debrief",        "Complete"};

json opt_json(const auto& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string_view to_string(StageState s) { return kStageNames[static_cast<std::size_t>(s)]; }

StageState stage_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kStageNames.size(); ++i)
    if (kStageNames[i] == s) return static_cast<StageState>(i);
  fail(Errc::invalid_argument, "unknown stage '" + std::string(s) + "'");
}

std::optional<StageState> next_stage(StageState s) {
  if (s == StageState::Complete) return std::nullopt;
  return static_cast<StageState>(static_cast<int>(s) + 1);
}

void Baseline::validate() const {
  manual.validate();
  require(manual.respondent == Respondent::human, Errc::invalid_argument, "baseline responses must be human");
  require(filters.size() == 3, Errc::invalid_argument,
          "baseline needs 3 filter questions, got " + std::to_string(filters.size()));
  for (const auto& f : filters)
    require(!f.question.empty() && !f.answer.empty(), Errc::invalid_argument, "filter question and answer must be non-empty");
}

void to_json(json& j, const Baseline& b) {
  json filters = json::array();
  for (const auto& f : b.filters) filters.push_back({{"question", f.question}, {"answer", f.answer}});
  j = {{"manual", b.manual}, {"filters", filters}};
}

void from_json(const json& j, Baseline& b) {
  b.manual = j.at("manual").get<ResponseSet>();
  b.filters.clear();
  for (const auto& f : j.at("filters"))
    b.filters.push_back({f.at("question").get<std::string>(), f.at("answer").get<std::string>()});
}

const json& survey_items() {
  static std::once_flag once;
  static json items;
  std::call_once(once, [] {
    auto path = data_dir() / "survey_items.json";
    std::ifstream in(path);
    require(static_cast<bool>(in), Errc::io, "cannot read " + path.string());
    items = json::parse(in);
  });
  return items;
}

void validate_likert(const LikertAnswers& answers, bool post) {
  const auto& bank = survey_items();
  int points = bank.at("scale_points").get<int>();
  std::set<std::string> allowed;
  for (const auto& it : bank.at("pre_post")) allowed.insert(it.at("id").get<std::string>());
  if (post)
    for (const auto& it : bank.at("post_only")) allowed.insert(it.at("id").get<std::string>());
  for (const auto& [id, v] : answers) {
    require(allowed.count(id) == 1, Errc::invalid_argument, "unknown survey item '" + id + "'");
    require(v >= 1 && v <= points, Errc::out_of_range,
            "survey answer " + std::to_string(v) + " outside 1.." + std::to_string(points));
  }
  for (const auto& it : bank.at("pre_post"))
    require(answers.count(it.at("id").get<std::string>()) == 1, Errc::incomplete,
            "survey item " + it.at("id").get<std::string>() + " unanswered");
}

// ---------------------------------------------------------------------------

json to_json(const PreGenCache& c) {
  json rounds = json::array();
  for (const auto& r : c.rounds) rounds.push_back(to_json(r));
  json profiles = json::object();
  for (const auto& [k, p] : c.profiles) profiles[k] = p;
  return {{"transcript_digest", c.transcript_digest},
          {"created", format_rfc3339(c.created)},
          {"graph", opt_json(c.graph)},
          {"strategy", opt_json(c.strategy)},
          {"rounds", rounds},
          {"thinking_log", c.thinking_log ? to_json(*c.thinking_log) : json(nullptr)},
          {"profiles", profiles},
          {"chart_pairs", opt_json(c.chart_pairs)},
          {"missing", c.missing}};
}

PreGenCache pregen_cache_from_json(const json& j) {
  PreGenCache c;
  try {
    c.transcript_digest = j.at("transcript_digest").get<std::string>();
    c.created = parse_rfc3339(j.at("created").get<std::string>());
    if (!j.at("graph").is_null()) c.graph = j["graph"];
    if (!j.at("strategy").is_null()) c.strategy = j["strategy"].get<Strategy>();
    for (const auto& r : j.at("rounds")) c.rounds.push_back(blind_round_from_json(r));
    if (!j.at("thinking_log").is_null()) c.thinking_log = thinking_log_from_json(j["thinking_log"]);
    for (const auto& [k, p] : j.at("profiles").items()) c.profiles.emplace(k, p.get<ValueProfile>());
    if (!j.at("chart_pairs").is_null()) c.chart_pairs = j["chart_pairs"];
    c.missing = j.at("missing").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    fail(Errc::parse, std::string("pregen cache: ") + e.what());
  }
  return c;
}

json to_json(const StudyEvent& e) {
  json j{{"type", e.type}, {"at", format_rfc3339(e.at)}, {"data", e.data}};
  if (e.idempotency_key) j["idempotency_key"] = *e.idempotency_key;
  return j;
}

StudyEvent study_event_from_json(const json& j) {
  StudyEvent e;
  try {
    e.type = j.at("type").get<std::string>();
    e.at = parse_rfc3339(j.at("at").get<std::string>());
    e.data = j.at("data");
    if (j.contains("idempotency_key")) e.idempotency_key = j["idempotency_key"].get<std::string>();
  } catch (const json::exception& ex) {
    fail(Errc::corrupt_history, std::string("event: ") + ex.what());
  }
  return e;
}

const PreGenCache* StudyRecord::valid_cache() const {
  if (!cache || cache->transcript_digest != transcript_digest(transcript)) return nullptr;
  return &*cache;
}

const ChatSession* StudyRecord::open_session() const {
  if (transcript.sessions.empty() || !transcript.sessions.back().is_open()) return nullptr;
  return &transcript.sessions.back();
}

json to_json(const StudyRecord& r) {
  json strategies = json::object();
  for (const auto& [idx, s] : r.session_strategies) strategies[std::to_string(idx)] = s;
  json rounds = json::array();
  for (const auto& round : r.rounds) rounds.push_back(to_json(round));
  json choices = json::array();
  for (const auto& c : r.chart_choices) choices.push_back({{"pair", c.pair}, {"pick", c.pick}, {"reveal", c.reveal}});
  json policy = r.policy;
  return {{"participant_code", r.participant_code},
          {"stage", to_string(r.stage)},
          {"policy", policy},
          {"transcript", r.transcript},
          {"session_strategies", strategies},
          {"baseline", opt_json(r.baseline)},
          {"pre_survey", opt_json(r.pre_survey)},
          {"post_survey", opt_json(r.post_survey)},
          {"cache", r.cache ? to_json(*r.cache) : json(nullptr)},
          {"rounds", rounds},
          {"chart_choices", choices},
          {"events", r.history.size()},
          {"idempotency_keys", r.idempotency_keys}};
}

// ---------------------------------------------------------------------------

namespace {

void expect_stage(const StudyRecord& r, std::initializer_list<StageState> allowed, std::string_view what) {
  if (std::find(allowed.begin(), allowed.end(), r.stage) != allowed.end()) return;
  fail(Errc::illegal_transition, std::string(what) + " not allowed in stage " + std::string(to_string(r.stage)));
}

BlindRound& find_round(StudyRecord& r, int index) {
  for (auto& round : r.rounds)
    if (round.round_index == index) return round;
  fail(Errc::not_found, "no round " + std::to_string(index));
}

void apply_stage_advance(StudyRecord& r, StageState to) {
  auto expected = next_stage(r.stage);
  require(expected && *expected == to, Errc::illegal_transition,
          "cannot move from " + std::string(to_string(r.stage)) + " to " + std::string(to_string(to)));
  const PreGenCache* cache = r.valid_cache();
  switch (to) {
    case StageState::BaselineSurvey: {
      require(r.open_session() == nullptr, Errc::illegal_transition, "a chat session is still open");
      int n = count_qualifying_sessions(r.policy, r.transcript.sessions);
      require(n >= r.policy.min_sessions, Errc::illegal_transition,
              "phase 1 needs " + std::to_string(r.policy.min_sessions) + " qualifying sessions, have " + std::to_string(n));
      break;
    }
    case StageState::Stage1Graph:
      require(r.baseline.has_value(), Errc::illegal_transition, "baseline survey not submitted");
      require(cache && cache->graph, Errc::missing_artifacts, "graph not pre-generated for the current transcript");
      break;
    case StageState::Stage2Personas:
      require(cache && cache->has_rounds(), Errc::missing_artifacts, "persona rounds not pre-generated");
      r.rounds = cache->rounds;
      break;
    case StageState::Stage3Charts:
      for (const auto& round : r.rounds)
        require(round.revealed, Errc::illegal_transition, "round " + std::to_string(round.round_index) + " not revealed");
      require(cache && cache->chart_pairs && cache->thinking_log, Errc::missing_artifacts,
              "chart pairs or thinking log not pre-generated");
      break;
    case StageState::Debrief:
      require(r.chart_choices.size() == 3, Errc::illegal_transition, "all three chart pairs need a choice");
      break;
    case StageState::Complete:
      require(r.post_survey.has_value(), Errc::illegal_transition, "post survey not submitted");
      break;
    case StageState::Phase1Chat:
      break;
  }
  r.stage = to;
}

}  // namespace

StudyRecord advance_stage(StudyRecord r, const StudyEvent& e) {
  if (e.idempotency_key && r.idempotency_keys.count(*e.idempotency_key)) return r;
  const json& d = e.data;
  try {
    if (r.history.empty()) {
      require(e.type == event::kParticipantCreated, Errc::illegal_transition, "first event must create the participant");
    } else {
      require(e.type != event::kParticipantCreated, Errc::illegal_transition, "participant already exists");
    }

    if (e.type == event::kParticipantCreated) {
      r.participant_code = d.at("code").get<std::string>();
      require(!r.participant_code.empty(), Errc::invalid_argument, "empty participant code");
      r.policy = d.at("policy").get<SessionPolicy>();
      r.policy.validate();
      r.transcript.participant_code = r.participant_code;
    } else if (e.type == event::kSessionOpened) {
      expect_stage(r, {StageState::Phase1Chat}, "opening a chat session");
      require(r.open_session() == nullptr, Errc::illegal_transition, "a chat session is already open");
      int idx = d.at("session_index").get<int>();
      require(idx == static_cast<int>(r.transcript.sessions.size()) + 1, Errc::invalid_argument,
              "session index " + std::to_string(idx) + " out of sequence");
      auto gate = check_session_gate(r.policy, r.transcript.sessions, e.at);
      if (!gate.allowed) throw Error(Errc::cooldown, "cooldown active", to_json(gate).dump());
      ChatSession s;
      s.participant_code = r.participant_code;
      s.session_index = idx;
      s.started = e.at;
      r.transcript.sessions.push_back(std::move(s));
      if (d.contains("strategy") && !d["strategy"].is_null()) r.session_strategies[idx] = d["strategy"].get<Strategy>();
    } else if (e.type == event::kMessage) {
      require(r.open_session() != nullptr, Errc::session_closed, "no open chat session");
      auto& s = r.transcript.sessions.back();
      s = record_message(std::move(s), d.get<Message>());
    } else if (e.type == event::kSessionClosed) {
      require(r.open_session() != nullptr, Errc::session_closed, "no open chat session");
      auto& s = r.transcript.sessions.back();
      s = close_session(std::move(s), e.at);
    } else if (e.type == event::kPreSurvey) {
      expect_stage(r, {StageState::Phase1Chat, StageState::BaselineSurvey}, "pre survey");
      require(!r.pre_survey, Errc::duplicate, "pre survey already submitted");
      auto answers = d.get<LikertAnswers>();
      validate_likert(answers, false);
      r.pre_survey = answers;
    } else if (e.type == event::kBaseline) {
      expect_stage(r, {StageState::Phase1Chat, StageState::BaselineSurvey}, "baseline survey");
      require(!r.baseline, Errc::duplicate, "baseline already submitted");
      auto b = d.get<Baseline>();
      b.validate();
      r.baseline = b;
    } else if (e.type == event::kArtifactsCached) {
      expect_stage(r, {StageState::Phase1Chat, StageState::BaselineSurvey, StageState::Stage1Graph}, "caching artifacts");
      auto c = pregen_cache_from_json(d);
      require(c.transcript_digest == transcript_digest(r.transcript), Errc::invalid_argument,
              "artifacts were generated from a different transcript");
      r.cache = std::move(c);
    } else if (e.type == event::kStageAdvanced) {
      apply_stage_advance(r, stage_from_string(d.at("to").get<std::string>()));
    } else if (e.type == event::kRating) {
      expect_stage(r, {StageState::Stage2Personas}, "rating");
      auto& round = find_round(r, d.at("round").get<int>());
      round = record_rating(round, d.at("slot_id").get<std::string>(), d.at("score").get<int>());
    } else if (e.type == event::kRoundRevealed) {
      expect_stage(r, {StageState::Stage2Personas}, "reveal");
      auto& round = find_round(r, d.at("round").get<int>());
      require(!round.revealed, Errc::illegal_transition, "round already revealed");
      require(round.fully_rated(), Errc::incomplete, "all four responses must be rated before reveal");
      auto mapping = d.at("mapping").get<std::map<std::string, std::string>>();
      require(mapping.size() == 4, Errc::invalid_argument, "reveal mapping must cover 4 slots");
      std::array<PersonaCondition, 4> conds{};
      std::set<PersonaCondition> seen;
      for (std::size_t i = 0; i < 4; ++i) {
        auto it = mapping.find(round.slots[i].slot_id);
        require(it != mapping.end(), Errc::invalid_argument, "reveal mapping misses a slot");
        conds[i] = persona_condition_from_string(it->second);
        require(seen.insert(conds[i]).second, Errc::invalid_argument, "reveal mapping is not a permutation");
      }
      round.conditions = conds;
      round.revealed = true;
    } else if (e.type == event::kChartChosen) {
      expect_stage(r, {StageState::Stage3Charts}, "chart choice");
      ChartChoice c{d.at("pair").get<int>(), d.at("pick").get<std::string>(), d.at("reveal")};
      require(c.pair >= 1 && c.pair <= 3, Errc::out_of_range, "chart pair must be 1..3");
      require(c.pick == "A" || c.pick == "B", Errc::invalid_argument, "pick must be A or B");
      require(c.reveal.contains("A") && c.reveal.contains("B"), Errc::invalid_argument, "reveal needs both sides");
      for (const auto& prev : r.chart_choices)
        require(prev.pair != c.pair, Errc::duplicate, "pair " + std::to_string(c.pair) + " already chosen");
      r.chart_choices.push_back(std::move(c));
    } else if (e.type == event::kPostSurvey) {
      expect_stage(r, {StageState::Debrief}, "post survey");
      require(!r.post_survey, Errc::duplicate, "post survey already submitted");
      auto answers = d.get<LikertAnswers>();
      validate_likert(answers, true);
      r.post_survey = answers;
    } else {
      fail(Errc::invalid_argument, "unknown event type '" + e.type + "'");
    }
  } catch (const json::exception& ex) {
    fail(Errc::invalid_argument, e.type + ": malformed event data: " + ex.what());
  }
  r.history.push_back(e);
  if (e.idempotency_key) r.idempotency_keys.insert(*e.idempotency_key);
  return r;
}

StudyRecord replay(const std::vector<StudyEvent>& events) {
  StudyRecord r;
  for (const auto& e : events) r = advance_stage(std::move(r), e);
  return r;
}

// ---------------------------------------------------------------------------

StudyEvent make_participant_created(const std::string& code, const SessionPolicy& policy, Instant at) {
  json p = policy;
  return {std::string(event::kParticipantCreated), at, {{"code", code}, {"policy", p}}, std::nullopt};
}

StudyEvent make_session_opened(int session_index, const std::optional<Strategy>& strategy, Instant at) {
  json d{{"session_index", session_index}};
  if (strategy) d["strategy"] = *strategy;
  return {std::string(event::kSessionOpened), at, d, std::nullopt};
}

StudyEvent make_message(const Message& m) { return {std::string(event::kMessage), m.timestamp, m, std::nullopt}; }

StudyEvent make_session_closed(Instant at) { return {std::string(event::kSessionClosed), at, json::object(), std::nullopt}; }

StudyEvent make_pre_survey(const LikertAnswers& answers, Instant at) {
  return {std::string(event::kPreSurvey), at, answers, std::nullopt};
}

StudyEvent make_baseline(const Baseline& baseline, Instant at) {
  return {std::string(event::kBaseline), at, baseline, std::nullopt};
}

StudyEvent make_artifacts_cached(const PreGenCache& cache, Instant at) {
  return {std::string(event::kArtifactsCached), at, to_json(cache), std::nullopt};
}

StudyEvent make_stage_advanced(StageState to, Instant at) {
  return {std::string(event::kStageAdvanced), at, {{"to", to_string(to)}}, std::nullopt};
}

StudyEvent make_rating(int round, const std::string& slot_id, int score, Instant at,
                       std::optional<std::string> idempotency_key) {
  return {std::string(event::kRating), at, {{"round", round}, {"slot_id", slot_id}, {"score", score}},
          std::move(idempotency_key)};
}

StudyEvent make_round_revealed(int round, const std::map<std::string, PersonaCondition>& mapping, Instant at) {
  json m = json::object();
  for (const auto& [slot, c] : mapping) m[slot] = to_string(c);
  return {std::string(event::kRoundRevealed), at, {{"round", round}, {"mapping", m}}, std::nullopt};
}

StudyEvent make_chart_chosen(int pair, const std::string& pick, const json& reveal, Instant at,
                             std::optional<std::string> idempotency_key) {
  return {std::string(event::kChartChosen), at, {{"pair", pair}, {"pick", pick}, {"reveal", reveal}},
          std::move(idempotency_key)};
}

StudyEvent make_post_survey(const LikertAnswers& answers, Instant at) {
  return {std::string(event::kPostSurvey), at, answers, std::nullopt};
}

}  // namespace vapt
