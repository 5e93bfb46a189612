#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "vapt/chat.hpp"
#include "vapt/persona.hpp"
#include "vapt/pvq.hpp"
#include "vapt/topic_graph.hpp"

namespace vapt {

enum class StageState { Phase1Chat, BaselineSurvey, Stage1Graph, Stage2Personas, Stage3Charts, Debrief, Complete };
std::string_view to_string(StageState s);
StageState stage_from_string(std::string_view s);
std::optional<StageState> next_stage(StageState s);

struct FilterQuestion {
  std::string question;
  std::string answer;
  bool operator==(const FilterQuestion&) const = default;
};

struct Baseline {
  ResponseSet manual;
  std::vector<FilterQuestion> filters;  // exactly 3

  void validate() const;
  bool operator==(const Baseline&) const = default;
};

void to_json(json& j, const Baseline& b);
void from_json(const json& j, Baseline& b);

// item id -> 1..5
using LikertAnswers = std::map<std::string, int>;

// Bundled pre/post questionnaire (survey_items.json).
const json& survey_items();

// Validates ids and scale against the bundled survey bank. `post` admits the
// post-only items as well.
void validate_likert(const LikertAnswers& answers, bool post);

// Artifacts produced ahead of the interview from one transcript digest.
struct PreGenCache {
  std::string transcript_digest;
  Instant created{};
  std::optional<json> graph;  // export_graph form
  std::optional<Strategy> strategy;
  std::vector<BlindRound> rounds;  // sealed, unrated
  std::optional<ThinkingLog> thinking_log;
  std::map<std::string, ValueProfile> profiles;  // keyed by ProfileSource name
  std::optional<json> chart_pairs;               // seal_chart_pairs form
  std::vector<std::string> missing;

  bool has_rounds() const { return rounds.size() == 5; }
  bool operator==(const PreGenCache&) const = default;
};

json to_json(const PreGenCache& c);
PreGenCache pregen_cache_from_json(const json& j);

struct ChartChoice {
  int pair = 0;
  std::string pick;  // "A" or "B"
  json reveal;       // {"A": label, "B": label}
  bool operator==(const ChartChoice&) const = default;
};

struct StudyEvent {
  std::string type;
  Instant at{};
  json data = json::object();
  std::optional<std::string> idempotency_key;

  bool operator==(const StudyEvent&) const = default;
};

json to_json(const StudyEvent& e);
StudyEvent study_event_from_json(const json& j);

namespace event {
inline constexpr std::string_view kParticipantCreated = "participant_created";
inline constexpr std::string_view kSessionOpened = "session_opened";
inline constexpr std::string_view kMessage = "message";
inline constexpr std::string_view kSessionClosed = "session_closed";
inline constexpr std::string_view kPreSurvey = "pre_survey_submitted";
inline constexpr std::string_view kBaseline = "baseline_submitted";
inline constexpr std::string_view kArtifactsCached = "artifacts_cached";
inline constexpr std::string_view kStageAdvanced = "stage_advanced";
inline constexpr std::string_view kRating = "rating_recorded";
inline constexpr std::string_view kRoundRevealed = "round_revealed";
inline constexpr std::string_view kChartChosen = "chart_chosen";
inline constexpr std::string_view kPostSurvey = "post_survey_submitted";
}  // namespace event

struct StudyRecord {
  std::string participant_code;
  SessionPolicy policy;
  Transcript transcript;
  // Strategy injected into each session, by session index.
  std::map<int, Strategy> session_strategies;
  std::optional<Baseline> baseline;
  std::optional<LikertAnswers> pre_survey;
  std::optional<LikertAnswers> post_survey;
  std::optional<PreGenCache> cache;
  std::vector<BlindRound> rounds;  // live copies once Stage2 starts
  std::vector<ChartChoice> chart_choices;
  StageState stage = StageState::Phase1Chat;
  std::vector<StudyEvent> history;
  std::set<std::string> idempotency_keys;

  // Cache built from the current transcript, if any.
  const PreGenCache* valid_cache() const;
  const ChatSession* open_session() const;
  bool operator==(const StudyRecord&) const = default;
};

json to_json(const StudyRecord& r);

// Applies one event. Events carrying an already-seen idempotency key leave
// the record unchanged.
StudyRecord advance_stage(StudyRecord record, const StudyEvent& e);

// Left fold from an empty record.
StudyRecord replay(const std::vector<StudyEvent>& events);

// Event constructors.
StudyEvent make_participant_created(const std::string& code, const SessionPolicy& policy, Instant at);
StudyEvent make_session_opened(int session_index, const std::optional<Strategy>& strategy, Instant at);
StudyEvent make_message(const Message& m);
StudyEvent make_session_closed(Instant at);
StudyEvent make_pre_survey(const LikertAnswers& answers, Instant at);
StudyEvent make_baseline(const Baseline& baseline, Instant at);
StudyEvent make_artifacts_cached(const PreGenCache& cache, Instant at);
StudyEvent make_stage_advanced(StageState to, Instant at);
StudyEvent make_rating(int round, const std::string& slot_id, int score, Instant at,
                       std::optional<std::string> idempotency_key = std::nullopt);
StudyEvent make_round_revealed(int round, const std::map<std::string, PersonaCondition>& mapping, Instant at);
StudyEvent make_chart_chosen(int pair, const std::string& pick, const json& reveal, Instant at,
                             std::optional<std::string> idempotency_key = std::nullopt);
StudyEvent make_post_survey(const LikertAnswers& answers, Instant at);

}  // namespace vapt
