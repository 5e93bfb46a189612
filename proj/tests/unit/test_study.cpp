#include <doctest.h>

#include <chrono>

#include "../support/fixtures.hpp"
#include "vapt/error.hpp"
#include "vapt/pregen.hpp"
#include "vapt/study.hpp"

using namespace vapt;
using namespace std::chrono_literals;
using fixture::error_of;

namespace {

const crypto::Key& key() {
  static const crypto::Key k = crypto::derive_key(1, "reveal/P01");
  return k;
}

struct Phase1 {
  Transcript transcript;
  Baseline baseline;
  StudyRecord record;
  PreGenCache cache;
};

// One full pre-generation shared across cases.
const Phase1& phase1() {
  static const Phase1 p = [] {
    Phase1 out;
    out.transcript = fixture::synthetic_transcript("P01", 3);
    out.baseline = fixture::synthetic_baseline(3);
    out.record = fixture::phase1_record("P01", out.transcript, out.baseline);
    auto gw = fixture::mock_gateway(3);
    PregenOptions opts;
    opts.seed = 3;
    out.cache = pregenerate_artifacts(*gw, ProviderRoles::uniform(mock_profile()), out.record, key(), opts,
                                      out.transcript.sessions.back().ended.value() + 2min);
    return out;
  }();
  return p;
}

Instant after_phase1(std::chrono::minutes m) { return phase1().transcript.sessions.back().ended.value() + m; }

LikertAnswers likert(bool post) {
  LikertAnswers a{{"pp1", 3}, {"pp2", 4}, {"pp3", 5}, {"pp4", 2}, {"pp5", 1}};
  if (post) a["po1"] = 4;
  return a;
}

StudyRecord apply(StudyRecord r, const StudyEvent& e) { return advance_stage(std::move(r), e); }

StudyRecord at_stage2() {
  auto r = phase1().record;
  r = apply(r, make_artifacts_cached(phase1().cache, after_phase1(3min)));
  r = apply(r, make_stage_advanced(StageState::BaselineSurvey, after_phase1(4min)));
  r = apply(r, make_stage_advanced(StageState::Stage1Graph, after_phase1(5min)));
  r = apply(r, make_stage_advanced(StageState::Stage2Personas, after_phase1(6min)));
  return r;
}

StudyRecord rate_and_reveal_all(StudyRecord r) {
  for (const auto& cached : phase1().cache.rounds) {
    for (const auto& slot : cached.slots) r = apply(r, make_rating(cached.round_index, slot.slot_id, 4, after_phase1(7min)));
    BlindRound copy = r.rounds[static_cast<std::size_t>(cached.round_index - 1)];
    auto mapping = reveal_round(copy, key());
    r = apply(r, make_round_revealed(cached.round_index, mapping, after_phase1(8min)));
  }
  return r;
}

}  // namespace

TEST_SUITE("study") {
  TEST_CASE("stage names and order") {
    StageState s = StageState::Phase1Chat;
    int steps = 0;
    while (auto n = next_stage(s)) {
      CHECK(stage_from_string(to_string(*n)) == *n);
      s = *n;
      ++steps;
    }
    CHECK(steps == 6);
    CHECK(s == StageState::Complete);
    CHECK_THROWS_AS(stage_from_string("Stage9"), Error);
  }

  TEST_CASE("baseline and likert validation") {
    auto b = fixture::synthetic_baseline(1);
    CHECK_NOTHROW(b.validate());
    CHECK(json(b).get<Baseline>() == b);
    b.filters.pop_back();
    CHECK_THROWS_AS(b.validate(), Error);

    CHECK_NOTHROW(validate_likert(likert(false), false));
    CHECK_NOTHROW(validate_likert(likert(true), true));
    CHECK_THROWS_AS(validate_likert(likert(true), false), Error);
    auto bad = likert(false);
    bad["pp1"] = 6;
    CHECK(error_of([&] { validate_likert(bad, false); }) == Errc::out_of_range);
    auto partial = likert(false);
    partial.erase("pp5");
    CHECK_THROWS_AS(validate_likert(partial, false), Error);
  }

  TEST_CASE("first event must create the participant") {
    CHECK(error_of([] { advance_stage({}, make_session_closed(fixture::epoch())); }) == Errc::illegal_transition);
    auto r = advance_stage({}, make_participant_created("P01", {}, fixture::epoch()));
    CHECK(error_of([&] { advance_stage(r, make_participant_created("P01", {}, fixture::epoch())); }) ==
          Errc::illegal_transition);
  }

  TEST_CASE("session gating in the fold") {
    auto r = advance_stage({}, make_participant_created("P01", {}, fixture::epoch()));
    r = apply(r, make_session_opened(1, std::nullopt, fixture::epoch()));
    CHECK(error_of([&] { apply(r, make_session_opened(2, std::nullopt, fixture::epoch() + 1min)); }) ==
          Errc::illegal_transition);
    r = apply(r, make_message({MessageRole::participant, "hi", fixture::epoch() + 1s, std::nullopt}));
    r = apply(r, make_session_closed(fixture::epoch() + 6min));
    CHECK(error_of([&] { apply(r, make_message({MessageRole::participant, "x", fixture::epoch() + 7min, {}})); }) ==
          Errc::session_closed);

    try {
      apply(r, make_session_opened(2, std::nullopt, fixture::epoch() + 6min + 52s));
      FAIL("expected cooldown");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::cooldown);
      auto payload = json::parse(e.payload());
      CHECK(payload["wait_remaining_ms"] == 3548000);
      CHECK(payload["wait_display"] == "59:08");
    }
    CHECK(error_of([&] { apply(r, make_session_opened(3, std::nullopt, fixture::epoch() + 2h)); }) ==
          Errc::invalid_argument);
    r = apply(r, make_session_opened(2, std::nullopt, fixture::epoch() + 6min + 1h));
    CHECK(r.open_session() != nullptr);
    CHECK(error_of([&] { apply(r, make_stage_advanced(StageState::BaselineSurvey, fixture::epoch() + 3h)); }) ==
          Errc::illegal_transition);
  }

  TEST_CASE("phase 1 needs the minimum number of qualifying sessions") {
    auto t = fixture::synthetic_transcript("P02", 4, 7);
    auto r = fixture::phase1_record("P02", t, fixture::synthetic_baseline(4));
    CHECK(error_of([&] { apply(r, make_stage_advanced(StageState::BaselineSurvey, t.sessions.back().ended.value() + 1h)); }) ==
          Errc::illegal_transition);
    CHECK(count_qualifying_sessions(r.policy, r.transcript.sessions) == 7);

    const auto& full = phase1().record;
    auto ok = apply(full, make_stage_advanced(StageState::BaselineSurvey, after_phase1(5min)));
    CHECK(ok.stage == StageState::BaselineSurvey);
  }

  TEST_CASE("surveys are accepted once") {
    auto r = phase1().record;
    r = apply(r, make_pre_survey(likert(false), after_phase1(1min)));
    CHECK(error_of([&] { apply(r, make_pre_survey(likert(false), after_phase1(2min))); }) == Errc::duplicate);
    CHECK(error_of([&] { apply(r, make_baseline(phase1().baseline, after_phase1(2min))); }) == Errc::duplicate);
    CHECK(error_of([&] { apply(r, make_post_survey(likert(true), after_phase1(2min))); }) == Errc::illegal_transition);
  }

  TEST_CASE("pre-generation on a synthetic participant") {
    const auto& c = phase1().cache;
    CHECK(c.missing.empty());
    CHECK(c.graph.has_value());
    CHECK(c.strategy.has_value());
    CHECK(c.has_rounds());
    CHECK(c.thinking_log.has_value());
    CHECK(c.thinking_log->complete());
    CHECK(c.chart_pairs.has_value());
    for (const char* name : {"manual", "anti_manual", "llm", "anti_llm", "random"}) CHECK(c.profiles.count(name) == 1);
    CHECK(c.transcript_digest == transcript_digest(phase1().transcript));
    CHECK(pregen_cache_from_json(to_json(c)) == c);

    auto alignment = participant_alignment(c);
    REQUIRE_FALSE(alignment.is_null());
    CHECK(alignment.contains("conflicts"));
  }

  TEST_CASE("pre-generation reports failing survey items") {
    json bad = {{"$error", "refusal"}};
    json script{{"synthesize", true}, {"seed", 3}, {"structured_keyed", {{"P01/pvq/item/7", {bad}}}}};
    Gateway gw;
    gw.set_mock_backend(std::make_shared<MockBackend>(MockScript::from_json(script)));
    PregenOptions opts;
    opts.seed = 3;
    auto c = pregenerate_artifacts(gw, ProviderRoles::uniform(mock_profile()), phase1().record, key(), opts,
                                   after_phase1(2min));
    CHECK(std::find(c.missing.begin(), c.missing.end(), "pvq/item/7") != c.missing.end());
    CHECK_FALSE(c.chart_pairs.has_value());
    CHECK(c.graph.has_value());
    CHECK(c.has_rounds());
  }

  TEST_CASE("stage transitions require cached artifacts") {
    auto r = phase1().record;
    r = apply(r, make_stage_advanced(StageState::BaselineSurvey, after_phase1(4min)));
    CHECK(error_of([&] { apply(r, make_stage_advanced(StageState::Stage1Graph, after_phase1(5min))); }) ==
          Errc::missing_artifacts);

    auto no_rounds = phase1().cache;
    no_rounds.rounds.clear();
    auto r2 = apply(phase1().record, make_artifacts_cached(no_rounds, after_phase1(3min)));
    r2 = apply(r2, make_stage_advanced(StageState::BaselineSurvey, after_phase1(4min)));
    r2 = apply(r2, make_stage_advanced(StageState::Stage1Graph, after_phase1(5min)));
    CHECK(error_of([&] { apply(r2, make_stage_advanced(StageState::Stage2Personas, after_phase1(6min))); }) ==
          Errc::missing_artifacts);
    CHECK(error_of([&] { apply(r2, make_stage_advanced(StageState::Stage3Charts, after_phase1(6min))); }) ==
          Errc::illegal_transition);
  }

  TEST_CASE("artifacts from another transcript are rejected and stale caches are ignored") {
    auto other = phase1().cache;
    other.transcript_digest = std::string(64, '0');
    CHECK(error_of([&] { apply(phase1().record, make_artifacts_cached(other, after_phase1(3min))); }) ==
          Errc::invalid_argument);

    auto r = apply(phase1().record, make_artifacts_cached(phase1().cache, after_phase1(3min)));
    CHECK(r.valid_cache() != nullptr);
    r.transcript.sessions[0].messages[0].text += " edited";
    CHECK(r.valid_cache() == nullptr);
  }

  TEST_CASE("full walk through every stage") {
    auto r = at_stage2();
    CHECK(r.stage == StageState::Stage2Personas);
    REQUIRE(r.rounds.size() == 5);
    CHECK(error_of([&] { apply(r, make_stage_advanced(StageState::Stage3Charts, after_phase1(9min))); }) ==
          Errc::illegal_transition);

    const auto& first = r.rounds[0];
    auto incomplete_reveal = make_round_revealed(1, {{first.slots[0].slot_id, PersonaCondition::ChatPersona}},
                                                 after_phase1(7min));
    CHECK(error_of([&] { apply(r, incomplete_reveal); }) == Errc::incomplete);

    r = rate_and_reveal_all(r);
    for (const auto& round : r.rounds) {
      CHECK(round.revealed);
      CHECK(round.fully_rated());
    }
    r = apply(r, make_stage_advanced(StageState::Stage3Charts, after_phase1(9min)));
    CHECK(error_of([&] { apply(r, make_stage_advanced(StageState::Debrief, after_phase1(10min))); }) ==
          Errc::illegal_transition);
    json reveal{{"A", "Manual"}, {"B", "LLM"}};
    for (int pair = 1; pair <= 3; ++pair) r = apply(r, make_chart_chosen(pair, "A", reveal, after_phase1(10min)));
    CHECK(error_of([&] { apply(r, make_chart_chosen(1, "B", reveal, after_phase1(10min))); }) == Errc::duplicate);
    CHECK(error_of([&] { apply(r, make_chart_chosen(4, "B", reveal, after_phase1(10min))); }) == Errc::out_of_range);
    r = apply(r, make_stage_advanced(StageState::Debrief, after_phase1(11min)));
    CHECK(error_of([&] { apply(r, make_stage_advanced(StageState::Complete, after_phase1(12min))); }) ==
          Errc::illegal_transition);
    r = apply(r, make_post_survey(likert(true), after_phase1(12min)));
    r = apply(r, make_stage_advanced(StageState::Complete, after_phase1(13min)));
    CHECK(r.stage == StageState::Complete);
    CHECK_FALSE(next_stage(r.stage));

    auto replayed = replay(r.history);
    CHECK(replayed == r);
    CHECK(to_json(replayed).dump() == to_json(r).dump());

    std::vector<StudyEvent> via_json;
    for (const auto& e : r.history) via_json.push_back(study_event_from_json(json::parse(to_json(e).dump())));
    CHECK(to_json(replay(via_json)).dump() == to_json(r).dump());
  }

  TEST_CASE("stages cannot be skipped") {
    auto r = apply(phase1().record, make_artifacts_cached(phase1().cache, after_phase1(3min)));
    CHECK(error_of([&] { apply(r, make_stage_advanced(StageState::Stage1Graph, after_phase1(4min))); }) ==
          Errc::illegal_transition);
    CHECK(error_of([&] { apply(r, make_stage_advanced(StageState::Complete, after_phase1(4min))); }) ==
          Errc::illegal_transition);
  }

  TEST_CASE("idempotency keys suppress repeated events") {
    auto r = at_stage2();
    auto slot = r.rounds[0].slots[0];
    auto e = make_rating(1, slot.slot_id, 5, after_phase1(7min), std::string("rate-1"));
    r = apply(r, e);
    auto size = r.history.size();
    auto again = apply(r, make_rating(1, slot.slot_id, 2, after_phase1(8min), std::string("rate-1")));
    CHECK(again.history.size() == size);
    CHECK(again.rounds[0].ratings.at(slot.slot_id) == 5);
    CHECK(again == r);
  }

  TEST_CASE("corrupt event json") {
    CHECK(error_of([] { study_event_from_json(json{{"type", 3}}); }) == Errc::corrupt_history);
  }
}
