#include "vapt/service.hpp"

#include "vapt/error.hpp"
#include "vapt/prompts.hpp"
#include "vapt/rng.hpp"
#include "vapt/text.hpp"

namespace vapt {

namespace {

int ordinal(StageState s) { return static_cast<int>(s); }

json chart_view(const json& pair) {
  return {{"pair", pair.at("pair")}, {"A", pair.at("A")}, {"B", pair.at("B")}};
}

ValueProfile centered_only(const json& side) {
  ValueProfile p;
  auto c = side.at("centered").get<std::vector<double>>();
  require(c.size() == kValueCount, Errc::parse, "chart side must have 19 values");
  std::copy(c.begin(), c.end(), p.centered.begin());
  return p;
}

}  // namespace

json public_round(const BlindRound& r) {
  json slots = json::array();
  for (const auto& s : r.slots) slots.push_back({{"slot_id", s.slot_id}, {"text", s.text}});
  json j{{"round", r.round_index},
         {"scenario", r.scenario},
         {"slots", slots},
         {"ratings", r.ratings},
         {"revealed", r.revealed}};
  if (r.revealed && r.conditions) {
    json m = json::object();
    for (std::size_t i = 0; i < 4; ++i) m[r.slots[i].slot_id] = to_string((*r.conditions)[i]);
    j["conditions"] = m;
  }
  return j;
}

StudyService::StudyService(ServiceConfig config, std::shared_ptr<Gateway> gateway, Clock clock)
    : config_(std::move(config)),
      gateway_(std::move(gateway)),
      clock_(std::move(clock)),
      store_(config_.data_dir),
      roles_(config_.resolve_roles()) {
  config_.validate();
  require(gateway_ != nullptr, Errc::invalid_argument, "service needs a gateway");
}

StudyService::~StudyService() { wait_for_jobs(); }

std::mutex& StudyService::lock_for(const std::string& code) {
  require(StudyStore::valid_code(code), Errc::invalid_argument, "invalid participant code");
  std::lock_guard lk(locks_mu_);
  auto& m = locks_[code];
  if (!m) m = std::make_unique<std::mutex>();
  return *m;
}

StudyRecord StudyService::load(const std::string& code) { return store_.load(code); }

void StudyService::apply(StudyRecord& record, const StudyEvent& e) {
  record = advance_stage(std::move(record), e);
  store_.persist(record);
}

crypto::Key StudyService::create_key(const std::string& code) {
  return config_.seed ? crypto::derive_key(*config_.seed, "reveal/" + code) : crypto::random_key();
}

json StudyService::create_participant(const std::string& code) {
  std::lock_guard lk(lock_for(code));
  require(!store_.exists(code), Errc::duplicate, "participant '" + code + "' already exists");
  StudyRecord r;
  apply(r, make_participant_created(code, config_.policy, clock_()));
  store_.save_key(code, create_key(code));
  return {{"participant_code", code}, {"stage", to_string(r.stage)}};
}

json StudyService::status(const std::string& code) {
  std::lock_guard lk(lock_for(code));
  auto r = load(code);
  const auto* cache = r.valid_cache();
  json j{{"participant_code", code},
         {"stage", to_string(r.stage)},
         {"sessions", r.transcript.sessions.size()},
         {"qualifying_sessions", count_qualifying_sessions(r.policy, r.transcript.sessions)},
         {"required_sessions", r.policy.min_sessions},
         {"pre_survey", r.pre_survey.has_value()},
         {"baseline", r.baseline.has_value()},
         {"post_survey", r.post_survey.has_value()},
         {"artifacts", cache != nullptr},
         {"events", r.history.size()}};
  if (auto next = next_stage(r.stage)) j["next_stage"] = to_string(*next);
  if (r.cache) {
    j["cache_created"] = format_rfc3339(r.cache->created);
    j["cache_age_seconds"] =
        std::chrono::duration<double>(clock_() - r.cache->created).count();
    j["cache_stale"] = cache == nullptr;
    j["missing"] = r.cache->missing;
  }
  return j;
}

json StudyService::advance(const std::string& code) {
  {
    std::lock_guard lk(lock_for(code));
    auto r = load(code);
    auto next = next_stage(r.stage);
    require(next.has_value(), Errc::illegal_transition, "study already complete");
    apply(r, make_stage_advanced(*next, clock_()));
  }
  return status(code);
}

json StudyService::gate(const std::string& code) {
  std::lock_guard lk(lock_for(code));
  auto r = load(code);
  auto now = clock_();
  json j = to_json(check_session_gate(r.policy, r.transcript.sessions, now));
  j["qualifying_sessions"] = count_qualifying_sessions(r.policy, r.transcript.sessions);
  j["required_sessions"] = r.policy.min_sessions;
  j["now"] = format_rfc3339(now);
  return j;
}

json StudyService::post_message(const std::string& code, const std::string& text) {
  std::lock_guard lk(lock_for(code));
  auto r = load(code);
  require(r.stage == StageState::Phase1Chat, Errc::illegal_transition, "chat is only available in phase 1");
  require(!text::trim(text).empty(), Errc::invalid_argument, "message text is empty");

  auto now = clock_();
  if (!r.open_session()) {
    auto gate = check_session_gate(r.policy, r.transcript.sessions, now);
    if (!gate.allowed) throw Error(Errc::cooldown, "cooldown active", to_json(gate).dump());
    int idx = static_cast<int>(r.transcript.sessions.size()) + 1;
    std::optional<Strategy> strategy;
    if (idx >= 2) {
      try {
        strategy = generate_strategy(*gateway_, roles_.strategy, r.transcript.sessions, default_strategy_mode(idx),
                                     code + "/s" + std::to_string(idx) + "/strategy");
      } catch (const Error&) {
        strategy.reset();
      }
    }
    apply(r, make_session_opened(idx, strategy, now));
  }

  Message m;
  m.role = MessageRole::participant;
  m.text = text;
  m.timestamp = now;
  apply(r, make_message(m));

  const ChatSession& s = *r.open_session();
  std::optional<Strategy> strategy;
  if (auto it = r.session_strategies.find(s.session_index); it != r.session_strategies.end()) strategy = it->second;
  auto system = assemble_system_prompt(prompts::day_base(), strategy, stage_for_session(s.session_index));
  std::string reply = gateway_->complete_chat(roles_.chat, build_reply_bundle(system, s));

  Message a;
  a.role = MessageRole::agent;
  a.text = reply;
  a.timestamp = std::max(clock_(), now);
  apply(r, make_message(a));

  const ChatSession& after = *r.open_session();
  return {{"reply", reply},
          {"session_index", after.session_index},
          {"messages_in_session", after.messages.size()},
          {"gate", to_json(check_session_gate(r.policy, r.transcript.sessions, a.timestamp))}};
}

json StudyService::end_session(const std::string& code) {
  std::lock_guard lk(lock_for(code));
  auto r = load(code);
  require(r.open_session() != nullptr, Errc::session_closed, "no open chat session");
  auto now = clock_();
  const auto& s = *r.open_session();
  if (!s.messages.empty()) now = std::max(now, s.messages.back().timestamp);
  apply(r, make_session_closed(now));
  const auto& closed = r.transcript.sessions.back();
  return {{"session_index", closed.session_index},
          {"duration_minutes", closed.duration_minutes()},
          {"qualifies", session_qualifies(r.policy, closed)},
          {"qualifying_sessions", count_qualifying_sessions(r.policy, r.transcript.sessions)}};
}

json StudyService::submit_pre_survey(const std::string& code, const LikertAnswers& answers) {
  std::lock_guard lk(lock_for(code));
  auto r = load(code);
  apply(r, make_pre_survey(answers, clock_()));
  return {{"stored", "pre"}};
}

json StudyService::submit_baseline(const std::string& code, const Baseline& baseline) {
  std::lock_guard lk(lock_for(code));
  auto r = load(code);
  apply(r, make_baseline(baseline, clock_()));
  json profile = score_profile(baseline.manual, ProfileSource::manual);
  return {{"stored", "baseline"}, {"profile", profile}};
}

json StudyService::submit_post_survey(const std::string& code, const LikertAnswers& answers) {
  std::lock_guard lk(lock_for(code));
  auto r = load(code);
  apply(r, make_post_survey(answers, clock_()));
  return {{"stored", "post"}};
}

json StudyService::pregenerate_unlocked(const std::string& code) {
  StudyRecord snapshot;
  crypto::Key key{};
  {
    std::lock_guard lk(lock_for(code));
    snapshot = load(code);
    key = store_.load_key(code);
  }
  PregenOptions opts;
  opts.graph = config_.graph;
  opts.pvq_batch_size = config_.pvq_batch_size;
  opts.seed = config_.seed.value_or(derive_seed(0, crypto::key_id(key)));
  auto cache = pregenerate_artifacts(*gateway_, roles_, snapshot, key, opts, clock_());

  std::lock_guard lk(lock_for(code));
  auto r = load(code);
  require(transcript_digest(r.transcript) == cache.transcript_digest, Errc::illegal_transition,
          "transcript changed during pre-generation");
  apply(r, make_artifacts_cached(cache, clock_()));
  write_artifact_files(cache, store_.artifact_dir(code), config_.conflict_threshold);
  return {{"transcript_digest", cache.transcript_digest},
          {"created", format_rfc3339(cache.created)},
          {"rounds", cache.rounds.size()},
          {"missing", cache.missing}};
}

json StudyService::pregenerate(const std::string& code) { return pregenerate_unlocked(code); }

json StudyService::start_pregeneration(const std::string& code) {
  {
    std::lock_guard lk(lock_for(code));
    require(store_.exists(code), Errc::not_found, "unknown participant code '" + code + "'");
  }
  std::lock_guard lk(jobs_mu_);
  auto& job = jobs_[code];
  if (job.state == "running") return {{"state", job.state}, {"started", format_rfc3339(job.started)}};
  if (job.thread.joinable()) job.thread.join();
  job.state = "running";
  job.started = clock_();
  job.finished.reset();
  job.error.clear();
  job.thread = std::jthread([this, code] {
    std::string state = "done", error;
    try {
      pregenerate_unlocked(code);
    } catch (const std::exception& e) {
      state = "failed";
      error = e.what();
    }
    std::lock_guard lk2(jobs_mu_);
    auto& j = jobs_[code];
    j.state = state;
    j.error = error;
    j.finished = clock_();
  });
  return {{"state", "running"}, {"started", format_rfc3339(job.started)}};
}

json StudyService::pregen_status(const std::string& code) {
  json j;
  {
    std::lock_guard lk(jobs_mu_);
    auto it = jobs_.find(code);
    if (it == jobs_.end()) {
      j = {{"state", "idle"}};
    } else {
      j = {{"state", it->second.state}, {"started", format_rfc3339(it->second.started)}};
      if (it->second.finished) j["finished"] = format_rfc3339(*it->second.finished);
      if (!it->second.error.empty()) j["error"] = it->second.error;
    }
  }
  std::lock_guard lk(lock_for(code));
  auto r = load(code);
  if (r.cache) {
    j["cache_created"] = format_rfc3339(r.cache->created);
    j["cache_age_seconds"] = std::chrono::duration<double>(clock_() - r.cache->created).count();
    j["cache_valid"] = r.valid_cache() != nullptr;
    j["missing"] = r.cache->missing;
  }
  return j;
}

void StudyService::wait_for_jobs() {
  std::vector<std::jthread> threads;
  {
    std::lock_guard lk(jobs_mu_);
    for (auto& [code, job] : jobs_)
      if (job.thread.joinable()) threads.push_back(std::move(job.thread));
  }
  for (auto& t : threads) t.join();
}

const PreGenCache& StudyService::require_cache(const StudyRecord& r, bool need_stage, StageState stage) const {
  if (need_stage)
    require(ordinal(r.stage) >= ordinal(stage), Errc::illegal_transition,
            "not available before " + std::string(to_string(stage)));
  const auto* cache = r.valid_cache();
  if (!cache) throw Error(Errc::missing_artifacts, "artifacts not pre-generated for the current transcript");
  return *cache;
}

json StudyService::graph(const std::string& code) {
  std::lock_guard lk(lock_for(code));
  auto r = load(code);
  const auto& cache = require_cache(r, false, StageState::Phase1Chat);
  if (!cache.graph) throw Error(Errc::missing_artifacts, "graph not generated");
  return {{"graph", *cache.graph},
          {"created", format_rfc3339(cache.created)},
          {"cache_age_seconds", std::chrono::duration<double>(clock_() - cache.created).count()}};
}

json StudyService::graph_node(const std::string& code, std::uint32_t topic_id, LifeContext context) {
  std::lock_guard lk(lock_for(code));
  auto r = load(code);
  const auto& cache = require_cache(r, false, StageState::Phase1Chat);
  if (!cache.graph) throw Error(Errc::missing_artifacts, "graph not generated");
  auto g = import_graph(*cache.graph);
  const auto* topic = g.find_topic(topic_id);
  const auto* node = g.find_node(topic_id, context);
  if (!topic || !node)
    throw Error(Errc::not_found, "no node for topic " + std::to_string(topic_id) + " in " + std::string(to_string(context)));
  auto messages = r.transcript.messages();
  json evidence = json::array();
  for (const auto& e : node->evidence) {
    json ev{{"window", e.window}, {"offset", e.offset}};
    if (e.offset < messages.size()) {
      ev["text"] = messages[e.offset].text;
      ev["timestamp"] = format_rfc3339(messages[e.offset].timestamp);
    }
    evidence.push_back(ev);
  }
  return {{"topic_id", topic_id},
          {"label", topic->label},
          {"context", to_string(context)},
          {"sentiment", node->sentiment},
          {"reasoning", node->reasoning},
          {"clamped", node->clamped},
          {"evidence", evidence}};
}

json StudyService::round(const std::string& code, int index) {
  std::lock_guard lk(lock_for(code));
  auto r = load(code);
  require(ordinal(r.stage) >= ordinal(StageState::Stage2Personas), Errc::illegal_transition,
          "persona rounds open in Stage2Personas");
  for (const auto& round : r.rounds)
    if (round.round_index == index) return public_round(round);
  throw Error(Errc::not_found, "no round " + std::to_string(index));
}

json StudyService::rate(const std::string& code, int index, const std::string& slot_id, int score,
                        std::optional<std::string> idempotency_key) {
  std::lock_guard lk(lock_for(code));
  auto r = load(code);
  apply(r, make_rating(index, slot_id, score, clock_(), std::move(idempotency_key)));
  for (const auto& round : r.rounds)
    if (round.round_index == index) return public_round(round);
  throw Error(Errc::not_found, "no round " + std::to_string(index));
}

json StudyService::reveal(const std::string& code, int index) {
  std::lock_guard lk(lock_for(code));
  auto r = load(code);
  require(r.stage == StageState::Stage2Personas, Errc::illegal_transition, "reveal is only possible in Stage2Personas");
  const BlindRound* target = nullptr;
  for (const auto& round : r.rounds)
    if (round.round_index == index) target = &round;
  if (!target) throw Error(Errc::not_found, "no round " + std::to_string(index));
  require(!target->revealed, Errc::illegal_transition, "round already revealed");
  BlindRound copy = *target;
  auto mapping = reveal_round(copy, store_.load_key(code));
  apply(r, make_round_revealed(index, mapping, clock_()));
  for (const auto& round : r.rounds)
    if (round.round_index == index) return public_round(round);
  throw Error(Errc::not_found, "no round " + std::to_string(index));
}

json StudyService::chart_pair(const std::string& code, int index) {
  std::lock_guard lk(lock_for(code));
  auto r = load(code);
  const auto& cache = require_cache(r, true, StageState::Stage3Charts);
  require(cache.chart_pairs.has_value(), Errc::missing_artifacts, "chart pairs not generated");
  require(index >= 1 && index <= 3, Errc::not_found, "chart pair must be 1..3");
  const auto& pair = cache.chart_pairs->at("pairs").at(static_cast<std::size_t>(index - 1));
  json j = chart_view(pair);
  json conflicts = json::array();
  for (const auto& f :
       detect_conflicts(centered_only(pair.at("A")), centered_only(pair.at("B")), config_.conflict_threshold))
    conflicts.push_back(to_json(f));
  j["conflicts"] = conflicts;
  json values = json::array();
  for (const auto& info : value_table())
    values.push_back({{"code", info.code}, {"name", info.name}, {"description", info.description}});
  j["values"] = values;
  j["axis"] = {-5.0, 5.0};
  for (const auto& c : r.chart_choices)
    if (c.pair == index) j["choice"] = {{"pick", c.pick}, {"reveal", c.reveal}};
  return j;
}

json StudyService::choose_chart(const std::string& code, int pair, const std::string& pick,
                                std::optional<std::string> idempotency_key) {
  std::lock_guard lk(lock_for(code));
  auto r = load(code);
  if (idempotency_key && r.idempotency_keys.count(*idempotency_key))
    for (const auto& c : r.chart_choices)
      if (c.pair == pair) return {{"pair", c.pair}, {"pick", c.pick}, {"reveal", c.reveal}};
  const auto& cache = require_cache(r, true, StageState::Stage3Charts);
  require(cache.chart_pairs.has_value(), Errc::missing_artifacts, "chart pairs not generated");
  require(pair >= 1 && pair <= 3, Errc::out_of_range, "chart pair must be 1..3");
  auto reveal = reveal_chart_pair(*cache.chart_pairs, store_.load_key(code), pair);
  apply(r, make_chart_chosen(pair, pick, reveal, clock_(), std::move(idempotency_key)));
  return {{"pair", pair}, {"pick", pick}, {"reveal", reveal}};
}

json StudyService::thinking_log(const std::string& code) {
  std::lock_guard lk(lock_for(code));
  auto r = load(code);
  const auto& cache = require_cache(r, true, StageState::Stage3Charts);
  require(cache.thinking_log.has_value(), Errc::missing_artifacts, "thinking log not generated");
  std::optional<ResponseSet> human;
  Form form = Form::female;
  if (r.baseline) {
    human = r.baseline->manual;
    form = r.baseline->manual.form;
  }
  return {{"items", thinking_log_view(*cache.thinking_log, ItemBank::bundled(), human, form)},
          {"complete", cache.thinking_log->complete()}};
}

json StudyService::report(const std::string& code) {
  std::lock_guard lk(lock_for(code));
  auto r = load(code);
  json scores = json::array();
  std::vector<BlindRound> revealed;
  for (const auto& round : r.rounds)
    if (round.revealed) revealed.push_back(round);
  if (!revealed.empty())
    for (const auto& s : aggregate_condition_scores(revealed)) scores.push_back(to_json(s));
  json choices = json::array();
  for (const auto& c : r.chart_choices) choices.push_back({{"pair", c.pair}, {"pick", c.pick}, {"reveal", c.reveal}});
  const auto* cache = r.valid_cache();
  return {{"participant_code", code},
          {"stage", to_string(r.stage)},
          {"condition_scores", scores},
          {"alignment", cache ? participant_alignment(*cache, config_.conflict_threshold) : json(nullptr)},
          {"chart_choices", choices},
          {"pre_survey", r.pre_survey ? json(*r.pre_survey) : json(nullptr)},
          {"post_survey", r.post_survey ? json(*r.post_survey) : json(nullptr)}};
}

void StudyService::purge(const std::string& code) {
  {
    std::lock_guard lk(jobs_mu_);
    auto it = jobs_.find(code);
    require(it == jobs_.end() || it->second.state != "running", Errc::illegal_transition,
            "pre-generation still running for '" + code + "'");
    if (it != jobs_.end()) {
      if (it->second.thread.joinable()) it->second.thread.join();
      jobs_.erase(it);
    }
  }
  std::lock_guard lk(lock_for(code));
  store_.purge(code);
}

}  // namespace vapt
