#include "vapt/chat.hpp"

#include <algorithm>
#include <fstream>

#include "vapt/crypto.hpp"
#include "vapt/prompts.hpp"
#include "vapt/text.hpp"

namespace vapt {

std::vector<Message> Transcript::messages() const {
  std::vector<Message> out;
  for (const auto& s : sessions) out.insert(out.end(), s.messages.begin(), s.messages.end());
  return out;
}

bool Transcript::empty() const {
  return std::all_of(sessions.begin(), sessions.end(), [](const ChatSession& s) { return s.messages.empty(); });
}

void to_json(json& j, const Message& m) {
  j = json{{"role", m.role == MessageRole::participant ? "participant" : "agent"},
           {"text", m.text},
           {"timestamp", format_rfc3339(m.timestamp)}};
  if (m.language_tag) j["language_tag"] = *m.language_tag;
}

void from_json(const json& j, Message& m) {
  auto role = j.at("role").get<std::string>();
  if (role == "participant" || role == "user")
    m.role = MessageRole::participant;
  else if (role == "agent" || role == "assistant")
    m.role = MessageRole::agent;
  else
    fail(Errc::parse, "unknown message role '" + role + "'");
  m.text = j.at("text").get<std::string>();
  m.timestamp = parse_rfc3339(j.at("timestamp").get<std::string>());
  m.language_tag.reset();
  if (j.contains("language_tag") && !j["language_tag"].is_null()) m.language_tag = j["language_tag"].get<std::string>();
}

void to_json(json& j, const ChatSession& s) {
  j = json{{"session_index", s.session_index},
           {"started", format_rfc3339(s.started)},
           {"ended", s.ended ? json(format_rfc3339(*s.ended)) : json(nullptr)},
           {"messages", s.messages}};
}

void from_json(const json& j, ChatSession& s) {
  s.session_index = j.at("session_index").get<int>();
  s.started = parse_rfc3339(j.at("started").get<std::string>());
  s.ended.reset();
  if (j.contains("ended") && !j["ended"].is_null()) s.ended = parse_rfc3339(j["ended"].get<std::string>());
  s.messages = j.at("messages").get<std::vector<Message>>();
}

void to_json(json& j, const Transcript& t) {
  j = json{{"participant_code", t.participant_code}, {"sessions", t.sessions}};
}

void from_json(const json& j, Transcript& t) {
  t.participant_code = j.at("participant_code").get<std::string>();
  t.sessions = j.at("sessions").get<std::vector<ChatSession>>();
  for (auto& s : t.sessions) s.participant_code = t.participant_code;
}

Transcript load_transcript(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), Errc::io, "cannot open transcript " + path.string());
  json j = json::parse(in, nullptr, false);
  require(!j.is_discarded(), Errc::parse, "transcript " + path.string() + " is not valid JSON");
  try {
    return j.get<Transcript>();
  } catch (const json::exception& e) {
    fail(Errc::parse, "transcript " + path.string() + ": " + e.what());
  }
}

void save_transcript(const Transcript& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), Errc::io, "cannot write " + path.string());
  out << json(t).dump(2) << '\n';
}

std::string transcript_digest(const Transcript& t) { return crypto::to_hex(crypto::sha256(json(t).dump())); }

// ---------------------------------------------------------------------------

std::string_view to_string(StrategyMode m) { return m == StrategyMode::vertical ? "vertical" : "horizontal"; }

StrategyMode strategy_mode_from_string(std::string_view s) {
  if (s == "vertical") return StrategyMode::vertical;
  if (s == "horizontal") return StrategyMode::horizontal;
  fail(Errc::invalid_argument, "unknown strategy mode '" + std::string(s) + "'");
}

void Strategy::validate() const {
  require(insights.size() >= 3 && insights.size() <= 7, Errc::schema_violation, "strategy needs 3-7 insights");
  require(shared_memories.size() >= 3 && shared_memories.size() <= 5, Errc::schema_violation,
          "strategy needs 3-5 shared memories");
  require(conversation_goals.size() >= 3, Errc::schema_violation, "strategy needs at least 3 goals");
  require(!user_profile.empty(), Errc::schema_violation, "strategy user_profile is empty");
}

void to_json(json& j, const Strategy& s) {
  j = json::object();
  j["mode"] = to_string(s.mode);
  j["insights"] = json::array();
  for (const auto& i : s.insights) j["insights"].push_back({{"pattern", i.pattern}, {"approach", i.approach}});
  j["shared_memories"] = json::array();
  for (const auto& m : s.shared_memories)
    j["shared_memories"].push_back({{"what_happened", m.what_happened},
                                    {"when_it_happened", m.when_it_happened},
                                    {"how_to_reference", m.how_to_reference},
                                    {"memory_type", m.memory_type}});
  j["user_profile"] = s.user_profile;
  j["conversation_goals"] = s.conversation_goals;
}

void from_json(const json& j, Strategy& s) {
  s.mode = strategy_mode_from_string(j.value("mode", "horizontal"));
  s.insights.clear();
  for (const auto& i : j.at("insights"))
    s.insights.push_back({i.at("pattern").get<std::string>(), i.at("approach").get<std::string>()});
  s.shared_memories.clear();
  for (const auto& m : j.at("shared_memories"))
    s.shared_memories.push_back({m.at("what_happened").get<std::string>(), m.at("when_it_happened").get<std::string>(),
                                 m.at("how_to_reference").get<std::string>(), m.at("memory_type").get<std::string>()});
  s.user_profile = j.at("user_profile").get<std::string>();
  s.conversation_goals = j.at("conversation_goals").get<std::vector<std::string>>();
}

StrategyMode default_strategy_mode(int session_index) {
  return session_index % 2 == 0 ? StrategyMode::horizontal : StrategyMode::vertical;
}

namespace {

std::string render_history(const std::vector<ChatSession>& history) {
  std::string out;
  for (const auto& s : history) {
    out += "=== Session " + std::to_string(s.session_index) + " (" + format_rfc3339(s.started) + ") ===\n";
    for (const auto& m : s.messages) {
      out += m.role == MessageRole::participant ? "User: " : "Day: ";
      out += m.text;
      out += '\n';
    }
  }
  return out;
}

}  // namespace

Strategy generate_strategy(Gateway& gateway, const ProviderProfile& profile, const std::vector<ChatSession>& history,
                           StrategyMode mode, const std::string& request_key) {
  bool any = std::any_of(history.begin(), history.end(), [](const ChatSession& s) { return !s.messages.empty(); });
  require(any, Errc::empty_history, "generate_strategy: history has no messages");

  StructuredRequest req;
  req.system_text = std::string(mode == StrategyMode::vertical ? prompts::vertical_strategy()
                                                               : prompts::horizontal_strategy()) +
                    "\n\n" + std::string(prompts::strategy_response_schema());
  req.prompt = "Previous conversations:\n\n" + render_history(history);
  req.schema_name = std::string(schema::kStrategy);
  req.request_key = request_key + ":" + std::string(to_string(mode));

  json record = gateway.generate_structured(profile, req);
  record["mode"] = to_string(mode);
  Strategy s = record.get<Strategy>();
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------

ConversationStage stage_for_session(int session_index) {
  return session_index >= 2 ? ConversationStage::deeper : ConversationStage::opening;
}

std::string assemble_system_prompt(std::string_view base, const std::optional<Strategy>& strategy,
                                   ConversationStage stage) {
  require(!base.empty(), Errc::invalid_argument, "assemble_system_prompt: base is empty");
  std::string out(base);
  if (!strategy || stage != ConversationStage::deeper) return out;

  out += "\n\n";
  out += prompts::deeper_stage_directives();
  out += "\n\nKEY INSIGHTS:\n";
  for (const auto& i : strategy->insights) out += "- " + i.pattern + ": " + i.approach + "\n";
  out += "\nUSER PROFILE:\n" + strategy->user_profile + "\n";
  out += "\nSHARED MEMORIES TO POTENTIALLY REFERENCE (only if conversation naturally leads there):\n";
  for (const auto& m : strategy->shared_memories)
    out += "- " + m.what_happened + " (when: " + m.when_it_happened + "; reference: " + m.how_to_reference +
           "; type: " + m.memory_type + ")\n";
  out += "\nCONVERSATION GOALS:\n";
  for (std::size_t i = 0; i < strategy->conversation_goals.size(); ++i)
    out += std::to_string(i + 1) + ". " + strategy->conversation_goals[i] + "\n";
  return out;
}

PromptBundle build_reply_bundle(std::string_view system_text, const ChatSession& session) {
  PromptBundle b;
  b.system_text = std::string(system_text);
  for (const auto& m : session.messages)
    b.turns.push_back({m.role == MessageRole::participant ? TurnRole::user : TurnRole::agent, m.text});
  b.request_key = session.participant_code + "/s" + std::to_string(session.session_index) + "/m" +
                  std::to_string(session.messages.size());
  return b;
}

// ---------------------------------------------------------------------------

void SessionPolicy::validate() const {
  require(min_session_minutes > 0 && cooldown_minutes > 0 && min_sessions > 0, Errc::invalid_argument,
          "session policy values must be positive");
}

void to_json(json& j, const SessionPolicy& p) {
  j = json{{"min_session_minutes", p.min_session_minutes},
           {"cooldown_minutes", p.cooldown_minutes},
           {"min_sessions", p.min_sessions},
           {"count_short_sessions", p.count_short_sessions}};
}

void from_json(const json& j, SessionPolicy& p) {
  p.min_session_minutes = j.value("min_session_minutes", 5.0);
  p.cooldown_minutes = j.value("cooldown_minutes", 60.0);
  p.min_sessions = j.value("min_sessions", 8);
  p.count_short_sessions = j.value("count_short_sessions", false);
  p.validate();
}

json to_json(const GateReport& g) {
  json j{{"allowed", g.allowed},
         {"session_open", g.session_open},
         {"wait_remaining_ms", g.wait_remaining.count()},
         {"wait_remaining_minutes", g.wait_remaining_minutes()},
         {"wait_display", format_countdown(g.wait_remaining)}};
  if (g.minutes_remaining_in_session) {
    j["minutes_remaining_in_session"] = *g.minutes_remaining_in_session;
    j["session_display"] = format_countdown(std::chrono::milliseconds(
        static_cast<long long>(*g.minutes_remaining_in_session * 60000.0 + 0.5)));
  } else {
    j["minutes_remaining_in_session"] = nullptr;
  }
  return j;
}

GateReport check_session_gate(const SessionPolicy& policy, const std::vector<ChatSession>& prior, Instant now) {
  policy.validate();
  for (std::size_t i = 0; i < prior.size(); ++i) {
    const auto& s = prior[i];
    if (s.ended) require(*s.ended >= s.started, Errc::corrupt_history, "session ends before it starts");
    if (i + 1 < prior.size()) {
      const auto& next = prior[i + 1];
      require(next.started >= s.started, Errc::corrupt_history, "sessions are not sorted by start time");
      require(s.ended.has_value(), Errc::corrupt_history, "an earlier session is still open");
      require(*s.ended <= next.started, Errc::corrupt_history, "sessions overlap");
    }
  }

  GateReport g;
  if (prior.empty()) return g;
  const ChatSession& last = prior.back();
  require(now >= last.started, Errc::invalid_argument, "gate evaluated before the last session started");
  if (last.is_open()) {
    g.session_open = true;
    g.minutes_remaining_in_session = std::max(0.0, policy.min_session_minutes - minutes_between(last.started, now));
    return g;
  }
  require(now >= *last.ended, Errc::invalid_argument, "gate evaluated before the last session ended");
  auto cooldown = std::chrono::milliseconds(static_cast<long long>(policy.cooldown_minutes * 60000.0));
  auto since = now - *last.ended;
  if (since < cooldown) {
    g.allowed = false;
    g.wait_remaining = std::chrono::duration_cast<std::chrono::milliseconds>(cooldown - since);
  }
  return g;
}

bool session_qualifies(const SessionPolicy& policy, const ChatSession& s) {
  if (s.is_open()) return false;
  return policy.count_short_sessions || s.duration_minutes() >= policy.min_session_minutes;
}

int count_qualifying_sessions(const SessionPolicy& policy, const std::vector<ChatSession>& sessions) {
  return static_cast<int>(
      std::count_if(sessions.begin(), sessions.end(), [&](const ChatSession& s) { return session_qualifies(policy, s); }));
}

ChatSession record_message(ChatSession session, Message msg) {
  require(session.is_open(), Errc::session_closed, "session " + std::to_string(session.session_index) + " is closed");
  require(!text::trim(msg.text).empty(), Errc::invalid_argument, "message text is empty");
  require(msg.timestamp >= session.started, Errc::timestamp_regression, "message precedes session start");
  if (!session.messages.empty())
    require(msg.timestamp >= session.messages.back().timestamp, Errc::timestamp_regression,
            "message timestamp " + format_rfc3339(msg.timestamp) + " precedes " +
                format_rfc3339(session.messages.back().timestamp));
  if (!msg.language_tag) msg.language_tag = text::detect_language_tag(msg.text);
  session.messages.push_back(std::move(msg));
  return session;
}

ChatSession close_session(ChatSession session, Instant at) {
  require(session.is_open(), Errc::session_closed, "session already closed");
  Instant floor = session.messages.empty() ? session.started : session.messages.back().timestamp;
  require(at >= floor, Errc::timestamp_regression, "session end precedes its last message");
  session.ended = at;
  return session;
}

// ---------------------------------------------------------------------------

TranscriptJournal::TranscriptJournal(std::filesystem::path path) : path_(std::move(path)) {}

void TranscriptJournal::write(const json& line) {
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  require(out.good(), Errc::io, "cannot append to " + path_.string());
  out << line.dump() << '\n';
  out.flush();
  require(out.good(), Errc::io, "write to " + path_.string() + " failed");
}

void TranscriptJournal::open_session(const std::string& participant_code, int session_index, Instant started) {
  write({{"event", "open"}, {"participant_code", participant_code}, {"session_index", session_index},
         {"at", format_rfc3339(started)}});
}

void TranscriptJournal::append_message(int session_index, const Message& m) {
  write({{"event", "message"}, {"session_index", session_index}, {"message", m}});
}

void TranscriptJournal::close_session(int session_index, Instant ended) {
  write({{"event", "close"}, {"session_index", session_index}, {"at", format_rfc3339(ended)}});
}

Transcript TranscriptJournal::replay(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), Errc::io, "cannot open journal " + path.string());
  Transcript t;
  std::string line;
  std::size_t line_no = 0;
  auto find = [&](int index) -> ChatSession& {
    for (auto& s : t.sessions)
      if (s.session_index == index) return s;
    fail(Errc::corrupt_history, "journal line " + std::to_string(line_no) + " refers to unknown session");
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    require(!j.is_discarded(), Errc::corrupt_history, "journal line " + std::to_string(line_no) + " is not JSON");
    auto event = j.at("event").get<std::string>();
    int index = j.at("session_index").get<int>();
    if (event == "open") {
      t.participant_code = j.at("participant_code").get<std::string>();
      ChatSession s;
      s.participant_code = t.participant_code;
      s.session_index = index;
      s.started = parse_rfc3339(j.at("at").get<std::string>());
      t.sessions.push_back(std::move(s));
    } else if (event == "message") {
      ChatSession& s = find(index);
      s = record_message(std::move(s), j.at("message").get<Message>());
    } else if (event == "close") {
      ChatSession& s = find(index);
      s = vapt::close_session(std::move(s), parse_rfc3339(j.at("at").get<std::string>()));
    } else {
      fail(Errc::corrupt_history, "unknown journal event '" + event + "'");
    }
  }
  return t;
}

}  // namespace vapt
