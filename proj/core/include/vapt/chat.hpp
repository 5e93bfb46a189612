#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vapt/provider.hpp"
#include "vapt/time.hpp"

namespace vapt {

enum class MessageRole { participant, agent };

struct Message {
  MessageRole role = MessageRole::participant;
  std::string text;
  Instant timestamp{};
  std::optional<std::string> language_tag;

  bool operator==(const Message&) const = default;
};

struct ChatSession {
  std::string participant_code;
  int session_index = 1;
  Instant started{};
  std::optional<Instant> ended;
  std::vector<Message> messages;

  bool is_open() const { return !ended.has_value(); }
  // Minutes from start to end; 0 for an open session.
  double duration_minutes() const { return ended ? minutes_between(started, *ended) : 0.0; }

  bool operator==(const ChatSession&) const = default;
};

struct Transcript {
  std::string participant_code;
  std::vector<ChatSession> sessions;

  // All messages across sessions, in session then message order.
  std::vector<Message> messages() const;
  bool empty() const;

  bool operator==(const Transcript&) const = default;
};

void to_json(json& j, const Message& m);
void from_json(const json& j, Message& m);
void to_json(json& j, const ChatSession& s);
void from_json(const json& j, ChatSession& s);
void to_json(json& j, const Transcript& t);
void from_json(const json& j, Transcript& t);

Transcript load_transcript(const std::filesystem::path& path);
void save_transcript(const Transcript& t, const std::filesystem::path& path);

// SHA-256 hex of the canonical JSON form.
std::string transcript_digest(const Transcript& t);

// ---------------------------------------------------------------------------
// Strategy

enum class StrategyMode { vertical, horizontal };

std::string_view to_string(StrategyMode m);
StrategyMode strategy_mode_from_string(std::string_view s);

struct Insight {
  std::string pattern;
  std::string approach;
  bool operator==(const Insight&) const = default;
};

struct SharedMemory {
  std::string what_happened;
  std::string when_it_happened;
  std::string how_to_reference;
  std::string memory_type;
  bool operator==(const SharedMemory&) const = default;
};

struct Strategy {
  StrategyMode mode = StrategyMode::horizontal;
  std::vector<Insight> insights;
  std::vector<SharedMemory> shared_memories;
  std::string user_profile;
  std::vector<std::string> conversation_goals;

  void validate() const;
  bool operator==(const Strategy&) const = default;
};

void to_json(json& j, const Strategy& s);
void from_json(const json& j, Strategy& s);

// Default schedule: session 2 horizontal, 3 vertical, 4 horizontal, ...
StrategyMode default_strategy_mode(int session_index);

Strategy generate_strategy(Gateway& gateway, const ProviderProfile& profile, const std::vector<ChatSession>& history,
                           StrategyMode mode, const std::string& request_key = "strategy");

// ---------------------------------------------------------------------------
// Prompt assembly

enum class ConversationStage { opening, deeper };

ConversationStage stage_for_session(int session_index);

std::string assemble_system_prompt(std::string_view base, const std::optional<Strategy>& strategy,
                                   ConversationStage stage);

// Bundle for Day's next reply in `session`.
PromptBundle build_reply_bundle(std::string_view system_text, const ChatSession& session);

// ---------------------------------------------------------------------------
// Session rules

struct SessionPolicy {
  double min_session_minutes = 5.0;
  double cooldown_minutes = 60.0;
  int min_sessions = 8;
  bool count_short_sessions = false;

  void validate() const;
  bool operator==(const SessionPolicy&) const = default;
};

void to_json(json& j, const SessionPolicy& p);
void from_json(const json& j, SessionPolicy& p);

struct GateReport {
  bool allowed = true;
  std::chrono::milliseconds wait_remaining{0};
  bool session_open = false;
  // Set only while a session is open.
  std::optional<double> minutes_remaining_in_session;

  double wait_remaining_minutes() const { return std::chrono::duration<double, std::ratio<60>>(wait_remaining).count(); }
};

json to_json(const GateReport& g);

GateReport check_session_gate(const SessionPolicy& policy, const std::vector<ChatSession>& prior, Instant now);

bool session_qualifies(const SessionPolicy& policy, const ChatSession& s);
int count_qualifying_sessions(const SessionPolicy& policy, const std::vector<ChatSession>& sessions);

ChatSession record_message(ChatSession session, Message msg);
ChatSession close_session(ChatSession session, Instant at);

// Append-only JSON-lines log of session events; replay rebuilds the transcript.
class TranscriptJournal {
 public:
  explicit TranscriptJournal(std::filesystem::path path);

  void open_session(const std::string& participant_code, int session_index, Instant started);
  void append_message(int session_index, const Message& m);
  void close_session(int session_index, Instant ended);

  static Transcript replay(const std::filesystem::path& path);

 private:
  void write(const json& line);
  std::filesystem::path path_;
};

}  // namespace vapt
