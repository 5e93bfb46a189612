#include "fixtures.hpp"

#include <array>
#include <atomic>
#include <fstream>
#include <iterator>

#include <unistd.h>

#include "vapt/rng.hpp"

namespace fixture {

using namespace vapt;
using namespace std::chrono_literals;

namespace {

constexpr std::array<const char*, 12> kParticipantLines{
    "I spent the weekend helping my sister move into her new flat.",
    "Work has been hectic, my manager keeps changing the project scope.",
    "I started running again in the mornings, it clears my head.",
    "My grandmother's recipes mean a lot to me, I cook them on holidays.",
    "I am thinking about going back to school for a master's degree.",
    "Honestly I like having a quiet evening with a book more than parties.",
    "We had a long argument in the team about fairness in promotions.",
    "I volunteer at the community garden on Saturdays.",
    "Money is tight this month so I am skipping the concert.",
    "I want my kids to grow up respecting other cultures.",
    "The new phone policy at my office feels like micromanagement.",
    "I finally booked a trip to the mountains with old friends."};

constexpr std::array<const char*, 6> kAgentLines{
    "That sounds like a lot to carry. What made it matter to you?",
    "How did that leave you feeling afterwards?",
    "What do you think you would do differently next time?",
    "Who else was part of that, and how did they react?",
    "It sounds important to you. Why do you think that is?",
    "Tell me more about that."};

}  // namespace

Instant epoch() { return parse_rfc3339("2025-03-01T09:00:00Z"); }

Transcript synthetic_transcript(const std::string& code, std::uint64_t seed, int sessions, int per_session) {
  SeededRng rng(derive_seed(seed, "synthetic-transcript"));
  Transcript t;
  t.participant_code = code;
  Instant start = epoch();
  for (int s = 1; s <= sessions; ++s) {
    ChatSession cs;
    cs.participant_code = code;
    cs.session_index = s;
    cs.started = start;
    Instant ts = start;
    for (int m = 0; m < per_session; ++m) {
      ts += 30s;
      Message msg;
      msg.role = m % 2 == 0 ? MessageRole::participant : MessageRole::agent;
      msg.text = msg.role == MessageRole::participant ? kParticipantLines[rng.below(kParticipantLines.size())]
                                                       : kAgentLines[rng.below(kAgentLines.size())];
      msg.timestamp = ts;
      msg.language_tag = "en";
      cs.messages.push_back(msg);
    }
    cs.ended = std::max(ts + 30s, start + 6min);
    t.sessions.push_back(cs);
    start += 2h;
  }
  return t;
}

Baseline synthetic_baseline(std::uint64_t seed) {
  Baseline b;
  b.manual = random_responses(derive_seed(seed, "baseline"));
  b.manual.respondent = Respondent::human;
  b.filters = {{"Should I tell a close friend a hard truth?", "Yes, gently."},
               {"Would I move abroad for a better job?", "Probably not, family comes first."},
               {"Is it fine to skip a family dinner for work?", "Only if it is rare."}};
  return b;
}

std::shared_ptr<Gateway> mock_gateway(std::uint64_t seed, std::optional<std::uint64_t> shuffle_seed) {
  MockScript script;
  script.seed = seed;
  script.synthesize = true;
  script.completion_shuffle_seed = shuffle_seed;
  auto gw = std::make_shared<Gateway>();
  gw->set_mock_backend(std::make_shared<MockBackend>(std::move(script)));
  return gw;
}

StudyRecord phase1_record(const std::string& code, const Transcript& t, const Baseline& b) {
  StudyRecord r;
  r = advance_stage(std::move(r), make_participant_created(code, SessionPolicy{}, t.sessions.front().started));
  for (const auto& s : t.sessions) {
    r = advance_stage(std::move(r), make_session_opened(s.session_index, std::nullopt, s.started));
    for (const auto& m : s.messages) r = advance_stage(std::move(r), make_message(m));
    r = advance_stage(std::move(r), make_session_closed(*s.ended));
  }
  r = advance_stage(std::move(r), make_baseline(b, t.sessions.back().ended.value() + 1min));
  return r;
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("vapt-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::optional<vapt::Errc> error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const vapt::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace fixture
