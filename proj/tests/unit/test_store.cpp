#include <doctest.h>

#include <fstream>

#include "../support/fixtures.hpp"
#include "vapt/error.hpp"
#include "vapt/store.hpp"

using namespace vapt;
using namespace std::chrono_literals;
using fixture::error_of;

namespace {

StudyRecord small_record(const std::string& code) {
  auto t = fixture::synthetic_transcript(code, 2, 2, 4);
  auto r = advance_stage({}, make_participant_created(code, {}, t.sessions.front().started));
  for (const auto& s : t.sessions) {
    r = advance_stage(std::move(r), make_session_opened(s.session_index, std::nullopt, s.started));
    for (const auto& m : s.messages) r = advance_stage(std::move(r), make_message(m));
    r = advance_stage(std::move(r), make_session_closed(*s.ended));
  }
  return r;
}

}  // namespace

TEST_SUITE("store") {
  TEST_CASE("code validation") {
    CHECK(StudyStore::valid_code("P01"));
    CHECK(StudyStore::valid_code("a-b_c"));
    CHECK_FALSE(StudyStore::valid_code(""));
    CHECK_FALSE(StudyStore::valid_code("../etc"));
    CHECK_FALSE(StudyStore::valid_code("a b"));
    CHECK_FALSE(StudyStore::valid_code(std::string(65, 'x')));
  }

  TEST_CASE("persist and load") {
    fixture::TempDir dir;
    StudyStore store(dir.path());
    auto r = small_record("P01");
    store.persist(r);
    CHECK(store.exists("P01"));
    CHECK(store.codes() == std::vector<std::string>{"P01"});
    auto back = store.load("P01");
    CHECK(back == r);
    CHECK(store.events("P01").size() == r.history.size());
    CHECK(error_of([&] { store.load("nonexistent"); }) == Errc::not_found);
  }

  TEST_CASE("sequential persists append") {
    fixture::TempDir dir;
    StudyStore store(dir.path());
    auto r = small_record("P01");
    store.persist(r);
    r = advance_stage(std::move(r), make_session_opened(3, std::nullopt, r.transcript.sessions.back().ended.value() + 2h));
    store.persist(r);
    auto back = store.load("P01");
    CHECK(back == r);
    CHECK(back.open_session() != nullptr);

    auto lines = fixture::read_file(dir.path() / "participants" / "P01" / "events.jsonl");
    CHECK(static_cast<std::size_t>(std::count(lines.begin(), lines.end(), '\n')) == r.history.size());
  }

  TEST_CASE("persist refuses a diverging history") {
    fixture::TempDir dir;
    StudyStore store(dir.path());
    auto r = small_record("P01");
    store.persist(r);
    auto other = small_record("P01");
    other.history.pop_back();
    other.history.push_back(make_pre_survey({}, fixture::epoch()));
    CHECK(error_of([&] { store.persist(other); }) == Errc::corrupt_history);
  }

  TEST_CASE("corrupt event lines are reported") {
    fixture::TempDir dir;
    StudyStore store(dir.path());
    store.persist(small_record("P01"));
    std::ofstream(dir.path() / "participants" / "P01" / "events.jsonl", std::ios::app) << "{not json\n";
    CHECK(error_of([&] { store.load("P01"); }) == Errc::corrupt_history);
  }

  TEST_CASE("keys") {
    fixture::TempDir dir;
    StudyStore store(dir.path());
    CHECK_FALSE(store.has_key("P01"));
    auto k = crypto::derive_key(4, "k");
    store.save_key("P01", k);
    CHECK(store.has_key("P01"));
    CHECK(store.load_key("P01") == k);
    CHECK(error_of([&] { store.load_key("P02"); }) == Errc::not_found);
  }

  TEST_CASE("purge leaves no references") {
    fixture::TempDir dir;
    StudyStore store(dir.path());
    store.persist(small_record("P01"));
    store.persist(small_record("P02"));
    store.save_key("P01", crypto::derive_key(1, "a"));
    std::filesystem::create_directories(store.artifact_dir("P01"));
    std::ofstream(store.artifact_dir("P01") / "graph.json") << "{}";
    CHECK_FALSE(store.scan_references("P01").empty());

    store.purge("P01");
    CHECK_FALSE(store.exists("P01"));
    CHECK_FALSE(store.has_key("P01"));
    CHECK(store.scan_references("P01").empty());
    CHECK(store.exists("P02"));
    CHECK(error_of([&] { store.purge("P01"); }) == Errc::not_found);
  }
}
