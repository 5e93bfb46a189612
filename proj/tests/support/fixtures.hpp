#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "vapt/pregen.hpp"

namespace fixture {

// Fixed epoch for deterministic timestamps: 2025-03-01T09:00:00Z.
vapt::Instant epoch();

// `sessions` closed sessions of `per_session` alternating messages, 30 s
// apart, each session starting two hours after the previous one.
vapt::Transcript synthetic_transcript(const std::string& code, std::uint64_t seed, int sessions = 8,
                                      int per_session = 20);

// Human responses drawn from `seed`, with three filter questions.
vapt::Baseline synthetic_baseline(std::uint64_t seed);

// Synthesizing mock; `shuffle_seed` scrambles completion order.
std::shared_ptr<vapt::Gateway> mock_gateway(std::uint64_t seed, std::optional<std::uint64_t> shuffle_seed = std::nullopt);

// Record replayed from a synthetic transcript and baseline (Phase1 complete).
vapt::StudyRecord phase1_record(const std::string& code, const vapt::Transcript& t, const vapt::Baseline& b);

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& p);

// Error code thrown by `f`, or nullopt when it returns normally.
std::optional<vapt::Errc> error_of(const std::function<void()>& f);

}  // namespace fixture
