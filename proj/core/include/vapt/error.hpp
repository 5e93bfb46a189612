#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vapt {

enum class Errc {
  invalid_argument,
  length_mismatch,
  out_of_range,
  degenerate,
  no_variance,
  schema_violation,
  provider_unavailable,
  provider_refusal,
  credential_missing,
  network,
  script_exhausted,
  empty_history,
  corrupt_history,
  timestamp_regression,
  session_closed,
  incomplete,
  duplicate,
  not_found,
  illegal_transition,
  missing_artifacts,
  evidence_required,
  cooldown,
  sealed,
  io,
  parse,
};

std::string_view to_string(Errc code) noexcept;

// Single exception type for the library. `payload` carries the raw provider
// text for schema violations so callers can log what the model returned.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::string payload = {})
      : std::runtime_error(message), code_(code), payload_(std::move(payload)) {}

  Errc code() const noexcept { return code_; }
  const std::string& payload() const noexcept { return payload_; }

 private:
  Errc code_;
  std::string payload_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, Errc code, const std::string& message) {
  if (!condition) throw Error(code, message);
}

}  // namespace vapt
