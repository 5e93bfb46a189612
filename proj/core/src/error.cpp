#include "vapt/error.hpp"

namespace vapt {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::length_mismatch: return "length_mismatch";
    case Errc::out_of_range: return "out_of_range";
    case Errc::degenerate: return "degenerate";
    case Errc::no_variance: return "no_variance";
    case Errc::schema_violation: return "schema_violation";
    case Errc::provider_unavailable: return "provider_unavailable";
    case Errc::provider_refusal: return "provider_refusal";
    case Errc::credential_missing: return "credential_missing";
    case Errc::network: return "network";
    case Errc::script_exhausted: return "script_exhausted";
    case Errc::empty_history: return "empty_history";
    case Errc::corrupt_history: return "corrupt_history";
    case Errc::timestamp_regression: return "timestamp_regression";
    case Errc::session_closed: return "session_closed";
    case Errc::incomplete: return "incomplete";
    case Errc::duplicate: return "duplicate";
    case Errc::not_found: return "not_found";
    case Errc::illegal_transition: return "illegal_transition";
    case Errc::missing_artifacts: return "missing_artifacts";
    case Errc::evidence_required: return "evidence_required";
    case Errc::cooldown: return "cooldown";
    case Errc::sealed: return "sealed";
    case Errc::io: return "io";
    case Errc::parse: return "parse";
  }
  return "unknown";
}

}  // namespace vapt
