#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "vapt/crypto.hpp"

namespace vapt {

// {"key_id", "label", "ciphertext"}; the key itself is stored elsewhere.
nlohmann::json seal_section(const crypto::Key& key, std::string_view label, const nlohmann::json& content);

// Throws Errc::sealed on a wrong key, a wrong label or tampering.
nlohmann::json unseal_section(const crypto::Key& key, const nlohmann::json& section);

}  // namespace vapt
