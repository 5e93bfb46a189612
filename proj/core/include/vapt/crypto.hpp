#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vapt::crypto {

using Digest = std::array<std::uint8_t, 32>;
using Key = std::array<std::uint8_t, 32>;

Digest sha256(std::span<const std::uint8_t> data);
Digest sha256(std::string_view data);
Digest hmac_sha256(std::span<const std::uint8_t> key, std::string_view message);

std::string to_hex(std::span<const std::uint8_t> bytes);
std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

Key random_key();
Key key_from_hex(std::string_view hex);
// Deterministic key for tests and replayable runs.
Key derive_key(std::uint64_t seed, std::string_view label);

// Short public fingerprint of a key; safe to store next to sealed data.
std::string key_id(const Key& key);

// Authenticated encryption (ChaCha20-Poly1305) with the label as associated
// data. The nonce is an HMAC of (label, plaintext), stored in front of the
// ciphertext, so sealing is deterministic.
std::string seal(const Key& key, std::string_view label, std::string_view plaintext);
std::string unseal(const Key& key, std::string_view label, std::string_view sealed);

}  // namespace vapt::crypto
