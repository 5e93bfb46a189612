#include "vapt/crypto.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/rand.h>

#include <memory>

#include "vapt/error.hpp"
#include "vapt/sealed.hpp"

namespace vapt::crypto {

namespace {

constexpr std::size_t kNonceSize = 12;
constexpr std::size_t kTagSize = 16;

struct CipherCtxDeleter {
  void operator()(EVP_CIPHER_CTX* ctx) const { EVP_CIPHER_CTX_free(ctx); }
};
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter>;

std::array<std::uint8_t, kNonceSize> nonce_for(const Key& key, std::string_view label, std::string_view plaintext) {
  std::string material = "nonce:" + std::to_string(label.size()) + ":" + std::string(label) + std::string(plaintext);
  Digest d = hmac_sha256(key, material);
  std::array<std::uint8_t, kNonceSize> nonce{};
  std::copy_n(d.begin(), kNonceSize, nonce.begin());
  return nonce;
}

const unsigned char* bytes(std::string_view s) {
  return reinterpret_cast<const unsigned char*>(s.data());
}

}  // namespace

Digest sha256(std::span<const std::uint8_t> data) {
  Digest out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1)
    fail(Errc::io, "sha256 failed");
  return out;
}

Digest sha256(std::string_view data) {
  return sha256(std::span<const std::uint8_t>(bytes(data), data.size()));
}

Digest hmac_sha256(std::span<const std::uint8_t> key, std::string_view message) {
  Digest out{};
  unsigned int len = 0;
  if (!HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), bytes(message), message.size(),
            out.data(), &len))
    fail(Errc::io, "hmac failed");
  return out;
}

std::string to_hex(std::span<const std::uint8_t> data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (std::uint8_t b : data) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xF]);
  }
  return out;
}

std::string base64_encode(std::span<const std::uint8_t> data) {
  std::string out(4 * ((data.size() + 2) / 3), '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data.data(),
                          static_cast<int>(data.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) fail(Errc::parse, "base64 length not a multiple of 4");
  std::vector<std::uint8_t> out(3 * text.size() / 4);
  int n = EVP_DecodeBlock(out.data(), bytes(text), static_cast<int>(text.size()));
  if (n < 0) fail(Errc::parse, "invalid base64");
  std::size_t padding = 0;
  if (!text.empty() && text.back() == '=') ++padding;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++padding;
  out.resize(static_cast<std::size_t>(n) - padding);
  return out;
}

Key random_key() {
  Key key{};
  if (RAND_bytes(key.data(), static_cast<int>(key.size())) != 1) fail(Errc::io, "RAND_bytes failed");
  return key;
}

Key key_from_hex(std::string_view hex) {
  if (hex.size() != 64) fail(Errc::parse, "key must be 64 hex characters");
  Key key{};
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    fail(Errc::parse, "bad hex digit in key");
  };
  for (std::size_t i = 0; i < key.size(); ++i)
    key[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  return key;
}

Key derive_key(std::uint64_t seed, std::string_view label) {
  std::array<std::uint8_t, 8> seed_bytes{};
  for (int i = 0; i < 8; ++i) seed_bytes[i] = static_cast<std::uint8_t>(seed >> (8 * i));
  return hmac_sha256(seed_bytes, std::string("key:") + std::string(label));
}

std::string key_id(const Key& key) {
  Digest d = sha256(std::span<const std::uint8_t>(key));
  return to_hex(std::span<const std::uint8_t>(d.data(), 8));
}

std::string seal(const Key& key, std::string_view label, std::string_view plaintext) {
  auto nonce = nonce_for(key, label, plaintext);
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  if (!ctx) fail(Errc::io, "cipher context allocation failed");
  // nonce | ciphertext | tag
  std::vector<std::uint8_t> out(kNonceSize + plaintext.size() + kTagSize);
  std::copy(nonce.begin(), nonce.end(), out.begin());
  std::uint8_t* body = out.data() + kNonceSize;
  int len = 0;
  bool ok = EVP_EncryptInit_ex(ctx.get(), EVP_chacha20_poly1305(), nullptr, key.data(), nonce.data()) == 1 &&
            EVP_EncryptUpdate(ctx.get(), nullptr, &len, bytes(label), static_cast<int>(label.size())) == 1 &&
            EVP_EncryptUpdate(ctx.get(), body, &len, bytes(plaintext), static_cast<int>(plaintext.size())) == 1 &&
            EVP_EncryptFinal_ex(ctx.get(), body + len, &len) == 1 &&
            EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_GET_TAG, kTagSize, body + plaintext.size()) == 1;
  if (!ok) fail(Errc::io, "seal failed");
  return base64_encode(out);
}

std::string unseal(const Key& key, std::string_view label, std::string_view sealed) {
  std::vector<std::uint8_t> data = base64_decode(sealed);
  if (data.size() < kNonceSize + kTagSize) fail(Errc::sealed, "sealed section truncated");
  const std::uint8_t* nonce = data.data();
  const std::uint8_t* cipher = data.data() + kNonceSize;
  std::size_t body = data.size() - kNonceSize - kTagSize;
  std::string plain(body, '\0');
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  if (!ctx) fail(Errc::io, "cipher context allocation failed");
  int len = 0;
  bool ok = EVP_DecryptInit_ex(ctx.get(), EVP_chacha20_poly1305(), nullptr, key.data(), nonce) == 1 &&
            EVP_DecryptUpdate(ctx.get(), nullptr, &len, bytes(label), static_cast<int>(label.size())) == 1 &&
            EVP_DecryptUpdate(ctx.get(), reinterpret_cast<unsigned char*>(plain.data()), &len,
                              cipher, static_cast<int>(body)) == 1 &&
            EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_SET_TAG, kTagSize,
                                const_cast<std::uint8_t*>(cipher + body)) == 1 &&
            EVP_DecryptFinal_ex(ctx.get(), reinterpret_cast<unsigned char*>(plain.data()) + len, &len) == 1;
  if (!ok) fail(Errc::sealed, "sealed section failed authentication (wrong key or tampered data)");
  return plain;
}

}  // namespace vapt::crypto


namespace vapt {

nlohmann::json seal_section(const crypto::Key& key, std::string_view label, const nlohmann::json& content) {
  return {{"key_id", crypto::key_id(key)},
          {"label", std::string(label)},
          {"ciphertext", crypto::seal(key, label, content.dump())}};
}

nlohmann::json unseal_section(const crypto::Key& key, const nlohmann::json& section) {
  require(section.is_object() && section.contains("ciphertext") && section.contains("label"), Errc::parse,
          "malformed sealed section");
  require(section.value("key_id", "") == crypto::key_id(key), Errc::sealed, "sealed section was sealed under another key");
  std::string plain = crypto::unseal(key, section["label"].get<std::string>(), section["ciphertext"].get<std::string>());
  return nlohmann::json::parse(plain);
}

}  // namespace vapt
