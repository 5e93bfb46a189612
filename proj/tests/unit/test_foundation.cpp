#include <doctest.h>

#include <set>

#include "vapt/crypto.hpp"
#include "vapt/error.hpp"
#include "vapt/rng.hpp"
#include "vapt/sealed.hpp"
#include "vapt/text.hpp"
#include "vapt/time.hpp"

using namespace vapt;
using namespace std::chrono_literals;
using nlohmann::json;

TEST_SUITE("foundation") {
  TEST_CASE("rfc3339 round trip") {
    auto t = parse_rfc3339("2025-03-01T09:30:00Z");
    CHECK(format_rfc3339(t) == "2025-03-01T09:30:00.000Z");
    CHECK(parse_rfc3339("2025-03-01T10:30:00+01:00") == t);
    CHECK(parse_rfc3339("2025-03-01T09:30:00.250Z") - t == 250ms);
    CHECK_THROWS_AS(parse_rfc3339("yesterday"), Error);
    CHECK(minutes_between(t, t + 90s) == doctest::Approx(1.5));
  }

  TEST_CASE("countdown rounds up to whole seconds") {
    CHECK(format_countdown(3548000ms) == "59:08");
    CHECK(format_countdown(3547001ms) == "59:08");
    CHECK(format_countdown(251000ms) == "4:11");
    CHECK(format_countdown(0ms) == "0:00");
    CHECK(format_countdown(-5ms) == "0:00");
  }

  TEST_CASE("sha256 and hmac known answers") {
    CHECK(crypto::to_hex(crypto::sha256(std::string_view("abc"))) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    std::string key = "key";
    auto mac = crypto::hmac_sha256(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(key.data()), key.size()),
                                   "The quick brown fox jumps over the lazy dog");
    CHECK(crypto::to_hex(mac) == "f7bc83f430538424b13298e6aa6fb143ef4d59a14946175997479dbc2d1a3cd8");
  }

  TEST_CASE("base64 round trip") {
    for (std::string s : {"", "f", "fo", "foo", "foob", "fooba", "foobar"}) {
      std::vector<std::uint8_t> bytes(s.begin(), s.end());
      auto enc = crypto::base64_encode(bytes);
      CHECK(crypto::base64_decode(enc) == bytes);
    }
    CHECK(crypto::base64_encode(std::vector<std::uint8_t>{'f', 'o', 'o', 'b', 'a', 'r'}) == "Zm9vYmFy");
  }

  TEST_CASE("keys") {
    auto k = crypto::derive_key(7, "a");
    CHECK(k == crypto::derive_key(7, "a"));
    CHECK(k != crypto::derive_key(7, "b"));
    CHECK(k != crypto::derive_key(8, "a"));
    CHECK(crypto::key_from_hex(crypto::to_hex(k)) == k);
    CHECK(crypto::random_key() != crypto::random_key());
    CHECK(crypto::key_id(k).size() == 16);
    CHECK_THROWS_AS(crypto::key_from_hex("abc"), Error);
  }

  TEST_CASE("seal and unseal") {
    auto k = crypto::derive_key(1, "seal");
    auto sealed = crypto::seal(k, "label", "secret text");
    CHECK(crypto::unseal(k, "label", sealed) == "secret text");
    CHECK(sealed.find("secret") == std::string::npos);
    CHECK(crypto::seal(k, "label", "secret text") == sealed);
    CHECK(crypto::seal(k, "label", "other text") != sealed);
    CHECK_THROWS_AS(crypto::unseal(crypto::derive_key(2, "seal"), "label", sealed), Error);
    CHECK_THROWS_AS(crypto::unseal(k, "other-label", sealed), Error);
    auto tampered = sealed;
    tampered[20] = tampered[20] == 'A' ? 'B' : 'A';
    CHECK_THROWS_AS(crypto::unseal(k, "label", tampered), Error);
  }

  TEST_CASE("sealed sections check the key id") {
    auto k = crypto::derive_key(3, "x");
    json content{{"conditions", {"a", "b"}}};
    auto section = seal_section(k, "round-1", content);
    CHECK(unseal_section(k, section) == content);
    try {
      unseal_section(crypto::derive_key(4, "x"), section);
      FAIL("expected sealed error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::sealed);
    }
  }

  TEST_CASE("derived seeds and bounded draws") {
    CHECK(derive_seed(1, "a") == derive_seed(1, "a"));
    CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
    SeededRng rng(42);
    std::set<int> seen;
    for (int i = 0; i < 600; ++i) {
      int v = rng.between(1, 6);
      CHECK(v >= 1);
      CHECK(v <= 6);
      seen.insert(v);
    }
    CHECK(seen.size() == 6);
    std::vector<int> items{1, 2, 3, 4, 5};
    SeededRng a(9), b(9);
    auto x = items, y = items;
    a.shuffle(std::span<int>(x));
    b.shuffle(std::span<int>(y));
    CHECK(x == y);
    std::sort(x.begin(), x.end());
    CHECK(x == items);
  }

  TEST_CASE("text helpers") {
    CHECK(text::trim("  hi \n") == "hi");
    CHECK(text::normalize_label("  Family Dinners ") == "family dinners");
    CHECK(text::encode_utf8(text::decode_utf8("가족 éclair")) == "가족 éclair");
    CHECK(text::detect_language_tag("오늘은 가족과 저녁을 먹었어요") == "ko");
    CHECK(text::detect_language_tag("今日はいい天気ですね") == "ja");
    CHECK_FALSE(text::detect_language_tag("12345 !!").has_value());
  }
}
