#include <doctest.h>

#include <chrono>
#include <cmath>

#include "vapt/error.hpp"
#include "vapt/provider.hpp"
#include "vapt/topic_graph.hpp"

using namespace vapt;

namespace {

std::shared_ptr<MockBackend> install(Gateway& gw, const json& script) {
  auto backend = std::make_shared<MockBackend>(MockScript::from_json(script));
  gw.set_mock_backend(backend);
  return backend;
}

PromptBundle bundle(const std::string& key) {
  PromptBundle b;
  b.system_text = "You are a test.";
  b.turns = {{TurnRole::user, "hello"}};
  b.request_key = key;
  return b;
}

json item_answer(int score) {
  return {{"embodied_response", "I like new things."},
          {"score", score},
          {"confidence", 0.9},
          {"evidence_snippets", json::array({"s0"})}};
}

StructuredRequest item_request() {
  StructuredRequest r;
  r.system_text = "sys";
  r.prompt = "answer";
  r.schema_name = std::string(schema::kPvqItemAnswer);
  r.request_key = "item/10";
  return r;
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::io;
}

}  // namespace

TEST_SUITE("provider") {
  TEST_CASE("profile validation and json round trip") {
    auto p = mock_profile("m");
    CHECK_NOTHROW(p.validate());
    json j = p;
    auto back = j.get<ProviderProfile>();
    CHECK(back.name == "m");
    CHECK(back.embedding_dim == p.embedding_dim);
    p.retry_limit = 9;
    CHECK_THROWS_AS(p.validate(), Error);
    p = mock_profile();
    p.model_id.clear();
    CHECK_THROWS_AS(p.validate(), Error);
  }

  TEST_CASE("scripted chat queue and keyed entries") {
    Gateway gw;
    install(gw, {{"chat", {"first", "second"}}, {"chat_keyed", {{"special", {"keyed reply"}}}}});
    auto p = mock_profile();
    CHECK(gw.complete_chat(p, bundle("a")) == "first");
    CHECK(gw.complete_chat(p, bundle("special")) == "keyed reply");
    CHECK(gw.complete_chat(p, bundle("b")) == "second");
    CHECK(code_of([&] { gw.complete_chat(p, bundle("c")); }) == Errc::script_exhausted);
  }

  TEST_CASE("network failures are retried, refusals are not") {
    Gateway gw;
    install(gw, {{"chat", {{{"$error", "network"}}, "recovered", {{"$error", "refusal"}}, "after refusal"}}});
    auto p = mock_profile();
    p.retry_limit = 1;
    CHECK(gw.complete_chat(p, bundle("a")) == "recovered");
    CHECK(gw.call_log()->attempts("complete_chat") == 2);
    CHECK(code_of([&] { gw.complete_chat(p, bundle("b")); }) == Errc::provider_refusal);
    CHECK(gw.complete_chat(p, bundle("c")) == "after refusal");
  }

  TEST_CASE("retry budget exhausted surfaces the failure") {
    Gateway gw;
    install(gw, {{"chat", {{{"$error", "unavailable"}}, {{"$error", "unavailable"}}, "late"}}});
    auto p = mock_profile();
    p.retry_limit = 1;
    CHECK(code_of([&] { gw.complete_chat(p, bundle("a")); }) == Errc::provider_unavailable);
  }

  TEST_CASE("structured output is reprompted once with the validation error") {
    Gateway gw;
    auto backend = install(gw, {{"structured", {{"pvq-item-answer", {item_answer(0), item_answer(6)}}}}});
    auto out = gw.generate_structured(mock_profile(), item_request());
    CHECK(out["score"] == 6);
    auto calls = backend->calls();
    REQUIRE(calls.size() == 2);
    CHECK(calls[1].prompt.find("score 0 out of range 1..6") != std::string::npos);
  }

  TEST_CASE("two invalid answers raise a schema violation") {
    Gateway gw;
    json missing = item_answer(3);
    missing.erase("evidence_snippets");
    install(gw, {{"structured", {{"pvq-item-answer", {missing, missing}}}}});
    CHECK(code_of([&] { gw.generate_structured(mock_profile(), item_request()); }) == Errc::schema_violation);
  }

  TEST_CASE("fenced json is accepted") {
    CHECK(parse_model_json("```json\n{\"a\": 1}\n```")["a"] == 1);
    CHECK(parse_model_json("{\"a\": 2}")["a"] == 2);
    CHECK_THROWS_AS(parse_model_json("not json"), Error);
  }

  TEST_CASE("schemas") {
    SchemaRegistry reg;
    json three = {{"topics",
                   json::array({{{"label", "a"}, {"contexts", {"Work"}}},
                                {{"label", "b"}, {"contexts", {"Work"}}},
                                {{"label", "c"}, {"contexts", {"Work"}}}})}};
    auto err = reg.validate(schema::kTopicExtraction, three);
    REQUIRE(err);
    CHECK(err->find("max two topics") != std::string::npos);
    CHECK_FALSE(reg.validate(schema::kTopicExtraction, {{"topics", json::array()}}));
    CHECK(reg.validate(schema::kTopicExtraction,
                       {{"topics", json::array({{{"label", "a"}, {"contexts", {"Space"}}}})}}));
    CHECK_FALSE(reg.validate(schema::kValueNode, {{"sentiment", 3}, {"reasoning", "r"}}));
    CHECK(reg.validate(schema::kValueNode, {{"sentiment", 3.5}, {"reasoning", "r"}}));
    CHECK(reg.validate(schema::kPvqItemAnswer, item_answer(7)));
    CHECK_FALSE(reg.validate(schema::kPvqItemAnswer, item_answer(6)));
    CHECK(reg.contains("strategy"));
    CHECK_FALSE(reg.contains("nope"));
  }

  TEST_CASE("missing credentials are reported before any request") {
    Gateway gw;
    ProviderProfile p;
    p.name = "remote";
    p.endpoint = "https://127.0.0.1:9/v1";
    p.model_id = "m";
    p.auth_env_var = "VAPT_TEST_UNSET_CREDENTIAL";
    CHECK(code_of([&] { gw.complete_chat(p, bundle("a")); }) == Errc::credential_missing);
  }

  TEST_CASE("pseudo embeddings") {
    auto a = pseudo_embed("family dinners", 64);
    auto b = pseudo_embed("family dinners", 64);
    auto c = pseudo_embed("Family dinners", 64);
    CHECK(a.dim() == 64);
    CHECK(a.origin == EmbeddingOrigin::pseudo);
    CHECK(a.values == b.values);
    CHECK(a.values != c.values);
    double norm = 0;
    for (double v : a.values) norm += v * v;
    CHECK(norm == doctest::Approx(1.0));
    CHECK(cosine_similarity(a, b) == doctest::Approx(1.0));
    CHECK(std::abs(cosine_similarity(a, pseudo_embed("career growth", 64))) < 0.7);
  }

  TEST_CASE("embedding outage falls back to pseudo vectors") {
    Gateway gw;
    install(gw, {{"embeddings_unavailable", true}});
    auto p = mock_profile();
    p.embedding_dim = 32;
    auto v = embed_label(gw, p, "travel");
    CHECK(v.origin == EmbeddingOrigin::pseudo);
    CHECK(v.values == pseudo_embed("travel", 32).values);
  }

  TEST_CASE("scripted embeddings come back as remote vectors") {
    Gateway gw;
    install(gw, {{"embeddings", {{"travel", {1.0, 0.0}}}}});
    auto p = mock_profile();
    p.embedding_dim = 2;
    auto v = gw.embed_text(p, "travel");
    CHECK(v.origin == EmbeddingOrigin::remote);
    CHECK(v.values == std::vector<double>{1.0, 0.0});
  }

  TEST_CASE("rate limit spaces calls") {
    Gateway gw;
    install(gw, {{"synthesize", true}});
    auto p = mock_profile();
    p.requests_per_minute = 1200;  // 50 ms apart
    auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < 4; ++i) gw.complete_chat(p, bundle("k" + std::to_string(i)));
    auto elapsed = std::chrono::steady_clock::now() - start;
    CHECK(elapsed >= std::chrono::milliseconds(140));
  }
}
