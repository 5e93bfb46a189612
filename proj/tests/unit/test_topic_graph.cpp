#include <doctest.h>

#include <cmath>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"
#include "vapt/error.hpp"
#include "vapt/text.hpp"
#include "vapt/topic_graph.hpp"

using namespace vapt;
using fixture::error_of;

namespace {

std::vector<Message> messages(std::size_t n) {
  std::vector<Message> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back({i % 2 ? MessageRole::agent : MessageRole::participant, "m" + std::to_string(i),
                   fixture::epoch() + std::chrono::seconds(30 * i), "en"});
  return out;
}

EmbeddingVector vec(std::vector<double> v) { return {std::move(v), EmbeddingOrigin::remote}; }

Gateway& scripted(Gateway& gw, const json& script) {
  gw.set_mock_backend(std::make_shared<MockBackend>(MockScript::from_json(script)));
  return gw;
}

ValueNode node(std::uint32_t topic, LifeContext c, int sentiment) {
  ValueNode n;
  n.topic_id = topic;
  n.context = c;
  n.sentiment = sentiment;
  n.reasoning = "r";
  n.evidence = {{0, 1}};
  return n;
}

TopicContextGraph three_topic_graph() {
  TopicContextGraph g;
  for (std::uint32_t id = 1; id <= 3; ++id) {
    Topic t;
    t.id = id;
    t.label = "topic " + std::to_string(id);
    t.merge_count = id;
    t.source_windows = {id - 1, id + 2};
    g.topics.push_back(t);
  }
  g.value_nodes = {node(1, LifeContext::Work, 3), node(2, LifeContext::People, -2), node(3, LifeContext::Work, 7)};
  return g;
}

}  // namespace

TEST_SUITE("topic_graph") {
  TEST_CASE("windowing examples") {
    CHECK(window_transcript({}).empty());
    auto one = window_transcript(messages(4));
    REQUIRE(one.size() == 1);
    CHECK(one[0].start_offset == 0);
    CHECK(one[0].messages.size() == 4);

    auto ten = window_transcript(messages(10));
    REQUIRE(ten.size() == 3);
    CHECK(ten[0].start_offset == 0);
    CHECK(ten[1].start_offset == 3);
    CHECK(ten[2].start_offset == 6);
    CHECK(ten[2].messages.back().text == "m9");
  }

  TEST_CASE("window count agrees with enumeration") {
    for (std::size_t n = 0; n <= 50; ++n) {
      CAPTURE(n);
      CHECK(window_count(n) == oracle::window_count(n, 4, 3));
      CHECK(window_transcript(messages(n)).size() == oracle::window_count(n, 4, 3));
    }
  }

  TEST_CASE("windows overlap by size minus stride and have at least two messages") {
    auto w = window_transcript(messages(41));
    for (std::size_t i = 0; i < w.size(); ++i) {
      CHECK(w[i].index == i);
      CHECK(w[i].messages.size() >= 2);
      CHECK(w[i].start_offset == 3 * i);
      for (std::size_t k = 0; k < w[i].messages.size(); ++k)
        CHECK(w[i].messages[k].text == "m" + std::to_string(w[i].start_offset + k));
    }
  }

  TEST_CASE("topic extraction") {
    auto w = window_transcript(messages(4))[0];
    Gateway gw;
    scripted(gw, {{"structured",
                   {{"topic-extraction",
                     {{{"topics", {{{"label", "work life balance"}, {"contexts", {"Work"}}}}}},
                      {{"topics", json::array()}},
                      {{"topics",
                        {{{"label", "a"}, {"contexts", {"Work"}}},
                         {{"label", "b"}, {"contexts", {"Work"}}},
                         {{"label", "c"}, {"contexts", {"Work"}}}}}},
                      {{"topics",
                        {{{"label", "a"}, {"contexts", {"Work"}}},
                         {{"label", "b"}, {"contexts", {"Work"}}},
                         {{"label", "c"}, {"contexts", {"Work"}}}}}}}}}}});
    auto first = extract_topics(gw, mock_profile(), w, "w0");
    REQUIRE(first.size() == 1);
    CHECK(first[0].label == "work life balance");
    CHECK(first[0].contexts == std::vector<LifeContext>{LifeContext::Work});
    CHECK(extract_topics(gw, mock_profile(), w, "w1").empty());
    CHECK(error_of([&] { extract_topics(gw, mock_profile(), w, "w2"); }) == Errc::schema_violation);
  }

  TEST_CASE("registry merge and creation") {
    TopicRegistry reg(0.7);
    auto a = reg.commit("career", vec({1, 0, 0}), 0);
    CHECK_FALSE(a.merged);
    auto same = reg.commit("career", vec({1, 0, 0}), 1);
    CHECK(same.merged);
    CHECK(same.similarity == doctest::Approx(1.0));
    CHECK(reg.get(a.topic_id).merge_count == 2);
    CHECK(reg.get(a.topic_id).source_windows == std::set<std::size_t>{0, 1});
    auto ortho = reg.commit("family", vec({0, 1, 0}), 2);
    CHECK_FALSE(ortho.merged);
    CHECK(ortho.similarity == doctest::Approx(0.0));
    CHECK(reg.topics().size() == 2);
    CHECK(error_of([&] { reg.commit("x", vec({1, 0}), 3); }) == Errc::length_mismatch);
  }

  TEST_CASE("registry picks the best match with ties going to the lower id") {
    std::vector<std::vector<double>> base{{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}, {-1, -1, -1, -1}};
    TopicRegistry reg(0.3);
    for (std::size_t i = 0; i < base.size(); ++i) {
      auto r = reg.commit("t" + std::to_string(i), vec(base[i]), i);
      REQUIRE_FALSE(r.merged);
    }
    auto oracle_pick = [&](const std::vector<double>& q) -> std::optional<std::uint32_t> {
      std::optional<std::uint32_t> best;
      double best_sim = 0.0;
      for (std::size_t i = 0; i < base.size(); ++i) {
        double dot = 0, na = 0, nb = 0;
        for (std::size_t k = 0; k < q.size(); ++k) {
          dot += q[k] * base[i][k];
          na += q[k] * q[k];
          nb += base[i][k] * base[i][k];
        }
        double sim = dot / std::sqrt(na * nb);
        if (sim >= 0.3 && (!best || sim > best_sim + 1e-12)) {
          best = static_cast<std::uint32_t>(i + 1);
          best_sim = sim;
        }
      }
      return best;
    };
    std::vector<std::vector<double>> queries{{1, 1, 0, 0}, {0, 0, 1, 1}, {1, 0.2, 0, 0}, {0.1, 0.1, 0.1, 3},
                                             {1, 1, 1, 0.9}, {0, 1, 1, 0}};
    for (const auto& q : queries) {
      TopicRegistry copy = reg;
      auto r = copy.commit("q", vec(q), 99);
      auto expected = oracle_pick(q);
      CHECK(r.merged == expected.has_value());
      if (expected) CHECK(r.topic_id == *expected);
    }
  }

  TEST_CASE("embedding outage falls back to pseudo embeddings") {
    Gateway gw;
    scripted(gw, {{"embeddings_unavailable", true}});
    auto e = embed_label(gw, mock_profile(), "career change");
    CHECK(e.origin == EmbeddingOrigin::pseudo);
    CHECK(e.values == pseudo_embed("career change", mock_profile().embedding_dim).values);
  }

  TEST_CASE("value node records") {
    std::vector<EvidenceRef> allowed{{0, 2}, {1, 4}};
    auto n = value_node_from_record(
        1, LifeContext::Education,
        {{"sentiment", -5}, {"reasoning", "dislikes public napping"}, {"evidence", {{{"window", 0}, {"offset", 2}}}}},
        allowed);
    CHECK(n.sentiment == -5);
    CHECK_FALSE(n.clamped);
    CHECK(n.evidence == std::vector<EvidenceRef>{{0, 2}});

    auto hot = value_node_from_record(
        1, LifeContext::Work, {{"sentiment", 9}, {"reasoning", "r"}, {"evidence", {{{"window", 1}, {"offset", 4}}}}},
        allowed);
    CHECK(hot.sentiment == 7);
    CHECK(hot.clamped);
    auto cold = value_node_from_record(
        1, LifeContext::Work, {{"sentiment", -12}, {"reasoning", "r"}, {"evidence", {{{"window", 1}, {"offset", 4}}}}},
        allowed);
    CHECK(cold.sentiment == -7);

    CHECK(error_of([&] {
            value_node_from_record(1, LifeContext::Work, {{"sentiment", 1}, {"reasoning", "r"}}, allowed);
          }) == Errc::evidence_required);
    CHECK(error_of([&] {
            value_node_from_record(1, LifeContext::Work,
                                   {{"sentiment", 1}, {"reasoning", "r"}, {"evidence", {{{"window", 7}, {"offset", 7}}}}},
                                   allowed);
          }) == Errc::evidence_required);
  }

  TEST_CASE("graph validation") {
    auto g = three_topic_graph();
    CHECK_NOTHROW(g.validate());
    g.value_nodes.push_back(node(1, LifeContext::Work, 1));
    CHECK_THROWS_AS(g.validate(), Error);
    g = three_topic_graph();
    g.value_nodes.push_back(node(9, LifeContext::Work, 1));
    CHECK_THROWS_AS(g.validate(), Error);
  }

  TEST_CASE("context shares") {
    TopicContextGraph g;
    const std::array<std::pair<LifeContext, int>, 6> counts{{{LifeContext::People, 517},
                                                             {LifeContext::Lifestyle, 486},
                                                             {LifeContext::Leisure, 411},
                                                             {LifeContext::Work, 360},
                                                             {LifeContext::Education, 295},
                                                             {LifeContext::Culture, 138}}};
    std::uint32_t id = 0;
    for (auto [ctx, n] : counts)
      for (int i = 0; i < n; ++i) {
        Topic t;
        t.id = ++id;
        t.label = "t" + std::to_string(id);
        g.topics.push_back(t);
        g.value_nodes.push_back(node(id, ctx, 1));
      }
    auto s = summarize_graph(g);
    CHECK(s.total == 2207);
    auto share = [&](LifeContext c) {
      return std::round(s.contexts[static_cast<std::size_t>(c)].share_pct * 10.0) / 10.0;
    };
    CHECK(share(LifeContext::People) == doctest::Approx(23.4));
    CHECK(share(LifeContext::Lifestyle) == doctest::Approx(22.0));
    CHECK(share(LifeContext::Leisure) == doctest::Approx(18.6));
    CHECK(share(LifeContext::Work) == doctest::Approx(16.3));
    CHECK(share(LifeContext::Education) == doctest::Approx(13.4));
    CHECK(share(LifeContext::Culture) == doctest::Approx(6.3));
  }

  TEST_CASE("summary of empty and single node graphs") {
    auto empty = summarize_graph({});
    CHECK(empty.total == 0);
    for (const auto& c : empty.contexts) {
      CHECK(c.count == 0);
      CHECK(c.share_pct == 0.0);
      CHECK(c.mean_sentiment == 0.0);
    }
    TopicContextGraph g;
    Topic t;
    t.id = 1;
    t.label = "x";
    g.topics.push_back(t);
    g.value_nodes.push_back(node(1, LifeContext::Leisure, 4));
    auto s = summarize_graph(g);
    const auto& leisure = s.contexts[static_cast<std::size_t>(LifeContext::Leisure)];
    CHECK(leisure.mean_sentiment == doctest::Approx(4.0));
    CHECK(leisure.positive_pct == doctest::Approx(100.0));
    CHECK(leisure.share_pct == doctest::Approx(100.0));
  }

  TEST_CASE("export and import") {
    auto g = three_topic_graph();
    auto exported = export_graph(g);
    auto back = import_graph(exported);
    CHECK(export_graph(back).dump() == exported.dump());
    CHECK(back.topics.size() == 3);
    CHECK(back.value_nodes.size() == 3);
    CHECK(export_graph(g).dump(2) == exported.dump(2));

    auto empty = export_graph({});
    CHECK(empty["topics"].empty());
    CHECK(empty["value_nodes"].empty());
    CHECK(import_graph(empty).topics.empty());
    CHECK(error_of([] { import_graph(json{{"topics", 3}}); }) == Errc::parse);
  }

  TEST_CASE("life context names") {
    for (auto c : kLifeContexts) CHECK(life_context_from_string(to_string(c)) == c);
    CHECK(life_context_from_string("work") == LifeContext::Work);
    CHECK_THROWS_AS(life_context_from_string("Sports"), Error);
  }

  TEST_CASE("pipeline invariants on a synthetic transcript") {
    auto t = fixture::synthetic_transcript("P01", 21, 4, 20);
    auto msgs = t.messages();
    auto run = [&](std::optional<std::uint64_t> shuffle) {
      auto gw = fixture::mock_gateway(5, shuffle);
      auto p = mock_profile();
      return build_topic_graph(*gw, p, p, p, msgs);
    };
    auto r = run(std::nullopt);
    CHECK(r.window_count == oracle::window_count(msgs.size(), 4, 3));
    CHECK(r.failed_windows.empty());
    CHECK_NOTHROW(r.graph.validate());
    REQUIRE_FALSE(r.graph.topics.empty());

    for (std::size_t i = 0; i < r.graph.topics.size(); ++i)
      for (std::size_t j = i + 1; j < r.graph.topics.size(); ++j)
        CHECK(cosine_similarity(r.graph.topics[i].representative, r.graph.topics[j].representative) < 0.7);

    for (const auto& n : r.graph.value_nodes) {
      CHECK(n.sentiment >= kSentimentMin);
      CHECK(n.sentiment <= kSentimentMax);
      CHECK_FALSE(n.evidence.empty());
      CHECK_FALSE(n.reasoning.empty());
      for (const auto& e : n.evidence) CHECK(e.offset < msgs.size());
    }
    for (const auto& topic : r.graph.topics) {
      CHECK(topic.merge_count >= 1);
      CHECK(topic.label == text::normalize_label(topic.label));
    }

    CHECK(export_graph(run(std::nullopt).graph).dump() == export_graph(r.graph).dump());
    CHECK(export_graph(run(17).graph).dump() == export_graph(r.graph).dump());
  }
}
