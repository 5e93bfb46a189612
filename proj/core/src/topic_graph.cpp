#include "vapt/topic_graph.hpp"

#include <algorithm>
#include <map>
#include <mutex>

#include "vapt/parallel.hpp"
#include "vapt/prompts.hpp"
#include "vapt/text.hpp"

namespace vapt {

std::string_view to_string(LifeContext c) {
  switch (c) {
    case LifeContext::People: return "People";
    case LifeContext::Lifestyle: return "Lifestyle";
    case LifeContext::Education: return "Education";
    case LifeContext::Work: return "Work";
    case LifeContext::Culture: return "Culture";
    case LifeContext::Leisure: return "Leisure";
  }
  return "People";
}

LifeContext life_context_from_string(std::string_view s) {
  std::string want = text::normalize_label(s);
  for (LifeContext c : kLifeContexts)
    if (text::to_lower(to_string(c)) == want) return c;
  fail(Errc::invalid_argument, "unknown life context '" + std::string(s) + "'");
}

std::vector<Window> window_transcript(const std::vector<Message>& messages, std::size_t size, std::size_t stride) {
  require(size >= 2, Errc::invalid_argument, "window size must be at least 2");
  require(stride >= 1 && stride <= size, Errc::invalid_argument, "stride must be in [1, size]");
  std::vector<Window> out;
  const std::size_t n = messages.size();
  if (n == 0) return out;
  for (std::size_t offset = 0;; offset += stride) {
    std::size_t len = std::min(size, n - offset);
    if (len >= 2) {
      Window w;
      w.index = out.size();
      w.start_offset = offset;
      w.messages.assign(messages.begin() + static_cast<std::ptrdiff_t>(offset),
                        messages.begin() + static_cast<std::ptrdiff_t>(offset + len));
      out.push_back(std::move(w));
    }
    if (offset + size >= n) break;
  }
  return out;
}

std::size_t window_count(std::size_t n, std::size_t size, std::size_t stride) {
  require(size >= 2 && stride >= 1 && stride <= size, Errc::invalid_argument, "invalid window geometry");
  if (n < 2) return 0;
  std::size_t excess = n > size ? n - size : 0;
  std::size_t k = (excess + stride - 1) / stride;  // index of the last window
  std::size_t count = 1 + k;
  if (n - k * stride < 2) --count;
  return count;
}

namespace {

std::string render_window(const Window& w) {
  std::string out;
  for (std::size_t i = 0; i < w.messages.size(); ++i) {
    const Message& m = w.messages[i];
    out += "[" + std::to_string(w.start_offset + i) + "] ";
    out += m.role == MessageRole::participant ? "User: " : "Day: ";
    out += m.text;
    out += '\n';
  }
  return out;
}

}  // namespace

std::vector<TopicCandidate> extract_topics(Gateway& gateway, const ProviderProfile& profile, const Window& window,
                                           const std::string& request_key) {
  require(window.messages.size() >= 2, Errc::invalid_argument, "window needs at least 2 messages");
  StructuredRequest req;
  req.system_text = std::string(prompts::topic_extraction());
  req.prompt = "Window " + std::to_string(window.index) + ":\n" + render_window(window);
  req.schema_name = std::string(schema::kTopicExtraction);
  req.request_key = request_key;
  req.hints = {{"window", window.index}, {"start_offset", window.start_offset}, {"length", window.messages.size()}};

  json record = gateway.generate_structured(profile, req);
  std::vector<TopicCandidate> out;
  for (const auto& t : record["topics"]) {
    TopicCandidate c;
    c.label = t["label"].get<std::string>();
    for (const auto& ctx : t["contexts"]) {
      LifeContext lc = life_context_from_string(ctx.get<std::string>());
      if (std::find(c.contexts.begin(), c.contexts.end(), lc) == c.contexts.end()) c.contexts.push_back(lc);
    }
    out.push_back(std::move(c));
  }
  return out;
}

// ---------------------------------------------------------------------------

TopicRegistry::TopicRegistry(double tau) : tau_(tau) {
  require(tau > -1.0 && tau <= 1.0, Errc::invalid_argument, "tau must be in (-1, 1]");
}

CommitResult TopicRegistry::commit(const std::string& label, const EmbeddingVector& embedding,
                                   std::size_t window_index) {
  require(!label.empty(), Errc::invalid_argument, "topic label is empty");
  CommitResult r;
  std::optional<std::size_t> best;
  double best_sim = -2.0;
  for (std::size_t i = 0; i < topics_.size(); ++i) {
    require(topics_[i].representative.dim() == embedding.dim(), Errc::length_mismatch,
            "embedding dimension differs from registry");
    double sim = cosine_similarity(embedding, topics_[i].representative);
    // Strict comparison keeps the lowest id on exact ties.
    if (sim > best_sim) {
      best_sim = sim;
      best = i;
    }
  }
  r.similarity = best ? best_sim : 0.0;
  if (best && best_sim >= tau_) {
    Topic& t = topics_[*best];
    t.merge_count += 1;
    t.source_windows.insert(window_index);
    r.topic_id = t.id;
    r.merged = true;
    return r;
  }
  Topic t;
  t.id = static_cast<std::uint32_t>(topics_.size() + 1);
  t.label = label;
  t.representative = embedding;
  t.merge_count = 1;
  t.source_windows.insert(window_index);
  topics_.push_back(std::move(t));
  r.topic_id = topics_.back().id;
  return r;
}

const Topic& TopicRegistry::get(std::uint32_t id) const {
  require(id >= 1 && id <= topics_.size(), Errc::not_found, "unknown topic id " + std::to_string(id));
  return topics_[id - 1];
}

EmbeddingVector embed_label(Gateway& gateway, const ProviderProfile& profile, const std::string& label) {
  try {
    return gateway.embed_text(profile, label);
  } catch (const Error& e) {
    if (e.code() == Errc::invalid_argument) throw;
    return pseudo_embed(label, profile.embedding_dim);
  }
}

// ---------------------------------------------------------------------------

ValueNode value_node_from_record(std::uint32_t topic_id, LifeContext context, const json& record,
                                 const std::vector<EvidenceRef>& allowed) {
  ValueNode node;
  node.topic_id = topic_id;
  node.context = context;
  long long raw = record.at("sentiment").get<long long>();
  node.sentiment = static_cast<int>(std::clamp<long long>(raw, kSentimentMin, kSentimentMax));
  node.clamped = raw != node.sentiment;
  node.reasoning = record.at("reasoning").get<std::string>();
  std::set<EvidenceRef> seen;
  if (record.contains("evidence"))
    for (const auto& e : record["evidence"]) {
      EvidenceRef ref{e.at("window").get<std::size_t>(), e.at("offset").get<std::size_t>()};
      if (std::find(allowed.begin(), allowed.end(), ref) == allowed.end()) continue;
      if (seen.insert(ref).second) node.evidence.push_back(ref);
    }
  require(!node.evidence.empty(), Errc::evidence_required,
          "value node for topic " + std::to_string(topic_id) + "/" + std::string(to_string(context)) +
              " has no usable evidence");
  return node;
}

ValueNode score_value_node(Gateway& gateway, const ProviderProfile& profile, const Topic& topic, LifeContext context,
                           const std::vector<EvidenceRef>& candidates, const std::vector<Message>& messages,
                           const std::string& request_key) {
  require(!candidates.empty(), Errc::evidence_required, "no candidate evidence for topic '" + topic.label + "'");
  StructuredRequest req;
  req.system_text = std::string(prompts::value_node_scoring());
  std::string prompt = "Topic: " + topic.label + "\nLife context: " + std::string(to_string(context)) + "\n\nSnippets:\n";
  json hints = json::array();
  for (const auto& ref : candidates) {
    require(ref.offset < messages.size(), Errc::out_of_range, "evidence offset beyond transcript");
    const Message& m = messages[ref.offset];
    prompt += "(window " + std::to_string(ref.window) + ", offset " + std::to_string(ref.offset) + ") ";
    prompt += m.role == MessageRole::participant ? "User: " : "Day: ";
    prompt += m.text + "\n";
    hints.push_back({{"window", ref.window}, {"offset", ref.offset}});
  }
  req.prompt = std::move(prompt);
  req.schema_name = std::string(schema::kValueNode);
  req.request_key = request_key;
  req.hints = {{"evidence", hints}};
  json record = gateway.generate_structured(profile, req);
  return value_node_from_record(topic.id, context, record, candidates);
}

// ---------------------------------------------------------------------------

void TopicContextGraph::validate() const {
  std::set<std::pair<std::uint32_t, LifeContext>> pairs;
  for (const auto& t : topics) {
    require(!t.label.empty(), Errc::invalid_argument, "topic with empty label");
    require(t.merge_count >= 1, Errc::invalid_argument, "topic merge_count must be positive");
  }
  for (const auto& n : value_nodes) {
    require(find_topic(n.topic_id) != nullptr, Errc::not_found,
            "value node references missing topic " + std::to_string(n.topic_id));
    require(n.sentiment >= kSentimentMin && n.sentiment <= kSentimentMax, Errc::out_of_range,
            "sentiment outside [-7, 7]");
    require(!n.evidence.empty(), Errc::evidence_required, "value node without evidence");
    require(!n.reasoning.empty(), Errc::invalid_argument, "value node without reasoning");
    require(pairs.insert({n.topic_id, n.context}).second, Errc::duplicate, "duplicate (topic, context) value node");
  }
}

const Topic* TopicContextGraph::find_topic(std::uint32_t id) const {
  for (const auto& t : topics)
    if (t.id == id) return &t;
  return nullptr;
}

const ValueNode* TopicContextGraph::find_node(std::uint32_t topic_id, LifeContext context) const {
  for (const auto& n : value_nodes)
    if (n.topic_id == topic_id && n.context == context) return &n;
  return nullptr;
}

GraphSummary summarize_graph(const TopicContextGraph& graph) {
  GraphSummary s;
  s.total = graph.value_nodes.size();
  std::array<long long, 6> sum{};
  std::array<std::size_t, 6> pos{}, neg{};
  for (std::size_t i = 0; i < 6; ++i) s.contexts[i].context = kLifeContexts[i];
  for (const auto& n : graph.value_nodes) {
    auto i = static_cast<std::size_t>(n.context);
    s.contexts[i].count += 1;
    sum[i] += n.sentiment;
    if (n.sentiment > 0) ++pos[i];
    if (n.sentiment < 0) ++neg[i];
  }
  for (std::size_t i = 0; i < 6; ++i) {
    auto& c = s.contexts[i];
    if (c.count == 0) continue;
    double count = static_cast<double>(c.count);
    c.share_pct = 100.0 * count / static_cast<double>(s.total);
    c.mean_sentiment = static_cast<double>(sum[i]) / count;
    c.positive_pct = 100.0 * static_cast<double>(pos[i]) / count;
    c.negative_pct = 100.0 * static_cast<double>(neg[i]) / count;
  }
  return s;
}

json to_json(const GraphSummary& s) {
  json per = json::array();
  for (const auto& c : s.contexts)
    per.push_back({{"context", to_string(c.context)},
                   {"count", c.count},
                   {"share_pct", c.share_pct},
                   {"mean_sentiment", c.mean_sentiment},
                   {"positive_pct", c.positive_pct},
                   {"negative_pct", c.negative_pct}});
  return {{"total", s.total}, {"contexts", per}};
}

json export_graph(const TopicContextGraph& graph) {
  json j = json::object();
  j["contexts"] = json::array();
  for (LifeContext c : kLifeContexts) j["contexts"].push_back(to_string(c));
  j["topics"] = json::array();
  for (const auto& t : graph.topics)
    j["topics"].push_back({{"id", t.id}, {"label", t.label}, {"merge_count", t.merge_count},
                           {"source_windows", t.source_windows}});
  j["value_nodes"] = json::array();
  for (const auto& n : graph.value_nodes) {
    json ev = json::array();
    for (const auto& e : n.evidence) ev.push_back({{"window", e.window}, {"offset", e.offset}});
    json node{{"topic_id", n.topic_id},
              {"context", to_string(n.context)},
              {"sentiment", n.sentiment},
              {"reasoning", n.reasoning},
              {"evidence", ev}};
    if (n.clamped) node["clamped"] = true;
    j["value_nodes"].push_back(std::move(node));
  }
  j["summary"] = to_json(summarize_graph(graph));
  return j;
}

TopicContextGraph import_graph(const json& j) {
  TopicContextGraph g;
  try {
    for (const auto& t : j.at("topics")) {
      Topic topic;
      topic.id = t.at("id").get<std::uint32_t>();
      topic.label = t.at("label").get<std::string>();
      topic.merge_count = t.at("merge_count").get<std::uint32_t>();
      if (t.contains("source_windows")) topic.source_windows = t["source_windows"].get<std::set<std::size_t>>();
      g.topics.push_back(std::move(topic));
    }
    for (const auto& n : j.at("value_nodes")) {
      ValueNode node;
      node.topic_id = n.at("topic_id").get<std::uint32_t>();
      node.context = life_context_from_string(n.at("context").get<std::string>());
      node.sentiment = n.at("sentiment").get<int>();
      node.reasoning = n.at("reasoning").get<std::string>();
      for (const auto& e : n.at("evidence"))
        node.evidence.push_back({e.at("window").get<std::size_t>(), e.at("offset").get<std::size_t>()});
      node.clamped = n.value("clamped", false);
      g.value_nodes.push_back(std::move(node));
    }
  } catch (const json::exception& e) {
    fail(Errc::parse, std::string("graph file: ") + e.what());
  }
  g.validate();
  return g;
}

// ---------------------------------------------------------------------------

GraphRunResult build_topic_graph(Gateway& gateway, const ProviderProfile& extract_profile,
                                 const ProviderProfile& embed_profile, const ProviderProfile& score_profile,
                                 const std::vector<Message>& messages, const GraphPipelineOptions& options) {
  GraphRunResult result;
  std::vector<Window> windows = window_transcript(messages, options.window, options.stride);
  result.window_count = windows.size();

  // Stage 1: extraction, any completion order.
  std::vector<std::optional<std::vector<TopicCandidate>>> extracted(windows.size());
  parallel_for(windows.size(), options.concurrency, [&](std::size_t i) {
    try {
      extracted[i] = extract_topics(gateway, extract_profile, windows[i],
                                    options.request_scope + "/extract/w" + std::to_string(i));
    } catch (const Error&) {
      extracted[i].reset();
    }
  });

  // Stage 2: serial commits in (window, candidate) order.
  TopicRegistry registry(options.tau);
  std::map<std::string, EmbeddingVector> embedding_cache;
  // (topic, context) -> windows where the pair was suggested, in first-seen order.
  std::vector<std::pair<std::pair<std::uint32_t, LifeContext>, std::set<std::size_t>>> pairs;
  for (std::size_t w = 0; w < windows.size(); ++w) {
    if (!extracted[w]) {
      result.failed_windows.push_back(w);
      continue;
    }
    for (const auto& cand : *extracted[w]) {
      std::string label = text::normalize_label(cand.label);
      if (label.empty()) continue;
      auto it = embedding_cache.find(label);
      if (it == embedding_cache.end()) {
        EmbeddingVector v = embed_label(gateway, embed_profile, label);
        if (v.origin == EmbeddingOrigin::pseudo) ++result.pseudo_embeddings;
        it = embedding_cache.emplace(label, std::move(v)).first;
      }
      CommitResult c = registry.commit(label, it->second, w);
      result.commit_similarities.push_back(c.similarity);
      ++result.committed_candidates;
      for (LifeContext ctx : cand.contexts) {
        auto key = std::make_pair(c.topic_id, ctx);
        auto p = std::find_if(pairs.begin(), pairs.end(), [&](const auto& e) { return e.first == key; });
        if (p == pairs.end()) {
          pairs.push_back({key, {w}});
        } else {
          p->second.insert(w);
        }
      }
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  // Stage 3: value nodes, any completion order, stored by pair index.
  std::vector<std::optional<ValueNode>> nodes(pairs.size());
  std::vector<std::string> errors(pairs.size());
  parallel_for(pairs.size(), options.concurrency, [&](std::size_t i) {
    const auto& [key, wins] = pairs[i];
    std::vector<EvidenceRef> candidates;
    for (std::size_t w : wins) {
      const Window& win = windows[w];
      for (std::size_t k = 0; k < win.messages.size(); ++k)
        if (win.messages[k].role == MessageRole::participant) candidates.push_back({w, win.start_offset + k});
      if (candidates.empty())
        for (std::size_t k = 0; k < win.messages.size(); ++k) candidates.push_back({w, win.start_offset + k});
    }
    std::string id = std::to_string(key.first) + "/" + std::string(to_string(key.second));
    try {
      nodes[i] = score_value_node(gateway, score_profile, registry.get(key.first), key.second, candidates, messages,
                                  options.request_scope + "/node/" + id);
    } catch (const Error& e) {
      errors[i] = id + ": " + e.what();
    }
  });

  result.graph.topics = registry.topics();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (nodes[i])
      result.graph.value_nodes.push_back(std::move(*nodes[i]));
    else
      result.failed_nodes.push_back(errors[i]);
  }
  result.graph.validate();
  return result;
}

}  // namespace vapt
