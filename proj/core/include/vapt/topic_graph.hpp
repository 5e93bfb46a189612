#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "vapt/chat.hpp"
#include "vapt/provider.hpp"

namespace vapt {

enum class LifeContext { People, Lifestyle, Education, Work, Culture, Leisure };

inline constexpr std::array<LifeContext, 6> kLifeContexts{LifeContext::People,  LifeContext::Lifestyle,
                                                          LifeContext::Education, LifeContext::Work,
                                                          LifeContext::Culture, LifeContext::Leisure};

std::string_view to_string(LifeContext c);
// Case-insensitive.
LifeContext life_context_from_string(std::string_view s);

struct Window {
  std::size_t index = 0;
  std::size_t start_offset = 0;
  std::vector<Message> messages;
};

// Offsets 0, stride, 2*stride, ... until a window reaches the last message.
// Trailing windows shorter than 2 messages are dropped.
std::vector<Window> window_transcript(const std::vector<Message>& messages, std::size_t size = 4,
                                      std::size_t stride = 3);

// Closed form of window_transcript(...).size().
std::size_t window_count(std::size_t n, std::size_t size = 4, std::size_t stride = 3);

struct TopicCandidate {
  std::string label;
  std::vector<LifeContext> contexts;
};

// At most two candidates. Throws on provider failure or schema violation.
std::vector<TopicCandidate> extract_topics(Gateway& gateway, const ProviderProfile& profile, const Window& window,
                                           const std::string& request_key);

struct Topic {
  std::uint32_t id = 0;
  std::string label;
  EmbeddingVector representative;
  std::uint32_t merge_count = 1;
  std::set<std::size_t> source_windows;
};

struct CommitResult {
  std::uint32_t topic_id = 0;
  bool merged = false;
  double similarity = 0.0;  // best match against the registry before the commit
};

class TopicRegistry {
 public:
  explicit TopicRegistry(double tau = 0.7);

  // `label` must already be normalized.
  CommitResult commit(const std::string& label, const EmbeddingVector& embedding, std::size_t window_index);

  const std::vector<Topic>& topics() const { return topics_; }
  double tau() const { return tau_; }
  const Topic& get(std::uint32_t id) const;

 private:
  double tau_;
  std::vector<Topic> topics_;
};

// Remote embedding with fallback to pseudo_embed on provider failure.
EmbeddingVector embed_label(Gateway& gateway, const ProviderProfile& profile, const std::string& label);

struct EvidenceRef {
  std::size_t window = 0;
  std::size_t offset = 0;  // message index in the transcript
  bool operator==(const EvidenceRef&) const = default;
  auto operator<=>(const EvidenceRef&) const = default;
};

struct ValueNode {
  std::uint32_t topic_id = 0;
  LifeContext context = LifeContext::People;
  int sentiment = 0;
  std::string reasoning;
  std::vector<EvidenceRef> evidence;
  bool clamped = false;
};

inline constexpr int kSentimentMin = -7;
inline constexpr int kSentimentMax = 7;

// `record` is a validated value-node payload. Clamps sentiment to [-7, 7]
// and drops evidence outside `allowed`. Throws evidence_required when nothing
// is left.
ValueNode value_node_from_record(std::uint32_t topic_id, LifeContext context, const json& record,
                                 const std::vector<EvidenceRef>& allowed);

ValueNode score_value_node(Gateway& gateway, const ProviderProfile& profile, const Topic& topic, LifeContext context,
                           const std::vector<EvidenceRef>& candidates, const std::vector<Message>& messages,
                           const std::string& request_key);

struct TopicContextGraph {
  std::vector<Topic> topics;
  std::vector<ValueNode> value_nodes;

  void validate() const;
  const Topic* find_topic(std::uint32_t id) const;
  const ValueNode* find_node(std::uint32_t topic_id, LifeContext context) const;
};

struct ContextSummary {
  LifeContext context = LifeContext::People;
  std::size_t count = 0;
  double share_pct = 0.0;
  double mean_sentiment = 0.0;
  double positive_pct = 0.0;
  double negative_pct = 0.0;
};

struct GraphSummary {
  std::size_t total = 0;
  std::array<ContextSummary, 6> contexts{};
};

GraphSummary summarize_graph(const TopicContextGraph& graph);
json to_json(const GraphSummary& s);

json export_graph(const TopicContextGraph& graph);
TopicContextGraph import_graph(const json& j);

struct GraphPipelineOptions {
  std::size_t window = 4;
  std::size_t stride = 3;
  double tau = 0.7;
  std::size_t concurrency = 4;
  std::string request_scope = "graph";
};

struct GraphRunResult {
  TopicContextGraph graph;
  std::size_t window_count = 0;
  std::vector<std::size_t> failed_windows;
  std::vector<std::string> failed_nodes;
  std::size_t committed_candidates = 0;
  std::size_t pseudo_embeddings = 0;
  std::vector<double> commit_similarities;
};

// Extraction and scoring run concurrently; registry commits are applied in
// (window, candidate) order.
GraphRunResult build_topic_graph(Gateway& gateway, const ProviderProfile& extract_profile,
                                 const ProviderProfile& embed_profile, const ProviderProfile& score_profile,
                                 const std::vector<Message>& messages, const GraphPipelineOptions& options = {});

}  // namespace vapt
