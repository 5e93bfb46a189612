#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vapt/chat.hpp"
#include "vapt/crypto.hpp"
#include "vapt/provider.hpp"

namespace vapt {

inline constexpr std::size_t kValueCount = 19;
inline constexpr std::size_t kItemCount = 57;

enum class SchwartzValue {
  SDT, SDA, ST, HE, AC, POD, POR, FAC, SEP, SES, TR, COR, COI, HUM, UNN, UNC, UNT, BEC, BED
};

struct ValueInfo {
  SchwartzValue value;
  std::string_view code;
  std::string_view name;
  std::string_view description;
  std::array<int, 3> items;  // 1-based PVQ-RR item indices
};

const std::array<ValueInfo, kValueCount>& value_table();
const ValueInfo& value_info(SchwartzValue v);
// Accepts a code ("UNC") or a display name ("Universalism-Concern").
SchwartzValue value_from_string(std::string_view s);

enum class Form { female, male };
std::string_view to_string(Form f);
Form form_from_string(std::string_view s);

struct PvqItem {
  int index = 0;
  SchwartzValue value = SchwartzValue::SDT;
  std::string text_female;
  std::string text_male;

  const std::string& text(Form f) const { return f == Form::male ? text_male : text_female; }
};

class ItemBank {
 public:
  static ItemBank from_json(const json& j);
  static ItemBank load(const std::filesystem::path& path);
  // Bank shipped in the data directory (VAPT_DATA_DIR overrides).
  static ItemBank bundled();

  const std::vector<PvqItem>& items() const { return items_; }
  const PvqItem& item(int index) const;

 private:
  std::vector<PvqItem> items_;  // sorted by index
};

std::filesystem::path data_dir();

enum class Respondent { human, llm };

struct ResponseSet {
  Form form = Form::female;
  Respondent respondent = Respondent::human;
  std::array<int, kItemCount> scores{};  // scores[i] answers item i+1

  void validate() const;
  bool operator==(const ResponseSet&) const = default;
};

void to_json(json& j, const ResponseSet& r);
void from_json(const json& j, ResponseSet& r);

enum class ProfileSource { manual, llm, anti_manual, anti_llm, random };
std::string_view to_string(ProfileSource s);
ProfileSource profile_source_from_string(std::string_view s);

struct ValueProfile {
  ProfileSource source = ProfileSource::manual;
  std::optional<std::array<int, kItemCount>> scores;
  std::array<double, kValueCount> value_means{};
  double mrat = 0.0;
  std::array<double, kValueCount> centered{};

  double centered_of(SchwartzValue v) const { return centered[static_cast<std::size_t>(v)]; }
  bool operator==(const ValueProfile&) const = default;
};

void to_json(json& j, const ValueProfile& p);
void from_json(const json& j, ValueProfile& p);

ValueProfile score_profile(const ResponseSet& responses, ProfileSource source);

// Negates centered scores; display means become mrat - centered, clamped to [1, 6].
ValueProfile anti_profile(const ValueProfile& p);

// Uniform integer answers 1..6 drawn from `seed`.
ResponseSet random_responses(std::uint64_t seed, Form form = Form::female);

struct ConflictFlag {
  SchwartzValue value;
  double score_a = 0.0;
  double score_b = 0.0;
  double gap = 0.0;
  double threshold = 0.0;
};

json to_json(const ConflictFlag& f);

// Values with |a - b| >= threshold, largest gap first (ties by value order).
std::vector<ConflictFlag> detect_conflicts(const ValueProfile& a, const ValueProfile& b, double threshold = 1.0);

// ---------------------------------------------------------------------------
// LLM as respondent

struct LlmItemAnswer {
  int item = 0;
  std::string embodied_response;
  int score = 0;
  double confidence = 0.0;
  std::vector<std::string> evidence;
  std::string reasoning;

  bool operator==(const LlmItemAnswer&) const = default;
};

void to_json(json& j, const LlmItemAnswer& a);
void from_json(const json& j, LlmItemAnswer& a);

// Most frequent language tag among participant messages.
std::optional<std::string> dominant_language(const std::vector<Message>& messages);

// Snippet ids are "s<offset>" for each transcript message.
std::string snippet_id(std::size_t offset);

LlmItemAnswer llm_answer_item(Gateway& gateway, const ProviderProfile& profile, const PvqItem& item, Form form,
                              const std::vector<Message>& transcript, const std::string& request_key);

struct ThinkingLog {
  std::map<int, LlmItemAnswer> answers;

  bool complete() const { return answers.size() == kItemCount; }
  bool operator==(const ThinkingLog&) const = default;
};

json to_json(const ThinkingLog& log);
ThinkingLog thinking_log_from_json(const json& j);

// Per-item comparison rows for the thinking-log browser. Tag is SIMILAR when
// the two scores differ by at most one point.
json thinking_log_view(const ThinkingLog& log, const ItemBank& bank, const std::optional<ResponseSet>& human,
                       Form form);

// Consecutive item groups of `batch_size` over items 1..n.
std::vector<std::vector<int>> batch_layout(std::size_t n_items, std::size_t batch_size);

struct SurveyRunOptions {
  std::size_t batch_size = 8;
  Form form = Form::female;
  std::string request_scope = "pvq";
};

struct SurveyRunResult {
  ThinkingLog log;
  std::vector<int> failed_items;
  std::optional<ResponseSet> responses;  // set only when all items succeeded
  std::size_t batches = 0;

  bool complete() const { return failed_items.empty() && log.complete(); }
};

SurveyRunResult run_llm_survey(Gateway& gateway, const ProviderProfile& profile, const ItemBank& bank,
                               const std::vector<Message>& transcript, const SurveyRunOptions& options = {});

// ---------------------------------------------------------------------------
// Blind chart pairs

enum class ChartLabel { Manual, AntiManual, LLM, AntiLLM };
std::string_view to_string(ChartLabel l);

struct ChartSide {
  ChartLabel label;
  std::array<double, kValueCount> centered{};
};

struct ChartPair {
  int index = 1;  // 1..3
  ChartSide a;
  ChartSide b;
};

// (Manual, Anti-Manual), (LLM, Anti-LLM), (Manual, LLM); sides flipped by seed.
std::vector<ChartPair> build_chart_comparisons(const ValueProfile& manual, const ValueProfile& llm, std::uint64_t seed);

// Public payload carries only centered arrays; labels go into a sealed section.
json seal_chart_pairs(const std::vector<ChartPair>& pairs, const crypto::Key& key);
// {"A": "Manual", "B": "LLM"} for one pair of a sealed payload.
json reveal_chart_pair(const json& sealed_pairs, const crypto::Key& key, int pair_index);

}  // namespace vapt
