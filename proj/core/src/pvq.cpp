#include "vapt/pvq.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "vapt/prompts.hpp"
#include "vapt/rng.hpp"
#include "vapt/sealed.hpp"
#include "vapt/text.hpp"

namespace vapt {

const std::array<ValueInfo, kValueCount>& value_table() {
  static const std::array<ValueInfo, kValueCount> table{{
      {SchwartzValue::SDT, "SDT", "Self-direction Thought", "Freedom to develop own ideas and abilities", {1, 23, 39}},
      {SchwartzValue::SDA, "SDA", "Self-direction Action", "Freedom to determine own actions", {16, 30, 56}},
      {SchwartzValue::ST, "ST", "Stimulation", "Excitement, novelty, challenge", {10, 28, 43}},
      {SchwartzValue::HE, "HE", "Hedonism", "Pleasure and sensuous gratification", {3, 36, 46}},
      {SchwartzValue::AC, "AC", "Achievement", "Personal success through competence", {17, 32, 48}},
      {SchwartzValue::POD, "POD", "Power Dominance", "Power through dominance over people", {6, 29, 41}},
      {SchwartzValue::POR, "POR", "Power Resources", "Power through material resources", {12, 20, 44}},
      {SchwartzValue::FAC, "FAC", "Face", "Security and power through image", {9, 24, 49}},
      {SchwartzValue::SEP, "SEP", "Security Personal", "Safety in immediate environment", {13, 26, 53}},
      {SchwartzValue::SES, "SES", "Security Societal", "Safety and stability of society", {2, 35, 50}},
      {SchwartzValue::TR, "TR", "Tradition", "Respect for cultural/religious customs", {18, 33, 40}},
      {SchwartzValue::COR, "COR", "Conformity-Rules", "Compliance with rules and laws", {15, 31, 42}},
      {SchwartzValue::COI, "COI", "Conformity-Interpersonal", "Avoiding upsetting others", {4, 22, 51}},
      {SchwartzValue::HUM, "HUM", "Humility", "Acceptance of position and modesty", {7, 38, 54}},
      {SchwartzValue::UNN, "UNN", "Universalism-Nature", "Protecting the natural environment", {8, 21, 45}},
      {SchwartzValue::UNC, "UNC", "Universalism-Concern", "Commitment to equality and justice", {14, 34, 57}},
      {SchwartzValue::UNT, "UNT", "Universalism-Tolerance", "Tolerance and understanding", {5, 37, 52}},
      {SchwartzValue::BEC, "BEC", "Benevolence-Care", "Devotion to welfare of ingroup", {11, 25, 47}},
      {SchwartzValue::BED, "BED", "Benevolence-Dependability", "Being a reliable group member", {19, 27, 55}},
  }};
  return table;
}

const ValueInfo& value_info(SchwartzValue v) { return value_table()[static_cast<std::size_t>(v)]; }

SchwartzValue value_from_string(std::string_view s) {
  std::string want = text::normalize_label(s);
  for (const auto& info : value_table())
    if (text::to_lower(info.code) == want || text::to_lower(info.name) == want) return info.value;
  fail(Errc::invalid_argument, "unknown Schwartz value '" + std::string(s) + "'");
}

std::string_view to_string(Form f) { return f == Form::male ? "male" : "female"; }

Form form_from_string(std::string_view s) {
  if (s == "female") return Form::female;
  if (s == "male") return Form::male;
  fail(Errc::invalid_argument, "unknown form '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------

ItemBank ItemBank::from_json(const json& j) {
  require(j.is_array(), Errc::parse, "item bank must be a JSON array");
  ItemBank bank;
  for (const auto& e : j) {
    PvqItem item;
    item.index = e.at("index").get<int>();
    item.value = value_from_string(e.at("value_id").get<std::string>());
    item.text_female = e.at("text_female").get<std::string>();
    item.text_male = e.value("text_male", item.text_female);
    bank.items_.push_back(std::move(item));
  }
  require(bank.items_.size() == kItemCount, Errc::invalid_argument,
          "item bank lists " + std::to_string(bank.items_.size()) + " items, expected 57");
  std::sort(bank.items_.begin(), bank.items_.end(), [](const PvqItem& a, const PvqItem& b) { return a.index < b.index; });
  for (std::size_t i = 0; i < kItemCount; ++i)
    require(bank.items_[i].index == static_cast<int>(i + 1), Errc::invalid_argument,
            "item bank indices must be exactly 1..57");
  std::array<int, kValueCount> per_value{};
  for (const auto& item : bank.items_) {
    ++per_value[static_cast<std::size_t>(item.value)];
    const auto& key = value_info(item.value).items;
    require(std::find(key.begin(), key.end(), item.index) != key.end(), Errc::invalid_argument,
            "item " + std::to_string(item.index) + " is not scored on " + std::string(value_info(item.value).code));
    require(!item.text_female.empty() && !item.text_male.empty(), Errc::invalid_argument,
            "item " + std::to_string(item.index) + " has empty text");
  }
  for (std::size_t v = 0; v < kValueCount; ++v)
    require(per_value[v] == 3, Errc::invalid_argument,
            std::string(value_table()[v].code) + " has " + std::to_string(per_value[v]) + " items, expected 3");
  return bank;
}

ItemBank ItemBank::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), Errc::io, "cannot open item bank " + path.string());
  json j = json::parse(in, nullptr, false);
  require(!j.is_discarded(), Errc::parse, "item bank " + path.string() + " is not valid JSON");
  return from_json(j);
}

ItemBank ItemBank::bundled() { return load(data_dir() / "pvq_rr_items.json"); }

const PvqItem& ItemBank::item(int index) const {
  require(index >= 1 && index <= static_cast<int>(items_.size()), Errc::out_of_range,
          "item index " + std::to_string(index) + " outside 1..57");
  return items_[static_cast<std::size_t>(index - 1)];
}

std::filesystem::path data_dir() {
  if (const char* env = std::getenv("VAPT_DATA_DIR"); env && *env) return env;
#ifdef VAPT_SOURCE_DATA_DIR
  if (std::filesystem::exists(VAPT_SOURCE_DATA_DIR)) return VAPT_SOURCE_DATA_DIR;
#endif
#ifdef VAPT_INSTALL_DATA_DIR
  return VAPT_INSTALL_DATA_DIR;
#else
  return "data";
#endif
}

// ---------------------------------------------------------------------------

void ResponseSet::validate() const {
  for (std::size_t i = 0; i < kItemCount; ++i)
    require(scores[i] >= 1 && scores[i] <= 6, Errc::out_of_range,
            "item " + std::to_string(i + 1) + " score " + std::to_string(scores[i]) + " outside 1..6");
}

void to_json(json& j, const ResponseSet& r) {
  j = json{{"form", to_string(r.form)},
           {"respondent", r.respondent == Respondent::human ? "human" : "llm"},
           {"scores", r.scores}};
}

void from_json(const json& j, ResponseSet& r) {
  r.form = form_from_string(j.value("form", "female"));
  auto who = j.value("respondent", "human");
  require(who == "human" || who == "llm", Errc::parse, "unknown respondent '" + who + "'");
  r.respondent = who == "llm" ? Respondent::llm : Respondent::human;
  auto scores = j.at("scores").get<std::vector<int>>();
  require(scores.size() == kItemCount, Errc::invalid_argument,
          "response set has " + std::to_string(scores.size()) + " scores, expected 57");
  std::copy(scores.begin(), scores.end(), r.scores.begin());
  r.validate();
}

std::string_view to_string(ProfileSource s) {
  switch (s) {
    case ProfileSource::manual: return "manual";
    case ProfileSource::llm: return "llm";
    case ProfileSource::anti_manual: return "anti_manual";
    case ProfileSource::anti_llm: return "anti_llm";
    case ProfileSource::random: return "random";
  }
  return "manual";
}

ProfileSource profile_source_from_string(std::string_view s) {
  for (auto src : {ProfileSource::manual, ProfileSource::llm, ProfileSource::anti_manual, ProfileSource::anti_llm,
                   ProfileSource::random})
    if (to_string(src) == s) return src;
  fail(Errc::invalid_argument, "unknown profile source '" + std::string(s) + "'");
}

void to_json(json& j, const ValueProfile& p) {
  j = json::object();
  j["source"] = to_string(p.source);
  if (p.scores) j["scores"] = *p.scores;
  j["value_means"] = p.value_means;
  j["mrat"] = p.mrat;
  j["centered"] = p.centered;
}

void from_json(const json& j, ValueProfile& p) {
  p.source = profile_source_from_string(j.at("source").get<std::string>());
  p.scores.reset();
  if (j.contains("scores")) {
    auto s = j["scores"].get<std::vector<int>>();
    require(s.size() == kItemCount, Errc::invalid_argument, "profile scores must have 57 entries");
    std::array<int, kItemCount> a{};
    std::copy(s.begin(), s.end(), a.begin());
    p.scores = a;
  }
  auto vm = j.at("value_means").get<std::vector<double>>();
  auto c = j.at("centered").get<std::vector<double>>();
  require(vm.size() == kValueCount && c.size() == kValueCount, Errc::invalid_argument,
          "profile arrays must have 19 entries");
  std::copy(vm.begin(), vm.end(), p.value_means.begin());
  std::copy(c.begin(), c.end(), p.centered.begin());
  p.mrat = j.at("mrat").get<double>();
}

namespace {

double display_mean(double mrat, double centered) { return std::clamp(mrat + centered, 1.0, 6.0); }

}  // namespace

ValueProfile score_profile(const ResponseSet& responses, ProfileSource source) {
  responses.validate();
  ValueProfile p;
  p.source = source;
  p.scores = responses.scores;
  int total = 0;
  for (int s : responses.scores) total += s;
  p.mrat = static_cast<double>(total) / static_cast<double>(kItemCount);
  for (const auto& info : value_table()) {
    int sum = 0;
    for (int idx : info.items) sum += responses.scores[static_cast<std::size_t>(idx - 1)];
    auto v = static_cast<std::size_t>(info.value);
    p.centered[v] = static_cast<double>(sum) / 3.0 - p.mrat;
    // Same expression anti_profile uses, so inverting twice is bit-exact.
    p.value_means[v] = display_mean(p.mrat, p.centered[v]);
  }
  return p;
}

ValueProfile anti_profile(const ValueProfile& p) {
  ValueProfile a;
  switch (p.source) {
    case ProfileSource::manual: a.source = ProfileSource::anti_manual; break;
    case ProfileSource::anti_manual: a.source = ProfileSource::manual; break;
    case ProfileSource::llm: a.source = ProfileSource::anti_llm; break;
    case ProfileSource::anti_llm: a.source = ProfileSource::llm; break;
    case ProfileSource::random: a.source = ProfileSource::random; break;
  }
  a.mrat = p.mrat;
  for (std::size_t v = 0; v < kValueCount; ++v) {
    a.centered[v] = -p.centered[v];
    a.value_means[v] = display_mean(a.mrat, a.centered[v]);
  }
  return a;
}

ResponseSet random_responses(std::uint64_t seed, Form form) {
  SeededRng rng(derive_seed(seed, "random-pvq"));
  ResponseSet r;
  r.form = form;
  r.respondent = Respondent::llm;
  for (auto& s : r.scores) s = rng.between(1, 6);
  return r;
}

json to_json(const ConflictFlag& f) {
  return {{"value", value_info(f.value).code},
          {"name", value_info(f.value).name},
          {"score_a", f.score_a},
          {"score_b", f.score_b},
          {"gap", f.gap},
          {"threshold", f.threshold}};
}

std::vector<ConflictFlag> detect_conflicts(const ValueProfile& a, const ValueProfile& b, double threshold) {
  require(threshold >= 0.0, Errc::invalid_argument, "conflict threshold must be non-negative");
  std::vector<ConflictFlag> out;
  for (const auto& info : value_table()) {
    auto v = static_cast<std::size_t>(info.value);
    double gap = std::abs(a.centered[v] - b.centered[v]);
    if (gap >= threshold) out.push_back({info.value, a.centered[v], b.centered[v], gap, threshold});
  }
  std::stable_sort(out.begin(), out.end(), [](const ConflictFlag& x, const ConflictFlag& y) { return x.gap > y.gap; });
  return out;
}

// ---------------------------------------------------------------------------

void to_json(json& j, const LlmItemAnswer& a) {
  j = json{{"item", a.item},
           {"embodied_response", a.embodied_response},
           {"score", a.score},
           {"confidence", a.confidence},
           {"evidence", a.evidence},
           {"reasoning", a.reasoning}};
}

void from_json(const json& j, LlmItemAnswer& a) {
  a.item = j.at("item").get<int>();
  a.embodied_response = j.at("embodied_response").get<std::string>();
  a.score = j.at("score").get<int>();
  a.confidence = j.at("confidence").get<double>();
  a.evidence = j.at("evidence").get<std::vector<std::string>>();
  a.reasoning = j.value("reasoning", "");
  require(a.score >= 1 && a.score <= 6, Errc::out_of_range, "thinking-log score outside 1..6");
  require(a.confidence >= 0.0 && a.confidence <= 1.0, Errc::out_of_range, "confidence outside 0..1");
}

std::optional<std::string> dominant_language(const std::vector<Message>& messages) {
  std::map<std::string, std::size_t> counts;
  for (const auto& m : messages) {
    if (m.role != MessageRole::participant) continue;
    auto tag = m.language_tag ? m.language_tag : text::detect_language_tag(m.text);
    if (tag) ++counts[*tag];
  }
  std::optional<std::string> best;
  std::size_t best_n = 0;
  for (const auto& [tag, n] : counts)
    if (n > best_n) {
      best = tag;
      best_n = n;
    }
  return best;
}

std::string snippet_id(std::size_t offset) { return "s" + std::to_string(offset); }

LlmItemAnswer llm_answer_item(Gateway& gateway, const ProviderProfile& profile, const PvqItem& item, Form form,
                              const std::vector<Message>& transcript, const std::string& request_key) {
  require(!transcript.empty(), Errc::empty_history, "llm_answer_item: transcript is empty");
  StructuredRequest req;
  req.system_text = std::string(prompts::pvq_item_schema());
  if (auto lang = dominant_language(transcript))
    req.system_text += "\nThe user mostly writes in language '" + *lang + "'.";

  std::string history = "Conversation history (snippet ids in brackets):\n";
  json snippets = json::array();
  for (std::size_t i = 0; i < transcript.size(); ++i) {
    const Message& m = transcript[i];
    history += "[" + snippet_id(i) + "] ";
    history += m.role == MessageRole::participant ? "User: " : "Day: ";
    history += m.text + "\n";
    if (m.role == MessageRole::participant) snippets.push_back(snippet_id(i));
  }
  req.prompt = history + "\n" + prompts::pvq_item(item.text(form));
  req.schema_name = std::string(schema::kPvqItemAnswer);
  req.request_key = request_key;
  req.hints = {{"item", item.index}, {"snippets", snippets}};

  json record = gateway.generate_structured(profile, req);
  LlmItemAnswer a;
  a.item = item.index;
  a.embodied_response = record["embodied_response"].get<std::string>();
  a.score = record["score"].get<int>();
  a.confidence = record["confidence"].get<double>();
  a.evidence = record["evidence_snippets"].get<std::vector<std::string>>();
  a.reasoning = record.value("reasoning", "");
  return a;
}

json to_json(const ThinkingLog& log) {
  json arr = json::array();
  for (const auto& [idx, a] : log.answers) arr.push_back(a);
  return arr;
}

ThinkingLog thinking_log_from_json(const json& j) {
  require(j.is_array(), Errc::parse, "thinking log must be an array");
  ThinkingLog log;
  for (const auto& e : j) {
    auto a = e.get<LlmItemAnswer>();
    require(a.item >= 1 && a.item <= static_cast<int>(kItemCount), Errc::out_of_range, "thinking-log item outside 1..57");
    require(log.answers.emplace(a.item, a).second, Errc::duplicate, "thinking log repeats item " + std::to_string(a.item));
  }
  return log;
}

json thinking_log_view(const ThinkingLog& log, const ItemBank& bank, const std::optional<ResponseSet>& human,
                       Form form) {
  json rows = json::array();
  for (const auto& [idx, a] : log.answers) {
    const PvqItem& item = bank.item(idx);
    json row{{"item", idx},
             {"value", value_info(item.value).code},
             {"text", item.text(form)},
             {"embodied_response", a.embodied_response},
             {"llm_score", a.score},
             {"confidence", a.confidence},
             {"evidence", a.evidence},
             {"reasoning", a.reasoning}};
    if (human) {
      int h = human->scores[static_cast<std::size_t>(idx - 1)];
      row["human_score"] = h;
      row["tag"] = std::abs(h - a.score) <= 1 ? "SIMILAR" : "DIFFERENT";
    } else {
      row["human_score"] = nullptr;
      row["tag"] = nullptr;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::vector<int>> batch_layout(std::size_t n_items, std::size_t batch_size) {
  require(batch_size >= 1, Errc::invalid_argument, "batch size must be positive");
  std::vector<std::vector<int>> out;
  for (std::size_t start = 0; start < n_items; start += batch_size) {
    std::vector<int> batch;
    for (std::size_t i = start; i < std::min(n_items, start + batch_size); ++i) batch.push_back(static_cast<int>(i + 1));
    out.push_back(std::move(batch));
  }
  return out;
}

SurveyRunResult run_llm_survey(Gateway& gateway, const ProviderProfile& profile, const ItemBank& bank,
                               const std::vector<Message>& transcript, const SurveyRunOptions& options) {
  require(options.batch_size >= 5 && options.batch_size <= 10, Errc::invalid_argument,
          "batch size must be within 5..10");
  require(!transcript.empty(), Errc::empty_history, "run_llm_survey: transcript is empty");
  auto layout = batch_layout(bank.items().size(), options.batch_size);

  // Each batch writes only its own slots, so no locking is needed.
  std::vector<std::optional<LlmItemAnswer>> slots(bank.items().size());
  std::vector<std::thread> workers;
  workers.reserve(layout.size());
  for (const auto& batch : layout)
    workers.emplace_back([&, batch] {
      for (int idx : batch) {
        try {
          slots[static_cast<std::size_t>(idx - 1)] =
              llm_answer_item(gateway, profile, bank.item(idx), options.form, transcript,
                              options.request_scope + "/item/" + std::to_string(idx));
        } catch (const Error&) {
          slots[static_cast<std::size_t>(idx - 1)].reset();
        }
      }
    });
  for (auto& w : workers) w.join();

  SurveyRunResult result;
  result.batches = layout.size();
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i])
      result.log.answers.emplace(static_cast<int>(i + 1), std::move(*slots[i]));
    else
      result.failed_items.push_back(static_cast<int>(i + 1));
  }
  if (result.complete()) {
    ResponseSet r;
    r.form = options.form;
    r.respondent = Respondent::llm;
    for (const auto& [idx, a] : result.log.answers) r.scores[static_cast<std::size_t>(idx - 1)] = a.score;
    result.responses = r;
  }
  return result;
}

// ---------------------------------------------------------------------------

std::string_view to_string(ChartLabel l) {
  switch (l) {
    case ChartLabel::Manual: return "Manual";
    case ChartLabel::AntiManual: return "Anti-Manual";
    case ChartLabel::LLM: return "LLM";
    case ChartLabel::AntiLLM: return "Anti-LLM";
  }
  return "Manual";
}

std::vector<ChartPair> build_chart_comparisons(const ValueProfile& manual, const ValueProfile& llm, std::uint64_t seed) {
  require(manual.source == ProfileSource::manual, Errc::invalid_argument, "first profile must be the manual profile");
  require(llm.source == ProfileSource::llm, Errc::invalid_argument, "second profile must be the LLM profile");
  for (const auto* p : {&manual, &llm})
    for (double c : p->centered) require(std::isfinite(c), Errc::incomplete, "profile has non-finite centered values");

  ValueProfile anti_manual = anti_profile(manual);
  ValueProfile anti_llm = anti_profile(llm);
  std::vector<ChartPair> pairs{
      {1, {ChartLabel::Manual, manual.centered}, {ChartLabel::AntiManual, anti_manual.centered}},
      {2, {ChartLabel::LLM, llm.centered}, {ChartLabel::AntiLLM, anti_llm.centered}},
      {3, {ChartLabel::Manual, manual.centered}, {ChartLabel::LLM, llm.centered}},
  };
  SeededRng rng(derive_seed(seed, "chart-sides"));
  for (auto& p : pairs)
    if (rng.below(2) == 1) std::swap(p.a, p.b);
  return pairs;
}

json seal_chart_pairs(const std::vector<ChartPair>& pairs, const crypto::Key& key) {
  json pub = json::array();
  json labels = json::object();
  for (const auto& p : pairs) {
    pub.push_back({{"pair", p.index}, {"A", {{"centered", p.a.centered}}}, {"B", {{"centered", p.b.centered}}}});
    labels[std::to_string(p.index)] = {{"A", to_string(p.a.label)}, {"B", to_string(p.b.label)}};
  }
  return {{"pairs", pub}, {"sealed", seal_section(key, "chart-pairs", labels)}};
}

json reveal_chart_pair(const json& sealed_pairs, const crypto::Key& key, int pair_index) {
  require(pair_index >= 1 && pair_index <= 3, Errc::out_of_range, "chart pair index must be 1..3");
  json labels = unseal_section(key, sealed_pairs.at("sealed"));
  auto it = labels.find(std::to_string(pair_index));
  require(it != labels.end(), Errc::not_found, "chart pair " + std::to_string(pair_index) + " not found");
  return *it;
}

}  // namespace vapt
