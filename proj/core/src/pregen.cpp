#include "vapt/pregen.hpp"

#include <fstream>

#include "vapt/alignment_report.hpp"
#include "vapt/error.hpp"
#include "vapt/rng.hpp"

namespace vapt {

namespace {

std::optional<ResponseSet> responses_of(const ValueProfile& p, Respondent who) {
  if (!p.scores) return std::nullopt;
  ResponseSet rs;
  rs.respondent = who;
  rs.scores = *p.scores;
  return rs;
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), Errc::io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  require(static_cast<bool>(out), Errc::io, "write failed for " + path.string());
}

}  // namespace

PreGenCache pregenerate_artifacts(Gateway& gateway, const ProviderRoles& roles, const StudyRecord& record,
                                  const crypto::Key& key, const PregenOptions& options, Instant now) {
  const std::string& code = record.participant_code;
  require(!code.empty(), Errc::invalid_argument, "pregenerate: record has no participant");
  int qualifying = count_qualifying_sessions(record.policy, record.transcript.sessions);
  require(record.open_session() == nullptr && qualifying >= record.policy.min_sessions, Errc::illegal_transition,
          "pregenerate: phase 1 is not complete");

  PreGenCache cache;
  cache.transcript_digest = transcript_digest(record.transcript);
  cache.created = now;
  const auto messages = record.transcript.messages();

  // Topic-context graph.
  try {
    auto opts = options.graph;
    opts.request_scope = code + "/graph";
    auto run = build_topic_graph(gateway, roles.extract, roles.embed, roles.score, messages, opts);
    for (auto w : run.failed_windows) cache.missing.push_back("graph/window/" + std::to_string(w));
    for (const auto& n : run.failed_nodes) cache.missing.push_back("graph/node/" + n);
    cache.graph = export_graph(run.graph);
  } catch (const Error& e) {
    cache.missing.push_back(std::string("graph: ") + e.what());
  }

  // Strategy carried by the chat persona.
  try {
    cache.strategy = generate_strategy(gateway, roles.strategy, record.transcript.sessions, StrategyMode::horizontal,
                                       code + "/strategy");
  } catch (const Error& e) {
    cache.missing.push_back(std::string("strategy: ") + e.what());
  }

  // Profiles.
  Form form = record.baseline ? record.baseline->manual.form : Form::female;
  std::optional<ValueProfile> manual, llm;
  if (record.baseline) {
    manual = score_profile(record.baseline->manual, ProfileSource::manual);
    cache.profiles.emplace("manual", *manual);
    cache.profiles.emplace("anti_manual", anti_profile(*manual));
  } else {
    cache.missing.push_back("profile/manual: baseline survey not submitted");
  }

  try {
    SurveyRunOptions so;
    so.batch_size = options.pvq_batch_size;
    so.form = form;
    so.request_scope = code + "/pvq";
    auto run = run_llm_survey(gateway, roles.pvq, ItemBank::bundled(), messages, so);
    cache.thinking_log = run.log;
    for (int item : run.failed_items) cache.missing.push_back("pvq/item/" + std::to_string(item));
    if (run.responses) {
      llm = score_profile(*run.responses, ProfileSource::llm);
      cache.profiles.emplace("llm", *llm);
      cache.profiles.emplace("anti_llm", anti_profile(*llm));
    }
  } catch (const Error& e) {
    cache.missing.push_back(std::string("pvq: ") + e.what());
  }

  auto random = score_profile(random_responses(derive_seed(options.seed, code + "/random"), form), ProfileSource::random);
  cache.profiles.emplace("random", random);

  // Persona rounds.
  if (record.baseline) {
    PersonaInputs inputs{messages, cache.strategy, manual, random};
    std::vector<std::string> questions;
    for (const auto& f : record.baseline->filters) questions.push_back(f.question);
    auto run = generate_persona_rounds(gateway, roles.persona, inputs, session_scenarios(questions),
                                       derive_seed(options.seed, code + "/rounds"), key, code + "/persona");
    cache.rounds = std::move(run.rounds);
    for (auto& m : run.missing) cache.missing.push_back("persona/" + m);
  } else {
    cache.missing.push_back("persona: baseline survey not submitted");
  }

  // Chart pairs.
  if (manual && llm) {
    auto pairs = build_chart_comparisons(*manual, *llm, derive_seed(options.seed, code + "/charts"));
    cache.chart_pairs = seal_chart_pairs(pairs, key);
  } else {
    cache.missing.push_back("charts: manual and llm profiles required");
  }
  return cache;
}

json participant_alignment(const PreGenCache& cache, double conflict_threshold) {
  auto m = cache.profiles.find("manual");
  auto l = cache.profiles.find("llm");
  if (m == cache.profiles.end() || l == cache.profiles.end()) return nullptr;
  auto hr = responses_of(m->second, Respondent::human);
  auto lr = responses_of(l->second, Respondent::llm);
  json out = json::object();
  if (hr && lr) out["alignment"] = to_json(build_alignment_table({{"p", *hr}}, {{"p", *lr}}));
  json conflicts = json::array();
  for (const auto& f : detect_conflicts(m->second, l->second, conflict_threshold)) conflicts.push_back(to_json(f));
  out["conflicts"] = conflicts;
  return out;
}

void write_artifact_files(const PreGenCache& cache, const std::filesystem::path& dir, double conflict_threshold) {
  std::filesystem::create_directories(dir);
  write_json(dir / "graph.json", cache.graph ? *cache.graph : json(nullptr));
  json rounds = json::array();
  for (const auto& r : cache.rounds) rounds.push_back(to_json(r));
  write_json(dir / "rounds.json", rounds);
  json profiles = json::object();
  for (const auto& [k, p] : cache.profiles) profiles[k] = p;
  write_json(dir / "profiles.json", profiles);
  write_json(dir / "thinking_log.json", cache.thinking_log ? to_json(*cache.thinking_log) : json(nullptr));
  write_json(dir / "charts.json", cache.chart_pairs ? *cache.chart_pairs : json(nullptr));
  write_json(dir / "report.json", participant_alignment(cache, conflict_threshold));
  write_json(dir / "missing.json", cache.missing);
}

}  // namespace vapt
