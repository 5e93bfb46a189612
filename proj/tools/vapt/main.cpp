#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "vapt/alignment_report.hpp"
#include "vapt/api_server.hpp"
#include "vapt/config.hpp"
#include "vapt/error.hpp"
#include "vapt/rng.hpp"
#include "vapt/service.hpp"

namespace {

using namespace vapt;

ApiServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

ServiceConfig config_or_default(const std::string& path) {
  return path.empty() ? ServiceConfig{} : ServiceConfig::load(path);
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), Errc::io, "cannot write " + path);
  out << content;
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), Errc::io, "cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(Errc::parse, path + ": " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vapt: value-alignment probe toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string code, transcript_path, out_path, mock_script;
  std::uint64_t seed = 0;

  auto* serve = app.add_subcommand("serve", "Run the /v1 HTTP API");
  serve->add_option("--config", config_path, "Service config (JSON)")->required();

  auto* ingest = app.add_subcommand("ingest", "Import a chat transcript as phase-1 sessions");
  ingest->add_option("--config", config_path, "Service config (JSON)");
  ingest->add_option("--code", code, "Participant code")->required();
  ingest->add_option("--transcript", transcript_path, "Transcript JSON")->required()->check(CLI::ExistingFile);

  double tau = 0.7;
  auto* graph = app.add_subcommand("graph", "Build a topic-context graph from a transcript");
  graph->add_option("--transcript", transcript_path)->required()->check(CLI::ExistingFile);
  graph->add_option("--out", out_path, "Output file, - for stdout");
  graph->add_option("--config", config_path);
  graph->add_option("--tau", tau, "Merge threshold")->check(CLI::Range(0.0, 1.0));

  std::string baseline_path;
  auto* personas = app.add_subcommand("personas", "Generate blind persona rounds");
  personas->add_option("--transcript", transcript_path)->required()->check(CLI::ExistingFile);
  personas->add_option("--baseline", baseline_path, "Baseline JSON (responses + filter questions)")
      ->required()
      ->check(CLI::ExistingFile);
  personas->add_option("--out", out_path);
  personas->add_option("--config", config_path);
  personas->add_option("--seed", seed);

  std::string form_name = "female";
  std::size_t batch = 8;
  auto* pvq = app.add_subcommand("pvq", "Answer the PVQ-RR as the participant from a transcript");
  pvq->add_option("--transcript", transcript_path)->required()->check(CLI::ExistingFile);
  pvq->add_option("--out", out_path);
  pvq->add_option("--config", config_path);
  pvq->add_option("--form", form_name)->check(CLI::IsMember({"female", "male"}));
  pvq->add_option("--batch", batch, "Items per batch")->check(CLI::Range(5, 10));

  std::string human_dir, llm_dir;
  bool per_participant = false, csv = false;
  auto* report = app.add_subcommand("report", "Per-value agreement between human and LLM answers");
  report->add_option("--human", human_dir)->required()->check(CLI::ExistingDirectory);
  report->add_option("--llm", llm_dir)->required()->check(CLI::ExistingDirectory);
  report->add_option("--out", out_path);
  report->add_flag("--per-participant", per_participant, "Average agreement per participant instead of pooling");
  report->add_flag("--csv", csv, "CSV instead of JSON");

  auto* pregen = app.add_subcommand("pregen", "Pre-generate interview artifacts for a participant");
  pregen->add_option("--config", config_path)->required();
  pregen->add_option("--code", code)->required();

  auto* purge = app.add_subcommand("purge", "Delete a participant's record, artifacts and key");
  purge->add_option("--config", config_path)->required();
  purge->add_option("--code", code)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve) {
      auto cfg = ServiceConfig::load(config_path);
      StudyService service(cfg, make_gateway(cfg));
      ApiServer server(service);
      int port = server.bind(cfg.host, cfg.port);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "vapt: listening on " << cfg.host << ":" << port << "\n";
      server.listen();
      g_server = nullptr;
      return 0;
    }

    if (*ingest) {
      auto cfg = config_or_default(config_path);
      StudyStore store(cfg.data_dir);
      auto t = load_transcript(transcript_path);
      StudyRecord r;
      if (store.exists(code)) {
        r = store.load(code);
        require(r.transcript.sessions.empty(), Errc::duplicate, "participant already has chat sessions");
      } else {
        Instant created = t.sessions.empty() ? now_utc() : t.sessions.front().started;
        r = advance_stage(std::move(r), make_participant_created(code, cfg.policy, created));
        store.save_key(code, cfg.seed ? crypto::derive_key(*cfg.seed, "reveal/" + code) : crypto::random_key());
      }
      for (const auto& s : t.sessions) {
        require(!s.is_open(), Errc::invalid_argument, "ingested sessions must be closed");
        r = advance_stage(std::move(r), make_session_opened(s.session_index, std::nullopt, s.started));
        for (const auto& m : s.messages) r = advance_stage(std::move(r), make_message(m));
        r = advance_stage(std::move(r), make_session_closed(*s.ended));
      }
      store.persist(r);
      std::cout << json{{"participant_code", code},
                        {"sessions", r.transcript.sessions.size()},
                        {"qualifying_sessions", count_qualifying_sessions(r.policy, r.transcript.sessions)}}
                       .dump(2)
                << "\n";
      return 0;
    }

    if (*graph) {
      auto cfg = config_or_default(config_path);
      auto gw = make_gateway(cfg);
      auto roles = cfg.resolve_roles();
      auto opts = cfg.graph;
      opts.tau = tau;
      auto run = build_topic_graph(*gw, roles.extract, roles.embed, roles.score, load_transcript(transcript_path).messages(),
                                   opts);
      json out = export_graph(run.graph);
      out["run"] = {{"windows", run.window_count},
                    {"failed_windows", run.failed_windows},
                    {"failed_nodes", run.failed_nodes},
                    {"pseudo_embeddings", run.pseudo_embeddings}};
      write_output(out_path, out.dump(2) + "\n");
      return run.failed_windows.empty() && run.failed_nodes.empty() ? 0 : 2;
    }

    if (*personas) {
      auto cfg = config_or_default(config_path);
      auto gw = make_gateway(cfg);
      auto roles = cfg.resolve_roles();
      auto t = load_transcript(transcript_path);
      auto baseline = read_json(baseline_path).get<Baseline>();
      baseline.validate();
      auto manual = score_profile(baseline.manual, ProfileSource::manual);
      auto random = score_profile(random_responses(derive_seed(seed, "random"), baseline.manual.form), ProfileSource::random);
      std::optional<Strategy> strategy;
      try {
        strategy = generate_strategy(*gw, roles.strategy, t.sessions, StrategyMode::horizontal, "cli/strategy");
      } catch (const Error& e) {
        std::cerr << "vapt: strategy unavailable: " << e.what() << "\n";
      }
      std::vector<std::string> questions;
      for (const auto& f : baseline.filters) questions.push_back(f.question);
      auto key = crypto::derive_key(seed, "reveal/cli");
      PersonaInputs inputs{t.messages(), strategy, manual, random};
      auto run = generate_persona_rounds(*gw, roles.persona, inputs, session_scenarios(questions), seed, key,
                                         "cli/persona");
      json rounds = json::array();
      for (const auto& r : run.rounds) rounds.push_back(to_json(r));
      write_output(out_path, json{{"rounds", rounds}, {"missing", run.missing}, {"key_id", crypto::key_id(key)}}.dump(2) + "\n");
      return run.missing.empty() ? 0 : 2;
    }

    if (*pvq) {
      auto cfg = config_or_default(config_path);
      auto gw = make_gateway(cfg);
      SurveyRunOptions so;
      so.batch_size = batch;
      so.form = form_from_string(form_name);
      auto run = run_llm_survey(*gw, cfg.resolve_roles().pvq, ItemBank::bundled(), load_transcript(transcript_path).messages(),
                                so);
      json out{{"thinking_log", to_json(run.log)}, {"failed_items", run.failed_items}};
      if (run.responses) {
        out["responses"] = *run.responses;
        out["profile"] = score_profile(*run.responses, ProfileSource::llm);
      }
      write_output(out_path, out.dump(2) + "\n");
      return run.complete() ? 0 : 2;
    }

    if (*report) {
      auto r = build_alignment_table(load_response_dir(human_dir), load_response_dir(llm_dir),
                                     per_participant ? PoolingMode::per_participant : PoolingMode::pooled);
      write_output(out_path, csv ? to_csv(r) : to_json(r).dump(2) + "\n");
      return 0;
    }

    if (*pregen) {
      auto cfg = ServiceConfig::load(config_path);
      StudyService service(cfg, make_gateway(cfg));
      auto out = service.pregenerate(code);
      std::cout << out.dump(2) << "\n";
      return out["missing"].empty() ? 0 : 2;
    }

    if (*purge) {
      auto cfg = ServiceConfig::load(config_path);
      StudyStore store(cfg.data_dir);
      store.purge(code);
      auto left = store.scan_references(code);
      std::cout << json{{"purged", code}, {"remaining_references", left.size()}}.dump(2) << "\n";
      return left.empty() ? 0 : 1;
    }
  } catch (const Error& e) {
    std::cerr << "vapt: " << to_string(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "vapt: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
