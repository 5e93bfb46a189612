#include "vapt/api_server.hpp"

#include <regex>

#include <httplib.h>

#include "vapt/error.hpp"

namespace vapt {

namespace {

int status_for(Errc code) {
  switch (code) {
    case Errc::cooldown: return 429;
    case Errc::missing_artifacts:
    case Errc::not_found: return 404;
    case Errc::illegal_transition:
    case Errc::sealed:
    case Errc::duplicate:
    case Errc::session_closed:
    case Errc::incomplete: return 409;
    case Errc::invalid_argument:
    case Errc::length_mismatch:
    case Errc::out_of_range:
    case Errc::parse:
    case Errc::schema_violation:
    case Errc::timestamp_regression:
    case Errc::evidence_required: return 400;
    case Errc::provider_unavailable:
    case Errc::provider_refusal:
    case Errc::network:
    case Errc::script_exhausted: return 502;
    case Errc::credential_missing: return 503;
    default: return 500;
  }
}

std::string error_name(Errc code) {
  if (code == Errc::missing_artifacts) return "artifact-missing";
  std::string s(to_string(code));
  std::replace(s.begin(), s.end(), '_', '-');
  return s;
}

json parse_body(const std::string& body) {
  if (body.empty()) return json::object();
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    fail(Errc::parse, std::string("request body: ") + e.what());
  }
}

int to_int(const std::string& s) {
  try {
    std::size_t pos = 0;
    int v = std::stoi(s, &pos);
    require(pos == s.size(), Errc::invalid_argument, "not an integer: " + s);
    return v;
  } catch (const std::logic_error&) {
    fail(Errc::invalid_argument, "not an integer: " + s);
  }
}

LikertAnswers likert_from(const json& body) {
  const json& answers = body.contains("answers") ? body["answers"] : body;
  return answers.get<LikertAnswers>();
}

std::optional<std::string> idem(const json& body, const std::string& header) {
  if (!header.empty()) return header;
  if (body.contains("idempotency_key")) return body["idempotency_key"].get<std::string>();
  return std::nullopt;
}

}  // namespace

ApiResponse error_response(const Error& e) {
  json body{{"error", error_name(e.code())}, {"message", e.what()}};
  if (e.code() == Errc::cooldown && !e.payload().empty()) {
    json gate = json::parse(e.payload());
    body["gate"] = gate;
    body["wait_remaining_ms"] = gate.value("wait_remaining_ms", 0);
    body["wait_display"] = gate.value("wait_display", "");
  }
  return {status_for(e.code()), body};
}

struct ApiServer::Impl {
  httplib::Server server;
};

ApiServer::ApiServer(StudyService& service) : impl_(std::make_unique<Impl>()), service_(service) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    auto out = dispatch(req.method, req.path, req.body, req.get_header_value("Idempotency-Key"));
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json");
  };
  impl_->server.Get(R"(/v1/.*)", handler);
  impl_->server.Post(R"(/v1/.*)", handler);
  impl_->server.Delete(R"(/v1/.*)", handler);
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
  int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  require(bound > 0, Errc::io, "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void ApiServer::listen() { impl_->server.listen_after_bind(); }

void ApiServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

ApiResponse ApiServer::dispatch(const std::string& method, const std::string& path, const std::string& body,
                                const std::string& idempotency_key) {
  static const std::regex code_re("[A-Za-z0-9_-]{1,64}");
  std::vector<std::string> parts;
  {
    std::size_t start = 1;
    while (start <= path.size()) {
      auto slash = path.find('/', start);
      if (slash == std::string::npos) slash = path.size();
      if (slash > start) parts.push_back(path.substr(start, slash - start));
      start = slash + 1;
    }
  }
  auto is = [&](std::initializer_list<const char*> shape) {
    if (parts.size() != shape.size()) return false;
    std::size_t i = 0;
    for (const char* s : shape) {
      if (std::string_view(s) != "*" && parts[i] != s) return false;
      ++i;
    }
    return true;
  };

  try {
    require(!parts.empty() && parts[0] == "v1", Errc::not_found, "unknown route " + path);
    const bool get = method == "GET", post = method == "POST", del = method == "DELETE";
    if (parts.size() >= 3) {
      const std::string& code = parts[2];
      require(std::regex_match(code, code_re), Errc::invalid_argument, "invalid participant code");
    }

    if (get && is({"v1", "health"})) return {200, {{"status", "ok"}}};
    if (post && is({"v1", "participants"})) {
      auto b = parse_body(body);
      return {201, service_.create_participant(b.at("code").get<std::string>())};
    }
    if (get && is({"v1", "participants", "*"})) return {200, service_.status(parts[2])};
    if (del && is({"v1", "participants", "*"})) {
      service_.purge(parts[2]);
      return {200, {{"purged", parts[2]}}};
    }
    if (get && is({"v1", "study", "*"})) return {200, service_.status(parts[2])};
    if (post && is({"v1", "study", "*", "advance"})) return {200, service_.advance(parts[2])};

    if (post && is({"v1", "chat", "*", "message"})) {
      auto b = parse_body(body);
      return {200, service_.post_message(parts[2], b.at("text").get<std::string>())};
    }
    if (get && is({"v1", "chat", "*", "gate"})) return {200, service_.gate(parts[2])};
    if (post && is({"v1", "chat", "*", "end"})) return {200, service_.end_session(parts[2])};

    if (post && is({"v1", "survey", "*", "pre"})) return {200, service_.submit_pre_survey(parts[2], likert_from(parse_body(body)))};
    if (post && is({"v1", "survey", "*", "post"}))
      return {200, service_.submit_post_survey(parts[2], likert_from(parse_body(body)))};
    if (post && is({"v1", "survey", "*", "baseline"}))
      return {200, service_.submit_baseline(parts[2], parse_body(body).get<Baseline>())};

    if (post && is({"v1", "pregen", "*"})) return {202, service_.start_pregeneration(parts[2])};
    if (get && is({"v1", "pregen", "*"})) return {200, service_.pregen_status(parts[2])};

    if (get && is({"v1", "graph", "*"})) return {200, service_.graph(parts[2])};
    if (get && (is({"v1", "graph", "*", "node", "*"}) || is({"v1", "graph", "*", "node", "*", "*"}))) {
      std::string topic, context;
      if (parts.size() == 6) {
        topic = parts[4];
        context = parts[5];
      } else {
        auto comma = parts[4].find(',');
        require(comma != std::string::npos, Errc::invalid_argument, "node id must be <topic>,<context>");
        topic = parts[4].substr(0, comma);
        context = parts[4].substr(comma + 1);
      }
      int id = to_int(topic);
      require(id > 0, Errc::invalid_argument, "topic id must be positive");
      return {200, service_.graph_node(parts[2], static_cast<std::uint32_t>(id), life_context_from_string(context))};
    }

    if (get && is({"v1", "stage2", "*", "round", "*"})) return {200, service_.round(parts[2], to_int(parts[4]))};
    if (post && is({"v1", "stage2", "*", "round", "*", "rating"})) {
      auto b = parse_body(body);
      return {200, service_.rate(parts[2], to_int(parts[4]), b.at("slot_id").get<std::string>(), b.at("score").get<int>(),
                                 idem(b, idempotency_key))};
    }
    if (post && is({"v1", "stage2", "*", "round", "*", "reveal"})) return {200, service_.reveal(parts[2], to_int(parts[4]))};

    if (get && is({"v1", "stage3", "*", "pair", "*"})) return {200, service_.chart_pair(parts[2], to_int(parts[4]))};
    if (post && is({"v1", "stage3", "*", "choice"})) {
      auto b = parse_body(body);
      return {200, service_.choose_chart(parts[2], b.at("pair").get<int>(), b.at("pick").get<std::string>(),
                                         idem(b, idempotency_key))};
    }
    if (get && is({"v1", "stage3", "*", "thinking-log"})) return {200, service_.thinking_log(parts[2])};
    if (get && is({"v1", "report", "*"})) return {200, service_.report(parts[2])};

    fail(Errc::not_found, "unknown route " + method + " " + path);
  } catch (const Error& e) {
    return error_response(e);
  } catch (const json::exception& e) {
    return {400, {{"error", "invalid-argument"}, {"message", e.what()}}};
  } catch (const std::exception& e) {
    return {500, {{"error", "internal"}, {"message", e.what()}}};
  }
}

}  // namespace vapt
