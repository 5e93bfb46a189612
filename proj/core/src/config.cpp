#include "vapt/config.hpp"

#include <fstream>

#include "vapt/error.hpp"

namespace vapt {

namespace {

constexpr std::array<const char*, 7> kRoles{"chat", "strategy", "extract", "embed", "score", "pvq", "persona"};

}  // namespace

void to_json(json& j, const ServiceConfig& c) {
  json providers = json::object();
  for (const auto& [k, p] : c.providers) providers[k] = p;
  j = {{"data_dir", c.data_dir.string()},
       {"host", c.host},
       {"port", c.port},
       {"policy", json(c.policy)},
       {"providers", providers},
       {"roles", c.roles},
       {"graph",
        {{"window", c.graph.window},
         {"stride", c.graph.stride},
         {"tau", c.graph.tau},
         {"concurrency", c.graph.concurrency}}},
       {"pvq_batch_size", c.pvq_batch_size},
       {"conflict_threshold", c.conflict_threshold}};
  if (c.seed) j["seed"] = *c.seed;
  if (c.mock_script) j["mock_script"] = c.mock_script->string();
  if (c.call_log) j["call_log"] = c.call_log->string();
}

void from_json(const json& j, ServiceConfig& c) {
  c = ServiceConfig{};
  if (j.contains("data_dir")) c.data_dir = j["data_dir"].get<std::string>();
  if (j.contains("host")) c.host = j["host"].get<std::string>();
  if (j.contains("port")) c.port = j["port"].get<int>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("policy")) c.policy = j["policy"].get<SessionPolicy>();
  if (j.contains("providers"))
    for (const auto& [name, p] : j["providers"].items()) {
      auto profile = p.get<ProviderProfile>();
      if (profile.name.empty()) profile.name = name;
      c.providers.emplace(name, profile);
    }
  if (j.contains("roles")) c.roles = j["roles"].get<std::map<std::string, std::string>>();
  if (j.contains("mock_script")) c.mock_script = j["mock_script"].get<std::string>();
  if (j.contains("call_log")) c.call_log = j["call_log"].get<std::string>();
  if (j.contains("graph")) {
    const auto& g = j["graph"];
    c.graph.window = g.value("window", c.graph.window);
    c.graph.stride = g.value("stride", c.graph.stride);
    c.graph.tau = g.value("tau", c.graph.tau);
    c.graph.concurrency = g.value("concurrency", c.graph.concurrency);
  }
  c.pvq_batch_size = j.value("pvq_batch_size", c.pvq_batch_size);
  c.conflict_threshold = j.value("conflict_threshold", c.conflict_threshold);
}

void ServiceConfig::validate() const {
  require(port >= 0 && port <= 65535, Errc::invalid_argument, "port outside 0..65535");
  policy.validate();
  for (const auto& [name, p] : providers) p.validate();
  for (const auto& [role, name] : roles) {
    require(std::find_if(kRoles.begin(), kRoles.end(), [&](const char* r) { return role == r; }) != kRoles.end(),
            Errc::invalid_argument, "unknown role '" + role + "'");
    require(providers.count(name) == 1, Errc::invalid_argument, "role '" + role + "' names unknown provider '" + name + "'");
  }
  require(pvq_batch_size >= 5 && pvq_batch_size <= 10, Errc::invalid_argument, "pvq_batch_size must be 5..10");
  require(graph.tau > 0.0 && graph.tau <= 1.0, Errc::invalid_argument, "graph tau must be in (0, 1]");
  require(conflict_threshold > 0.0, Errc::invalid_argument, "conflict_threshold must be positive");
}

ProviderRoles ServiceConfig::resolve_roles() const {
  ProviderProfile fallback = providers.empty() ? mock_profile() : providers.begin()->second;
  auto pick = [&](const char* role) {
    auto it = roles.find(role);
    return it == roles.end() ? fallback : providers.at(it->second);
  };
  return {pick("chat"), pick("strategy"), pick("extract"), pick("embed"), pick("score"), pick("pvq"), pick("persona")};
}

bool ServiceConfig::needs_mock() const {
  if (providers.empty()) return true;
  for (const auto& [name, p] : providers)
    if (p.is_mock()) return true;
  return false;
}

ServiceConfig ServiceConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), Errc::io, "cannot read config " + path.string());
  ServiceConfig c;
  try {
    c = json::parse(in).get<ServiceConfig>();
  } catch (const json::exception& e) {
    fail(Errc::parse, "config " + path.string() + ": " + e.what());
  }
  auto base = path.parent_path();
  auto resolve = [&](std::filesystem::path& p) {
    if (p.is_relative()) p = base / p;
  };
  resolve(c.data_dir);
  if (c.mock_script) resolve(*c.mock_script);
  if (c.call_log) resolve(*c.call_log);
  c.validate();
  return c;
}

std::shared_ptr<Gateway> make_gateway(const ServiceConfig& config) {
  auto log = config.call_log ? std::make_shared<CallLog>(*config.call_log) : std::make_shared<CallLog>();
  auto gw = std::make_shared<Gateway>(log);
  if (config.needs_mock()) {
    MockScript script;
    if (config.mock_script) {
      script = MockScript::load(*config.mock_script);
    } else {
      script.synthesize = true;
      script.seed = config.seed.value_or(0);
    }
    gw->set_mock_backend(std::make_shared<MockBackend>(std::move(script)));
  }
  return gw;
}

}  // namespace vapt
