#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "vapt/pregen.hpp"

namespace vapt {

// JSON config:
//   {
//     "data_dir": "vapt-data", "host": "127.0.0.1", "port": 8080,
//     "seed": 42,                              // optional: deterministic keys and shuffles
//     "policy": {...SessionPolicy...},
//     "providers": {"<name>": {...ProviderProfile...}},
//     "roles": {"chat": "<name>", "strategy": ..., "extract": ..., "embed": ...,
//               "score": ..., "pvq": ..., "persona": ...},
//     "mock_script": "script.json", "call_log": "calls.jsonl",
//     "graph": {"window": 4, "stride": 3, "tau": 0.7, "concurrency": 4},
//     "pvq_batch_size": 8, "conflict_threshold": 1.0
//   }
// Roles without an entry use the first provider; with no providers at all
// every role runs on a synthesizing mock.
struct ServiceConfig {
  std::filesystem::path data_dir = "vapt-data";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::uint64_t> seed;
  SessionPolicy policy;
  std::map<std::string, ProviderProfile> providers;
  std::map<std::string, std::string> roles;
  std::optional<std::filesystem::path> mock_script;
  std::optional<std::filesystem::path> call_log;
  GraphPipelineOptions graph;
  std::size_t pvq_batch_size = 8;
  double conflict_threshold = 1.0;

  void validate() const;
  ProviderRoles resolve_roles() const;
  bool needs_mock() const;

  // Relative paths resolve against the config file's directory.
  static ServiceConfig load(const std::filesystem::path& path);
};

void to_json(json& j, const ServiceConfig& c);
void from_json(const json& j, ServiceConfig& c);

// Gateway wired to the config's mock script (or a synthesizing mock) and log.
std::shared_ptr<Gateway> make_gateway(const ServiceConfig& config);

}  // namespace vapt
