#pragma once

#include <cstdint>
#include <filesystem>

#include "vapt/study.hpp"

namespace vapt {

// Provider profile per pipeline role.
struct ProviderRoles {
  ProviderProfile chat;
  ProviderProfile strategy;
  ProviderProfile extract;
  ProviderProfile embed;
  ProviderProfile score;
  ProviderProfile pvq;
  ProviderProfile persona;

  static ProviderRoles uniform(const ProviderProfile& p) { return {p, p, p, p, p, p, p}; }
};

struct PregenOptions {
  GraphPipelineOptions graph;
  std::size_t pvq_batch_size = 8;
  std::uint64_t seed = 0;
};

// Graph, strategy, persona rounds, LLM survey, profiles and sealed chart
// pairs. Sub-pipeline failures are listed in `missing` instead of thrown.
PreGenCache pregenerate_artifacts(Gateway& gateway, const ProviderRoles& roles, const StudyRecord& record,
                                  const crypto::Key& key, const PregenOptions& options, Instant now);

// Manual-vs-LLM agreement and value conflicts for one participant; null
// when either profile is missing.
json participant_alignment(const PreGenCache& cache, double conflict_threshold = 1.0);

// graph.json, rounds.json, profiles.json, thinking_log.json, charts.json,
// report.json and missing.json under `dir`.
void write_artifact_files(const PreGenCache& cache, const std::filesystem::path& dir, double conflict_threshold = 1.0);

}  // namespace vapt
