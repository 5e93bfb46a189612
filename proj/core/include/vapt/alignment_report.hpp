#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vapt/pvq.hpp"

namespace vapt {

enum class Highlight { green, red, none };
std::string_view to_string(Highlight h);

// Green first: within1 >= 70 or qwk >= 0.41. Red: within1 < 55 and qwk <= 0.15.
// A missing qwk never satisfies a qwk clause.
Highlight classify_row(double within1_pct, std::optional<double> qwk);

struct AlignmentRow {
  SchwartzValue value = SchwartzValue::SDT;
  std::optional<double> alpha_human;
  std::optional<double> alpha_llm;
  double exact_pct = 0.0;
  double within1_pct = 0.0;
  double within2_pct = 0.0;
  std::optional<double> qwk;  // null when degenerate
  Highlight highlight = Highlight::none;
};

enum class PoolingMode { pooled, per_participant };
std::string_view to_string(PoolingMode m);

struct AlignmentReport {
  PoolingMode mode = PoolingMode::pooled;
  std::size_t participants = 0;
  std::vector<AlignmentRow> rows;  // one per value, table order
  double mean_exact = 0.0;
  double mean_within1 = 0.0;
  // Spearman over the 19 mean centered scores.
  std::optional<double> spearman_mean_profile;
  // Mean of per-participant Spearman over centered scores.
  std::optional<double> spearman_per_participant;
  std::optional<double> median_alpha_human;
  std::optional<double> median_alpha_llm;
};

using ResponseMap = std::map<std::string, ResponseSet>;

// Pooled mode concatenates items x participants per value. Per-participant mode
// averages exact/within-k over participants; qwk stays pooled.
AlignmentReport build_alignment_table(const ResponseMap& human, const ResponseMap& llm,
                                      PoolingMode mode = PoolingMode::pooled);

json to_json(const AlignmentReport& r);
std::string to_csv(const AlignmentReport& r);

// Reads every *.json ResponseSet in `dir`, keyed by file stem.
ResponseMap load_response_dir(const std::filesystem::path& dir);

}  // namespace vapt
