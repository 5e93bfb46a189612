#include "vapt/alignment_report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "vapt/error.hpp"
#include "vapt/stats.hpp"

namespace vapt {

std::string_view to_string(Highlight h) {
  switch (h) {
    case Highlight::green: return "green";
    case Highlight::red: return "red";
    case Highlight::none: return "none";
  }
  return "none";
}

std::string_view to_string(PoolingMode m) { return m == PoolingMode::pooled ? "pooled" : "per_participant"; }

Highlight classify_row(double within1_pct, std::optional<double> qwk) {
  if (within1_pct >= 70.0 || (qwk && *qwk >= 0.41)) return Highlight::green;
  if (within1_pct < 55.0 && qwk && *qwk <= 0.15) return Highlight::red;
  return Highlight::none;
}

namespace {

std::optional<double> try_alpha(const stats::Matrix& m) {
  if (m.size() < 2) return std::nullopt;
  try {
    return stats::cronbach_alpha(m);
  } catch (const Error& e) {
    if (e.code() == Errc::no_variance) return std::nullopt;
    throw;
  }
}

std::optional<double> try_spearman(const std::vector<double>& a, const std::vector<double>& b) {
  try {
    return stats::spearman_rho(a, b);
  } catch (const Error& e) {
    if (e.code() == Errc::no_variance) return std::nullopt;
    throw;
  }
}

std::optional<double> try_qwk(const std::vector<int>& a, const std::vector<int>& b) {
  try {
    return stats::quadratic_weighted_kappa(a, b, 6);
  } catch (const Error& e) {
    if (e.code() == Errc::degenerate || e.code() == Errc::invalid_argument) return std::nullopt;
    throw;
  }
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string fixed_opt(const std::optional<double>& v, int decimals) { return v ? fixed(*v, decimals) : ""; }

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

AlignmentReport build_alignment_table(const ResponseMap& human, const ResponseMap& llm, PoolingMode mode) {
  require(!human.empty(), Errc::invalid_argument, "alignment table: no participants");
  require(human.size() == llm.size(), Errc::invalid_argument, "alignment table: participant key sets differ");
  for (const auto& [code, rs] : human) {
    require(llm.count(code) == 1, Errc::invalid_argument, "alignment table: no llm responses for " + code);
    rs.validate();
    llm.at(code).validate();
  }

  AlignmentReport report;
  report.mode = mode;
  report.participants = human.size();

  std::vector<ValueProfile> hp, lp;
  for (const auto& [code, rs] : human) {
    hp.push_back(score_profile(rs, ProfileSource::manual));
    lp.push_back(score_profile(llm.at(code), ProfileSource::llm));
  }

  std::vector<double> alphas_h, alphas_l;
  for (const auto& info : value_table()) {
    AlignmentRow row;
    row.value = info.value;
    std::vector<int> a, b;
    stats::Matrix mh, ml;
    double ex = 0, w1 = 0, w2 = 0;
    for (const auto& [code, rs] : human) {
      const auto& other = llm.at(code);
      std::vector<int> pa, pb;
      std::vector<double> rh, rl;
      for (int item : info.items) {
        auto i = static_cast<std::size_t>(item - 1);
        pa.push_back(rs.scores[i]);
        pb.push_back(other.scores[i]);
        rh.push_back(rs.scores[i]);
        rl.push_back(other.scores[i]);
      }
      a.insert(a.end(), pa.begin(), pa.end());
      b.insert(b.end(), pb.begin(), pb.end());
      mh.push_back(std::move(rh));
      ml.push_back(std::move(rl));
      ex += stats::exact_agreement(pa, pb);
      w1 += stats::within_k_agreement(pa, pb, 1);
      w2 += stats::within_k_agreement(pa, pb, 2);
    }
    if (mode == PoolingMode::pooled) {
      row.exact_pct = stats::exact_agreement(a, b);
      row.within1_pct = stats::within_k_agreement(a, b, 1);
      row.within2_pct = stats::within_k_agreement(a, b, 2);
    } else {
      double p = static_cast<double>(human.size());
      row.exact_pct = ex / p;
      row.within1_pct = w1 / p;
      row.within2_pct = w2 / p;
    }
    row.qwk = try_qwk(a, b);
    row.alpha_human = try_alpha(mh);
    row.alpha_llm = try_alpha(ml);
    if (row.alpha_human) alphas_h.push_back(*row.alpha_human);
    if (row.alpha_llm) alphas_l.push_back(*row.alpha_llm);
    row.highlight = classify_row(row.within1_pct, row.qwk);
    report.mean_exact += row.exact_pct;
    report.mean_within1 += row.within1_pct;
    report.rows.push_back(row);
  }
  report.mean_exact /= static_cast<double>(kValueCount);
  report.mean_within1 /= static_cast<double>(kValueCount);

  std::vector<double> mean_h(kValueCount, 0.0), mean_l(kValueCount, 0.0);
  for (std::size_t p = 0; p < hp.size(); ++p)
    for (std::size_t v = 0; v < kValueCount; ++v) {
      mean_h[v] += hp[p].centered[v];
      mean_l[v] += lp[p].centered[v];
    }
  for (std::size_t v = 0; v < kValueCount; ++v) {
    mean_h[v] /= static_cast<double>(hp.size());
    mean_l[v] /= static_cast<double>(hp.size());
  }
  report.spearman_mean_profile = try_spearman(mean_h, mean_l);

  double rho_sum = 0;
  std::size_t rho_n = 0;
  for (std::size_t p = 0; p < hp.size(); ++p) {
    std::vector<double> x(hp[p].centered.begin(), hp[p].centered.end());
    std::vector<double> y(lp[p].centered.begin(), lp[p].centered.end());
    if (auto r = try_spearman(x, y)) {
      rho_sum += *r;
      ++rho_n;
    }
  }
  if (rho_n > 0) report.spearman_per_participant = rho_sum / static_cast<double>(rho_n);
  if (!alphas_h.empty()) report.median_alpha_human = stats::median(alphas_h);
  if (!alphas_l.empty()) report.median_alpha_llm = stats::median(alphas_l);
  return report;
}

json to_json(const AlignmentReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    const auto& info = value_info(row.value);
    rows.push_back({{"value", info.code},
                    {"name", info.name},
                    {"description", info.description},
                    {"alpha_human", opt(row.alpha_human)},
                    {"alpha_llm", opt(row.alpha_llm)},
                    {"exact_pct", row.exact_pct},
                    {"within1_pct", row.within1_pct},
                    {"within2_pct", row.within2_pct},
                    {"qwk", opt(row.qwk)},
                    {"highlight", to_string(row.highlight)}});
  }
  return {{"mode", to_string(r.mode)},
          {"participants", r.participants},
          {"rows", rows},
          {"aggregates",
           {{"mean_exact_pct", r.mean_exact},
            {"mean_within1_pct", r.mean_within1},
            {"spearman_mean_profile", opt(r.spearman_mean_profile)},
            {"spearman_per_participant", opt(r.spearman_per_participant)},
            {"median_alpha_human", opt(r.median_alpha_human)},
            {"median_alpha_llm", opt(r.median_alpha_llm)}}}};
}

std::string to_csv(const AlignmentReport& r) {
  std::ostringstream out;
  out << "value,name,description,alpha_human,alpha_llm,exact_pct,within1_pct,within2_pct,qwk,highlight\n";
  for (const auto& row : r.rows) {
    const auto& info = value_info(row.value);
    out << info.code << ',' << csv_field(info.name) << ',' << csv_field(info.description) << ','
        << fixed_opt(row.alpha_human, 2) << ',' << fixed_opt(row.alpha_llm, 2) << ',' << fixed(row.exact_pct, 1) << ','
        << fixed(row.within1_pct, 1) << ',' << fixed(row.within2_pct, 1) << ',' << fixed_opt(row.qwk, 2) << ','
        << to_string(row.highlight) << '\n';
  }
  return out.str();
}

ResponseMap load_response_dir(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  require(fs::is_directory(dir), Errc::io, "not a directory: " + dir.string());
  ResponseMap out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
    std::ifstream in(entry.path());
    require(static_cast<bool>(in), Errc::io, "cannot read " + entry.path().string());
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      fail(Errc::parse, entry.path().string() + ": " + e.what());
    }
    out.emplace(entry.path().stem().string(), j.get<ResponseSet>());
  }
  return out;
}

}  // namespace vapt
