#include "vapt/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "vapt/error.hpp"

namespace vapt::stats {

namespace {

template <typename T>
void check_pair(std::span<const T> a, std::span<const T> b, std::size_t min_n, const char* what) {
  require(a.size() == b.size(), Errc::length_mismatch,
          std::string(what) + ": length mismatch " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  require(a.size() >= min_n, Errc::invalid_argument,
          std::string(what) + ": needs at least " + std::to_string(min_n) + " pairs");
}

double pearson(std::span<const double> x, std::span<const double> y) {
  double mx = mean(x), my = mean(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  require(sxx > 0 && syy > 0, Errc::no_variance, "correlation: zero variance");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

double mean(std::span<const double> v) {
  require(!v.empty(), Errc::invalid_argument, "mean of empty sample");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v) {
  require(v.size() >= 2, Errc::invalid_argument, "sample variance needs 2 observations");
  double m = mean(v);
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

double median(std::vector<double> v) {
  require(!v.empty(), Errc::invalid_argument, "median of empty sample");
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

double exact_agreement(std::span<const int> a, std::span<const int> b) {
  check_pair(a, b, 1, "exact_agreement");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < a.size(); ++i) hits += a[i] == b[i];
  return 100.0 * static_cast<double>(hits) / static_cast<double>(a.size());
}

double within_k_agreement(std::span<const int> a, std::span<const int> b, int k) {
  check_pair(a, b, 1, "within_k_agreement");
  require(k >= 0, Errc::invalid_argument, "within_k_agreement: k must be non-negative");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < a.size(); ++i) hits += std::abs(a[i] - b[i]) <= k;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(a.size());
}

double quadratic_weighted_kappa(std::span<const int> a, std::span<const int> b, int categories) {
  check_pair(a, b, 2, "quadratic_weighted_kappa");
  require(categories >= 2, Errc::invalid_argument, "quadratic_weighted_kappa: need at least 2 categories");
  for (std::size_t i = 0; i < a.size(); ++i)
    require(a[i] >= 1 && a[i] <= categories && b[i] >= 1 && b[i] <= categories, Errc::out_of_range,
            "quadratic_weighted_kappa: rating outside 1.." + std::to_string(categories));
  if (std::equal(a.begin(), a.end(), b.begin())) return 1.0;
  auto constant = [](std::span<const int> v) { return std::all_of(v.begin(), v.end(), [&](int x) { return x == v[0]; }); };
  require(!constant(a) && !constant(b), Errc::degenerate, "quadratic_weighted_kappa: a side has zero variance");

  const auto k = static_cast<std::size_t>(categories);
  std::vector<double> observed(k * k, 0.0), row(k, 0.0), col(k, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto r = static_cast<std::size_t>(a[i] - 1), c = static_cast<std::size_t>(b[i] - 1);
    observed[r * k + c] += 1.0;
    row[r] += 1.0;
    col[c] += 1.0;
  }
  const double n = static_cast<double>(a.size());
  const double denom_w = static_cast<double>((categories - 1) * (categories - 1));
  double num = 0, den = 0;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      double d = static_cast<double>(i) - static_cast<double>(j);
      double w = d * d / denom_w;
      num += w * observed[i * k + j];
      den += w * row[i] * col[j] / n;
    }
  return 1.0 - num / den;
}

double cronbach_alpha(const Matrix& m) {
  require(m.size() >= 2, Errc::invalid_argument, "cronbach_alpha: needs at least 2 respondents");
  const std::size_t items = m[0].size();
  require(items >= 2, Errc::invalid_argument, "cronbach_alpha: needs at least 2 items");
  for (const auto& r : m) require(r.size() == items, Errc::length_mismatch, "cronbach_alpha: ragged matrix");

  double item_var_sum = 0;
  std::vector<double> column(m.size()), totals(m.size(), 0.0);
  for (std::size_t j = 0; j < items; ++j) {
    for (std::size_t i = 0; i < m.size(); ++i) {
      column[i] = m[i][j];
      totals[i] += m[i][j];
    }
    item_var_sum += sample_variance(column);
  }
  double total_var = sample_variance(totals);
  require(total_var > 0, Errc::no_variance, "cronbach_alpha: total score has zero variance");
  double kk = static_cast<double>(items);
  return kk / (kk - 1.0) * (1.0 - item_var_sum / total_var);
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman_rho(std::span<const double> a, std::span<const double> b) {
  check_pair(a, b, 3, "spearman_rho");
  auto ra = average_ranks(a), rb = average_ranks(b);
  return pearson(ra, rb);
}

double cohens_d(std::span<const double> pre, std::span<const double> post) {
  check_pair(pre, post, 2, "cohens_d");
  std::vector<double> diff(pre.size());
  for (std::size_t i = 0; i < pre.size(); ++i) diff[i] = post[i] - pre[i];
  double var = sample_variance(diff);
  require(var > 0, Errc::no_variance, "cohens_d: differences have zero standard deviation");
  return mean(diff) / std::sqrt(var);
}

}  // namespace vapt::stats
