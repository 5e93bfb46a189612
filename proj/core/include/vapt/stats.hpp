#pragma once

#include <span>
#include <vector>

namespace vapt::stats {

// Percent of positions where a[i] == b[i].
double exact_agreement(std::span<const int> a, std::span<const int> b);

// Percent of positions where |a[i] - b[i]| <= k.
double within_k_agreement(std::span<const int> a, std::span<const int> b, int k);

// Ratings must lie in 1..categories. Identical vectors give 1.0; a
// zero-variance side otherwise raises Errc::degenerate.
double quadratic_weighted_kappa(std::span<const int> a, std::span<const int> b, int categories = 6);

// rows = respondents, columns = items. Sample variances.
using Matrix = std::vector<std::vector<double>>;
double cronbach_alpha(const Matrix& m);

// Pearson correlation of tie-averaged ranks.
double spearman_rho(std::span<const double> a, std::span<const double> b);
std::vector<double> average_ranks(std::span<const double> v);

// mean(post - pre) / sd(post - pre) for paired samples.
double cohens_d(std::span<const double> pre, std::span<const double> post);

double mean(std::span<const double> v);
double sample_variance(std::span<const double> v);
double median(std::vector<double> v);

}  // namespace vapt::stats
