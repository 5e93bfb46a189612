#pragma once

#include <cstddef>
#include <vector>

// Deliberately naive reference implementations used to cross-check the
// library. Each one uses a different formulation from the production code.
namespace oracle {

double exact_pct(const std::vector<int>& a, const std::vector<int>& b);
double within_pct(const std::vector<int>& a, const std::vector<int>& b, int k);

// 1 - sum_i (a_i - b_i)^2 / ((1/n) sum_i sum_j (a_i - b_j)^2)
double qwk(const std::vector<int>& a, const std::vector<int>& b);

// k/(k-1) * (1 - trace(C) / sum(C)) over the sample covariance matrix C.
double cronbach_alpha(const std::vector<std::vector<double>>& m);

// Ranks by counting smaller and equal elements; raw-sum Pearson.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

// Raw sums of d and d^2.
double cohens_d(const std::vector<double>& pre, const std::vector<double>& post);

// Offsets 0, stride, 2*stride, ... while offset < n; keep windows with >= 2 messages.
std::size_t window_count(std::size_t n, std::size_t size, std::size_t stride);

}  // namespace oracle
