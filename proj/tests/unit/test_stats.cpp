#include <doctest.h>

#include <cmath>
#include <random>

#include "../support/oracles.hpp"
#include "vapt/error.hpp"
#include "vapt/rng.hpp"
#include "vapt/stats.hpp"

using namespace vapt;
using vapt::stats::Matrix;

namespace {

std::vector<int> random_ratings(SeededRng& rng, std::size_t n) {
  std::vector<int> v(n);
  for (auto& x : v) x = rng.between(1, 6);
  return v;
}

bool constant(const std::vector<int>& v) { return std::all_of(v.begin(), v.end(), [&](int x) { return x == v[0]; }); }

}  // namespace

TEST_SUITE("stats") {
  TEST_CASE("exact and within-k agreement") {
    std::vector<int> a{1, 2, 3, 4}, b{1, 2, 4, 6};
    CHECK(stats::exact_agreement(a, b) == doctest::Approx(50.0));
    CHECK(stats::exact_agreement(a, a) == 100.0);
    CHECK(stats::exact_agreement(std::vector<int>{1, 2, 3}, std::vector<int>{4, 5, 6}) == 0.0);
    CHECK(stats::within_k_agreement(std::vector<int>{1, 1, 1}, std::vector<int>{2, 3, 4}, 1) ==
          doctest::Approx(100.0 / 3.0));
    CHECK_THROWS_AS(stats::exact_agreement(std::vector<int>{1, 2}, std::vector<int>{1}), Error);
  }

  TEST_CASE("agreement is monotone in k") {
    SeededRng rng(11);
    for (int t = 0; t < 100; ++t) {
      auto n = static_cast<std::size_t>(rng.between(1, 63));
      auto a = random_ratings(rng, n), b = random_ratings(rng, n);
      double ex = stats::exact_agreement(a, b);
      double w1 = stats::within_k_agreement(a, b, 1);
      double w2 = stats::within_k_agreement(a, b, 2);
      CHECK(ex <= w1);
      CHECK(w1 <= w2);
      CHECK(w2 <= 100.0);
    }
  }

  TEST_CASE("qwk hand values") {
    std::vector<int> up{1, 2, 3, 4, 5, 6}, down{6, 5, 4, 3, 2, 1};
    CHECK(stats::quadratic_weighted_kappa(up, down) == doctest::Approx(-1.0).epsilon(1e-12));
    std::vector<int> a{1, 1, 2, 2}, b{1, 2, 1, 2};
    CHECK(stats::quadratic_weighted_kappa(a, b) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(stats::quadratic_weighted_kappa(a, b) == stats::quadratic_weighted_kappa(b, a));
    CHECK(stats::quadratic_weighted_kappa(up, up) == 1.0);
  }

  TEST_CASE("qwk degenerate inputs") {
    std::vector<int> c{3, 3, 3}, d{2, 3, 4}, e{4, 4, 4};
    CHECK(stats::quadratic_weighted_kappa(c, c) == 1.0);
    CHECK_THROWS_WITH_AS(stats::quadratic_weighted_kappa(c, d), doctest::Contains("zero variance"), Error);
    CHECK_THROWS_AS(stats::quadratic_weighted_kappa(c, e), Error);
    CHECK_THROWS_AS(stats::quadratic_weighted_kappa(std::vector<int>{0, 1}, std::vector<int>{1, 2}), Error);
    CHECK_THROWS_AS(stats::quadratic_weighted_kappa(std::vector<int>{7, 1}, std::vector<int>{1, 2}), Error);
  }

  TEST_CASE("qwk properties") {
    SeededRng rng(23);
    for (int t = 0; t < 200; ++t) {
      auto n = static_cast<std::size_t>(rng.between(2, 40));
      auto a = random_ratings(rng, n), b = random_ratings(rng, n);
      if (constant(a) || constant(b)) continue;
      double k = stats::quadratic_weighted_kappa(a, b);
      CHECK(k >= -1.0 - 1e-12);
      CHECK(k <= 1.0 + 1e-12);
      CHECK(k == doctest::Approx(stats::quadratic_weighted_kappa(b, a)).epsilon(1e-12));
      CHECK(stats::quadratic_weighted_kappa(a, a) == 1.0);
      // Shifting both sides by one category keeps every distance.
      bool fits = std::all_of(a.begin(), a.end(), [](int x) { return x < 6; }) &&
                  std::all_of(b.begin(), b.end(), [](int x) { return x < 6; });
      if (fits) {
        auto sa = a, sb = b;
        for (auto& x : sa) ++x;
        for (auto& x : sb) ++x;
        CHECK(stats::quadratic_weighted_kappa(sa, sb) == doctest::Approx(k).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("cronbach alpha hand values") {
    Matrix m{{2, 3, 3}, {4, 4, 5}, {3, 5, 4}};
    CHECK(stats::cronbach_alpha(m) == doctest::Approx(6.0 / 7.0).epsilon(1e-12));
    Matrix same{{1, 1, 1}, {3, 3, 3}, {6, 6, 6}, {2, 2, 2}};
    CHECK(stats::cronbach_alpha(same) == doctest::Approx(1.0).epsilon(1e-12));
    Matrix neg{{1, 6, 3}, {6, 1, 4}, {2, 5, 3}, {5, 2, 4}};
    CHECK(stats::cronbach_alpha(neg) == doctest::Approx(-51.0).epsilon(1e-12));
  }

  TEST_CASE("cronbach alpha errors") {
    CHECK_THROWS_AS(stats::cronbach_alpha(Matrix{{1, 2, 3}}), Error);
    CHECK_THROWS_AS(stats::cronbach_alpha(Matrix{{1}, {2}}), Error);
    CHECK_THROWS_AS(stats::cronbach_alpha(Matrix{{1, 2}, {3}}), Error);
    try {
      stats::cronbach_alpha(Matrix{{2, 2, 2}, {2, 2, 2}});
      FAIL("expected no_variance");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::no_variance);
    }
  }

  TEST_CASE("cronbach alpha invariances") {
    SeededRng rng(5);
    for (int t = 0; t < 100; ++t) {
      auto n = static_cast<std::size_t>(rng.between(2, 20));
      Matrix m(n, std::vector<double>(3));
      for (auto& row : m)
        for (auto& x : row) x = rng.between(1, 6);
      double alpha;
      try {
        alpha = stats::cronbach_alpha(m);
      } catch (const Error&) {
        continue;
      }
      auto shifted = m;
      for (auto& row : shifted) row[1] += 2.5;
      CHECK(stats::cronbach_alpha(shifted) == doctest::Approx(alpha).epsilon(1e-9));
      auto scaled = m;
      for (auto& row : scaled)
        for (auto& x : row) x *= 3.0;
      CHECK(stats::cronbach_alpha(scaled) == doctest::Approx(alpha).epsilon(1e-9));
    }
  }

  TEST_CASE("spearman hand values") {
    std::vector<double> a{1, 2, 2, 4}, b{2, 1, 3, 4};
    CHECK(stats::spearman_rho(a, b) == doctest::Approx(3.0 / std::sqrt(22.5)).epsilon(1e-12));
    std::vector<double> inc{1, 2, 3, 4, 5};
    std::vector<double> dec{5, 4, 3, 2, 1};
    CHECK(stats::spearman_rho(inc, inc) == doctest::Approx(1.0));
    CHECK(stats::spearman_rho(inc, dec) == doctest::Approx(-1.0));
    CHECK(stats::average_ranks(a) == std::vector<double>{1, 2.5, 2.5, 4});
    CHECK_THROWS_AS(stats::spearman_rho(std::vector<double>{1, 2}, std::vector<double>{1, 2}), Error);
    CHECK_THROWS_AS(stats::spearman_rho(std::vector<double>{1, 1, 1}, inc), Error);
  }

  TEST_CASE("spearman is invariant under monotone transforms") {
    SeededRng rng(8);
    for (int t = 0; t < 100; ++t) {
      auto n = static_cast<std::size_t>(rng.between(3, 30));
      std::vector<double> a(n), b(n);
      for (std::size_t i = 0; i < n; ++i) {
        a[i] = rng.between(-5, 5);
        b[i] = rng.between(-5, 5);
      }
      double rho;
      try {
        rho = stats::spearman_rho(a, b);
      } catch (const Error&) {
        continue;
      }
      auto ea = a;
      for (auto& x : ea) x = std::exp(x) + 7.0;
      CHECK(stats::spearman_rho(ea, b) == doctest::Approx(rho).epsilon(1e-12));
    }
  }

  TEST_CASE("cohens d") {
    std::vector<double> pre{1, 2, 3, 4, 5}, post{2, 3, 4, 5, 5};
    CHECK(stats::cohens_d(pre, post) == doctest::Approx(4.0 / std::sqrt(5.0)).epsilon(1e-12));
    CHECK(stats::cohens_d(post, pre) == doctest::Approx(-stats::cohens_d(pre, post)).epsilon(1e-12));
    CHECK_THROWS_AS(stats::cohens_d(pre, pre), Error);
    CHECK_THROWS_AS(stats::cohens_d(std::vector<double>{1}, std::vector<double>{2}), Error);
  }

  TEST_CASE("statistics agree with naive references") {
    SeededRng rng(2024);
    int compared = 0;
    for (int t = 0; t < 200; ++t) {
      auto n = static_cast<std::size_t>(rng.between(3, 63));
      auto a = random_ratings(rng, n), b = random_ratings(rng, n);
      CHECK(std::abs(stats::exact_agreement(a, b) - oracle::exact_pct(a, b)) < 1e-9);
      CHECK(std::abs(stats::within_k_agreement(a, b, 1) - oracle::within_pct(a, b, 1)) < 1e-9);
      CHECK(std::abs(stats::within_k_agreement(a, b, 2) - oracle::within_pct(a, b, 2)) < 1e-9);
      if (!constant(a) && !constant(b)) {
        CHECK(std::abs(stats::quadratic_weighted_kappa(a, b) - oracle::qwk(a, b)) < 1e-9);
        ++compared;
      }
      std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
      if (!constant(a) && !constant(b)) CHECK(std::abs(stats::spearman_rho(x, y) - oracle::spearman(x, y)) < 1e-9);
      bool same_diff = true;
      for (std::size_t i = 1; i < n; ++i) same_diff &= (b[i] - a[i]) == (b[0] - a[0]);
      if (!same_diff) CHECK(std::abs(stats::cohens_d(x, y) - oracle::cohens_d(x, y)) < 1e-9);
      auto rows = static_cast<std::size_t>(rng.between(2, 20));
      Matrix m(rows, std::vector<double>(3));
      for (auto& row : m)
        for (auto& v : row) v = rng.between(1, 6);
      try {
        double alpha = stats::cronbach_alpha(m);
        CHECK(std::abs(alpha - oracle::cronbach_alpha(m)) < 1e-9);
      } catch (const Error& e) {
        CHECK(e.code() == Errc::no_variance);
      }
    }
    CHECK(compared > 150);
  }
}
