#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "support/oracles.hpp"
#include "surp/error.hpp"
#include "surp/pcfg.hpp"
#include "surp/stats.hpp"

using namespace surp;

namespace {

// Composite Simpson rule.
template <class F>
double integrate(F f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

double chi2_pdf(double x, double k) {
  if (x <= 0.0) return 0.0;
  return std::exp((k / 2 - 1) * std::log(x) - x / 2 - (k / 2) * std::log(2.0) - std::lgamma(k / 2));
}

double t_pdf(double t, double v) {
  return std::exp(std::lgamma((v + 1) / 2) - std::lgamma(v / 2) - 0.5 * std::log(v * std::numbers::pi) -
                  (v + 1) / 2 * std::log1p(t * t / v));
}

Groups random_groups(std::mt19937_64& rng, std::size_t k, std::size_t n, double shift = 0.0) {
  std::normal_distribution<double> z(0.0, 1.0);
  Groups g(k);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i < n; ++i) g[j].push_back(z(rng) + shift * static_cast<double>(j));
  return g;
}

}  // namespace

TEST_CASE("distributions: chi-square and t tails") {
  CHECK(chi_square_sf(5.991464547107979, 2) == doctest::Approx(0.05).epsilon(1e-10));
  CHECK(chi_square_sf(7.2, 2) == doctest::Approx(std::exp(-3.6)).epsilon(1e-12));
  CHECK(chi_square_sf(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-10));
  CHECK(chi_square_sf(0.0, 3) == 1.0);
  for (double k : {1.0, 2.0, 3.0, 5.0, 9.0}) {
    for (double x : {0.5, 2.0, 6.0}) {
      // Integrate the pdf from x to far in the tail; the integrand for k=1
      // is singular at 0, so the lower limit stays away from it.
      const double want = integrate([&](double u) { return chi2_pdf(u, k); }, x, x + 200.0);
      CHECK(chi_square_sf(x, k) == doctest::Approx(want).epsilon(1e-8));
    }
  }
  CHECK(student_t_sf(0.0, 7) == doctest::Approx(0.5));
  CHECK(student_t_sf(2.228138851986274, 10) == doctest::Approx(0.025).epsilon(1e-9));
  for (double v : {1.0, 3.0, 12.0, 40.0}) {
    for (double t : {0.3, 1.5, 3.0}) {
      const double want = 0.5 - integrate([&](double u) { return t_pdf(u, v); }, 0.0, t);
      CHECK(student_t_sf(t, v) == doctest::Approx(want).epsilon(1e-9));
      CHECK(student_t_sf(-t, v) == doctest::Approx(1.0 - want).epsilon(1e-9));
    }
  }
  CHECK(regularized_gamma_p(2.5, 1.0) + regularized_gamma_q(2.5, 1.0) == doctest::Approx(1.0));
  CHECK(regularized_beta(2.0, 3.0, 0.4) == doctest::Approx(0.5248).epsilon(1e-12));
}

TEST_CASE("midranks share ties") {
  const std::vector<double> v{3.0, 1.0, 3.0, 2.0, 3.0};
  CHECK(midranks(v) == std::vector<double>{4.0, 1.0, 4.0, 2.0, 4.0});
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> w(1 + rng() % 20);
    for (auto& x : w) x = static_cast<double>(rng() % 5);
    CHECK(midranks(w) == testing_support::naive_midranks(w));
  }
}

TEST_CASE("Kruskal-Wallis: worked example") {
  const auto r = kruskal_wallis({{1, 2, 3}, {4, 5, 6}, {7, 8, 9}});
  CHECK(r.statistic == doctest::Approx(7.2).epsilon(1e-12));
  CHECK(r.df == 2);
  CHECK(r.p_value == doctest::Approx(std::exp(-3.6)).epsilon(1e-10));
  CHECK(std::abs(r.p_value - 0.0273) < 1e-3);
  CHECK(r.group_sizes == std::vector<std::size_t>{3, 3, 3});
}

TEST_CASE("Kruskal-Wallis: ties, identical groups and invariance") {
  const auto same = kruskal_wallis({{2, 2, 2}, {2, 2}, {2, 2, 2}});
  CHECK(same.statistic == 0.0);
  CHECK(same.p_value == 1.0);
  const auto equal = kruskal_wallis({{1, 2, 3}, {1, 2, 3}});
  CHECK(equal.statistic == doctest::Approx(0.0));
  CHECK(equal.p_value == doctest::Approx(1.0));

  // Hand-computed with the tie correction: ranks {1.5,1.5,3}, {4,5.5,5.5}.
  const auto tied = kruskal_wallis({{1, 1, 2}, {3, 4, 4}});
  const double h = 12.0 / 42.0 * (36.0 / 3 + 225.0 / 3) - 21.0;
  const double c = 1.0 - 12.0 / 210.0;
  CHECK(tied.statistic == doctest::Approx(h / c).epsilon(1e-12));

  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    auto g = random_groups(rng, 3, 6, 0.5);
    const auto base = kruskal_wallis(g);
    for (auto& grp : g)
      for (auto& x : grp) x = 3.0 * x + 7.0;
    CHECK(kruskal_wallis(g).statistic == doctest::Approx(base.statistic).epsilon(1e-12));
    for (auto& grp : g)
      for (auto& x : grp) x = std::exp(x / 10.0);
    CHECK(kruskal_wallis(g).statistic == doctest::Approx(base.statistic).epsilon(1e-12));
  }
}

TEST_CASE("Kruskal-Wallis: p-values are roughly uniform under the null") {
  std::mt19937_64 rng(77);
  int rejected = 0;
  const int reps = 2000;
  for (int rep = 0; rep < reps; ++rep)
    if (kruskal_wallis(random_groups(rng, 3, 10)).p_value < 0.05) ++rejected;
  const double rate = static_cast<double>(rejected) / reps;
  CHECK(rate >= 0.03);
  CHECK(rate <= 0.07);
}

TEST_CASE("Kruskal-Wallis and Conover: input errors") {
  CHECK_THROWS_AS(kruskal_wallis({{1, 2, 3}}), Error);
  CHECK_THROWS_AS(kruskal_wallis({{1, 2}, {}}), Error);
  CHECK_THROWS_AS(kruskal_wallis({{1, NAN}, {2, 3}}), Error);
  CHECK_THROWS_AS(conover_posthoc({{1}, {2}}), Error);
}

TEST_CASE("Conover: ordering, symmetry and the permutation oracle") {
  const auto c = conover_posthoc({{1, 2, 3, 4.5}, {4, 5, 6, 7}, {8, 9, 10, 11}});
  REQUIRE(c.pairs.size() == 3);
  CHECK(c.df == 9);
  // Farther apart groups get the smaller p-value.
  CHECK(c.pairs[1].p_value < c.pairs[0].p_value);
  CHECK(c.pairs[1].p_value < c.pairs[2].p_value);
  CHECK(c.pairs[0].statistic < 0.0);

  const auto swapped = conover_posthoc({{4, 5, 6, 7}, {1, 2, 3, 4.5}, {8, 9, 10, 11}});
  CHECK(swapped.pairs[0].statistic == doctest::Approx(-c.pairs[0].statistic));
  CHECK(swapped.pairs[0].p_value == doctest::Approx(c.pairs[0].p_value));

  std::mt19937_64 rng(9);
  for (int d = 0; d < 4; ++d) {
    const auto g = random_groups(rng, 3, 7, 0.4 * d);
    const auto fast = conover_posthoc(g);
    const auto slow = testing_support::conover_permutation_p(g, 20000, 100 + d);
    for (std::size_t q = 0; q < slow.size(); ++q) CHECK(std::abs(fast.pairs[q].p_value - slow[q]) < 0.02);
  }
}

TEST_CASE("Conover: degenerate inputs") {
  const auto tied = conover_posthoc({{1, 1}, {1, 1}, {1, 1}});
  for (const auto& p : tied.pairs) CHECK(p.p_value == 1.0);
  CHECK_FALSE(tied.diagnostics.empty());

  const auto split = conover_posthoc({{1, 1, 1}, {2, 2, 2}, {1, 1, 1}});
  CHECK(split.pairs[0].p_value == 0.0);
  CHECK(split.pairs[1].p_value == 1.0);
  CHECK(std::isinf(split.pairs[0].statistic));
}

TEST_CASE("Holm: step-down adjustment") {
  const std::vector<double> p{0.01, 0.04, 0.03, 0.005};
  const auto h = holm_bonferroni(p, 0.05);
  // Sorted: .005*4=.02, .01*3=.03, .03*2=.06, .04*1=.04 -> running max .06.
  CHECK(h[3].adjusted == doctest::Approx(0.02));
  CHECK(h[0].adjusted == doctest::Approx(0.03));
  CHECK(h[2].adjusted == doctest::Approx(0.06));
  CHECK(h[1].adjusted == doctest::Approx(0.06));
  CHECK(h[3].reject);
  CHECK(h[0].reject);
  CHECK_FALSE(h[2].reject);
  CHECK_FALSE(h[1].reject);

  const auto capped = holm_bonferroni(std::vector<double>{0.5, 0.6});
  CHECK(capped[0].adjusted == 1.0);
  CHECK(holm_bonferroni(std::vector<double>{}).empty());
  CHECK_THROWS_AS(holm_bonferroni(std::vector<double>{1.5}), Error);

  // Closed-form definition on random inputs.
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> q(1 + rng() % 8);
    for (auto& x : q) x = uniform01(rng);
    const auto got = holm_bonferroni(q);
    const std::size_t m = q.size();
    for (std::size_t i = 0; i < m; ++i) {
      // adj_i = max over j with p_j <= p_i of min(1, (m - rank_j) p_j)
      double want = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        if (q[j] > q[i]) continue;
        std::size_t rank = 0;
        for (std::size_t l = 0; l < m; ++l)
          if (q[l] < q[j] || (q[l] == q[j] && l < j)) ++rank;
        want = std::max(want, std::min(1.0, static_cast<double>(m - rank) * q[j]));
      }
      CHECK(got[i].adjusted == want);
    }
  }
}

TEST_CASE("significance stars") {
  CHECK(significance_stars(5e-5) == "****");
  CHECK(significance_stars(5e-4) == "***");
  CHECK(significance_stars(5e-3) == "**");
  CHECK(significance_stars(0.04) == "*");
  CHECK(significance_stars(0.05) == "ns");
}

TEST_CASE("pairwise report lines up with Conover and Holm") {
  const Groups g{{1, 2, 3, 4}, {3, 5, 6, 7}, {8, 9, 10, 12}};
  const auto rep = pairwise_report(g);
  const auto c = conover_posthoc(g);
  std::vector<double> raw;
  for (const auto& t : c.pairs) raw.push_back(t.p_value);
  const auto h = holm_bonferroni(raw);
  REQUIRE(rep.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(rep[i].raw_p == c.pairs[i].p_value);
    CHECK(rep[i].adjusted_p == h[i].adjusted);
  }
}
