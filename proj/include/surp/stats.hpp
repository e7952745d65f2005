#pragma once

// Rank-based group comparison: Kruskal-Wallis omnibus test, Conover-Iman
// pairwise follow-up, Holm-Bonferroni step-down correction.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace surp {

// Special functions (relative error well below 1e-10 in the tested ranges).
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);
double regularized_beta(double a, double b, double x);
// P(X > x) for X ~ chi-square with `df` degrees of freedom.
double chi_square_sf(double x, double df);
// P(T > t) for Student's t with `df` degrees of freedom.
double student_t_sf(double t, double df);

// Mid-ranks (1-based) of the values; ties share the average of their ranks.
std::vector<double> midranks(std::span<const double> values);

using Groups = std::vector<std::vector<double>>;

struct TestResult {
  double statistic = 0.0;
  std::size_t df = 0;
  double p_value = 1.0;
  std::vector<std::size_t> group_sizes;
};

// Tie-corrected H with a chi-square(k-1) p-value. Identical data give H = 0, p = 1.
TestResult kruskal_wallis(const Groups& groups);

struct PairwiseTest {
  std::size_t a = 0;
  std::size_t b = 0;
  double statistic = 0.0;  // signed, mean rank of a minus mean rank of b
  double p_value = 1.0;    // two-sided
};

struct ConoverResult {
  std::vector<PairwiseTest> pairs;  // (0,1), (0,2), ..., (1,2), ...
  std::size_t df = 0;               // N - k
  std::vector<std::string> diagnostics;
};

// Conover-Iman t tests on the pooled ranks:
//   t = (Rbar_a - Rbar_b) / sqrt(S2 * (N - 1 - H) / (N - k) * (1/n_a + 1/n_b))
// with S2 = (sum R^2 - N (N+1)^2 / 4) / (N - 1) and H the tie-corrected
// Kruskal-Wallis statistic.
ConoverResult conover_posthoc(const Groups& groups);

struct HolmEntry {
  double raw = 1.0;
  double adjusted = 1.0;
  bool reject = false;
};

// Entries are returned in the input order.
std::vector<HolmEntry> holm_bonferroni(std::span<const double> p_values, double alpha = 0.05);

struct PairwiseComparison {
  std::size_t a = 0;
  std::size_t b = 0;
  double statistic = 0.0;
  double raw_p = 1.0;
  double adjusted_p = 1.0;
  bool reject = false;
};

// Conover post-hoc followed by Holm-Bonferroni over all pairs.
std::vector<PairwiseComparison> pairwise_report(const Groups& groups, double alpha = 0.05);

// "****" p < 1e-4, "***" < 1e-3, "**" < 1e-2, "*" < 0.05, otherwise "ns".
std::string significance_stars(double p);

}  // namespace surp
