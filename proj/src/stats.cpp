#include "surp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "surp/error.hpp"

namespace surp {

namespace {

struct Pooled {
  std::vector<double> ranks;           // pooled mid-ranks, group by group
  std::vector<std::size_t> offsets;    // start of each group in `ranks`
  std::size_t n = 0;
  double tie_sum = 0.0;                // sum of t^3 - t over tie groups
};

void check_groups(const Groups& groups) {
  if (groups.size() < 2) throw Error("need at least two groups");
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) throw Error(fmt::format("group {} is empty", g));
    for (double v : groups[g])
      if (!std::isfinite(v)) throw Error(fmt::format("group {} contains a non-finite value", g));
  }
}

Pooled pool(const Groups& groups) {
  Pooled p;
  std::vector<double> all;
  for (const auto& g : groups) {
    p.offsets.push_back(all.size());
    all.insert(all.end(), g.begin(), g.end());
  }
  p.n = all.size();
  p.ranks = midranks(all);
  std::vector<double> sorted = all;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    p.tie_sum += t * t * t - t;
    i = j;
  }
  return p;
}

double rank_sum(const Pooled& p, const Groups& groups, std::size_t g) {
  double s = 0.0;
  for (std::size_t i = 0; i < groups[g].size(); ++i) s += p.ranks[p.offsets[g] + i];
  return s;
}

double corrected_h(const Pooled& p, const Groups& groups) {
  const double n = static_cast<double>(p.n);
  const double correction = 1.0 - p.tie_sum / (n * n * n - n);
  if (correction <= 0.0) return 0.0;  // every observation tied
  double h = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const double r = rank_sum(p, groups, g);
    h += r * r / static_cast<double>(groups[g].size());
  }
  h = 12.0 / (n * (n + 1.0)) * h - 3.0 * (n + 1.0);
  return std::max(0.0, h / correction);
}

}  // namespace

std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

TestResult kruskal_wallis(const Groups& groups) {
  check_groups(groups);
  const Pooled p = pool(groups);
  TestResult r;
  r.df = groups.size() - 1;
  for (const auto& g : groups) r.group_sizes.push_back(g.size());
  if (p.n < 2) throw Error("need at least two observations");
  r.statistic = corrected_h(p, groups);
  r.p_value = r.statistic > 0.0 ? chi_square_sf(r.statistic, static_cast<double>(r.df)) : 1.0;
  return r;
}

ConoverResult conover_posthoc(const Groups& groups) {
  check_groups(groups);
  const Pooled p = pool(groups);
  const std::size_t k = groups.size();
  if (p.n <= k) throw Error("Conover test needs more observations than groups");
  const double n = static_cast<double>(p.n);

  ConoverResult out;
  out.df = p.n - k;
  double sum_sq = 0.0;
  for (double r : p.ranks) sum_sq += r * r;
  const double s2 = (sum_sq - n * (n + 1.0) * (n + 1.0) / 4.0) / (n - 1.0);
  const double h = corrected_h(p, groups);
  const double scale = s2 * (n - 1.0 - h) / static_cast<double>(out.df);

  std::vector<double> mean_rank(k);
  for (std::size_t g = 0; g < k; ++g)
    mean_rank[g] = rank_sum(p, groups, g) / static_cast<double>(groups[g].size());

  const bool degenerate = !(s2 > 1e-12);
  if (degenerate) out.diagnostics.push_back("all observations tied; pairwise p-values set to 1");
  const bool perfect = !degenerate && !(scale > 1e-12 * s2);
  if (perfect)
    out.diagnostics.push_back("groups are perfectly separated; rank variance within groups is zero");

  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      PairwiseTest t;
      t.a = a;
      t.b = b;
      const double diff = mean_rank[a] - mean_rank[b];
      if (degenerate) {
        t.statistic = 0.0;
        t.p_value = 1.0;
      } else if (perfect) {
        if (std::abs(diff) < 1e-12) {
          t.statistic = 0.0;
          t.p_value = 1.0;
        } else {
          t.statistic = std::copysign(std::numeric_limits<double>::infinity(), diff);
          t.p_value = 0.0;
        }
      } else {
        const double se = std::sqrt(scale * (1.0 / static_cast<double>(groups[a].size()) +
                                             1.0 / static_cast<double>(groups[b].size())));
        t.statistic = diff / se;
        t.p_value = std::min(1.0, 2.0 * student_t_sf(std::abs(t.statistic),
                                                     static_cast<double>(out.df)));
      }
      out.pairs.push_back(t);
    }
  }
  return out;
}

std::vector<HolmEntry> holm_bonferroni(std::span<const double> p_values, double alpha) {
  const std::size_t m = p_values.size();
  for (double p : p_values)
    if (!(p >= 0.0 && p <= 1.0)) throw Error(fmt::format("p-value {} outside [0, 1]", p));
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
  std::vector<HolmEntry> out(m);
  double running = 0.0;
  bool still_rejecting = true;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t idx = order[i];
    const double factor = static_cast<double>(m - i);
    running = std::max(running, std::min(1.0, factor * p_values[idx]));
    out[idx].raw = p_values[idx];
    out[idx].adjusted = running;
    if (still_rejecting && p_values[idx] * factor <= alpha) {
      out[idx].reject = true;
    } else {
      still_rejecting = false;
    }
  }
  return out;
}

std::vector<PairwiseComparison> pairwise_report(const Groups& groups, double alpha) {
  const ConoverResult c = conover_posthoc(groups);
  std::vector<double> raw;
  for (const auto& t : c.pairs) raw.push_back(t.p_value);
  const auto holm = holm_bonferroni(raw, alpha);
  std::vector<PairwiseComparison> out;
  for (std::size_t i = 0; i < c.pairs.size(); ++i) {
    out.push_back({c.pairs[i].a, c.pairs[i].b, c.pairs[i].statistic, holm[i].raw,
                   holm[i].adjusted, holm[i].reject});
  }
  return out;
}

std::string significance_stars(double p) {
  if (p < 1e-4) return "****";
  if (p < 1e-3) return "***";
  if (p < 1e-2) return "**";
  if (p < 0.05) return "*";
  return "ns";
}

}  // namespace surp
