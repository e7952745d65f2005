#include <algorithm>
#include <map>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "surp/error.hpp"
#include "surp/svm.hpp"

namespace surp {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

FeatureMatrix take_rows(const FeatureMatrix& x, const std::vector<std::size_t>& rows) {
  FeatureMatrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r)
    out.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(rows[r]));
  return out;
}

Labels take(const Labels& y, const std::vector<std::size_t>& rows) {
  Labels out;
  for (auto r : rows) out.push_back(y[r]);
  return out;
}

std::vector<std::size_t> complement(std::size_t n, const std::vector<std::size_t>& held_out) {
  std::vector<bool> out_mask(n, false);
  for (auto r : held_out) out_mask[r] = true;
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < n; ++i)
    if (!out_mask[i]) rest.push_back(i);
  return rest;
}

}  // namespace

std::vector<std::vector<std::size_t>> stratified_folds(const Labels& y, std::size_t k,
                                                       std::uint64_t seed) {
  if (k < 2) throw Error("cross-validation needs at least 2 folds");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i]].push_back(i);
  for (const auto& [label, rows] : by_class)
    if (rows.size() < k)
      throw Error(fmt::format(
          "class {} has {} members, too few for stratified {}-fold cross-validation; use at most "
          "{} folds",
          label, rows.size(), k, rows.size()));

  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t next = 0;
  for (auto& [label, rows] : by_class) {
    for (std::size_t i = rows.size(); i-- > 1;) {
      const auto j = static_cast<std::size_t>(rng() % (i + 1));
      std::swap(rows[i], rows[j]);
    }
    for (auto r : rows) {
      folds[next].push_back(r);
      next = (next + 1) % k;
    }
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

Selection select_hyperparameters(const FeatureMatrix& x, const Labels& y, const HyperGrid& grid,
                                 std::size_t folds, std::uint64_t seed, const SvmParams& base) {
  if (grid.C.empty() || grid.gamma.empty()) throw Error("hyperparameter grid is empty");
  const auto split = stratified_folds(y, folds, seed);
  const std::size_t nc = grid.C.size();
  const std::size_t ng = grid.gamma.size();
  std::vector<double> total(nc * ng, 0.0);

  for (const auto& test : split) {
    const auto train = complement(y.size(), test);
    const FeatureMatrix xtr = take_rows(x, train);
    const Labels ytr = take(y, train);
    const Labels yte = take(y, test);
    const Standardizer s =
        base.standardize ? Standardizer::fit(xtr) : Standardizer::identity(x.cols());
    const FeatureMatrix ztr = s.apply(xtr);
    const FeatureMatrix zte = s.apply(take_rows(x, test));
    const Eigen::MatrixXd dtr = squared_distances(ztr, ztr);
    const Eigen::MatrixXd dte = squared_distances(zte, ztr);
    for (std::size_t gi = 0; gi < ng; ++gi) {
      const Eigen::MatrixXd ktr = (-grid.gamma[gi] * dtr).array().exp();
      const Eigen::MatrixXd kte = (-grid.gamma[gi] * dte).array().exp();
      for (std::size_t ci = 0; ci < nc; ++ci) {
        const DualSolution sol = solve_dual(ktr, ytr, grid.C[ci], base.tol, base.max_iter);
        Eigen::VectorXd coef(static_cast<Eigen::Index>(ytr.size()));
        for (std::size_t i = 0; i < ytr.size(); ++i)
          coef(static_cast<Eigen::Index>(i)) = sol.alpha[i] * ytr[i];
        const Eigen::VectorXd d = (kte * coef).array() + sol.bias;
        Labels pred;
        for (Eigen::Index i = 0; i < d.size(); ++i) pred.push_back(d(i) >= 0.0 ? 1 : -1);
        total[ci * ng + gi] += accuracy(pred, yte);
      }
    }
  }

  Selection best;
  bool have = false;
  for (std::size_t ci = 0; ci < nc; ++ci)
    for (std::size_t gi = 0; gi < ng; ++gi) {
      const double mean = total[ci * ng + gi] / static_cast<double>(split.size());
      if (!have || mean > best.mean_accuracy) {
        best.C = grid.C[ci];
        best.gamma = grid.gamma[gi];
        best.mean_accuracy = mean;
        have = true;
      }
    }
  best.standardizer = base.standardize ? Standardizer::fit(x) : Standardizer::identity(x.cols());
  return best;
}

std::uint64_t inner_seed(std::uint64_t seed, std::size_t fold) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(fold) + 1));
}

double CvReport::mean_accuracy() const {
  if (folds.empty()) return 0.0;
  double s = 0.0;
  for (const auto& f : folds) s += f.accuracy;
  return s / static_cast<double>(folds.size());
}

CvReport nested_cv(const FeatureMatrix& x, const Labels& y, const HyperGrid& grid,
                   std::size_t folds, std::uint64_t seed, const SvmParams& base) {
  if (static_cast<std::size_t>(x.rows()) != y.size())
    throw Error(fmt::format("{} feature rows but {} labels", x.rows(), y.size()));
  CvReport report;
  report.chance = chance_level(y);
  const auto split = stratified_folds(y, folds, seed);
  for (std::size_t f = 0; f < split.size(); ++f) {
    const auto train = complement(y.size(), split[f]);
    const FeatureMatrix xtr = take_rows(x, train);
    const Labels ytr = take(y, train);
    const Selection sel = select_hyperparameters(xtr, ytr, grid, folds, inner_seed(seed, f), base);
    SvmParams p = base;
    p.C = sel.C;
    p.gamma = sel.gamma;
    const SvmModel model = svm_train(xtr, ytr, p);
    FoldResult r;
    r.accuracy = accuracy(svm_predict(model, take_rows(x, split[f])), take(y, split[f]));
    r.C = sel.C;
    r.gamma = sel.gamma;
    r.inner_accuracy = sel.mean_accuracy;
    r.standardizer = model.standardizer;
    r.train_size = train.size();
    r.test_size = split[f].size();
    report.folds.push_back(std::move(r));
  }
  return report;
}

double chance_level(const Labels& y) {
  if (y.empty()) throw Error("chance level of an empty label set is undefined");
  std::map<int, std::size_t> counts;
  for (int v : y) ++counts[v];
  std::size_t most = 0;
  for (const auto& [label, c] : counts) most = std::max(most, c);
  return static_cast<double>(most) / static_cast<double>(y.size());
}

}  // namespace surp
