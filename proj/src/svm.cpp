#include "surp/svm.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "surp/error.hpp"

namespace surp {

namespace {

constexpr double kTau = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_labels(const Labels& y) {
  bool pos = false;
  bool neg = false;
  for (int v : y) {
    if (v == 1) pos = true;
    else if (v == -1) neg = true;
    else throw Error(fmt::format("SVM labels must be +1 or -1, got {}", v));
  }
  if (!pos || !neg) throw Error("SVM training needs at least one example of each class");
}

}  // namespace

Standardizer Standardizer::fit(const FeatureMatrix& x) {
  if (x.rows() == 0) throw Error("cannot standardize an empty feature matrix");
  Standardizer s;
  s.mean = x.colwise().mean();
  s.scale.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - s.mean(j)).square().mean();
    const double sd = std::sqrt(var);
    s.scale(j) = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

Standardizer Standardizer::identity(Eigen::Index features) {
  Standardizer s;
  s.mean = Eigen::RowVectorXd::Zero(features);
  s.scale = Eigen::RowVectorXd::Ones(features);
  return s;
}

FeatureMatrix Standardizer::apply(const FeatureMatrix& x) const {
  if (x.cols() != mean.size())
    throw Error(fmt::format("expected {} features, got {}", mean.size(), x.cols()));
  return (x.rowwise() - mean).array().rowwise() / scale.array();
}

Eigen::MatrixXd squared_distances(const FeatureMatrix& a, const FeatureMatrix& b) {
  const Eigen::VectorXd na = a.rowwise().squaredNorm();
  const Eigen::VectorXd nb = b.rowwise().squaredNorm();
  Eigen::MatrixXd d = -2.0 * a * b.transpose();
  d.colwise() += na;
  d.rowwise() += nb.transpose();
  return d.cwiseMax(0.0);
}

Eigen::MatrixXd rbf_kernel(const FeatureMatrix& a, const FeatureMatrix& b, double gamma) {
  return (-gamma * squared_distances(a, b)).array().exp();
}

double dual_objective(const Eigen::MatrixXd& kernel, const Labels& y,
                      std::span<const double> alpha) {
  const auto n = static_cast<Eigen::Index>(y.size());
  Eigen::VectorXd ay(n);
  for (Eigen::Index i = 0; i < n; ++i) ay(i) = alpha[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)];
  return Eigen::Map<const Eigen::VectorXd>(alpha.data(), n).sum() - 0.5 * ay.dot(kernel * ay);
}

// Working-set selection using second-order information, on
//   min 1/2 a'Qa - e'a,  Q_ij = y_i y_j K_ij.
DualSolution solve_dual(const Eigen::MatrixXd& kernel, const Labels& y, double C, double tol,
                        std::size_t max_iter) {
  const std::size_t n = y.size();
  if (static_cast<std::size_t>(kernel.rows()) != n || static_cast<std::size_t>(kernel.cols()) != n)
    throw Error("kernel matrix size does not match the number of labels");
  if (!(C > 0.0) || !(tol > 0.0)) throw Error("C and tol must be positive");
  check_labels(y);

  std::vector<double> a(n, 0.0);
  std::vector<double> g(n, -1.0);  // gradient Qa - e
  auto k = [&](std::size_t i, std::size_t j) {
    return kernel(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  };
  auto in_up = [&](std::size_t t) { return (y[t] == 1 && a[t] < C) || (y[t] == -1 && a[t] > 0.0); };
  auto in_low = [&](std::size_t t) { return (y[t] == 1 && a[t] > 0.0) || (y[t] == -1 && a[t] < C); };

  DualSolution sol;
  std::size_t iter = 0;
  for (;; ++iter) {
    double gmax = -kInf;
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t)
      if (in_up(t) && (i == n || -y[t] * g[t] > gmax)) {
        i = t;
        gmax = -y[t] * g[t];
      }
    double gmin = kInf;
    std::size_t j = n;
    double best = kInf;
    for (std::size_t t = 0; t < n; ++t) {
      if (!in_low(t)) continue;
      const double v = -y[t] * g[t];
      gmin = std::min(gmin, v);
      if (i == n) continue;
      const double b = gmax - v;
      if (b > 0.0) {
        double quad = k(i, i) + k(t, t) - 2.0 * k(i, t);
        if (quad <= 0.0) quad = kTau;
        if (-b * b / quad < best) {
          best = -b * b / quad;
          j = t;
        }
      }
    }
    sol.kkt_gap = (i == n || gmin == kInf) ? 0.0 : gmax - gmin;
    if (i == n || j == n || sol.kkt_gap < tol) break;
    if (iter >= max_iter)
      throw Error(fmt::format(
          "SMO did not converge within {} iterations (C = {}, violating-pair gap {:.3g} > tol {})",
          max_iter, C, sol.kkt_gap, tol));

    const double ai_old = a[i];
    const double aj_old = a[j];
    const double kij = k(i, j);
    if (y[i] != y[j]) {
      double quad = k(i, i) + k(j, j) - 2.0 * kij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-g[i] - g[j]) / quad;
      const double diff = a[i] - a[j];
      a[i] += delta;
      a[j] += delta;
      if (diff > 0.0) {
        if (a[j] < 0.0) { a[j] = 0.0; a[i] = diff; }
        if (a[i] > C) { a[i] = C; a[j] = C - diff; }
      } else {
        if (a[i] < 0.0) { a[i] = 0.0; a[j] = -diff; }
        if (a[j] > C) { a[j] = C; a[i] = C + diff; }
      }
    } else {
      double quad = k(i, i) + k(j, j) - 2.0 * kij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (g[i] - g[j]) / quad;
      const double sum = a[i] + a[j];
      a[i] -= delta;
      a[j] += delta;
      if (sum > C) {
        if (a[i] > C) { a[i] = C; a[j] = sum - C; }
        if (a[j] > C) { a[j] = C; a[i] = sum - C; }
      } else {
        if (a[j] < 0.0) { a[j] = 0.0; a[i] = sum; }
        if (a[i] < 0.0) { a[i] = 0.0; a[j] = sum; }
      }
    }
    const double di = a[i] - ai_old;
    const double dj = a[j] - aj_old;
    for (std::size_t t = 0; t < n; ++t)
      g[t] += y[t] * (y[i] * k(t, i) * di + y[j] * k(t, j) * dj);
  }
  sol.iterations = iter;

  // Bias from the free variables, or the midpoint of the feasible interval.
  double ub = kInf;
  double lb = -kInf;
  double sum_free = 0.0;
  std::size_t free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * g[t];
    if (a[t] >= C) {
      if (y[t] == -1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (a[t] <= 0.0) {
      if (y[t] == 1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++free;
      sum_free += yg;
    }
  }
  const double rho = free > 0 ? sum_free / static_cast<double>(free) : 0.5 * (ub + lb);
  sol.bias = -rho;
  sol.alpha = std::move(a);
  sol.objective = dual_objective(kernel, y, sol.alpha);
  return sol;
}

SvmModel svm_train(const FeatureMatrix& x, const Labels& y, const SvmParams& params) {
  if (static_cast<std::size_t>(x.rows()) != y.size())
    throw Error(fmt::format("{} feature rows but {} labels", x.rows(), y.size()));
  if (!(params.gamma > 0.0)) throw Error("gamma must be positive");
  check_labels(y);

  SvmModel m;
  m.C = params.C;
  m.gamma = params.gamma;
  m.standardizer = params.standardize ? Standardizer::fit(x) : Standardizer::identity(x.cols());
  const FeatureMatrix z = m.standardizer.apply(x);
  const DualSolution sol = solve_dual(rbf_kernel(z, z, params.gamma), y, params.C, params.tol,
                                      params.max_iter);
  std::vector<Eigen::Index> support;
  for (std::size_t i = 0; i < sol.alpha.size(); ++i)
    if (sol.alpha[i] > 0.0) support.push_back(static_cast<Eigen::Index>(i));
  m.support_vectors.resize(static_cast<Eigen::Index>(support.size()), x.cols());
  m.coefficients.resize(static_cast<Eigen::Index>(support.size()));
  for (std::size_t s = 0; s < support.size(); ++s) {
    const auto i = support[s];
    m.support_vectors.row(static_cast<Eigen::Index>(s)) = z.row(i);
    m.coefficients(static_cast<Eigen::Index>(s)) =
        sol.alpha[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)];
  }
  m.bias = sol.bias;
  m.objective = sol.objective;
  m.iterations = sol.iterations;
  return m;
}

std::vector<double> svm_decision(const SvmModel& model, const FeatureMatrix& x) {
  if (x.rows() == 0) return {};
  const FeatureMatrix z = model.standardizer.apply(x);
  std::vector<double> out(static_cast<std::size_t>(x.rows()), model.bias);
  if (model.support_vectors.rows() == 0) return out;
  const Eigen::VectorXd d = rbf_kernel(z, model.support_vectors, model.gamma) * model.coefficients;
  for (Eigen::Index i = 0; i < d.size(); ++i) out[static_cast<std::size_t>(i)] += d(i);
  return out;
}

Labels svm_predict(const SvmModel& model, const FeatureMatrix& x) {
  Labels out;
  for (double d : svm_decision(model, x)) out.push_back(d >= 0.0 ? 1 : -1);
  return out;
}

double accuracy(const Labels& predicted, const Labels& truth) {
  if (predicted.size() != truth.size()) throw Error("prediction and label counts differ");
  if (truth.empty()) throw Error("accuracy of an empty set is undefined");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += predicted[i] == truth[i];
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

}  // namespace surp
