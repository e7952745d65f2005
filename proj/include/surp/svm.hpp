#pragma once

// Binary RBF-kernel support vector machine trained by sequential minimal
// optimization, and nested cross-validation with grid search.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace surp {

// Rows are examples, columns are features.
using FeatureMatrix = Eigen::MatrixXd;
// Labels are +1 / -1.
using Labels = std::vector<int>;

struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;  // standard deviation, 1 for constant features

  static Standardizer fit(const FeatureMatrix& x);
  static Standardizer identity(Eigen::Index features);
  FeatureMatrix apply(const FeatureMatrix& x) const;
  bool operator==(const Standardizer&) const = default;
};

struct SvmParams {
  double C = 1.0;
  double gamma = 1.0;
  double tol = 1e-3;
  std::size_t max_iter = 100'000;
  bool standardize = true;
};

// Solution of  max_a  sum(a) - 1/2 sum_ij a_i a_j y_i y_j K_ij
//              s.t.   0 <= a_i <= C,  sum_i a_i y_i = 0.
struct DualSolution {
  std::vector<double> alpha;
  double bias = 0.0;       // decision(x) = sum_i a_i y_i K(x_i, x) + bias
  double objective = 0.0;  // dual objective at the solution
  std::size_t iterations = 0;
  double kkt_gap = 0.0;    // maximal violating pair gap at exit
};

// Throws surp::Error when the gap is still above tol after max_iter steps.
DualSolution solve_dual(const Eigen::MatrixXd& kernel, const Labels& y, double C, double tol,
                        std::size_t max_iter);

double dual_objective(const Eigen::MatrixXd& kernel, const Labels& y,
                      std::span<const double> alpha);

Eigen::MatrixXd squared_distances(const FeatureMatrix& a, const FeatureMatrix& b);
Eigen::MatrixXd rbf_kernel(const FeatureMatrix& a, const FeatureMatrix& b, double gamma);

struct SvmModel {
  FeatureMatrix support_vectors;  // standardized rows
  Eigen::VectorXd coefficients;   // a_i y_i for each support vector
  double bias = 0.0;
  double C = 1.0;
  double gamma = 1.0;
  Standardizer standardizer;
  double objective = 0.0;
  std::size_t iterations = 0;

  Eigen::Index features() const { return standardizer.mean.size(); }
};

// Errors: mismatched sizes, labels other than +1/-1, a single class,
// nonpositive C/gamma/tol, non-convergence.
SvmModel svm_train(const FeatureMatrix& x, const Labels& y, const SvmParams& params = {});
std::vector<double> svm_decision(const SvmModel& model, const FeatureMatrix& x);
// Zero decision values go to +1.
Labels svm_predict(const SvmModel& model, const FeatureMatrix& x);

double accuracy(const Labels& predicted, const Labels& truth);

// ---------------------------------------------------------------------------
// Cross-validation

struct HyperGrid {
  std::vector<double> C{0.001, 0.01, 0.1, 1.0, 10.0};
  std::vector<double> gamma{0.001, 0.01, 0.1, 1.0};
};

// Held-out index sets of a stratified k-fold split: each class is shuffled
// with the seed and dealt round-robin, so every fold keeps the label ratio.
// Throws when a class has fewer than k members.
std::vector<std::vector<std::size_t>> stratified_folds(const Labels& y, std::size_t k,
                                                       std::uint64_t seed);

struct Selection {
  double C = 0.0;
  double gamma = 0.0;
  double mean_accuracy = 0.0;
  Standardizer standardizer;  // fitted on all rows passed in
};

// Inner loop: k-fold grid search on the given rows. Ties keep the lowest C,
// then the lowest gamma.
Selection select_hyperparameters(const FeatureMatrix& x, const Labels& y, const HyperGrid& grid,
                                 std::size_t folds, std::uint64_t seed,
                                 const SvmParams& base = {});

struct FoldResult {
  double accuracy = 0.0;
  double C = 0.0;
  double gamma = 0.0;
  double inner_accuracy = 0.0;
  Standardizer standardizer;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
};

struct CvReport {
  std::string task;
  std::string feature_set;
  std::vector<FoldResult> folds;
  double chance = 0.0;

  double mean_accuracy() const;
};

// Seed used by the inner loop of outer fold `fold`.
std::uint64_t inner_seed(std::uint64_t seed, std::size_t fold);

CvReport nested_cv(const FeatureMatrix& x, const Labels& y, const HyperGrid& grid = {},
                   std::size_t folds = 10, std::uint64_t seed = 42, const SvmParams& base = {});

// Majority-class proportion.
double chance_level(const Labels& y);

}  // namespace surp
