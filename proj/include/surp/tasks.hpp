#pragma once

// The four classification tasks over the surprisal table and the
// comparison of the per-notion feature sets.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "surp/stats.hpp"
#include "surp/stimuli.hpp"
#include "surp/svm.hpp"

namespace surp {

enum class Task {
  strong_np_vs_vp,       // i: Strong_PRED NP vs VP
  predictable_np_vs_vp,  // ii: Strong_PRED and Weak_PRED, NP vs VP
  unpred_np_vs_vp,       // iii: UNPRED NP vs VP
  predictable_vs_unpred  // iv: Strong_PRED and Weak_PRED vs UNPRED
};

inline constexpr std::array<Task, 4> kTasks{Task::strong_np_vs_vp, Task::predictable_np_vs_vp,
                                            Task::unpred_np_vs_vp, Task::predictable_vs_unpred};

std::string task_id(Task t);           // "i" .. "iv"
std::string task_description(Task t);
Task task_from_string(std::string_view id);

// "ngram", "lex", "pos", "syn" (two features each) and "tot" (all eight).
inline constexpr std::array<std::string_view, 5> kFeatureSets{"ngram", "lex", "pos", "syn", "tot"};

struct TaskData {
  FeatureMatrix x;
  Labels y;  // +1 for NP (tasks i-iii) or predictable (task iv)
  std::vector<std::string> trial_ids;
};

// Throws naming the task when one of its classes has no trials.
TaskData task_data(const SurprisalTable& table, Task task, std::string_view feature_set);

struct ClassificationOptions {
  HyperGrid grid;
  std::size_t folds = 10;
  std::uint64_t seed = 42;
  SvmParams svm;
};

// Every task with every feature set. All feature sets of a task share the
// same outer and inner splits.
std::vector<CvReport> run_tasks(const SurprisalTable& table,
                                const ClassificationOptions& options = {});

// `task,feature_set,fold,accuracy,C,gamma,chance`
void write_results(std::ostream& out, const std::vector<CvReport>& reports);

struct FeatureSetComparison {
  std::string task;
  std::vector<std::string> feature_sets;
  std::vector<double> mean_accuracy;
  TestResult omnibus;
  std::vector<PairwiseComparison> pairs;
};

// Kruskal-Wallis and Conover/Holm over the fold accuracies of each feature
// set. Fold accuracies share training data, so they are not independent
// samples and the p-values are descriptive only.
std::vector<FeatureSetComparison> compare_feature_sets(const std::vector<CvReport>& reports,
                                                       double alpha = 0.05);

std::string classification_summary(const std::vector<CvReport>& reports,
                                   const std::vector<FeatureSetComparison>& comparisons);

}  // namespace surp
