#include "surp/tasks.hpp"

#include <algorithm>
#include <map>
#include <ostream>

#include <fmt/format.h>

#include "surp/error.hpp"

namespace surp {

std::string task_id(Task t) {
  switch (t) {
    case Task::strong_np_vs_vp: return "i";
    case Task::predictable_np_vs_vp: return "ii";
    case Task::unpred_np_vs_vp: return "iii";
    case Task::predictable_vs_unpred: return "iv";
  }
  return "?";
}

std::string task_description(Task t) {
  switch (t) {
    case Task::strong_np_vs_vp: return "Strong_PRED NP vs VP";
    case Task::predictable_np_vs_vp: return "Strong_PRED + Weak_PRED NP vs VP";
    case Task::unpred_np_vs_vp: return "UNPRED NP vs VP";
    case Task::predictable_vs_unpred: return "predictable vs UNPRED";
  }
  return "?";
}

Task task_from_string(std::string_view id) {
  for (Task t : kTasks)
    if (task_id(t) == id) return t;
  throw Error(fmt::format("unknown task '{}' (expected i, ii, iii or iv)", id));
}

namespace {

std::vector<std::size_t> feature_columns(std::string_view set) {
  if (set == "tot") return {0, 1, 2, 3, 4, 5, 6, 7};
  for (std::size_t n = 0; n < kNotions.size(); ++n)
    if (column_prefix(kNotions[n]) == set) return {2 * n, 2 * n + 1};
  throw Error(fmt::format("unknown feature set '{}' (expected ngram, lex, pos, syn or tot)", set));
}

// +1, -1, or 0 when the row does not belong to the task.
int task_label(Task task, const SurprisalRow& r) {
  const bool np = r.phrase_type == PhraseType::np;
  switch (task) {
    case Task::strong_np_vs_vp:
      return r.condition == Condition::strong_pred ? (np ? 1 : -1) : 0;
    case Task::predictable_np_vs_vp:
      return r.condition != Condition::unpred ? (np ? 1 : -1) : 0;
    case Task::unpred_np_vs_vp:
      return r.condition == Condition::unpred ? (np ? 1 : -1) : 0;
    case Task::predictable_vs_unpred:
      return r.condition == Condition::unpred ? -1 : 1;
  }
  return 0;
}

std::vector<std::string> required_classes(Task task) {
  switch (task) {
    case Task::strong_np_vs_vp: return {"Strong_PRED-NP", "Strong_PRED-VP"};
    case Task::predictable_np_vs_vp: return {"Strong_PRED-NP", "Strong_PRED-VP", "Weak_PRED-NP"};
    case Task::unpred_np_vs_vp: return {"UNPRED-NP", "UNPRED-VP"};
    case Task::predictable_vs_unpred:
      return {"UNPRED-NP", "UNPRED-VP", "Strong_PRED-NP", "Strong_PRED-VP", "Weak_PRED-NP"};
  }
  return {};
}

}  // namespace

TaskData task_data(const SurprisalTable& table, Task task, std::string_view feature_set) {
  const auto cols = feature_columns(feature_set);
  std::map<std::string, std::size_t> present;
  for (const auto& r : table) ++present[r.class_name()];
  for (const auto& cls : required_classes(task))
    if (!present.count(cls))
      throw Error(fmt::format("task {} ({}) needs {} trials, but the table has none",
                              task_id(task), task_description(task), cls));

  TaskData d;
  std::vector<const SurprisalRow*> rows;
  for (const auto& r : table) {
    const int label = task_label(task, r);
    if (label == 0) continue;
    rows.push_back(&r);
    d.y.push_back(label);
    d.trial_ids.push_back(r.trial_id);
  }
  d.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < cols.size(); ++c)
      d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i]->values[cols[c]];
  return d;
}

std::vector<CvReport> run_tasks(const SurprisalTable& table, const ClassificationOptions& options) {
  std::vector<CvReport> reports;
  for (Task task : kTasks) {
    for (std::string_view set : kFeatureSets) {
      const TaskData d = task_data(table, task, set);
      CvReport r;
      try {
        r = nested_cv(d.x, d.y, options.grid, options.folds, options.seed, options.svm);
      } catch (const Error& e) {
        throw Error(fmt::format("task {} with {} features: {}", task_id(task), set, e.what()));
      }
      r.task = task_id(task);
      r.feature_set = std::string(set);
      reports.push_back(std::move(r));
    }
  }
  return reports;
}

void write_results(std::ostream& out, const std::vector<CvReport>& reports) {
  out << "task,feature_set,fold,accuracy,C,gamma,chance\n";
  for (const auto& r : reports)
    for (std::size_t f = 0; f < r.folds.size(); ++f)
      out << fmt::format("{},{},{},{},{},{},{}\n", r.task, r.feature_set, f + 1, r.folds[f].accuracy,
                         r.folds[f].C, r.folds[f].gamma, r.chance);
}

std::vector<FeatureSetComparison> compare_feature_sets(const std::vector<CvReport>& reports,
                                                       double alpha) {
  std::vector<FeatureSetComparison> out;
  std::vector<std::string> order;
  std::map<std::string, std::vector<const CvReport*>> by_task;
  for (const auto& r : reports) {
    if (!by_task.count(r.task)) order.push_back(r.task);
    by_task[r.task].push_back(&r);
  }
  for (const auto& task : order) {
    const auto& list = by_task[task];
    if (list.size() < 2) continue;
    FeatureSetComparison c;
    c.task = task;
    Groups groups;
    for (const CvReport* r : list) {
      c.feature_sets.push_back(r->feature_set);
      c.mean_accuracy.push_back(r->mean_accuracy());
      std::vector<double> acc;
      for (const auto& f : r->folds) acc.push_back(f.accuracy);
      groups.push_back(std::move(acc));
    }
    c.omnibus = kruskal_wallis(groups);
    c.pairs = pairwise_report(groups, alpha);
    out.push_back(std::move(c));
  }
  return out;
}

std::string classification_summary(const std::vector<CvReport>& reports,
                                   const std::vector<FeatureSetComparison>& comparisons) {
  std::string s;
  for (const auto& c : comparisons) {
    Task task = task_from_string(c.task);
    double chance = 0.0;
    for (const auto& r : reports)
      if (r.task == c.task) chance = r.chance;
    s += fmt::format("task {} ({}), chance {:.3f}\n", c.task, task_description(task), chance);
    std::vector<std::size_t> idx(c.feature_sets.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) {
      return c.mean_accuracy[a] > c.mean_accuracy[b];
    });
    for (auto i : idx)
      s += fmt::format("  {:<6} mean accuracy {:.3f}\n", c.feature_sets[i], c.mean_accuracy[i]);
    s += fmt::format("  Kruskal-Wallis over fold accuracies: H = {:.3f}, p = {:.3g}\n",
                     c.omnibus.statistic, c.omnibus.p_value);
    for (const auto& p : c.pairs)
      if (p.reject)
        s += fmt::format("  {} vs {}: adjusted p = {:.3g} {}\n", c.feature_sets[p.a],
                         c.feature_sets[p.b], p.adjusted_p, significance_stars(p.adjusted_p));
  }
  s += "note: fold accuracies share training data and are not independent samples; the "
       "tests above are descriptive.\n";
  return s;
}

}  // namespace surp
