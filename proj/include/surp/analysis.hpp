#pragma once

// Rank tests of surprisal across stimulus groups, one family per notion and
// HP position.

#include <string>
#include <vector>

#include <json.hpp>

#include "surp/stats.hpp"
#include "surp/stimuli.hpp"

namespace surp {

enum class Grouping {
  stimulus_class,  // the five condition x phrase-type classes
  condition        // UNPRED / Strong_PRED / Weak_PRED, phrase types pooled
};

std::string to_string(Grouping g);  // "class", "condition"

struct GroupComparison {
  Notion notion = Notion::ngram;
  std::size_t position = 0;  // 0 = first HP word
  Grouping grouping = Grouping::stimulus_class;
  std::vector<std::string> groups;  // only groups present in the table
  TestResult omnibus;
  std::vector<PairwiseComparison> pairs;
  std::vector<std::string> diagnostics;
};

// Every notion x position x grouping with at least two nonempty groups.
std::vector<GroupComparison> compare_groups(const SurprisalTable& table, double alpha = 0.05);

const GroupComparison& find_comparison(const std::vector<GroupComparison>& all, Notion notion,
                                       std::size_t position, Grouping grouping);

nlohmann::ordered_json stats_json(const std::vector<GroupComparison>& comparisons, double alpha);

}  // namespace surp
