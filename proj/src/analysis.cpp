#include "surp/analysis.hpp"

#include <cmath>

#include <fmt/format.h>

#include "surp/error.hpp"

namespace surp {

std::string to_string(Grouping g) {
  return g == Grouping::stimulus_class ? "class" : "condition";
}

namespace {

std::vector<std::string> group_names(Grouping g) {
  if (g == Grouping::condition)
    return {to_string(Condition::unpred), to_string(Condition::strong_pred),
            to_string(Condition::weak_pred)};
  std::vector<std::string> out;
  for (const auto& [c, p] : kStimulusClasses) out.push_back(class_name(c, p));
  return out;
}

std::string group_of(Grouping g, const SurprisalRow& r) {
  return g == Grouping::condition ? to_string(r.condition) : r.class_name();
}

// JSON cannot carry infinities; they only arise for perfectly separated groups.
nlohmann::ordered_json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

}  // namespace

std::vector<GroupComparison> compare_groups(const SurprisalTable& table, double alpha) {
  std::vector<GroupComparison> out;
  for (Grouping grouping : {Grouping::stimulus_class, Grouping::condition}) {
    for (Notion notion : kNotions) {
      for (std::size_t pos = 0; pos < 2; ++pos) {
        GroupComparison c;
        c.notion = notion;
        c.position = pos;
        c.grouping = grouping;
        Groups groups;
        for (const auto& name : group_names(grouping)) {
          std::vector<double> values;
          for (const auto& r : table)
            if (group_of(grouping, r) == name) values.push_back(r.value(notion, pos));
          if (values.empty()) continue;
          c.groups.push_back(name);
          groups.push_back(std::move(values));
        }
        if (groups.size() < 2) continue;
        c.omnibus = kruskal_wallis(groups);
        c.pairs = pairwise_report(groups, alpha);
        c.diagnostics = conover_posthoc(groups).diagnostics;
        out.push_back(std::move(c));
      }
    }
  }
  return out;
}

const GroupComparison& find_comparison(const std::vector<GroupComparison>& all, Notion notion,
                                       std::size_t position, Grouping grouping) {
  for (const auto& c : all)
    if (c.notion == notion && c.position == position && c.grouping == grouping) return c;
  throw Error(fmt::format("no {} comparison for {} at HP word {}", to_string(grouping),
                          to_string(notion), position + 1));
}

nlohmann::ordered_json stats_json(const std::vector<GroupComparison>& comparisons, double alpha) {
  nlohmann::ordered_json root;
  root["alpha"] = alpha;
  root["tests"] = "Kruskal-Wallis omnibus; Conover-Iman pairwise t tests on pooled ranks; "
                  "Holm-Bonferroni adjustment within each family";
  auto& list = root["comparisons"] = nlohmann::ordered_json::array();
  for (const auto& c : comparisons) {
    nlohmann::ordered_json j;
    j["notion"] = to_string(c.notion);
    j["position"] = fmt::format("w{}", c.position + 1);
    j["grouping"] = to_string(c.grouping);
    j["groups"] = c.groups;
    j["group_sizes"] = c.omnibus.group_sizes;
    j["omnibus"] = {{"H", c.omnibus.statistic},
                    {"df", c.omnibus.df},
                    {"p", c.omnibus.p_value},
                    {"stars", significance_stars(c.omnibus.p_value)}};
    auto& pairs = j["pairwise"] = nlohmann::ordered_json::array();
    for (const auto& p : c.pairs)
      pairs.push_back({{"a", c.groups[p.a]},
                       {"b", c.groups[p.b]},
                       {"t", number(p.statistic)},
                       {"p_raw", p.raw_p},
                       {"p_adjusted", p.adjusted_p},
                       {"reject", p.reject},
                       {"stars", significance_stars(p.adjusted_p)}});
    j["diagnostics"] = c.diagnostics;
    list.push_back(std::move(j));
  }
  return root;
}

}  // namespace surp
