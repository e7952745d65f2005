#include "surp/prefix_parser.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

#include <fmt/format.h>

#include "surp/error.hpp"

namespace surp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Reflexive-transitive closure (I - P)^-1, with entries outside the boolean
// closure of the relation forced to exactly zero.
Eigen::MatrixXd closure(const Eigen::MatrixXd& p, const char* relation) {
  const auto n = p.rows();
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(n, n);
  if (n == 0) return r;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(n, n) - p);
  r = lu.solve(Eigen::MatrixXd::Identity(n, n));

  std::vector<std::vector<int>> succ(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (p(i, j) > 0.0) succ[static_cast<std::size_t>(i)].push_back(static_cast<int>(j));
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::vector<int> stack{static_cast<int>(i)};
    seen[static_cast<std::size_t>(i)] = true;
    while (!stack.empty()) {
      int x = stack.back();
      stack.pop_back();
      for (int y : succ[static_cast<std::size_t>(x)])
        if (!seen[static_cast<std::size_t>(y)]) {
          seen[static_cast<std::size_t>(y)] = true;
          stack.push_back(y);
        }
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!seen[static_cast<std::size_t>(j)]) {
        r(i, j) = 0.0;
      } else if (!std::isfinite(r(i, j)) || r(i, j) <= 0.0) {
        throw Error(fmt::format(
            "the {} closure of the grammar diverges; the rule probabilities are inconsistent",
            relation));
      }
    }
  }
  return r;
}

struct Item {
  int rule;  // index into rules(), or -1 for the start item ROOT -> . S
  int dot;
  int origin;
  double alpha;
  double gamma;
};

std::uint64_t item_key(int rule, int dot, int origin) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(rule + 1)) << 40) |
         (static_cast<std::uint64_t>(static_cast<std::uint32_t>(dot)) << 32) |
         static_cast<std::uint32_t>(origin);
}

}  // namespace

PrefixParser::PrefixParser(const Pcfg& grammar, PrefixParseOptions options)
    : grammar_(grammar), options_(options) {
  build_tables();
}

PrefixParser::PrefixParser(const LexicalizedPcfg& grammar)
    : PrefixParser(grammar.grammar, PrefixParseOptions{.group_by_base_category = true}) {}

void PrefixParser::build_tables() {
  if (grammar_.has_epsilon_rules())
    throw Error("the prefix parser does not support epsilon rules");
  nts_ = grammar_.nonterminals();
  nt_of_symbol_.assign(grammar_.symbol_count(), -1);
  for (std::size_t i = 0; i < nts_.size(); ++i)
    nt_of_symbol_[static_cast<std::size_t>(nts_[i])] = static_cast<int>(i);

  std::map<std::string, int> groups;
  group_of_nt_.resize(nts_.size());
  for (std::size_t i = 0; i < nts_.size(); ++i) {
    std::string key = grammar_.name(nts_[i]);
    if (options_.group_by_base_category) key = base_category(key);
    group_of_nt_[i] = groups.emplace(key, static_cast<int>(groups.size())).first->second;
  }
  num_groups_ = groups.size();
  group_names_.resize(num_groups_);
  for (const auto& [name, g] : groups) group_names_[static_cast<std::size_t>(g)] = name;
  emission_mass_.assign(nts_.size(), 0.0);
  for (const auto& r : grammar_.rules())
    if (r.rhs.size() == 1 && !grammar_.is_nonterminal(r.rhs[0]))
      emission_mass_[static_cast<std::size_t>(nt_index(r.lhs))] += r.prob;

  const auto n = static_cast<Eigen::Index>(nts_.size());
  Eigen::MatrixXd pl = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd pu = Eigen::MatrixXd::Zero(n, n);
  for (const auto& r : grammar_.rules()) {
    if (r.rhs.empty() || !grammar_.is_nonterminal(r.rhs[0])) continue;
    pl(nt_index(r.lhs), nt_index(r.rhs[0])) += r.prob;
    if (r.rhs.size() == 1) pu(nt_index(r.lhs), nt_index(r.rhs[0])) += r.prob;
  }
  left_closure_ = closure(pl, "left-corner");
  unit_closure_ = closure(pu, "unit-production");

  left_corner_targets_.assign(nts_.size(), {});
  unit_parents_.assign(nts_.size(), {});
  for (Eigen::Index z = 0; z < n; ++z)
    for (Eigen::Index y = 0; y < n; ++y) {
      if (left_closure_(z, y) > 0.0)
        left_corner_targets_[static_cast<std::size_t>(z)].push_back(
            {static_cast<int>(y), left_closure_(z, y)});
      if (unit_closure_(z, y) > 0.0)
        unit_parents_[static_cast<std::size_t>(y)].push_back(
            {static_cast<int>(z), unit_closure_(z, y)});
    }

  if (auto u = grammar_.find(kUnk); u && !grammar_.is_nonterminal(*u)) unk_ = *u;
}

std::optional<Symbol> PrefixParser::terminal_for(const std::string& token) const {
  if (auto s = grammar_.find(token); s && !grammar_.is_nonterminal(*s)) return s;
  return unk_;
}

PrefixParse PrefixParser::parse(std::span<const std::string> tokens) const {
  const auto& rules = grammar_.rules();
  const std::size_t n = tokens.size();
  const std::vector<Symbol> root_rhs{grammar_.start()};
  auto rhs_of = [&](int rule) -> const std::vector<Symbol>& {
    return rule < 0 ? root_rhs : rules[static_cast<std::size_t>(rule)].rhs;
  };
  auto is_unit = [&](int rule) {
    const auto& rhs = rhs_of(rule);
    return rhs.size() == 1 && grammar_.is_nonterminal(rhs[0]);
  };

  PrefixParse out;
  out.log_prefix.assign(n + 1, kNegInf);
  out.log_structural.assign(n + 1, kNegInf);
  out.log_prefix[0] = 0.0;
  out.log_sentence = kNegInf;

  std::vector<std::vector<Item>> chart(n + 1);
  std::vector<std::unordered_map<std::uint64_t, int>> index(n + 1);
  // waiting[j][Z]: items at j whose next symbol is nonterminal Z.
  std::vector<std::vector<std::vector<int>>> waiting(n + 1);

  auto add = [&](std::size_t pos, int rule, int dot, int origin, double alpha,
                 double gamma) -> std::pair<int, bool> {
    auto [it, fresh] = index[pos].try_emplace(item_key(rule, dot, origin),
                                              static_cast<int>(chart[pos].size()));
    if (fresh) {
      chart[pos].push_back({rule, dot, origin, alpha, gamma});
    } else {
      auto& item = chart[pos][static_cast<std::size_t>(it->second)];
      item.alpha += alpha;
      item.gamma += gamma;
    }
    return {it->second, fresh};
  };

  add(0, -1, 0, 0, 1.0, 1.0);

  for (std::size_t i = 0; i <= n; ++i) {
    auto& items = chart[i];

    // Completion, from the most recent origin backwards: a completed
    // non-unit item with origin j only feeds items with smaller origins.
    if (i > 0) {
      std::vector<std::vector<int>> by_origin(i);
      for (std::size_t k = 0; k < items.size(); ++k) {
        const Item& it = items[k];
        if (static_cast<std::size_t>(it.dot) == rhs_of(it.rule).size() && !is_unit(it.rule))
          by_origin[static_cast<std::size_t>(it.origin)].push_back(static_cast<int>(k));
      }
      for (std::size_t jj = i; jj-- > 0;) {
        const double scale = std::exp(out.log_prefix[jj] - out.log_prefix[i]);
        for (std::size_t q = 0; q < by_origin[jj].size(); ++q) {
          const Item done = items[static_cast<std::size_t>(by_origin[jj][q])];
          if (done.rule < 0) continue;
          const int y = nt_index(rules[static_cast<std::size_t>(done.rule)].lhs);
          for (const auto& [z, r] : unit_parents_[static_cast<std::size_t>(y)]) {
            for (int w : waiting[jj][static_cast<std::size_t>(z)]) {
              const Item& parent = chart[jj][static_cast<std::size_t>(w)];
              const double a = parent.alpha * r * done.gamma * scale;
              const double g = parent.gamma * r * done.gamma;
              auto [idx, fresh] = add(i, parent.rule, parent.dot + 1, parent.origin, a, g);
              const Item& created = items[static_cast<std::size_t>(idx)];
              if (fresh && static_cast<std::size_t>(created.dot) == rhs_of(created.rule).size() &&
                  !is_unit(created.rule))
                by_origin[static_cast<std::size_t>(created.origin)].push_back(idx);
            }
          }
        }
      }
    }

    // Prediction through the left-corner closure. Predicted items (dot 0)
    // are already covered by the closure and are not prediction sources.
    std::vector<double> predicted(nts_.size(), 0.0);
    for (const Item& it : items) {
      const auto& rhs = rhs_of(it.rule);
      if (static_cast<std::size_t>(it.dot) >= rhs.size()) continue;
      if (it.dot == 0 && it.rule >= 0) continue;
      const Symbol next = rhs[static_cast<std::size_t>(it.dot)];
      if (!grammar_.is_nonterminal(next)) continue;
      for (const auto& [y, r] : left_corner_targets_[static_cast<std::size_t>(nt_index(next))])
        predicted[static_cast<std::size_t>(y)] += it.alpha * r;
    }
    for (std::size_t y = 0; y < nts_.size(); ++y) {
      if (predicted[y] <= 0.0) continue;
      for (auto ri : grammar_.rules_for(nts_[y])) {
        const double p = rules[ri].prob;
        if (p > 0.0) add(i, static_cast<int>(ri), 0, static_cast<int>(i), predicted[y] * p, p);
      }
    }

    waiting[i].assign(nts_.size(), {});
    for (std::size_t k = 0; k < items.size(); ++k) {
      const auto& rhs = rhs_of(items[k].rule);
      if (static_cast<std::size_t>(items[k].dot) < rhs.size()) {
        const Symbol next = rhs[static_cast<std::size_t>(items[k].dot)];
        if (grammar_.is_nonterminal(next))
          waiting[i][static_cast<std::size_t>(nt_index(next))].push_back(static_cast<int>(k));
      }
      // ROOT -> S . spanning the whole input; for the root item alpha = gamma.
      if (i == n && items[k].rule < 0 && items[k].dot == 1)
        out.log_sentence = out.log_prefix[i] + std::log(items[k].alpha);
    }
    if (i == n) {
      for (std::size_t y = 0; y < nts_.size(); ++y)
        if (emission_mass_[y] > 0.0 && predicted[y] > 0.0)
          out.next_category_mass[group_names_[static_cast<std::size_t>(group_of_nt_[y])]] +=
              predicted[y] * emission_mass_[y];
      break;
    }

    // Scanning w_{i+1}.
    const auto terminal = terminal_for(tokens[i]);
    if (!terminal) {
      out.diagnostics.push_back(
          fmt::format("token '{}' at position {} is not a terminal of the grammar", tokens[i], i));
      out.failed_at = i;
      break;
    }
    double total = 0.0;
    double structural = 0.0;
    std::vector<bool> group_used(num_groups_, false);
    std::vector<double> group_mass(num_groups_, 0.0);
    for (std::size_t y = 0; y < nts_.size(); ++y)
      group_mass[static_cast<std::size_t>(group_of_nt_[y])] += predicted[y] * emission_mass_[y];
    for (const Item& it : items) {
      const auto& rhs = rhs_of(it.rule);
      if (static_cast<std::size_t>(it.dot) >= rhs.size() ||
          rhs[static_cast<std::size_t>(it.dot)] != *terminal)
        continue;
      add(i + 1, it.rule, it.dot + 1, it.origin, it.alpha, it.gamma);
      total += it.alpha;
      if (it.dot == 0 && rhs.size() == 1 && it.origin == static_cast<int>(i)) {
        const int y = nt_index(rules[static_cast<std::size_t>(it.rule)].lhs);
        group_used[static_cast<std::size_t>(group_of_nt_[static_cast<std::size_t>(y)])] = true;
      } else {
        structural += it.alpha;
      }
    }
    for (std::size_t g = 0; g < group_used.size(); ++g)
      if (group_used[g]) structural += group_mass[g];

    if (!(total > 0.0)) {
      out.diagnostics.push_back(fmt::format(
          "prefix ending with '{}' at position {} has zero probability", tokens[i], i));
      out.failed_at = i;
      break;
    }
    out.log_prefix[i + 1] = out.log_prefix[i] + std::log(total);
    out.log_structural[i + 1] = out.log_prefix[i] + std::log(structural);
    for (Item& it : chart[i + 1]) it.alpha /= total;
  }
  return out;
}

double PrefixParser::prefix_probability(std::span<const std::string> tokens) const {
  const auto p = parse(tokens);
  return std::exp(p.log_prefix.back());
}

namespace {

void require_parsed(const PrefixParse& p, std::span<const std::string> tokens) {
  if (p.failed_at)
    throw Error(fmt::format("no derivation covers the prefix ending at position {} ('{}'): {}",
                            *p.failed_at, tokens[*p.failed_at],
                            p.diagnostics.empty() ? std::string("zero probability")
                                                  : p.diagnostics.back()));
}

}  // namespace

std::vector<double> PrefixParser::total_surprisal(std::span<const std::string> tokens,
                                                  LogBase base) const {
  const auto p = parse(tokens);
  require_parsed(p, tokens);
  std::vector<double> out(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i)
    out[i] = base.from_nats(p.log_prefix[i] - p.log_prefix[i + 1]);
  return out;
}

SurprisalBreakdown PrefixParser::split_surprisal(std::span<const std::string> tokens,
                                                 LogBase base) const {
  const auto p = parse(tokens);
  require_parsed(p, tokens);
  SurprisalBreakdown b;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const double syn = base.from_nats(p.log_prefix[i] - p.log_structural[i + 1]);
    const double lex = base.from_nats(p.log_structural[i + 1] - p.log_prefix[i + 1]);
    b.syntactic.push_back(syn);
    b.lexical.push_back(lex);
    b.total.push_back(syn + lex);
  }
  return b;
}

double PrefixParser::end_of_sentence_surprisal(std::span<const std::string> tokens,
                                               LogBase base) const {
  const auto p = parse(tokens);
  require_parsed(p, tokens);
  return base.from_nats(p.log_prefix.back() - p.log_sentence);
}

double prefix_probability(const Pcfg& pcfg, std::span<const std::string> tokens) {
  return PrefixParser(pcfg).prefix_probability(tokens);
}

std::vector<double> total_surprisal(const Pcfg& pcfg, std::span<const std::string> tokens,
                                    LogBase base) {
  return PrefixParser(pcfg).total_surprisal(tokens, base);
}

SurprisalBreakdown split_surprisal(const Pcfg& pcfg, std::span<const std::string> tokens,
                                   LogBase base) {
  return PrefixParser(pcfg).split_surprisal(tokens, base);
}

SurprisalBreakdown split_surprisal(const LexicalizedPcfg& pcfg,
                                   std::span<const std::string> tokens, LogBase base) {
  return PrefixParser(pcfg).split_surprisal(tokens, base);
}

}  // namespace surp
