#include "surp/pcfg.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <set>

#include <fmt/format.h>

#include "surp/error.hpp"

namespace surp {

Symbol Pcfg::intern(const std::string& name) {
  auto it = ids_.find(name);
  if (it != ids_.end()) return it->second;
  const auto id = static_cast<Symbol>(names_.size());
  names_.push_back(name);
  nonterminal_.push_back(false);
  by_lhs_.emplace_back();
  ids_.emplace(name, id);
  return id;
}

Pcfg Pcfg::from_rules(const std::string& start, const std::vector<NamedRule>& rules) {
  Pcfg g;
  for (const auto& r : rules) {
    if (r.lhs.empty()) throw Error("rule with an empty left-hand side");
    const Symbol lhs = g.intern(r.lhs);
    g.nonterminal_[static_cast<std::size_t>(lhs)] = true;
  }
  auto start_id = g.find(start);
  if (!start_id || !g.is_nonterminal(*start_id))
    throw Error("start symbol '" + start + "' has no rules");
  g.start_ = *start_id;

  for (const auto& r : rules) {
    if (!std::isfinite(r.prob) || r.prob < 0.0 || r.prob > 1.0 + kNormalizationTolerance)
      throw Error(fmt::format("rule for {} has invalid probability {}", r.lhs, r.prob));
    Rule rule;
    rule.lhs = g.intern(r.lhs);
    rule.prob = r.prob;
    for (const auto& s : r.rhs) {
      if (s == kEpsilon) {
        if (r.rhs.size() != 1) throw Error("<eps> must be the only symbol of an epsilon rule");
        continue;
      }
      if (s.empty()) throw Error("empty symbol in rule for " + r.lhs);
      rule.rhs.push_back(g.intern(s));
    }
    auto key = std::make_pair(rule.lhs, rule.rhs);
    if (g.index_.count(key)) {
      std::string rhs;
      for (const auto& s : r.rhs) rhs += " " + s;
      throw Error("duplicate rule " + r.lhs + " ->" + rhs);
    }
    g.index_.emplace(std::move(key), g.rules_.size());
    g.by_lhs_[static_cast<std::size_t>(rule.lhs)].push_back(g.rules_.size());
    g.rules_.push_back(std::move(rule));
  }
  return g;
}

std::optional<Symbol> Pcfg::find(std::string_view name) const {
  auto it = ids_.find(std::string(name));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::vector<Symbol> Pcfg::nonterminals() const {
  std::vector<Symbol> out;
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (nonterminal_[i]) out.push_back(static_cast<Symbol>(i));
  return out;
}

std::vector<Symbol> Pcfg::terminals() const {
  std::vector<Symbol> out;
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (!nonterminal_[i]) out.push_back(static_cast<Symbol>(i));
  return out;
}

double Pcfg::rule_prob(Symbol lhs, const std::vector<Symbol>& rhs) const {
  auto it = index_.find({lhs, rhs});
  return it == index_.end() ? 0.0 : rules_[it->second].prob;
}

double Pcfg::rule_prob(const std::string& lhs, const std::vector<std::string>& rhs) const {
  auto l = find(lhs);
  if (!l) return 0.0;
  std::vector<Symbol> ids;
  for (const auto& s : rhs) {
    if (s == kEpsilon && rhs.size() == 1) break;
    auto id = find(s);
    if (!id) return 0.0;
    ids.push_back(*id);
  }
  return rule_prob(*l, ids);
}

bool Pcfg::has_epsilon_rules() const {
  return std::any_of(rules_.begin(), rules_.end(), [](const Rule& r) { return r.is_epsilon(); });
}

double Pcfg::tree_probability(const Tree& tree) const {
  if (tree.is_leaf()) return 1.0;
  auto lhs = find(tree.label);
  if (!lhs || !is_nonterminal(*lhs)) return 0.0;
  std::vector<Symbol> rhs;
  for (const auto& c : tree.children) {
    auto id = find(c.label);
    if (!id) return 0.0;
    if (is_nonterminal(*id) == c.is_leaf()) return 0.0;
    rhs.push_back(*id);
  }
  double p = rule_prob(*lhs, rhs);
  for (const auto& c : tree.children) {
    if (p == 0.0) break;
    p *= tree_probability(c);
  }
  return p;
}

std::vector<NamedRule> Pcfg::named_rules() const {
  std::vector<NamedRule> out;
  out.reserve(rules_.size());
  for (const auto& r : rules_) {
    NamedRule n{name(r.lhs), {}, r.prob};
    for (Symbol s : r.rhs) n.rhs.push_back(name(s));
    out.push_back(std::move(n));
  }
  return out;
}

bool GrammarDiagnostics::clean() const {
  return unreachable.empty() && unproductive.empty() && epsilon_rules.empty() &&
         max_residual <= kNormalizationTolerance + 1e-12;
}

std::vector<std::string> GrammarDiagnostics::messages() const {
  std::vector<std::string> out;
  for (const auto& [lhs, r] : residuals)
    out.push_back(fmt::format("normalization residual {:.3g} for {}{}", r, lhs,
                              r > kNormalizationTolerance + 1e-12 ? " (exceeds tolerance)" : ""));
  for (const auto& s : unreachable) out.push_back("unreachable symbol " + s);
  for (const auto& s : unproductive) out.push_back("unproductive symbol " + s);
  for (const auto& s : epsilon_rules) out.push_back("epsilon rule for " + s);
  return out;
}

GrammarDiagnostics validate(const Pcfg& g) {
  GrammarDiagnostics d;
  const auto nts = g.nonterminals();
  for (Symbol nt : nts) {
    double sum = 0.0;
    for (auto i : g.rules_for(nt)) sum += g.rules()[i].prob;
    const double r = std::abs(sum - 1.0);
    d.max_residual = std::max(d.max_residual, r);
    if (r > 1e-12) d.residuals.emplace_back(g.name(nt), r);
  }

  std::vector<bool> reached(g.symbol_count(), false);
  std::vector<Symbol> stack{g.start()};
  reached[static_cast<std::size_t>(g.start())] = true;
  while (!stack.empty()) {
    Symbol s = stack.back();
    stack.pop_back();
    for (auto i : g.rules_for(s))
      for (Symbol c : g.rules()[i].rhs)
        if (g.is_nonterminal(c) && !reached[static_cast<std::size_t>(c)]) {
          reached[static_cast<std::size_t>(c)] = true;
          stack.push_back(c);
        }
  }

  std::vector<bool> productive(g.symbol_count(), false);
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& r : g.rules()) {
      if (productive[static_cast<std::size_t>(r.lhs)]) continue;
      bool ok = std::all_of(r.rhs.begin(), r.rhs.end(), [&](Symbol c) {
        return !g.is_nonterminal(c) || productive[static_cast<std::size_t>(c)];
      });
      if (ok) {
        productive[static_cast<std::size_t>(r.lhs)] = true;
        changed = true;
      }
    }
  }

  std::set<std::string> eps;
  for (const auto& r : g.rules())
    if (r.is_epsilon()) eps.insert(g.name(r.lhs));
  d.epsilon_rules.assign(eps.begin(), eps.end());
  for (Symbol nt : nts) {
    if (!reached[static_cast<std::size_t>(nt)]) d.unreachable.push_back(g.name(nt));
    if (!productive[static_cast<std::size_t>(nt)]) d.unproductive.push_back(g.name(nt));
  }
  return d;
}

namespace {

std::optional<double> parse_probability(const std::string& s) {
  if (s.empty()) return std::nullopt;
  const char c = s.front();
  if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '.')) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return std::nullopt;
  return v;
}

struct PendingRule {
  std::string lhs;
  std::vector<std::string> rhs;
  std::optional<double> prob;
  std::size_t line;
};

}  // namespace

Pcfg parse_grammar(std::string_view text, const std::string& source, GrammarMode mode) {
  std::vector<PendingRule> pending;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (fields.size() < 3 || fields[1] != "->")
      throw ParseError(source, line_no, "expected 'LHS -> RHS [p]'");
    const std::string& lhs = fields[0];
    std::vector<std::vector<std::string>> alternatives(1);
    for (std::size_t i = 2; i < fields.size(); ++i) {
      if (fields[i] == "|")
        alternatives.emplace_back();
      else if (fields[i] == "->")
        throw ParseError(source, line_no, "more than one '->' on a line");
      else
        alternatives.back().push_back(fields[i]);
    }
    for (auto& alt : alternatives) {
      if (alt.empty()) throw ParseError(source, line_no, "empty alternative for " + lhs);
      PendingRule r{lhs, {}, std::nullopt, line_no};
      if (alt.size() >= 2) {
        if (auto p = parse_probability(alt.back())) {
          if (*p < 0.0 || *p > 1.0)
            throw ParseError(source, line_no, "probability outside [0, 1]: " + alt.back());
          r.prob = *p;
          alt.pop_back();
        }
      }
      if (std::find(alt.begin(), alt.end(), std::string(kEpsilon)) != alt.end() && alt.size() != 1)
        throw ParseError(source, line_no, "<eps> must stand alone");
      r.rhs = std::move(alt);
      pending.push_back(std::move(r));
    }
  }
  if (pending.empty()) throw ParseError(source, 0, "grammar contains no rules");

  // Resolve probabilities per left-hand side.
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < pending.size(); ++i) groups[pending[i].lhs].push_back(i);
  for (auto& [lhs, idx] : groups) {
    double explicit_sum = 0.0;
    std::size_t missing = 0;
    for (auto i : idx) {
      if (pending[i].prob)
        explicit_sum += *pending[i].prob;
      else
        ++missing;
    }
    const std::size_t line = pending[idx.front()].line;
    if (missing == 0) {
      if (std::abs(explicit_sum - 1.0) > kNormalizationTolerance)
        throw ParseError(source, line,
                         fmt::format("probabilities for {} sum to {} (must be 1 within {})", lhs,
                                     explicit_sum, kNormalizationTolerance));
      for (auto i : idx) *pending[i].prob /= explicit_sum;
    } else {
      const double rest = 1.0 - explicit_sum;
      if (rest <= kNormalizationTolerance)
        throw ParseError(source, line,
                         fmt::format("explicit probabilities for {} leave no mass for the {} "
                                     "rule(s) without one",
                                     lhs, missing));
      for (auto i : idx)
        if (!pending[i].prob) pending[i].prob = rest / static_cast<double>(missing);
    }
  }

  std::vector<NamedRule> rules;
  rules.reserve(pending.size());
  for (auto& r : pending) rules.push_back({r.lhs, std::move(r.rhs), *r.prob});
  Pcfg g;
  try {
    g = Pcfg::from_rules(pending.front().lhs, rules);
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(source, 0, e.what());
  }
  if (mode == GrammarMode::strict) {
    auto d = validate(g);
    if (!d.unreachable.empty() || !d.unproductive.empty()) {
      std::string msg = "grammar failed strict validation:";
      for (const auto& m : d.messages()) msg += "\n  " + m;
      throw ParseError(source, 0, msg);
    }
  }
  return g;
}

Pcfg read_grammar(const std::filesystem::path& path, GrammarMode mode) {
  return parse_grammar(read_file(path), path.string(), mode);
}

namespace {

// Rounds each probability to `decimals` places; normalized groups are
// adjusted by largest remainder so the printed values sum to one.
std::vector<long long> rounded_units(const std::vector<double>& probs, long long scale) {
  std::vector<long long> units(probs.size());
  double sum = 0.0;
  for (double p : probs) sum += p;
  if (std::abs(sum - 1.0) > kNormalizationTolerance) {
    for (std::size_t i = 0; i < probs.size(); ++i)
      units[i] = std::llround(probs[i] * static_cast<double>(scale));
    return units;
  }
  long long total = 0;
  std::vector<std::pair<double, std::size_t>> remainders;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double scaled = probs[i] / sum * static_cast<double>(scale);
    units[i] = static_cast<long long>(std::floor(scaled));
    total += units[i];
    remainders.emplace_back(scaled - static_cast<double>(units[i]), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; total < scale; ++k, ++total) ++units[remainders[k % remainders.size()].second];
  // Keep every positive rule representable.
  for (std::size_t i = 0; i < probs.size(); ++i)
    if (probs[i] > 0.0 && units[i] == 0) {
      auto big = std::max_element(units.begin(), units.end()) - units.begin();
      --units[static_cast<std::size_t>(big)];
      units[i] = 1;
    }
  return units;
}

}  // namespace

std::string serialize(const Pcfg& g, int decimals) {
  if (decimals < 1 || decimals > 15) throw Error("decimals must be in [1, 15]");
  long long scale = 1;
  for (int i = 0; i < decimals; ++i) scale *= 10;

  std::vector<Symbol> order{g.start()};
  for (const auto& r : g.rules())
    if (std::find(order.begin(), order.end(), r.lhs) == order.end()) order.push_back(r.lhs);

  std::string out;
  for (Symbol lhs : order) {
    const auto& idx = g.rules_for(lhs);
    std::vector<double> probs;
    for (auto i : idx) probs.push_back(g.rules()[i].prob);
    const auto units = rounded_units(probs, scale);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const Rule& r = g.rules()[idx[k]];
      out += g.name(lhs);
      out += " ->";
      if (r.is_epsilon()) out += " " + std::string(kEpsilon);
      for (Symbol s : r.rhs) out += " " + g.name(s);
      out += fmt::format(" {:.{}f}\n", static_cast<double>(units[k]) / static_cast<double>(scale),
                         decimals);
    }
  }
  return out;
}

namespace {

using RuleKey = std::pair<std::string, std::vector<std::string>>;

void count_rules(const Tree& t, std::map<RuleKey, double>& counts) {
  if (t.is_leaf()) return;
  RuleKey key{t.label, {}};
  for (const auto& c : t.children) key.second.push_back(c.label);
  counts[key] += 1.0;
  for (const auto& c : t.children) count_rules(c, counts);
}

Pcfg relative_frequency(const std::string& start, const std::map<RuleKey, double>& counts) {
  std::map<std::string, double> totals;
  for (const auto& [key, n] : counts) totals[key.first] += n;
  std::vector<NamedRule> rules;
  for (const auto& [key, n] : counts) rules.push_back({key.first, key.second, n / totals[key.first]});
  return Pcfg::from_rules(start, rules);
}

}  // namespace

Pcfg estimate_pcfg(const Treebank& treebank) {
  if (treebank.empty()) throw Error("cannot estimate a PCFG from an empty treebank");
  std::map<RuleKey, double> counts;
  std::map<std::string, double> roots;
  for (const auto& t : treebank) {
    if (t.is_leaf()) throw Error("treebank contains a bare leaf '" + t.label + "'");
    count_rules(t, counts);
    roots[t.label] += 1.0;
  }
  std::string start = roots.begin()->first;
  if (roots.size() > 1) {
    start = "TOP";
    while (std::any_of(counts.begin(), counts.end(),
                       [&](const auto& kv) { return kv.first.first == start; }))
      start += "'";
    for (const auto& [label, n] : roots) counts[{start, {label}}] += n;
  }
  return relative_frequency(start, counts);
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

namespace {

Tree sample_node(const Pcfg& g, Symbol s, std::mt19937_64& rng, std::size_t depth_left) {
  Tree node{g.name(s), {}};
  if (!g.is_nonterminal(s)) return node;
  if (depth_left == 0) throw Error("sampled derivation exceeded the maximum depth");
  const auto& idx = g.rules_for(s);
  double u = uniform01(rng);
  std::size_t chosen = idx.back();
  for (auto i : idx) {
    u -= g.rules()[i].prob;
    if (u < 0.0) {
      chosen = i;
      break;
    }
  }
  const Rule& r = g.rules()[chosen];
  if (r.is_epsilon()) throw Error("cannot sample epsilon rules into trees");
  for (Symbol c : r.rhs) node.children.push_back(sample_node(g, c, rng, depth_left - 1));
  return node;
}

}  // namespace

Tree sample_tree(const Pcfg& pcfg, std::mt19937_64& rng, std::size_t max_depth) {
  return sample_node(pcfg, pcfg.start(), rng, max_depth);
}

}  // namespace surp
