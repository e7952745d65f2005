#include "surp/pcfg.hpp"

#include <algorithm>
#include <cstdlib>

#include <fmt/format.h>

#include "surp/error.hpp"

namespace surp {

std::string base_category(std::string_view label) {
  if (label.size() >= 3 && label.back() == ']') {
    auto open = label.rfind('[');
    if (open != std::string_view::npos && open > 0) return std::string(label.substr(0, open));
  }
  return std::string(label);
}

std::string annotate(std::string_view category, std::string_view head) {
  return fmt::format("{}[{}]", category, head);
}

const HeadTable::Entry* HeadTable::find(const std::string& category) const {
  auto it = entries_.find(category);
  return it == entries_.end() ? nullptr : &it->second;
}

std::size_t HeadTable::head_child(const Tree& node, std::vector<std::string>* diagnostics) const {
  if (node.children.empty())
    throw Error("cannot resolve the head of node '" + node.label + "': it has no children");
  const std::size_t n = node.children.size();
  const Entry* e = find(base_category(node.label));
  if (!e) {
    if (diagnostics)
      diagnostics->push_back("category " + node.label + " not in head table; using rightmost child");
    return n - 1;
  }
  for (const auto& pref : e->preferred) {
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = e->direction == HeadDirection::left ? k : n - 1 - k;
      if (base_category(node.children[i].label) == pref) return i;
    }
  }
  if (diagnostics && n > 1)
    diagnostics->push_back("no preferred head child for " + node.label + "; using the " +
                           (e->direction == HeadDirection::left ? "leftmost" : "rightmost") +
                           " child");
  return e->direction == HeadDirection::left ? 0 : n - 1;
}

HeadTable parse_head_table(std::string_view text, const std::string& source) {
  HeadTable table;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto f = split_ws(line);
    if (f.empty()) continue;
    if (f.size() < 2 || (f[1] != "left" && f[1] != "right"))
      throw ParseError(source, line_no, "expected 'CATEGORY left|right CHILD...'");
    if (table.find(f[0])) throw ParseError(source, line_no, "duplicate head entry for " + f[0]);
    HeadTable::Entry e;
    e.direction = f[1] == "left" ? HeadDirection::left : HeadDirection::right;
    e.preferred.assign(f.begin() + 2, f.end());
    table.set(f[0], std::move(e));
  }
  return table;
}

HeadTable read_head_table(const std::filesystem::path& path) {
  return parse_head_table(read_file(path), path.string());
}

namespace {

// Returns the head word of `node` and writes the annotated copy into `out`.
std::string annotate_node(const Tree& node, const HeadTable& heads, Tree& out,
                          std::vector<std::string>* diagnostics) {
  if (node.is_preterminal()) {
    const std::string& word = node.children.front().label;
    out = Tree{annotate(node.label, word), {node.children.front()}};
    return word;
  }
  if (node.is_leaf()) throw Error("unexpected bare leaf '" + node.label + "'");
  out.children.resize(node.children.size());
  std::vector<std::string> child_heads(node.children.size());
  for (std::size_t i = 0; i < node.children.size(); ++i)
    child_heads[i] = annotate_node(node.children[i], heads, out.children[i], diagnostics);
  const std::size_t h = heads.head_child(node, diagnostics);
  out.label = annotate(node.label, child_heads[h]);
  return child_heads[h];
}

using RuleKey = std::pair<std::string, std::vector<std::string>>;

void count_rules(const Tree& t, std::map<RuleKey, double>& counts) {
  if (t.is_leaf()) return;
  RuleKey key{t.label, {}};
  for (const auto& c : t.children) key.second.push_back(c.label);
  counts[key] += 1.0;
  for (const auto& c : t.children) count_rules(c, counts);
}

}  // namespace

Tree lexicalize_tree(const Tree& tree, const HeadTable& heads,
                     std::vector<std::string>* diagnostics) {
  Tree out;
  annotate_node(tree, heads, out, diagnostics);
  return out;
}

LexicalizedPcfg lexicalize(const Treebank& treebank, const HeadTable& heads) {
  if (treebank.empty()) throw Error("cannot lexicalize an empty treebank");
  LexicalizedPcfg lex;
  std::map<RuleKey, double> counts;
  std::set<std::string> root_categories;
  for (std::size_t i = 0; i < treebank.size(); ++i) {
    std::vector<std::string> notes;
    Tree annotated;
    try {
      annotated = lexicalize_tree(treebank[i], heads, &notes);
    } catch (const Error& e) {
      throw Error(fmt::format("tree {}: {}", i + 1, e.what()));
    }
    for (auto& n : notes)
      if (std::find(lex.diagnostics.begin(), lex.diagnostics.end(), n) == lex.diagnostics.end())
        lex.diagnostics.push_back(std::move(n));
    root_categories.insert(treebank[i].label);
    count_rules(annotated, counts);
    // The bare root category rewrites to its annotated variant.
    counts[{treebank[i].label, {annotated.label}}] += 1.0;
  }
  std::string start = *root_categories.begin();
  if (root_categories.size() > 1) {
    start = "TOP";
    for (const auto& r : root_categories) {
      double n = 0.0;
      for (const auto& [key, c] : counts)
        if (key.first == r && key.second.size() == 1 && base_category(key.second[0]) == r &&
            key.second[0] != r)
          n += c;
      counts[{start, {r}}] += n;
    }
  }
  std::map<std::string, double> totals;
  for (const auto& [key, n] : counts) totals[key.first] += n;
  std::vector<NamedRule> rules;
  for (const auto& [key, n] : counts) rules.push_back({key.first, key.second, n / totals[key.first]});
  lex.grammar = Pcfg::from_rules(start, rules);
  lex.lhs_counts = std::move(totals);
  return lex;
}

Pcfg delexicalize(const LexicalizedPcfg& lex) {
  const Pcfg& g = lex.grammar;
  // Symbols that only exist to reach annotated roots (the start symbol and
  // TOP's bare children) are dropped; the bare root becomes the start again.
  std::map<RuleKey, double> counts;
  std::set<std::string> root_glue;
  for (const auto& r : g.rules()) {
    const std::string& lhs = g.name(r.lhs);
    if (lhs == base_category(lhs) && r.rhs.size() == 1 && g.is_nonterminal(r.rhs[0]) &&
        base_category(g.name(r.rhs[0])) == lhs && g.name(r.rhs[0]) != lhs) {
      root_glue.insert(lhs);
    }
  }
  std::map<std::string, double> root_mass;
  for (const auto& r : g.rules()) {
    const std::string& lhs = g.name(r.lhs);
    auto it = lex.lhs_counts.find(lhs);
    if (it == lex.lhs_counts.end())
      throw Error("lexicalized grammar has no training count for " + lhs);
    const double mass = it->second * r.prob;
    if (root_glue.count(lhs)) {
      root_mass[lhs] += mass;
      continue;
    }
    if (lhs == g.name(g.start()) && lhs == base_category(lhs)) continue;  // TOP -> S
    RuleKey key{base_category(lhs), {}};
    for (Symbol s : r.rhs)
      key.second.push_back(g.is_nonterminal(s) ? base_category(g.name(s)) : g.name(s));
    counts[key] += mass;
  }
  std::string start = g.name(g.start());
  if (!root_glue.count(start)) {
    // TOP -> S1 | S2 ...: keep TOP as the start over the bare roots.
    for (const auto& [r, n] : root_mass) counts[{start, {r}}] += n;
  }
  std::map<std::string, double> totals;
  for (const auto& [key, n] : counts) totals[key.first] += n;
  std::vector<NamedRule> rules;
  for (const auto& [key, n] : counts) rules.push_back({key.first, key.second, n / totals[key.first]});
  return Pcfg::from_rules(start, rules);
}

std::string serialize(const LexicalizedPcfg& lex, int decimals) {
  std::string out = serialize(lex.grammar, decimals);
  for (const auto& [lhs, n] : lex.lhs_counts) out += fmt::format("#@count {} {}\n", lhs, n);
  return out;
}

LexicalizedPcfg parse_lexicalized(std::string_view text, const std::string& source) {
  LexicalizedPcfg lex;
  lex.grammar = parse_grammar(text, source);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.rfind("#@count ", 0) != 0) continue;
    auto f = split_ws(line);
    char* stop = nullptr;
    const double n = f.size() == 3 ? std::strtod(f[2].c_str(), &stop) : -1.0;
    if (f.size() != 3 || stop != f[2].c_str() + f[2].size() || !(n >= 0.0))
      throw ParseError(source, line_no, "malformed #@count line");
    lex.lhs_counts[f[1]] = n;
  }
  for (Symbol nt : lex.grammar.nonterminals())
    if (!lex.lhs_counts.count(lex.grammar.name(nt)))
      throw ParseError(source, 0, "missing #@count line for " + lex.grammar.name(nt));
  return lex;
}

LexicalizedPcfg read_lexicalized(const std::filesystem::path& path) {
  return parse_lexicalized(read_file(path), path.string());
}

}  // namespace surp
