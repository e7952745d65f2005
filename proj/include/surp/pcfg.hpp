#pragma once

// Probabilistic context-free grammars: representation, grammar files,
// treebank estimation, validation, sampling and head lexicalization.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "surp/corpus.hpp"

namespace surp {

using Symbol = std::int32_t;

// Written as the only right-hand-side item of an epsilon rule.
inline constexpr std::string_view kEpsilon = "<eps>";
// Tolerance on |sum of probabilities - 1| per left-hand side.
inline constexpr double kNormalizationTolerance = 1e-6;

struct Rule {
  Symbol lhs = 0;
  std::vector<Symbol> rhs;  // empty for an epsilon rule
  double prob = 0.0;

  bool is_epsilon() const { return rhs.empty(); }
  bool operator==(const Rule&) const = default;
};

// Rule spelled with symbol names, used to build grammars.
struct NamedRule {
  std::string lhs;
  std::vector<std::string> rhs;
  double prob = 0.0;
};

class Pcfg {
 public:
  Pcfg() = default;

  // A symbol is a nonterminal iff it is the left-hand side of some rule.
  // Probabilities are taken as given; see validate() for normalization.
  static Pcfg from_rules(const std::string& start, const std::vector<NamedRule>& rules);

  Symbol start() const { return start_; }
  std::size_t symbol_count() const { return names_.size(); }
  const std::string& name(Symbol s) const { return names_.at(static_cast<std::size_t>(s)); }
  std::optional<Symbol> find(std::string_view name) const;
  bool is_nonterminal(Symbol s) const { return nonterminal_.at(static_cast<std::size_t>(s)); }
  std::vector<Symbol> nonterminals() const;
  std::vector<Symbol> terminals() const;

  const std::vector<Rule>& rules() const { return rules_; }
  // Indices into rules() of the rules expanding `lhs`, in file order.
  const std::vector<std::size_t>& rules_for(Symbol lhs) const {
    return by_lhs_.at(static_cast<std::size_t>(lhs));
  }
  // Probability of lhs -> rhs, 0 when the rule does not exist.
  double rule_prob(Symbol lhs, const std::vector<Symbol>& rhs) const;
  double rule_prob(const std::string& lhs, const std::vector<std::string>& rhs) const;
  bool has_epsilon_rules() const;

  // Product of the rule probabilities of the tree (0 for an underivable tree).
  double tree_probability(const Tree& tree) const;

  // Rules as named triples, in rules() order.
  std::vector<NamedRule> named_rules() const;

 private:
  Symbol intern(const std::string& name);

  Symbol start_ = 0;
  std::vector<std::string> names_;
  std::unordered_map<std::string, Symbol> ids_;
  std::vector<bool> nonterminal_;
  std::vector<Rule> rules_;
  std::vector<std::vector<std::size_t>> by_lhs_;
  std::map<std::pair<Symbol, std::vector<Symbol>>, std::size_t> index_;
};

struct GrammarDiagnostics {
  // |sum - 1| per left-hand side; entries at floating-point noise level
  // (<= 1e-12) are not listed.
  std::vector<std::pair<std::string, double>> residuals;
  double max_residual = 0.0;
  std::vector<std::string> unreachable;
  std::vector<std::string> unproductive;
  std::vector<std::string> epsilon_rules;  // left-hand sides owning an epsilon rule

  // True when nothing is unreachable/unproductive/epsilon and every residual
  // is within kNormalizationTolerance.
  bool clean() const;
  std::vector<std::string> messages() const;
};

GrammarDiagnostics validate(const Pcfg& pcfg);

enum class GrammarMode { lenient, strict };

// Grammar files: `LHS -> RHS1 RHS2 p` per line with an optional
// trailing probability p, `#` starts a comment,
// `A -> B | C` expands into two rules, and each alternative may carry its
// own trailing probability. Alternatives without a probability share the
// mass left over by the explicit ones uniformly. The first left-hand side is
// the start symbol. In strict mode unreachable or unproductive symbols are
// errors; otherwise they are left for validate() to report.
Pcfg parse_grammar(std::string_view text, const std::string& source = "<string>",
                   GrammarMode mode = GrammarMode::lenient);
Pcfg read_grammar(const std::filesystem::path& path, GrammarMode mode = GrammarMode::lenient);

// Emits the grammar file format with explicit probabilities. For normalized
// left-hand sides the rounded values are chosen so that they still sum to
// exactly one at the printed precision.
std::string serialize(const Pcfg& pcfg, int decimals = 6);

// Relative-frequency estimate from a treebank. The start symbol is the root
// label; a treebank with several root labels gets a fresh TOP symbol.
Pcfg estimate_pcfg(const Treebank& treebank);

// Samples one derivation. Throws if the tree grows deeper than max_depth.
Tree sample_tree(const Pcfg& pcfg, std::mt19937_64& rng, std::size_t max_depth = 200);

// Uniform double in [0, 1) built from 53 random bits, stable across
// standard library implementations.
double uniform01(std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Lexicalization

// "NP[book]" -> "NP"; labels without an annotation are returned unchanged.
std::string base_category(std::string_view label);
std::string annotate(std::string_view category, std::string_view head);

enum class HeadDirection { left, right };

// Per-category head preferences: search the children in `direction` for the
// first label of `preferred`, trying preferences in order. When nothing
// matches the first child in the search direction is taken. Categories
// missing from the table take their rightmost child.
class HeadTable {
 public:
  struct Entry {
    HeadDirection direction = HeadDirection::left;
    std::vector<std::string> preferred;
  };

  void set(const std::string& category, Entry entry) { entries_[category] = std::move(entry); }
  const Entry* find(const std::string& category) const;
  const std::map<std::string, Entry>& entries() const { return entries_; }

  // Index of the head child; diagnostics receive a note when a fallback is used.
  std::size_t head_child(const Tree& node, std::vector<std::string>* diagnostics = nullptr) const;

 private:
  std::map<std::string, Entry> entries_;
};

// Lines: `CATEGORY left|right CHILD...`, `#` comments.
HeadTable parse_head_table(std::string_view text, const std::string& source = "<string>");
HeadTable read_head_table(const std::filesystem::path& path);

struct LexicalizedPcfg {
  // Categories are annotated as CAT[head]. The start symbol is the bare root
  // category, expanding by unit rules into its annotated variants.
  Pcfg grammar;
  // Training frequency of every annotated left-hand side.
  std::map<std::string, double> lhs_counts;
  std::vector<std::string> diagnostics;
};

Tree lexicalize_tree(const Tree& tree, const HeadTable& heads,
                     std::vector<std::string>* diagnostics = nullptr);
LexicalizedPcfg lexicalize(const Treebank& treebank, const HeadTable& heads);
// Strips annotations and merges the rule mass weighted by lhs_counts.
Pcfg delexicalize(const LexicalizedPcfg& lexicalized);

// Grammar file plus `#@count LHS N` lines carrying lhs_counts.
std::string serialize(const LexicalizedPcfg& lexicalized, int decimals = 6);
LexicalizedPcfg parse_lexicalized(std::string_view text, const std::string& source = "<string>");
LexicalizedPcfg read_lexicalized(const std::filesystem::path& path);

}  // namespace surp
