#pragma once

// Exact prefix probabilities under a PCFG with a probabilistic Earley chart.
//
// Each chart item carries a forward probability (mass of all derivations of
// the prefix that reach it) and an inner probability (mass of its own
// sub-derivation). Left-recursive prediction and unit-production completion
// cycles are summed in closed form through the reflexive-transitive closures
//   R_L = (I - P_L)^-1   over the left-corner relation
//   R_U = (I - P_U)^-1   over unit productions
// so every item is added once per position. Forward probabilities at
// position i are stored divided by prefix(w1..wi); the prefix probability
// itself is tracked as a running log, which keeps long sentences clear of
// underflow.
//
// Besides prefix(w1..wi) the parser records the structural mass
// prefix_struct(w1..wi-1, c_i): the probability of the prefix followed by a
// preterminal that can emit w_i, before the emission itself is paid for. A
// category that also has longer rules only counts the share of its mass
// that goes to single-terminal rules.
// Syntactic surprisal is -log prefix_struct / prefix(w1..wi-1), lexical
// surprisal is -log prefix(w1..wi) / prefix_struct, and the two add up to the
// total surprisal. Terminals that occur inside longer rules count as
// structure. Unknown tokens are read as <unk> when the grammar has
// open-class preterminals rewriting to <unk>.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "surp/pcfg.hpp"
#include "surp/surprisal.hpp"

namespace surp {

struct PrefixParseOptions {
  // Pool preterminals by base category (N[book] and N[books] are both N)
  // when measuring structural mass. Used for lexicalized grammars.
  bool group_by_base_category = false;
};

struct PrefixParse {
  // Natural-log prefix probabilities; entry i covers w1..wi, entry 0 is 0.
  // Entries after a failure are -inf.
  std::vector<double> log_prefix;
  // Entry i is ln prefix_struct(w1..wi-1, c_i); entry 0 is unused.
  std::vector<double> log_structural;
  // ln P(tokens as a complete sentence); -inf when not derivable.
  double log_sentence = 0.0;
  // Mass of each preterminal category emitting the next word right after
  // the whole input, relative to the prefix probability. Only categories with
  // positive mass are listed.
  std::map<std::string, double> next_category_mass;
  // 0-based index of the first token that cannot extend the prefix.
  std::optional<std::size_t> failed_at;
  std::vector<std::string> diagnostics;
};

struct SurprisalBreakdown {
  std::vector<double> total;
  std::vector<double> syntactic;
  std::vector<double> lexical;
};

class PrefixParser {
 public:
  explicit PrefixParser(const Pcfg& grammar, PrefixParseOptions options = {});
  explicit PrefixParser(const LexicalizedPcfg& grammar);

  const Pcfg& grammar() const { return grammar_; }

  PrefixParse parse(std::span<const std::string> tokens) const;

  double prefix_probability(std::span<const std::string> tokens) const;
  // Throws surp::Error naming the first position with zero prefix probability.
  std::vector<double> total_surprisal(std::span<const std::string> tokens, LogBase base = {}) const;
  SurprisalBreakdown split_surprisal(std::span<const std::string> tokens, LogBase base = {}) const;
  // -log P(sentence) / prefix(sentence): the cost of stopping after the last word.
  double end_of_sentence_surprisal(std::span<const std::string> tokens, LogBase base = {}) const;

  // Closure matrices, indexed by nonterminal position in nonterminals().
  const Eigen::MatrixXd& left_corner_closure() const { return left_closure_; }
  const Eigen::MatrixXd& unit_closure() const { return unit_closure_; }
  const std::vector<Symbol>& nonterminals() const { return nts_; }

 private:
  struct Weighted {
    int nt;  // nonterminal index
    double weight;
  };

  void build_tables();
  int nt_index(Symbol s) const { return nt_of_symbol_[static_cast<std::size_t>(s)]; }
  std::optional<Symbol> terminal_for(const std::string& token) const;

  Pcfg grammar_;
  PrefixParseOptions options_;
  std::vector<Symbol> nts_;
  std::vector<int> nt_of_symbol_;  // -1 for terminals
  std::vector<int> group_of_nt_;
  std::vector<std::string> group_names_;
  std::vector<double> emission_mass_;  // total probability of the rules X -> terminal
  std::size_t num_groups_ = 0;
  Eigen::MatrixXd left_closure_;
  Eigen::MatrixXd unit_closure_;
  std::vector<std::vector<Weighted>> left_corner_targets_;  // Z -> Y with R_L(Z, Y) > 0
  std::vector<std::vector<Weighted>> unit_parents_;         // Y -> Z with R_U(Z, Y) > 0
  std::optional<Symbol> unk_;
};

// Free-function forms of the parser operations.
double prefix_probability(const Pcfg& pcfg, std::span<const std::string> tokens);
std::vector<double> total_surprisal(const Pcfg& pcfg, std::span<const std::string> tokens,
                                    LogBase base = {});
SurprisalBreakdown split_surprisal(const Pcfg& pcfg, std::span<const std::string> tokens,
                                   LogBase base = {});
SurprisalBreakdown split_surprisal(const LexicalizedPcfg& pcfg,
                                   std::span<const std::string> tokens, LogBase base = {});

// Every derivation of depth <= max_depth (rule applications on the longest
// root-to-leaf path), with its probability. `residual` is the mass of the
// derivations that were cut off: 1 - sum of the listed probabilities.
struct TreeEnumeration {
  std::vector<std::pair<Tree, double>> trees;
  double residual = 0.0;
};

// Throws surp::Error when more than max_trees derivations would be produced.
TreeEnumeration enumerate_trees(const Pcfg& pcfg, std::size_t max_depth,
                                std::size_t max_trees = 2'000'000);

// Sum of P(T) over enumerated trees whose yield starts with `prefix`.
double enumerated_prefix_probability(const TreeEnumeration& trees,
                                     std::span<const std::string> prefix);

}  // namespace surp
