#include <map>

#include <fmt/format.h>

#include "surp/error.hpp"
#include "surp/prefix_parser.hpp"

namespace surp {

namespace {

using Derivations = std::vector<std::pair<Tree, double>>;

class Enumerator {
 public:
  Enumerator(const Pcfg& g, std::size_t max_trees) : g_(g), max_trees_(max_trees) {}

  // Derivations rooted at `s` using at most `depth` levels of rule applications.
  const Derivations& derive(Symbol s, std::size_t depth) {
    auto key = std::make_pair(s, depth);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    Derivations out;
    if (depth > 0) {
      for (auto ri : g_.rules_for(s)) {
        const Rule& r = g_.rules()[ri];
        if (r.prob <= 0.0) continue;
        if (r.is_epsilon()) throw Error("cannot enumerate trees of grammars with epsilon rules");
        Derivations partial{{Tree{g_.name(s), {}}, r.prob}};
        for (Symbol c : r.rhs) {
          if (!g_.is_nonterminal(c)) {
            for (auto& [t, p] : partial) t.children.push_back(Tree{g_.name(c), {}});
            continue;
          }
          const Derivations& sub = derive(c, depth - 1);
          Derivations next;
          if (partial.size() * sub.size() > max_trees_)
            throw Error(fmt::format("tree enumeration exceeds {} derivations", max_trees_));
          for (const auto& [t, p] : partial)
            for (const auto& [st, sp] : sub) {
              Tree grown = t;
              grown.children.push_back(st);
              next.emplace_back(std::move(grown), p * sp);
            }
          partial = std::move(next);
          if (partial.empty()) break;
        }
        for (auto& d : partial) out.push_back(std::move(d));
        if (out.size() > max_trees_)
          throw Error(fmt::format("tree enumeration exceeds {} derivations", max_trees_));
      }
    }
    return memo_.emplace(key, std::move(out)).first->second;
  }

 private:
  const Pcfg& g_;
  std::size_t max_trees_;
  std::map<std::pair<Symbol, std::size_t>, Derivations> memo_;
};

}  // namespace

TreeEnumeration enumerate_trees(const Pcfg& pcfg, std::size_t max_depth, std::size_t max_trees) {
  Enumerator e(pcfg, max_trees);
  TreeEnumeration out;
  out.trees = e.derive(pcfg.start(), max_depth);
  double sum = 0.0;
  for (const auto& [t, p] : out.trees) sum += p;
  out.residual = 1.0 - sum;
  return out;
}

double enumerated_prefix_probability(const TreeEnumeration& trees,
                                     std::span<const std::string> prefix) {
  double sum = 0.0;
  for (const auto& [t, p] : trees.trees) {
    const auto y = t.yield();
    if (y.size() < prefix.size()) continue;
    bool match = true;
    for (std::size_t i = 0; i < prefix.size() && match; ++i) match = y[i] == prefix[i];
    if (match) sum += p;
  }
  return sum;
}

}  // namespace surp
