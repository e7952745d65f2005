#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "support/grammars.hpp"
#include "surp/corpus.hpp"
#include "surp/error.hpp"
#include "surp/pcfg.hpp"

using namespace surp;
using testing_support::kBookGrammar;

namespace {

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

TEST_CASE("grammar file: the six-line grammar expands to uniform rules") {
  const Pcfg g = parse_grammar(kBookGrammar);
  CHECK(g.rules().size() == 10);
  CHECK(g.name(g.start()) == "S");
  CHECK(g.rule_prob("Det", {"the"}) == doctest::Approx(0.5));
  CHECK(g.rule_prob("VP", {"V", "NP"}) == doctest::Approx(0.5));
  CHECK(g.rule_prob("S", {"NP", "VP"}) == doctest::Approx(1.0));
  CHECK(g.rule_prob("S", {"VP"}) == 0.0);
  CHECK(validate(g).clean());
  CHECK(g.terminals().size() == 6);
  CHECK(g.nonterminals().size() == 6);
}

TEST_CASE("grammar file: explicit probabilities and leftover mass") {
  const Pcfg g = parse_grammar("S -> A 0.7 | B\nS -> C\nA -> a\nB -> b\nC -> c\n");
  CHECK(g.rule_prob("S", {"A"}) == doctest::Approx(0.7));
  CHECK(g.rule_prob("S", {"B"}) == doctest::Approx(0.15));
  CHECK(g.rule_prob("S", {"C"}) == doctest::Approx(0.15));
}

TEST_CASE("grammar file: errors and diagnostics") {
  CHECK_THROWS_AS(parse_grammar("S -> NP VP 0.9\nNP -> n\nVP -> v\n"), Error);
  CHECK_THROWS_AS(parse_grammar("S -> a 0.7 | b 0.7\n"), Error);
  CHECK_THROWS_AS(parse_grammar("S a\n"), ParseError);
  CHECK_THROWS_AS(parse_grammar("-> a\n"), ParseError);
  CHECK_THROWS_AS(parse_grammar("# nothing\n"), Error);

  const Pcfg loop = parse_grammar("S -> a | X\nX -> X\n");
  const auto d = validate(loop);
  CHECK(contains(d.unproductive, "X"));
  CHECK_FALSE(d.clean());
  CHECK_THROWS_AS(parse_grammar("S -> a | X\nX -> X\n", "g", GrammarMode::strict), Error);

  const Pcfg orphan = parse_grammar("S -> a\nZ -> b\n");
  CHECK(contains(validate(orphan).unreachable, "Z"));
}

TEST_CASE("validate: residual at the tolerance edge is reported but accepted") {
  const Pcfg g = Pcfg::from_rules("S", {{"S", {"a"}, 0.5}, {"S", {"b"}, 0.499999}});
  const auto d = validate(g);
  REQUIRE(d.residuals.size() == 1);
  CHECK(d.residuals[0].first == "S");
  CHECK(d.residuals[0].second == doctest::Approx(1e-6).epsilon(1e-6));
  CHECK(d.clean());

  const Pcfg eps = parse_grammar("S -> A b\nA -> a | <eps>\n");
  CHECK(eps.has_epsilon_rules());
  CHECK(contains(validate(eps).epsilon_rules, "A"));
}

TEST_CASE("estimate: relative frequencies") {
  auto g = estimate_pcfg(parse_treebank("(S (A a))\n"));
  CHECK(g.rule_prob("S", {"A"}) == 1.0);
  CHECK(g.rule_prob("A", {"a"}) == 1.0);

  g = estimate_pcfg(parse_treebank(
      "(S (NP (N x)) (VP (V y) (NP (N x))))\n"
      "(S (NP (N x)) (VP (V y) (NP (N z))))\n"
      "(S (NP (N z)) (VP (V y)))\n"));
  CHECK(g.rule_prob("VP", {"V", "NP"}) == doctest::Approx(2.0 / 3.0));
  CHECK(g.rule_prob("VP", {"V"}) == doctest::Approx(1.0 / 3.0));
  CHECK(g.rule_prob("N", {"x"}) == doctest::Approx(0.6));
  CHECK(validate(g).clean());

  CHECK_THROWS_AS(estimate_pcfg({}), Error);
}

TEST_CASE("estimate: several root labels get a TOP symbol") {
  const auto g = estimate_pcfg(parse_treebank("(S (A a))\n(Q (A a))\n(S (A a))\n"));
  CHECK(g.name(g.start()) == "TOP");
  CHECK(g.rule_prob("TOP", {"S"}) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("tree probability is the product of its rules") {
  const Pcfg g = parse_grammar(kBookGrammar);
  const Tree t = parse_tree("(S (NP (Det the) (N book)) (VP (V reads)))");
  CHECK(g.tree_probability(t) == doctest::Approx(1.0 / 16.0));
  CHECK(g.tree_probability(parse_tree("(S (VP (V reads)))")) == 0.0);
}

TEST_CASE("serializer: parsing is a left inverse") {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const Pcfg g = testing_support::random_finite_grammar(rng);
    const std::string text = serialize(g, 10);
    const Pcfg back = parse_grammar(text);
    REQUIRE(back.rules().size() == g.rules().size());
    for (const auto& r : g.named_rules())
      CHECK(std::abs(back.rule_prob(r.lhs, r.rhs) - r.prob) < 1e-9);
    CHECK(serialize(back, 10) == text);
  }
  // Rounded values still sum to one at the printed precision.
  const Pcfg thirds = Pcfg::from_rules(
      "S", {{"S", {"a"}, 1.0 / 3}, {"S", {"b"}, 1.0 / 3}, {"S", {"c"}, 1.0 / 3}});
  const Pcfg back = parse_grammar(serialize(thirds, 6));
  CHECK(validate(back).max_residual < 1e-12);
}

TEST_CASE("sampling then re-estimation recovers the grammar") {
  std::mt19937_64 rng(17);
  const Pcfg g = testing_support::random_recursive_grammar(rng);
  Treebank tb;
  for (int i = 0; i < 10000; ++i) tb.push_back(sample_tree(g, rng));
  const Pcfg e = estimate_pcfg(tb);
  std::map<std::string, double> kl;
  for (const auto& r : g.named_rules()) {
    const double q = e.rule_prob(r.lhs, r.rhs);
    if (q > 0.0) kl[r.lhs] += r.prob * std::log(r.prob / q);
    else kl[r.lhs] = INFINITY;
  }
  for (const auto& [lhs, d] : kl) {
    INFO(lhs);
    CHECK(d < 0.05);
  }
}

TEST_CASE("sample_tree: depth limit and determinism") {
  const Pcfg g = parse_grammar("S -> S S 0.9 | a 0.1\n");
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(sample_tree(g, rng, 5), Error);

  std::mt19937_64 a(5), b(5);
  const Pcfg book = parse_grammar(kBookGrammar);
  for (int i = 0; i < 50; ++i) CHECK(sample_tree(book, a) == sample_tree(book, b));
}

TEST_CASE("head table: lookup, direction and fallback") {
  const HeadTable h = parse_head_table("# heads\nVP left V\nNP right N Name\nS left VP\n");
  std::vector<std::string> diag;
  const Tree vp = parse_tree("(VP (V reads) (NP (Det the) (N book)))");
  CHECK(h.head_child(vp, &diag) == 0);
  const Tree np = parse_tree("(NP (Det the) (N book))");
  CHECK(h.head_child(np, &diag) == 1);
  CHECK(diag.empty());

  const Tree pp = parse_tree("(PP (P on) (NP (N desk)))");
  CHECK(h.head_child(pp, &diag) == 1);
  CHECK(diag.size() == 1);
  CHECK_THROWS_AS(parse_head_table("VP up V\n"), ParseError);
}

TEST_CASE("lexicalize: head words percolate") {
  const HeadTable h = parse_head_table("S right VP\nVP left V\nNP right N\n");
  const Tree t = parse_tree("(S (NP (Det the) (N book)) (VP (V reads) (NP (Det a) (N note))))");
  const Tree l = lexicalize_tree(t, h);
  CHECK(l.label == "S[reads]");
  CHECK(l.children[0].label == "NP[book]");
  CHECK(l.children[1].label == "VP[reads]");
  CHECK(l.children[1].children[1].label == "NP[note]");
  CHECK(l.children[0].children[0].label == "Det[the]");
  CHECK(base_category("NP[book]") == "NP");
  CHECK(base_category("NP") == "NP");
  CHECK(annotate("NP", "book") == "NP[book]");

  std::vector<std::string> diag;
  lexicalize_tree(parse_tree("(X (A a) (B b))"), h, &diag);
  CHECK_FALSE(diag.empty());
}

TEST_CASE("lexicalize: delexicalization recovers the treebank estimate") {
  const HeadTable h = parse_head_table("S right VP\nVP left V\nNP right N\n");
  std::mt19937_64 rng(8);
  const Pcfg gen = parse_grammar(
      "S -> NP VP\nNP -> Det N 0.7 | N 0.3\nVP -> V NP 0.6 | V 0.4\n"
      "Det -> the | a\nN -> book | books | note\nV -> reads | read\n");
  Treebank tb;
  for (int i = 0; i < 400; ++i) tb.push_back(sample_tree(gen, rng));
  const auto lex = lexicalize(tb, h);
  CHECK(lex.grammar.name(lex.grammar.start()) == "S");
  CHECK(validate(lex.grammar).max_residual < 1e-9);

  const Pcfg plain = estimate_pcfg(tb);
  const Pcfg back = delexicalize(lex);
  CHECK(back.rules().size() == plain.rules().size());
  for (const auto& r : plain.named_rules()) {
    INFO(r.lhs);
    CHECK(std::abs(back.rule_prob(r.lhs, r.rhs) - r.prob) < 1e-9);
  }
  CHECK(validate(back).max_residual < 1e-9);

  const auto again = parse_lexicalized(serialize(lex, 12));
  CHECK(again.lhs_counts == lex.lhs_counts);
  CHECK(again.grammar.rules().size() == lex.grammar.rules().size());
}
