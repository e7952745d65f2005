#include <doctest.h>

#include <map>
#include <set>
#include <sstream>

#include "surp/corpus.hpp"
#include "surp/error.hpp"
#include "surp/ngram.hpp"
#include "surp/pcfg.hpp"
#include "surp/pipeline.hpp"
#include "surp/prefix_parser.hpp"
#include "surp/stimuli.hpp"

using namespace surp;

namespace {

const char* kHeader = "id,condition,phrase_type,tokens,hp_start\n";

std::string row(const std::string& id, const std::string& cond, const std::string& pt,
                const std::string& toks, const std::string& hp) {
  return id + "," + cond + "," + pt + "," + toks + "," + hp + "\n";
}

Pcfg toy_design() { return read_grammar(bundled_data_dir() / "toy" / "design.pcfg"); }

const std::vector<StimulusTrial>& toy_trials() {
  static const auto trials = generate_toy_stimuli(toy_design(), 30, 42);
  return trials;
}

}  // namespace

TEST_CASE("stimuli: loading a well-formed file") {
  std::string text = kHeader;
  int n = 0;
  for (const auto& [c, p] : kStimulusClasses)
    for (int k = 0; k < 30; ++k)
      text += row("t" + std::to_string(n++), to_string(c), to_string(p),
                  "now/Adv her/Det watch/N stops/Vi", "1");
  const auto trials = parse_stimuli(text);
  CHECK(trials.size() == 150);
  for (const auto& [cls, count] : class_counts(trials)) CHECK(count == 30);
  CHECK(trials[0].forms() == std::vector<std::string>{"now", "her", "watch", "stops"});
  CHECK(trials[0].sentence.tags() == std::vector<std::string>{"Adv", "Det", "N", "Vi"});
  CHECK(trials[0].has_tags());
  CHECK(class_count_report(trials).find("Weak_PRED-NP") != std::string::npos);

  const auto plain = parse_stimuli(std::string(kHeader) + row("a", "UNPRED", "VP", "x y z", "0"));
  CHECK_FALSE(plain[0].has_tags());
  CHECK(plain[0].class_name() == "UNPRED-VP");
}

TEST_CASE("stimuli: rejected rows") {
  try {
    parse_stimuli(std::string(kHeader) + row("w", "Weak_PRED", "VP", "a b c", "0"), "s.csv");
    FAIL("expected an error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("Weak_PRED-VP") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_stimuli(std::string(kHeader) + row("a", "UNPRED", "NP", "a b c", "2")),
                  ParseError);
  CHECK_THROWS_AS(parse_stimuli(std::string(kHeader) + row("a", "MAYBE", "NP", "a b c", "0")),
                  ParseError);
  CHECK_THROWS_AS(parse_stimuli(std::string(kHeader) + row("a", "UNPRED", "PP", "a b c", "0")),
                  ParseError);
  CHECK_THROWS_AS(parse_stimuli(std::string(kHeader) + row("a", "UNPRED", "NP", "a b c", "-1")),
                  ParseError);
  CHECK_THROWS_AS(parse_stimuli(std::string(kHeader) + row("a", "UNPRED", "NP", "a b c", "0") +
                                row("a", "UNPRED", "VP", "a b c", "0")),
                  ParseError);
  CHECK_THROWS_AS(parse_stimuli("id,cond\n"), ParseError);
  CHECK_THROWS_AS(parse_stimuli(""), ParseError);
}

TEST_CASE("stimuli: write then parse is the identity") {
  std::ostringstream out;
  write_stimuli(out, toy_trials());
  CHECK(parse_stimuli(out.str()) == toy_trials());
}

TEST_CASE("generation: the toy design fills all five classes") {
  const auto& trials = toy_trials();
  CHECK(trials.size() == 150);
  for (const auto& [cls, count] : class_counts(trials)) CHECK(count == 30);
  std::set<std::string> ids;
  for (const auto& t : trials) {
    ids.insert(t.id);
    CHECK(t.hp_start + 1 < t.sentence.size());
    CHECK(t.has_tags());
  }
  CHECK(ids.size() == trials.size());
  // The design grammar assigns every generated sentence one parse.
  const PrefixParser parser(toy_design());
  for (const auto& t : trials) CHECK(parser.parse(t.forms()).log_sentence > -1e300);
}

TEST_CASE("generation: deterministic under a seed") {
  const Pcfg g = toy_design();
  CHECK(generate_toy_stimuli(g, 1, 5) == generate_toy_stimuli(g, 1, 5));
  CHECK(generate_toy_stimuli(g, 3, 5) != generate_toy_stimuli(g, 3, 6));
}

TEST_CASE("generation: UNPRED pairs share their words up to the end of the HP") {
  std::map<std::string, const StimulusTrial*> by_id;
  for (const auto& t : toy_trials()) by_id[t.id] = &t;
  int pairs = 0;
  for (const auto& t : toy_trials()) {
    if (t.condition != Condition::unpred || t.phrase_type != PhraseType::np) continue;
    std::string partner = t.id;
    partner.replace(partner.find("-NP-"), 4, "-VP-");
    REQUIRE(by_id.count(partner));
    const auto& u = *by_id[partner];
    REQUIRE(u.hp_start == t.hp_start);
    const auto a = t.forms();
    const auto b = u.forms();
    CHECK(std::equal(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(t.hp_start + 2),
                     b.begin()));
    ++pairs;
  }
  CHECK(pairs == 30);
}

TEST_CASE("generation: missing homograph classes are named") {
  const Pcfg no_function = parse_grammar(
      "S -> Adv NP V | Adv VP\nNP -> Det N\nVP -> Cl V\n"
      "Adv -> now\nDet -> the\nCl -> it\nN -> watch\nV -> watch\n");
  try {
    generate_toy_stimuli(no_function, 1, 1);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("function-word homograph") != std::string::npos);
  }
  const Pcfg no_content = parse_grammar(
      "S -> Adv NP V | Adv VP\nNP -> Det N\nVP -> Cl V\n"
      "Adv -> now\nDet -> her\nCl -> her\nN -> watch\nV -> runs\n");
  try {
    generate_toy_stimuli(no_content, 1, 1);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("content-word homograph") != std::string::npos);
  }
}

TEST_CASE("scoring: a deterministic grammar gives all-zero features") {
  const Pcfg g = parse_grammar("S -> A NP V\nNP -> D N\nA -> now\nD -> her\nN -> watch\nV -> stops\n");
  const auto corpus = parse_tagged_corpus("now\tA\nher\tD\nwatch\tN\nstops\tV\n");
  NGramConfig cfg;
  cfg.order = 3;
  cfg.alpha = 0.0;
  cfg.lambda = {0.0, 0.0, 1.0};
  const auto vocab = build_vocab(corpus, 1);
  const auto word = train_ngram(corpus, cfg, vocab);
  cfg.mode = UnitMode::pos;
  const auto pos = train_ngram(corpus, cfg, vocab);
  const PrefixParser parser(g);
  const auto trials = parse_stimuli(std::string(kHeader) +
                                    row("x", "Strong_PRED", "NP", "now/A her/D watch/N stops/V", "1"));
  const auto table = score_stimuli(trials, {word, pos, parser, LogBase(2.0)});
  REQUIRE(table.size() == 1);
  for (double v : table[0].values) CHECK(v == 0.0);

  const auto untagged = parse_stimuli(std::string(kHeader) +
                                      row("y", "UNPRED", "NP", "now her watch stops", "1"));
  try {
    score_stimuli(untagged, {word, pos, parser, LogBase(2.0)});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("'y'") != std::string::npos);
  }
}

TEST_CASE("scoring: toy table shape, UNPRED n-gram equality and round trip") {
  const auto cfg = toy_config("unused");
  const auto corpus = read_tagged_corpus(cfg.corpus);
  const auto vocab = build_vocab(corpus, 2);
  NGramConfig nc;
  const auto word = train_ngram(corpus, nc, vocab);
  nc.mode = UnitMode::pos;
  const auto pos = train_ngram(corpus, nc, vocab);
  const Pcfg g = estimate_pcfg(read_treebank(cfg.treebank));
  const PrefixParser parser(g);
  const auto table = score_stimuli(toy_trials(), {word, pos, parser, LogBase(2.0)});
  REQUIRE(table.size() == toy_trials().size());

  std::map<std::string, const SurprisalRow*> by_id;
  std::map<std::string, std::size_t> per_class;
  for (const auto& r : table) {
    by_id[r.trial_id] = &r;
    ++per_class[r.class_name()];
    for (double v : r.values) {
      CHECK(std::isfinite(v));
      CHECK(v >= 0.0);
    }
  }
  CHECK(per_class == class_counts(toy_trials()));
  for (const auto& r : table) {
    if (r.condition != Condition::unpred || r.phrase_type != PhraseType::np) continue;
    std::string partner = r.trial_id;
    partner.replace(partner.find("-NP-"), 4, "-VP-");
    const auto& u = *by_id.at(partner);
    CHECK(r.value(Notion::ngram, 0) == u.value(Notion::ngram, 0));
    CHECK(r.value(Notion::ngram, 1) == u.value(Notion::ngram, 1));
    // The second HP word is a noun/verb homograph, so the categories that
    // can emit it cover both readings and its structural cost is shared too.
    CHECK(r.value(Notion::syntactic, 1) == doctest::Approx(u.value(Notion::syntactic, 1)));
  }

  std::ostringstream out;
  write_surprisal_table(out, table);
  CHECK(out.str().rfind("trial_id,condition,phrase_type,ngram_w1,ngram_w2,lex_w1,lex_w2,pos_w1,"
                        "pos_w2,syn_w1,syn_w2\n", 0) == 0);
  const auto back = parse_surprisal_table(out.str());
  REQUIRE(back.size() == table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    CHECK(back[i].trial_id == table[i].trial_id);
    for (std::size_t v = 0; v < 8; ++v)
      CHECK(back[i].values[v] == doctest::Approx(table[i].values[v]).epsilon(1e-12));
  }
  std::ostringstream longf;
  write_long_format(longf, table);
  const std::string long_text = longf.str();
  CHECK(std::count(long_text.begin(), long_text.end(), '\n') ==
        static_cast<std::ptrdiff_t>(1 + 8 * table.size()));
}
