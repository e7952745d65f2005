#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "surp/corpus.hpp"
#include "surp/error.hpp"
#include "surp/ngram.hpp"

using namespace surp;

namespace {

const char* kCats =
    "the\tDet\ncat\tN\nsat\tV\n\n"
    "the\tDet\ncat\tN\nran\tV\n\n"
    "the\tDet\ndog\tN\nsat\tV\n";

NGramModel mle(const std::vector<TaggedSentence>& c, std::size_t order, UnitMode mode) {
  NGramConfig cfg;
  cfg.order = order;
  cfg.mode = mode;
  cfg.alpha = 0.0;
  cfg.lambda.assign(order, 0.0);
  cfg.lambda.back() = 1.0;
  return train_ngram(c, cfg, build_vocab(c, 1));
}

std::vector<std::string> words(std::initializer_list<const char*> w) {
  return {w.begin(), w.end()};
}

}  // namespace

TEST_CASE("ngram: counts on a hand-countable corpus") {
  const auto c = parse_tagged_corpus(kCats);
  const auto m = mle(c, 2, UnitMode::word);
  CHECK(m.padding() == 2);
  CHECK(m.count({}, "sat") == 2);
  CHECK(m.count({}, "</s>") == 3);
  std::size_t words_seen = 0;
  for (const auto& [t, n] : m.table(0).at({}).targets)
    if (t != "</s>") words_seen += n;
  CHECK(words_seen == 9);
  CHECK(m.count({"the"}, "cat") == 2);
  CHECK(m.count({"the"}) == 3);
  CHECK(m.count({"<s>"}, "the") == 3);
  CHECK(m.count({"sat"}, "</s>") == 2);
}

TEST_CASE("ngram: pure MLE gives count ratios") {
  const auto c = parse_tagged_corpus(kCats);
  const auto m = mle(c, 2, UnitMode::word);
  const auto the = words({"the"});
  CHECK(m.prob(the, "cat") == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(m.prob(the, "dog") == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(m.prob(the, "sat") == 0.0);
  CHECK(m.prob(words({"cat"}), "sat") == doctest::Approx(0.5));

  // the cat sat: 1, 2/3, 1/2 -> 0, log2 1.5, 1 bits
  const auto s = m.surprisal(c[0], LogBase(2.0));
  REQUIRE(s.size() == 3);
  CHECK(s[0] == doctest::Approx(0.0));
  CHECK(s[1] == doctest::Approx(0.5849625007211562).epsilon(1e-12));
  CHECK(s[2] == doctest::Approx(1.0));

  const auto tri = mle(c, 3, UnitMode::word);
  CHECK(tri.prob(words({"the", "cat"}), "ran") == doctest::Approx(0.5));
  CHECK(tri.prob(words({"the", "dog"}), "sat") == doctest::Approx(1.0));
}

TEST_CASE("ngram: unseen context under pure MLE is uniform") {
  const auto c = parse_tagged_corpus(kCats);
  const auto m = mle(c, 2, UnitMode::word);
  const auto ctx = words({"ran"});  // only followed by </s>
  CHECK(m.prob(ctx, "</s>") == doctest::Approx(1.0));
  const auto tri = mle(c, 3, UnitMode::word);
  const double u = 1.0 / static_cast<double>(tri.vocab_size());
  CHECK(tri.prob(words({"dog", "cat"}), "sat") == doctest::Approx(u));
}

TEST_CASE("ngram: interpolated model normalizes over random contexts") {
  const auto c = parse_tagged_corpus(kCats);
  NGramConfig cfg;
  cfg.order = 3;
  cfg.alpha = 0.1;
  cfg.lambda = {0.2, 0.3, 0.5};
  const auto m = train_ngram(c, cfg, build_vocab(c, 1));
  std::mt19937_64 rng(11);
  std::vector<std::string> pool = m.units();
  pool.push_back("<s>");
  pool.push_back("zebra");  // unknown -> <unk>
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<std::string> ctx(rng() % 4);
    for (auto& u : ctx) u = pool[rng() % pool.size()];
    double sum = 0.0;
    for (const auto& t : m.units()) sum += m.prob(ctx, t);
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
}

TEST_CASE("ngram: one-hot lambda equals the single-order estimate") {
  const auto c = parse_tagged_corpus(kCats);
  for (std::size_t k = 1; k <= 3; ++k) {
    NGramConfig cfg;
    cfg.order = 3;
    cfg.alpha = 0.5;
    cfg.lambda = {0.0, 0.0, 0.0};
    cfg.lambda[k - 1] = 1.0;
    const auto m = train_ngram(c, cfg, build_vocab(c, 1));
    const auto ctx = words({"the", "cat"});
    for (const auto& t : m.units()) CHECK(m.prob(ctx, t) == doctest::Approx(m.order_prob(k, ctx, t)));
  }
}

TEST_CASE("ngram: word and POS models agree when tags are a bijection of forms") {
  const auto c = parse_tagged_corpus("a\tA\nb\tB\n\nb\tB\nc\tC\na\tA\n\nc\tC\n");
  NGramConfig w;
  w.order = 2;
  w.alpha = 0.3;
  NGramConfig p = w;
  p.mode = UnitMode::pos;
  const auto vocab = build_vocab(c, 1);
  const auto mw = train_ngram(c, w, vocab);
  const auto mp = train_ngram(c, p, vocab);
  for (const auto& s : c) {
    const auto a = mw.surprisal(s);
    const auto b = mp.surprisal(s);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
  }
}

TEST_CASE("ngram: unknown words map to <unk>") {
  const auto c = parse_tagged_corpus(kCats);
  NGramConfig cfg;
  cfg.order = 2;
  const auto m = train_ngram(c, cfg, build_vocab(c, 2));
  // dog and ran were seen once, so they are not in the known set.
  CHECK(m.map_unit("dog") == "<unk>");
  CHECK(m.map_unit("cat") == "cat");
  CHECK(m.count({"the"}, "<unk>") == 1);
  CHECK(m.prob(words({"the"}), "elephant") == doctest::Approx(m.prob(words({"the"}), "<unk>")));
  CHECK_THROWS_AS(m.map_unit("<s>"), Error);
}

TEST_CASE("ngram: save and load round trip") {
  const auto c = parse_tagged_corpus(kCats);
  NGramConfig cfg;
  cfg.order = 3;
  cfg.alpha = 0.25;
  cfg.lambda = {0.1, 0.3, 0.6};
  const auto m = train_ngram(c, cfg, build_vocab(c, 1));
  std::ostringstream out;
  m.save(out);
  std::istringstream in(out.str());
  const auto back = NGramModel::load(in);
  CHECK(back == m);
  std::ostringstream again;
  back.save(again);
  CHECK(again.str() == out.str());

  std::istringstream bad("surp-ngram 1\norder x\n");
  CHECK_THROWS_AS(NGramModel::load(bad), Error);
}

TEST_CASE("ngram: configuration errors") {
  const auto c = parse_tagged_corpus(kCats);
  const auto v = build_vocab(c, 1);
  NGramConfig cfg;
  cfg.order = 0;
  CHECK_THROWS_AS(train_ngram(c, cfg, v), Error);
  cfg.order = 6;
  CHECK_THROWS_AS(train_ngram(c, cfg, v), Error);
  cfg.order = 2;
  CHECK_THROWS_AS(train_ngram({}, cfg, v), Error);
  cfg.alpha = -1.0;
  CHECK_THROWS_AS(train_ngram(c, cfg, v), Error);
  cfg.alpha = 0.1;
  cfg.lambda = {0.5, 0.6};
  CHECK_THROWS_AS(train_ngram(c, cfg, v), Error);
  cfg.lambda = {1.0};
  CHECK_THROWS_AS(train_ngram(c, cfg, v), Error);
}
