#include "surp/ngram.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "surp/error.hpp"

namespace surp {

std::string to_string(UnitMode mode) { return mode == UnitMode::word ? "word" : "pos"; }

UnitMode unit_mode_from_string(std::string_view text) {
  if (text == "word") return UnitMode::word;
  if (text == "pos") return UnitMode::pos;
  throw Error("unknown n-gram mode '" + std::string(text) + "' (expected word or pos)");
}

namespace {

std::vector<double> checked_lambda(std::vector<double> lambda, std::size_t order) {
  if (lambda.empty()) lambda.assign(order, 1.0 / static_cast<double>(order));
  if (lambda.size() != order)
    throw Error(fmt::format("expected {} interpolation weights, got {}", order, lambda.size()));
  double sum = 0.0;
  for (double l : lambda) {
    if (!(l >= 0.0)) throw Error("interpolation weights must be non-negative");
    sum += l;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw Error(fmt::format("interpolation weights sum to {} instead of 1", sum));
  return lambda;
}

}  // namespace

std::size_t NGramModel::count(const Context& context, std::string_view target) const {
  if (context.size() >= tables_.size()) return 0;
  const auto& t = tables_[context.size()];
  auto it = t.find(context);
  if (it == t.end()) return 0;
  auto jt = it->second.targets.find(std::string(target));
  return jt == it->second.targets.end() ? 0 : jt->second;
}

std::size_t NGramModel::count(const Context& context) const {
  if (context.size() >= tables_.size()) return 0;
  const auto& t = tables_[context.size()];
  auto it = t.find(context);
  return it == t.end() ? 0 : it->second.total;
}

std::string NGramModel::map_unit(std::string_view unit) const {
  if (unit.empty()) throw Error("empty unit");
  if (unit == kBos) throw Error("<s> is a context marker and cannot be predicted");
  if (std::binary_search(units_.begin(), units_.end(), unit)) return std::string(unit);
  return std::string(kUnk);
}

std::vector<std::string> NGramModel::units_of(const TaggedSentence& sentence) const {
  std::vector<std::string> out;
  out.reserve(sentence.size());
  for (const auto& t : sentence.tokens)
    out.push_back(map_unit(mode_ == UnitMode::word ? t.form : t.tag));
  return out;
}

NGramModel::Context NGramModel::tail_context(std::span<const std::string> context,
                                             std::size_t length) const {
  Context ctx(length, std::string(kBos));
  const std::size_t have = std::min(length, context.size());
  for (std::size_t i = 0; i < have; ++i) {
    const std::string& u = context[context.size() - have + i];
    ctx[length - have + i] = u == kBos ? u : map_unit(u);
  }
  return ctx;
}

double NGramModel::order_prob(std::size_t k, std::span<const std::string> context,
                              std::string_view target) const {
  if (k < 1 || k > order_) throw Error(fmt::format("order {} outside 1..{}", k, order_));
  const std::string t = map_unit(target);
  const Context ctx = tail_context(context, k - 1);
  const auto V = static_cast<double>(units_.size());
  const auto& table = tables_[k - 1];
  auto it = table.find(ctx);
  double num = alpha_;
  double den = alpha_ * V;
  if (it != table.end()) {
    den += static_cast<double>(it->second.total);
    auto jt = it->second.targets.find(t);
    if (jt != it->second.targets.end()) num += static_cast<double>(jt->second);
  }
  if (den <= 0.0) return 1.0 / V;
  return num / den;
}

double NGramModel::prob(std::span<const std::string> context, std::string_view target) const {
  double p = 0.0;
  for (std::size_t k = 1; k <= order_; ++k)
    if (lambda_[k - 1] > 0.0) p += lambda_[k - 1] * order_prob(k, context, target);
  return p;
}

std::vector<double> NGramModel::surprisal(const TaggedSentence& sentence, LogBase base) const {
  const auto units = units_of(sentence);
  std::vector<double> out;
  out.reserve(units.size());
  for (std::size_t i = 0; i < units.size(); ++i) {
    const double p = prob(std::span(units).first(i), units[i]);
    if (!(p > 0.0))
      throw Error(fmt::format("zero probability for '{}' at position {}", units[i], i));
    out.push_back(base.surprisal(p));
  }
  return out;
}

NGramModel train_ngram(const std::vector<TaggedSentence>& corpus, const NGramConfig& config,
                       const Vocabulary& vocab) {
  if (config.order < 1 || config.order > 5)
    throw Error(fmt::format("n-gram order must be in [1, 5], got {}", config.order));
  if (corpus.empty()) throw Error("cannot train an n-gram model on an empty corpus");
  if (!(config.alpha >= 0.0) || !std::isfinite(config.alpha))
    throw Error("additive constant must be finite and >= 0");

  NGramModel m;
  m.order_ = config.order;
  m.mode_ = config.mode;
  m.alpha_ = config.alpha;
  m.lambda_ = checked_lambda(config.lambda, config.order);
  m.padding_ = std::max<std::size_t>(2, config.order - 1);

  const auto& inventory = config.mode == UnitMode::word ? vocab.known_forms() : vocab.tags();
  m.units_.assign(inventory.begin(), inventory.end());
  m.units_.emplace_back(kUnk);
  m.units_.emplace_back(kEos);
  std::sort(m.units_.begin(), m.units_.end());
  m.units_.erase(std::unique(m.units_.begin(), m.units_.end()), m.units_.end());
  m.units_.erase(std::remove(m.units_.begin(), m.units_.end(), std::string(kBos)), m.units_.end());

  m.tables_.assign(config.order, {});
  for (const auto& s : corpus) {
    if (s.tokens.empty()) throw Error("corpus contains an empty sentence");
    std::vector<std::string> seq(m.padding_, std::string(kBos));
    for (auto& u : m.units_of(s)) seq.push_back(std::move(u));
    seq.emplace_back(kEos);
    for (std::size_t t = m.padding_; t < seq.size(); ++t) {
      for (std::size_t len = 0; len < config.order; ++len) {
        NGramModel::Context ctx(seq.begin() + static_cast<std::ptrdiff_t>(t - len),
                                seq.begin() + static_cast<std::ptrdiff_t>(t));
        auto& cc = m.tables_[len][ctx];
        ++cc.targets[seq[t]];
        ++cc.total;
      }
    }
  }
  return m;
}

// Text format:
//   surp-ngram 1
//   order <n>
//   mode word|pos
//   alpha <a>
//   lambda <l1> ... <ln>
//   padding <p>
//   units <V>            followed by V lines, one unit each
//   entries <E>          followed by E lines: <ctx-len> <ctx units...> <target> <count>
void NGramModel::save(std::ostream& out) const {
  out << "surp-ngram 1\n";
  out << "order " << order_ << '\n';
  out << "mode " << to_string(mode_) << '\n';
  out << "alpha " << fmt::format("{}", alpha_) << '\n';
  out << "lambda";
  for (double l : lambda_) out << ' ' << fmt::format("{}", l);
  out << '\n';
  out << "padding " << padding_ << '\n';
  out << "units " << units_.size() << '\n';
  for (const auto& u : units_) out << u << '\n';
  std::size_t entries = 0;
  for (const auto& table : tables_)
    for (const auto& [ctx, cc] : table) entries += cc.targets.size();
  out << "entries " << entries << '\n';
  for (std::size_t len = 0; len < tables_.size(); ++len)
    for (const auto& [ctx, cc] : tables_[len])
      for (const auto& [target, n] : cc.targets) {
        out << len;
        for (const auto& c : ctx) out << ' ' << c;
        out << ' ' << target << ' ' << n << '\n';
      }
}

NGramModel NGramModel::load(std::istream& in, const std::string& source) {
  std::size_t line_no = 0;
  std::string line;
  auto next = [&]() -> std::vector<std::string> {
    if (!std::getline(in, line)) throw ParseError(source, line_no, "unexpected end of model file");
    ++line_no;
    return split_ws(line);
  };
  auto expect = [&](const std::vector<std::string>& f, const char* key, std::size_t min_fields) {
    if (f.empty() || f[0] != key || f.size() < min_fields)
      throw ParseError(source, line_no, std::string("expected '") + key + "' line");
  };
  auto to_size = [&](const std::string& s) -> std::size_t {
    try {
      std::size_t used = 0;
      auto v = std::stoull(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ParseError(source, line_no, "expected a non-negative integer, got '" + s + "'");
    }
  };
  auto to_double = [&](const std::string& s) -> double {
    try {
      std::size_t used = 0;
      double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ParseError(source, line_no, "expected a number, got '" + s + "'");
    }
  };

  auto f = next();
  if (f.size() != 2 || f[0] != "surp-ngram" || f[1] != "1")
    throw ParseError(source, line_no, "not a surp-ngram version 1 file");
  NGramModel m;
  f = next();
  expect(f, "order", 2);
  m.order_ = to_size(f[1]);
  if (m.order_ < 1 || m.order_ > 5) throw ParseError(source, line_no, "order outside [1, 5]");
  f = next();
  expect(f, "mode", 2);
  m.mode_ = unit_mode_from_string(f[1]);
  f = next();
  expect(f, "alpha", 2);
  m.alpha_ = to_double(f[1]);
  f = next();
  expect(f, "lambda", 1);
  for (std::size_t i = 1; i < f.size(); ++i) m.lambda_.push_back(to_double(f[i]));
  try {
    m.lambda_ = checked_lambda(m.lambda_, m.order_);
  } catch (const Error& e) {
    throw ParseError(source, line_no, e.what());
  }
  f = next();
  expect(f, "padding", 2);
  m.padding_ = to_size(f[1]);
  f = next();
  expect(f, "units", 2);
  const std::size_t V = to_size(f[1]);
  for (std::size_t i = 0; i < V; ++i) {
    f = next();
    if (f.size() != 1) throw ParseError(source, line_no, "expected one unit per line");
    m.units_.push_back(f[0]);
  }
  if (!std::is_sorted(m.units_.begin(), m.units_.end()))
    throw ParseError(source, line_no, "unit list is not sorted");
  f = next();
  expect(f, "entries", 2);
  const std::size_t E = to_size(f[1]);
  m.tables_.assign(m.order_, {});
  for (std::size_t i = 0; i < E; ++i) {
    f = next();
    if (f.size() < 3) throw ParseError(source, line_no, "malformed count entry");
    const std::size_t len = to_size(f[0]);
    if (len >= m.order_ || f.size() != len + 3)
      throw ParseError(source, line_no, "count entry does not match its context length");
    NGramModel::Context ctx(f.begin() + 1, f.begin() + 1 + static_cast<std::ptrdiff_t>(len));
    const std::size_t n = to_size(f[len + 2]);
    auto& cc = m.tables_[len][ctx];
    cc.targets[f[len + 1]] += n;
    cc.total += n;
  }
  return m;
}

}  // namespace surp
