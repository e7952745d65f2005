#pragma once

// Interpolated n-gram models over surface forms or POS categories.
//
// Each order k contributes an additive-smoothed relative frequency
//   p_k(t | h) = (count(h, t) + alpha) / (count(h) + alpha * V)
// over the last k-1 units of the context, and the model returns the fixed
// linear mixture sum_k lambda_k * p_k. With alpha = 0 and all weight on the
// highest order this is the plain count ratio count(h, t) / count(h); an
// unseen context then falls back to the uniform distribution.

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "surp/corpus.hpp"
#include "surp/surprisal.hpp"

namespace surp {

enum class UnitMode { word, pos };

std::string to_string(UnitMode mode);
UnitMode unit_mode_from_string(std::string_view text);

struct NGramConfig {
  std::size_t order = 3;
  UnitMode mode = UnitMode::word;
  double alpha = 0.1;
  // lambda[k] weights the order-(k+1) estimate. Empty means uniform.
  std::vector<double> lambda;
};

struct ContextCounts {
  std::map<std::string, std::size_t> targets;
  std::size_t total = 0;

  bool operator==(const ContextCounts&) const = default;
};

class NGramModel {
 public:
  using Context = std::vector<std::string>;

  std::size_t order() const { return order_; }
  UnitMode mode() const { return mode_; }
  double alpha() const { return alpha_; }
  const std::vector<double>& lambda() const { return lambda_; }
  // Number of <s> markers prepended to every sentence.
  std::size_t padding() const { return padding_; }
  // Predictable units: known forms (or tags), <unk> and </s>, sorted.
  const std::vector<std::string>& units() const { return units_; }
  std::size_t vocab_size() const { return units_.size(); }

  // Count table for contexts of the given length (0 .. order-1).
  const std::map<Context, ContextCounts>& table(std::size_t context_length) const {
    return tables_.at(context_length);
  }
  std::size_t count(const Context& context, std::string_view target) const;
  std::size_t count(const Context& context) const;

  // Maps a raw unit onto the model inventory (<unk> for unknown units).
  std::string map_unit(std::string_view unit) const;
  // Units of a sentence in this model's mode, mapped, without boundaries.
  std::vector<std::string> units_of(const TaggedSentence& sentence) const;

  // Probability of `target` after `context` (raw units; mapped internally).
  // Only the last order-1 units are used; shorter contexts are padded with <s>.
  double prob(std::span<const std::string> context, std::string_view target) const;
  // Smoothed estimate of a single order (1-based).
  double order_prob(std::size_t k, std::span<const std::string> context,
                    std::string_view target) const;

  std::vector<double> surprisal(const TaggedSentence& sentence, LogBase base = {}) const;

  void save(std::ostream& out) const;
  static NGramModel load(std::istream& in, const std::string& source = "<stream>");

  bool operator==(const NGramModel&) const = default;

 private:
  friend NGramModel train_ngram(const std::vector<TaggedSentence>&, const NGramConfig&,
                                const Vocabulary&);

  Context tail_context(std::span<const std::string> context, std::size_t length) const;

  std::size_t order_ = 1;
  UnitMode mode_ = UnitMode::word;
  double alpha_ = 0.1;
  std::vector<double> lambda_;
  std::size_t padding_ = 2;
  std::vector<std::string> units_;
  std::vector<std::map<Context, ContextCounts>> tables_;
};

NGramModel train_ngram(const std::vector<TaggedSentence>& corpus, const NGramConfig& config,
                       const Vocabulary& vocab);

}  // namespace surp
