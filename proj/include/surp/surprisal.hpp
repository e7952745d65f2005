#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "surp/error.hpp"

namespace surp {

// Logarithm base used to report surprisal. Base 2 gives bits.
class LogBase {
 public:
  constexpr LogBase() = default;
  explicit LogBase(double base) : base_(base) {
    if (!(base > 1.0) || !std::isfinite(base))
      throw Error("log base must be a finite number > 1, got " + std::to_string(base));
    inv_ln_ = 1.0 / std::log(base);
  }

  double base() const { return base_; }

  // -log_b(p); +inf for p == 0.
  double surprisal(double p) const {
    if (p <= 0.0) return std::numeric_limits<double>::infinity();
    return -std::log(p) * inv_ln_;
  }

  // Converts a natural-log quantity into this base.
  double from_nats(double nats) const { return nats * inv_ln_; }

 private:
  double base_ = 2.0;
  double inv_ln_ = 1.4426950408889634;  // 1 / ln 2
};

}  // namespace surp
