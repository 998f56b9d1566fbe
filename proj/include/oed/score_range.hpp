#pragma once

#include <string>

#include "oed/error.hpp"

namespace oed {

/// Inclusive integer label range; every integer in [min_score, max_score]
/// is a valid label.
struct ScoreRange {
  int min_score = 0;
  int max_score = 1;

  ScoreRange() = default;
  ScoreRange(int lo, int hi) : min_score(lo), max_score(hi) {
    if (lo >= hi) {
      throw ValidationError("score range requires min_score < max_score, got " +
                            std::to_string(lo) + "-" + std::to_string(hi));
    }
  }

  [[nodiscard]] bool contains(int score) const noexcept {
    return score >= min_score && score <= max_score;
  }

  friend bool operator==(const ScoreRange&, const ScoreRange&) = default;
};

}  // namespace oed
