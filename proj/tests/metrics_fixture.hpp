#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "amanda/metrics.hpp"

namespace amanda::testing {

struct MetricCase {
  std::string prediction;
  std::vector<std::string> golds;
  std::string question_type;
  int em;
  double f1;
};

// Values worked out by hand: F1 = 2pr / (p + r) on normalized token multisets.
inline const std::vector<MetricCase>& metric_cases() {
  static const std::vector<MetricCase> cases = {
      {"Robert Park", {"Robert Park"}, "who", 1, 1.0},
      {"Park", {"Robert Park"}, "who", 0, 2.0 / 3.0},  // p = 1, r = 1/2
      {"the iCloud service", {"iCloud service"}, "what", 1, 1.0},
      {"apple", {"banana"}, "what", 0, 0.0},
      {"Robert Park.", {"robert park"}, "who", 1, 1.0},
      {"x y z w", {"x y"}, "what", 0, 2.0 / 3.0},  // p = 1/2, r = 1
      {"Seoul", {"Pyongyang", "Seoul South Korea capital"}, "where", 0, 0.4},  // best gold: p = 1, r = 1/4
      {"park park", {"park"}, "who", 0, 2.0 / 3.0},  // only one "park" overlaps
      {"", {""}, "when", 1, 1.0},
      {"", {"Park"}, "who", 0, 0.0},
  };
  return cases;
}

inline std::vector<ScoredItem> metric_items() {
  std::vector<ScoredItem> items;
  for (const auto& c : metric_cases()) {
    items.push_back({c.prediction, std::max<std::size_t>(1, normalized_tokens(c.prediction).size()), c.golds,
                     c.question_type});
  }
  return items;
}

// Report over the ten cases:
//   overall EM 4/10, F1 6.4/10
//   single-token golds (cases 4, 7, 8, 9, 10): EM 1/5
//   multi-token golds (cases 1, 2, 3, 5, 6): F1 (13/3)/5
inline constexpr double kFixtureEm = 40.0;
inline constexpr double kFixtureF1 = 64.0;
inline constexpr double kFixtureUnigram = 20.0;
inline constexpr double kFixtureNgram = 100.0 * 13.0 / 15.0;

}  // namespace amanda::testing
