#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "fame/trial_data.hpp"

namespace fame {

// Per-pair confidence scores; higher means more confident the face and
// voice belong to the same person. Values are unbounded but finite.
struct ScoreFile {
  std::map<PairId, double> scores;

  bool operator==(const ScoreFile&) const = default;
};

// Score lines are `<pair_id> <real>`.
ScoreFile parse_scores(std::string_view text);
std::string serialize(const ScoreFile& scores);

struct DetPoint {
  double threshold;
  double far;  // false acceptance rate, fraction in [0,1]
  double frr;  // false rejection rate, fraction in [0,1]
};

// FAR/FRR evaluated at every distinct score plus one sentinel above the
// maximum. A pair is accepted at threshold t iff its score >= t, so the
// first point has far=1 and the sentinel has frr=1.
struct DetCurve {
  std::vector<DetPoint> points;
};

struct EerResult {
  double eer;        // percent in [0, 100]
  double threshold;  // operating point where FAR = FRR under interpolation
};

DetCurve compute_det(const ScoreFile& scores, const GroundTruth& truth);

// Equal error rate: the FAR=FRR crossing of the DET curve. Between
// evaluated thresholds FAR and FRR are linearly interpolated.
EerResult compute_eer(const ScoreFile& scores, const GroundTruth& truth);

// The 2x2 heard/unheard EER grid for one language pair: entries keyed by
// (train language, test language).
struct GridEntry {
  std::string train_language;
  std::string test_language;
  EerResult result;
};

struct ConfigurationGrid {
  std::array<std::string, 2> languages;
  std::vector<GridEntry> entries;  // exactly 4 for a valid grid

  const EerResult& at(std::string_view train_language,
                      std::string_view test_language) const;
};

// Mean of exactly four EER percentages, unrounded. Summation happens in
// sorted order so the result is invariant under permutation of the inputs.
double overall_score(std::span<const double> eers);
double overall_score(const ConfigurationGrid& grid);

// Display helpers: challenge tables show one decimal, reports carry four.
std::string format_percent_display(double percent);
std::string format_percent_4dp(double percent);

}  // namespace fame
