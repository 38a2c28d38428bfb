#include "fame/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "fame/error.hpp"
#include "fame/text.hpp"

namespace fame {

ScoreFile parse_scores(std::string_view text) {
  ScoreFile file;
  for (const TextLine& line : split_lines(text)) {
    if (is_skippable(line.text)) continue;
    auto fields = split_fields(line.text);
    if (fields.size() != 2)
      throw Error(ErrorKind::Format,
                  "score line " + std::to_string(line.number) +
                      ": expected 2 fields, got " +
                      std::to_string(fields.size()),
                  line.number);
    PairId id = make_pair_id(fields[0], line.number);
    double value;
    if (!parse_double(fields[1], value) || !std::isfinite(value))
      throw Error(ErrorKind::Format,
                  "score line " + std::to_string(line.number) +
                      ": '" + std::string(fields[1]) +
                      "' is not a finite real",
                  line.number);
    if (!file.scores.emplace(id, value).second)
      throw Error(ErrorKind::Duplication,
                  "duplicate pair id '" + id.value + "' at line " +
                      std::to_string(line.number),
                  id.value, line.number);
  }
  return file;
}

std::string serialize(const ScoreFile& file) {
  std::string out;
  for (const auto& [id, value] : file.scores) {
    out += id.value;
    out += ' ';
    out += format_double(value);
    out += '\n';
  }
  return out;
}

namespace {

// Scores of the truth's pairs split by label. Ids present in the score
// file but not in the truth are ignored here; callers that care count
// them separately.
struct LabeledScores {
  std::vector<double> match;
  std::vector<double> nonmatch;
};

LabeledScores split_by_label(const ScoreFile& scores,
                             const GroundTruth& truth) {
  LabeledScores out;
  for (const auto& [id, label] : truth.labels) {
    auto it = scores.scores.find(id);
    if (it == scores.scores.end())
      throw Error(ErrorKind::Coverage, "no score for pair id '" + id.value +
                                           "'",
                  id.value);
    (label == Label::Match ? out.match : out.nonmatch).push_back(it->second);
  }
  if (out.match.empty() || out.nonmatch.empty())
    throw Error(ErrorKind::DegenerateLabels,
                "ground truth needs at least one match and one non-match");
  return out;
}

double sentinel_above(double max_score) {
  double step = std::max(1.0, std::abs(max_score) * 0x1.0p-20);
  double s = max_score + step;
  if (s <= max_score)  // huge magnitudes where the step is absorbed
    s = std::nextafter(max_score,
                       std::numeric_limits<double>::infinity());
  return s;
}

}  // namespace

DetCurve compute_det(const ScoreFile& scores, const GroundTruth& truth) {
  LabeledScores labeled = split_by_label(scores, truth);
  std::vector<double> match = labeled.match;
  std::vector<double> nonmatch = labeled.nonmatch;
  std::sort(match.begin(), match.end());
  std::sort(nonmatch.begin(), nonmatch.end());

  std::vector<double> thresholds;
  thresholds.reserve(match.size() + nonmatch.size() + 1);
  thresholds.insert(thresholds.end(), match.begin(), match.end());
  thresholds.insert(thresholds.end(), nonmatch.begin(), nonmatch.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());
  thresholds.push_back(sentinel_above(thresholds.back()));

  const double n_match = static_cast<double>(match.size());
  const double n_nonmatch = static_cast<double>(nonmatch.size());

  DetCurve curve;
  curve.points.reserve(thresholds.size());
  for (double t : thresholds) {
    // accepted iff score >= t
    auto nm_below = std::lower_bound(nonmatch.begin(), nonmatch.end(), t);
    double far =
        static_cast<double>(nonmatch.end() - nm_below) / n_nonmatch;
    auto m_below = std::lower_bound(match.begin(), match.end(), t);
    double frr = static_cast<double>(m_below - match.begin()) / n_match;
    curve.points.push_back({t, far, frr});
  }
  return curve;
}

EerResult compute_eer(const ScoreFile& scores, const GroundTruth& truth) {
  DetCurve curve = compute_det(scores, truth);
  const auto& pts = curve.points;

  // FAR - FRR is non-increasing, from +1 at the first point to -1 at the
  // sentinel. Take the first exact zero, otherwise interpolate across the
  // sign change.
  for (const DetPoint& p : pts) {
    double d = p.far - p.frr;
    if (d == 0.0) return {100.0 * p.far, p.threshold};
    if (d < 0.0) break;
  }
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    double d0 = pts[i].far - pts[i].frr;
    double d1 = pts[i + 1].far - pts[i + 1].frr;
    if (d0 > 0.0 && d1 < 0.0) {
      double alpha = d0 / (d0 - d1);
      double eer = pts[i].far + alpha * (pts[i + 1].far - pts[i].far);
      double threshold =
          pts[i].threshold +
          alpha * (pts[i + 1].threshold - pts[i].threshold);
      return {100.0 * eer, threshold};
    }
  }
  throw Error(ErrorKind::State, "DET curve has no FAR/FRR crossing");
}

const EerResult& ConfigurationGrid::at(std::string_view train_language,
                                       std::string_view test_language) const {
  for (const GridEntry& e : entries)
    if (e.train_language == train_language &&
        e.test_language == test_language)
      return e.result;
  throw Error(ErrorKind::Arity,
              "grid has no entry (" + std::string(train_language) + ", " +
                  std::string(test_language) + ")");
}

double overall_score(std::span<const double> eers) {
  if (eers.size() != 4)
    throw Error(ErrorKind::Arity, "overall score needs exactly 4 EERs, got " +
                                      std::to_string(eers.size()));
  std::array<double, 4> sorted;
  std::copy(eers.begin(), eers.end(), sorted.begin());
  std::sort(sorted.begin(), sorted.end());
  return (sorted[0] + sorted[1] + sorted[2] + sorted[3]) / 4.0;
}

double overall_score(const ConfigurationGrid& grid) {
  if (grid.entries.size() != 4)
    throw Error(ErrorKind::Arity,
                "grid holds " + std::to_string(grid.entries.size()) +
                    " entries, expected 4");
  std::array<double, 4> eers;
  for (std::size_t i = 0; i < 4; ++i) eers[i] = grid.entries[i].result.eer;
  return overall_score(eers);
}

std::string format_percent_display(double percent) {
  return format_fixed(percent, 1);
}

std::string format_percent_4dp(double percent) {
  return format_fixed(percent, 4);
}

}  // namespace fame
