#pragma once

#include <array>
#include <compare>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace fame {

// Id of one face-voice trial pair. Any non-empty whitespace-free token is
// accepted; the challenge lists use 8-char lowercase alphanumerics.
struct PairId {
  std::string value;

  auto operator<=>(const PairId&) const = default;
};

// Throws ErrorKind::Format when the token is empty or holds whitespace.
PairId make_pair_id(std::string_view token, int line = 0);

enum class Condition { Heard, Unheard };

std::string_view to_string(Condition condition);
Condition condition_from_string(std::string_view name);

struct TrialPair {
  PairId id;
  std::string voice_path;
  std::string face_path;

  bool operator==(const TrialPair&) const = default;
};

struct TrialList {
  std::string language;
  Condition condition = Condition::Heard;
  std::vector<TrialPair> pairs;

  bool operator==(const TrialList&) const = default;
};

enum class Label : int { NonMatch = 0, Match = 1 };

struct GroundTruth {
  std::map<PairId, Label> labels;

  bool operator==(const GroundTruth&) const = default;
};

// Name and geometry of a dataset split, e.g. V3-EG with a 50-8 train-test
// speaker split over English-German.
struct SplitSpec {
  std::string name;
  std::array<std::string, 2> languages;
  int n_train_speakers = 0;
  int n_test_speakers = 0;

  void validate() const;
};

// Known challenge splits: "V1-EU" (English-Urdu, 64-6) and "V3-EG"
// (English-German, 50-8).
SplitSpec split_preset(std::string_view name);

// Trial-list lines are `<pair_id> <voice_path> <face_path>`. Blank lines
// and '#' comments are skipped; error line numbers count physical lines.
TrialList parse_trial_list(std::string_view text, std::string language,
                           Condition condition);

// Ground-truth lines are `<pair_id> <0|1>`.
GroundTruth parse_ground_truth(std::string_view text);

// Single-space separated, one record per line, newline-terminated.
std::string serialize(const TrialList& list);
std::string serialize(const GroundTruth& truth);

// Ids on one side of a (trial list, ground truth) pairing but not the other.
struct AlignmentReport {
  std::vector<PairId> missing_in_truth;  // in the list, absent from truth
  std::vector<PairId> extra_in_truth;    // in truth, absent from the list

  bool empty() const {
    return missing_in_truth.empty() && extra_in_truth.empty();
  }
};

AlignmentReport check_alignment(const TrialList& list,
                                const GroundTruth& truth);

}  // namespace fame
