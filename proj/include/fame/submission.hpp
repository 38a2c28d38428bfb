#pragma once

#include <array>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "fame/metrics.hpp"
#include "fame/trial_data.hpp"

namespace fame {

// The four (language, condition) scoring configurations of a language
// pair, in fixed report order: A heard, A unheard, B heard, B unheard.
struct ConfigKey {
  std::string language;
  Condition condition;

  bool operator==(const ConfigKey&) const = default;
};

std::string config_name(const ConfigKey& key);  // e.g. "English_heard"

// Expected filenames of a submission bundle,
// sub_score_<Language>_<heard|unheard>.txt.
struct BundleLayout {
  std::array<std::string, 2> languages;

  static BundleLayout for_languages(std::string lang_a, std::string lang_b);
  static BundleLayout for_split(const SplitSpec& split);

  std::array<ConfigKey, 4> configs() const;
  std::array<std::string, 4> expected_filenames() const;
  static std::string filename_for(std::string_view language,
                                  Condition condition);
};

// The four parsed score files of one submission.
struct SubmissionBundle {
  struct Entry {
    ConfigKey key;
    ScoreFile scores;
  };
  std::vector<Entry> entries;  // layout order

  const ScoreFile& at(const ConfigKey& key) const;
};

// Trial id sets per configuration, with no ground-truth labels attached.
// Validation runs against this view only.
struct TrialIdSets {
  struct Entry {
    ConfigKey key;
    std::set<PairId> ids;
  };
  std::vector<Entry> entries;  // layout order

  const std::set<PairId>& at(const ConfigKey& key) const;
};

// Server-side scoring keys: trial ids plus labels per configuration.
struct ScoringKeys {
  struct Entry {
    ConfigKey key;
    std::set<PairId> trial_ids;
    GroundTruth truth;
  };
  std::vector<Entry> entries;  // layout order

  const Entry& at(const ConfigKey& key) const;
  TrialIdSets id_sets() const;
  void validate() const;
};

// Builds 4-configuration keys from one (trials, truth) pair per language;
// heard and unheard share the language's trial set.
ScoringKeys make_scoring_keys(
    const BundleLayout& layout,
    const std::array<std::pair<TrialList, GroundTruth>, 2>& per_language);

// Reads the four expected files from the archive; files may live at the
// top level or exactly one directory deep. Missing files raise an archive
// error naming every absent filename; unexpected files only add warnings.
SubmissionBundle open_bundle(std::span<const std::uint8_t> archive,
                             const BundleLayout& layout,
                             std::vector<std::string>* warnings = nullptr);

struct ConfigScore {
  ConfigKey key;
  EerResult eer;
};

struct BundleReport {
  std::vector<ConfigScore> configs;  // 4, layout order
  double overall;
  std::vector<std::string> warnings;
};

// Scores the four configurations independently; overall is their mean.
// Every key id must be covered by the corresponding score file.
BundleReport score_bundle(const SubmissionBundle& bundle,
                          const ScoringKeys& keys);

struct ValidationReport {
  bool ok;
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
};

// open_bundle plus id-coverage checks. Never sees ground-truth labels.
ValidationReport validate_bundle(std::span<const std::uint8_t> archive,
                                 const BundleLayout& layout,
                                 const TrialIdSets& ids);

// Structured text form of a report: one key-value record per line.
std::string format_report(const BundleReport& report);

}  // namespace fame
