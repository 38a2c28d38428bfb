#include "fame/submission.hpp"

#include <algorithm>

#include "fame/error.hpp"
#include "fame/text.hpp"
#include "fame/zip.hpp"

namespace fame {

std::string config_name(const ConfigKey& key) {
  return key.language + "_" + std::string(to_string(key.condition));
}

BundleLayout BundleLayout::for_languages(std::string lang_a,
                                         std::string lang_b) {
  if (lang_a == lang_b)
    throw Error(ErrorKind::Config, "bundle layout needs two distinct languages");
  return BundleLayout{{std::move(lang_a), std::move(lang_b)}};
}

BundleLayout BundleLayout::for_split(const SplitSpec& split) {
  return for_languages(split.languages[0], split.languages[1]);
}

std::array<ConfigKey, 4> BundleLayout::configs() const {
  return {ConfigKey{languages[0], Condition::Heard},
          ConfigKey{languages[0], Condition::Unheard},
          ConfigKey{languages[1], Condition::Heard},
          ConfigKey{languages[1], Condition::Unheard}};
}

std::string BundleLayout::filename_for(std::string_view language,
                                       Condition condition) {
  return "sub_score_" + std::string(language) + "_" +
         std::string(to_string(condition)) + ".txt";
}

std::array<std::string, 4> BundleLayout::expected_filenames() const {
  std::array<std::string, 4> names;
  auto keys = configs();
  for (std::size_t i = 0; i < 4; ++i)
    names[i] = filename_for(keys[i].language, keys[i].condition);
  return names;
}

const ScoreFile& SubmissionBundle::at(const ConfigKey& key) const {
  for (const Entry& e : entries)
    if (e.key == key) return e.scores;
  throw Error(ErrorKind::State, "bundle has no entry " + config_name(key));
}

const std::set<PairId>& TrialIdSets::at(const ConfigKey& key) const {
  for (const Entry& e : entries)
    if (e.key == key) return e.ids;
  throw Error(ErrorKind::State, "no trial ids for " + config_name(key));
}

const ScoringKeys::Entry& ScoringKeys::at(const ConfigKey& key) const {
  for (const Entry& e : entries)
    if (e.key == key) return e;
  throw Error(ErrorKind::State, "no keys for " + config_name(key));
}

TrialIdSets ScoringKeys::id_sets() const {
  TrialIdSets sets;
  for (const Entry& e : entries) sets.entries.push_back({e.key, e.trial_ids});
  return sets;
}

void ScoringKeys::validate() const {
  if (entries.size() != 4)
    throw Error(ErrorKind::Arity, "scoring keys need exactly 4 configurations");
  for (const Entry& e : entries) {
    if (e.trial_ids.empty())
      throw Error(ErrorKind::Config,
                  "empty trial id set for " + config_name(e.key));
    bool has_match = false, has_nonmatch = false;
    for (const auto& [id, label] : e.truth.labels)
      (label == Label::Match ? has_match : has_nonmatch) = true;
    if (!has_match || !has_nonmatch)
      throw Error(ErrorKind::DegenerateLabels,
                  "keys for " + config_name(e.key) +
                      " need both match and non-match labels");
  }
}

ScoringKeys make_scoring_keys(
    const BundleLayout& layout,
    const std::array<std::pair<TrialList, GroundTruth>, 2>& per_language) {
  ScoringKeys keys;
  for (const ConfigKey& key : layout.configs()) {
    std::size_t lang_index = key.language == layout.languages[0] ? 0 : 1;
    const auto& [list, truth] = per_language[lang_index];
    ScoringKeys::Entry entry;
    entry.key = key;
    for (const TrialPair& pair : list.pairs) entry.trial_ids.insert(pair.id);
    entry.truth = truth;
    keys.entries.push_back(std::move(entry));
  }
  keys.validate();
  return keys;
}

namespace {

// Bundle files may sit at the archive root or exactly one directory deep.
std::string normalized_name(const std::string& stored) {
  std::size_t slash = stored.find('/');
  if (slash == std::string::npos) return stored;
  std::string rest = stored.substr(slash + 1);
  if (rest.find('/') != std::string::npos) return stored;  // deeper: keep as-is
  return rest;
}

}  // namespace

SubmissionBundle open_bundle(std::span<const std::uint8_t> archive,
                             const BundleLayout& layout,
                             std::vector<std::string>* warnings) {
  std::vector<ZipEntry> entries = zip_extract(archive);

  auto expected = layout.expected_filenames();
  std::array<const ZipEntry*, 4> found{};
  for (const ZipEntry& entry : entries) {
    std::string name = normalized_name(entry.name);
    auto it = std::find(expected.begin(), expected.end(), name);
    if (it == expected.end()) {
      if (warnings)
        warnings->push_back("unexpected file ignored: " + entry.name);
      continue;
    }
    std::size_t slot = static_cast<std::size_t>(it - expected.begin());
    if (found[slot])
      throw Error(ErrorKind::Archive,
                  "file " + name + " appears more than once in the archive",
                  name);
    found[slot] = &entry;
  }

  std::vector<std::string> missing;
  for (std::size_t i = 0; i < 4; ++i)
    if (!found[i]) missing.push_back(expected[i]);
  if (!missing.empty()) {
    std::string msg = "missing submission file(s):";
    for (const std::string& name : missing) msg += " " + name;
    throw Error(ErrorKind::Archive, msg, missing.front());
  }

  SubmissionBundle bundle;
  auto keys = layout.configs();
  for (std::size_t i = 0; i < 4; ++i) {
    std::string_view text(reinterpret_cast<const char*>(found[i]->data.data()),
                          found[i]->data.size());
    try {
      bundle.entries.push_back({keys[i], parse_scores(text)});
    } catch (const Error& e) {
      throw Error(e.kind(), expected[i] + ": " + e.what(), e.token(),
                  e.line());
    }
  }
  return bundle;
}

namespace {

// Ids required by the keys but absent from the scores, and the count of
// scored ids outside the trial set.
struct CoverageCheck {
  std::vector<PairId> missing;
  std::size_t extra = 0;
};

CoverageCheck check_coverage(const ScoreFile& scores,
                             const std::set<PairId>& required) {
  CoverageCheck result;
  for (const PairId& id : required)
    if (!scores.scores.contains(id)) result.missing.push_back(id);
  for (const auto& [id, value] : scores.scores)
    if (!required.contains(id)) ++result.extra;
  return result;
}

}  // namespace

BundleReport score_bundle(const SubmissionBundle& bundle,
                          const ScoringKeys& keys) {
  keys.validate();
  BundleReport report;
  std::array<double, 4> eers;
  std::size_t i = 0;
  for (const ScoringKeys::Entry& entry : keys.entries) {
    const ScoreFile& scores = bundle.at(entry.key);
    CoverageCheck cov = check_coverage(scores, entry.trial_ids);
    if (!cov.missing.empty())
      throw Error(ErrorKind::Coverage,
                  config_name(entry.key) + ": no score for pair id '" +
                      cov.missing.front().value + "'",
                  cov.missing.front().value);
    if (cov.extra > 0)
      report.warnings.push_back(config_name(entry.key) + ": " +
                                std::to_string(cov.extra) +
                                " scored id(s) outside the trial set ignored");
    EerResult eer = compute_eer(scores, entry.truth);
    eers[i++] = eer.eer;
    report.configs.push_back({entry.key, eer});
  }
  report.overall = overall_score(eers);
  return report;
}

ValidationReport validate_bundle(std::span<const std::uint8_t> archive,
                                 const BundleLayout& layout,
                                 const TrialIdSets& ids) {
  ValidationReport report;
  SubmissionBundle bundle;
  try {
    bundle = open_bundle(archive, layout, &report.warnings);
  } catch (const Error& e) {
    report.ok = false;
    report.errors.push_back(e.what());
    return report;
  }
  for (const TrialIdSets::Entry& entry : ids.entries) {
    const ScoreFile& scores = bundle.at(entry.key);
    CoverageCheck cov = check_coverage(scores, entry.ids);
    for (const PairId& id : cov.missing)
      report.errors.push_back(config_name(entry.key) +
                              ": missing score for pair id '" + id.value +
                              "'");
    if (cov.extra > 0)
      report.warnings.push_back(config_name(entry.key) + ": " +
                                std::to_string(cov.extra) +
                                " scored id(s) outside the trial set ignored");
  }
  report.ok = report.errors.empty();
  return report;
}

std::string format_report(const BundleReport& report) {
  std::string out;
  for (const ConfigScore& c : report.configs) {
    out += "configuration " + config_name(c.key);
    out += " eer " + format_percent_4dp(c.eer.eer);
    out += " eer_display " + format_percent_display(c.eer.eer);
    out += " threshold " + format_double(c.eer.threshold);
    out += '\n';
  }
  out += "overall " + format_double(report.overall);
  out += " overall_display " + format_percent_display(report.overall);
  out += '\n';
  out += "warnings " + std::to_string(report.warnings.size()) + '\n';
  for (const std::string& w : report.warnings) out += "warning " + w + '\n';
  return out;
}

}  // namespace fame
