#include "fame/trial_data.hpp"

#include <algorithm>
#include <set>

#include "fame/error.hpp"
#include "fame/text.hpp"

namespace fame {

PairId make_pair_id(std::string_view token, int line) {
  if (token.empty())
    throw Error(ErrorKind::Format, "empty pair id", line);
  if (contains_whitespace(token))
    throw Error(ErrorKind::Format,
                "pair id contains whitespace: '" + std::string(token) + "'",
                std::string(token), line);
  return PairId{std::string(token)};
}

std::string_view to_string(Condition condition) {
  return condition == Condition::Heard ? "heard" : "unheard";
}

Condition condition_from_string(std::string_view name) {
  if (name == "heard") return Condition::Heard;
  if (name == "unheard") return Condition::Unheard;
  throw Error(ErrorKind::Config,
              "unknown condition '" + std::string(name) + "'");
}

void SplitSpec::validate() const {
  if (n_train_speakers <= 0 || n_test_speakers <= 0)
    throw Error(ErrorKind::Config,
                "split " + name + ": speaker counts must be positive");
  if (languages[0] == languages[1])
    throw Error(ErrorKind::Config,
                "split " + name + ": the two languages must differ");
}

SplitSpec split_preset(std::string_view name) {
  if (name == "V1-EU") return {"V1-EU", {"English", "Urdu"}, 64, 6};
  if (name == "V3-EG") return {"V3-EG", {"English", "German"}, 50, 8};
  throw Error(ErrorKind::Config,
              "unknown split preset '" + std::string(name) + "'");
}

TrialList parse_trial_list(std::string_view text, std::string language,
                           Condition condition) {
  TrialList list;
  list.language = std::move(language);
  list.condition = condition;
  std::set<PairId> seen;
  for (const TextLine& line : split_lines(text)) {
    if (is_skippable(line.text)) continue;
    auto fields = split_fields(line.text);
    if (fields.size() != 3)
      throw Error(ErrorKind::Format,
                  "trial line " + std::to_string(line.number) + ": expected "
                  "3 fields, got " + std::to_string(fields.size()),
                  line.number);
    TrialPair pair;
    pair.id = make_pair_id(fields[0], line.number);
    pair.voice_path = std::string(fields[1]);
    pair.face_path = std::string(fields[2]);
    if (!seen.insert(pair.id).second)
      throw Error(ErrorKind::Duplication,
                  "duplicate pair id '" + pair.id.value + "' at line " +
                      std::to_string(line.number),
                  pair.id.value, line.number);
    list.pairs.push_back(std::move(pair));
  }
  return list;
}

GroundTruth parse_ground_truth(std::string_view text) {
  GroundTruth truth;
  for (const TextLine& line : split_lines(text)) {
    if (is_skippable(line.text)) continue;
    auto fields = split_fields(line.text);
    if (fields.size() != 2)
      throw Error(ErrorKind::Format,
                  "ground-truth line " + std::to_string(line.number) +
                      ": expected 2 fields, got " +
                      std::to_string(fields.size()),
                  line.number);
    PairId id = make_pair_id(fields[0], line.number);
    Label label;
    if (fields[1] == "0")
      label = Label::NonMatch;
    else if (fields[1] == "1")
      label = Label::Match;
    else
      throw Error(ErrorKind::Label,
                  "ground-truth line " + std::to_string(line.number) +
                      ": label must be 0 or 1, got '" + std::string(fields[1]) +
                      "'",
                  line.number);
    if (!truth.labels.emplace(id, label).second)
      throw Error(ErrorKind::Duplication,
                  "duplicate pair id '" + id.value + "' at line " +
                      std::to_string(line.number),
                  id.value, line.number);
  }
  return truth;
}

std::string serialize(const TrialList& list) {
  std::string out;
  for (const TrialPair& pair : list.pairs) {
    out += pair.id.value;
    out += ' ';
    out += pair.voice_path;
    out += ' ';
    out += pair.face_path;
    out += '\n';
  }
  return out;
}

std::string serialize(const GroundTruth& truth) {
  std::string out;
  for (const auto& [id, label] : truth.labels) {
    out += id.value;
    out += label == Label::Match ? " 1\n" : " 0\n";
  }
  return out;
}

AlignmentReport check_alignment(const TrialList& list,
                                const GroundTruth& truth) {
  AlignmentReport report;
  std::set<PairId> list_ids;
  for (const TrialPair& pair : list.pairs) list_ids.insert(pair.id);
  for (const PairId& id : list_ids)
    if (!truth.labels.contains(id)) report.missing_in_truth.push_back(id);
  for (const auto& [id, label] : truth.labels)
    if (!list_ids.contains(id)) report.extra_in_truth.push_back(id);
  return report;
}

}  // namespace fame
