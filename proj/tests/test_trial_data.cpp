#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fame/error.hpp"
#include "fame/rng.hpp"
#include "fame/trial_data.hpp"

using namespace fame;

TEST_CASE("trial list parses the challenge line format") {
  const char* text =
      "ysuvkz41 voices/English/00000.wav faces/English/00000.jpg\n"
      "tog3zj45 voices/English/00001.wav faces/English/00001.jpg\n";
  TrialList list = parse_trial_list(text, "English", Condition::Heard);
  REQUIRE(list.pairs.size() == 2);
  CHECK(list.pairs[0].id.value == "ysuvkz41");
  CHECK(list.pairs[0].voice_path == "voices/English/00000.wav");
  CHECK(list.pairs[0].face_path == "faces/English/00000.jpg");
  CHECK(list.language == "English");
  CHECK(list.condition == Condition::Heard);
}

TEST_CASE("empty text gives an empty trial list") {
  TrialList list = parse_trial_list("", "Urdu", Condition::Unheard);
  CHECK(list.pairs.empty());
  CHECK(parse_ground_truth("").labels.empty());
}

TEST_CASE("duplicate trial id is rejected with the id") {
  const char* text =
      "tog3zj45 voices/a.wav faces/a.jpg\n"
      "tog3zj45 voices/b.wav faces/b.jpg\n";
  try {
    parse_trial_list(text, "English", Condition::Heard);
    FAIL("expected duplication error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Duplication);
    CHECK(e.token() == "tog3zj45");
    CHECK(e.line() == 2);
  }
}

TEST_CASE("field-count errors carry the physical line number") {
  const char* text =
      "# comment line\n"
      "\n"
      "ok1 voices/a.wav faces/a.jpg\n"
      "broken voices/b.wav\n";
  try {
    parse_trial_list(text, "English", Condition::Heard);
    FAIL("expected format error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Format);
    CHECK(e.line() == 4);
  }
}

TEST_CASE("whitespace runs separate fields; BOM and CRLF are tolerated") {
  std::string text = "\xEF\xBB\xBFid1\t voices/a.wav \t faces/a.jpg\r\n";
  TrialList list = parse_trial_list(text, "English", Condition::Heard);
  REQUIRE(list.pairs.size() == 1);
  CHECK(list.pairs[0].id.value == "id1");
}

TEST_CASE("ground truth parses 0/1 labels and rejects anything else") {
  GroundTruth truth = parse_ground_truth("ysuvkz41 1\nother00 0\n");
  CHECK(truth.labels.at(PairId{"ysuvkz41"}) == Label::Match);
  CHECK(truth.labels.at(PairId{"other00"}) == Label::NonMatch);

  try {
    parse_ground_truth("ysuvkz41 2\n");
    FAIL("expected label error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Label);
    CHECK(e.line() == 1);
  }
}

TEST_CASE("split presets match the challenge geometry") {
  SplitSpec v1 = split_preset("V1-EU");
  CHECK(v1.languages == std::array<std::string, 2>{"English", "Urdu"});
  CHECK(v1.n_train_speakers == 64);
  CHECK(v1.n_test_speakers == 6);
  SplitSpec v3 = split_preset("V3-EG");
  CHECK(v3.languages == std::array<std::string, 2>{"English", "German"});
  CHECK(v3.n_train_speakers == 50);
  CHECK(v3.n_test_speakers == 8);
  v1.validate();
  v3.validate();
  CHECK_THROWS_AS(split_preset("V2-EH"), Error);
}

TEST_CASE("alignment report is the two-sided set difference") {
  TrialList list = parse_trial_list("a v f\nb v f\n", "L", Condition::Heard);
  GroundTruth both = parse_ground_truth("a 1\nb 0\n");
  CHECK(check_alignment(list, both).empty());

  GroundTruth only_a = parse_ground_truth("a 1\n");
  AlignmentReport r1 = check_alignment(list, only_a);
  REQUIRE(r1.missing_in_truth.size() == 1);
  CHECK(r1.missing_in_truth[0].value == "b");
  CHECK(r1.extra_in_truth.empty());

  TrialList empty_list = parse_trial_list("", "L", Condition::Heard);
  AlignmentReport r2 = check_alignment(empty_list, only_a);
  CHECK(r2.missing_in_truth.empty());
  REQUIRE(r2.extra_in_truth.size() == 1);
  CHECK(r2.extra_in_truth[0].value == "a");
}

namespace {

// Random whitespace-free token for property runs.
std::string random_token(Rng& rng) {
  return rng.token(1 + rng.below(12));
}

TrialList random_list(Rng& rng) {
  TrialList list;
  list.language = "English";
  list.condition = rng.below(2) ? Condition::Heard : Condition::Unheard;
  std::set<std::string> ids;
  std::size_t n = rng.below(20);
  while (list.pairs.size() < n) {
    std::string id = random_token(rng);
    if (!ids.insert(id).second) continue;
    list.pairs.push_back(TrialPair{PairId{id},
                                   "voices/" + random_token(rng) + ".wav",
                                   "faces/" + random_token(rng) + ".jpg"});
  }
  return list;
}

}  // namespace

TEST_CASE("property: serialize/parse round-trips any valid list") {
  Rng rng(2026);
  for (int round = 0; round < 200; ++round) {
    TrialList list = random_list(rng);
    std::string text = serialize(list);
    TrialList reparsed = parse_trial_list(text, list.language, list.condition);
    CHECK(reparsed == list);
    CHECK(serialize(reparsed) == text);
  }
}

TEST_CASE("property: a malformed line is reported at its exact position") {
  Rng rng(99);
  for (int round = 0; round < 100; ++round) {
    TrialList list = random_list(rng);
    std::string good = serialize(list);
    // Inject a bad line at a random physical position.
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < good.size()) {
      std::size_t nl = good.find('\n', start);
      lines.push_back(good.substr(start, nl - start));
      start = nl + 1;
    }
    std::size_t at = rng.below(lines.size() + 1);
    lines.insert(lines.begin() + at, "only two fields");
    std::string bad;
    for (const std::string& line : lines) bad += line + "\n";
    try {
      parse_trial_list(bad, "L", Condition::Heard);
      FAIL("expected format error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Format);
      CHECK(e.line() == static_cast<int>(at) + 1);
    }
  }
}

TEST_CASE("property: alignment detection is symmetric") {
  Rng rng(5);
  for (int round = 0; round < 100; ++round) {
    TrialList list = random_list(rng);
    // Truth over a randomly overlapping id set.
    GroundTruth truth;
    for (const TrialPair& pair : list.pairs)
      if (rng.below(2)) truth.labels[pair.id] = Label::Match;
    for (int extra = rng.below(4); extra > 0; --extra)
      truth.labels[PairId{random_token(rng) + "_x"}] = Label::NonMatch;

    AlignmentReport forward = check_alignment(list, truth);

    // Swap roles: a list built from the truth ids against a truth built
    // from the list ids swaps the two report sections.
    TrialList truth_as_list;
    truth_as_list.language = list.language;
    for (const auto& [id, label] : truth.labels)
      truth_as_list.pairs.push_back(TrialPair{id, "v", "f"});
    GroundTruth list_as_truth;
    for (const TrialPair& pair : list.pairs)
      list_as_truth.labels[pair.id] = Label::Match;
    AlignmentReport backward = check_alignment(truth_as_list, list_as_truth);

    CHECK(forward.missing_in_truth == backward.extra_in_truth);
    CHECK(forward.extra_in_truth == backward.missing_in_truth);
  }
}
