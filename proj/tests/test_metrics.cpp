#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fame/error.hpp"
#include "fame/metrics.hpp"
#include "fame/rng.hpp"
#include "support/oracles.hpp"

using namespace fame;
using fame::testing::oracle_eer;

namespace {

ScoreFile scores_of(std::initializer_list<std::pair<const char*, double>> xs) {
  ScoreFile f;
  for (const auto& [id, s] : xs) f.scores.emplace(PairId{id}, s);
  return f;
}

GroundTruth truth_of(std::initializer_list<std::pair<const char*, int>> xs) {
  GroundTruth t;
  for (const auto& [id, l] : xs)
    t.labels.emplace(PairId{id}, l ? Label::Match : Label::NonMatch);
  return t;
}

const DetPoint& point_at(const DetCurve& curve, double threshold) {
  for (const DetPoint& p : curve.points)
    if (p.threshold == threshold) return p;
  REQUIRE(false);
  return curve.points.front();
}

// Random labeled instance; ties are injected by rounding scores.
struct Instance {
  ScoreFile scores;
  GroundTruth truth;
  std::vector<double> match, nonmatch;
};

Instance random_instance(Rng& rng, int min_trials = 10, int max_trials = 200,
                         double tie_probability = 0.3) {
  Instance inst;
  int n = min_trials + static_cast<int>(rng.below(max_trials - min_trials + 1));
  bool ties = rng.uniform01() < tie_probability;
  // at least one of each label
  for (int i = 0; i < n; ++i) {
    bool match = i == 0 ? true : (i == 1 ? false : rng.below(2) == 0);
    double s = rng.uniform(-2.0, 2.0);
    if (ties) s = std::round(s * 4.0) / 4.0;  // quarter grid forces ties
    std::string id = "t" + std::to_string(i);
    inst.scores.scores.emplace(PairId{id}, s);
    inst.truth.labels.emplace(PairId{id},
                              match ? Label::Match : Label::NonMatch);
    (match ? inst.match : inst.nonmatch).push_back(s);
  }
  return inst;
}

}  // namespace

TEST_CASE("score files parse the submission format") {
  ScoreFile f = parse_scores("ysuvkz41 0.9988\nyx4nfa35 1.5321\n");
  CHECK(f.scores.at(PairId{"ysuvkz41"}) == 0.9988);
  CHECK(f.scores.at(PairId{"yx4nfa35"}) == 1.5321);  // scores above 1 are legal
}

TEST_CASE("non-finite scores are format errors with the line number") {
  try {
    parse_scores("abc NaN\n");
    FAIL("expected format error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Format);
    CHECK(e.line() == 1);
  }
  CHECK_THROWS_AS(parse_scores("abc inf\n"), Error);
  CHECK_THROWS_AS(parse_scores("abc 1.0\nabc 2.0\n"), Error);
  CHECK_THROWS_AS(parse_scores("abc\n"), Error);
}

TEST_CASE("DET points follow the accept-at-or-above convention") {
  SUBCASE("perfectly separated") {
    ScoreFile s = scores_of({{"m1", 0.9}, {"m2", 0.8}, {"n1", 0.2}, {"n2", 0.1}});
    GroundTruth t = truth_of({{"m1", 1}, {"m2", 1}, {"n1", 0}, {"n2", 0}});
    DetCurve curve = compute_det(s, t);
    const DetPoint& p = point_at(curve, 0.8);  // 0.5 not evaluated; 0.8 shows (0,0)
    CHECK(p.far == 0.0);
    CHECK(p.frr == 0.0);
  }
  SUBCASE("all scores tied") {
    ScoreFile s = scores_of({{"m1", 0.5}, {"m2", 0.5}, {"n1", 0.5}, {"n2", 0.5}});
    GroundTruth t = truth_of({{"m1", 1}, {"m2", 1}, {"n1", 0}, {"n2", 0}});
    DetCurve curve = compute_det(s, t);
    REQUIRE(curve.points.size() == 2);
    CHECK(curve.points[0].threshold == 0.5);
    CHECK(curve.points[0].far == 1.0);
    CHECK(curve.points[0].frr == 0.0);
    CHECK(curve.points[1].far == 0.0);
    CHECK(curve.points[1].frr == 1.0);
  }
  SUBCASE("interleaved scores") {
    ScoreFile s = scores_of({{"m1", 0.9}, {"m2", 0.3}, {"n1", 0.7}, {"n2", 0.1}});
    GroundTruth t = truth_of({{"m1", 1}, {"m2", 1}, {"n1", 0}, {"n2", 0}});
    const DetPoint& p = point_at(compute_det(s, t), 0.7);
    CHECK(p.far == 0.5);
    CHECK(p.frr == 0.5);
  }
}

TEST_CASE("DET curve endpoints and monotonicity invariants") {
  Rng rng(7);
  for (int round = 0; round < 200; ++round) {
    Instance inst = random_instance(rng, 4, 60);
    DetCurve curve = compute_det(inst.scores, inst.truth);
    REQUIRE(!curve.points.empty());
    CHECK(curve.points.front().far == 1.0);
    CHECK(curve.points.back().frr == 1.0);
    CHECK(curve.points.back().far == 0.0);
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
      CHECK(curve.points[i].threshold > curve.points[i - 1].threshold);
      CHECK(curve.points[i].far <= curve.points[i - 1].far);
      CHECK(curve.points[i].frr >= curve.points[i - 1].frr);
    }
  }
}

TEST_CASE("EER fixtures") {
  SUBCASE("perfect separation gives 0") {
    ScoreFile s = scores_of({{"m1", 1.0}, {"m2", 0.9}, {"n1", 0.2}, {"n2", 0.1}});
    GroundTruth t = truth_of({{"m1", 1}, {"m2", 1}, {"n1", 0}, {"n2", 0}});
    CHECK(compute_eer(s, t).eer == 0.0);
  }
  SUBCASE("identical scores give 50 by symmetry") {
    ScoreFile s = scores_of({{"a", 0.5}, {"b", 0.5}, {"c", 0.5}, {"d", 0.5}});
    GroundTruth t = truth_of({{"a", 1}, {"b", 1}, {"c", 0}, {"d", 0}});
    CHECK(compute_eer(s, t).eer == 50.0);
  }
  SUBCASE("six-trial regression fixture, frozen from the sweep oracle") {
    // oracle_eer({0.9, 0.8, 0.3}, {0.7, 0.2, 0.1}): FAR = FRR = 1/3 at
    // threshold 0.7.
    ScoreFile s = scores_of({{"m1", 0.9}, {"m2", 0.8}, {"m3", 0.3},
                             {"n1", 0.7}, {"n2", 0.2}, {"n3", 0.1}});
    GroundTruth t = truth_of({{"m1", 1}, {"m2", 1}, {"m3", 1},
                              {"n1", 0}, {"n2", 0}, {"n3", 0}});
    testing::OracleEer expected = oracle_eer({0.9, 0.8, 0.3}, {0.7, 0.2, 0.1});
    EerResult got = compute_eer(s, t);
    CHECK(got.eer == doctest::Approx(expected.eer_percent).epsilon(1e-12));
    CHECK(got.eer == doctest::Approx(100.0 / 3.0).epsilon(1e-12));
    CHECK(got.threshold == 0.7);
  }
}

TEST_CASE("degenerate labels and missing coverage raise") {
  ScoreFile s = scores_of({{"a", 0.5}, {"b", 0.4}});
  CHECK_THROWS_AS(compute_eer(s, truth_of({{"a", 1}, {"b", 1}})), Error);
  try {
    compute_eer(s, truth_of({{"a", 1}, {"b", 0}, {"zz", 0}}));
    FAIL("expected coverage error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Coverage);
    CHECK(e.token() == "zz");
  }
}

TEST_CASE("property: oracle equivalence on random instances") {
  Rng rng(11);
  for (int round = 0; round < 300; ++round) {
    Instance inst = random_instance(rng);
    EerResult got = compute_eer(inst.scores, inst.truth);
    testing::OracleEer expected = oracle_eer(inst.match, inst.nonmatch);
    CHECK(std::abs(got.eer - expected.eer_percent) < 1e-9);
    CHECK(got.eer >= 0.0);
    CHECK(got.eer <= 100.0);
  }
}

TEST_CASE("property: EER is invariant under strictly increasing transforms") {
  Rng rng(13);
  for (int round = 0; round < 50; ++round) {
    Instance inst = random_instance(rng, 6, 60);
    double base = compute_eer(inst.scores, inst.truth).eer;
    for (int k = 0; k < 20; ++k) {
      double a = std::exp(rng.uniform(-1.0, 1.0));  // positive slope
      double b = rng.uniform(-3.0, 3.0);
      double c = rng.uniform(0.1, 2.0);
      ScoreFile transformed;
      for (const auto& [id, s] : inst.scores.scores)
        transformed.scores.emplace(id, a * s + b + c * std::atan(s));
      CHECK(compute_eer(transformed, inst.truth).eer == base);
    }
  }
}

TEST_CASE("property: label swap with negated scores preserves the EER") {
  Rng rng(17);
  for (int round = 0; round < 200; ++round) {
    Instance inst = random_instance(rng, 4, 80);
    double base = compute_eer(inst.scores, inst.truth).eer;
    ScoreFile negated;
    GroundTruth swapped;
    for (const auto& [id, s] : inst.scores.scores) negated.scores.emplace(id, -s);
    for (const auto& [id, l] : inst.truth.labels)
      swapped.labels.emplace(
          id, l == Label::Match ? Label::NonMatch : Label::Match);
    double mirrored = compute_eer(negated, swapped).eer;
    CHECK(mirrored == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("overall score reproduces the published grid aggregates") {
  // V1-EU row: mean 33.35 displays 33.4; V3-EG row: mean 40.25 displays 40.2.
  std::array<double, 4> v1{29.3, 37.9, 40.4, 25.8};
  double o1 = overall_score(v1);
  CHECK(o1 == doctest::Approx(33.35).epsilon(1e-12));
  CHECK(format_percent_display(o1) == "33.4");

  std::array<double, 4> v3{34.5, 43.7, 43.2, 39.6};
  double o3 = overall_score(v3);
  CHECK(o3 == doctest::Approx(40.25).epsilon(1e-12));
  CHECK(format_percent_display(o3) == "40.2");

  std::array<double, 4> zeros{0, 0, 0, 0};
  CHECK(overall_score(zeros) == 0.0);

  std::array<double, 3> three{1, 2, 3};
  CHECK_THROWS_AS(overall_score(three), Error);
}

TEST_CASE("property: overall score is permutation-invariant and bounded") {
  Rng rng(23);
  for (int round = 0; round < 200; ++round) {
    std::array<double, 4> eers;
    for (double& e : eers) e = rng.uniform(0.0, 100.0);
    double base = overall_score(eers);
    std::array<double, 4> sorted = eers;
    std::sort(sorted.begin(), sorted.end());
    CHECK(base >= sorted.front());
    CHECK(base <= sorted.back());
    std::array<double, 4> perm = eers;
    for (int k = 0; k < 10; ++k) {
      for (std::size_t i = 3; i > 0; --i)
        std::swap(perm[i], perm[rng.below(i + 1)]);
      CHECK(overall_score(perm) == base);
    }
  }
}

TEST_CASE("score serialization round-trips the paper lines byte-exactly") {
  ScoreFile f = parse_scores("ysuvkz41 0.9988\n");
  CHECK(serialize(f) == "ysuvkz41 0.9988\n");
  ScoreFile g = parse_scores("yx4nfa35 1.5321\n");
  CHECK(serialize(g) == "yx4nfa35 1.5321\n");
}
