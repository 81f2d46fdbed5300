#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "crisisdqn/annotation.hpp"
#include "fixtures.hpp"

using namespace crisisdqn;

TEST(Annotation, DualThresholdRule) {
  std::vector<ConfidencePair> pairs{{"t1", "q1", 0.9, 0.85}, {"t1", "q2", 0.95, 0.7}, {"t1", "q3", 0.81, 0.80}};
  const auto table = aggregate_scores(pairs);
  EXPECT_EQ(table.score("t1"), 2);
  EXPECT_DOUBLE_EQ(table.mean_confidence.at("t1").at("q1"), 0.875);
  EXPECT_FALSE(table.mean_confidence.at("t1").contains("q2"));
}

TEST(Annotation, BoundaryIsInclusive) {
  std::vector<ConfidencePair> pairs{{"t1", "q1", 0.80, 0.80}};
  EXPECT_EQ(aggregate_scores(pairs).score("t1"), 1);
}

TEST(Annotation, EmptyInputGivesZeroEverywhere) {
  const auto table = aggregate_scores({});
  EXPECT_TRUE(table.sc.empty());
  EXPECT_EQ(table.score("anything"), 0);
}

TEST(Annotation, RejectsDuplicatesAndOutOfRange) {
  std::vector<ConfidencePair> dup{{"t1", "q1", 0.9, 0.9}, {"t1", "q1", 0.1, 0.1}};
  EXPECT_THROW(aggregate_scores(dup), AnnotationError);
  std::vector<ConfidencePair> bad{{"t1", "q1", 1.2, 0.9}};
  EXPECT_THROW(aggregate_scores(bad), AnnotationError);
  EXPECT_THROW(aggregate_scores({}, 1.5), AnnotationError);
}

namespace {

std::vector<ConfidencePair> random_pairs(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ConfidencePair> pairs;
  for (int t = 0; t < 20; ++t)
    for (int q = 0; q < 10; ++q)
      if (u(rng) < 0.6) pairs.push_back({"t" + std::to_string(t), "q" + std::to_string(q), u(rng), u(rng)});
  return pairs;
}

}  // namespace

TEST(Annotation, MonotoneInThreshold) {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    const auto pairs = random_pairs(rng);
    const auto lo = aggregate_scores(pairs, 0.5), hi = aggregate_scores(pairs, 0.8);
    for (const auto& [id, sc] : hi.sc) EXPECT_LE(sc, lo.score(id));
  }
}

TEST(Annotation, ScoreBoundedByDistinctQueries) {
  std::mt19937_64 rng(6);
  const auto pairs = random_pairs(rng);
  const auto table = aggregate_scores(pairs, 0.0);
  std::map<std::string, int> seen;
  for (const auto& p : pairs) ++seen[p.text_id];
  for (const auto& [id, n] : seen) EXPECT_EQ(table.score(id), n);
}

TEST(Annotation, PermutationInvariant) {
  std::mt19937_64 rng(7);
  auto pairs = random_pairs(rng);
  const auto a = aggregate_scores(pairs);
  std::shuffle(pairs.begin(), pairs.end(), rng);
  const auto b = aggregate_scores(pairs);
  EXPECT_EQ(a.sc, b.sc);
  EXPECT_EQ(a.mean_confidence, b.mean_confidence);
}

TEST(Annotation, ConfidencesRoundTripAndMerge) {
  fx::TempDir dir;
  std::vector<ConfidencePair> pairs{{"a", "Q1", 0.9, 0.95}, {"a", "Q2", 0.85, 0.99}, {"b", "Q1", 0.5, 0.9}};
  write_confidences(pairs, dir / "c.jsonl");
  const auto back = load_confidences(dir / "c.jsonl");
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[1].conf_b, 0.99);

  Corpus c;
  Event e{"E1", "x", {"2018-11-08"}, {{"Q1", "E1", "q"}}};
  c.events.push_back(e);
  std::mt19937_64 rng(1);
  c.days.push_back(fx::make_stream({fx::make_text("a", 1, fx::random_unit(rng)),
                                         fx::make_text("b", 2, fx::random_unit(rng), 4)}));
  // "a" answers two queries but its event has only one.
  EXPECT_THROW(merge_scores(c, aggregate_scores(back)), AnnotationError);
  c.events[0].queries.push_back({"Q2", "E1", "r"});
  merge_scores(c, aggregate_scores(back));
  EXPECT_EQ(c.days[0].items[0].sc, 2);
  EXPECT_EQ(c.days[0].items[1].sc, 0);
}
