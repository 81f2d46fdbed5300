#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "crisisdqn/evalkit.hpp"
#include "fixtures.hpp"
#include "metric_fixtures.hpp"

using namespace crisisdqn;
using namespace crisisdqn::fx;

class RougeFixture : public ::testing::TestWithParam<RougeCase> {};

TEST_P(RougeFixture, MatchesHandValue) {
  const auto& c = GetParam();
  EXPECT_NEAR(rouge2_f1(c.candidate, c.reference), c.expected, 1e-12);
}

INSTANTIATE_TEST_SUITE_P(HandComputed, RougeFixture, ::testing::ValuesIn(rouge_cases()),
                         [](const auto& info) { return std::string(info.param.name); });

TEST(Rouge, TokenizerRules) {
  EXPECT_EQ(rouge_tokens("  The FIRE,  (spread) ... now!! "),
            (std::vector<std::string>{"the", "fire", "spread", "now"}));
  EXPECT_EQ(rouge_tokens("U.S.-based"), (std::vector<std::string>{"u.s.-based"}));
  EXPECT_TRUE(rouge_tokens("\xE3\x80\x80 -- \xE2\x80\xAF").empty());
}

TEST(Rouge, SymmetricAndBounded) {
  std::mt19937_64 rng(11);
  const std::vector<std::string> vocab{"fire", "road", "closed", "the", "smoke", "north", "shelter", "open"};
  auto sentence = [&] {
    std::uniform_int_distribution<int> len(0, 9), pick(0, static_cast<int>(vocab.size()) - 1),
        sep(0, 6);
    std::string s;
    for (int i = len(rng); i > 0; --i) {
      s += vocab[pick(rng)];
      s += sep(rng) == 0 ? "\n" : " ";
    }
    return s;
  };
  for (int i = 0; i < 300; ++i) {
    const auto a = sentence(), b = sentence();
    const double ab = rouge2_f1(a, b);
    EXPECT_DOUBLE_EQ(ab, rouge2_f1(b, a));
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
  }
}

class SemanticFixture : public ::testing::TestWithParam<SemanticCase> {};

TEST_P(SemanticFixture, MatchesHandValue) {
  const auto& c = GetParam();
  EXPECT_NEAR(semantic_score(c.candidate, c.reference), c.expected, 1e-9);
}

INSTANTIATE_TEST_SUITE_P(HandComputed, SemanticFixture, ::testing::ValuesIn(semantic_cases()),
                         [](const auto& info) { return std::string(info.param.name); });

TEST(Semantic, OrderInvariant) {
  std::mt19937_64 rng(5);
  std::vector<Embedding> a, b;
  for (int i = 0; i < 6; ++i) a.push_back(random_unit(rng));
  for (int i = 0; i < 4; ++i) b.push_back(random_unit(rng));
  b.push_back(a[2]);
  const double s = semantic_score(a, b);
  std::reverse(a.begin(), a.end());
  std::rotate(b.begin(), b.begin() + 2, b.end());
  EXPECT_NEAR(semantic_score(a, b), s, 1e-6);
}

TEST(Pearson, KnownCases) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> up{2, 4, 6, 8, 10}, down{5, 4, 3, 2, 1}, flat{3, 3, 3, 3, 3};
  EXPECT_NEAR(*pearson(x, up), 1.0, 1e-12);
  EXPECT_NEAR(*pearson(x, down), -1.0, 1e-12);
  EXPECT_FALSE(pearson(x, flat).has_value());
  EXPECT_FALSE(pearson(std::vector<double>{1.0}, std::vector<double>{2.0}).has_value());
  // x = {1,2,3}, y = {1,3,2}: sxy = 1, sxx = syy = 2
  EXPECT_NEAR(*pearson(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2}), 0.5, 1e-12);
}

TEST(Diagnostics, UndefinedCorrelationIsReported) {
  auto one = selection_diagnostics(std::vector<DayCount>{{"E1", "2018-11-08", 3, 4}});
  EXPECT_FALSE(one.correlation);
  EXPECT_FALSE(one.note.empty());
  auto flat = selection_diagnostics(
      std::vector<DayCount>{{"E1", "2018-11-08", 3, 4}, {"E1", "2018-11-09", 3, 9}});
  EXPECT_FALSE(flat.correlation);
  EXPECT_NE(flat.to_json().find("null"), std::string::npos);
}

TEST(Metrics, OverallIsMeanOfKindMeans) {
  std::vector<MetricRow> rows{
      {"E1", "d1", ReferenceKind::Nist, 0.2, 0.5},
      {"E1", "d2", ReferenceKind::Nist, 0.4, std::nullopt},
      {"E1", "d3", ReferenceKind::Nist, 0.6, 0.7},
      {"E1", "d1", ReferenceKind::Wikipedia, 0.1, std::nullopt},
  };
  const auto r = MetricReport::aggregate(rows);
  EXPECT_NEAR(r.per_kind.at(ReferenceKind::Nist).rouge2_f1, 0.4, 1e-12);
  EXPECT_NEAR(*r.per_kind.at(ReferenceKind::Nist).semantic, 0.6, 1e-12);
  EXPECT_FALSE(r.per_kind.at(ReferenceKind::Wikipedia).semantic);
  EXPECT_NEAR(r.overall.rouge2_f1, 0.25, 1e-12);
  EXPECT_NEAR(*r.overall.semantic, 0.6, 1e-12);
  EXPECT_EQ(r.overall.rows, 4u);

  const auto csv = r.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "event,day,kind,rouge2_f1,semantic");
  EXPECT_NE(r.to_json().find("proxy"), std::string::npos);
}

namespace {

Corpus tiny_corpus() {
  Corpus c;
  auto a = make_text("a", 10, basis(0), 2);
  a.text = "fire crosses the highway";
  auto b = make_text("b", 20, basis(1), 1);
  b.text = "school closed today";
  c.days.push_back(make_stream({a, b}));
  ReferenceSummary ref;
  ref.event_id = "E1";
  ref.day = utc_day(kDay0);
  ref.kind = ReferenceKind::Synthetic;
  ref.text = "fire crosses the highway\nschools closed today";
  ref.max_facts_k = 2;
  ref.sentence_embeddings = {basis(0), basis(2)};
  c.references.push_back(ref);
  ReferenceSummary other = ref;
  other.day = utc_day(kDay0 + 86400);
  c.references.push_back(other);
  return c;
}

}  // namespace

TEST(Evaluate, ScoresRowsAgainstReferences) {
  const auto corpus = tiny_corpus();
  TimelineRow r1{"E1", corpus.references[0].day, 1, "f1", "fire crosses the highway", 1.0, {"a"}, {"twitter"}};
  TimelineRow r2{"E1", corpus.references[0].day, 2, "f2", "school closed today", 0.5, {"b"}, {"twitter"}};
  const std::vector<TimelineRow> rows{r2, r1};  // rank order restored inside
  const auto report = evaluate(corpus, rows);
  ASSERT_EQ(report.rows.size(), 2u);
  // candidate bigrams: 3 + 2; reference: 3 + 2; overlap 3 + 1 -> F1 = 0.8
  EXPECT_NEAR(report.rows[0].rouge2_f1, 0.8, 1e-12);
  // cand {e0, e1} vs ref {e0, e2}: P = R = 1/2
  EXPECT_NEAR(*report.rows[0].semantic, 0.5, 1e-6);
  // no rows for the second day: empty candidate
  EXPECT_EQ(report.rows[1].rouge2_f1, 0.0);
  EXPECT_EQ(*report.rows[1].semantic, 0.0);

  const std::vector<std::string> none{"E9"};
  EXPECT_TRUE(evaluate(corpus, rows, none).rows.empty());
}

TEST(LatencyBench, RejectsBadArguments) {
  const QNetwork net(NetworkShape{}, 1);
  const auto day = random_stream(20, 3);
  EXPECT_THROW(latency_bench(net, day, std::vector<int>{}), BenchError);
  EXPECT_THROW(latency_bench(net, day, std::vector<int>{1, 0}), BenchError);
  EXPECT_THROW(latency_bench(net, day, std::vector<int>{1}, kDefaultBudget, 0), BenchError);
}

TEST(LatencyBench, OneEntryPerQueryCount) {
  const QNetwork net(NetworkShape{}, 1);
  const auto day = random_stream(40, 3);
  const auto report = latency_bench(net, day, std::vector<int>{1, 52}, 1000, 2);
  ASSERT_EQ(report.entries.size(), 2u);
  EXPECT_EQ(report.entries[1].q_count, 52);
  EXPECT_EQ(report.entries[0].stats.samples, 80u);
  EXPECT_DOUBLE_EQ(report.ratio_to_first[0], 1.0);
  EXPECT_GT(report.ratio_to_first[1], 0.0);
  EXPECT_FALSE(report.note.empty());
}

TEST(SignTest, ExactBinomial) {
  // five wins, no losses: 2 * (1/2)^5
  EXPECT_NEAR(paired_sign_test(std::vector<double>{2, 2, 2, 2, 2}, std::vector<double>{1, 1, 1, 1, 1}),
              0.0625, 1e-12);
  // ties dropped: 1 win, 1 loss over n = 2 -> p = 2 * 3/4 clipped to 1
  EXPECT_DOUBLE_EQ(paired_sign_test(std::vector<double>{1, 0, 5}, std::vector<double>{0, 1, 5}), 1.0);
  EXPECT_DOUBLE_EQ(paired_sign_test(std::vector<double>{1, 2}, std::vector<double>{1, 2}), 1.0);
  // 9 of 10: 2 * (1 + 10) / 1024
  std::vector<double> a(10, 1.0), b(10, 0.0);
  b[0] = 2.0;
  EXPECT_NEAR(paired_sign_test(a, b), 22.0 / 1024.0, 1e-12);
  EXPECT_THROW(paired_sign_test(std::vector<double>{1}, std::vector<double>{1, 2}), std::invalid_argument);
}
