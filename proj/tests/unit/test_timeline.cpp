#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "crisisdqn/timeline.hpp"
#include "crisisdqn/vecmath.hpp"
#include "fixtures.hpp"

using namespace crisisdqn;

namespace {

struct Kept {
  DayStream stream;
  std::vector<KeptText> kept;
};

Kept make_kept(std::vector<Embedding> embeddings, std::vector<double> importances) {
  Kept k;
  std::vector<StreamText> items;
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    char id[8];
    std::snprintf(id, sizeof id, "t%02zu", i);
    items.push_back(fx::make_text(id, static_cast<std::int64_t>(i), embeddings[i], 1, static_cast<Stream>(i % 3)));
  }
  k.stream = fx::make_stream(std::move(items));
  for (std::size_t i = 0; i < embeddings.size(); ++i)
    k.kept.push_back(KeptText{k.stream.items[i].text_id, importances[i], i, 0.0, &k.stream.items[i]});
  return k;
}

// Average linkage recomputed from scratch each round.
std::set<std::set<std::string>> naive_clusters(const std::vector<KeptText>& kept, double tau) {
  std::vector<std::vector<std::size_t>> cl;
  for (std::size_t i = 0; i < kept.size(); ++i) cl.push_back({i});
  auto dist = [&](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    double s = 0;
    for (auto i : a)
      for (auto j : b) s += 1.0 - cosine(kept[i].text->embedding, kept[j].text->embedding);
    return s / static_cast<double>(a.size() * b.size());
  };
  while (cl.size() > 1) {
    double best = 1e9;
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < cl.size(); ++i)
      for (std::size_t j = i + 1; j < cl.size(); ++j)
        if (double d = dist(cl[i], cl[j]); d < best) best = d, bi = i, bj = j;
    if (best > tau) break;
    cl[bi].insert(cl[bi].end(), cl[bj].begin(), cl[bj].end());
    cl.erase(cl.begin() + static_cast<std::ptrdiff_t>(bj));
  }
  std::set<std::set<std::string>> out;
  for (const auto& c : cl) {
    std::set<std::string> s;
    for (auto i : c) s.insert(kept[i].text_id);
    out.insert(s);
  }
  return out;
}

std::vector<Embedding> noisy_groups(std::mt19937_64& rng, int groups, int per_group, double noise) {
  std::normal_distribution<float> n(0.f, 1.f);
  std::vector<Embedding> out;
  for (int g = 0; g < groups; ++g) {
    const auto c = fx::random_unit(rng);
    for (int m = 0; m < per_group; ++m) {
      Embedding e = c;
      for (auto& x : e) x += static_cast<float>(noise / std::sqrt(768.0)) * n(rng);
      out.push_back(e);
    }
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

}  // namespace

TEST(ClusterFacts, FlatModeOneFactPerText) {
  std::mt19937_64 rng(1);
  std::vector<Embedding> e;
  for (int i = 0; i < 5; ++i) e.push_back(fx::random_unit(rng));
  const auto k = make_kept(e, {0.1, 0.2, 0.3, 0.4, 0.5});
  const auto facts = cluster_facts(k.kept);
  ASSERT_EQ(facts.size(), 5u);
  EXPECT_EQ(facts[2].fact_id, "E1/2018-11-08/t02");
  EXPECT_EQ(facts[2].sources, std::vector<std::string>{"t02"});
  EXPECT_TRUE(cluster_facts({}).empty());
}

TEST(ClusterFacts, TopicModeMergesExactDuplicates) {
  const auto k = make_kept({fx::basis(0), fx::basis(0), fx::basis(1)}, {0.3, 0.7, 0.5});
  const auto facts = cluster_facts(k.kept, ClusterConfig{GroupingMode::Topic, 0.5, FactAggregate::Max});
  ASSERT_EQ(facts.size(), 2u);
  const auto& merged = facts[0].members.size() == 2 ? facts[0] : facts[1];
  EXPECT_EQ(merged.representative_id, "t01");
  EXPECT_EQ(merged.importance, 0.7);
  EXPECT_EQ(merged.sources, (std::vector<std::string>{"t00", "t01"}));
  EXPECT_EQ(merged.streams, (std::vector<Stream>{Stream::Twitter, Stream::Reddit}));

  const auto mean = cluster_facts(k.kept, ClusterConfig{GroupingMode::Topic, 0.5, FactAggregate::Mean});
  const auto& m2 = mean[0].members.size() == 2 ? mean[0] : mean[1];
  EXPECT_DOUBLE_EQ(m2.importance, 0.5);
}

TEST(ClusterFacts, MatchesNaiveAverageLinkage) {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 10; ++rep) {
    const auto emb = noisy_groups(rng, 4, 5, 0.6 + 0.2 * rep);
    std::vector<double> imp(emb.size());
    for (auto& x : imp) x = std::uniform_real_distribution<double>(0, 1)(rng);
    const auto k = make_kept(emb, imp);
    for (double tau : {0.2, 0.5, 0.8}) {
      const auto facts = cluster_facts(k.kept, ClusterConfig{GroupingMode::Topic, tau, FactAggregate::Max});
      std::set<std::set<std::string>> got;
      std::size_t members = 0;
      for (const auto& f : facts) {
        got.insert(std::set<std::string>(f.sources.begin(), f.sources.end()));
        members += f.members.size();
        double best = -1;
        for (const auto& m : f.members) best = std::max(best, m.importance);
        EXPECT_EQ(f.importance, best);
      }
      EXPECT_EQ(members, k.kept.size());  // partition
      EXPECT_EQ(got, naive_clusters(k.kept, tau));
    }
  }
}

TEST(EmitTimeline, SortsAndTruncates) {
  std::mt19937_64 rng(3);
  const auto k = make_kept({fx::random_unit(rng), fx::random_unit(rng), fx::random_unit(rng)},
                           {0.2, 0.9, 0.5});
  auto t = emit_timeline(cluster_facts(k.kept), 2);
  ASSERT_EQ(t.facts.size(), 2u);
  EXPECT_EQ(t.facts[0].importance, 0.9);
  EXPECT_EQ(t.facts[1].importance, 0.5);
  EXPECT_EQ(t.k_used, 2);
  EXPECT_EQ(emit_timeline(cluster_facts(k.kept)).facts.size(), 3u);
  EXPECT_THROW(emit_timeline(cluster_facts(k.kept), 0), TimelineError);
}

TEST(EmitTimeline, EqualImportanceOrdersByRepresentativeId) {
  std::mt19937_64 rng(4);
  const auto k = make_kept({fx::random_unit(rng), fx::random_unit(rng), fx::random_unit(rng)},
                           {0.5, 0.5, 0.5});
  auto facts = cluster_facts(k.kept);
  std::reverse(facts.begin(), facts.end());
  const auto t = emit_timeline(facts);
  EXPECT_EQ(t.facts[0].representative_id, "t00");
  EXPECT_EQ(t.facts[2].representative_id, "t02");
}

TEST(EmitTimeline, RejectsMixedDays) {
  std::mt19937_64 rng(5);
  auto k = make_kept({fx::random_unit(rng), fx::random_unit(rng)}, {0.1, 0.2});
  auto facts = cluster_facts(k.kept);
  facts[1].day = "2018-11-09";
  EXPECT_THROW(emit_timeline(facts), TimelineError);
}

TEST(EmitTimeline, NonIncreasingAndFlatIdentity) {
  std::mt19937_64 rng(6);
  std::vector<Embedding> emb;
  std::vector<double> imp;
  for (int i = 0; i < 40; ++i) {
    emb.push_back(fx::random_unit(rng));
    imp.push_back(std::round(std::uniform_real_distribution<double>(0, 5)(rng)) / 5);
  }
  const auto k = make_kept(emb, imp);
  const auto t = emit_timeline(cluster_facts(k.kept), 40);
  std::set<std::string> ids;
  for (std::size_t i = 0; i < t.facts.size(); ++i) {
    ids.insert(t.facts[i].representative_id);
    if (i) EXPECT_GE(t.facts[i - 1].importance, t.facts[i].importance);
  }
  EXPECT_EQ(ids.size(), 40u);
}

TEST(Timeline, RecordsAndRoundTrip) {
  const auto k = make_kept({fx::basis(0), fx::basis(0), fx::basis(1)}, {0.3, 0.7, 0.5});
  const auto t = emit_timeline(cluster_facts(k.kept, ClusterConfig{GroupingMode::Topic}));
  EXPECT_EQ(fact_text(t.facts[0]), "text t00 text t01");
  EXPECT_EQ(fact_text(t.facts[0], FactTextMode::Representative), "text t01");

  fx::TempDir dir;
  std::vector<Timeline> ts{t};
  write_timelines(ts, dir / "timeline.jsonl");
  const auto rows = load_timeline_rows(dir / "timeline.jsonl");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].rank, 1);
  EXPECT_EQ(rows[1].rank, 2);
  EXPECT_EQ(rows[0].fact_text, "text t00 text t01");
  EXPECT_EQ(rows[0].streams, (std::vector<std::string>{"twitter", "reddit"}));
  EXPECT_EQ(rows[0].importance, 0.7);
}
