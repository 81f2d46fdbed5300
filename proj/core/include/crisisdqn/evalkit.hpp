#pragma once

// Summary metrics and selection diagnostics.
//
// ROUGE-2 tokenisation: ASCII lowercase, split on Unicode whitespace, strip leading
// and trailing ASCII punctuation from every token, drop empty tokens. No stemming,
// no stopwords. Bigrams never cross a line break, so multi-sentence summaries are
// passed one sentence per line.
//
// The semantic score is a sentence-embedding proxy for BERT-Score: greedy matching
// on cosine similarity between candidate and reference sentence vectors.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "crisisdqn/corpus.hpp"
#include "crisisdqn/qnetwork.hpp"
#include "crisisdqn/selector.hpp"
#include "crisisdqn/timeline.hpp"

namespace crisisdqn {

std::vector<std::string> rouge_tokens(std::string_view text);
double rouge2_f1(std::string_view candidate, std::string_view reference);

// Precision: mean over candidates of the best cosine to any reference; recall is
// symmetric. F1 = 2PR / (P + R) when both are positive, else 0. An empty side
// yields 0 and logs a warning.
double semantic_score(std::span<const Embedding> candidate, std::span<const Embedding> reference);

struct MetricRow {
  std::string event_id;
  std::string day;
  ReferenceKind kind = ReferenceKind::Synthetic;
  double rouge2_f1 = 0.0;
  std::optional<double> semantic;  // absent when the reference carries no embeddings
};

struct MetricMeans {
  double rouge2_f1 = 0.0;
  std::optional<double> semantic;
  std::size_t rows = 0;
};

struct MetricReport {
  std::vector<MetricRow> rows;
  std::map<ReferenceKind, MetricMeans> per_kind;
  MetricMeans overall;  // mean of the per-kind means

  static MetricReport aggregate(std::vector<MetricRow> rows);
  std::string to_csv() const;   // event,day,kind,rouge2_f1,semantic
  std::string to_json() const;  // aggregates; the semantic column is labelled as a proxy
};

std::vector<TimelineRow> to_rows(const Timeline& timeline, FactTextMode mode = FactTextMode::Concatenated);

// Scores every reference of every listed event (all events when empty). A day with no
// timeline rows is scored as an empty candidate. Candidate sentences are fact texts;
// candidate embeddings are the embeddings of every source text.
MetricReport evaluate(const Corpus& corpus, std::span<const TimelineRow> rows,
                      std::span<const std::string> events = {});

struct DayCount {
  std::string event_id;
  std::string day;
  double selected = 0.0;
  double reference = 0.0;
};

struct DiagnosticsReport {
  std::vector<DayCount> days;
  std::optional<double> correlation;  // Pearson; absent when undefined
  std::string note;

  std::string to_json() const;
};

std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

// Pairs each selection result with its day's reference fact count (max_facts_k of
// the first reference that has one). Days without a count are left out.
DiagnosticsReport selection_diagnostics(std::span<const SelectionResult> selections, const Corpus& corpus);
DiagnosticsReport selection_diagnostics(std::vector<DayCount> days);

struct LatencyEntry {
  int q_count = 0;
  LatencyStats stats;
};

struct LatencyBenchReport {
  std::vector<LatencyEntry> entries;
  std::vector<double> ratio_to_first;  // mean latency of each entry / mean of entries[0]
  std::string note;

  std::string to_json() const;
};

class BenchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Runs `rounds` interleaved passes over the same stream for each query count, after
// one unrecorded warm-up pass; the visiting order alternates by round. Throws
// BenchError on an empty query count list.
LatencyBenchReport latency_bench(const QNetwork& net, const DayStream& day, std::span<const int> query_counts,
                                 int budget_max = kDefaultBudget, int rounds = 5);

// Two-sided exact sign test over paired samples; ties are dropped. Returns 1 when
// every pair ties.
double paired_sign_test(std::span<const double> a, std::span<const double> b);

}  // namespace crisisdqn
