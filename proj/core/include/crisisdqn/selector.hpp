#pragma once

// Greedy online selection over one day stream with a frozen Q-network.
// Decisions read only the observation; the event's query count never enters the
// decision path.

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "crisisdqn/corpus.hpp"
#include "crisisdqn/environment.hpp"
#include "crisisdqn/qnetwork.hpp"

namespace crisisdqn {

struct KeptText {
  std::string text_id;
  double importance = 0.0;  // Q_keep - Q_discard at decision time
  std::size_t decision_index = 0;
  double si_m = 0.0;
  const StreamText* text = nullptr;
};

struct LatencyStats {
  double mean_seconds = 0.0;
  double stdev_seconds = 0.0;  // sample standard deviation
  std::size_t samples = 0;

  static LatencyStats from(std::span<const double> seconds);
};

struct SelectionResult {
  std::string event_id;
  std::string day;
  std::vector<KeptText> kept;
  std::size_t decisions_total = 0;  // policy decisions, forced discards excluded
  std::size_t forced_discards = 0;
  std::size_t skipped = 0;          // texts whose observation could not be evaluated
  LatencyStats latency;
  std::vector<double> decision_seconds;
};

inline double importance(const std::array<float, 2>& q) {
  return static_cast<double>(q[0]) - static_cast<double>(q[1]);
}

// q_count is forwarded to the environment for reward bookkeeping only.
SelectionResult select_day(const QNetwork& net, const DayStream& day, int budget_max = kDefaultBudget,
                           int q_count = 1);

// selection.jsonl: {"event_id","day","text_id","importance","decision_index","si_m"}
std::string selection_record(const SelectionResult& result, const KeptText& kept);
void write_selection(std::span<const SelectionResult> results, const std::filesystem::path& path);
// Rebuilds per-day results against the corpus (texts resolved by id). Days without
// kept texts come back with an empty kept list, in corpus day order.
std::vector<SelectionResult> load_selection(const std::filesystem::path& path, const Corpus& corpus);

std::string latency_json(std::span<const SelectionResult> results);

}  // namespace crisisdqn
