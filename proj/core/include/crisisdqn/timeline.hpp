#pragma once

// Fact grouping and ranked daily timelines.
//
// Flat mode emits one fact per kept text. Topic mode groups kept texts with
// average-linkage agglomerative clustering on cosine distance, merging while the
// closest pair of clusters is within `tau`.

#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "crisisdqn/selector.hpp"

namespace crisisdqn {

enum class GroupingMode { Flat, Topic };
enum class FactAggregate { Max, Mean };
enum class FactTextMode { Concatenated, Representative };

struct ClusterConfig {
  GroupingMode mode = GroupingMode::Flat;
  double tau = 0.5;
  FactAggregate aggregate = FactAggregate::Max;

  bool operator==(const ClusterConfig&) const = default;
};

struct Fact {
  std::string fact_id;
  std::string event_id;
  std::string day;
  std::vector<KeptText> members;  // decision order
  std::string representative_id;  // highest-importance member, ties to smaller text_id
  double importance = 0.0;
  std::vector<std::string> sources;
  std::vector<Stream> streams;  // distinct, in enum order

  const KeptText& representative() const;
};

struct Timeline {
  std::string event_id;
  std::string day;
  std::vector<Fact> facts;  // importance descending, ties by representative_id ascending
  std::optional<int> k_used;
};

class TimelineError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::vector<Fact> cluster_facts(std::span<const KeptText> kept, const ClusterConfig& config = {});

// Throws TimelineError for k <= 0. Facts must share one event/day.
Timeline emit_timeline(std::vector<Fact> facts, std::optional<int> k = std::nullopt);

// Concatenated joins member texts (decision order) with a single space.
std::string fact_text(const Fact& fact, FactTextMode mode = FactTextMode::Concatenated);

// timeline.jsonl: {"event_id","day","rank","fact_id","factText","importance","sources","streams"}
std::vector<std::string> timeline_records(const Timeline& timeline, FactTextMode mode = FactTextMode::Concatenated);
void write_timelines(std::span<const Timeline> timelines, const std::filesystem::path& path,
                     FactTextMode mode = FactTextMode::Concatenated);

struct TimelineRow {
  std::string event_id;
  std::string day;
  int rank = 0;
  std::string fact_id;
  std::string fact_text;
  double importance = 0.0;
  std::vector<std::string> sources;
  std::vector<std::string> streams;
};

std::vector<TimelineRow> load_timeline_rows(const std::filesystem::path& path);

}  // namespace crisisdqn
