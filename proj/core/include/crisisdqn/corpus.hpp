#pragma once

// Domain model for multi-stream crisis corpora and the JSONL reader/writer.
//
// A corpus directory holds four files:
//   events.jsonl      {"event_id", "name", "days": ["YYYY-MM-DD", ...]}
//   queries.jsonl     {"event_id", "query_id", "text"}
//   items.jsonl       {"text_id", "event_id", "stream", "unix_ts", "day", "text",
//                      "embedding": [768 numbers], "sc": int}
//   references.jsonl  {"event_id", "day", "kind", "text", "max_facts_k"?,
//                      "sentence_embeddings"?: [[768 numbers], ...]}
//
// references.jsonl is optional. Reference text holds one sentence per line; when
// "sentence_embeddings" is present it carries one vector per line, which the
// semantic metric needs.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace crisisdqn {

inline constexpr std::size_t kEmbeddingDim = 768;

using Embedding = std::vector<float>;

enum class Stream { Twitter, Reddit, News };
enum class ReferenceKind { Nist, Ics, Wikipedia, Synthetic };

std::string_view to_string(Stream s);
std::string_view to_string(ReferenceKind k);
std::optional<Stream> parse_stream(std::string_view s);
std::optional<ReferenceKind> parse_reference_kind(std::string_view s);

struct Query {
  std::string query_id;
  std::string event_id;
  std::string text;

  bool operator==(const Query&) const = default;
};

struct Event {
  std::string event_id;
  std::string name;
  std::vector<std::string> days;  // ISO dates, strictly increasing
  std::vector<Query> queries;

  int query_count() const { return static_cast<int>(queries.size()); }
  bool operator==(const Event&) const = default;
};

struct StreamText {
  std::string text_id;
  std::string event_id;
  Stream stream = Stream::Twitter;
  std::int64_t unix_ts = 0;
  std::string day;
  std::string text;
  Embedding embedding;
  int sc = 0;

  bool operator==(const StreamText&) const = default;
};

// One event-day: the unit of an episode. Items are sorted by (unix_ts, text_id).
struct DayStream {
  std::string event_id;
  std::string day;
  std::vector<StreamText> items;

  bool operator==(const DayStream&) const = default;
};

struct ReferenceSummary {
  std::string event_id;
  std::string day;
  ReferenceKind kind = ReferenceKind::Synthetic;
  std::string text;
  std::optional<int> max_facts_k;
  std::vector<Embedding> sentence_embeddings;

  std::vector<std::string> sentences() const;
  bool operator==(const ReferenceSummary&) const = default;
};

struct Corpus {
  std::vector<Event> events;
  std::vector<DayStream> days;  // grouped by event (file order), then by day
  std::vector<ReferenceSummary> references;

  const Event* find_event(std::string_view event_id) const;
  const DayStream* find_day(std::string_view event_id, std::string_view day) const;
  std::vector<const DayStream*> days_of(std::string_view event_id) const;
  std::vector<const ReferenceSummary*> references_for(std::string_view event_id,
                                                      std::string_view day) const;
  std::size_t text_count() const;

  bool operator==(const Corpus&) const = default;
};

class CorpusError : public std::runtime_error {
 public:
  CorpusError(const std::string& file, std::size_t line, const std::string& what);
  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

struct CorpusFiles {
  std::filesystem::path events;
  std::filesystem::path queries;
  std::filesystem::path items;
  std::optional<std::filesystem::path> references;

  static CorpusFiles in_directory(const std::filesystem::path& dir);
};

// Throws CorpusError on malformed lines, wrong embedding length, unknown event ids,
// days outside an event, timestamp/day mismatches and sc > |Q_e|.
Corpus load_corpus(const CorpusFiles& files);
Corpus load_corpus(const std::filesystem::path& dir);

void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);
std::string serialize_item(const StreamText& item);
std::string serialize_reference(const ReferenceSummary& ref);

// Sorts by (unix_ts, text_id).
void sort_day_stream(DayStream& day);

// UTC calendar day containing unix_ts, as YYYY-MM-DD.
std::string utc_day(std::int64_t unix_ts);
bool is_iso_date(std::string_view s);

// Order-sensitive fingerprint over every field, embeddings included.
std::uint64_t corpus_fingerprint(const Corpus& corpus);

struct ValidationReport {
  std::map<std::string, std::size_t> texts_per_event;
  std::map<std::string, std::map<std::string, std::size_t>> texts_per_day;
  std::map<std::string, int> queries_per_event;
  std::map<int, std::size_t> sc_histogram;
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

ValidationReport validate_corpus(const Corpus& corpus);

}  // namespace crisisdqn
