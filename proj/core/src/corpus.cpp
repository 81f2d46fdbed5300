#include "crisisdqn/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "crisisdqn/vecmath.hpp"

namespace crisisdqn {

using json = nlohmann::json;

std::string_view to_string(Stream s) {
  switch (s) {
    case Stream::Twitter: return "twitter";
    case Stream::Reddit: return "reddit";
    case Stream::News: return "news";
  }
  return "twitter";
}

std::string_view to_string(ReferenceKind k) {
  switch (k) {
    case ReferenceKind::Nist: return "nist";
    case ReferenceKind::Ics: return "ics";
    case ReferenceKind::Wikipedia: return "wikipedia";
    case ReferenceKind::Synthetic: return "synthetic";
  }
  return "synthetic";
}

std::optional<Stream> parse_stream(std::string_view s) {
  if (s == "twitter") return Stream::Twitter;
  if (s == "reddit") return Stream::Reddit;
  if (s == "news") return Stream::News;
  return std::nullopt;
}

std::optional<ReferenceKind> parse_reference_kind(std::string_view s) {
  if (s == "nist") return ReferenceKind::Nist;
  if (s == "ics") return ReferenceKind::Ics;
  if (s == "wikipedia") return ReferenceKind::Wikipedia;
  if (s == "synthetic") return ReferenceKind::Synthetic;
  return std::nullopt;
}

std::vector<std::string> ReferenceSummary::sentences() const {
  std::vector<std::string> out;
  std::string line;
  std::istringstream in(text);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

const Event* Corpus::find_event(std::string_view event_id) const {
  for (const auto& e : events)
    if (e.event_id == event_id) return &e;
  return nullptr;
}

const DayStream* Corpus::find_day(std::string_view event_id, std::string_view day) const {
  for (const auto& d : days)
    if (d.event_id == event_id && d.day == day) return &d;
  return nullptr;
}

std::vector<const DayStream*> Corpus::days_of(std::string_view event_id) const {
  std::vector<const DayStream*> out;
  for (const auto& d : days)
    if (d.event_id == event_id) out.push_back(&d);
  return out;
}

std::vector<const ReferenceSummary*> Corpus::references_for(std::string_view event_id,
                                                            std::string_view day) const {
  std::vector<const ReferenceSummary*> out;
  for (const auto& r : references)
    if (r.event_id == event_id && r.day == day) out.push_back(&r);
  return out;
}

std::size_t Corpus::text_count() const {
  std::size_t n = 0;
  for (const auto& d : days) n += d.items.size();
  return n;
}

CorpusError::CorpusError(const std::string& file, std::size_t line, const std::string& what)
    : std::runtime_error(file + ":" + std::to_string(line) + ": " + what), file_(file), line_(line) {}

CorpusFiles CorpusFiles::in_directory(const std::filesystem::path& dir) {
  CorpusFiles f;
  f.events = dir / "events.jsonl";
  f.queries = dir / "queries.jsonl";
  f.items = dir / "items.jsonl";
  if (std::filesystem::exists(dir / "references.jsonl")) f.references = dir / "references.jsonl";
  return f;
}

std::string utc_day(std::int64_t unix_ts) {
  using namespace std::chrono;
  const auto tp = sys_seconds{seconds{unix_ts}};
  const year_month_day ymd{floor<days>(tp)};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

bool is_iso_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  int y = 0;
  unsigned m = 0, d = 0;
  if (std::from_chars(s.data(), s.data() + 4, y).ptr != s.data() + 4) return false;
  if (std::from_chars(s.data() + 5, s.data() + 7, m).ptr != s.data() + 7) return false;
  if (std::from_chars(s.data() + 8, s.data() + 10, d).ptr != s.data() + 10) return false;
  return std::chrono::year_month_day{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}}.ok();
}

void sort_day_stream(DayStream& day) {
  std::sort(day.items.begin(), day.items.end(), [](const StreamText& a, const StreamText& b) {
    if (a.unix_ts != b.unix_ts) return a.unix_ts < b.unix_ts;
    return a.text_id < b.text_id;
  });
}

namespace {

class JsonlReader {
 public:
  explicit JsonlReader(const std::filesystem::path& path) : path_(path.string()), in_(path) {
    if (!in_) throw CorpusError(path_, 0, "cannot open file");
  }

  // Returns false at end of file. Blank lines are skipped.
  bool next(json& out) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        out = json::parse(line);
      } catch (const json::parse_error& e) {
        fail(std::string("malformed JSON: ") + e.what());
      }
      if (!out.is_object()) fail("expected a JSON object");
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const { throw CorpusError(path_, line_no_, what); }

  template <typename T>
  T field(const json& obj, const char* key) const {
    auto it = obj.find(key);
    if (it == obj.end()) fail(std::string("missing field \"") + key + "\"");
    try {
      return it->get<T>();
    } catch (const json::exception&) {
      fail(std::string("field \"") + key + "\" has the wrong type");
    }
  }

  Embedding embedding(const json& arr, const char* what) const {
    if (!arr.is_array()) fail(std::string(what) + " must be an array");
    if (arr.size() != kEmbeddingDim)
      fail(std::string(what) + " has length " + std::to_string(arr.size()) + ", expected " +
           std::to_string(kEmbeddingDim));
    Embedding e;
    e.reserve(kEmbeddingDim);
    for (const auto& v : arr) {
      if (!v.is_number()) fail(std::string(what) + " contains a non-number");
      const auto x = static_cast<float>(v.get<double>());
      if (!std::isfinite(x)) fail(std::string(what) + " contains a non-finite value");
      e.push_back(x);
    }
    return e;
  }

 private:
  std::string path_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
};

void append_float(std::string& out, float v) {
  char buf[32];
  // 9 significant digits survive the decimal -> double -> float path exactly.
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 9);
  out.append(buf, res.ptr);
}

void append_embedding(std::string& out, const Embedding& e) {
  out.push_back('[');
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (i) out.push_back(',');
    append_float(out, e[i]);
  }
  out.push_back(']');
}

}  // namespace

Corpus load_corpus(const CorpusFiles& files) {
  Corpus corpus;
  std::unordered_map<std::string, std::size_t> event_index;

  {
    JsonlReader r(files.events);
    json obj;
    while (r.next(obj)) {
      Event e;
      e.event_id = r.field<std::string>(obj, "event_id");
      e.name = r.field<std::string>(obj, "name");
      e.days = r.field<std::vector<std::string>>(obj, "days");
      if (e.days.empty()) r.fail("event " + e.event_id + " declares no days");
      for (std::size_t i = 0; i < e.days.size(); ++i) {
        if (!is_iso_date(e.days[i])) r.fail("invalid date \"" + e.days[i] + "\"");
        if (i > 0 && !(e.days[i - 1] < e.days[i])) r.fail("days must be strictly increasing");
      }
      if (!event_index.emplace(e.event_id, corpus.events.size()).second)
        r.fail("duplicate event_id " + e.event_id);
      corpus.events.push_back(std::move(e));
    }
  }

  {
    JsonlReader r(files.queries);
    json obj;
    std::set<std::pair<std::string, std::string>> seen;
    while (r.next(obj)) {
      Query q;
      q.event_id = r.field<std::string>(obj, "event_id");
      q.query_id = r.field<std::string>(obj, "query_id");
      q.text = r.field<std::string>(obj, "text");
      auto it = event_index.find(q.event_id);
      if (it == event_index.end()) r.fail("unknown event_id " + q.event_id);
      if (!seen.emplace(q.event_id, q.query_id).second) r.fail("duplicate query_id " + q.query_id);
      corpus.events[it->second].queries.push_back(std::move(q));
    }
  }
  for (const auto& e : corpus.events)
    if (e.queries.empty())
      throw CorpusError(files.queries.string(), 0, "event " + e.event_id + " has no queries");

  // Day streams in event order, then declared day order.
  std::map<std::pair<std::string, std::string>, std::size_t> day_index;
  for (const auto& e : corpus.events) {
    for (const auto& d : e.days) {
      day_index.emplace(std::make_pair(e.event_id, d), corpus.days.size());
      corpus.days.push_back(DayStream{e.event_id, d, {}});
    }
  }

  {
    JsonlReader r(files.items);
    json obj;
    std::unordered_set<std::string> seen_ids;
    while (r.next(obj)) {
      StreamText t;
      t.text_id = r.field<std::string>(obj, "text_id");
      t.event_id = r.field<std::string>(obj, "event_id");
      const auto stream = r.field<std::string>(obj, "stream");
      auto parsed = parse_stream(stream);
      if (!parsed) r.fail("unknown stream \"" + stream + "\"");
      t.stream = *parsed;
      t.unix_ts = r.field<std::int64_t>(obj, "unix_ts");
      t.day = r.field<std::string>(obj, "day");
      t.text = r.field<std::string>(obj, "text");
      auto emb = obj.find("embedding");
      if (emb == obj.end()) r.fail("missing field \"embedding\"");
      t.embedding = r.embedding(*emb, "embedding");
      t.sc = r.field<int>(obj, "sc");

      auto ev = event_index.find(t.event_id);
      if (ev == event_index.end()) r.fail("unknown event_id " + t.event_id);
      if (t.sc < 0) r.fail("negative sc");
      const int q_count = corpus.events[ev->second].query_count();
      if (t.sc > q_count)
        r.fail("sc " + std::to_string(t.sc) + " exceeds query count " + std::to_string(q_count));
      if (utc_day(t.unix_ts) != t.day) r.fail("day " + t.day + " does not contain unix_ts");
      auto di = day_index.find({t.event_id, t.day});
      if (di == day_index.end()) r.fail("day " + t.day + " is not declared for event " + t.event_id);
      if (!seen_ids.insert(t.event_id + '\x1f' + t.text_id).second)
        r.fail("duplicate text_id " + t.text_id);
      corpus.days[di->second].items.push_back(std::move(t));
    }
  }
  for (auto& d : corpus.days) sort_day_stream(d);

  if (files.references) {
    JsonlReader r(*files.references);
    json obj;
    while (r.next(obj)) {
      ReferenceSummary ref;
      ref.event_id = r.field<std::string>(obj, "event_id");
      ref.day = r.field<std::string>(obj, "day");
      const auto kind = r.field<std::string>(obj, "kind");
      auto parsed = parse_reference_kind(kind);
      if (!parsed) r.fail("unknown reference kind \"" + kind + "\"");
      ref.kind = *parsed;
      ref.text = r.field<std::string>(obj, "text");
      if (auto k = obj.find("max_facts_k"); k != obj.end() && !k->is_null()) {
        ref.max_facts_k = r.field<int>(obj, "max_facts_k");
        if (*ref.max_facts_k <= 0) r.fail("max_facts_k must be positive");
      }
      if (ref.kind == ReferenceKind::Nist && !ref.max_facts_k) r.fail("nist reference without max_facts_k");
      if (auto se = obj.find("sentence_embeddings"); se != obj.end()) {
        if (!se->is_array()) r.fail("sentence_embeddings must be an array");
        for (const auto& v : *se) ref.sentence_embeddings.push_back(r.embedding(v, "sentence embedding"));
        if (ref.sentence_embeddings.size() != ref.sentences().size())
          r.fail("sentence_embeddings count does not match the number of sentences");
      }
      if (!day_index.contains({ref.event_id, ref.day}))
        r.fail("reference for undeclared event/day " + ref.event_id + "/" + ref.day);
      corpus.references.push_back(std::move(ref));
    }
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& dir) { return load_corpus(CorpusFiles::in_directory(dir)); }

std::string serialize_item(const StreamText& t) {
  std::string line;
  line.reserve(64 + t.text.size() + t.embedding.size() * 14);
  line += "{\"text_id\":" + json(t.text_id).dump();
  line += ",\"event_id\":" + json(t.event_id).dump();
  line += ",\"stream\":\"" + std::string(to_string(t.stream)) + "\"";
  line += ",\"unix_ts\":" + std::to_string(t.unix_ts);
  line += ",\"day\":" + json(t.day).dump();
  line += ",\"text\":" + json(t.text).dump();
  line += ",\"embedding\":";
  append_embedding(line, t.embedding);
  line += ",\"sc\":" + std::to_string(t.sc) + "}";
  return line;
}

std::string serialize_reference(const ReferenceSummary& ref) {
  std::string line = "{\"event_id\":" + json(ref.event_id).dump();
  line += ",\"day\":" + json(ref.day).dump();
  line += ",\"kind\":\"" + std::string(to_string(ref.kind)) + "\"";
  line += ",\"text\":" + json(ref.text).dump();
  if (ref.max_facts_k) line += ",\"max_facts_k\":" + std::to_string(*ref.max_facts_k);
  if (!ref.sentence_embeddings.empty()) {
    line += ",\"sentence_embeddings\":[";
    for (std::size_t i = 0; i < ref.sentence_embeddings.size(); ++i) {
      if (i) line.push_back(',');
      append_embedding(line, ref.sentence_embeddings[i]);
    }
    line += "]";
  }
  line += "}";
  return line;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open("events.jsonl");
    for (const auto& e : corpus.events)
      out << json{{"event_id", e.event_id}, {"name", e.name}, {"days", e.days}}.dump() << '\n';
  }
  {
    auto out = open("queries.jsonl");
    for (const auto& e : corpus.events)
      for (const auto& q : e.queries)
        out << json{{"event_id", q.event_id}, {"query_id", q.query_id}, {"text", q.text}}.dump() << '\n';
  }
  {
    auto out = open("items.jsonl");
    for (const auto& d : corpus.days)
      for (const auto& t : d.items) out << serialize_item(t) << '\n';
  }
  {
    auto out = open("references.jsonl");
    for (const auto& r : corpus.references) out << serialize_reference(r) << '\n';
  }
}

std::uint64_t corpus_fingerprint(const Corpus& corpus) {
  std::uint64_t h = fnv1a64("crisisdqn-corpus");
  auto mix = [&h](std::string_view s) {
    h = fnv1a64(s, h);
    h = fnv1a64(std::string_view("\x1f", 1), h);
  };
  for (const auto& e : corpus.events) {
    mix(e.event_id);
    mix(e.name);
    for (const auto& d : e.days) mix(d);
    for (const auto& q : e.queries) {
      mix(q.query_id);
      mix(q.text);
    }
  }
  for (const auto& d : corpus.days)
    for (const auto& t : d.items) mix(serialize_item(t));
  for (const auto& r : corpus.references) mix(serialize_reference(r));
  return h;
}

ValidationReport validate_corpus(const Corpus& corpus) {
  ValidationReport report;
  auto flag = [&report](std::string msg) { report.violations.push_back(std::move(msg)); };

  std::set<std::string> event_ids;
  for (const auto& e : corpus.events) {
    if (!event_ids.insert(e.event_id).second) flag("duplicate event " + e.event_id);
    report.queries_per_event[e.event_id] = e.query_count();
    report.texts_per_event[e.event_id] = 0;
    if (e.days.empty()) flag("event " + e.event_id + ": no days");
    for (std::size_t i = 0; i < e.days.size(); ++i) {
      if (!is_iso_date(e.days[i])) flag("event " + e.event_id + ": invalid date " + e.days[i]);
      if (i > 0 && !(e.days[i - 1] < e.days[i])) flag("event " + e.event_id + ": days not strictly increasing");
    }
    if (e.queries.empty()) flag("event " + e.event_id + ": no queries");
    std::set<std::string> qids;
    for (const auto& q : e.queries)
      if (!qids.insert(q.query_id).second) flag("event " + e.event_id + ": duplicate query " + q.query_id);
  }

  for (const auto& d : corpus.days) {
    const Event* ev = corpus.find_event(d.event_id);
    if (!ev) {
      flag("day stream for unknown event " + d.event_id);
      continue;
    }
    if (std::find(ev->days.begin(), ev->days.end(), d.day) == ev->days.end())
      flag("day " + d.day + " not declared for event " + d.event_id);
    report.texts_per_day[d.event_id][d.day] = d.items.size();
    report.texts_per_event[d.event_id] += d.items.size();

    std::set<std::string> ids;
    for (std::size_t i = 0; i < d.items.size(); ++i) {
      const auto& t = d.items[i];
      const std::string where = "text " + t.text_id + " (" + d.event_id + "/" + d.day + ")";
      report.sc_histogram[t.sc] += 1;
      if (t.embedding.size() != kEmbeddingDim)
        flag(where + ": embedding length " + std::to_string(t.embedding.size()));
      if (std::any_of(t.embedding.begin(), t.embedding.end(), [](float x) { return !std::isfinite(x); }))
        flag(where + ": non-finite embedding component");
      if (t.event_id != d.event_id) flag(where + ": event mismatch");
      if (t.day != d.day || utc_day(t.unix_ts) != t.day) flag(where + ": day does not contain unix_ts");
      if (t.sc < 0 || t.sc > ev->query_count()) flag(where + ": sc out of range");
      if (!ids.insert(t.text_id).second) flag(where + ": duplicate text_id");
      if (i > 0) {
        const auto& p = d.items[i - 1];
        if (p.unix_ts > t.unix_ts || (p.unix_ts == t.unix_ts && !(p.text_id < t.text_id)))
          flag(where + ": stream not sorted by (unix_ts, text_id)");
      }
    }
  }

  for (const auto& r : corpus.references) {
    const std::string where = "reference " + r.event_id + "/" + r.day;
    if (!corpus.find_day(r.event_id, r.day)) flag(where + ": unknown event/day");
    if (r.kind == ReferenceKind::Nist && !r.max_facts_k) flag(where + ": nist without max_facts_k");
    if (r.max_facts_k && *r.max_facts_k <= 0) flag(where + ": non-positive max_facts_k");
    if (!r.sentence_embeddings.empty()) {
      if (r.sentence_embeddings.size() != r.sentences().size()) flag(where + ": sentence embedding count");
      for (const auto& e : r.sentence_embeddings)
        if (e.size() != kEmbeddingDim) flag(where + ": sentence embedding length");
    }
  }
  return report;
}

}  // namespace crisisdqn
