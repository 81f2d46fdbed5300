#include "crisisdqn/timeline.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "crisisdqn/vecmath.hpp"

namespace crisisdqn {

using json = nlohmann::json;

const KeptText& Fact::representative() const {
  for (const auto& m : members)
    if (m.text_id == representative_id) return m;
  throw TimelineError("fact " + fact_id + " has no representative member");
}

namespace {

Fact make_fact(std::vector<KeptText> members, FactAggregate aggregate) {
  std::sort(members.begin(), members.end(),
            [](const KeptText& a, const KeptText& b) { return a.decision_index < b.decision_index; });
  Fact f;
  const KeptText* rep = &members.front();
  double sum = 0.0;
  for (const auto& m : members) {
    sum += m.importance;
    if (m.importance > rep->importance || (m.importance == rep->importance && m.text_id < rep->text_id)) rep = &m;
  }
  f.representative_id = rep->text_id;
  f.importance = aggregate == FactAggregate::Max ? rep->importance : sum / static_cast<double>(members.size());
  if (rep->text) {
    f.event_id = rep->text->event_id;
    f.day = rep->text->day;
  }
  f.fact_id = f.event_id + "/" + f.day + "/" + f.representative_id;

  bool seen[3] = {false, false, false};
  for (const auto& m : members) {
    f.sources.push_back(m.text_id);
    if (m.text) seen[static_cast<int>(m.text->stream)] = true;
  }
  for (int s = 0; s < 3; ++s)
    if (seen[s]) f.streams.push_back(static_cast<Stream>(s));
  f.members = std::move(members);
  return f;
}

}  // namespace

std::vector<Fact> cluster_facts(std::span<const KeptText> kept, const ClusterConfig& config) {
  std::vector<Fact> facts;
  if (kept.empty()) return facts;

  if (config.mode == GroupingMode::Flat) {
    for (const auto& k : kept) facts.push_back(make_fact({k}, config.aggregate));
    return facts;
  }

  for (const auto& k : kept)
    if (!k.text) throw TimelineError("topic grouping needs embeddings; kept text " + k.text_id + " is unresolved");

  const std::size_t n = kept.size();
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = 1.0 - cosine(kept[i].text->embedding, kept[j].text->embedding);
      dist[i * n + j] = dist[j * n + i] = d;
    }

  std::vector<std::vector<std::size_t>> clusters(n);
  for (std::size_t i = 0; i < n; ++i) clusters[i] = {i};
  std::vector<bool> active(n, true);

  while (true) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!active[j]) continue;
        if (dist[i * n + j] < best) {
          best = dist[i * n + j];
          bi = i;
          bj = j;
        }
      }
    }
    if (!(best <= config.tau)) break;

    // Average linkage (Lance-Williams update).
    const double ni = static_cast<double>(clusters[bi].size());
    const double nj = static_cast<double>(clusters[bj].size());
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      const double d = (ni * dist[bi * n + k] + nj * dist[bj * n + k]) / (ni + nj);
      dist[bi * n + k] = dist[k * n + bi] = d;
    }
    clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
    clusters[bj].clear();
    active[bj] = false;
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!active[i]) continue;
    std::vector<KeptText> members;
    for (std::size_t idx : clusters[i]) members.push_back(kept[idx]);
    facts.push_back(make_fact(std::move(members), config.aggregate));
  }
  return facts;
}

Timeline emit_timeline(std::vector<Fact> facts, std::optional<int> k) {
  if (k && *k <= 0) throw TimelineError("k must be positive");
  Timeline t;
  if (!facts.empty()) {
    t.event_id = facts.front().event_id;
    t.day = facts.front().day;
    for (const auto& f : facts)
      if (f.event_id != t.event_id || f.day != t.day) throw TimelineError("facts span more than one event-day");
  }
  std::sort(facts.begin(), facts.end(), [](const Fact& a, const Fact& b) {
    if (a.importance != b.importance) return a.importance > b.importance;
    return a.representative_id < b.representative_id;
  });
  if (k && facts.size() > static_cast<std::size_t>(*k)) facts.resize(static_cast<std::size_t>(*k));
  t.facts = std::move(facts);
  t.k_used = k;
  return t;
}

std::string fact_text(const Fact& fact, FactTextMode mode) {
  if (mode == FactTextMode::Representative) {
    const auto& rep = fact.representative();
    return rep.text ? rep.text->text : std::string();
  }
  std::string out;
  for (const auto& m : fact.members) {
    if (!m.text) continue;
    if (!out.empty()) out.push_back(' ');
    out += m.text->text;
  }
  return out;
}

std::vector<std::string> timeline_records(const Timeline& timeline, FactTextMode mode) {
  std::vector<std::string> lines;
  int rank = 1;
  for (const auto& f : timeline.facts) {
    json streams = json::array();
    for (auto s : f.streams) streams.push_back(std::string(to_string(s)));
    lines.push_back(json{{"event_id", timeline.event_id},
                         {"day", timeline.day},
                         {"rank", rank++},
                         {"fact_id", f.fact_id},
                         {"factText", fact_text(f, mode)},
                         {"importance", f.importance},
                         {"sources", f.sources},
                         {"streams", streams}}
                        .dump());
  }
  return lines;
}

void write_timelines(std::span<const Timeline> timelines, const std::filesystem::path& path, FactTextMode mode) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& t : timelines)
    for (const auto& line : timeline_records(t, mode)) out << line << '\n';
}

std::vector<TimelineRow> load_timeline_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<TimelineRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto obj = json::parse(line);
      TimelineRow r;
      r.event_id = obj.at("event_id").get<std::string>();
      r.day = obj.at("day").get<std::string>();
      r.rank = obj.at("rank").get<int>();
      r.fact_id = obj.at("fact_id").get<std::string>();
      r.fact_text = obj.at("factText").get<std::string>();
      r.importance = obj.at("importance").get<double>();
      r.sources = obj.at("sources").get<std::vector<std::string>>();
      r.streams = obj.at("streams").get<std::vector<std::string>>();
      rows.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

}  // namespace crisisdqn
