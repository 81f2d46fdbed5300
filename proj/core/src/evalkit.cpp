#include "crisisdqn/evalkit.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "crisisdqn/vecmath.hpp"

namespace crisisdqn {

using json = nlohmann::json;

namespace {

bool is_unicode_space(char32_t cp) {
  return (cp >= 0x09 && cp <= 0x0D) || cp == 0x20 || cp == 0x85 || cp == 0xA0 || cp == 0x1680 ||
         (cp >= 0x2000 && cp <= 0x200A) || cp == 0x2028 || cp == 0x2029 || cp == 0x202F || cp == 0x205F ||
         cp == 0x3000;
}

// Decodes one UTF-8 sequence at s[i]; invalid bytes decode as themselves, length 1.
char32_t decode_utf8(std::string_view s, std::size_t i, std::size_t& len) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) {
    return i + k < s.size() && (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
  };
  auto byte = [&](std::size_t k) { return static_cast<char32_t>(static_cast<unsigned char>(s[i + k]) & 0x3F); };
  if (b0 < 0x80) {
    len = 1;
    return b0;
  }
  if ((b0 & 0xE0) == 0xC0 && cont(1)) {
    len = 2;
    return (static_cast<char32_t>(b0 & 0x1F) << 6) | byte(1);
  }
  if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
    len = 3;
    return (static_cast<char32_t>(b0 & 0x0F) << 12) | (byte(1) << 6) | byte(2);
  }
  if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
    len = 4;
    return (static_cast<char32_t>(b0 & 0x07) << 18) | (byte(1) << 12) | (byte(2) << 6) | byte(3);
  }
  len = 1;
  return b0;
}

bool is_ascii_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u);
}

std::string normalise_token(std::string_view raw) {
  std::size_t b = 0, e = raw.size();
  while (b < e && is_ascii_punct(raw[b])) ++b;
  while (e > b && is_ascii_punct(raw[e - 1])) --e;
  std::string out(raw.substr(b, e - b));
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

using BigramCounts = std::unordered_map<std::string, int>;

std::size_t add_bigrams(std::string_view text, BigramCounts& counts) {
  std::size_t total = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t nl = text.find('\n', start);
    const auto line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    const auto toks = rouge_tokens(line);
    for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
      std::string key = toks[i];
      key.push_back('\x1f');
      key += toks[i + 1];
      ++counts[key];
      ++total;
    }
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return total;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

double greedy_side(std::span<const Embedding> from, std::span<const Embedding> to) {
  double sum = 0.0;
  for (const auto& a : from) {
    double best = -1.0;
    for (const auto& b : to) best = std::max(best, cosine(a, b));
    sum += best;
  }
  return sum / static_cast<double>(from.size());
}

}  // namespace

std::vector<std::string> rouge_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0, tok_start = 0;
  bool in_token = false;
  while (i < text.size()) {
    std::size_t len = 1;
    const char32_t cp = decode_utf8(text, i, len);
    if (is_unicode_space(cp)) {
      if (in_token) {
        auto t = normalise_token(text.substr(tok_start, i - tok_start));
        if (!t.empty()) tokens.push_back(std::move(t));
        in_token = false;
      }
    } else if (!in_token) {
      in_token = true;
      tok_start = i;
    }
    i += len;
  }
  if (in_token) {
    auto t = normalise_token(text.substr(tok_start));
    if (!t.empty()) tokens.push_back(std::move(t));
  }
  return tokens;
}

double rouge2_f1(std::string_view candidate, std::string_view reference) {
  BigramCounts cand, ref;
  const std::size_t nc = add_bigrams(candidate, cand);
  const std::size_t nr = add_bigrams(reference, ref);
  if (nc == 0 || nr == 0) return 0.0;
  std::size_t overlap = 0;
  for (const auto& [bigram, count] : cand) {
    auto it = ref.find(bigram);
    if (it != ref.end()) overlap += static_cast<std::size_t>(std::min(count, it->second));
  }
  if (overlap == 0) return 0.0;
  const double p = static_cast<double>(overlap) / static_cast<double>(nc);
  const double r = static_cast<double>(overlap) / static_cast<double>(nr);
  return 2.0 * p * r / (p + r);
}

double semantic_score(std::span<const Embedding> candidate, std::span<const Embedding> reference) {
  if (candidate.empty() || reference.empty()) {
    spdlog::warn("semantic_score: empty {} side, scoring 0", candidate.empty() ? "candidate" : "reference");
    return 0.0;
  }
  const double p = greedy_side(candidate, reference);
  const double r = greedy_side(reference, candidate);
  if (p <= 0.0 || r <= 0.0) return 0.0;
  return 2.0 * p * r / (p + r);
}

MetricReport MetricReport::aggregate(std::vector<MetricRow> rows) {
  MetricReport report;
  report.rows = std::move(rows);
  std::map<ReferenceKind, std::pair<double, std::size_t>> sem;
  for (const auto& r : report.rows) {
    auto& m = report.per_kind[r.kind];
    m.rouge2_f1 += r.rouge2_f1;
    ++m.rows;
    if (r.semantic) {
      sem[r.kind].first += *r.semantic;
      ++sem[r.kind].second;
    }
  }
  double r2 = 0.0, s = 0.0;
  std::size_t s_kinds = 0;
  for (auto& [kind, m] : report.per_kind) {
    m.rouge2_f1 /= static_cast<double>(m.rows);
    if (auto it = sem.find(kind); it != sem.end()) {
      m.semantic = it->second.first / static_cast<double>(it->second.second);
      s += *m.semantic;
      ++s_kinds;
    }
    r2 += m.rouge2_f1;
    report.overall.rows += m.rows;
  }
  if (!report.per_kind.empty()) report.overall.rouge2_f1 = r2 / static_cast<double>(report.per_kind.size());
  if (s_kinds > 0) report.overall.semantic = s / static_cast<double>(s_kinds);
  return report;
}

std::string MetricReport::to_csv() const {
  std::string out = "event,day,kind,rouge2_f1,semantic\n";
  for (const auto& r : rows) {
    out += r.event_id + ',' + r.day + ',' + std::string(to_string(r.kind)) + ',' + fmt(r.rouge2_f1) + ',' +
           (r.semantic ? fmt(*r.semantic) : std::string()) + '\n';
  }
  return out;
}

std::string MetricReport::to_json() const {
  auto means = [](const MetricMeans& m) {
    json j{{"rouge2_f1", m.rouge2_f1}, {"rows", m.rows}};
    j["semantic_proxy"] = m.semantic ? json(*m.semantic) : json(nullptr);
    return j;
  };
  json kinds = json::object();
  for (const auto& [kind, m] : per_kind) kinds[std::string(to_string(kind))] = means(m);
  json j{{"per_kind", kinds},
         {"overall", means(overall)},
         {"semantic_label", "semantic (proxy): sentence-embedding greedy-matching F1, not BERT-Score"}};
  return j.dump(2);
}

std::vector<TimelineRow> to_rows(const Timeline& timeline, FactTextMode mode) {
  std::vector<TimelineRow> rows;
  int rank = 1;
  for (const auto& f : timeline.facts) {
    TimelineRow r;
    r.event_id = timeline.event_id;
    r.day = timeline.day;
    r.rank = rank++;
    r.fact_id = f.fact_id;
    r.fact_text = fact_text(f, mode);
    r.importance = f.importance;
    r.sources = f.sources;
    for (auto s : f.streams) r.streams.emplace_back(to_string(s));
    rows.push_back(std::move(r));
  }
  return rows;
}

MetricReport evaluate(const Corpus& corpus, std::span<const TimelineRow> rows, std::span<const std::string> events) {
  std::map<std::pair<std::string, std::string>, std::vector<const TimelineRow*>> by_day;
  for (const auto& r : rows) by_day[{r.event_id, r.day}].push_back(&r);
  for (auto& [_, v] : by_day)
    std::sort(v.begin(), v.end(), [](const TimelineRow* a, const TimelineRow* b) { return a->rank < b->rank; });

  std::vector<MetricRow> out;
  for (const auto& ref : corpus.references) {
    if (!events.empty() && std::find(events.begin(), events.end(), ref.event_id) == events.end()) continue;
    const auto it = by_day.find({ref.event_id, ref.day});
    std::string candidate;
    std::vector<Embedding> cand_emb;
    if (it != by_day.end()) {
      const DayStream* day = corpus.find_day(ref.event_id, ref.day);
      std::unordered_map<std::string_view, const StreamText*> index;
      if (day)
        for (const auto& t : day->items) index.emplace(t.text_id, &t);
      for (const auto* row : it->second) {
        if (!candidate.empty()) candidate.push_back('\n');
        candidate += row->fact_text;
        for (const auto& id : row->sources)
          if (auto t = index.find(id); t != index.end()) cand_emb.push_back(t->second->embedding);
      }
    }
    MetricRow m;
    m.event_id = ref.event_id;
    m.day = ref.day;
    m.kind = ref.kind;
    m.rouge2_f1 = rouge2_f1(candidate, ref.text);
    if (!ref.sentence_embeddings.empty()) m.semantic = semantic_score(cand_emb, ref.sentence_embeddings);
    out.push_back(std::move(m));
  }
  return MetricReport::aggregate(std::move(out));
}

std::string DiagnosticsReport::to_json() const {
  json rows = json::array();
  for (const auto& d : days)
    rows.push_back({{"event_id", d.event_id}, {"day", d.day}, {"selected", d.selected}, {"reference", d.reference}});
  json j{{"days", rows}, {"note", note}};
  j["correlation"] = correlation ? json(*correlation) : json(nullptr);
  return j.dump(2);
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) return std::nullopt;
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

DiagnosticsReport selection_diagnostics(std::vector<DayCount> days) {
  DiagnosticsReport report;
  report.days = std::move(days);
  if (report.days.size() < 2) {
    report.note = "fewer than two days with both counts; correlation undefined";
    return report;
  }
  std::vector<double> x, y;
  for (const auto& d : report.days) {
    x.push_back(d.selected);
    y.push_back(d.reference);
  }
  report.correlation = pearson(x, y);
  if (!report.correlation) report.note = "zero variance in selected or reference counts; correlation undefined";
  return report;
}

DiagnosticsReport selection_diagnostics(std::span<const SelectionResult> selections, const Corpus& corpus) {
  std::vector<DayCount> days;
  for (const auto& s : selections) {
    for (const auto* ref : corpus.references_for(s.event_id, s.day)) {
      if (!ref->max_facts_k) continue;
      days.push_back(DayCount{s.event_id, s.day, static_cast<double>(s.kept.size()),
                              static_cast<double>(*ref->max_facts_k)});
      break;
    }
  }
  return selection_diagnostics(std::move(days));
}

std::string LatencyBenchReport::to_json() const {
  json arr = json::array();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    arr.push_back({{"q_count", e.q_count},
                   {"decisions", e.stats.samples},
                   {"mean_seconds", e.stats.mean_seconds},
                   {"stdev_seconds", e.stats.stdev_seconds},
                   {"ratio_to_first", ratio_to_first[i]}});
  }
  return json{{"entries", arr}, {"note", note}}.dump(2);
}

LatencyBenchReport latency_bench(const QNetwork& net, const DayStream& day, std::span<const int> query_counts,
                                 int budget_max, int rounds) {
  if (query_counts.empty()) throw BenchError("latency_bench needs at least one query count");
  if (rounds < 1) throw BenchError("rounds must be >= 1");
  for (int q : query_counts)
    if (q < 1) throw BenchError("query counts must be >= 1");

  LatencyBenchReport report;
  std::vector<std::vector<double>> samples(query_counts.size());
  (void)select_day(net, day, budget_max, query_counts.front());  // warm-up
  for (int r = 0; r < rounds; ++r) {
    // Alternate the visiting order so no query count always runs first in a round.
    for (std::size_t j = 0; j < query_counts.size(); ++j) {
      const std::size_t i = r % 2 ? query_counts.size() - 1 - j : j;
      const auto res = select_day(net, day, budget_max, query_counts[i]);
      samples[i].insert(samples[i].end(), res.decision_seconds.begin(), res.decision_seconds.end());
    }
  }
  for (std::size_t i = 0; i < query_counts.size(); ++i)
    report.entries.push_back(LatencyEntry{query_counts[i], LatencyStats::from(samples[i])});
  for (const auto& e : report.entries)
    report.ratio_to_first.push_back(report.entries.front().stats.mean_seconds > 0.0
                                        ? e.stats.mean_seconds / report.entries.front().stats.mean_seconds
                                        : 0.0);
  if (day.items.size() < 100) {
    report.note = "stream has fewer than 100 decisions per pass; latency estimates are noisy";
    spdlog::warn("latency_bench: {}", report.note);
  }
  return report;
}

double paired_sign_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("paired_sign_test: length mismatch");
  int n = 0, wins = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i]) continue;
    ++n;
    if (a[i] > b[i]) ++wins;
  }
  if (n == 0) return 1.0;
  auto pmf = [n](int k) {
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) - n * std::log(2.0));
  };
  const int k = std::min(wins, n - wins);
  double tail = 0.0;
  for (int i = 0; i <= k; ++i) tail += pmf(i);
  return std::min(1.0, 2.0 * tail);
}

}  // namespace crisisdqn
