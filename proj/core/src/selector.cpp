#include "crisisdqn/selector.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <unordered_map>

#include <json.hpp>
#include <spdlog/spdlog.h>

namespace crisisdqn {

using json = nlohmann::json;

LatencyStats LatencyStats::from(std::span<const double> seconds) {
  LatencyStats s;
  s.samples = seconds.size();
  if (seconds.empty()) return s;
  s.mean_seconds = std::accumulate(seconds.begin(), seconds.end(), 0.0) / static_cast<double>(seconds.size());
  if (seconds.size() > 1) {
    double ss = 0.0;
    for (double x : seconds) ss += (x - s.mean_seconds) * (x - s.mean_seconds);
    s.stdev_seconds = std::sqrt(ss / static_cast<double>(seconds.size() - 1));
  }
  return s;
}

SelectionResult select_day(const QNetwork& net, const DayStream& day, int budget_max, int q_count) {
  using clock = std::chrono::steady_clock;

  SelectionResult result;
  result.event_id = day.event_id;
  result.day = day.day;
  result.decision_seconds.reserve(day.items.size());

  Environment env(EnvConfig{budget_max, kDefaultKeepPenalty});
  env.reset(day, q_count);
  while (!env.terminal()) {
    const auto t0 = clock::now();
    std::array<float, 2> q{};
    bool ok = true;
    try {
      q = net.forward(env.observation());
    } catch (const NetworkError& e) {
      ok = false;
      spdlog::warn("skipping text {} ({}/{}): {}", env.current().text_id, day.event_id, day.day, e.what());
    }
    if (!ok) {
      ++result.skipped;
      const auto out = env.step(Action::Discard);
      result.forced_discards += out.forced_tail.size();
      continue;
    }

    const Action action = greedy_action(q);
    const StreamText& text = env.current();
    const double si_m = env.current_similarity();
    const std::size_t index = env.cursor();
    const auto out = env.step(action);
    const auto t1 = clock::now();

    result.decision_seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
    ++result.decisions_total;
    if (action == Action::Keep) result.kept.push_back(KeptText{text.text_id, importance(q), index, si_m, &text});
    result.forced_discards += out.forced_tail.size();
  }
  result.latency = LatencyStats::from(result.decision_seconds);
  return result;
}

std::string selection_record(const SelectionResult& result, const KeptText& kept) {
  return json{{"event_id", result.event_id},   {"day", result.day},
              {"text_id", kept.text_id},       {"importance", kept.importance},
              {"decision_index", kept.decision_index}, {"si_m", kept.si_m}}
      .dump();
}

void write_selection(std::span<const SelectionResult> results, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& r : results)
    for (const auto& k : r.kept) out << selection_record(r, k) << '\n';
}

std::vector<SelectionResult> load_selection(const std::filesystem::path& path, const Corpus& corpus) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());

  std::map<std::pair<std::string, std::string>, std::size_t> slot;
  std::vector<SelectionResult> results;
  for (const auto& d : corpus.days) {
    slot.emplace(std::make_pair(d.event_id, d.day), results.size());
    SelectionResult r;
    r.event_id = d.event_id;
    r.day = d.day;
    results.push_back(std::move(r));
  }

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fail = [&](const std::string& what) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + what);
    };
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(e.what());
    }
    try {
      const auto event_id = obj.at("event_id").get<std::string>();
      const auto day_id = obj.at("day").get<std::string>();
      auto it = slot.find({event_id, day_id});
      if (it == slot.end()) fail("unknown event/day " + event_id + "/" + day_id);
      const DayStream* day = corpus.find_day(event_id, day_id);
      KeptText k;
      k.text_id = obj.at("text_id").get<std::string>();
      k.importance = obj.at("importance").get<double>();
      k.decision_index = obj.at("decision_index").get<std::size_t>();
      k.si_m = obj.at("si_m").get<double>();
      if (k.decision_index >= day->items.size() || day->items[k.decision_index].text_id != k.text_id)
        fail("text " + k.text_id + " not found at decision_index");
      k.text = &day->items[k.decision_index];
      results[it->second].kept.push_back(std::move(k));
    } catch (const json::exception& e) {
      fail(e.what());
    }
  }
  return results;
}

std::string latency_json(std::span<const SelectionResult> results) {
  json days = json::array();
  std::map<std::string, std::vector<double>> per_event;
  std::vector<double> all;
  for (const auto& r : results) {
    days.push_back({{"event_id", r.event_id},
                    {"day", r.day},
                    {"decisions", r.decisions_total},
                    {"mean_seconds", r.latency.mean_seconds},
                    {"stdev_seconds", r.latency.stdev_seconds}});
    auto& bucket = per_event[r.event_id];
    bucket.insert(bucket.end(), r.decision_seconds.begin(), r.decision_seconds.end());
    all.insert(all.end(), r.decision_seconds.begin(), r.decision_seconds.end());
  }
  json events = json::array();
  for (const auto& [id, xs] : per_event) {
    const auto s = LatencyStats::from(xs);
    events.push_back(
        {{"event_id", id}, {"decisions", s.samples}, {"mean_seconds", s.mean_seconds}, {"stdev_seconds", s.stdev_seconds}});
  }
  const auto s = LatencyStats::from(all);
  json out{{"decisions", s.samples},
           {"mean_seconds", s.mean_seconds},
           {"stdev_seconds", s.stdev_seconds},
           {"events", events},
           {"days", days}};
  return out.dump(2);
}

}  // namespace crisisdqn
