#include "crisisdqn/annotation.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

namespace crisisdqn {

using json = nlohmann::json;

int WeakScoreTable::score(const std::string& text_id) const {
  auto it = sc.find(text_id);
  return it == sc.end() ? 0 : it->second;
}

WeakScoreTable aggregate_scores(std::span<const ConfidencePair> pairs, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0))
    throw AnnotationError("threshold must lie in [0, 1]");

  std::set<std::pair<std::string, std::string>> seen;
  WeakScoreTable table;
  for (const auto& p : pairs) {
    if (!(p.conf_a >= 0.0 && p.conf_a <= 1.0) || !(p.conf_b >= 0.0 && p.conf_b <= 1.0))
      throw AnnotationError("confidence outside [0, 1] for (" + p.text_id + ", " + p.query_id + ")");
    if (!seen.emplace(p.text_id, p.query_id).second)
      throw AnnotationError("duplicate pair (" + p.text_id + ", " + p.query_id + ")");

    auto& sc = table.sc[p.text_id];
    if (p.conf_a >= threshold && p.conf_b >= threshold) {
      ++sc;
      table.mean_confidence[p.text_id][p.query_id] = (p.conf_a + p.conf_b) / 2.0;
    }
  }
  return table;
}

std::vector<ConfidencePair> load_confidences(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw AnnotationError("cannot open " + path.string());
  std::vector<ConfidencePair> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto obj = json::parse(line);
      out.push_back(ConfidencePair{obj.at("text_id").get<std::string>(), obj.at("query_id").get<std::string>(),
                                   obj.at("conf_a").get<double>(), obj.at("conf_b").get<double>()});
    } catch (const json::exception& e) {
      throw AnnotationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_confidences(std::span<const ConfidencePair> pairs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw AnnotationError("cannot write " + path.string());
  for (const auto& p : pairs) {
    out << json{{"text_id", p.text_id}, {"query_id", p.query_id}, {"conf_a", p.conf_a}, {"conf_b", p.conf_b}}.dump()
        << '\n';
  }
}

void merge_scores(Corpus& corpus, const WeakScoreTable& table) {
  for (auto& day : corpus.days) {
    const Event* ev = corpus.find_event(day.event_id);
    const int limit = ev ? ev->query_count() : 0;
    for (auto& t : day.items) {
      t.sc = table.score(t.text_id);
      if (t.sc > limit)
        throw AnnotationError("text " + t.text_id + " answers " + std::to_string(t.sc) +
                              " queries but its event has " + std::to_string(limit));
    }
  }
}

}  // namespace crisisdqn
