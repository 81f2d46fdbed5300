#include <algorithm>
#include <numeric>
#include <stdexcept>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "crisisdqn/agent.hpp"
#include "crisisdqn/evalkit.hpp"
#include "crisisdqn/selector.hpp"

namespace crisisdqn {

using json = nlohmann::json;

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::optional<int> day_k(const Corpus& corpus, const std::string& event_id, const std::string& day) {
  for (const auto* ref : corpus.references_for(event_id, day))
    if (ref->max_facts_k) return ref->max_facts_k;
  return std::nullopt;
}

}  // namespace

std::string CrossvalReport::to_json() const {
  json folds_json = json::array();
  for (const auto& f : folds) {
    folds_json.push_back(json{{"held_out_event", f.held_out_event},
                              {"train_events", f.train_events},
                              {"train_steps", f.train.steps},
                              {"train_episodes", f.train.episodes.size()},
                              {"final_take_rate", opt(f.final_take_rate)},
                              {"mean_kept_per_day", f.mean_kept_per_day},
                              {"mean_rouge2_f1", opt(f.mean_rouge2)},
                              {"mean_semantic_proxy", opt(f.mean_semantic)}});
  }
  return json{{"folds", folds_json},
              {"mean_kept_per_day", mean_kept_per_day},
              {"mean_rouge2_f1", opt(mean_rouge2)},
              {"mean_semantic_proxy", opt(mean_semantic)},
              {"mean_final_take_rate", opt(mean_final_take_rate)}}
      .dump(2);
}

CrossvalReport crossval(const Corpus& corpus, const TrainConfig& config, const CrossvalOptions& options) {
  if (corpus.events.size() < 2) throw std::invalid_argument("crossval needs at least two events");
  CrossvalReport report;
  std::vector<double> kept_means, rouge_means, sem_means, take_rates;

  for (const auto& held : corpus.events) {
    FoldReport fold;
    fold.held_out_event = held.event_id;
    TrainConfig fold_config = config;
    fold_config.train_events.clear();
    for (const auto& e : corpus.events)
      if (e.event_id != held.event_id) fold_config.train_events.push_back(e.event_id);
    fold.train_events = fold_config.train_events;
    spdlog::info("crossval: fold {} (train on {} events)", held.event_id, fold.train_events.size());

    auto result = train(corpus, fold_config);
    fold.train = std::move(result.report);
    if (fold.train.replay_events.contains(held.event_id))
      throw std::logic_error("crossval: held-out event " + held.event_id + " leaked into replay");

    std::vector<double> rates;
    const auto& eps = fold.train.episodes;
    const std::size_t from = eps.size() > options.take_rate_window ? eps.size() - options.take_rate_window : 0;
    for (std::size_t i = from; i < eps.size(); ++i)
      if (eps[i].take_rate) rates.push_back(*eps[i].take_rate);
    fold.final_take_rate = mean_of(rates);

    std::vector<TimelineRow> rows;
    std::vector<double> kept_counts;
    for (const auto* day : corpus.days_of(held.event_id)) {
      const auto sel = select_day(result.checkpoint.network, *day, config.budget_max, held.query_count());
      kept_counts.push_back(static_cast<double>(sel.kept.size()));
      if (sel.kept.empty()) continue;
      auto timeline = emit_timeline(cluster_facts(sel.kept, options.clustering), day_k(corpus, held.event_id, day->day));
      auto day_rows = to_rows(timeline, options.fact_text);
      rows.insert(rows.end(), day_rows.begin(), day_rows.end());
    }
    fold.mean_kept_per_day = mean_of(kept_counts).value_or(0.0);
    const std::string only[] = {held.event_id};
    const auto metrics = evaluate(corpus, rows, only);
    if (!metrics.rows.empty()) {
      fold.mean_rouge2 = metrics.overall.rouge2_f1;
      fold.mean_semantic = metrics.overall.semantic;
    }

    kept_means.push_back(fold.mean_kept_per_day);
    if (fold.mean_rouge2) rouge_means.push_back(*fold.mean_rouge2);
    if (fold.mean_semantic) sem_means.push_back(*fold.mean_semantic);
    if (fold.final_take_rate) take_rates.push_back(*fold.final_take_rate);
    report.folds.push_back(std::move(fold));
  }
  report.mean_kept_per_day = mean_of(kept_means).value_or(0.0);
  report.mean_rouge2 = mean_of(rouge_means);
  report.mean_semantic = mean_of(sem_means);
  report.mean_final_take_rate = mean_of(take_rates);
  return report;
}

}  // namespace crisisdqn
