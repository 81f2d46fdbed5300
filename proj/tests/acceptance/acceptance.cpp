// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   acceptance            run everything
//   acceptance 1 7 8      run a subset (criteria 4, 5, 6 and 9 reuse the network trained by 3)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "crisisdqn/agent.hpp"
#include "crisisdqn/environment.hpp"
#include "crisisdqn/evalkit.hpp"
#include "crisisdqn/selector.hpp"
#include "crisisdqn/synthgen.hpp"
#include "crisisdqn/timeline.hpp"
#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "metric_fixtures.hpp"

using namespace crisisdqn;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const char* id, const Verdict& v) {
  std::printf("%s %s %s\n", v.pass ? "PASS" : "FAIL", id, v.detail.c_str());
  std::fflush(stdout);
  if (!v.pass) ++failures;
}

template <class... A>
std::string format(const char* f, A... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double cosine64(const Embedding& a, const Embedding& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += double(a[i]) * b[i];
    aa += double(a[i]) * a[i];
    bb += double(b[i]) * b[i];
  }
  return (aa == 0 || bb == 0) ? 0.0 : ab / std::sqrt(aa * bb);
}

double mean_pairwise_cosine(const std::vector<const Embedding*>& v) {
  double s = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j, ++n) s += cosine64(*v[i], *v[j]);
  return n ? s / static_cast<double>(n) : 0.0;
}

// ---------------------------------------------------------------------------

Verdict reward_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> sc_d(0, 60), q_d(1, 60), act_d(0, 1);
  std::uniform_real_distribution<double> si_d(-1.0, 1.0);
  auto direct = [](int sc, Action a, double si, int q) {
    if (sc == 0) return a == Action::Keep ? -5.0 : 1.0;
    const double n = double(sc) / double(q);
    return a == Action::Keep ? n * (1.0 - si) : -n * (1.0 - si);
  };
  double worst = 0.0, worst_env = 0.0;
  Environment env;
  for (int i = 0; i < 10000; ++i) {
    const int sc = sc_d(rng), q = q_d(rng);
    const Action a = act_d(rng) ? Action::Keep : Action::Discard;
    const double si = si_d(rng);
    worst = std::max(worst, std::abs(reward(sc, a, si, q) - direct(sc, a, si, q)));

    // Same tuple through an episode: keep an anchor, then decide on a text at angle acos(si).
    Embedding second(kEmbeddingDim, 0.0f);
    second[0] = static_cast<float>(si);
    second[1] = static_cast<float>(std::sqrt(1.0 - si * si));
    const auto day = fx::make_stream(
        {fx::make_text("anchor", 1, fx::basis(0), 0), fx::make_text("x", 2, second, sc)});
    env.reset(day, q);
    env.step(Action::Keep);
    const auto out = env.step(a);
    worst_env = std::max(worst_env, std::abs(out.reward - direct(sc, a, out.info.si_m, q)));
    worst_env = std::max(worst_env, std::abs(out.info.si_m - cosine64(fx::basis(0), second)));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && worst_env <= 1e-9 && secs < 1.0,
          format("10000 tuples, max |reward - formula| %.2e, via episodes %.2e, %.3fs (tol 1e-9, < 1s)", worst,
                 worst_env, secs)};
}

Verdict gradients() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(202);
  fx::GradCheckResult total;
  for (int n = 0; n < 10; ++n) {
    const BasicQNetwork<double> net(NetworkShape{static_cast<int>(kObservationDim), 16, 16, 2}, rng());
    const auto kind = n % 2 ? LossKind::Squared : LossKind::Huber;
    for (int b = 0; b < 10; ++b) {
      const auto batch = fx::random_batch(net, 4, rng);
      const auto r = fx::gradient_check(net, batch, kind, 1e-4);
      total.checked += r.checked;
      total.skipped += r.skipped;
      total.failures += r.failures;
      total.max_rel_error = std::max(total.max_rel_error, r.max_rel_error);
    }
  }
  const double secs = seconds_since(t0);
  return {total.failures == 0 && total.checked > 20 * total.skipped && secs < 60.0,
          format("10 nets x 10 batches, %zu params checked, %zu skipped at kinks, max rel err %.2e, %.1fs "
                 "(tol 1e-4, < 60s)",
                 total.checked, total.skipped, total.max_rel_error, secs)};
}

// ---------------------------------------------------------------------------

TrainConfig desk_config() {
  TrainConfig c;
  c.total_steps = 200000;
  c.epsilon.decay_steps = 100000;
  c.train_interval = 4;
  c.gamma = 0.5;
  return c;
}

struct Trained {
  SynthCorpus synth;
  QNetwork net;
};

std::optional<Trained> trained;

Verdict learning_signal() {
  SynthCorpus synth = generate(SynthConfig{});
  std::map<const DayStream*, double> oracle;
  for (const auto& d : synth.corpus.days) oracle[&d] = oracle_policy(d, 52).episode_return;

  struct Ep {
    double ret, oracle, take0, take_inf;
  };
  std::vector<Ep> eps;
  const auto t0 = Clock::now();
  auto result = train(synth.corpus, desk_config(), [&](const EpisodeLog& log) {
    double ret = 0;
    int n0 = 0, k0 = 0, np = 0, kp = 0;
    for (const auto& d : log.decisions) {
      ret += d.reward;
      if (d.forced) continue;
      const auto& t = log.stream->items[d.index];
      if (t.sc == 0) {
        ++n0;
        k0 += d.action == Action::Keep;
      } else if (!synth.truth.at(t.text_id).duplicate_of) {
        ++np;
        kp += d.action == Action::Keep;
      }
    }
    eps.push_back({ret, oracle.at(log.stream), n0 ? double(k0) / n0 : 0.0, np ? double(kp) / np : 0.0});
  });
  const double secs = seconds_since(t0);
  const std::size_t m = std::min<std::size_t>(50, eps.size());
  double ret = 0, orc = 0, t0r = 0, tinf = 0;
  for (std::size_t i = eps.size() - m; i < eps.size(); ++i) {
    ret += eps[i].ret;
    orc += eps[i].oracle;
    t0r += eps[i].take0;
    tinf += eps[i].take_inf;
  }
  ret /= double(m), orc /= double(m), t0r /= double(m), tinf /= double(m);
  const double ratio = ret / orc;
  trained = Trained{std::move(synth), result.checkpoint.network};
  return {m == 50 && t0r < 0.10 && tinf > 0.80 && ratio >= 0.70 && secs < 1800.0,
          format("last %zu episodes: sc=0 take-rate %.3f (< 0.10), sc>0 non-dup take-rate %.3f (> 0.80), "
                 "return %.1f vs oracle %.1f = %.2f (>= 0.70), %.0fs train (< 1800s)",
                 m, t0r, tinf, ret, orc, ratio, secs)};
}

// Held-out events E05..E24 of a 24-event corpus sharing the training corpus's first four.
struct HeldOut {
  SynthCorpus synth;
  std::vector<SelectionResult> selections;
};

std::optional<HeldOut> held_out;

const HeldOut& held_out_selections() {
  if (!held_out) {
    SynthConfig big;
    big.n_events = 24;
    HeldOut h{generate(big), {}};
    for (std::size_t e = 4; e < h.synth.corpus.events.size(); ++e) {
      const auto& ev = h.synth.corpus.events[e];
      for (const auto* day : h.synth.corpus.days_of(ev.event_id))
        h.selections.push_back(select_day(trained->net, *day, kDefaultBudget, ev.query_count()));
    }
    held_out = std::move(h);
  }
  return *held_out;
}

Verdict redundancy() {
  const auto& h = held_out_selections();
  std::mt19937_64 rng(404);
  std::size_t pairs = 0, both = 0, inf_pairs = 0, inf_both = 0;
  std::map<std::string, std::pair<double, double>> per_event;  // kept, random
  for (const auto& sel : h.selections) {
    const DayStream& day = *h.synth.corpus.find_day(sel.event_id, sel.day);
    std::set<std::string> kept;
    std::vector<const Embedding*> kept_emb;
    for (const auto& k : sel.kept) {
      kept.insert(k.text_id);
      kept_emb.push_back(&k.text->embedding);
    }
    for (const auto& t : day.items) {
      const auto& truth = h.synth.truth.at(t.text_id);
      if (!truth.duplicate_of) continue;
      const bool b = kept.count(t.text_id) && kept.count(*truth.duplicate_of);
      ++pairs, both += b;
      if (truth.informative) ++inf_pairs, inf_both += b;
    }
    std::vector<std::size_t> idx(day.items.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<const Embedding*> random_emb;
    for (std::size_t i = 0; i < kept_emb.size(); ++i) random_emb.push_back(&day.items[idx[i]].embedding);
    per_event[sel.event_id].first += mean_pairwise_cosine(kept_emb);
    per_event[sel.event_id].second += mean_pairwise_cosine(random_emb);
  }
  int wins = 0;
  for (const auto& [_, v] : per_event) wins += v.first <= v.second;
  const double rate = double(both) / double(pairs);
  return {rate < 0.20 && wins >= 16 && per_event.size() == 20,
          format("both members kept in %zu/%zu planted pairs = %.3f (< 0.20; informative pairs only: %.3f); "
                 "kept-set cosine <= random subset in %d/%zu held-out events (>= 16/20)",
                 both, pairs, rate, double(inf_both) / double(inf_pairs), wins, per_event.size())};
}

Verdict query_independence() {
  const DayStream& day = trained->synth.corpus.days.front();
  const int budget = static_cast<int>(day.items.size());  // no forced discards: every text is a decision
  const std::vector<int> qs{1, 52};
  const int rounds = 200;
  const auto bench = latency_bench(trained->net, day, qs, budget, rounds);
  const double ratio = bench.entries[1].stats.mean_seconds / bench.entries[0].stats.mean_seconds;
  const auto n = std::min(bench.entries[0].stats.samples, bench.entries[1].stats.samples);
  return {n >= 5000 && ratio >= 0.95 && ratio <= 1.05,
          format("mean per-decision latency q=1 %.2fus, q=52 %.2fus, ratio %.4f over %zu decisions each "
                 "(in [0.95, 1.05], >= 5000)",
                 bench.entries[0].stats.mean_seconds * 1e6, bench.entries[1].stats.mean_seconds * 1e6, ratio, n)};
}

Verdict budget_and_ordering() {
  const auto& h = held_out_selections();
  std::size_t max_kept = 0, bad_order = 0, bad_keep = 0, kept_total = 0, timelines = 0;
  auto check_day = [&](const SelectionResult& sel, const QNetwork& net) {
    max_kept = std::max(max_kept, sel.kept.size());
    // Recompute each kept decision's observation and Q-values independently.
    std::vector<const Embedding*> before;
    for (std::size_t j = 0; j < sel.kept.size(); ++j) {
      const auto& k = sel.kept[j];
      double si = before.empty() ? 0.0 : -1.0;
      for (const auto* e : before) si = std::max(si, cosine64(*e, k.text->embedding));
      Observation obs(k.text->embedding.begin(), k.text->embedding.end());
      obs.push_back(static_cast<float>(double(kDefaultBudget - int(j)) / kDefaultBudget));
      obs.push_back(static_cast<float>(si));
      const auto q = net.forward(obs);
      if (q[0] < q[1] - 1e-5f || k.importance < 0.0) ++bad_keep;
      before.push_back(&k.text->embedding);
      ++kept_total;
    }
    const auto tl = emit_timeline(cluster_facts(sel.kept));
    ++timelines;
    for (std::size_t i = 1; i < tl.facts.size(); ++i)
      if (tl.facts[i].importance > tl.facts[i - 1].importance) ++bad_order;
  };
  for (const auto& sel : h.selections) check_day(sel, trained->net);

  // A network indifferent between actions keeps everything it may: the budget must hold it at 300.
  const auto keep_all = QNetwork::zeros(NetworkShape{});
  std::size_t saturated = 0;
  for (const auto& day : trained->synth.corpus.days) {
    const auto sel = select_day(keep_all, day);
    saturated += sel.kept.size() == kDefaultBudget && sel.forced_discards == day.items.size() - kDefaultBudget;
    check_day(sel, keep_all);
  }
  return {max_kept <= kDefaultBudget && bad_order == 0 && bad_keep == 0 &&
              saturated == trained->synth.corpus.days.size(),
          format("max kept per day %zu (<= 300; %zu/%zu saturated days capped at 300), %zu timelines with "
                 "%zu importance inversions, %zu/%zu kept texts with Q_keep < Q_discard",
                 max_kept, saturated, trained->synth.corpus.days.size(), timelines, bad_order, bad_keep,
                 kept_total)};
}

Verdict metrics() {
  std::size_t rouge_ok = 0, sem_ok = 0, identical_ok = 0, identical = 0;
  const auto rc = fx::rouge_cases();
  for (const auto& c : rc) rouge_ok += std::abs(rouge2_f1(c.candidate, c.reference) - c.expected) <= 1e-15;
  const auto sc = fx::semantic_cases();
  for (const auto& c : sc) sem_ok += std::abs(semantic_score(c.candidate, c.reference) - c.expected) <= 1e-9;
  for (const char* s : {"the fire spread north overnight", "Roads CLOSED near the river.\nShelter open",
                        "evacuation order lifted for zone 3"}) {
    ++identical;
    identical_ok += rouge2_f1(s, s) == 1.0;
  }
  std::mt19937_64 rng(707);
  std::vector<Embedding> same{fx::random_unit(rng), fx::random_unit(rng), fx::random_unit(rng)};
  ++identical;
  identical_ok += semantic_score(same, same) == 1.0;
  return {rouge_ok == rc.size() && rc.size() >= 10 && sem_ok == sc.size() && identical_ok == identical,
          format("ROUGE-2 fixtures %zu/%zu exact (>= 10), semantic fixtures %zu/%zu within 1e-9, "
                 "identical inputs score exactly 1.0 in %zu/%zu",
                 rouge_ok, rc.size(), sem_ok, sc.size(), identical_ok, identical)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict determinism() {
  const fs::path root = fs::temp_directory_path() / ("crisisdqn-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  std::ofstream(root / "synth.toml") << "n_events = 2\ndays_per_event = 2\ntexts_per_day = 200\n";
  std::ofstream(root / "train.toml") << "total_steps = 3000\nlearning_starts = 200\nseed = 9\n"
                                        "[epsilon]\ndecay_steps = 2000\n";
  auto run = [&](std::vector<std::string> args) {
    args.insert(args.begin(), {"--log-level", "warn"});
    return cli::dispatch(args);
  };
  const std::string corpus = (root / "corpus").string();
  int rc = run({"synth", "--config", (root / "synth.toml").string(), "--out", corpus});
  for (const char* rep : {"a", "b"}) {
    const fs::path out = root / rep;
    rc |= run({"train", "--corpus", corpus, "--config", (root / "train.toml").string(), "--out",
               (out / "train").string()});
    rc |= run({"select", "--corpus", corpus, "--checkpoint", (out / "train" / "checkpoint.bin").string(), "--out",
               (out / "select").string()});
    rc |= run({"timeline", "--corpus", corpus, "--selection", (out / "select" / "selection.jsonl").string(),
               "--out", (out / "timeline").string()});
    rc |= run({"eval", "--corpus", corpus, "--timeline", (out / "timeline" / "timeline.jsonl").string(),
               "--selection", (out / "select" / "selection.jsonl").string(), "--out", (out / "eval").string()});
  }
  std::size_t compared = 0, differing = 0;
  std::string first_diff;
  for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
    if (!entry.is_regular_file()) continue;
    const auto name = entry.path().filename().string();
    if (name == "manifest.json" || name == "latency.json") continue;  // wall-clock content
    const auto twin = root / "b" / fs::relative(entry.path(), root / "a");
    ++compared;
    if (!fs::exists(twin) || slurp(entry.path()) != slurp(twin)) {
      ++differing;
      if (first_diff.empty()) first_diff = fs::relative(entry.path(), root / "a").string();
    }
  }
  fs::remove_all(root);
  return {rc == 0 && compared >= 8 && differing == 0,
          format("two train/select/timeline/eval runs: %zu files compared, %zu differ%s%s (exit codes %s)", compared,
                 differing, first_diff.empty() ? "" : ", first: ", first_diff.c_str(), rc ? "nonzero" : "all 0")};
}

Verdict diagnostics() {
  const auto& h = held_out_selections();
  const auto d = selection_diagnostics(h.selections, h.synth.corpus);
  return {d.correlation && *d.correlation > 0.6,
          format("Pearson(kept count, reference fact count) over %zu held-out days = %s (> 0.6)", d.days.size(),
                 d.correlation ? format("%.3f", *d.correlation).c_str() : "undefined")};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  auto wanted = [&](int n) { return only.empty() || only.count(n); };
  const bool need_training = wanted(3) || wanted(4) || wanted(5) || wanted(6) || wanted(9);

  try {
    if (wanted(1)) report("AC-1", reward_oracle());
    if (wanted(2)) report("AC-2", gradients());
    if (need_training) {
      const auto v = learning_signal();
      if (wanted(3)) report("AC-3", v);
    }
    if (wanted(4)) report("AC-4", redundancy());
    if (wanted(5)) report("AC-5", query_independence());
    if (wanted(6)) report("AC-6", budget_and_ordering());
    if (wanted(7)) report("AC-7", metrics());
    if (wanted(8)) report("AC-8", determinism());
    if (wanted(9)) report("AC-9", diagnostics());
  } catch (const std::exception& e) {
    std::printf("FAIL acceptance aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%d criteria failed\n", failures);
  return failures ? 1 : 0;
}
