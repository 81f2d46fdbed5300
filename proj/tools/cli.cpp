#include "cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>
#include <toml.hpp>

#include "crisisdqn/agent.hpp"
#include "crisisdqn/annotation.hpp"
#include "crisisdqn/checkpoint.hpp"
#include "crisisdqn/corpus.hpp"
#include "crisisdqn/evalkit.hpp"
#include "crisisdqn/selector.hpp"
#include "crisisdqn/synthgen.hpp"
#include "crisisdqn/timeline.hpp"
#include "crisisdqn/vecmath.hpp"

#ifndef CRISISDQN_VERSION
#define CRISISDQN_VERSION "dev"
#endif

namespace crisisdqn::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input problems that are the caller's fault (bad config values, corpus violations).
struct InvalidInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string hex(std::uint64_t v) {
  char buf[17];
  return std::string(hex64(v, buf));
}

// ---- config files -------------------------------------------------------------

json toml_to_json(const toml::node& node) {
  if (auto t = node.as_table()) {
    json j = json::object();
    for (const auto& [k, v] : *t) j[std::string(k.str())] = toml_to_json(v);
    return j;
  }
  if (auto a = node.as_array()) {
    json j = json::array();
    for (const auto& v : *a) j.push_back(toml_to_json(v));
    return j;
  }
  if (auto v = node.as_string()) return v->get();
  if (auto v = node.as_integer()) return v->get();
  if (auto v = node.as_floating_point()) return v->get();
  if (auto v = node.as_boolean()) return v->get();
  throw InvalidInput("config: dates and times are not supported");
}

void json_to_toml(const json& j, toml::table& out);

toml::array json_array_to_toml(const json& j) {
  toml::array arr;
  for (const auto& v : j) {
    if (v.is_object()) {
      toml::table t;
      json_to_toml(v, t);
      arr.push_back(std::move(t));
    } else if (v.is_array()) {
      arr.push_back(json_array_to_toml(v));
    } else if (v.is_string()) {
      arr.push_back(v.get<std::string>());
    } else if (v.is_boolean()) {
      arr.push_back(v.get<bool>());
    } else if (v.is_number_integer()) {
      arr.push_back(v.get<std::int64_t>());
    } else if (v.is_number()) {
      arr.push_back(v.get<double>());
    }
  }
  return arr;
}

void json_to_toml(const json& j, toml::table& out) {
  for (const auto& [k, v] : j.items()) {
    if (v.is_object()) {
      toml::table t;
      json_to_toml(v, t);
      out.insert_or_assign(k, std::move(t));
    } else if (v.is_array()) {
      out.insert_or_assign(k, json_array_to_toml(v));
    } else if (v.is_string()) {
      out.insert_or_assign(k, v.get<std::string>());
    } else if (v.is_boolean()) {
      out.insert_or_assign(k, v.get<bool>());
    } else if (v.is_number_integer()) {
      out.insert_or_assign(k, v.get<std::int64_t>());
    } else if (v.is_number()) {
      out.insert_or_assign(k, v.get<double>());
    }
  }
}

std::string as_toml(const std::string& json_text) {
  toml::table t;
  json_to_toml(json::parse(json_text), t);
  std::ostringstream out;
  out << toml::toml_formatter{t, toml::toml_formatter::default_flags | toml::format_flags::relaxed_float_precision}
      << '\n';
  return out.str();
}

// TOML by default; a .json extension is read as JSON. Returns the config as JSON text.
std::string read_config(const std::string& path) {
  if (path.empty()) return "{}";
  if (!fs::exists(path)) throw InvalidInput("config file not found: " + path);
  if (fs::path(path).extension() == ".json") {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  try {
    return toml_to_json(toml::parse_file(path)).dump();
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << path << ": " << e.description() << " (line " << e.source().begin.line << ")";
    throw InvalidInput(msg.str());
  }
}

template <class F>
auto parse_config(F&& f, const std::string& text) {
  try {
    return f(text);
  } catch (const std::invalid_argument& e) {
    throw InvalidInput(e.what());
  }
}

struct TimelineConfig {
  ClusterConfig cluster;
  FactTextMode fact_text = FactTextMode::Concatenated;
  int k = 0;  // 0: the day's reference fact count, untruncated when there is none

  std::string to_json() const {
    return json{{"grouping", cluster.mode == GroupingMode::Flat ? "flat" : "topic"},
                {"tau", cluster.tau},
                {"aggregate", cluster.aggregate == FactAggregate::Max ? "max" : "mean"},
                {"fact_text", fact_text == FactTextMode::Concatenated ? "concatenated" : "representative"},
                {"k", k}}
        .dump(2);
  }

  static TimelineConfig from_json(const std::string& text) {
    TimelineConfig c;
    const json j = json::parse(text);
    for (const auto& [key, _] : j.items())
      if (key != "grouping" && key != "tau" && key != "aggregate" && key != "fact_text" && key != "k")
        throw std::invalid_argument("timeline config: unknown key \"" + key + "\"");
    const auto grouping = j.value("grouping", std::string("flat"));
    if (grouping != "flat" && grouping != "topic") throw std::invalid_argument("timeline config: grouping is flat|topic");
    c.cluster.mode = grouping == "flat" ? GroupingMode::Flat : GroupingMode::Topic;
    c.cluster.tau = j.value("tau", c.cluster.tau);
    if (!(c.cluster.tau >= 0.0 && c.cluster.tau <= 2.0)) throw std::invalid_argument("timeline config: tau in [0,2]");
    const auto agg = j.value("aggregate", std::string("max"));
    if (agg != "max" && agg != "mean") throw std::invalid_argument("timeline config: aggregate is max|mean");
    c.cluster.aggregate = agg == "max" ? FactAggregate::Max : FactAggregate::Mean;
    const auto ft = j.value("fact_text", std::string("concatenated"));
    if (ft != "concatenated" && ft != "representative")
      throw std::invalid_argument("timeline config: fact_text is concatenated|representative");
    c.fact_text = ft == "concatenated" ? FactTextMode::Concatenated : FactTextMode::Representative;
    c.k = j.value("k", c.k);
    if (c.k < 0) throw std::invalid_argument("timeline config: k must be >= 0");
    return c;
  }
};

// ---- outputs --------------------------------------------------------------------

fs::path resolve_out(const std::string& out) {
  fs::path p(out);
  if (const char* root = std::getenv(kOutRootEnv); root && *root && p.is_relative()) p = fs::path(root) / p;
  fs::create_directories(p);
  return p;
}

void write_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

class Manifest {
 public:
  Manifest(std::string command, const std::vector<std::string>& args)
      : command_(std::move(command)), args_(args), start_(std::chrono::steady_clock::now()) {}

  void config(const std::string& canonical_json) { config_hash_ = hex(fnv1a64(canonical_json)); }
  void config_hash(std::uint64_t h) { config_hash_ = hex(h); }
  void corpus(const Corpus& c) { corpus_hash_ = hex(corpus_fingerprint(c)); }
  void seed(std::uint64_t s) { seed_ = s; }
  void output(const std::string& name) { outputs_.push_back(name); }

  void write(const fs::path& dir) const {
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
    json j{{"command", command_},
           {"argv", args_},
           {"config_hash", config_hash_ ? json(*config_hash_) : json(nullptr)},
           {"corpus_hash", corpus_hash_ ? json(*corpus_hash_) : json(nullptr)},
           {"seed", seed_ ? json(*seed_) : json(nullptr)},
           {"tool_version", CRISISDQN_VERSION},
           {"finished_at", stamp},
           {"wall_clock_seconds", wall},
           {"outputs", outputs_}};
    write_atomic(dir / "manifest.json", j.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::vector<std::string> args_;
  std::chrono::steady_clock::time_point start_;
  std::optional<std::string> config_hash_;
  std::optional<std::string> corpus_hash_;
  std::optional<std::uint64_t> seed_;
  std::vector<std::string> outputs_;
};

Corpus open_corpus(const std::string& dir) {
  if (dir.empty()) throw UsageError("--corpus is required");
  return load_corpus(fs::path(dir));
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string(flag) + " is required");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<std::string> pick_events(const Corpus& corpus, const std::string& list) {
  auto events = split_list(list);
  for (const auto& e : events)
    if (!corpus.find_event(e)) throw InvalidInput("unknown event " + e);
  if (events.empty())
    for (const auto& e : corpus.events) events.push_back(e.event_id);
  return events;
}

std::string train_summary(const TrainReport& report, const TrainConfig& config) {
  const std::size_t n = report.episodes.size();
  const std::size_t from = n > 50 ? n - 50 : 0;
  double ret = 0.0, rate = 0.0;
  std::size_t rated = 0;
  for (std::size_t i = from; i < n; ++i) {
    ret += report.episodes[i].episode_return;
    if (report.episodes[i].take_rate) {
      rate += *report.episodes[i].take_rate;
      ++rated;
    }
  }
  json j{{"steps", report.steps},
         {"updates", report.updates},
         {"episodes", n},
         {"config_hash", hex(config_hash(config))},
         {"replay_events", report.replay_events},
         {"last50_mean_return", n ? json(ret / static_cast<double>(n - from)) : json(nullptr)},
         {"last50_mean_take_rate", rated ? json(rate / static_cast<double>(rated)) : json(nullptr)}};
  return j.dump(2) + "\n";
}

// ---- subcommands ----------------------------------------------------------------

struct Options {
  std::string corpus, config, out, checkpoint, selection, timeline, confidences, events, query_counts = "1,52";
  std::string event, day;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool print_config = false;
  double threshold = kDefaultConfidenceThreshold;
  int budget = kDefaultBudget;
  int rounds = 5;
};

int cmd_synth(const Options& o, Manifest& m) {
  if (o.print_config) {
    std::cout << as_toml(to_json(SynthConfig{}));
    return kExitOk;
  }
  require(o.out, "--out");
  auto config = parse_config(synth_config_from_json, read_config(o.config));
  if (o.seed_set) config.seed = o.seed;
  const auto dir = resolve_out(o.out);
  spdlog::info("synth: {} events x {} days x {} texts (seed {})", config.n_events, config.days_per_event,
               config.texts_per_day, config.seed);
  const auto synth = generate(config);
  write_synth(synth, dir);
  m.config(to_json(config));
  m.corpus(synth.corpus);
  m.seed(config.seed);
  for (const char* f : {"events.jsonl", "queries.jsonl", "items.jsonl", "references.jsonl", "confidences.jsonl",
                        "ground_truth.jsonl"})
    m.output(f);
  m.write(dir);
  return kExitOk;
}

int cmd_validate(const Options& o, Manifest& m) {
  const auto corpus = open_corpus(o.corpus);
  const auto report = validate_corpus(corpus);
  json hist = json::object();
  for (const auto& [sc, n] : report.sc_histogram) hist[std::to_string(sc)] = n;
  json j{{"ok", report.ok()},
         {"texts_per_event", report.texts_per_event},
         {"texts_per_day", report.texts_per_day},
         {"queries_per_event", report.queries_per_event},
         {"sc_histogram", hist},
         {"violations", report.violations}};
  for (const auto& v : report.violations) spdlog::error("validate: {}", v);
  spdlog::info("validate: {} texts, {} violations", corpus.text_count(), report.violations.size());
  if (!o.out.empty()) {
    const auto dir = resolve_out(o.out);
    write_atomic(dir / "validation.json", j.dump(2) + "\n");
    m.corpus(corpus);
    m.output("validation.json");
    m.write(dir);
  }
  return report.ok() ? kExitOk : kExitInvalid;
}

int cmd_merge_scores(const Options& o, Manifest& m) {
  require(o.confidences, "--confidences");
  require(o.out, "--out");
  auto corpus = open_corpus(o.corpus);
  const auto table = aggregate_scores(load_confidences(o.confidences), o.threshold);
  merge_scores(corpus, table);
  const auto dir = resolve_out(o.out);
  write_corpus(corpus, dir);
  m.config(json{{"threshold", o.threshold}}.dump());
  m.corpus(corpus);
  for (const char* f : {"events.jsonl", "queries.jsonl", "items.jsonl", "references.jsonl"}) m.output(f);
  m.write(dir);
  return kExitOk;
}

TrainConfig load_train_config(const Options& o) {
  auto config = parse_config(train_config_from_json, read_config(o.config));
  if (o.seed_set) config.seed = o.seed;
  return config;
}

int cmd_train(const Options& o, Manifest& m) {
  if (o.print_config) {
    std::cout << as_toml(to_json(TrainConfig{}));
    return kExitOk;
  }
  require(o.out, "--out");
  const auto corpus = open_corpus(o.corpus);
  const auto config = load_train_config(o);
  const auto dir = resolve_out(o.out);
  auto result = train(corpus, config, [](const EpisodeLog& log) {
    if (log.episode % 10 == 0)
      spdlog::info("train: episode {} step {} epsilon {:.3f} take_rate {:.3f}", log.episode, log.end_step, log.epsilon,
                   take_rate(log.decisions).value_or(0.0));
  });
  save_checkpoint(result.checkpoint, dir / "checkpoint.bin");
  write_atomic(dir / "train_report.csv", result.report.to_csv());
  write_atomic(dir / "train_summary.json", train_summary(result.report, config));
  m.config_hash(config_hash(config));
  m.corpus(corpus);
  m.seed(config.seed);
  for (const char* f : {"checkpoint.bin", "train_report.csv", "train_summary.json"}) m.output(f);
  m.write(dir);
  spdlog::info("train: {} steps, {} episodes in {:.1f}s", result.report.steps, result.report.episodes.size(),
               result.report.wall_clock_seconds);
  return kExitOk;
}

int cmd_crossval(const Options& o, Manifest& m) {
  if (o.print_config) {
    std::cout << as_toml(to_json(TrainConfig{}));
    return kExitOk;
  }
  require(o.out, "--out");
  const auto corpus = open_corpus(o.corpus);
  const auto config = load_train_config(o);
  const auto dir = resolve_out(o.out);
  const auto report = crossval(corpus, config);
  write_atomic(dir / "crossval.json", report.to_json() + "\n");
  m.config_hash(config_hash(config));
  m.corpus(corpus);
  m.seed(config.seed);
  m.output("crossval.json");
  m.write(dir);
  return kExitOk;
}

int cmd_select(const Options& o, Manifest& m) {
  require(o.checkpoint, "--checkpoint");
  require(o.out, "--out");
  const auto corpus = open_corpus(o.corpus);
  const auto ckpt = load_checkpoint(o.checkpoint);
  const auto dir = resolve_out(o.out);
  std::vector<SelectionResult> results;
  for (const auto& event_id : pick_events(corpus, o.events)) {
    const int q = corpus.find_event(event_id)->query_count();
    for (const auto* day : corpus.days_of(event_id)) {
      results.push_back(select_day(ckpt.network, *day, o.budget, q));
      spdlog::info("select: {} {} kept {} of {}", event_id, day->day, results.back().kept.size(), day->items.size());
    }
  }
  write_selection(results, dir / "selection.jsonl");
  write_atomic(dir / "latency.json", latency_json(results) + "\n");
  m.config(json{{"budget", o.budget}, {"checkpoint_config_hash", hex(ckpt.config_hash)}}.dump());
  m.corpus(corpus);
  m.output("selection.jsonl");
  m.output("latency.json");
  m.write(dir);
  return kExitOk;
}

int cmd_timeline(const Options& o, Manifest& m) {
  if (o.print_config) {
    std::cout << as_toml(TimelineConfig{}.to_json());
    return kExitOk;
  }
  require(o.selection, "--selection");
  require(o.out, "--out");
  const auto corpus = open_corpus(o.corpus);
  const auto config = parse_config(TimelineConfig::from_json, read_config(o.config));
  const auto dir = resolve_out(o.out);
  std::vector<Timeline> timelines;
  for (const auto& sel : load_selection(o.selection, corpus)) {
    if (sel.kept.empty()) continue;
    std::optional<int> k;
    if (config.k > 0) {
      k = config.k;
    } else {
      for (const auto* ref : corpus.references_for(sel.event_id, sel.day))
        if (ref->max_facts_k) {
          k = ref->max_facts_k;
          break;
        }
    }
    timelines.push_back(emit_timeline(cluster_facts(sel.kept, config.cluster), k));
  }
  write_timelines(timelines, dir / "timeline.jsonl", config.fact_text);
  m.config(config.to_json());
  m.corpus(corpus);
  m.output("timeline.jsonl");
  m.write(dir);
  return kExitOk;
}

int cmd_eval(const Options& o, Manifest& m) {
  require(o.timeline, "--timeline");
  require(o.out, "--out");
  const auto corpus = open_corpus(o.corpus);
  const auto rows = load_timeline_rows(o.timeline);
  const auto events = pick_events(corpus, o.events);
  const auto dir = resolve_out(o.out);
  const auto report = evaluate(corpus, rows, events);
  write_atomic(dir / "metrics.csv", report.to_csv());
  write_atomic(dir / "metrics.json", report.to_json() + "\n");
  m.output("metrics.csv");
  m.output("metrics.json");
  if (!o.selection.empty()) {
    const auto diag = selection_diagnostics(load_selection(o.selection, corpus), corpus);
    write_atomic(dir / "diagnostics.json", diag.to_json() + "\n");
    m.output("diagnostics.json");
  }
  m.corpus(corpus);
  m.write(dir);
  spdlog::info("eval: {} rows, mean rouge2_f1 {:.4f}", report.rows.size(), report.overall.rouge2_f1);
  return kExitOk;
}

int cmd_bench(const Options& o, Manifest& m) {
  require(o.out, "--out");
  const auto corpus = open_corpus(o.corpus);
  std::vector<int> counts;
  for (const auto& s : split_list(o.query_counts)) {
    try {
      counts.push_back(std::stoi(s));
    } catch (const std::exception&) {
      throw UsageError("--query-counts expects integers, got " + s);
    }
  }
  const DayStream* day = nullptr;
  if (!o.event.empty() || !o.day.empty()) {
    require(o.event, "--event");
    require(o.day, "--day");
    day = corpus.find_day(o.event, o.day);
    if (!day) throw InvalidInput("no stream for " + o.event + " " + o.day);
  } else {
    for (const auto& d : corpus.days)
      if (!day || d.items.size() > day->items.size()) day = &d;
    if (!day) throw InvalidInput("corpus has no day streams");
  }
  const std::uint64_t seed = o.seed_set ? o.seed : 42;
  const QNetwork net = o.checkpoint.empty() ? QNetwork(NetworkShape{}, seed) : load_checkpoint(o.checkpoint).network;
  const auto report = latency_bench(net, *day, counts, o.budget, o.rounds);
  const auto dir = resolve_out(o.out);
  write_atomic(dir / "latency.json", report.to_json() + "\n");
  m.config(json{{"query_counts", counts}, {"rounds", o.rounds}, {"budget", o.budget}}.dump());
  m.corpus(corpus);
  m.seed(seed);
  m.output("latency.json");
  m.write(dir);
  return kExitOk;
}

spdlog::level::level_enum parse_level(const std::string& s) {
  const auto level = spdlog::level::from_str(s);
  if (level == spdlog::level::off && s != "off") throw UsageError("unknown log level " + s);
  return level;
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
  static auto logger = [] {
    auto l = spdlog::stderr_color_mt("crisisdqn");
    spdlog::set_default_logger(l);
    return l;
  }();
  (void)logger;

  CLI::App app{"crisisdqn: online crisis timeline selection with a deep Q-network"};
  app.name("crisisdqn");
  app.set_version_flag("--version", CRISISDQN_VERSION);
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|err|critical|off");

  Options o;
  auto seed_opt = [&o](CLI::App* sub) {
    sub->add_option_function<std::uint64_t>(
        "--seed", [&o](std::uint64_t s) { o.seed = s, o.seed_set = true; }, "override the config seed");
  };

  auto synth = app.add_subcommand("synth", "generate a synthetic corpus with planted ground truth");
  synth->add_option("--config", o.config, "synth config (TOML, or .json)");
  synth->add_option("--out", o.out, "output directory");
  synth->add_flag("--print-config", o.print_config, "print the default config and exit");
  seed_opt(synth);

  auto validate = app.add_subcommand("validate", "check a corpus directory");
  validate->add_option("--corpus", o.corpus, "corpus directory");
  validate->add_option("--out", o.out, "optional directory for validation.json");

  auto merge = app.add_subcommand("merge-scores", "aggregate dual-model confidences into sc");
  merge->add_option("--corpus", o.corpus, "corpus directory");
  merge->add_option("--confidences", o.confidences, "confidences.jsonl");
  merge->add_option("--threshold", o.threshold, "per-model confidence threshold (inclusive)");
  merge->add_option("--out", o.out, "output corpus directory");

  auto train_cmd = app.add_subcommand("train", "train the Q-network");
  auto crossval_cmd = app.add_subcommand("crossval", "leave-one-event-out cross-validation");
  for (auto* sub : {train_cmd, crossval_cmd}) {
    sub->add_option("--corpus", o.corpus, "corpus directory");
    sub->add_option("--config", o.config, "train config (TOML, or .json)");
    sub->add_option("--out", o.out, "output directory");
    sub->add_flag("--print-config", o.print_config, "print the default config and exit");
    seed_opt(sub);
  }

  auto select = app.add_subcommand("select", "run the trained policy over day streams");
  select->add_option("--corpus", o.corpus, "corpus directory");
  select->add_option("--checkpoint", o.checkpoint, "checkpoint.bin");
  select->add_option("--events", o.events, "comma-separated event ids (default: all)");
  select->add_option("--budget", o.budget, "per-day keep budget");
  select->add_option("--out", o.out, "output directory");

  auto timeline = app.add_subcommand("timeline", "group kept texts into ranked daily facts");
  timeline->add_option("--corpus", o.corpus, "corpus directory");
  timeline->add_option("--selection", o.selection, "selection.jsonl");
  timeline->add_option("--config", o.config, "timeline config (TOML, or .json)");
  timeline->add_option("--out", o.out, "output directory");
  timeline->add_flag("--print-config", o.print_config, "print the default config and exit");

  auto eval = app.add_subcommand("eval", "score timelines against references");
  eval->add_option("--corpus", o.corpus, "corpus directory");
  eval->add_option("--timeline", o.timeline, "timeline.jsonl");
  eval->add_option("--selection", o.selection, "selection.jsonl for count diagnostics");
  eval->add_option("--events", o.events, "comma-separated event ids (default: all)");
  eval->add_option("--out", o.out, "output directory");

  auto bench = app.add_subcommand("bench", "per-decision latency across query counts");
  bench->add_option("--corpus", o.corpus, "corpus directory");
  bench->add_option("--checkpoint", o.checkpoint, "checkpoint.bin (default: seeded random network)");
  bench->add_option("--query-counts", o.query_counts, "comma-separated query counts");
  bench->add_option("--event", o.event, "event id");
  bench->add_option("--day", o.day, "day (YYYY-MM-DD)");
  bench->add_option("--budget", o.budget, "per-day keep budget");
  bench->add_option("--rounds", o.rounds, "interleaved passes per query count");
  bench->add_option("--out", o.out, "output directory");
  seed_opt(bench);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    std::cout << CRISISDQN_VERSION << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  Manifest manifest(name, args);
  try {
    spdlog::set_level(parse_level(log_level));
    if (name == "synth") return cmd_synth(o, manifest);
    if (name == "validate") return cmd_validate(o, manifest);
    if (name == "merge-scores") return cmd_merge_scores(o, manifest);
    if (name == "train") return cmd_train(o, manifest);
    if (name == "crossval") return cmd_crossval(o, manifest);
    if (name == "select") return cmd_select(o, manifest);
    if (name == "timeline") return cmd_timeline(o, manifest);
    if (name == "eval") return cmd_eval(o, manifest);
    if (name == "bench") return cmd_bench(o, manifest);
    throw UsageError("unknown subcommand " + name);
  } catch (const UsageError& e) {
    std::cerr << name << ": " << e.what() << "\n\n" << sub->help();
    return kExitUsage;
  } catch (const InvalidInput& e) {
    spdlog::error("{}: {}", name, e.what());
    return kExitInvalid;
  } catch (const CorpusError& e) {
    spdlog::error("{}: {}", name, e.what());
    return kExitInvalid;
  } catch (const AnnotationError& e) {
    spdlog::error("{}: {}", name, e.what());
    return kExitInvalid;
  } catch (const std::exception& e) {
    spdlog::error("{}: {}", name, e.what());
    return kExitRuntime;
  }
}

}  // namespace crisisdqn::cli
