#include "crisisdqn/synthgen.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "crisisdqn/vecmath.hpp"

namespace crisisdqn {

using json = nlohmann::json;

namespace {

constexpr const char* kFactWords[] = {
    "evacuation", "order",      "shelter",    "open",      "highway",    "closed",     "containment", "percent",
    "acres",      "burned",     "crews",      "firefighters", "wind",    "gusts",      "power",       "outage",
    "homes",      "destroyed",  "damaged",    "rescue",    "teams",      "flooding",   "river",       "crest",
    "rainfall",   "inches",     "storm",      "surge",     "landfall",   "category",   "winds",       "mph",
    "residents",  "warned",     "school",     "district",  "cancelled",  "hospital",   "patients",    "moved",
    "bridge",     "collapsed",  "road",       "reopened",  "curfew",     "county",     "sheriff",     "deputies",
    "missing",    "persons",    "confirmed",  "deaths",    "injuries",   "reported",   "water",       "boil",
    "advisory",   "utility",    "crews",      "restored",  "airport",    "flights",    "suspended",   "governor",
    "declared",   "emergency",  "national",   "guard",     "deployed",   "donations",  "center",      "volunteers",
    "animals",    "fairgrounds", "smoke",     "air",       "quality",    "masks",      "distributed", "zone",
    "north",      "south",      "east",       "west",      "ridge",      "canyon",     "valley",      "coast",
    "levee",      "breach",     "pumps",      "sandbags",  "fuel",       "shortage",   "traffic",     "detour"};

constexpr const char* kChatterWords[] = {
    "lol",     "omg",     "thoughts", "prayers",  "anyone",  "else",    "watching", "news",   "crazy",  "weather",
    "today",   "really",  "hope",     "everyone", "safe",    "stay",    "wow",      "look",   "video",  "photo",
    "share",   "retweet", "follow",   "update",   "soon",    "feeling", "scary",    "stuff",  "guys",   "wonder",
    "what",    "happens", "next",     "sad",      "heart",   "goes",    "out",      "friends","family", "love",
    "tonight", "morning", "coffee",   "work",     "traffic", "sky",     "looks",    "weird",  "cant",   "believe"};

constexpr std::size_t kFactVocab = sizeof(kFactWords) / sizeof(kFactWords[0]);
constexpr std::size_t kChatterVocab = sizeof(kChatterWords) / sizeof(kChatterWords[0]);

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::vector<double> unit_gaussian(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(dim));
  for (auto& x : v) x = n(rng);
  const double norm = l2_norm(std::span<const double>(v));
  for (auto& x : v) x /= norm;
  return v;
}

// normalise(center + spread * g / sqrt(d))
Embedding around(const std::vector<double>& center, double spread, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  const double scale = spread / std::sqrt(static_cast<double>(center.size()));
  std::vector<double> v(center.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = center[i] + scale * n(rng);
  const double norm = l2_norm(std::span<const double>(v));
  Embedding e(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) e[i] = static_cast<float>(v[i] / norm);
  return e;
}

double round4(double x) { return std::round(x * 1e4) / 1e4; }

std::string pad(int value, int width) {
  std::string s = std::to_string(value);
  if (static_cast<int>(s.size()) < width) s.insert(0, static_cast<std::size_t>(width) - s.size(), '0');
  return s;
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

struct Draft {
  std::int64_t ts = 0;
  std::size_t order = 0;  // generation order, breaks timestamp ties
  Stream stream = Stream::Twitter;
  std::string text;
  Embedding embedding;
  PlantedText truth;
  std::vector<std::pair<int, std::pair<double, double>>> pairs;  // query index -> (conf_a, conf_b)
  std::optional<std::size_t> dup_source;  // index into drafts
};

}  // namespace

void SynthConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
  };
  require(n_events >= 1 && days_per_event >= 1 && texts_per_day >= 0, "synth: counts must be positive");
  require(query_count >= 1, "synth: query_count must be >= 1");
  require(informative_fraction >= 0.0 && informative_fraction <= 1.0, "synth: informative_fraction in [0,1]");
  require(duplicate_fraction >= 0.0 && duplicate_fraction <= 1.0, "synth: duplicate_fraction in [0,1]");
  require(informative_jitter >= 0.0 && informative_jitter <= 1.0, "synth: informative_jitter in [0,1]");
  require(embedding_dim == static_cast<int>(kEmbeddingDim), "synth: embedding_dim must be 768");
  require(n_topic_centers >= 1 && texts_per_fact >= 1, "synth: n_topic_centers and texts_per_fact must be >= 1");
  require(center_spread >= 0.0 && noise_scale >= 0.0, "synth: spreads must be non-negative");
  require(duplicate_noise >= 0.0 && duplicate_noise <= 0.1, "synth: duplicate_noise in [0, 0.1]");
  require(max_sc >= 1, "synth: max_sc must be >= 1");
}

std::string to_json(const SynthConfig& c) {
  return json{{"seed", c.seed},
              {"n_events", c.n_events},
              {"days_per_event", c.days_per_event},
              {"texts_per_day", c.texts_per_day},
              {"query_count", c.query_count},
              {"informative_fraction", c.informative_fraction},
              {"duplicate_fraction", c.duplicate_fraction},
              {"embedding_dim", c.embedding_dim},
              {"n_topic_centers", c.n_topic_centers},
              {"center_spread", c.center_spread},
              {"noise_scale", c.noise_scale},
              {"texts_per_fact", c.texts_per_fact},
              {"informative_jitter", c.informative_jitter},
              {"duplicate_noise", c.duplicate_noise},
              {"max_sc", c.max_sc}}
      .dump(2);
}

SynthConfig synth_config_from_json(const std::string& text) {
  SynthConfig c;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("synth config: ") + e.what());
  }
  const json defaults = json::parse(to_json(c));
  for (const auto& [key, _] : j.items())
    if (!defaults.contains(key)) throw std::invalid_argument("synth config: unknown key \"" + key + "\"");
  try {
    c.seed = j.value("seed", c.seed);
    c.n_events = j.value("n_events", c.n_events);
    c.days_per_event = j.value("days_per_event", c.days_per_event);
    c.texts_per_day = j.value("texts_per_day", c.texts_per_day);
    c.query_count = j.value("query_count", c.query_count);
    c.informative_fraction = j.value("informative_fraction", c.informative_fraction);
    c.duplicate_fraction = j.value("duplicate_fraction", c.duplicate_fraction);
    c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
    c.n_topic_centers = j.value("n_topic_centers", c.n_topic_centers);
    c.center_spread = j.value("center_spread", c.center_spread);
    c.noise_scale = j.value("noise_scale", c.noise_scale);
    c.texts_per_fact = j.value("texts_per_fact", c.texts_per_fact);
    c.informative_jitter = j.value("informative_jitter", c.informative_jitter);
    c.duplicate_noise = j.value("duplicate_noise", c.duplicate_noise);
    c.max_sc = j.value("max_sc", c.max_sc);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("synth config: ") + e.what());
  }
  c.validate();
  return c;
}

SynthCorpus generate(const SynthConfig& config) {
  config.validate();
  const int dim = config.embedding_dim;
  SynthCorpus out;

  std::mt19937_64 center_rng(splitmix64(config.seed ^ 0xC3A5C85C97CB3127ULL));
  std::vector<std::vector<double>> chatter_centers;
  for (int c = 0; c < config.n_topic_centers; ++c) chatter_centers.push_back(unit_gaussian(center_rng, dim));
  // Each chatter topic draws its words from its own slice of the chatter vocabulary.
  std::vector<std::vector<std::string>> chatter_vocab(static_cast<std::size_t>(config.n_topic_centers));
  for (int c = 0; c < config.n_topic_centers; ++c)
    for (std::size_t w = 0; w < 10; ++w)
      chatter_vocab[static_cast<std::size_t>(c)].push_back(
          kChatterWords[(static_cast<std::size_t>(c) * 7 + w * 3) % kChatterVocab]);

  using namespace std::chrono;
  const sys_days base = sys_days{year{2018} / month{11} / day{8}};

  for (int e = 0; e < config.n_events; ++e) {
    std::mt19937_64 rng(splitmix64(config.seed * 0x100000001b3ULL + static_cast<std::uint64_t>(e) + 1));
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Event event;
    event.event_id = "E" + pad(e + 1, 2);
    event.name = "Synthetic Event " + pad(e + 1, 2);
    const sys_days first = base + days{40 * e};
    for (int d = 0; d < config.days_per_event; ++d) {
      const auto ts = duration_cast<seconds>((first + days{d}).time_since_epoch()).count();
      event.days.push_back(utc_day(ts));
    }
    for (int q = 0; q < config.query_count; ++q)
      event.queries.push_back(Query{event.event_id + "-Q" + pad(q + 1, 3), event.event_id,
                                    "synthetic information need " + std::to_string(q + 1) + " for " + event.name});

    for (int d = 0; d < config.days_per_event; ++d) {
      const std::string& day_id = event.days[static_cast<std::size_t>(d)];
      const std::int64_t day_start = duration_cast<seconds>((first + days{d}).time_since_epoch()).count();
      constexpr std::int64_t kDaySeconds = 86400;

      const int n = config.texts_per_day;
      const int n_dup = static_cast<int>(std::lround(config.duplicate_fraction * n));
      const int n_orig = n - n_dup;
      const double share = std::clamp(
          config.informative_fraction * (1.0 + config.informative_jitter * (2.0 * unit(rng) - 1.0)), 0.0, 1.0);
      const int n_inf = std::min(n_orig, static_cast<int>(std::lround(share * n_orig)));
      const int n_facts = n_inf == 0 ? 0 : (n_inf + config.texts_per_fact - 1) / config.texts_per_fact;

      std::vector<std::vector<double>> fact_centers;
      std::vector<std::vector<std::string>> fact_sentences;
      for (int f = 0; f < n_facts; ++f) {
        fact_centers.push_back(unit_gaussian(rng, dim));
        std::vector<std::string> words;
        for (int w = 0; w < 8; ++w)
          words.emplace_back(kFactWords[std::uniform_int_distribution<std::size_t>(0, kFactVocab - 1)(rng)]);
        fact_sentences.push_back(std::move(words));
      }

      std::vector<int> kinds(static_cast<std::size_t>(n_orig), -1);  // fact index or -1
      for (int i = 0; i < n_inf; ++i) kinds[static_cast<std::size_t>(i)] = i % n_facts;
      std::shuffle(kinds.begin(), kinds.end(), rng);

      std::vector<Draft> drafts;
      drafts.reserve(static_cast<std::size_t>(n));
      for (int i = 0; i < n_orig; ++i) {
        Draft dr;
        dr.order = drafts.size();
        // Leave the last second of the day free so duplicates can follow any original.
        dr.ts = day_start + std::uniform_int_distribution<std::int64_t>(0, kDaySeconds - 2)(rng);
        dr.stream = static_cast<Stream>(std::uniform_int_distribution<int>(0, 2)(rng));
        const int fact = kinds[static_cast<std::size_t>(i)];
        if (fact >= 0) {
          dr.truth.informative = true;
          dr.truth.fact = fact;
          dr.embedding = around(fact_centers[static_cast<std::size_t>(fact)], config.center_spread, rng);
          auto words = fact_sentences[static_cast<std::size_t>(fact)];
          for (auto& w : words)
            if (unit(rng) < 0.2) w = kFactWords[std::uniform_int_distribution<std::size_t>(0, kFactVocab - 1)(rng)];
          dr.text = join_words(words);

          const int sc = std::uniform_int_distribution<int>(1, std::min(config.max_sc, config.query_count))(rng);
          std::vector<int> qs(static_cast<std::size_t>(config.query_count));
          for (int q = 0; q < config.query_count; ++q) qs[static_cast<std::size_t>(q)] = q;
          std::shuffle(qs.begin(), qs.end(), rng);
          std::uniform_real_distribution<double> high(0.85, 1.0), low(0.30, 0.79);
          for (int k = 0; k < sc; ++k) dr.pairs.push_back({qs[static_cast<std::size_t>(k)], {round4(high(rng)), round4(high(rng))}});
          // One near-miss: a single model is confident, the other is not.
          if (sc < config.query_count) dr.pairs.push_back({qs[static_cast<std::size_t>(sc)], {round4(high(rng)), round4(low(rng))}});
        } else {
          const int topic = std::uniform_int_distribution<int>(0, config.n_topic_centers - 1)(rng);
          dr.truth.topic = topic;
          dr.embedding = around(chatter_centers[static_cast<std::size_t>(topic)], config.noise_scale, rng);
          std::vector<std::string> words;
          const auto& vocab = chatter_vocab[static_cast<std::size_t>(topic)];
          for (int w = 0; w < 7; ++w)
            words.push_back(vocab[std::uniform_int_distribution<std::size_t>(0, vocab.size() - 1)(rng)]);
          dr.text = join_words(words);
          if (unit(rng) < 0.3) {
            std::uniform_real_distribution<double> low(0.05, 0.79);
            const int q = std::uniform_int_distribution<int>(0, config.query_count - 1)(rng);
            dr.pairs.push_back({q, {round4(low(rng)), round4(low(rng))}});
          }
        }
        drafts.push_back(std::move(dr));
      }

      for (int i = 0; i < n_dup && n_orig > 0; ++i) {
        const auto src = std::uniform_int_distribution<std::size_t>(0, static_cast<std::size_t>(n_orig) - 1)(rng);
        const Draft& o = drafts[src];
        Draft dr;
        dr.order = drafts.size();
        dr.ts = std::uniform_int_distribution<std::int64_t>(o.ts + 1, day_start + kDaySeconds - 1)(rng);
        dr.stream = static_cast<Stream>(std::uniform_int_distribution<int>(0, 2)(rng));
        dr.truth = o.truth;
        dr.dup_source = src;
        dr.pairs = o.pairs;
        dr.text = (dr.stream == Stream::Twitter ? "RT " : "") + o.text;
        const auto noise = unit_gaussian(rng, dim);
        dr.embedding.resize(o.embedding.size());
        for (std::size_t k = 0; k < o.embedding.size(); ++k)
          dr.embedding[k] = static_cast<float>(o.embedding[k] + config.duplicate_noise * noise[k]);
        drafts.push_back(std::move(dr));
      }

      std::vector<std::size_t> order(drafts.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (drafts[a].ts != drafts[b].ts) return drafts[a].ts < drafts[b].ts;
        return drafts[a].order < drafts[b].order;
      });
      std::vector<std::string> ids(drafts.size());
      for (std::size_t pos = 0; pos < order.size(); ++pos)
        ids[order[pos]] = event.event_id + "-D" + std::to_string(d + 1) + "-" + pad(static_cast<int>(pos) + 1, 5);

      DayStream stream{event.event_id, day_id, {}};
      std::vector<ConfidencePair> day_pairs;
      for (std::size_t pos = 0; pos < order.size(); ++pos) {
        const std::size_t i = order[pos];
        Draft& dr = drafts[i];
        PlantedText truth = dr.truth;
        if (dr.dup_source) {
          truth.duplicate_of = ids[*dr.dup_source];
          const double cos = cosine(dr.embedding, drafts[*dr.dup_source].embedding);
          if (!(cos > 0.99))
            throw std::logic_error("synthgen: duplicate " + ids[i] + " has cosine " + std::to_string(cos));
        }
        for (const auto& [q, conf] : dr.pairs)
          day_pairs.push_back(ConfidencePair{ids[i], event.queries[static_cast<std::size_t>(q)].query_id, conf.first,
                                             conf.second});
        StreamText t;
        t.text_id = ids[i];
        t.event_id = event.event_id;
        t.stream = dr.stream;
        t.unix_ts = dr.ts;
        t.day = day_id;
        t.text = dr.text;
        t.embedding = dr.embedding;
        stream.items.push_back(std::move(t));
        out.truth.emplace(ids[i], std::move(truth));
      }

      const auto table = aggregate_scores(day_pairs);
      for (auto& t : stream.items) t.sc = table.score(t.text_id);
      out.confidences.insert(out.confidences.end(), day_pairs.begin(), day_pairs.end());
      sort_day_stream(stream);
      out.corpus.days.push_back(std::move(stream));
      out.facts_per_day[{event.event_id, day_id}] = n_facts;
      out.informative_per_day[{event.event_id, day_id}] = n_inf;

      if (n_facts > 0) {
        ReferenceSummary ref;
        ref.event_id = event.event_id;
        ref.day = day_id;
        ref.kind = ReferenceKind::Synthetic;
        ref.max_facts_k = n_facts;
        for (int f = 0; f < n_facts; ++f) {
          if (f) ref.text.push_back('\n');
          ref.text += join_words(fact_sentences[static_cast<std::size_t>(f)]);
          Embedding c(fact_centers[static_cast<std::size_t>(f)].begin(), fact_centers[static_cast<std::size_t>(f)].end());
          ref.sentence_embeddings.push_back(std::move(c));
        }
        out.corpus.references.push_back(std::move(ref));
      }
    }
    out.corpus.events.push_back(std::move(event));
  }
  return out;
}

void write_synth(const SynthCorpus& synth, const std::filesystem::path& dir) {
  write_corpus(synth.corpus, dir);
  write_confidences(synth.confidences, dir / "confidences.jsonl");
  std::ofstream out(dir / "ground_truth.jsonl", std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + (dir / "ground_truth.jsonl").string());
  for (const auto& [id, t] : synth.truth) {
    json j{{"text_id", id}, {"informative", t.informative}, {"topic", t.topic}, {"fact", t.fact}};
    j["duplicate_of"] = t.duplicate_of ? json(*t.duplicate_of) : json(nullptr);
    out << j.dump() << '\n';
  }
}

OracleResult oracle_policy(const DayStream& day, int q_count, const EnvConfig& env_config, double tie_tolerance) {
  OracleResult result;
  Environment env(env_config);
  env.reset(day, q_count);
  while (!env.terminal()) {
    const int sc = env.current().sc;
    const double si_m = env.current_similarity();
    const double keep = reward(sc, Action::Keep, si_m, q_count, env_config.keep_penalty);
    const double discard = reward(sc, Action::Discard, si_m, q_count, env_config.keep_penalty);
    const Action a = keep - discard > tie_tolerance ? Action::Keep : Action::Discard;
    const auto out = env.step(a);
    result.actions.push_back(a);
    result.episode_return += out.reward;
    for (const auto& f : out.forced_tail) result.episode_return += f.reward;
  }
  return result;
}

}  // namespace crisisdqn
