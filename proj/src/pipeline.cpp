#include "ssa/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <sstream>
#include <thread>

#include "ssa/bridge.hpp"
#include "ssa/error.hpp"
#include "ssa/hashing.hpp"
#include "ssa/sampler.hpp"

namespace ssa {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' expects a number, got '" + value + "'");
  }
}

long long parse_integer(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' expects an integer, got '" + value + "'");
  }
}

uint64_t parse_seed(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const unsigned long long v = std::stoull(value, &used);
    if (used != value.size() || value.front() == '-') throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' expects a non-negative integer, got '" + value + "'");
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path p(value);
  if (p.is_relative() && !base.empty()) p = base / p;
  return p.lexically_normal();
}

std::string number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

uint64_t stage_seed(uint64_t seed, std::string_view stage) {
  return mix_seed(seed, {fnv1a(stage)});
}

}  // namespace

void PipelineConfig::validate() const {
  if (records.empty()) throw ConfigError("no records file configured");
  if (embeddings.empty()) throw ConfigError("no embeddings file configured");
  for (const auto* p : {&records, &embeddings, &nouns}) {
    if (!p->empty() && !std::filesystem::is_regular_file(*p))
      throw ConfigError("cannot find " + p->string());
  }
  merge.validate();
  if (smatch_restarts < 1) throw ConfigError("smatch restarts must be at least 1");
  if (!(gruen_threshold >= 0 && gruen_threshold <= 1))
    throw ConfigError("quality threshold must lie in [0, 1]");
  mix.validate();
  if (bands < 1) throw ConfigError("need at least one coverage band");
  if (max_in_flight < 1) throw ConfigError("max_in_flight must be at least 1");
  if (threads < 1) throw ConfigError("threads must be at least 1");
}

std::string PipelineConfig::canonical() const {
  // out_dir is left out so that runs into different directories share a hash.
  std::ostringstream s;
  s << "records = " << records.generic_string() << '\n'
    << "embeddings = " << embeddings.generic_string() << '\n'
    << "nouns = " << nouns.generic_string() << '\n'
    << "seed = " << seed << '\n'
    << "smatch.restarts = " << smatch_restarts << '\n'
    << "merge.syn_th = " << number(merge.synonym_threshold) << '\n'
    << "merge.pred_th = " << number(merge.predicate_threshold) << '\n'
    << "augment.gruen_th = " << number(gruen_threshold) << '\n'
    << "augment.generator = " << generator << '\n'
    << "augment.scorer = " << scorer << '\n'
    << "mix.strategy = " << (mix.strategy == MixStrategy::Random ? "random" : "uniform") << '\n'
    << "mix.p = " << number(mix.percentage) << '\n'
    << "mix.bins = " << mix.bins << '\n'
    << "eval.bands = " << bands << '\n';
  return s.str();
}

std::string PipelineConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical())));
  return buf;
}

void set_config_value(PipelineConfig& c, const std::string& raw_key, const std::string& value,
                      const std::filesystem::path& base) {
  std::string key = raw_key;
  if (key.rfind("paths.", 0) == 0) key = key.substr(6);
  std::replace(key.begin(), key.end(), '-', '_');

  if (key == "records") {
    c.records = resolve(base, value);
  } else if (key == "embeddings") {
    c.embeddings = resolve(base, value);
  } else if (key == "nouns") {
    c.nouns = value.empty() ? std::filesystem::path{} : resolve(base, value);
  } else if (key == "out_dir") {
    c.out_dir = resolve(base, value);
  } else if (key == "seed") {
    c.seed = parse_seed(key, value);
  } else if (key == "smatch.restarts" || key == "restarts") {
    c.smatch_restarts = static_cast<int>(parse_integer(key, value));
  } else if (key == "merge.syn_th" || key == "syn_th") {
    c.merge.synonym_threshold = parse_double(key, value);
  } else if (key == "merge.pred_th" || key == "pred_th") {
    c.merge.predicate_threshold = parse_double(key, value);
  } else if (key == "augment.gruen_th" || key == "gruen_th") {
    c.gruen_threshold = parse_double(key, value);
  } else if (key == "augment.generator" || key == "generator") {
    c.generator = value;
  } else if (key == "augment.scorer" || key == "scorer") {
    c.scorer = value;
  } else if (key == "augment.max_in_flight" || key == "max_in_flight") {
    const long long n = parse_integer(key, value);
    if (n < 1) throw ConfigError("max_in_flight must be at least 1");
    c.max_in_flight = static_cast<size_t>(n);
  } else if (key == "threads") {
    const long long n = parse_integer(key, value);
    if (n < 1) throw ConfigError("threads must be at least 1");
    c.threads = static_cast<size_t>(n);
  } else if (key == "mix.strategy" || key == "strategy") {
    if (value == "random")
      c.mix.strategy = MixStrategy::Random;
    else if (value == "uniform")
      c.mix.strategy = MixStrategy::UniformCoverage;
    else
      throw ConfigError("mix strategy must be random or uniform, got '" + value + "'");
  } else if (key == "mix.p" || key == "p") {
    c.mix.percentage = parse_double(key, value);
  } else if (key == "mix.bins" || key == "bins") {
    c.mix.bins = static_cast<int>(parse_integer(key, value));
  } else if (key == "eval.bands" || key == "bands") {
    c.bands = static_cast<int>(parse_integer(key, value));
  } else {
    throw ConfigError("unknown config key '" + raw_key + "'");
  }
}

PipelineConfig parse_config(const std::string& body, const std::filesystem::path& base) {
  PipelineConfig c;
  std::istringstream in(body);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": bad section");
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (!value.empty() && value.front() == '"') {
      const auto close = value.find('"', 1);
      if (close == std::string::npos)
        throw ConfigError("line " + std::to_string(lineno) + ": unterminated string");
      value = value.substr(1, close - 1);
    } else if (auto hash = value.find(" #"); hash != std::string::npos) {
      value = trim(value.substr(0, hash));
    }
    if (!section.empty()) key = section + "." + key;
    set_config_value(c, key, value, base);
  }
  return c;
}

void apply_environment(PipelineConfig& config) {
  if (const char* g = std::getenv("SSA_GENERATOR"); g && *g) config.generator = g;
  if (const char* s = std::getenv("SSA_SCORER"); s && *s) config.scorer = s;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  PipelineConfig c = parse_config(read_text_file(path), path.parent_path());
  apply_environment(c);
  return c;
}

// ---------------------------------------------------------------------------

Endpoints make_endpoints(const std::string& generator, const std::string& scorer,
                         size_t max_in_flight) {
  std::map<std::string, std::shared_ptr<BridgeClient>> clients;
  auto client_for = [&](const std::string& address) {
    auto& c = clients[address];
    if (!c) c = std::make_shared<BridgeClient>(open_channel(address), max_in_flight);
    return c;
  };

  Endpoints e;
  if (generator == "stub") {
    e.generator = std::make_unique<StubGenerator>();
  } else if (generator.rfind("bridge:", 0) == 0) {
    try {
      e.generator = std::make_unique<BridgeGenerator>(client_for(generator.substr(7)));
    } catch (const BridgeError& err) {
      throw GeneratorUnavailable(err.what());
    }
  } else {
    throw ConfigError("generator must be stub or bridge:ADDR, got '" + generator + "'");
  }

  if (scorer.rfind("const:", 0) == 0) {
    const double v = parse_double("scorer", scorer.substr(6));
    if (!(v >= 0 && v <= 1)) throw ConfigError("constant score must lie in [0, 1]");
    e.scorer = std::make_unique<ConstantScorer>(v);
  } else if (scorer.rfind("bridge:", 0) == 0) {
    try {
      e.scorer = std::make_unique<BridgeScorer>(client_for(scorer.substr(7)));
    } catch (const BridgeError& err) {
      throw ScorerUnavailable(err.what());
    }
  } else {
    throw ConfigError("scorer must be const:X or bridge:ADDR, got '" + scorer + "'");
  }
  return e;
}

void parallel_for(size_t n, size_t threads, const std::function<void(size_t)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  for (size_t t = 0; t < std::min(threads, n); ++t) {
    pool.emplace_back([&] {
      for (size_t i; (i = next++) < n;) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

ControlCaptionPair original_pair(const GroundedCaptionRecord& record, const VgAmr& vgamr) {
  ControlCaptionPair p;
  p.image_id = record.image_id;
  p.source = PairSource::Original;
  for (size_t i = 0; i < record.tokens.size(); ++i) p.caption += (i ? " " : "") + record.tokens[i];

  std::set<std::string> labels;
  for (const auto& g : record.groundings) p.control.boxes.insert(g.boxes.begin(), g.boxes.end());
  for (const auto& [v, boxes] : vgamr.grounding)
    labels.insert(concept_surface(vgamr.graph.concept_of(v)));
  p.control.entity_labels.assign(labels.begin(), labels.end());
  p.control.coverage = compute_coverage({p.control.boxes.begin(), p.control.boxes.end()},
                                        record.image_width, record.image_height);
  std::vector<std::string> verbs;
  for (const auto& [v, n] : vgamr.graph.nodes())
    if (is_predicate(vgamr, v)) verbs.push_back(concept_surface(n.concept_label));
  if (!verbs.empty()) p.control.verbs = std::move(verbs);
  set_length_control(p);
  return p;
}

std::vector<ImageGraph> merge_images(const std::vector<GroundedCaptionRecord>& records,
                                     const EmbeddingStore& store, const MergeParams& params,
                                     int restarts, uint64_t seed, size_t threads,
                                     std::vector<std::string>* warnings) {
  std::map<std::string, std::vector<const GroundedCaptionRecord*>> by_image;
  for (const auto& r : records) by_image[r.image_id].push_back(&r);
  std::vector<std::pair<std::string, std::vector<const GroundedCaptionRecord*>>> groups(
      by_image.begin(), by_image.end());

  std::vector<ImageGraph> out(groups.size());
  std::vector<std::vector<std::string>> image_warnings(groups.size());
  parallel_for(groups.size(), threads, [&](size_t i) {
    const auto& [image, group] = groups[i];
    std::vector<VgAmr> vgamrs;
    for (const auto* r : group) {
      if (r->image_width != group.front()->image_width ||
          r->image_height != group.front()->image_height)
        throw SchemaError("image " + image + " has inconsistent dimensions");
      vgamrs.push_back(build_vgamr(*r));
    }
    MetaResult meta = build_meta_vgamr(vgamrs, params, store, restarts, image_seed(seed, image));
    out[i] = {image, group.front()->image_width, group.front()->image_height,
              std::move(meta.meta)};
    image_warnings[i] = std::move(meta.warnings);
  });
  if (warnings) {
    std::set<std::string> all;
    for (const auto& w : image_warnings) all.insert(w.begin(), w.end());
    warnings->assign(all.begin(), all.end());
  }
  return out;
}

std::vector<ImageSample> sample_images(const std::vector<ImageGraph>& metas, uint64_t seed,
                                       size_t threads) {
  std::vector<std::vector<ImageSample>> per_image(metas.size());
  parallel_for(metas.size(), threads, [&](size_t i) {
    const auto& m = metas[i];
    for (auto& s : sample_event_subgraphs(m.graph, image_seed(seed, m.image_id)))
      per_image[i].push_back({m.image_id, m.image_width, m.image_height, std::move(s)});
  });
  std::vector<ImageSample> out;
  for (auto& v : per_image)
    for (auto& s : v) out.push_back(std::move(s));
  return out;
}

AugmentResult augment_samples(const std::vector<ImageSample>& samples, TextGenerator& generator,
                              QualityScorer& scorer, double threshold, size_t threads) {
  std::vector<std::optional<ControlCaptionPair>> built(samples.size());
  parallel_for(samples.size(), threads, [&](size_t i) {
    const auto& s = samples[i];
    ControlCaptionPair p;
    try {
      p.control = extract_control(s.sample, s.image_width, s.image_height);
    } catch (const NoGroundedNodes&) {
      return;
    }
    p.image_id = s.image_id;
    p.source = PairSource::Ssa;
    p.caption = realize_caption(s.sample, generator);
    set_length_control(p);
    built[i] = std::move(p);
  });

  AugmentResult out;
  std::vector<ControlCaptionPair> pairs;
  for (auto& b : built) {
    if (b)
      pairs.push_back(std::move(*b));
    else
      ++out.ungrounded_samples;
  }
  // Score concurrently, then partition in input order.
  std::vector<double> scores(pairs.size());
  parallel_for(pairs.size(), threads, [&](size_t i) { scores[i] = scorer.score(pairs[i].caption); });
  size_t next = 0;
  FunctionScorer replay([&](std::string_view) { return scores[next++]; });
  FilterResult f = filter_by_quality(std::move(pairs), replay, threshold);
  out.kept = std::move(f.kept);
  out.dropped = std::move(f.dropped);
  return out;
}

std::vector<EvalItem> eval_items(const std::vector<ControlCaptionPair>& pairs) {
  std::vector<EvalItem> items;
  for (const auto& p : pairs)
    items.push_back({p.image_id, p.caption, {}, p.quality, p.control.entity_labels,
                     p.control.word_count_target, p.control.coverage});
  return items;
}

PipelineSummary run_pipeline(const PipelineConfig& config, std::string* stage) {
  auto enter = [&](const char* name) {
    if (stage) *stage = name;
  };
  enter("config");
  config.validate();
  const std::string hash = config.hash();
  auto provenance = [&](const char* name) { return Provenance{name, hash, config.seed}; };
  const auto& dir = config.out_dir;
  std::filesystem::create_directories(dir);
  PipelineSummary summary;

  enter("ingest");
  const auto records = parse_lines<GroundedCaptionRecord>(read_jsonl(config.records),
                                                          record_from_json);
  summary.records = records.size();
  const EmbeddingStore store = EmbeddingStore::load(config.embeddings);

  enter("ground");
  std::vector<ControlCaptionPair> originals(records.size());
  parallel_for(records.size(), config.threads,
               [&](size_t i) { originals[i] = original_pair(records[i], build_vgamr(records[i])); });
  {
    const Provenance p = provenance("original");
    write_jsonl(dir / "original.jsonl", to_json_lines(originals), &p);
  }

  enter("merge");
  const auto metas = merge_images(records, store, config.merge, config.smatch_restarts,
                                  stage_seed(config.seed, "merge"), config.threads);
  summary.images = metas.size();
  {
    const Provenance p = provenance("meta");
    write_jsonl(dir / "meta.jsonl", to_json_lines(metas), &p);
  }

  enter("sample");
  const auto samples = sample_images(metas, stage_seed(config.seed, "sample"), config.threads);
  summary.samples = samples.size();
  {
    const Provenance p = provenance("samples");
    write_jsonl(dir / "samples.jsonl", to_json_lines(samples), &p);
  }

  enter("augment");
  Endpoints endpoints = make_endpoints(config.generator, config.scorer, config.max_in_flight);
  AugmentResult aug = augment_samples(samples, *endpoints.generator, *endpoints.scorer,
                                      config.gruen_threshold, config.threads);
  summary.kept = aug.kept.size();
  summary.dropped = aug.dropped.size();
  {
    const Provenance p = provenance("pairs");
    write_jsonl(dir / "pairs.jsonl", to_json_lines(aug.kept), &p);
  }

  enter("mix");
  MixSpec mix = config.mix;
  mix.seed = stage_seed(config.seed, "mix");
  const auto mixed = mix_datasets(originals, aug.kept, mix);
  summary.mixed = mixed.size();
  {
    const Provenance p = provenance("mixed");
    write_jsonl(dir / "mixed.jsonl", to_json_lines(mixed), &p);
  }

  enter("eval");
  std::unique_ptr<NounExtractor> nouns;
  if (config.nouns.empty())
    nouns = std::make_unique<AnnotatedNounExtractor>();
  else
    nouns = std::make_unique<LexiconNounExtractor>(LexiconNounExtractor::load(config.nouns));
  const MetricReport report = evaluate(eval_items(aug.kept), *nouns, store, config.bands);
  Json j = to_json(report);
  j["_provenance"] = {{"stage", "report"}, {"config_hash", hash}, {"seed", config.seed}};
  write_text_file(dir / "report.json", j.dump(2) + "\n");
  enter("done");
  return summary;
}

// ---------------------------------------------------------------------------

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", fraction * 100.0);
  return buf;
}

RenderedReport render_report(const Json& j) {
  const MetricReport r = report_from_json(j);
  auto cell = [](const std::optional<double>& v, bool as_percent = true) -> std::string {
    if (!v) return "-";
    if (as_percent) return percent(*v);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", *v);
    return buf;
  };
  auto row = [&](const std::string& name, const std::string& pairs, const MetricValues& v) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-16s %6s %6s %6s %6s %6s %6s %6s %6s %6s %6s\n",
                  name.c_str(), pairs.c_str(), cell(v.iou).c_str(), cell(v.hal).c_str(),
                  cell(v.g).c_str(), cell(v.sc).c_str(), cell(v.d1).c_str(),
                  cell(v.d2).c_str(), cell(v.l, false).c_str(), cell(v.lp).c_str(),
                  cell(v.h).c_str());
    return std::string(buf);
  };

  RenderedReport out;
  char header[256];
  std::snprintf(header, sizeof header, "%-16s %6s %6s %6s %6s %6s %6s %6s %6s %6s %6s\n", "image",
                "pairs", "IoU", "Hal", "G", "sC", "D-1", "D-2", "L", "LP", "H");
  out.table = header;
  size_t total = 0;
  for (const auto& im : r.images) {
    out.table += row(im.image_id, std::to_string(im.pairs), im.values);
    total += im.pairs;
  }
  out.table += row("all", std::to_string(total), r.aggregate);

  out.band_csv = "band,lower,upper,count,sample_pct,iou,hal\n";
  for (size_t b = 0; b < r.bands.size(); ++b) {
    const auto& s = r.bands[b];
    auto opt = [&](const std::optional<double>& v) { return v ? percent(*v) : std::string(); };
    out.band_csv += std::to_string(b) + "," + percent(s.lower) + "," + percent(s.upper) + "," +
                    std::to_string(s.count) + "," + percent(s.sample_percentage / 100.0) + "," +
                    opt(s.iou) + "," + opt(s.hal) + "\n";
  }
  return out;
}

}  // namespace ssa
