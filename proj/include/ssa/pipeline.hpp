#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ssa/augment.hpp"
#include "ssa/io.hpp"
#include "ssa/merge.hpp"

namespace ssa {

struct PipelineConfig {
  std::filesystem::path records;
  std::filesystem::path embeddings;
  std::filesystem::path nouns;  // empty: use nouns annotated on pairs
  std::filesystem::path out_dir = "out";

  MergeParams merge;
  int smatch_restarts = kDefaultSmatchRestarts;
  uint64_t seed = 0;
  double gruen_threshold = kDefaultQualityThreshold;
  MixSpec mix;
  int bands = 10;

  std::string generator = "stub";     // stub | bridge:ADDR
  std::string scorer = "const:1.0";   // const:X | bridge:ADDR
  size_t max_in_flight = 8;
  size_t threads = 1;

  // Throws ConfigError.
  void validate() const;
  // Canonical key = value listing; the basis of the provenance hash.
  std::string canonical() const;
  std::string hash() const;
};

// Applies one `key = value` setting. Throws ConfigError on unknown keys or
// bad values. Relative paths resolve against `base`.
void set_config_value(PipelineConfig& config, const std::string& key, const std::string& value,
                      const std::filesystem::path& base = {});

// Plain key = value lines; `#` starts a comment; `[section]` headers prefix
// the keys that follow as `section.key`. Values may be double-quoted.
// SSA_GENERATOR and SSA_SCORER, when set, override the endpoint keys.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(const std::string& body, const std::filesystem::path& base = {});
void apply_environment(PipelineConfig& config);

// Generator / scorer from a selector string. Bridge selectors share one
// client per address.
struct Endpoints {
  std::unique_ptr<TextGenerator> generator;
  std::unique_ptr<QualityScorer> scorer;
};
Endpoints make_endpoints(const std::string& generator, const std::string& scorer,
                         size_t max_in_flight);

// The original caption as a control-caption pair: boxes of all its phrase
// groundings, labels of its grounded nodes.
ControlCaptionPair original_pair(const GroundedCaptionRecord& record, const VgAmr& vgamr);

// Meta-graph per image, images in id order.
std::vector<ImageGraph> merge_images(const std::vector<GroundedCaptionRecord>& records,
                                     const EmbeddingStore& store, const MergeParams& params,
                                     int restarts, uint64_t seed, size_t threads,
                                     std::vector<std::string>* warnings = nullptr);

std::vector<ImageSample> sample_images(const std::vector<ImageGraph>& metas, uint64_t seed,
                                       size_t threads);

struct AugmentResult {
  std::vector<ControlCaptionPair> kept;
  std::vector<ControlCaptionPair> dropped;
  size_t ungrounded_samples = 0;
};

AugmentResult augment_samples(const std::vector<ImageSample>& samples, TextGenerator& generator,
                              QualityScorer& scorer, double threshold, size_t threads);

// Control-caption pairs evaluated against their own control signals.
std::vector<EvalItem> eval_items(const std::vector<ControlCaptionPair>& pairs);

struct PipelineSummary {
  size_t records = 0;
  size_t images = 0;
  size_t samples = 0;
  size_t kept = 0;
  size_t dropped = 0;
  size_t mixed = 0;
};

// Writes original.jsonl, meta.jsonl, samples.jsonl, pairs.jsonl, mixed.jsonl
// and report.json into config.out_dir. `stage` is set to the running stage
// name so callers can report where a failure happened.
PipelineSummary run_pipeline(const PipelineConfig& config, std::string* stage = nullptr);

struct RenderedReport {
  std::string table;
  std::string band_csv;
};

// Percentages with one decimal; L in words. Throws SchemaError.
RenderedReport render_report(const Json& report);

std::string percent(double fraction);

// Runs fn(i) for i in [0, n) on up to `threads` workers; rethrows the first
// failure by index.
void parallel_for(size_t n, size_t threads, const std::function<void(size_t)>& fn);

}  // namespace ssa
