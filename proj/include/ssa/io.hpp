#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "ssa/augment.hpp"
#include "ssa/error.hpp"
#include "ssa/grounding.hpp"
#include "ssa/merge.hpp"
#include "ssa/metrics.hpp"
#include "ssa/sampler.hpp"

namespace ssa {

using Json = nlohmann::json;

// A vgAMR (single caption or meta) for one image.
struct ImageGraph {
  std::string image_id;
  int image_width = 0;
  int image_height = 0;
  VgAmr graph;
};

struct ImageSample {
  std::string image_id;
  int image_width = 0;
  int image_height = 0;
  SampledSubgraph sample;
};

// Field-level conversions. Readers throw SchemaError naming the bad field.
Json to_json(const Box& b);
Box box_from_json(const Json& j);

Json to_json(const GroundedCaptionRecord& r);
GroundedCaptionRecord record_from_json(const Json& j);

// {image_id, image_width, image_height, penman, grounding, synonyms}
Json to_json(const ImageGraph& g);
ImageGraph image_graph_from_json(const Json& j);

// ImageGraph fields plus origin_predicate, kind and source_nodes.
Json to_json(const ImageSample& s);
ImageSample image_sample_from_json(const Json& j);

Json to_json(const ControlSignal& c);
ControlSignal control_from_json(const Json& j);

Json to_json(const ControlCaptionPair& p);
ControlCaptionPair pair_from_json(const Json& j);

Json to_json(const MetricReport& r);
MetricReport report_from_json(const Json& j);

// JSON-Lines files. A first line of the form {"_provenance": {...}} is a
// header: written when given, skipped by readers.
struct Provenance {
  std::string stage;
  std::string config_hash;
  uint64_t seed = 0;
};

// Throws ConfigError if the file cannot be opened, SchemaError on bad JSON.
std::vector<Json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& lines,
                 const Provenance* provenance = nullptr);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& body);

template <typename T, typename F>
std::vector<T> parse_lines(const std::vector<Json>& lines, F from_json) {
  std::vector<T> out;
  out.reserve(lines.size());
  for (size_t i = 0; i < lines.size(); ++i) {
    try {
      out.push_back(from_json(lines[i]));
    } catch (const Error& e) {
      if (e.category() != ErrorCategory::Data) throw;
      throw SchemaError("line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

template <typename T>
std::vector<Json> to_json_lines(const std::vector<T>& items) {
  std::vector<Json> out;
  out.reserve(items.size());
  for (const auto& it : items) out.push_back(to_json(it));
  return out;
}

}  // namespace ssa
