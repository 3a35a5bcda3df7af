#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ssa/grounding.hpp"
#include "ssa/sampler.hpp"

namespace ssa {

enum class LengthLevel { A, B, C, D, E };

char to_char(LengthLevel level);
LengthLevel length_level_from_char(char c);

// A: 1-9 words, B: 10-19, C: 20-29, D: 30-39, E: 40 or more.
LengthLevel length_level(int word_count);

// Whitespace tokens, ignoring tokens made only of punctuation.
std::vector<std::string> words(std::string_view text);
int word_count(std::string_view text);

// Concept label as text: sense suffix stripped, hyphens to spaces.
std::string concept_surface(const std::string& concept_label);

// Area of the union of `boxes` over width * height, exact.
double compute_coverage(const std::vector<Box>& boxes, double width, double height);

struct ControlSignal {
  BoxSet boxes;
  std::vector<std::string> entity_labels;  // sorted, unique
  double coverage = 0;
  LengthLevel length_level = LengthLevel::A;
  int word_count_target = 0;
  std::optional<std::vector<std::string>> verbs;
};

enum class PairSource { Original, Ssa };

struct ControlCaptionPair {
  std::string image_id;
  std::string caption;
  ControlSignal control;
  PairSource source = PairSource::Ssa;
  std::optional<double> quality;
};

// Sets word_count_target and length_level from the caption.
void set_length_control(ControlCaptionPair& pair);

class TextGenerator {
 public:
  virtual ~TextGenerator() = default;
  virtual std::string generate(const AmrGraph& graph) = 0;
};

// Deterministic realization: depth-first from the root, sense suffixes
// stripped, arguments placed by role templates (:ARG0 before the head, :ARG1
// before the head when there is no :ARG0, other roles after it).
class StubGenerator : public TextGenerator {
 public:
  std::string generate(const AmrGraph& graph) override;
};

class QualityScorer {
 public:
  virtual ~QualityScorer() = default;
  virtual double score(std::string_view caption) = 0;
};

class ConstantScorer : public QualityScorer {
 public:
  explicit ConstantScorer(double value) : value_(value) {}
  double score(std::string_view) override { return value_; }

 private:
  double value_;
};

class FunctionScorer : public QualityScorer {
 public:
  explicit FunctionScorer(std::function<double(std::string_view)> fn) : fn_(std::move(fn)) {}
  double score(std::string_view caption) override { return fn_(caption); }

 private:
  std::function<double(std::string_view)> fn_;
};

// Throws EmptyOutput when the generator returns only whitespace.
std::string realize_caption(const SampledSubgraph& sample, TextGenerator& generator);

inline constexpr double kDefaultQualityThreshold = 0.7;

struct FilterResult {
  std::vector<ControlCaptionPair> kept;
  std::vector<ControlCaptionPair> dropped;
};

// Keeps pairs scoring >= threshold. Every pair gets its quality set.
FilterResult filter_by_quality(std::vector<ControlCaptionPair> pairs, QualityScorer& scorer,
                               double threshold = kDefaultQualityThreshold);

// Boxes, entity labels, coverage and verbs of a sample. Length fields are
// left for the caller. Throws NoGroundedNodes.
ControlSignal extract_control(const SampledSubgraph& sample, int image_width, int image_height);

enum class MixStrategy { Random, UniformCoverage };

struct MixSpec {
  MixStrategy strategy = MixStrategy::Random;
  double percentage = 0;  // Random
  int bins = 10;          // UniformCoverage: equal-width bins over [0, 1]
  uint64_t seed = 0;

  void validate() const;
};

int coverage_bin(double coverage, int bins);

// All of `original`, followed by the chosen SSA pairs in their input order.
//  Random: a seeded uniform subset of floor(p * N_ssa / 100) SSA pairs.
//  UniformCoverage: repeatedly add a random SSA pair from the least populated
//  bin that still has candidates, as long as that lowers the variance of the
//  per-bin counts.
std::vector<ControlCaptionPair> mix_datasets(const std::vector<ControlCaptionPair>& original,
                                             const std::vector<ControlCaptionPair>& ssa,
                                             const MixSpec& spec);

std::vector<int> bin_counts(const std::vector<ControlCaptionPair>& pairs, int bins);

}  // namespace ssa
