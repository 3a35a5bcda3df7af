#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ssa/embeddings.hpp"

namespace ssa {

// ---------------------------------------------------------------------------
// Noun extraction
// ---------------------------------------------------------------------------

class NounExtractor {
 public:
  virtual ~NounExtractor() = default;
  // `annotated` carries nouns supplied with the caption, when any.
  virtual std::set<std::string> extract(std::string_view caption,
                                        const std::vector<std::string>& annotated) const = 0;
};

// Caption tokens (case-folded, edge punctuation trimmed) found in a lexicon.
class LexiconNounExtractor : public NounExtractor {
 public:
  explicit LexiconNounExtractor(std::set<std::string> lexicon);
  // One noun per line. Throws LexiconMissing.
  static LexiconNounExtractor load(const std::filesystem::path& path);

  std::set<std::string> extract(std::string_view caption,
                                const std::vector<std::string>& annotated) const override;

 private:
  std::set<std::string> lexicon_;
};

// Uses the nouns stored alongside each caption.
class AnnotatedNounExtractor : public NounExtractor {
 public:
  std::set<std::string> extract(std::string_view caption,
                                const std::vector<std::string>& annotated) const override;
};

// ---------------------------------------------------------------------------
// Content controllability
// ---------------------------------------------------------------------------

struct Assignment {
  std::vector<std::pair<size_t, size_t>> pairs;  // (row, column)
  double total = 0;
};

// Maximum-total assignment that matches every row (rows <= columns) or every
// column (otherwise).
Assignment hungarian_match(const std::vector<std::vector<double>>& similarity);

struct MatchResult {
  std::vector<std::pair<std::string, std::string>> assignment;  // (generated, control)
  double intersection = 0;
  double iou = 0;
  double hal = 0;
};

// Soft IoU I / (|N| + |E| - I) and Hal = (|N| - I) / |N|, where I is the
// Hungarian total of clamped-at-zero cosine similarities. Identical words
// score 1; words without embeddings score 0 against anything else.
MatchResult content_iou(const std::set<std::string>& generated,
                        const std::set<std::string>& control, const EmbeddingStore& store);

// ---------------------------------------------------------------------------
// Diversity
// ---------------------------------------------------------------------------

// Distinct n-grams over the set divided by the total word count of the set.
double distinct_ngram_diversity(const std::vector<std::string>& captions, int n);

// Diversity from the eigenvalues of the normalized pairwise CIDEr kernel.
double self_cider(const std::vector<std::string>& captions);

// Pairwise CIDEr kernel (1-4 grams, TF-IDF over the set itself, no length
// penalty), before normalization.
std::vector<std::vector<double>> cider_kernel(const std::vector<std::string>& captions);

inline constexpr size_t kBest5SetSize = 10;
inline constexpr size_t kBest5SubsetSize = 5;

// Best distinct-n diversity over all 5-caption subsets of one image's 10.
double best5_for_image(const std::vector<std::string>& captions, int n);
// Mean of best5_for_image over images. Throws WrongSetSize.
double best5_diversity(const std::vector<std::vector<std::string>>& caption_sets, int n);

// ---------------------------------------------------------------------------
// Length and overall
// ---------------------------------------------------------------------------

struct LengthMetrics {
  double mae = 0;              // L, in words
  double level_precision = 0;  // LP, fraction in [0, 1]
};

LengthMetrics length_metrics(const std::vector<int>& targets,
                             const std::vector<std::string>& outputs);

// n / sum(1 / v). Throws NonPositiveValue.
double harmonic_mean(const std::vector<double>& values);

// ---------------------------------------------------------------------------
// Reporting
// ---------------------------------------------------------------------------

struct BandStats {
  double lower = 0;
  double upper = 0;
  size_t count = 0;
  double sample_percentage = 0;
  std::optional<double> iou;
  std::optional<double> hal;
};

struct ScoredPair {
  double coverage = 0;
  double iou = 0;
  double hal = 0;
};

std::vector<BandStats> coverage_band_report(const std::vector<ScoredPair>& pairs,
                                            int bands = 10);

struct MetricValues {
  std::optional<double> iou, hal, g, sc, d1, d2, l, lp, h, best5_d1, best5_d2;
};

struct ImageMetrics {
  std::string image_id;
  size_t pairs = 0;
  MetricValues values;
};

struct MetricReport {
  std::vector<ImageMetrics> images;
  MetricValues aggregate;
  std::vector<BandStats> bands;
};

// One evaluated caption with the control it was generated from.
struct EvalItem {
  std::string image_id;
  std::string caption;
  std::vector<std::string> annotated_nouns;
  std::optional<double> quality;
  std::vector<std::string> control_entities;
  int word_count_target = 0;
  double coverage = 0;
};

// Per-image values are means over the image's items (diversity over its
// caption set); aggregates are means over images, except H, which is the
// harmonic mean of the aggregate IoU, G and sC.
MetricReport evaluate(const std::vector<EvalItem>& items, const NounExtractor& nouns,
                      const EmbeddingStore& store, int bands = 10);

}  // namespace ssa
