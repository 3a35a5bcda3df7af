#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "ssa/error.hpp"
#include "ssa/metrics.hpp"

using namespace ssa;

namespace {

EmbeddingStore small_store() {
  EmbeddingStore s(2);
  s.add("dog", {1, 0});
  s.add("puppy", {0.8, 0.6});
  s.add("cat", {0, 1});
  s.add("car", {-1, 0});
  return s;
}

// Distinct n-grams over total words, counted directly.
double distinct_oracle(const std::vector<std::string>& caps, int n) {
  std::set<std::vector<std::string>> grams;
  size_t words = 0;
  for (const auto& c : caps) {
    std::istringstream in(c);
    std::vector<std::string> w{std::istream_iterator<std::string>(in), {}};
    words += w.size();
    for (size_t i = 0; i + n <= w.size(); ++i) grams.insert({w.begin() + i, w.begin() + i + n});
  }
  return words ? double(grams.size()) / words : 0.0;
}

}  // namespace

TEST(Hungarian, MatchesExhaustiveSearch) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 150; ++t) {
    const int r = std::uniform_int_distribution<int>(1, 6)(rng);
    const int c = std::uniform_int_distribution<int>(1, 6)(rng);
    std::vector<std::vector<double>> s(r, std::vector<double>(c));
    for (auto& row : s)
      for (auto& x : row) x = u(rng);
    const Assignment a = hungarian_match(s);
    EXPECT_NEAR(a.total, oracle::assignment_exhaustive(s), 1e-9);
    EXPECT_EQ(a.pairs.size(), size_t(std::min(r, c)));
    std::set<size_t> rows, cols;
    double sum = 0;
    for (const auto& [i, j] : a.pairs) {
      EXPECT_TRUE(rows.insert(i).second);
      EXPECT_TRUE(cols.insert(j).second);
      sum += s[i][j];
    }
    EXPECT_NEAR(sum, a.total, 1e-9);
  }
}

TEST(ContentIou, HandCases) {
  const EmbeddingStore s = small_store();
  MatchResult m = content_iou({"dog", "cat"}, {"dog", "cat"}, s);
  EXPECT_DOUBLE_EQ(m.iou, 1.0);
  EXPECT_DOUBLE_EQ(m.hal, 0.0);

  m = content_iou({"dog", "cat"}, {"dog"}, s);
  EXPECT_DOUBLE_EQ(m.iou, 0.5);
  EXPECT_DOUBLE_EQ(m.hal, 0.5);

  m = content_iou({"puppy"}, {"dog"}, s);
  EXPECT_NEAR(m.intersection, 0.8, 1e-12);
  EXPECT_NEAR(m.iou, 0.8 / 1.2, 1e-12);
  EXPECT_NEAR(m.hal, 0.2, 1e-12);

  // Negative cosine counts as no overlap; unknown words match only themselves.
  EXPECT_DOUBLE_EQ(content_iou({"car"}, {"dog"}, s).iou, 0.0);
  EXPECT_DOUBLE_EQ(content_iou({"zebra"}, {"zebra"}, s).iou, 1.0);
}

TEST(Diversity, DistinctNgrams) {
  EXPECT_NEAR(distinct_ngram_diversity({"a dog runs", "a cat sits"}, 1), 5.0 / 6.0, 1e-12);
  EXPECT_NEAR(distinct_ngram_diversity({"a dog runs", "a cat sits"}, 2), 4.0 / 6.0, 1e-12);
  EXPECT_NEAR(distinct_ngram_diversity({"a dog runs", "a dog runs"}, 2), 2.0 / 6.0, 1e-12);
}

TEST(Diversity, SelfCiderBounds) {
  EXPECT_NEAR(self_cider({"a dog runs in the park", "a dog runs in the park", "a dog runs in the park"}), 0.0, 1e-6);
  EXPECT_NEAR(self_cider({"red apple", "blue sky above", "tall tree", "cold water flows"}), 1.0, 1e-6);
  EXPECT_THROW(self_cider({"", " "}), DegenerateKernel);
}

TEST(Diversity, SelfCiderTwoCaptionClosedForm) {
  // Normalized 2x2 kernel [[1, c], [c, 1]] has eigenvalues 1 +- c.
  const std::vector<std::string> caps{"a dog runs on the grass", "a dog sits on the grass"};
  const auto k = cider_kernel(caps);
  const double c = k[0][1] / std::sqrt(k[0][0] * k[1][1]);
  ASSERT_GT(c, 0.0);
  ASSERT_LT(c, 1.0);
  const double a = std::sqrt(1 + c), b = std::sqrt(1 - c);
  EXPECT_NEAR(self_cider(caps), -std::log(a / (a + b)) / std::log(2.0), 1e-9);
}

TEST(Diversity, Best5MatchesBruteForce) {
  const std::vector<std::string> words{"dog", "cat", "a", "the", "runs", "sits", "on", "grass", "red", "big"};
  std::mt19937_64 rng(12);
  for (int t = 0; t < 10; ++t) {
    std::vector<std::string> caps;
    for (int i = 0; i < 10; ++i) {
      std::string c;
      const int len = std::uniform_int_distribution<int>(2, 6)(rng);
      for (int k = 0; k < len; ++k)
        c += (k ? " " : "") + words[std::uniform_int_distribution<size_t>(0, words.size() - 1)(rng)];
      caps.push_back(c);
    }
    for (int n : {1, 2}) {
      double best = 0;
      for (const auto& subset : oracle::five_subsets(10)) {
        std::vector<std::string> pick;
        for (int i : subset) pick.push_back(caps[i]);
        best = std::max(best, distinct_oracle(pick, n));
      }
      EXPECT_NEAR(best5_for_image(caps, n), best, 1e-12);
    }
  }
  EXPECT_THROW(best5_diversity({{"a", "b"}}, 1), WrongSetSize);
}

TEST(Length, MaeAndLevelPrecision) {
  const LengthMetrics m = length_metrics(
      {10, 20}, {"one two three four five six seven eight nine ten eleven twelve",
                 "a b c d e f g h i j k l m n o p q r s"});
  EXPECT_DOUBLE_EQ(m.mae, 1.5);
  EXPECT_DOUBLE_EQ(m.level_precision, 0.5);
  EXPECT_THROW(length_metrics({1, 2}, {"x"}), LengthMismatch);
}

TEST(Overall, HarmonicMeanOfRows) {
  EXPECT_NEAR(harmonic_mean({67.3, 64.4, 42.8}), 55.8, 0.05);
  EXPECT_NEAR(harmonic_mean({77.6, 39.0, 67.4}), 56.2, 0.05);
  EXPECT_NEAR(harmonic_mean({76.2, 73.0, 78.7}), 75.9, 0.05);
  EXPECT_NEAR(harmonic_mean({54.0, 85.0, 78.6}), 69.8, 0.05);
  EXPECT_THROW(harmonic_mean({1.0, 0.0}), NonPositiveValue);
}

TEST(Bands, EqualWidthBins) {
  std::vector<ScoredPair> pairs{{0.05, 1.0, 0.0}, {0.07, 0.5, 0.5}, {0.95, 0.2, 0.4}, {1.0, 0.4, 0.2}};
  const auto bands = coverage_band_report(pairs, 10);
  ASSERT_EQ(bands.size(), 10u);
  EXPECT_EQ(bands[0].count, 2u);
  EXPECT_DOUBLE_EQ(bands[0].sample_percentage, 50.0);
  EXPECT_DOUBLE_EQ(*bands[0].iou, 0.75);
  EXPECT_EQ(bands[9].count, 2u);
  EXPECT_NEAR(*bands[9].hal, 0.3, 1e-12);
  EXPECT_FALSE(bands[4].iou.has_value());
  EXPECT_DOUBLE_EQ(bands[3].lower, 0.3);
}

TEST(Evaluate, PerImageAndAggregate) {
  const EmbeddingStore s = small_store();
  std::vector<EvalItem> items{
      {"b", "a dog and a cat", {"dog", "cat"}, 0.9, {"dog"}, 5, 0.2},
      {"b", "the puppy sleeps", {"puppy"}, 0.7, {"dog"}, 3, 0.1},
      {"a", "a cat", {"cat"}, 0.8, {"cat"}, 2, 0.5},
  };
  const MetricReport r = evaluate(items, AnnotatedNounExtractor{}, s, 10);
  ASSERT_EQ(r.images.size(), 2u);
  EXPECT_EQ(r.images[0].image_id, "a");
  EXPECT_DOUBLE_EQ(*r.images[0].values.iou, 1.0);
  EXPECT_FALSE(r.images[0].values.sc.has_value());
  const double iou_b = (0.5 + 0.8 / 1.2) / 2;
  EXPECT_NEAR(*r.images[1].values.iou, iou_b, 1e-12);
  EXPECT_NEAR(*r.images[1].values.g, 0.8, 1e-12);
  EXPECT_DOUBLE_EQ(*r.images[1].values.l, 0.0);
  EXPECT_NEAR(*r.aggregate.iou, (1.0 + iou_b) / 2, 1e-12);
  EXPECT_NEAR(*r.aggregate.g, (0.8 + 0.8) / 2, 1e-12);
  EXPECT_FALSE(r.aggregate.best5_d1.has_value());
  EXPECT_EQ(r.bands.size(), 10u);
}

TEST(Nouns, LexiconExtraction) {
  LexiconNounExtractor lex({"dog", "park"});
  EXPECT_EQ(lex.extract("A Dog runs in the park.", {}), (std::set<std::string>{"dog", "park"}));
  EXPECT_THROW(LexiconNounExtractor::load("/nonexistent/nouns.txt"), LexiconMissing);
}
