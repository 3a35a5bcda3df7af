#include "ssa/metrics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <unordered_map>

#include "ssa/augment.hpp"
#include "ssa/error.hpp"

namespace ssa {

namespace {

std::string trim_punctuation(std::string_view tok) {
  size_t b = 0, e = tok.size();
  while (b < e && std::ispunct(static_cast<unsigned char>(tok[b]))) ++b;
  while (e > b && std::ispunct(static_cast<unsigned char>(tok[e - 1]))) --e;
  return std::string(tok.substr(b, e - b));
}

std::vector<std::string> normalized_words(std::string_view caption) {
  std::vector<std::string> out;
  for (const auto& w : words(caption)) out.push_back(case_fold(trim_punctuation(w)));
  return out;
}

using Ngram = std::string;

std::vector<Ngram> ngrams(const std::vector<std::string>& toks, int n) {
  std::vector<Ngram> out;
  for (size_t i = 0; i + static_cast<size_t>(n) <= toks.size(); ++i) {
    Ngram g = toks[i];
    for (int k = 1; k < n; ++k) g += '\x1f' + toks[i + static_cast<size_t>(k)];
    out.push_back(std::move(g));
  }
  return out;
}

double mean(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

}  // namespace

// ---------------------------------------------------------------------------

LexiconNounExtractor::LexiconNounExtractor(std::set<std::string> lexicon) {
  for (const auto& w : lexicon) lexicon_.insert(case_fold(w));
}

LexiconNounExtractor LexiconNounExtractor::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LexiconMissing("cannot read noun lexicon " + path.string());
  std::set<std::string> lexicon;
  std::string line;
  while (std::getline(in, line)) {
    const std::string w = trim_punctuation(line);
    if (!w.empty() && w.front() != '#') lexicon.insert(w);
  }
  return LexiconNounExtractor(std::move(lexicon));
}

std::set<std::string> LexiconNounExtractor::extract(std::string_view caption,
                                                    const std::vector<std::string>&) const {
  std::set<std::string> out;
  for (const auto& w : normalized_words(caption))
    if (lexicon_.contains(w)) out.insert(w);
  return out;
}

std::set<std::string> AnnotatedNounExtractor::extract(
    std::string_view, const std::vector<std::string>& annotated) const {
  std::set<std::string> out;
  for (const auto& w : annotated) out.insert(case_fold(w));
  return out;
}

// ---------------------------------------------------------------------------

Assignment hungarian_match(const std::vector<std::vector<double>>& similarity) {
  Assignment out;
  if (similarity.empty() || similarity.front().empty()) return out;
  const size_t rows = similarity.size(), cols = similarity.front().size();
  for (const auto& r : similarity)
    if (r.size() != cols) throw std::invalid_argument("similarity matrix is ragged");

  const bool transpose = rows > cols;
  const size_t n = transpose ? cols : rows;  // n <= m
  const size_t m = transpose ? rows : cols;
  auto cost = [&](size_t i, size_t j) {  // 1-based
    return transpose ? -similarity[j - 1][i - 1] : -similarity[i - 1][j - 1];
  };

  // Shortest augmenting paths with potentials; p[j] is the row matched to column j.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0), v(m + 1, 0);
  std::vector<size_t> p(m + 1, 0), way(m + 1, 0);
  for (size_t i = 1; i <= n; ++i) {
    p[0] = i;
    size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const size_t i0 = p[j0];
      double delta = inf;
      size_t j1 = 0;
      for (size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) minv[j] = cur, way[j] = j0;
        if (minv[j] < delta) delta = minv[j], j1 = j;
      }
      for (size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  for (size_t j = 1; j <= m; ++j) {
    if (p[j] == 0) continue;
    const size_t r = transpose ? j - 1 : p[j] - 1;
    const size_t c = transpose ? p[j] - 1 : j - 1;
    out.pairs.emplace_back(r, c);
    out.total += similarity[r][c];
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  return out;
}

MatchResult content_iou(const std::set<std::string>& generated,
                        const std::set<std::string>& control, const EmbeddingStore& store) {
  MatchResult r;
  const std::vector<std::string> gen(generated.begin(), generated.end());
  const std::vector<std::string> ctl(control.begin(), control.end());
  if (!gen.empty() && !ctl.empty()) {
    std::vector<std::vector<double>> sim(gen.size(), std::vector<double>(ctl.size(), 0.0));
    for (size_t i = 0; i < gen.size(); ++i) {
      for (size_t j = 0; j < ctl.size(); ++j) {
        if (case_fold(gen[i]) == case_fold(ctl[j]))
          sim[i][j] = 1.0;
        else
          sim[i][j] = std::max(0.0, store.cosine(gen[i], ctl[j]).value_or(0.0));
      }
    }
    const Assignment a = hungarian_match(sim);
    for (const auto& [i, j] : a.pairs) r.assignment.emplace_back(gen[i], ctl[j]);
    r.intersection = a.total;
  }
  const double n = static_cast<double>(gen.size()), e = static_cast<double>(ctl.size());
  const double uni = n + e - r.intersection;
  r.iou = uni > 0 ? std::clamp(r.intersection / uni, 0.0, 1.0) : 0.0;
  r.hal = n > 0 ? std::clamp((n - r.intersection) / n, 0.0, 1.0) : 0.0;
  return r;
}

// ---------------------------------------------------------------------------

double distinct_ngram_diversity(const std::vector<std::string>& captions, int n) {
  if (n < 1) throw std::invalid_argument("n-gram order must be positive");
  std::set<Ngram> distinct;
  size_t total_words = 0;
  for (const auto& c : captions) {
    const auto toks = normalized_words(c);
    total_words += toks.size();
    for (auto& g : ngrams(toks, n)) distinct.insert(std::move(g));
  }
  return total_words ? static_cast<double>(distinct.size()) / static_cast<double>(total_words)
                     : 0.0;
}

std::vector<std::vector<double>> cider_kernel(const std::vector<std::string>& captions) {
  constexpr int kMaxOrder = 4;
  const size_t k = captions.size();
  using Vec = std::unordered_map<Ngram, double>;
  std::vector<std::array<Vec, kMaxOrder>> vecs(k);

  std::vector<std::array<std::map<Ngram, int>, kMaxOrder>> counts(k);
  std::array<std::map<Ngram, int>, kMaxOrder> df;
  for (size_t i = 0; i < k; ++i) {
    const auto toks = normalized_words(captions[i]);
    for (int n = 1; n <= kMaxOrder; ++n) {
      for (const auto& g : ngrams(toks, n)) ++counts[i][n - 1][g];
      for (const auto& [g, c] : counts[i][n - 1]) ++df[n - 1][g];
    }
  }
  // Smoothed idf keeps n-grams shared by every caption informative.
  const double kd = static_cast<double>(k);
  for (size_t i = 0; i < k; ++i) {
    for (int n = 0; n < kMaxOrder; ++n) {
      for (const auto& [g, c] : counts[i][n])
        vecs[i][n][g] = c * std::log((kd + 1.0) / df[n].at(g));
    }
  }

  auto cosine = [](const Vec& a, const Vec& b) {
    double dot = 0, na = 0, nb = 0;
    for (const auto& [g, x] : a) {
      na += x * x;
      if (auto it = b.find(g); it != b.end()) dot += x * it->second;
    }
    for (const auto& [g, y] : b) nb += y * y;
    return (na > 0 && nb > 0) ? dot / std::sqrt(na * nb) : 0.0;
  };

  std::vector<std::vector<double>> m(k, std::vector<double>(k, 0.0));
  for (size_t i = 0; i < k; ++i) {
    for (size_t j = i; j < k; ++j) {
      double s = 0;
      for (int n = 0; n < kMaxOrder; ++n) s += cosine(vecs[i][n], vecs[j][n]);
      m[i][j] = m[j][i] = s / kMaxOrder;
    }
  }
  return m;
}

double self_cider(const std::vector<std::string>& captions) {
  const size_t k = captions.size();
  if (k < 2) throw std::invalid_argument("self-CIDEr needs at least two captions");
  const auto raw = cider_kernel(captions);

  Eigen::MatrixXd kernel(k, k);
  bool any = false;
  for (size_t i = 0; i < k; ++i) {
    for (size_t j = 0; j < k; ++j) {
      const double denom = std::sqrt(raw[i][i] * raw[j][j]);
      kernel(i, j) = denom > 0 ? raw[i][j] / denom : 0.0;
      any = any || kernel(i, j) != 0.0;
    }
  }
  if (!any) throw DegenerateKernel("all pairwise CIDEr similarities are zero");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(kernel, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd lambda = solver.eigenvalues().cwiseMax(0.0);
  const double sum_sqrt = lambda.cwiseSqrt().sum();
  const double ratio = std::sqrt(lambda.maxCoeff()) / sum_sqrt;
  const double sc = -std::log(ratio) / std::log(static_cast<double>(k));
  return std::clamp(sc, 0.0, 1.0);
}

namespace {

// Branch and bound over 5-subsets with incremental n-gram counts.
class Best5Search {
 public:
  Best5Search(const std::vector<std::string>& captions, int n) {
    for (const auto& c : captions) {
      const auto toks = normalized_words(c);
      word_counts_.push_back(toks.size());
      auto g = ngrams(toks, n);
      std::set<Ngram> uniq(g.begin(), g.end());
      grams_.emplace_back(uniq.begin(), uniq.end());
    }
  }

  double run() {
    search(0, 0, 0);
    return best_;
  }

 private:
  double bound(size_t next, size_t chosen, size_t distinct, size_t words) const {
    const size_t need = kBest5SubsetSize - chosen;
    std::vector<size_t> d, w;
    for (size_t i = next; i < grams_.size(); ++i) {
      d.push_back(grams_[i].size());
      w.push_back(word_counts_[i]);
    }
    if (d.size() < need) return -1.0;
    std::partial_sort(d.begin(), d.begin() + static_cast<long>(need), d.end(), std::greater<>());
    std::partial_sort(w.begin(), w.begin() + static_cast<long>(need), w.end());
    const size_t dd = distinct + std::accumulate(d.begin(), d.begin() + static_cast<long>(need), size_t{0});
    const size_t ww = words + std::accumulate(w.begin(), w.begin() + static_cast<long>(need), size_t{0});
    return ww ? static_cast<double>(dd) / static_cast<double>(ww)
              : std::numeric_limits<double>::infinity();
  }

  void search(size_t next, size_t chosen, size_t words) {
    if (chosen == kBest5SubsetSize) {
      const double v = words ? static_cast<double>(live_.size()) / static_cast<double>(words) : 0.0;
      best_ = std::max(best_, v);
      return;
    }
    if (bound(next, chosen, live_.size(), words) <= best_) return;
    for (size_t i = next; i < grams_.size(); ++i) {
      for (const auto& g : grams_[i]) ++live_[g];
      search(i + 1, chosen + 1, words + word_counts_[i]);
      for (const auto& g : grams_[i])
        if (--live_[g] == 0) live_.erase(g);
    }
  }

  std::vector<std::vector<Ngram>> grams_;
  std::vector<size_t> word_counts_;
  std::unordered_map<Ngram, int> live_;
  double best_ = -1.0;
};

}  // namespace

double best5_for_image(const std::vector<std::string>& captions, int n) {
  if (captions.size() != kBest5SetSize)
    throw WrongSetSize("best-5 diversity needs exactly " + std::to_string(kBest5SetSize) +
                       " captions, got " + std::to_string(captions.size()));
  return std::max(0.0, Best5Search(captions, n).run());
}

double best5_diversity(const std::vector<std::vector<std::string>>& caption_sets, int n) {
  if (caption_sets.empty()) throw WrongSetSize("no caption sets");
  std::vector<double> per_image;
  for (const auto& set : caption_sets) per_image.push_back(best5_for_image(set, n));
  return mean(per_image);
}

// ---------------------------------------------------------------------------

LengthMetrics length_metrics(const std::vector<int>& targets,
                             const std::vector<std::string>& outputs) {
  if (targets.size() != outputs.size())
    throw LengthMismatch(std::to_string(targets.size()) + " targets vs " +
                         std::to_string(outputs.size()) + " outputs");
  LengthMetrics m;
  if (targets.empty()) return m;
  double abs_err = 0;
  size_t hits = 0;
  for (size_t i = 0; i < targets.size(); ++i) {
    const int got = word_count(outputs[i]);
    abs_err += std::abs(targets[i] - got);
    if (got >= 1 && targets[i] >= 1 && length_level(got) == length_level(targets[i])) ++hits;
  }
  const double n = static_cast<double>(targets.size());
  m.mae = abs_err / n;
  m.level_precision = static_cast<double>(hits) / n;
  return m;
}

double harmonic_mean(const std::vector<double>& values) {
  if (values.empty()) throw NonPositiveValue("harmonic mean of nothing");
  double inv = 0;
  for (double v : values) {
    if (!(v > 0)) throw NonPositiveValue("harmonic mean needs positive values");
    inv += 1.0 / v;
  }
  return static_cast<double>(values.size()) / inv;
}

// ---------------------------------------------------------------------------

std::vector<BandStats> coverage_band_report(const std::vector<ScoredPair>& pairs, int bands) {
  if (bands < 1) throw std::invalid_argument("need at least one coverage band");
  std::vector<BandStats> out(static_cast<size_t>(bands));
  std::vector<std::vector<const ScoredPair*>> members(static_cast<size_t>(bands));
  for (const auto& p : pairs) members[coverage_bin(p.coverage, bands)].push_back(&p);
  for (int b = 0; b < bands; ++b) {
    auto& s = out[b];
    s.lower = static_cast<double>(b) / bands;
    s.upper = static_cast<double>(b + 1) / bands;
    s.count = members[b].size();
    s.sample_percentage =
        pairs.empty() ? 0.0 : 100.0 * static_cast<double>(s.count) / static_cast<double>(pairs.size());
    if (s.count) {
      double iou = 0, hal = 0;
      for (const auto* p : members[b]) iou += p->iou, hal += p->hal;
      s.iou = iou / static_cast<double>(s.count);
      s.hal = hal / static_cast<double>(s.count);
    }
  }
  return out;
}

namespace {

struct Accumulator {
  std::map<std::string, std::vector<double>> values;
  void add(const std::string& key, const std::optional<double>& v) {
    if (v) values[key].push_back(*v);
  }
  std::optional<double> mean_of(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end() || it->second.empty()) return std::nullopt;
    return mean(it->second);
  }
};

std::optional<double> harmonic_if_positive(const MetricValues& v) {
  if (!v.iou || !v.g || !v.sc || *v.iou <= 0 || *v.g <= 0 || *v.sc <= 0) return std::nullopt;
  return harmonic_mean({*v.iou, *v.g, *v.sc});
}

}  // namespace

MetricReport evaluate(const std::vector<EvalItem>& items, const NounExtractor& nouns,
                      const EmbeddingStore& store, int bands) {
  std::map<std::string, std::vector<const EvalItem*>> by_image;
  for (const auto& it : items) by_image[it.image_id].push_back(&it);

  MetricReport report;
  std::vector<ScoredPair> scored;
  Accumulator agg;
  for (const auto& [image, group] : by_image) {
    ImageMetrics im{image, group.size(), {}};
    std::vector<double> ious, hals, gs;
    std::vector<std::string> captions;
    std::vector<int> targets;
    std::vector<std::string> targeted;
    for (const auto* item : group) {
      std::set<std::string> control;
      for (const auto& e : item->control_entities) control.insert(case_fold(e));
      const MatchResult m =
          content_iou(nouns.extract(item->caption, item->annotated_nouns), control, store);
      ious.push_back(m.iou);
      hals.push_back(m.hal);
      scored.push_back({item->coverage, m.iou, m.hal});
      if (item->quality) gs.push_back(*item->quality);
      captions.push_back(item->caption);
      if (item->word_count_target >= 1) {
        targets.push_back(item->word_count_target);
        targeted.push_back(item->caption);
      }
    }
    auto& v = im.values;
    v.iou = mean(ious);
    v.hal = mean(hals);
    if (!gs.empty()) v.g = mean(gs);
    v.d1 = distinct_ngram_diversity(captions, 1);
    v.d2 = distinct_ngram_diversity(captions, 2);
    if (captions.size() >= 2) {
      try {
        v.sc = self_cider(captions);
      } catch (const DegenerateKernel&) {
      }
    }
    if (!targets.empty()) {
      const LengthMetrics lm = length_metrics(targets, targeted);
      v.l = lm.mae;
      v.lp = lm.level_precision;
    }
    if (captions.size() == kBest5SetSize) {
      v.best5_d1 = best5_for_image(captions, 1);
      v.best5_d2 = best5_for_image(captions, 2);
    }
    v.h = harmonic_if_positive(v);

    agg.add("iou", v.iou), agg.add("hal", v.hal), agg.add("g", v.g), agg.add("sc", v.sc);
    agg.add("d1", v.d1), agg.add("d2", v.d2), agg.add("l", v.l), agg.add("lp", v.lp);
    agg.add("best5_d1", v.best5_d1), agg.add("best5_d2", v.best5_d2);
    report.images.push_back(std::move(im));
  }

  auto& a = report.aggregate;
  a.iou = agg.mean_of("iou"), a.hal = agg.mean_of("hal"), a.g = agg.mean_of("g");
  a.sc = agg.mean_of("sc"), a.d1 = agg.mean_of("d1"), a.d2 = agg.mean_of("d2");
  a.l = agg.mean_of("l"), a.lp = agg.mean_of("lp");
  a.best5_d1 = agg.mean_of("best5_d1"), a.best5_d2 = agg.mean_of("best5_d2");
  a.h = harmonic_if_positive(a);
  report.bands = coverage_band_report(scored, bands);
  return report;
}

}  // namespace ssa
