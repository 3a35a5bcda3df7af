#include "ssa/augment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include "ssa/error.hpp"

namespace ssa {

char to_char(LengthLevel level) { return static_cast<char>('A' + static_cast<int>(level)); }

LengthLevel length_level_from_char(char c) {
  if (c < 'A' || c > 'E') throw SchemaError(std::string("unknown length level '") + c + "'");
  return static_cast<LengthLevel>(c - 'A');
}

LengthLevel length_level(int word_count) {
  if (word_count < 1) throw std::invalid_argument("length_level needs at least one word");
  return static_cast<LengthLevel>(std::min(word_count / 10, 4));
}

std::vector<std::string> words(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) {
    const bool punctuation_only = std::all_of(tok.begin(), tok.end(), [](char c) {
      return std::ispunct(static_cast<unsigned char>(c));
    });
    if (!punctuation_only) out.push_back(tok);
  }
  return out;
}

int word_count(std::string_view text) { return static_cast<int>(words(text).size()); }

double compute_coverage(const std::vector<Box>& boxes, double width, double height) {
  if (!(width > 0 && height > 0)) throw InvalidBox("image dimensions must be positive");
  std::vector<Box> clipped;
  std::vector<double> xs;
  for (const auto& b : boxes) {
    Box c{std::clamp(b.x1, 0.0, width), std::clamp(b.y1, 0.0, height),
          std::clamp(b.x2, 0.0, width), std::clamp(b.y2, 0.0, height)};
    if (c.x1 >= c.x2 || c.y1 >= c.y2) continue;
    clipped.push_back(c);
    xs.push_back(c.x1);
    xs.push_back(c.x2);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

  double area = 0;
  std::vector<std::pair<double, double>> spans;
  for (size_t k = 0; k + 1 < xs.size(); ++k) {
    spans.clear();
    for (const auto& b : clipped)
      if (b.x1 <= xs[k] && b.x2 >= xs[k + 1]) spans.emplace_back(b.y1, b.y2);
    std::sort(spans.begin(), spans.end());
    double covered = 0, lo = 0, hi = -1;
    for (const auto& [y1, y2] : spans) {
      if (y1 > hi) {
        if (hi > lo) covered += hi - lo;
        lo = y1, hi = y2;
      } else {
        hi = std::max(hi, y2);
      }
    }
    if (hi > lo) covered += hi - lo;
    area += (xs[k + 1] - xs[k]) * covered;
  }
  return std::clamp(area / (width * height), 0.0, 1.0);
}

void set_length_control(ControlCaptionPair& pair) {
  const int n = word_count(pair.caption);
  pair.control.word_count_target = n;
  if (n >= 1) pair.control.length_level = length_level(n);
}

std::string concept_surface(const std::string& concept_label) {
  std::string s = strip_sense(concept_label);
  std::replace(s.begin(), s.end(), '-', ' ');
  return s;
}

namespace {

std::string surface(const std::string& concept_label) { return concept_surface(concept_label); }

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

void join_into(std::string& out, const std::string& piece) {
  if (piece.empty()) return;
  if (!out.empty()) out += ' ';
  out += piece;
}

class StubRealizer {
 public:
  explicit StubRealizer(const AmrGraph& g) : g_(g) {}

  std::string run() { return render(g_.root()); }

 private:
  std::string render(const VarId& v) {
    const std::string& label = g_.concept_of(v);
    if (!visited_.insert(v).second) return surface(label);

    auto out_edges = g_.outgoing(v);
    std::sort(out_edges.begin(), out_edges.end(), [](const Edge* a, const Edge* b) {
      return std::tie(a->role, a->target) < std::tie(b->role, b->target);
    });

    if (label == "and" || label == "or" || label == "multi-sentence") {
      const std::string sep = label == "multi-sentence" ? " ; " : " " + label + " ";
      std::string text;
      for (const auto* e : out_edges) {
        std::string part = render(e->target);
        if (part.empty()) continue;
        text += text.empty() ? part : sep + part;
      }
      return text;
    }

    const bool has_agent = std::any_of(out_edges.begin(), out_edges.end(),
                                       [](const Edge* e) { return e->role == ":ARG0"; });
    std::string before, after;
    for (const auto& a : g_.attributes()) {
      if (a.variable != v) continue;
      if (a.role == ":polarity" && a.value == "-")
        join_into(before, "not");
      else
        join_into(after, unquote(a.value));
    }
    for (const auto* e : out_edges) {
      const std::string part = render(e->target);
      if (e->role == ":ARG0" || e->role == ":mod" || e->role == ":quant" ||
          (e->role == ":ARG1" && !has_agent))
        join_into(before, part);
      else if (e->role == ":location")
        join_into(after, "at " + part);
      else
        join_into(after, part);
    }
    std::string text = before;
    join_into(text, surface(label));
    join_into(text, after);
    return text;
  }

  const AmrGraph& g_;
  std::set<VarId> visited_;
};

}  // namespace

std::string StubGenerator::generate(const AmrGraph& graph) { return StubRealizer(graph).run(); }

std::string realize_caption(const SampledSubgraph& sample, TextGenerator& generator) {
  std::string text = generator.generate(sample.graph.graph);
  if (text.find_first_not_of(" \t\r\n") == std::string::npos)
    throw EmptyOutput("generator returned no text for sample rooted at " +
                      sample.origin_predicate);
  return text;
}

FilterResult filter_by_quality(std::vector<ControlCaptionPair> pairs, QualityScorer& scorer,
                               double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0))
    throw ConfigError("quality threshold must lie in [0, 1]");
  FilterResult out;
  for (auto& p : pairs) {
    p.quality = scorer.score(p.caption);
    (*p.quality >= threshold ? out.kept : out.dropped).push_back(std::move(p));
  }
  return out;
}

ControlSignal extract_control(const SampledSubgraph& sample, int image_width, int image_height) {
  const VgAmr& g = sample.graph;
  if (g.grounding.empty())
    throw NoGroundedNodes("sample rooted at " + sample.origin_predicate +
                          " has no grounded node");
  ControlSignal c;
  std::set<std::string> labels;
  for (const auto& [v, boxes] : g.grounding) {
    c.boxes.insert(boxes.begin(), boxes.end());
    labels.insert(surface(g.graph.concept_of(v)));
  }
  c.entity_labels.assign(labels.begin(), labels.end());
  c.coverage = compute_coverage({c.boxes.begin(), c.boxes.end()}, image_width, image_height);

  std::vector<std::string> verbs;
  for (const auto& [v, n] : g.graph.nodes())
    if (is_predicate(g, v)) verbs.push_back(surface(n.concept_label));
  if (!verbs.empty()) c.verbs = std::move(verbs);
  return c;
}

void MixSpec::validate() const {
  if (strategy == MixStrategy::Random && !(percentage >= 0 && percentage <= 100))
    throw ConfigError("random mixing percentage must lie in [0, 100]");
  if (strategy == MixStrategy::UniformCoverage && bins < 1)
    throw ConfigError("uniform-coverage mixing needs at least one bin");
}

int coverage_bin(double coverage, int bins) {
  const int b = static_cast<int>(std::floor(std::clamp(coverage, 0.0, 1.0) * bins));
  return std::min(b, bins - 1);
}

std::vector<int> bin_counts(const std::vector<ControlCaptionPair>& pairs, int bins) {
  std::vector<int> counts(static_cast<size_t>(bins), 0);
  for (const auto& p : pairs) ++counts[coverage_bin(p.control.coverage, bins)];
  return counts;
}

std::vector<ControlCaptionPair> mix_datasets(const std::vector<ControlCaptionPair>& original,
                                             const std::vector<ControlCaptionPair>& ssa,
                                             const MixSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::vector<size_t> chosen;

  if (spec.strategy == MixStrategy::Random) {
    const auto k = static_cast<size_t>(
        std::floor(spec.percentage * static_cast<double>(ssa.size()) / 100.0));
    std::vector<size_t> all(ssa.size());
    std::iota(all.begin(), all.end(), 0);
    std::sample(all.begin(), all.end(), std::back_inserter(chosen), k, rng);
  } else {
    const int bins = spec.bins;
    const auto original_counts = bin_counts(original, bins);
    std::vector<long> counts(original_counts.begin(), original_counts.end());
    std::vector<std::vector<size_t>> pool(static_cast<size_t>(bins));
    for (size_t i = 0; i < ssa.size(); ++i)
      pool[coverage_bin(ssa[i].control.coverage, bins)].push_back(i);
    for (auto& p : pool) std::shuffle(p.begin(), p.end(), rng);

    long total = std::accumulate(counts.begin(), counts.end(), 0L);
    for (;;) {
      int target = -1;
      for (int b = 0; b < bins; ++b)
        if (!pool[b].empty() && (target < 0 || counts[b] < counts[target])) target = b;
      if (target < 0) break;
      // Adding one to bin b lowers the variance iff c_b < mean - (1 - 1/B) / 2.
      if (2L * bins * counts[target] + bins - 1 >= 2L * total) break;
      chosen.push_back(pool[target].back());
      pool[target].pop_back();
      ++counts[target];
      ++total;
    }
    std::sort(chosen.begin(), chosen.end());
  }

  std::vector<ControlCaptionPair> out = original;
  out.reserve(original.size() + chosen.size());
  for (size_t i : chosen) out.push_back(ssa[i]);
  return out;
}

}  // namespace ssa
