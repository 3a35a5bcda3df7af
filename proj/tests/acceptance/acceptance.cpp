// One PASS/FAIL line per acceptance criterion; exits non-zero if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <queue>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "ssa/augment.hpp"
#include "ssa/error.hpp"
#include "ssa/merge.hpp"
#include "ssa/metrics.hpp"
#include "ssa/pipeline.hpp"
#include "ssa/sampler.hpp"
#include "ssa/smatch.hpp"

using namespace ssa;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kHarmonicTol = 0.05;
constexpr double kDiversityTol = 1e-6;
constexpr double kAssignmentTol = 1e-9;
constexpr double kHarmonicBudget = 1;
constexpr double kSmatchBudget = 30;
constexpr double kHungarianBudget = 10;
constexpr double kMergeBudget = 60;
constexpr double kSamplerBudget = 10;
constexpr double kSmokeBudget = 60;

const fs::path kFixture = FIXTURE_DIR;

struct Outcome {
  bool ok = true;
  std::string detail;

  void check(bool cond, const std::string& what) {
    if (!cond && ok) detail = what;
    ok = ok && cond;
  }
};

int failures = 0;

void run(const std::string& name, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.ok = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (budget_s > 0 && secs >= budget_s) {
    o.check(false, "took " + std::to_string(secs) + " s");
  }
  if (!o.ok) ++failures;
  std::printf("%s  %-34s %8.3f s  %s\n", o.ok ? "PASS" : "FAIL", name.c_str(), secs,
              o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double count_variance(const std::vector<ControlCaptionPair>& pairs, int bins) {
  std::vector<double> c(bins, 0);
  for (const auto& p : pairs) c[std::min(bins - 1, int(p.control.coverage * bins))] += 1;
  double m = 0, v = 0;
  for (double x : c) m += x;
  m /= bins;
  for (double x : c) v += (x - m) * (x - m);
  return v / bins;
}

bool connected_from_root(const AmrGraph& g) {
  std::set<VarId> seen{g.root()};
  std::queue<VarId> q;
  q.push(g.root());
  while (!q.empty()) {
    const VarId v = q.front();
    q.pop();
    for (const auto* e : g.outgoing(v))
      if (seen.insert(e->target).second) q.push(e->target);
  }
  return seen.size() == g.nodes().size();
}

std::string read_all(const fs::path& dir) {
  std::string out;
  for (const char* f : {"original.jsonl", "meta.jsonl", "samples.jsonl", "pairs.jsonl", "mixed.jsonl", "report.json"})
    out += read_text_file(dir / f);
  return out;
}

PipelineConfig fixture_config(const std::string& out) {
  PipelineConfig c = load_config(kFixture / "pipeline.toml");
  c.out_dir = fs::temp_directory_path() / out;
  fs::remove_all(c.out_dir);
  return c;
}

}  // namespace

int main() {
  run("harmonic-mean reproduction", kHarmonicBudget, [] {
    Outcome o;
    const std::vector<std::pair<std::vector<double>, double>> rows = {
        {{67.3, 64.4, 42.8}, 55.8}, {{77.6, 39.0, 67.4}, 56.2},
        {{76.2, 73.0, 78.7}, 75.9}, {{54.0, 85.0, 78.6}, 69.8}};
    for (const auto& [in, want] : rows) {
      const double h = harmonic_mean(in);
      o.check(std::fabs(h - want) <= kHarmonicTol, "H=" + fmt(h) + " want " + fmt(want));
    }
    return o;
  });

  run("smatch hill-climb = brute force", kSmatchBudget, [] {
    Outcome o;
    std::mt19937_64 rng(7);
    int equal = 0;
    for (int t = 0; t < 100; ++t) {
      const AmrGraph a = oracle::random_graph(rng, std::uniform_int_distribution<int>(1, 6)(rng));
      const AmrGraph b = oracle::random_graph(rng, std::uniform_int_distribution<int>(1, 6)(rng));
      const double hc = smatch_score(a, b, 4, t).f1;
      const double bf = smatch_brute_force(a, b).f1;
      const double ex = oracle::smatch_exhaustive(a, b).f1;
      o.check(bf == ex, "brute force disagrees with oracle on pair " + std::to_string(t));
      if (hc == bf) ++equal;
    }
    o.check(equal == 100, std::to_string(100 - equal) + "/100 pairs below optimum");
    if (o.ok) o.detail = "100/100 pairs";
    return o;
  });

  run("hungarian = exhaustive", kHungarianBudget, [] {
    Outcome o;
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int t = 0; t < 200; ++t) {
      const int r = std::uniform_int_distribution<int>(1, 7)(rng);
      const int c = std::uniform_int_distribution<int>(1, 7)(rng);
      std::vector<std::vector<double>> s(r, std::vector<double>(c));
      for (auto& row : s)
        for (auto& x : row) x = u(rng);
      const double got = hungarian_match(s).total, want = oracle::assignment_exhaustive(s);
      o.check(std::fabs(got - want) <= kAssignmentTol, "matrix " + std::to_string(t) + ": " + fmt(got) + " vs " + fmt(want));
    }
    if (o.ok) o.detail = "200 matrices up to 7x7";
    return o;
  });

  run("meta-merge preservation", kMergeBudget, [] {
    Outcome o;
    const EmbeddingStore store = oracle::synthetic_store();
    const MergeParams params;
    std::mt19937_64 rng(9);
    for (int t = 0; t < 50; ++t) {
      const auto inputs = oracle::synthetic_set(rng);
      const MetaResult r = build_meta_vgamr(inputs, params, store, 4, t);
      const VgAmr& meta = r.meta;
      for (size_t i = 0; i < inputs.size(); ++i) {
        const auto& m = r.node_maps[i];
        for (const auto& tr : to_triples(inputs[i].graph)) {
          if (tr.kind == TripleKind::RootMarker) continue;
          const VarId head = m.at(tr.head);
          bool found = false;
          if (tr.kind == TripleKind::Instance) {
            const auto& syn = meta.synonyms.at(head);
            found = std::find(syn.begin(), syn.end(), tr.tail) != syn.end();
          } else if (tr.kind == TripleKind::Relation) {
            for (const auto* e : meta.graph.outgoing(head))
              found = found || (e->role == tr.label && e->target == m.at(tr.tail));
          } else {
            for (const auto& a : meta.graph.attributes())
              found = found || (a.variable == head && a.role == tr.label && a.value == tr.tail);
          }
          o.check(found, "set " + std::to_string(t) + ": triple " + tr.head + " " + tr.label + " " + tr.tail + " lost");
        }
        for (const auto& [v, boxes] : inputs[i].grounding)
          o.check(meta.grounding.contains(m.at(v)) && meta.grounding.at(m.at(v)) == boxes,
                  "set " + std::to_string(t) + ": grounding of " + v + " changed");
      }
      // No two grounded nodes with the same boxes and synonymous labels.
      std::vector<VarId> grounded;
      for (const auto& [v, _] : meta.grounding) grounded.push_back(v);
      for (size_t x = 0; x < grounded.size(); ++x) {
        for (size_t y = x + 1; y < grounded.size(); ++y) {
          if (meta.grounding.at(grounded[x]) != meta.grounding.at(grounded[y])) continue;
          double best = 0;
          for (const auto& lx : meta.synonyms.at(grounded[x]))
            for (const auto& ly : meta.synonyms.at(grounded[y]))
              best = std::max(best, lx == ly ? 1.0 : store.cosine(lx, ly).value_or(0.0));
          o.check(best < params.synonym_threshold,
                  "set " + std::to_string(t) + ": redundant " + grounded[x] + "/" + grounded[y]);
        }
      }
    }
    if (o.ok) o.detail = "50 sets";
    return o;
  });

  run("sampler properties", kSamplerBudget, [] {
    Outcome o;
    const EmbeddingStore store = oracle::synthetic_store();
    std::mt19937_64 rng(10);
    size_t total = 0;
    for (int t = 0; t < 50; ++t) {
      const VgAmr meta = build_meta_vgamr(oracle::synthetic_set(rng), MergeParams{}, store, 4, t).meta;
      const auto samples = sample_event_subgraphs(meta, t);
      const auto again = sample_event_subgraphs(meta, t);
      o.check(samples.size() == again.size(), "sample count not deterministic");
      std::map<VarId, std::set<std::tuple<VarId, std::string, VarId>>> closure;
      for (size_t k = 0; k < samples.size(); ++k) {
        const auto& s = samples[k];
        const AmrGraph& g = s.graph.graph;
        ++total;
        o.check(k >= again.size() || serialize_penman(g) == serialize_penman(again[k].graph.graph),
                "sample not deterministic under seed");
        o.check(connected_from_root(g), "disconnected sample");
        o.check(s.source_nodes.at(g.root()) == s.origin_predicate &&
                    is_predicate(meta, s.origin_predicate),
                "sample not rooted at a predicate");
        for (const auto& [v, _] : g.nodes()) {
          const VarId& src = s.source_nodes.at(v);
          const bool same = meta.is_grounded(src)
                                ? s.graph.is_grounded(v) && s.graph.grounding.at(v) == meta.grounding.at(src)
                                : !s.graph.is_grounded(v);
          o.check(same, "grounding not restricted exactly");
        }
        std::set<std::tuple<VarId, std::string, VarId>> edges;
        for (const auto& e : g.edges())
          edges.insert({s.source_nodes.at(e.source), e.role, s.source_nodes.at(e.target)});
        if (s.kind == SampleKind::ArgumentClosure) {
          closure[s.origin_predicate] = edges;
        } else {
          const auto& c = closure.at(s.origin_predicate);
          o.check(std::includes(edges.begin(), edges.end(), c.begin(), c.end()),
                  "closure not contained in extended sample");
        }
      }
    }
    if (o.ok) o.detail = std::to_string(total) + " samples";
    return o;
  });

  run("coverage exact union area", 0, [] {
    Outcome o;
    o.check(compute_coverage({{0, 0, 60, 60}, {30, 30, 90, 90}}, 100, 100) == 0.63, "hand case is not 0.63");
    std::mt19937_64 rng(11);
    auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    for (int t = 0; t < 100; ++t) {
      const int w = uni(20, 120), h = uni(20, 120);
      std::vector<Box> boxes;
      const int n = uni(1, 8);
      for (int k = 0; k < n; ++k) {
        const int x1 = uni(0, w - 1), y1 = uni(0, h - 1);
        boxes.push_back({double(x1), double(y1), double(uni(x1 + 1, w)), double(uni(y1 + 1, h))});
      }
      const double got = compute_coverage(boxes, w, h), want = oracle::coverage_pixels(boxes, w, h);
      o.check(std::fabs(got - want) <= 1.0 / (double(w) * h), "set " + std::to_string(t) + ": " + fmt(got) + " vs " + fmt(want));
    }
    if (o.ok) o.detail = "100 box sets";
    return o;
  });

  run("length machinery", 0, [] {
    Outcome o;
    const std::vector<std::pair<int, char>> cases = {{1, 'A'}, {9, 'A'}, {10, 'B'}, {19, 'B'}, {20, 'C'},
                                                     {29, 'C'}, {30, 'D'}, {39, 'D'}, {40, 'E'}, {120, 'E'}};
    for (const auto& [n, level] : cases)
      o.check(to_char(length_level(n)) == level, std::to_string(n) + " words not level " + level);
    std::vector<int> targets;
    std::vector<std::string> outputs;
    for (int n : {3, 11, 25, 33, 47}) {
      targets.push_back(n);
      std::string s;
      for (int k = 0; k < n; ++k) s += k ? " w" : "w";
      outputs.push_back(s);
    }
    const LengthMetrics exact = length_metrics(targets, outputs);
    o.check(exact.mae == 0 && exact.level_precision == 1.0, "exact outputs not L=0, LP=100");
    const LengthMetrics hand = length_metrics(
        {10, 20}, {"w w w w w w w w w w w w", "w w w w w w w w w w w w w w w w w w w"});
    o.check(hand.mae == 1.5 && hand.level_precision == 0.5,
            "hand case L=" + fmt(hand.mae) + " LP=" + fmt(100 * hand.level_precision));
    return o;
  });

  run("diversity", 0, [] {
    Outcome o;
    const double d1 = distinct_ngram_diversity({"a dog runs", "a cat sits"}, 1);
    o.check(std::fabs(d1 - 5.0 / 6.0) <= kDiversityTol, "D-1=" + fmt(d1));
    const double same = self_cider({"a man rides a horse", "a man rides a horse", "a man rides a horse"});
    o.check(std::fabs(same) <= kDiversityTol, "sC(identical)=" + fmt(same));
    const double disjoint = self_cider({"a man rides a horse", "two dogs play outside", "red kite flies high"});
    o.check(std::fabs(disjoint - 1) <= kDiversityTol, "sC(disjoint)=" + fmt(disjoint));
    return o;
  });

  run("mixing boundaries", 0, [] {
    Outcome o;
    PipelineConfig c = fixture_config("ssa_accept_mix");
    run_pipeline(c);
    const auto original = parse_lines<ControlCaptionPair>(read_jsonl(c.out_dir / "original.jsonl"), pair_from_json);
    const auto ssa_pairs = parse_lines<ControlCaptionPair>(read_jsonl(c.out_dir / "pairs.jsonl"), pair_from_json);
    MixSpec spec{MixStrategy::Random, 0, 10, 5};
    const auto none = mix_datasets(original, ssa_pairs, spec);
    bool same = none.size() == original.size();
    for (size_t i = 0; same && i < none.size(); ++i) same = to_json(none[i]) == to_json(original[i]);
    o.check(same, "p=0 output differs from original");
    spec.percentage = 100;
    const auto all = mix_datasets(original, ssa_pairs, spec);
    o.check(all.size() == original.size() + ssa_pairs.size(), "p=100 size " + std::to_string(all.size()));
    spec = MixSpec{MixStrategy::UniformCoverage, 0, 10, 5};
    const auto uniform = mix_datasets(original, ssa_pairs, spec);
    const double before = count_variance(original, 10), after = count_variance(uniform, 10);
    o.check(after < before, "variance " + fmt(before) + " -> " + fmt(after));
    if (o.ok)
      o.detail = "variance " + fmt(before) + " -> " + fmt(after) + " (+" +
                 std::to_string(uniform.size() - original.size()) + " pairs)";
    return o;
  });

  run("quality-threshold filtering", 0, [] {
    Outcome o;
    const std::vector<double> scores = {0.95, 0.7, 0.69999, 0.1, 0.71, 0.0, 1.0, 0.6999999999};
    std::vector<ControlCaptionPair> pairs;
    for (size_t i = 0; i < scores.size(); ++i) {
      ControlCaptionPair p;
      p.caption = "c" + std::to_string(i);
      pairs.push_back(p);
    }
    FunctionScorer scorer([&](std::string_view c) { return scores.at(std::stoul(std::string(c.substr(1)))); });
    const FilterResult r = filter_by_quality(pairs, scorer, 0.7);
    std::vector<std::string> kept, dropped, want_kept, want_dropped;
    for (const auto& p : r.kept) kept.push_back(p.caption);
    for (const auto& p : r.dropped) dropped.push_back(p.caption);
    for (size_t i = 0; i < scores.size(); ++i)
      (scores[i] >= 0.7 ? want_kept : want_dropped).push_back("c" + std::to_string(i));
    o.check(kept == want_kept && dropped == want_dropped, "partition differs from threshold rule");
    if (o.ok) o.detail = std::to_string(kept.size()) + " kept, " + std::to_string(dropped.size()) + " dropped";
    return o;
  });

  run("end-to-end smoke", kSmokeBudget, [] {
    Outcome o;
    const PipelineConfig a = fixture_config("ssa_accept_a");
    const PipelineConfig b = fixture_config("ssa_accept_b");
    const PipelineSummary sa = run_pipeline(a);
    run_pipeline(b);
    for (const char* f : {"original.jsonl", "meta.jsonl", "samples.jsonl", "pairs.jsonl", "mixed.jsonl", "report.json"})
      o.check(fs::exists(a.out_dir / f) && fs::file_size(a.out_dir / f) > 0, std::string(f) + " missing");
    o.check(sa.images == 3 && sa.kept > 0, "unexpected summary");
    o.check(read_all(a.out_dir) == read_all(b.out_dir), "runs differ");
    render_report(Json::parse(read_text_file(a.out_dir / "report.json")));
    if (o.ok) o.detail = std::to_string(sa.samples) + " samples, " + std::to_string(sa.mixed) + " mixed";
    return o;
  });

  std::printf("%d failed\n", failures);
  return failures == 0 ? 0 : 1;
}
