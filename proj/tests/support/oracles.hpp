#pragma once

// Independent reference implementations and random generators shared by the
// unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "ssa/amr.hpp"
#include "ssa/augment.hpp"
#include "ssa/embeddings.hpp"
#include "ssa/grounding.hpp"
#include "ssa/merge.hpp"

namespace oracle {

using ssa::AmrGraph;
using ssa::VarId;

// --- Smatch -----------------------------------------------------------------

using Fact = std::tuple<std::string, std::string, std::string>;  // (head, label, tail)

struct FactSets {
  std::set<Fact> instances;                  // (var, "instance", concept)
  std::set<Fact> relations;                  // (var, role, var)
  std::set<Fact> attributes;                 // (var, role, value)
  VarId root;
  size_t total() const { return instances.size() + relations.size() + attributes.size() + 1; }
};

inline FactSets facts(const AmrGraph& g) {
  FactSets f;
  for (const auto& [v, n] : g.nodes()) f.instances.insert({v, "instance", n.concept_label});
  for (const auto& e : g.edges()) f.relations.insert({e.source, e.role, e.target});
  for (const auto& a : g.attributes()) f.attributes.insert({a.variable, a.role, a.value});
  f.root = g.root();
  return f;
}

// Matched facts of `a` in `b` under a partial mapping (absent = unmapped).
inline int matched(const FactSets& a, const FactSets& b, const std::map<VarId, VarId>& m) {
  auto img = [&](const VarId& v) -> std::optional<VarId> {
    auto it = m.find(v);
    if (it == m.end()) return std::nullopt;
    return it->second;
  };
  int n = 0;
  for (const auto& [v, l, c] : a.instances)
    if (auto x = img(v); x && b.instances.contains({*x, l, c})) ++n;
  for (const auto& [u, r, w] : a.relations) {
    auto x = img(u), y = img(w);
    if (x && y && b.relations.contains({*x, r, *y})) ++n;
  }
  for (const auto& [v, r, val] : a.attributes)
    if (auto x = img(v); x && b.attributes.contains({*x, r, val})) ++n;
  if (auto x = img(a.root); x && *x == b.root) ++n;
  return n;
}

struct SmatchOracle {
  int best = 0;
  double f1 = 0;
};

// Enumerates every partial injective mapping A -> B.
inline SmatchOracle smatch_exhaustive(const AmrGraph& a, const AmrGraph& b) {
  const FactSets fa = facts(a), fb = facts(b);
  std::vector<VarId> va, vb;
  for (const auto& [v, _] : a.nodes()) va.push_back(v);
  for (const auto& [v, _] : b.nodes()) vb.push_back(v);
  std::vector<bool> used(vb.size(), false);
  std::map<VarId, VarId> m;
  int best = 0;
  auto rec = [&](auto&& self, size_t i) -> void {
    if (i == va.size()) {
      best = std::max(best, matched(fa, fb, m));
      return;
    }
    self(self, i + 1);  // leave va[i] unmapped
    for (size_t j = 0; j < vb.size(); ++j) {
      if (used[j]) continue;
      used[j] = true;
      m[va[i]] = vb[j];
      self(self, i + 1);
      m.erase(va[i]);
      used[j] = false;
    }
  };
  rec(rec, 0);
  const double p = double(best) / double(fa.total()), r = double(best) / double(fb.total());
  return {best, p + r > 0 ? 2 * p * r / (p + r) : 0.0};
}

// Random connected graph with `n` variables over a small vocabulary, so that
// label collisions make the mapping search non-trivial.
inline AmrGraph random_graph(std::mt19937_64& rng, int n) {
  static const std::vector<std::string> concepts = {"dog", "cat", "run-01", "see-01", "big",
                                                    "and", "park", "want-01"};
  static const std::vector<std::string> roles = {":ARG0", ":ARG1", ":mod", ":location", ":op1"};
  auto pick = [&](const auto& xs) {
    return xs[std::uniform_int_distribution<size_t>(0, xs.size() - 1)(rng)];
  };
  std::map<VarId, ssa::Node> nodes;
  std::vector<VarId> vars;
  for (int i = 0; i < n; ++i) {
    VarId v = "v" + std::to_string(i);
    vars.push_back(v);
    nodes.emplace(v, ssa::Node{v, pick(concepts)});
  }
  std::vector<ssa::Edge> edges;
  std::set<std::tuple<VarId, std::string, VarId>> seen;
  auto add = [&](const VarId& s, const std::string& r, const VarId& t) {
    if (seen.insert({s, r, t}).second) edges.push_back({s, r, t, false});
  };
  for (int i = 1; i < n; ++i) {
    const VarId& parent = vars[std::uniform_int_distribution<int>(0, i - 1)(rng)];
    add(parent, pick(roles), vars[i]);
  }
  const int extra = std::uniform_int_distribution<int>(0, 2)(rng);
  for (int k = 0; k < extra && n > 1; ++k) {
    const int s = std::uniform_int_distribution<int>(0, n - 1)(rng);
    const int t = std::uniform_int_distribution<int>(0, n - 1)(rng);
    if (s != t) add(vars[s], pick(roles), vars[t]);
  }
  std::vector<ssa::Attribute> attrs;
  if (std::bernoulli_distribution(0.4)(rng))
    attrs.push_back({pick(vars), ":polarity", "-"});
  if (std::bernoulli_distribution(0.3)(rng))
    attrs.push_back({pick(vars), ":quant", std::to_string(std::uniform_int_distribution<int>(1, 3)(rng))});
  return AmrGraph(vars.front(), std::move(nodes), std::move(edges), std::move(attrs));
}

// --- Coverage ---------------------------------------------------------------

// Counts unit pixels whose centre lies in some box.
inline double coverage_pixels(const std::vector<ssa::Box>& boxes, int w, int h) {
  long covered = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double cx = x + 0.5, cy = y + 0.5;
      for (const auto& b : boxes) {
        if (b.x1 <= cx && cx < b.x2 && b.y1 <= cy && cy < b.y2) {
          ++covered;
          break;
        }
      }
    }
  }
  return double(covered) / double(w * h);
}

// --- Assignment -------------------------------------------------------------

// Best total over all injections of the smaller side.
inline double assignment_exhaustive(const std::vector<std::vector<double>>& s) {
  if (s.empty() || s[0].empty()) return 0;
  const size_t r = s.size(), c = s[0].size();
  const bool rows_small = r <= c;
  const size_t small = rows_small ? r : c, large = rows_small ? c : r;
  std::vector<size_t> perm(large);
  std::iota(perm.begin(), perm.end(), 0);
  double best = -1e300;
  do {
    double t = 0;
    for (size_t i = 0; i < small; ++i) t += rows_small ? s[i][perm[i]] : s[perm[i]][i];
    best = std::max(best, t);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// --- Diversity --------------------------------------------------------------

inline std::vector<std::vector<int>> five_subsets(int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> idx;
  auto rec = [&](auto&& self, int start) -> void {
    if (idx.size() == 5) {
      out.push_back(idx);
      return;
    }
    for (int i = start; i < n; ++i) {
      idx.push_back(i);
      self(self, i + 1);
      idx.pop_back();
    }
  };
  rec(rec, 0);
  return out;
}

// --- Synthetic scenes for merge / sampler properties --------------------------

struct Entity {
  std::vector<std::string> labels;  // interchangeable names
  ssa::BoxSet boxes;
};

inline ssa::EmbeddingStore synthetic_store() {
  // Words in one group share an axis and are near-synonyms.
  const std::vector<std::vector<std::string>> groups = {
      {"dog", "puppy"}, {"man", "guy"}, {"ball"}, {"car", "vehicle"}, {"tree"},
      {"woman", "lady"}, {"bench"}, {"grass", "lawn"}, {"red"}, {"small", "little"},
      {"throw", "toss"}, {"sit", "rest"}, {"chase"}, {"hold"}};
  ssa::EmbeddingStore store(groups.size());
  for (size_t g = 0; g < groups.size(); ++g) {
    for (size_t k = 0; k < groups[g].size(); ++k) {
      std::vector<double> v(groups.size(), 0.0);
      v[g] = 1.0;
      v[(g + 1) % groups.size()] = 0.1 * double(k);
      store.add(groups[g][k], v);
    }
  }
  return store;
}

// A set of 3-6 grounded captions about one random scene.
inline std::vector<ssa::VgAmr> synthetic_set(std::mt19937_64& rng) {
  const std::vector<std::vector<std::string>> nouns = {
      {"dog", "puppy"}, {"man", "guy"}, {"ball"}, {"car", "vehicle"}, {"tree"},
      {"woman", "lady"}, {"bench"}, {"grass", "lawn"}};
  const std::vector<std::vector<std::string>> verbs = {
      {"throw-01", "toss-01"}, {"sit-01", "rest-01"}, {"chase-01"}, {"hold-01"}};
  const std::vector<std::string> mods = {"red", "small", "little"};
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  const int n_entities = uni(3, 5);
  std::vector<Entity> scene;
  std::vector<size_t> noun_order(nouns.size());
  std::iota(noun_order.begin(), noun_order.end(), 0);
  std::shuffle(noun_order.begin(), noun_order.end(), rng);
  for (int e = 0; e < n_entities; ++e) {
    Entity ent{nouns[noun_order[e]], {}};
    const int nb = uni(1, 2);
    for (int k = 0; k < nb; ++k) {
      const double x = uni(0, 80), y = uni(0, 80);
      ent.boxes.insert({x, y, x + uni(5, 20), y + uni(5, 20)});
    }
    scene.push_back(ent);
  }

  std::vector<ssa::VgAmr> out;
  const int n_captions = uni(3, 6);
  for (int c = 0; c < n_captions; ++c) {
    std::map<VarId, ssa::Node> nodes;
    std::vector<ssa::Edge> edges;
    std::vector<ssa::Attribute> attrs;
    std::map<VarId, ssa::BoxSet> grounding;
    int next = 0;
    auto fresh = [&](const std::string& label) {
      VarId v = "x" + std::to_string(next++);
      nodes.emplace(v, ssa::Node{v, label});
      return v;
    };
    const auto& vl = verbs[uni(0, int(verbs.size()) - 1)];
    const VarId pred = fresh(vl[uni(0, int(vl.size()) - 1)]);
    std::vector<int> picks(scene.size());
    std::iota(picks.begin(), picks.end(), 0);
    std::shuffle(picks.begin(), picks.end(), rng);
    const int n_args = uni(1, std::min<int>(3, int(scene.size())));
    for (int k = 0; k < n_args; ++k) {
      const Entity& ent = scene[picks[k]];
      const VarId v = fresh(ent.labels[uni(0, int(ent.labels.size()) - 1)]);
      grounding[v] = ent.boxes;
      edges.push_back({pred, ":ARG" + std::to_string(k), v, false});
      if (uni(0, 2) == 0) {
        const VarId m = fresh(mods[uni(0, int(mods.size()) - 1)]);
        edges.push_back({v, ":mod", m, false});
      }
    }
    if (uni(0, 1) == 0 && n_args < int(scene.size())) {
      const Entity& ent = scene[picks[n_args]];
      const VarId loc = fresh(ent.labels.front());
      grounding[loc] = ent.boxes;
      edges.push_back({pred, ":location", loc, false});
    }
    if (uni(0, 3) == 0) attrs.push_back({pred, ":polarity", "-"});
    ssa::VgAmr g = ssa::ungrounded(AmrGraph(pred, std::move(nodes), std::move(edges), std::move(attrs)));
    g.grounding = std::move(grounding);
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace oracle
