#include "ssa/smatch.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "ssa/error.hpp"
#include "ssa/hashing.hpp"

namespace ssa {

namespace {

std::set<Triple> triple_set(const AmrGraph& g) {
  auto t = to_triples(g);
  return {t.begin(), t.end()};
}

std::vector<VarId> variables(const AmrGraph& g) {
  std::vector<VarId> vars;
  for (const auto& [v, n] : g.nodes()) vars.push_back(v);
  return vars;
}

SmatchResult finish(int matched, int triples_a, int triples_b,
                    std::map<VarId, VarId> mapping) {
  SmatchResult r;
  r.matched_triples = matched;
  r.triples_a = triples_a;
  r.triples_b = triples_b;
  r.precision = triples_a ? static_cast<double>(matched) / triples_a : 0.0;
  r.recall = triples_b ? static_cast<double>(matched) / triples_b : 0.0;
  r.f1 = (r.precision + r.recall) > 0
             ? 2 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  r.mapping = std::move(mapping);
  return r;
}

// Matching potential between the two graphs, decomposed into per-pair
// (unary) gains and pair-of-pairs (relation) gains.
class MatchTable {
 public:
  MatchTable(const AmrGraph& a, const AmrGraph& b)
      : vars_a_(variables(a)), vars_b_(variables(b)) {
    const size_t n = vars_a_.size(), m = vars_b_.size();
    std::map<VarId, int> ia, ib;
    for (size_t i = 0; i < n; ++i) ia[vars_a_[i]] = static_cast<int>(i);
    for (size_t j = 0; j < m; ++j) ib[vars_b_[j]] = static_cast<int>(j);

    unary_.assign(n, std::vector<int>(m, 0));
    neighbours_.assign(n, std::vector<std::vector<std::pair<int, int>>>(m));

    const auto ta = triple_set(a);
    const auto tb = triple_set(b);
    for (const auto& t : ta) {
      const int i = ia.at(t.head);
      switch (t.kind) {
        case TripleKind::Instance:
        case TripleKind::Attribute:
          for (size_t j = 0; j < m; ++j)
            if (tb.contains({t.kind, vars_b_[j], t.label, t.tail})) ++unary_[i][j];
          break;
        case TripleKind::RootMarker:
          ++unary_[i][ib.at(b.root())];
          break;
        case TripleKind::Relation: {
          const int i2 = ia.at(t.tail);
          for (const auto& u : tb) {
            if (u.kind != TripleKind::Relation || u.label != t.label) continue;
            const int j1 = ib.at(u.head), j2 = ib.at(u.tail);
            if (i == i2) {
              if (j1 == j2) ++unary_[i][j1];
              continue;
            }
            if (j1 == j2) continue;
            pairs_.push_back({i, j1, i2, j2});
            neighbours_[i][j1].push_back({i2, j2});
            neighbours_[i2][j2].push_back({i, j1});
          }
          break;
        }
      }
    }
    triples_a_ = static_cast<int>(ta.size());
    triples_b_ = static_cast<int>(tb.size());
  }

  size_t n() const { return vars_a_.size(); }
  size_t m() const { return vars_b_.size(); }
  int triples_a() const { return triples_a_; }
  int triples_b() const { return triples_b_; }
  int unary(int i, int j) const { return j < 0 ? 0 : unary_[i][j]; }

  int score(const std::vector<int>& map) const {
    int s = 0;
    for (size_t i = 0; i < map.size(); ++i) s += unary(static_cast<int>(i), map[i]);
    for (const auto& p : pairs_)
      if (map[p.i1] == p.j1 && map[p.i2] == p.j2) ++s;
    return s;
  }

  // Score of everything touching variable i when it is mapped to j.
  int local(const std::vector<int>& map, int i, int j) const {
    if (j < 0) return 0;
    int s = unary_[i][j];
    for (const auto& [i2, j2] : neighbours_[i][j])
      if (map[i2] == j2) ++s;
    return s;
  }

  struct PairGain {
    int i1, j1, i2, j2;
  };
  const std::vector<PairGain>& pairs() const { return pairs_; }

  std::map<VarId, VarId> to_names(const std::vector<int>& map) const {
    std::map<VarId, VarId> out;
    for (size_t i = 0; i < map.size(); ++i)
      if (map[i] >= 0) out[vars_a_[i]] = vars_b_[map[i]];
    return out;
  }

 private:
  std::vector<VarId> vars_a_, vars_b_;
  std::vector<std::vector<int>> unary_;
  std::vector<std::vector<std::vector<std::pair<int, int>>>> neighbours_;
  std::vector<PairGain> pairs_;
  int triples_a_ = 0, triples_b_ = 0;
};

std::vector<int> smart_init(const MatchTable& t) {
  std::vector<int> map(t.n(), -1);
  std::vector<bool> used(t.m(), false);
  for (size_t i = 0; i < t.n(); ++i) {
    int best = -1, best_gain = 0;
    for (size_t j = 0; j < t.m(); ++j) {
      const int g = t.unary(static_cast<int>(i), static_cast<int>(j));
      if (!used[j] && g > best_gain) best = static_cast<int>(j), best_gain = g;
    }
    if (best >= 0) map[i] = best, used[best] = true;
  }
  return map;
}

std::vector<int> random_init(const MatchTable& t, std::mt19937_64& rng) {
  std::vector<int> targets(t.m());
  std::iota(targets.begin(), targets.end(), 0);
  std::shuffle(targets.begin(), targets.end(), rng);
  std::vector<int> map(t.n(), -1);
  for (size_t i = 0; i < t.n() && i < t.m(); ++i) map[i] = targets[i];
  return map;
}

// Maps i to j; whoever held j takes i's old target.
void assign(std::vector<int>& map, int i, int j) {
  const auto holder = std::find(map.begin(), map.end(), j);
  if (holder != map.end()) *holder = map[i];
  map[i] = j;
}

// Greedy best-improvement over reassignments to free targets, swaps, and
// joint moves that put both ends of one relation in place at once.
int hill_climb(const MatchTable& t, std::vector<int>& map) {
  int current = t.score(map);
  for (;;) {
    std::vector<bool> used(t.m(), false);
    for (int j : map)
      if (j >= 0) used[j] = true;

    int best_delta = 0;
    enum { None, Reassign, Swap, Joint } best_kind = None;
    int bi = -1, bk = -1;

    for (size_t i = 0; i < t.n(); ++i) {
      const int ii = static_cast<int>(i);
      const int before = t.local(map, ii, map[i]);
      for (size_t j = 0; j < t.m(); ++j) {
        if (used[j]) continue;
        const int delta = t.local(map, ii, static_cast<int>(j)) - before;
        if (delta > best_delta)
          best_delta = delta, best_kind = Reassign, bi = ii, bk = static_cast<int>(j);
      }
    }
    for (size_t i = 0; i < t.n(); ++i) {
      for (size_t k = i + 1; k < t.n(); ++k) {
        if (map[i] == map[k]) continue;
        std::swap(map[i], map[k]);
        const int delta = t.score(map) - current;
        std::swap(map[i], map[k]);
        if (delta > best_delta)
          best_delta = delta, best_kind = Swap, bi = static_cast<int>(i),
          bk = static_cast<int>(k);
      }
    }

    int bp = -1;
    const auto& pairs = t.pairs();
    for (size_t p = 0; p < pairs.size(); ++p) {
      const auto& g = pairs[p];
      if (map[g.i1] == g.j1 && map[g.i2] == g.j2) continue;
      std::vector<int> moved = map;
      assign(moved, g.i1, g.j1);
      assign(moved, g.i2, g.j2);
      const int delta = t.score(moved) - current;
      if (delta > best_delta) best_delta = delta, best_kind = Joint, bp = static_cast<int>(p);
    }

    if (best_kind == None) return current;
    if (best_kind == Reassign) {
      map[bi] = bk;
    } else if (best_kind == Swap) {
      std::swap(map[bi], map[bk]);
    } else {
      assign(map, pairs[bp].i1, pairs[bp].j1);
      assign(map, pairs[bp].i2, pairs[bp].j2);
    }
    current += best_delta;
  }
}

}  // namespace

int count_matched_triples(const AmrGraph& a, const AmrGraph& b,
                          const std::map<VarId, VarId>& mapping) {
  const auto tb = triple_set(b);
  auto image = [&](const VarId& v) -> const VarId* {
    auto it = mapping.find(v);
    return it == mapping.end() ? nullptr : &it->second;
  };
  int matched = 0;
  for (const auto& t : triple_set(a)) {
    const VarId* head = image(t.head);
    if (!head) continue;
    std::string tail = t.tail;
    if (t.kind == TripleKind::Relation) {
      const VarId* mapped = image(t.tail);
      if (!mapped) continue;
      tail = *mapped;
    }
    if (tb.contains({t.kind, *head, t.label, tail})) ++matched;
  }
  return matched;
}

SmatchResult smatch_score(const AmrGraph& a, const AmrGraph& b, int restarts,
                          uint64_t seed) {
  restarts = std::max(restarts, 1);
  MatchTable table(a, b);
  std::mt19937_64 rng(seed);

  std::vector<int> best_map;
  int best = -1;
  for (int r = 0; r < restarts; ++r) {
    std::vector<int> map = r == 0 ? smart_init(table) : random_init(table, rng);
    const int s = hill_climb(table, map);
    if (s > best) best = s, best_map = map;
  }
  return finish(best, table.triples_a(), table.triples_b(), table.to_names(best_map));
}

namespace {

// Enumerates injections of every variable of `a` into `b` (|a| <= |b|),
// pruning branches that cannot beat the incumbent.
class InjectionSearch {
 public:
  InjectionSearch(const AmrGraph& a, const AmrGraph& b)
      : vars_a_(variables(a)), vars_b_(variables(b)), tb_(triple_set(b)) {
    std::map<VarId, size_t> pos;
    for (size_t i = 0; i < vars_a_.size(); ++i) pos[vars_a_[i]] = i;
    by_depth_.resize(vars_a_.size());
    for (const auto& t : triple_set(a)) {
      size_t depth = pos.at(t.head);
      if (t.kind == TripleKind::Relation) depth = std::max(depth, pos.at(t.tail));
      by_depth_[depth].push_back(t);
    }
    remaining_.assign(vars_a_.size() + 1, 0);
    for (size_t d = vars_a_.size(); d-- > 0;)
      remaining_[d] = remaining_[d + 1] + static_cast<int>(by_depth_[d].size());
    used_.assign(vars_b_.size(), false);
  }

  std::map<VarId, VarId> run() {
    search(0, 0);
    return best_mapping_;
  }

 private:
  void search(size_t depth, int matched) {
    if (matched + remaining_[depth] <= best_) return;
    if (depth == vars_a_.size()) {
      best_ = matched;
      best_mapping_ = current_;
      return;
    }
    for (size_t j = 0; j < vars_b_.size(); ++j) {
      if (used_[j]) continue;
      used_[j] = true;
      current_[vars_a_[depth]] = vars_b_[j];
      int gained = 0;
      for (const auto& t : by_depth_[depth]) {
        const std::string tail =
            t.kind == TripleKind::Relation ? current_.at(t.tail) : t.tail;
        if (tb_.contains({t.kind, current_.at(t.head), t.label, tail})) ++gained;
      }
      search(depth + 1, matched + gained);
      current_.erase(vars_a_[depth]);
      used_[j] = false;
    }
  }

  std::vector<VarId> vars_a_, vars_b_;
  std::set<Triple> tb_;
  std::vector<std::vector<Triple>> by_depth_;
  std::vector<int> remaining_;
  std::vector<bool> used_;
  std::map<VarId, VarId> current_, best_mapping_;
  int best_ = -1;
};

}  // namespace

SmatchResult smatch_brute_force(const AmrGraph& a, const AmrGraph& b) {
  const size_t na = a.nodes().size(), nb = b.nodes().size();
  if (std::min(na, nb) > kBruteForceVariableLimit)
    throw TooLarge("brute-force Smatch needs a graph with at most " +
                   std::to_string(kBruteForceVariableLimit) + " variables");
  const int ta = static_cast<int>(triple_set(a).size());
  const int tb = static_cast<int>(triple_set(b).size());

  // Extending an injective partial mapping never loses matches, so total
  // injections of the smaller side cover the optimum.
  std::map<VarId, VarId> mapping;
  if (na <= nb) {
    mapping = InjectionSearch(a, b).run();
  } else {
    for (const auto& [vb, va] : InjectionSearch(b, a).run()) mapping[va] = vb;
  }
  const int matched = count_matched_triples(a, b, mapping);
  return finish(matched, ta, tb, std::move(mapping));
}

DistanceMatrix DistanceMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  DistanceMatrix d(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.size())
      throw SchemaError("distance matrix must be square");
    for (size_t j = 0; j < rows.size(); ++j) d.d_[i * d.n_ + j] = rows[i][j];
  }
  return d;
}

DistanceMatrix distance_matrix(const std::vector<AmrGraph>& graphs, int restarts,
                               uint64_t seed) {
  DistanceMatrix d(graphs.size());
  for (size_t i = 0; i < graphs.size(); ++i) {
    for (size_t j = i + 1; j < graphs.size(); ++j) {
      const uint64_t pair_seed = mix_seed(seed, i, j);
      const double f_ij = smatch_score(graphs[i], graphs[j], restarts, pair_seed).f1;
      const double f_ji = smatch_score(graphs[j], graphs[i], restarts, pair_seed).f1;
      d.set_symmetric(i, j, 1.0 - std::max(f_ij, f_ji));
    }
  }
  return d;
}

}  // namespace ssa
