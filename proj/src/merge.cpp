#include "ssa/merge.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <stdexcept>
#include <tuple>

#include "ssa/error.hpp"
#include "ssa/sampler.hpp"

namespace ssa {

void MergeParams::validate() const {
  if (!(0.0 <= predicate_threshold && predicate_threshold < synonym_threshold &&
        synonym_threshold <= 1.0))
    throw ConfigError("merge thresholds must satisfy 0 <= predicate < synonym <= 1");
}

MergeTree upgma_order(const DistanceMatrix& d) {
  const size_t n = d.size();
  MergeTree tree{n, {}};
  if (n < 2) return tree;

  struct Cluster {
    size_t id;
    size_t size;
  };
  std::vector<Cluster> active;
  std::map<std::pair<size_t, size_t>, double> dist;
  auto key = [](size_t p, size_t q) { return std::pair<size_t, size_t>(std::min(p, q), std::max(p, q)); };
  for (size_t i = 0; i < n; ++i) {
    active.push_back({i, 1});
    for (size_t j = i + 1; j < n; ++j) dist[key(i, j)] = d(i, j);
  }

  for (size_t step = 0; step + 1 < n; ++step) {
    size_t bp = 0, bq = 0;
    double best = std::numeric_limits<double>::infinity();
    // `active` stays sorted by id, so the first strict minimum is the
    // lexicographically smallest pair.
    for (size_t p = 0; p < active.size(); ++p) {
      for (size_t q = p + 1; q < active.size(); ++q) {
        const double v = dist.at(key(active[p].id, active[q].id));
        if (v < best) best = v, bp = p, bq = q;
      }
    }
    const Cluster left = active[bp], right = active[bq];
    const size_t merged = n + step;
    for (const auto& c : active) {
      if (c.id == left.id || c.id == right.id) continue;
      dist[key(merged, c.id)] =
          (dist.at(key(left.id, c.id)) * static_cast<double>(left.size) +
           dist.at(key(right.id, c.id)) * static_cast<double>(right.size)) /
          static_cast<double>(left.size + right.size);
    }
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(bq));
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(bp));
    active.push_back({merged, left.size + right.size});
    tree.steps.push_back({left.id, right.id, merged, best});
  }
  return tree;
}

const char* to_string(PairReason reason) {
  switch (reason) {
    case PairReason::AndOr: return "and-or";
    case PairReason::GroundedSameBoxes: return "grounded-same-boxes";
    case PairReason::LabelNeighborhood: return "label-neighborhood";
    case PairReason::PredicateChildren: return "predicate-children";
  }
  return "?";
}

double label_similarity(const std::vector<std::string>& a, const std::vector<std::string>& b,
                        const EmbeddingStore& store, std::set<std::string>* missing) {
  double best = 0.0;
  for (const auto& la : a) {
    const std::string wa = case_fold(strip_sense(la));
    for (const auto& lb : b) {
      const std::string wb = case_fold(strip_sense(lb));
      if (wa == wb) return 1.0;
      if (auto c = store.cosine(wa, wb)) {
        best = std::max(best, *c);
      } else if (missing) {
        if (!store.contains(wa)) missing->insert(wa);
        if (!store.contains(wb)) missing->insert(wb);
      }
    }
  }
  return best;
}

namespace {

bool is_and_or(const std::string& label) { return label == "and" || label == "or"; }

class CommonNodeFinder {
 public:
  CommonNodeFinder(const VgAmr& a, const VgAmr& b, const MergeParams& params,
                   const EmbeddingStore& store)
      : a_(a), b_(b), params_(params), store_(store) {}

  NodePairing run() {
    pair_and_or_roots();
    pair_grounded();
    bool changed = true;
    while (changed) {
      changed = pair_and_or_by_neighbours();
      changed |= pair_by_label_and_parent();
      changed |= pair_predicates();
    }
    NodePairing out;
    out.pairs = std::move(pairs_);
    out.warnings.assign(missing_.begin(), missing_.end());
    return out;
  }

 private:
  double similarity(const VarId& u, const VarId& v) {
    return label_similarity(a_.synonyms.at(u), b_.synonyms.at(v), store_, &missing_);
  }

  bool free_pair(const VarId& u, const VarId& v) const {
    return !a_to_b_.contains(u) && !b_to_a_.contains(v);
  }

  void add(const VarId& u, const VarId& v, PairReason reason) {
    a_to_b_[u] = v;
    b_to_a_[v] = u;
    pairs_.push_back({u, v, reason});
  }

  // For each free u, pair the admissible free v with the highest label
  // similarity; returns whether anything was paired.
  template <typename Admissible>
  bool greedy(Admissible admissible, double threshold, PairReason reason) {
    bool changed = false;
    for (const auto& [u, nu] : a_.graph.nodes()) {
      if (a_to_b_.contains(u)) continue;
      std::optional<VarId> best;
      double best_sim = -1.0;
      for (const auto& [v, nv] : b_.graph.nodes()) {
        if (b_to_a_.contains(v) || !admissible(u, v)) continue;
        const double s = similarity(u, v);
        if (s >= threshold && s > best_sim) best = v, best_sim = s;
      }
      if (best) {
        add(u, *best, reason);
        changed = true;
      }
    }
    return changed;
  }

  void pair_and_or_roots() {
    const VarId& ra = a_.graph.root();
    const VarId& rb = b_.graph.root();
    const std::string& ca = a_.graph.concept_of(ra);
    if (is_and_or(ca) && ca == b_.graph.concept_of(rb) && !a_.is_grounded(ra) &&
        !b_.is_grounded(rb))
      add(ra, rb, PairReason::AndOr);
  }

  void pair_grounded() {
    greedy(
        [&](const VarId& u, const VarId& v) {
          return a_.is_grounded(u) && b_.is_grounded(v) &&
                 a_.grounding.at(u) == b_.grounding.at(v);
        },
        params_.synonym_threshold, PairReason::GroundedSameBoxes);
  }

  static std::multiset<VarId> neighbours(const AmrGraph& g, const VarId& v) {
    std::multiset<VarId> out;
    for (const auto* e : g.outgoing(v)) out.insert(e->target);
    for (const auto* e : g.incoming(v)) out.insert(e->source);
    return out;
  }

  bool pair_and_or_by_neighbours() {
    bool changed = false;
    for (const auto& [u, nu] : a_.graph.nodes()) {
      if (a_to_b_.contains(u) || a_.is_grounded(u) || !is_and_or(nu.concept_label))
        continue;
      std::multiset<VarId> image;
      bool complete = true;
      for (const auto& w : neighbours(a_.graph, u)) {
        auto it = a_to_b_.find(w);
        if (it == a_to_b_.end()) {
          complete = false;
          break;
        }
        image.insert(it->second);
      }
      if (!complete || image.empty()) continue;
      for (const auto& [v, nv] : b_.graph.nodes()) {
        if (b_to_a_.contains(v) || b_.is_grounded(v) ||
            nv.concept_label != nu.concept_label)
          continue;
        if (neighbours(b_.graph, v) == image) {
          add(u, v, PairReason::AndOr);
          changed = true;
          break;
        }
      }
    }
    return changed;
  }

  bool shares_paired_parent(const VarId& u, const VarId& v) const {
    for (const auto* ea : a_.graph.incoming(u)) {
      auto it = a_to_b_.find(ea->source);
      if (it == a_to_b_.end()) continue;
      for (const auto* eb : b_.graph.incoming(v))
        if (eb->source == it->second && eb->role == ea->role) return true;
    }
    return false;
  }

  bool pair_by_label_and_parent() {
    return greedy(
        [&](const VarId& u, const VarId& v) {
          if (a_.is_grounded(u) || b_.is_grounded(v)) return false;
          if (is_and_or(a_.graph.concept_of(u)) || is_and_or(b_.graph.concept_of(v)))
            return false;
          if (is_predicate(a_, u) || is_predicate(b_, v)) return false;
          return shares_paired_parent(u, v);
        },
        params_.synonym_threshold, PairReason::LabelNeighborhood);
  }

  std::map<std::string, VarId> argument_children(const AmrGraph& g, const VarId& v) const {
    std::map<std::string, VarId> out;
    for (const auto* e : g.outgoing(v))
      if (is_core_argument_role(e->role)) out[e->role] = e->target;
    return out;
  }

  bool same_arguments(const VarId& u, const VarId& v) const {
    const auto ca = argument_children(a_.graph, u);
    const auto cb = argument_children(b_.graph, v);
    if (ca.empty() || ca.size() != cb.size()) return false;
    for (const auto& [role, child] : ca) {
      auto jt = cb.find(role);
      if (jt == cb.end()) return false;
      auto it = a_to_b_.find(child);
      if (it == a_to_b_.end() || it->second != jt->second) return false;
    }
    return true;
  }

  bool pair_predicates() {
    return greedy(
        [&](const VarId& u, const VarId& v) {
          return !a_.is_grounded(u) && !b_.is_grounded(v) && is_predicate(a_, u) &&
                 is_predicate(b_, v) && same_arguments(u, v);
        },
        params_.predicate_threshold, PairReason::PredicateChildren);
  }

  const VgAmr& a_;
  const VgAmr& b_;
  const MergeParams& params_;
  const EmbeddingStore& store_;
  std::map<VarId, VarId> a_to_b_, b_to_a_;
  std::vector<NodePair> pairs_;
  std::set<std::string> missing_;
};

void append_unique(std::vector<std::string>& into, const std::vector<std::string>& from) {
  for (const auto& s : from)
    if (std::find(into.begin(), into.end(), s) == into.end()) into.push_back(s);
}

// Rebuilds `parts` under z<n> names and translates its side tables.
struct Assembly {
  VarId root;
  std::map<VarId, Node> nodes;
  std::vector<Edge> edges;
  std::vector<Attribute> attributes;
  std::map<VarId, BoxSet> grounding;
  std::map<VarId, std::vector<std::string>> synonyms;

  void add_edge(Edge e) {
    for (const auto& x : edges)
      if (x.source == e.source && x.role == e.role && x.target == e.target) return;
    edges.push_back(std::move(e));
  }

  void add_attribute(Attribute a) {
    if (std::find(attributes.begin(), attributes.end(), a) == attributes.end())
      attributes.push_back(std::move(a));
  }

  VgAmr finish(std::map<VarId, VarId>& renaming) && {
    AmrGraph g(root, std::move(nodes), std::move(edges), std::move(attributes));
    VgAmr out{reletter(g, &renaming), {}, {}};
    for (auto& [v, boxes] : grounding) out.grounding[renaming.at(v)] = std::move(boxes);
    for (auto& [v, labels] : synonyms) out.synonyms[renaming.at(v)] = std::move(labels);
    return out;
  }
};

}  // namespace

NodePairing find_common_nodes(const VgAmr& a, const VgAmr& b, const MergeParams& params,
                              const EmbeddingStore& embeddings) {
  return CommonNodeFinder(a, b, params, embeddings).run();
}

MergeResult merge_pair(const VgAmr& a, const VgAmr& b, const NodePairing& pairing) {
  std::map<VarId, VarId> tmp_a, tmp_b;  // source var -> temporary id
  for (const auto& [v, n] : a.graph.nodes()) tmp_a[v] = "a:" + v;
  for (const auto& [v, n] : b.graph.nodes()) tmp_b[v] = "b:" + v;
  std::set<VarId> seen_a, seen_b;
  for (const auto& p : pairing.pairs) {
    if (!a.graph.has_node(p.a) || !b.graph.has_node(p.b))
      throw std::invalid_argument("pairing names unknown variable " + p.a + "/" + p.b);
    if (!seen_a.insert(p.a).second || !seen_b.insert(p.b).second)
      throw std::invalid_argument("pairing is not injective at " + p.a + "/" + p.b);
    tmp_b[p.b] = tmp_a[p.a];
  }

  Assembly out;
  auto absorb = [&](const VgAmr& g, const std::map<VarId, VarId>& tmp) {
    for (const auto& [v, n] : g.graph.nodes()) {
      const VarId& t = tmp.at(v);
      out.nodes.try_emplace(t, Node{t, n.concept_label});
      append_unique(out.synonyms[t], g.synonyms.at(v));
      if (auto it = g.grounding.find(v); it != g.grounding.end())
        out.grounding[t].insert(it->second.begin(), it->second.end());
    }
    for (const auto& e : g.graph.edges())
      out.add_edge({tmp.at(e.source), e.role, tmp.at(e.target), e.inverted_in_surface});
    for (const auto& at : g.graph.attributes())
      out.add_attribute({tmp.at(at.variable), at.role, at.value});
  };
  absorb(a, tmp_a);
  absorb(b, tmp_b);

  if (pairing.empty()) {
    const VarId ms = "multi-sentence";
    out.nodes.emplace(ms, Node{ms, "multi-sentence"});
    out.synonyms[ms] = {"multi-sentence"};
    out.add_edge({ms, ":snt1", tmp_a.at(a.graph.root()), false});
    out.add_edge({ms, ":snt2", tmp_b.at(b.graph.root()), false});
    out.root = ms;
  } else {
    out.root = tmp_a.at(a.graph.root());
  }

  std::map<VarId, VarId> renaming;
  MergeResult result{std::move(out).finish(renaming), {}, {}};
  for (const auto& [v, t] : tmp_a) result.from_a[v] = renaming.at(t);
  for (const auto& [v, t] : tmp_b) result.from_b[v] = renaming.at(t);
  return result;
}

std::map<VarId, VarId> collapse_redundant_grounded(VgAmr& graph, const MergeParams& params,
                                                   const EmbeddingStore& embeddings) {
  std::map<VarId, VarId> into;  // absorbed node -> surviving node
  auto resolve = [&](VarId v) {
    while (into.contains(v)) v = into.at(v);
    return v;
  };

  std::map<VarId, BoxSet> grounding = graph.grounding;
  std::map<VarId, std::vector<std::string>> synonyms = graph.synonyms;
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto x = grounding.begin(); x != grounding.end() && !changed; ++x) {
      for (auto y = std::next(x); y != grounding.end(); ++y) {
        if (x->second != y->second) continue;
        if (label_similarity(synonyms.at(x->first), synonyms.at(y->first), embeddings) <
            params.synonym_threshold)
          continue;
        into[y->first] = x->first;
        append_unique(synonyms[x->first], synonyms.at(y->first));
        synonyms.erase(y->first);
        grounding.erase(y);
        changed = true;
        break;
      }
    }
  }

  std::map<VarId, VarId> identity;
  for (const auto& [v, n] : graph.graph.nodes()) identity[v] = v;
  if (into.empty()) return identity;

  Assembly out;
  out.root = resolve(graph.graph.root());
  for (const auto& [v, n] : graph.graph.nodes()) {
    if (into.contains(v)) continue;
    out.nodes.emplace(v, n);
    out.synonyms[v] = synonyms.at(v);
    if (auto it = grounding.find(v); it != grounding.end()) out.grounding[v] = it->second;
  }
  for (const auto& e : graph.graph.edges())
    out.add_edge({resolve(e.source), e.role, resolve(e.target), e.inverted_in_surface});
  for (const auto& at : graph.graph.attributes())
    out.add_attribute({resolve(at.variable), at.role, at.value});

  std::map<VarId, VarId> renaming;
  graph = std::move(out).finish(renaming);
  std::map<VarId, VarId> result;
  for (const auto& [v, _] : identity) result[v] = renaming.at(resolve(v));
  return result;
}

MetaResult build_meta_vgamr(const std::vector<VgAmr>& vgamrs, const MergeParams& params,
                            const EmbeddingStore& embeddings, int restarts, uint64_t seed) {
  if (vgamrs.empty()) throw std::invalid_argument("build_meta_vgamr needs at least one graph");
  params.validate();

  MetaResult result;
  const size_t n = vgamrs.size();
  auto identity = [](const VgAmr& g) {
    std::map<VarId, VarId> m;
    for (const auto& [v, _] : g.graph.nodes()) m[v] = v;
    return m;
  };
  if (n == 1) {
    result.meta = vgamrs.front();
    result.tree = {1, {}};
    result.node_maps = {identity(vgamrs.front())};
    return result;
  }

  std::vector<AmrGraph> graphs;
  for (const auto& g : vgamrs) graphs.push_back(g.graph);
  result.tree = upgma_order(distance_matrix(graphs, restarts, seed));

  struct ClusterState {
    VgAmr graph;
    std::map<size_t, std::map<VarId, VarId>> members;  // input index -> node map
  };
  std::map<size_t, ClusterState> clusters;
  for (size_t i = 0; i < n; ++i) clusters[i] = {vgamrs[i], {{i, identity(vgamrs[i])}}};

  std::set<std::string> warnings;
  for (const auto& step : result.tree.steps) {
    ClusterState left = std::move(clusters.at(step.left));
    ClusterState right = std::move(clusters.at(step.right));
    clusters.erase(step.left);
    clusters.erase(step.right);

    const NodePairing pairing = find_common_nodes(left.graph, right.graph, params, embeddings);
    warnings.insert(pairing.warnings.begin(), pairing.warnings.end());
    MergeResult merged = merge_pair(left.graph, right.graph, pairing);
    const auto collapsed = collapse_redundant_grounded(merged.graph, params, embeddings);

    ClusterState next{std::move(merged.graph), {}};
    auto carry = [&](ClusterState& side, const std::map<VarId, VarId>& step_map) {
      for (auto& [input, node_map] : side.members) {
        for (auto& [src, cur] : node_map) cur = collapsed.at(step_map.at(cur));
        next.members[input] = std::move(node_map);
      }
    };
    carry(left, merged.from_a);
    carry(right, merged.from_b);
    clusters[step.merged] = std::move(next);
  }

  ClusterState& root = clusters.begin()->second;
  result.meta = std::move(root.graph);
  for (size_t i = 0; i < n; ++i) result.node_maps.push_back(std::move(root.members.at(i)));
  result.warnings.assign(warnings.begin(), warnings.end());
  return result;
}

}  // namespace ssa
