#include "ssa/sampler.hpp"

#include <random>
#include <set>

namespace ssa {

bool is_predicate(const VgAmr& graph, const VarId& v) {
  bool sense = has_sense_suffix(graph.graph.concept_of(v));
  if (!sense) {
    if (auto it = graph.synonyms.find(v); it != graph.synonyms.end()) {
      for (const auto& label : it->second) sense = sense || has_sense_suffix(label);
    }
  }
  if (!sense) return false;
  for (const auto* e : graph.graph.outgoing(v))
    if (is_core_argument_role(e->role)) return true;
  return false;
}

std::vector<VarId> find_predicates(const VgAmr& meta) {
  std::vector<VarId> out;
  for (const auto& [v, n] : meta.graph.nodes())
    if (is_predicate(meta, v)) out.push_back(v);
  return out;
}

const char* to_string(SampleKind kind) {
  return kind == SampleKind::ArgumentClosure ? "argument-closure" : "extended";
}

namespace {

struct Selection {
  std::set<VarId> nodes;
  std::set<size_t> edges;  // indices into the meta edge list

  // Follows outgoing edges accepted by `follow` from every node in `frontier`.
  template <typename Follow>
  void grow(const AmrGraph& g, std::vector<VarId> frontier, Follow follow) {
    const auto& edges_all = g.edges();
    while (!frontier.empty()) {
      VarId x = frontier.back();
      frontier.pop_back();
      for (size_t i = 0; i < edges_all.size(); ++i) {
        const Edge& e = edges_all[i];
        if (e.source != x || !follow(e)) continue;
        edges.insert(i);
        if (nodes.insert(e.target).second) frontier.push_back(e.target);
      }
    }
  }
};

SampledSubgraph materialize(const VgAmr& meta, const VarId& origin, SampleKind kind,
                            const Selection& sel, std::mt19937_64& rng) {
  std::map<VarId, Node> nodes;
  for (const auto& v : sel.nodes) {
    const auto& labels = meta.synonyms.at(v);
    std::uniform_int_distribution<size_t> pick(0, labels.size() - 1);
    nodes.emplace(v, Node{v, labels[pick(rng)]});
  }
  std::vector<Edge> edges;
  for (size_t i : sel.edges) edges.push_back(meta.graph.edges()[i]);
  std::vector<Attribute> attrs;
  for (const auto& a : meta.graph.attributes())
    if (sel.nodes.contains(a.variable)) attrs.push_back(a);

  std::map<VarId, VarId> renaming;
  AmrGraph g = reletter(AmrGraph(origin, std::move(nodes), std::move(edges), std::move(attrs)),
                        &renaming);
  SampledSubgraph out{ungrounded(std::move(g)), origin, kind, {}};
  for (const auto& [old_v, new_v] : renaming) {
    out.source_nodes[new_v] = old_v;
    if (auto it = meta.grounding.find(old_v); it != meta.grounding.end())
      out.graph.grounding[new_v] = it->second;
  }
  return out;
}

}  // namespace

std::vector<SampledSubgraph> sample_event_subgraphs(const VgAmr& meta, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<SampledSubgraph> samples;
  const AmrGraph& g = meta.graph;
  auto argument = [](const Edge& e) { return is_core_argument_role(e.role); };
  auto any = [](const Edge&) { return true; };

  for (const auto& p : find_predicates(meta)) {
    Selection closure;
    closure.nodes.insert(p);
    closure.grow(g, {p}, argument);

    Selection extended = closure;
    std::vector<VarId> branch_roots;
    for (size_t i = 0; i < g.edges().size(); ++i) {
      const Edge& e = g.edges()[i];
      if (e.source != p || is_core_argument_role(e.role)) continue;
      extended.edges.insert(i);
      if (extended.nodes.insert(e.target).second) branch_roots.push_back(e.target);
    }
    extended.grow(g, branch_roots, any);

    samples.push_back(materialize(meta, p, SampleKind::ArgumentClosure, closure, rng));
    if (extended.edges != closure.edges)
      samples.push_back(materialize(meta, p, SampleKind::Extended, extended, rng));
  }
  return samples;
}

}  // namespace ssa
